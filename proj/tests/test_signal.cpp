#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "streamsep/signal.hpp"

using namespace streamsep;
using namespace testing_helpers;

TEST_CASE("frame config validation") {
  FrameConfig config;
  CHECK_NOTHROW(config.validate());
  CHECK(config.num_bins() == 257);
  CHECK(config.frame_period_s() == doctest::Approx(0.016));

  FrameConfig bad = config;
  bad.frame_shift = 300;  // does not divide 512
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);
}

TEST_CASE("sqrt-hann analysis/synthesis pair is constant-overlap-add") {
  FrameConfig config;
  CHECK(cola_error(config) < 1e-9);
  CHECK(cola_gain(config) == doctest::Approx(1.0));

  // Quarter-frame hop still sums to a constant.
  config.frame_shift = 128;
  CHECK(cola_error(config) < 1e-9);

  // Rectangular pair overlaps to a constant at any dividing hop.
  config.window = WindowKind::kRect;
  config.frame_shift = 256;
  CHECK(cola_error(config) < 1e-12);
  CHECK(cola_gain(config) == doctest::Approx(2.0));

  // sqrt-hann with no overlap is not COLA.
  config.window = WindowKind::kSqrtHann;
  config.frame_shift = 512;
  CHECK(cola_error(config) > 1e-3);
  CHECK(!is_cola(config));
}

TEST_CASE("stft frame count follows floor((len - length)/shift) + 1") {
  FrameConfig config;
  CHECK(config.num_frames(38400) == 149);  // 2.4 s at 16 kHz
  CHECK(config.num_frames(512) == 1);
  CHECK(config.num_frames(511) == 0);
  CHECK(config.num_frames(512 + 255) == 1);  // tail dropped
  CHECK(config.num_frames(512 + 256) == 2);

  const auto spec = stft(random_signal(38400, 7), config);
  CHECK(spec.num_frames() == 149);
  CHECK(spec.num_bins() == 257);
}

TEST_CASE("bin-center sinusoid concentrates its frame energy") {
  FrameConfig config;
  const int k0 = 32;  // 1 kHz
  const double f = config.bin_hz(k0);
  Eigen::VectorXd x(16000);
  for (long n = 0; n < x.size(); ++n)
    x[n] = std::sin(2.0 * std::numbers::pi * f * n / config.sample_rate);
  const auto spec = stft(x, config);
  for (int t = 0; t < spec.num_frames(); t += 10) {
    double total = 0.0, local = 0.0;
    for (int k = 0; k < spec.num_bins(); ++k) {
      const double e = std::norm(spec.at(0, t, k));
      total += e;
      if (std::abs(k - k0) <= 1) local += e;
    }
    CHECK(local / total > 0.99);
  }
}

TEST_CASE("all-zero input produces an all-zero spectrogram") {
  FrameConfig config;
  const auto spec = stft(Eigen::VectorXd::Zero(4096), config);
  for (int t = 0; t < spec.num_frames(); ++t)
    for (int k = 0; k < spec.num_bins(); ++k)
      CHECK(spec.at(0, t, k) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("stft matches a brute-force windowed DFT") {
  FrameConfig config;
  const auto x = random_signal(2048, 99);
  const auto spec = stft(x, config);
  const Eigen::VectorXd window = analysis_window(config);
  for (int t : {0, 3, spec.num_frames() - 1}) {
    const Eigen::VectorXcd expect =
        brute_force_frame_dft(x, static_cast<long>(t) * config.frame_shift,
                              window);
    double err = 0.0, ref = 0.0;
    for (int k = 0; k < spec.num_bins(); ++k) {
      err += std::norm(spec.at(0, t, k) - expect[k]);
      ref += std::norm(expect[k]);
    }
    CHECK(std::sqrt(err / ref) < 1e-9);
  }
}

TEST_CASE("stft input validation") {
  FrameConfig config;
  CHECK_THROWS_AS(stft(std::vector<Eigen::VectorXd>{}, config),
                  std::invalid_argument);
  CHECK_THROWS_AS(stft(Eigen::VectorXd::Zero(100), config),
                  std::invalid_argument);
  std::vector<Eigen::VectorXd> uneven{Eigen::VectorXd::Zero(1024),
                                      Eigen::VectorXd::Zero(1000)};
  CHECK_THROWS_AS(stft(uneven, config), std::invalid_argument);
}

TEST_CASE("round trip reconstructs the interior within 1e-6") {
  FrameConfig config;
  for (uint64_t seed : {1, 2, 3, 4, 5}) {
    // Arbitrary lengths from one frame up to a second.
    const long len = 512 + static_cast<long>(seed * 3137) % 16000;
    const auto x = random_signal(len, seed);
    const auto spec = stft(x, config);
    const auto y = istft(spec);
    CHECK(interior_relative_rms(x, y, config) <= 1e-6);
  }
}

TEST_CASE("round trip on one second of white noise") {
  FrameConfig config;
  const auto x = random_signal(16000, 42);
  const auto y = istft(stft(x, config));
  CHECK(interior_relative_rms(x, y, config) <= 1e-6);
}

TEST_CASE("istft is linear and maps zero to zero") {
  FrameConfig config;
  const auto x = random_signal(4096, 11);
  auto spec = stft(x, config);
  const auto y = istft(spec);

  for (int t = 0; t < spec.num_frames(); ++t)
    for (int k = 0; k < spec.num_bins(); ++k) spec.at(0, t, k) *= 2.0;
  const auto y2 = istft(spec);
  CHECK((y2 - 2.0 * y).lpNorm<Eigen::Infinity>() < 1e-12);

  MultiChannelSpectrogram zero(1, 10, config);
  const auto z = istft(zero);
  CHECK(z.lpNorm<Eigen::Infinity>() == 0.0);
}

TEST_CASE("istft rejects a non-COLA window pair") {
  FrameConfig config;
  config.frame_shift = 512;  // sqrt-hann without overlap
  MultiChannelSpectrogram spec(1, 4, config);
  CHECK_THROWS_AS(istft(spec), std::invalid_argument);
}

TEST_CASE("windowed frame energy agrees between time and frequency") {
  FrameConfig config;
  const Eigen::VectorXd window = analysis_window(config);
  const auto x = random_signal(4096, 5);
  const auto spec = stft(x, config);
  const int n = config.frame_length;
  for (int t = 0; t < spec.num_frames(); ++t) {
    const Eigen::VectorXd frame =
        x.segment(static_cast<long>(t) * config.frame_shift, n)
            .cwiseProduct(window);
    const double time_energy = frame.squaredNorm();
    double freq_energy = std::norm(spec.at(0, t, 0)) +
                         std::norm(spec.at(0, t, n / 2));
    for (int k = 1; k < n / 2; ++k)
      freq_energy += 2.0 * std::norm(spec.at(0, t, k));
    freq_energy /= n;
    CHECK(std::abs(time_energy - freq_energy) <= 1e-9 * time_energy);
  }
}

TEST_CASE("streaming overlap-add matches batch synthesis") {
  FrameConfig config;
  const auto x = random_signal(8192, 21);
  const auto spec = stft(x, config);
  OverlapAddSynth synth(config);
  std::vector<double> streamed;
  Eigen::VectorXcd bins(spec.num_bins());
  for (int t = 0; t < spec.num_frames(); ++t) {
    for (int k = 0; k < spec.num_bins(); ++k) bins[k] = spec.at(0, t, k);
    const auto part = synth.push(bins);
    streamed.insert(streamed.end(), part.data(), part.data() + part.size());
  }
  const auto tail = synth.flush();
  streamed.insert(streamed.end(), tail.data(), tail.data() + tail.size());

  const auto batch = istft(spec);
  REQUIRE(static_cast<long>(streamed.size()) == batch.size());
  for (long i = 0; i < batch.size(); ++i)
    CHECK(streamed[static_cast<size_t>(i)] == batch[i]);
}

#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "streamsep/beamforming.hpp"
#include "streamsep/simkit.hpp"

using namespace streamsep;
using namespace testing_helpers;

TEST_CASE("reference channel carries the source unchanged") {
  Scenario s;
  s.duration_s = 1.0;
  s.noise_level_db = -200.0;
  SourceSpec src;
  src.signal = random_signal(16000, 3);
  src.azimuth_deg = 72.0;
  src.level_db = -20.0;
  s.sources.push_back(src);

  const auto sim = synthesize(s);
  REQUIRE(sim.channels.size() == 7);
  // The reference mic has zero delay, so up to the level scaling the
  // mixture equals the source exactly.
  CHECK(si_sdr_db(sim.channels[0], src.signal) == 100.0);
  CHECK((sim.channels[0] - sim.truth.clean_ref_signals[0])
            .lpNorm<Eigen::Infinity>() == 0.0);
  CHECK(rms_dbfs(sim.channels[0]) == doctest::Approx(-20.0).epsilon(0.01));
}

TEST_CASE("two-source mixture is the sum of the single renders") {
  Scenario both;
  both.duration_s = 0.6;
  both.noise_level_db = -200.0;
  for (int i = 0; i < 2; ++i) {
    SourceSpec src;
    src.signal = random_signal(9600, 10 + i);
    src.azimuth_deg = i == 0 ? 30.0 : 250.0;
    both.sources.push_back(src);
  }
  Scenario first = both, second = both;
  first.sources.pop_back();
  second.sources.erase(second.sources.begin());

  const auto sim = synthesize(both);
  const auto sim1 = synthesize(first);
  const auto sim2 = synthesize(second);
  for (int m = 0; m < 7; ++m)
    CHECK((sim.channels[m] - sim1.channels[m] - sim2.channels[m])
              .lpNorm<Eigen::Infinity>() < 1e-12);
}

TEST_CASE("synthesis is deterministic per seed") {
  const auto a = synthesize(make_meeting_scenario(4.0, 60.0, 220.0, 5));
  const auto b = synthesize(make_meeting_scenario(4.0, 60.0, 220.0, 5));
  const auto c = synthesize(make_meeting_scenario(4.0, 60.0, 220.0, 6));
  for (int m = 0; m < 7; ++m)
    CHECK((a.channels[m] - b.channels[m]).lpNorm<Eigen::Infinity>() == 0.0);
  CHECK((a.channels[0] - c.channels[0]).lpNorm<Eigen::Infinity>() > 0.0);
}

TEST_CASE("an integer-delay pair renders as an exact sample shift") {
  // Two mics spaced so the 180-degree arrival lags by exactly 4 samples.
  Scenario s;
  s.duration_s = 0.5;
  s.noise_level_db = -200.0;
  const double d = 343.0 * 4.0 / 16000.0;
  s.geometry.mic_positions.resize(2, 2);
  s.geometry.mic_positions.col(0) << 0.0, 0.0;
  s.geometry.mic_positions.col(1) << d, 0.0;
  s.geometry.reference_index = 0;
  SourceSpec src;
  src.signal = random_signal(8000, 4);
  src.azimuth_deg = 180.0;
  s.sources.push_back(src);

  const auto sim = synthesize(s);
  const auto& ref = sim.channels[0];
  const auto& far = sim.channels[1];
  for (long n = 100; n < ref.size() - 100; ++n)
    CHECK(far[n] == doctest::Approx(ref[n - 4]).epsilon(1e-9).scale(1.0));
}

TEST_CASE("rendered plane wave matches the steering table per bin") {
  // Rectangular windows plus bin-centered tones make the per-bin
  // observation exactly proportional to the steering vector.
  FrameConfig rect;
  rect.window = WindowKind::kRect;
  Scenario s;
  s.frame = rect;
  s.duration_s = 1.0;
  s.noise_level_db = -200.0;
  SourceSpec src;
  const int len = 16000;
  Eigen::VectorXd signal = Eigen::VectorXd::Zero(len);
  std::vector<int> tones;
  for (int k = 10; k <= 240; k += 23) tones.push_back(k);
  for (long n = 0; n < len; ++n)
    for (size_t i = 0; i < tones.size(); ++i)
      signal[n] += std::cos(2.0 * std::numbers::pi * tones[i] * n / 512.0 +
                            0.7 * static_cast<double>(i));
  src.signal = signal;
  src.azimuth_deg = 115.0;
  s.sources.push_back(src);

  const auto sim = synthesize(s);
  const auto spec = stft(sim.channels, rect);
  for (int t = 2; t < spec.num_frames() - 2; t += 9) {
    const Eigen::MatrixXcd frame = spec.frame_matrix(t);
    for (int k : tones) {
      Eigen::VectorXcd z = frame.col(k);
      REQUIRE(z.norm() > 0.0);
      z /= z.norm();
      const auto h = steering_vector(s.geometry, src.azimuth_deg, k, rect);
      CHECK(1.0 - std::abs(z.dot(h)) < 1e-9);
    }
  }
}

TEST_CASE("diffuse noise shows the sinc coherence profile") {
  Scenario s;
  s.duration_s = 16.0;
  s.noise_level_db = -20.0;
  s.seed = 11;
  const auto sim = synthesize(s);
  const auto spec = stft(sim.channels, s.frame);
  const auto& g = s.geometry;
  for (const auto [i, j] : {std::pair{1, 2}, std::pair{1, 4}}) {
    for (int k : {8, 32, 96, 200}) {
      std::complex<double> cross = 0.0;
      double pi_ = 0.0, pj = 0.0;
      for (int t = 0; t < spec.num_frames(); ++t) {
        cross += spec.at(i, t, k) * std::conj(spec.at(j, t, k));
        pi_ += std::norm(spec.at(i, t, k));
        pj += std::norm(spec.at(j, t, k));
      }
      const double measured = (cross / std::sqrt(pi_ * pj)).real();
      const double dist =
          (g.mic_positions.col(i) - g.mic_positions.col(j)).norm();
      const double x = 2.0 * std::numbers::pi * s.frame.bin_hz(k) * dist /
                       g.speed_of_sound;
      const double expected = x == 0.0 ? 1.0 : std::sin(x) / x;
      CHECK(std::abs(measured - expected) < 0.1);
    }
  }
}

TEST_CASE("si_sdr basics") {
  const auto ref = random_signal(4000, 21);
  CHECK(si_sdr_db(ref, ref) == 100.0);
  CHECK(si_sdr_db(2.0 * ref, ref) == 100.0);  // scale invariance

  // Orthogonal equal-power noise sits at 0 dB.
  Eigen::VectorXd sine(4000), cosine(4000);
  for (long n = 0; n < 4000; ++n) {
    sine[n] = std::sin(2.0 * std::numbers::pi * 10.0 * n / 4000.0);
    cosine[n] = std::cos(2.0 * std::numbers::pi * 10.0 * n / 4000.0);
  }
  CHECK(si_sdr_db(sine + cosine, sine) == doctest::Approx(0.0).epsilon(1e-9));

  CHECK_THROWS_AS(si_sdr_db(ref, Eigen::VectorXd::Zero(4000)),
                  std::invalid_argument);
  CHECK_THROWS_AS(si_sdr_db(ref, Eigen::VectorXd::Zero(17)),
                  std::invalid_argument);
}

TEST_CASE("channel purity: perfect separation and a mid-utterance swap") {
  GroundTruth truth;
  truth.frame = FrameConfig{};
  const long len = 8000;
  truth.clean_ref_signals.push_back(random_signal(len, 31));
  truth.utterances.push_back({0, 0, len});

  std::array<Eigen::VectorXd, 2> perfect{truth.clean_ref_signals[0],
                                         Eigen::VectorXd::Zero(len)};
  auto purity = channel_purity(perfect, truth);
  REQUIRE(purity.size() == 1);
  CHECK(purity[0] == doctest::Approx(1.0));

  std::array<Eigen::VectorXd, 2> swapped{Eigen::VectorXd::Zero(len),
                                         Eigen::VectorXd::Zero(len)};
  swapped[0].head(len / 2) = truth.clean_ref_signals[0].head(len / 2);
  swapped[1].tail(len / 2) = truth.clean_ref_signals[0].tail(len / 2);
  purity = channel_purity(swapped, truth);
  CHECK(purity[0] == doctest::Approx(0.5).epsilon(0.02));
}

TEST_CASE("speechlike generator reports its utterances") {
  std::vector<std::pair<long, long>> utts;
  const auto x = make_speechlike(12.0, 16000, 77, &utts);
  CHECK(x.size() == 12 * 16000);
  CHECK(utts.size() >= 2);
  for (const auto& [a, b] : utts) {
    CHECK(b > a);
    CHECK(rms_dbfs(x.segment(a, b - a)) > -6.0);  // near unit RMS
  }
  // Silence between utterances.
  if (utts.size() >= 2) {
    const long gap_begin = utts[0].second;
    const long gap_end = utts[1].first;
    if (gap_end > gap_begin)
      CHECK(x.segment(gap_begin, gap_end - gap_begin).cwiseAbs().maxCoeff() ==
            0.0);
  }
}

TEST_CASE("meeting scenario alternates and partially overlaps") {
  const auto s = make_meeting_scenario(20.0, 60.0, 220.0, 9);
  REQUIRE(s.sources.size() == 2);
  CHECK(!s.sources[0].utterances.empty());
  CHECK(!s.sources[1].utterances.empty());
  // At least one overlapped region.
  long overlap = 0;
  for (const auto& [a0, b0] : s.sources[0].utterances)
    for (const auto& [a1, b1] : s.sources[1].utterances)
      overlap += std::max<long>(0, std::min(b0, b1) - std::max(a0, a1));
  CHECK(overlap > 0);
}

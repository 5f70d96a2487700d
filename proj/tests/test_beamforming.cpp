#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <random>

#include "helpers.hpp"
#include "streamsep/beamforming.hpp"

using namespace streamsep;

namespace {

// Reference-normalized steering vector (element at the reference mic 1).
Eigen::VectorXcd ref_steering(const ArrayGeometry& g, double angle, int bin,
                              const FrameConfig& config) {
  return steering_vector(g, angle, bin, config) *
         std::sqrt(static_cast<double>(g.num_mics()));
}

MultiChannelSpectrogram plane_wave_spec(const ArrayGeometry& g,
                                        const FrameConfig& config,
                                        double angle, int frames,
                                        uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  MultiChannelSpectrogram spec(g.num_mics(), frames, config);
  for (int t = 0; t < frames; ++t)
    for (int k = 0; k < config.num_bins(); ++k) {
      const std::complex<double> s(gauss(rng), gauss(rng));
      const auto d = ref_steering(g, angle, k, config);
      for (int c = 0; c < g.num_mics(); ++c) spec.at(c, t, k) = s * d[c];
    }
  return spec;
}

}  // namespace

TEST_CASE("bank has 18 beams spaced 20 degrees apart") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config);
  CHECK(bank.num_beams() == 18);
  for (int b = 0; b < 18; ++b)
    CHECK(bank.focus_angles_deg()[b] == doctest::Approx(20.0 * b));
}

TEST_CASE("every beam is distortionless toward its focus at every bin") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config, 1e-2);
  CHECK(distortionless_error(bank) < 1e-6);
}

TEST_CASE("huge loading collapses the design to delay-and-sum") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config, 1e6);
  const int m = g.num_mics();
  for (int b : {0, 7}) {
    for (int k : {1, 64, 200}) {
      const Eigen::VectorXcd d =
          ref_steering(g, bank.focus_angles_deg()[b], k, config);
      const Eigen::VectorXcd das = d / static_cast<double>(m);  // d / ||d||^2
      const Eigen::VectorXcd w = bank.beam_weights(b).row(k).transpose();
      CHECK((w - das).norm() / das.norm() < 1e-4);
    }
  }
}

TEST_CASE("diffuse noise is attenuated versus a single microphone") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config, 1e-2);
  const auto power = diffuse_noise_power(bank);
  for (int b = 0; b < bank.num_beams(); ++b)
    for (int k = 0; k < bank.num_bins(); ++k)
      if (config.bin_hz(k) > 500.0) CHECK(power(b, k) < 1.0);
}

TEST_CASE("white noise gain is finite and bounded by the loaded design") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config, 1e-2);
  const auto wng = white_noise_gain(bank);
  CHECK(wng.allFinite());
  CHECK(wng.maxCoeff() < 1e4);
}

TEST_CASE("a focus-direction plane wave passes as the reference signal") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config);
  const int beam = 3;  // focus 60 degrees
  const auto spec =
      plane_wave_spec(g, config, bank.focus_angles_deg()[beam], 4, 17);
  const auto out = apply_beam(bank, beam, spec);
  double err = 0.0, ref = 0.0;
  for (int t = 0; t < spec.num_frames(); ++t)
    for (int k = 0; k < spec.num_bins(); ++k) {
      err += std::norm(out.at(0, t, k) - spec.at(g.reference_index, t, k));
      ref += std::norm(spec.at(g.reference_index, t, k));
    }
  CHECK(std::sqrt(err / ref) < 1e-6);
}

TEST_CASE("beam application is linear and maps zero to zero") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config);
  const auto a = plane_wave_spec(g, config, 40.0, 2, 1);
  const auto b = plane_wave_spec(g, config, 210.0, 2, 2);
  MultiChannelSpectrogram sum(g.num_mics(), 2, config);
  for (int c = 0; c < g.num_mics(); ++c)
    for (int t = 0; t < 2; ++t)
      for (int k = 0; k < config.num_bins(); ++k)
        sum.at(c, t, k) = a.at(c, t, k) + b.at(c, t, k);

  const auto ya = apply_beam(bank, 5, a);
  const auto yb = apply_beam(bank, 5, b);
  const auto ys = apply_beam(bank, 5, sum);
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < config.num_bins(); ++k)
      CHECK(std::abs(ys.at(0, t, k) - ya.at(0, t, k) - yb.at(0, t, k)) <
            1e-9);

  MultiChannelSpectrogram zero(g.num_mics(), 2, config);
  const auto yz = apply_beam(bank, 0, zero);
  for (int t = 0; t < 2; ++t)
    for (int k = 0; k < config.num_bins(); ++k)
      CHECK(yz.at(0, t, k) == std::complex<double>(0.0, 0.0));
}

TEST_CASE("select_beam picks the circularly nearest focus, ties low") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config);
  CHECK(select_beam(bank, 0.0) == 0);
  CHECK(select_beam(bank, 25.0) == 1);
  CHECK(select_beam(bank, 10.0) == 0);    // equidistant 0/20 -> lower index
  CHECK(select_beam(bank, 351.0) == 0);   // wraps
  CHECK(select_beam(bank, 210.0) == 10);  // equidistant 200/220 -> lower
  CHECK_THROWS_AS(select_beam(bank, 360.0), std::invalid_argument);
  CHECK_THROWS_AS(apply_beam_frame(bank, 18, Eigen::MatrixXcd(7, 257)),
                  std::invalid_argument);
}

TEST_CASE("rotating the sound field by the array symmetry shifts beams") {
  FrameConfig config;

  SUBCASE("default ring: 60 degrees maps beam b to beam b+3") {
    const auto g = ArrayGeometry::circular_default();
    const auto bank = design_bank(g, config);
    for (int b : {0, 4, 16}) {
      const auto x1 = plane_wave_spec(g, config, 35.0, 2, 9);
      const auto x2 = plane_wave_spec(g, config, 95.0, 2, 9);  // +60, same seed
      const auto y1 = apply_beam(bank, b, x1);
      const auto y2 = apply_beam(bank, (b + 3) % 18, x2);
      for (int t = 0; t < 2; ++t)
        for (int k = 1; k < config.num_bins(); ++k)
          CHECK(std::abs(y1.at(0, t, k) - y2.at(0, t, k)) <
                1e-9 * (1.0 + std::abs(y1.at(0, t, k))));
    }
  }

  SUBCASE("center-referenced 18-mic ring: 20 degrees maps b to b+1") {
    // The reference must be rotation-invariant for the outputs to match
    // exactly, so put it at the center of the ring.
    ArrayGeometry g;
    g.mic_positions.resize(2, 19);
    g.mic_positions.col(0).setZero();
    const auto ring = ArrayGeometry::uniform_circle(18, 0.0425);
    g.mic_positions.rightCols(18) = ring.mic_positions;
    g.reference_index = 0;
    const auto bank = design_bank(g, config);
    const auto x1 = plane_wave_spec(g, config, 12.0, 2, 10);
    const auto x2 = plane_wave_spec(g, config, 32.0, 2, 10);
    const auto y1 = apply_beam(bank, 6, x1);
    const auto y2 = apply_beam(bank, 7, x2);
    for (int t = 0; t < 2; ++t)
      for (int k = 1; k < config.num_bins(); ++k)
        CHECK(std::abs(y1.at(0, t, k) - y2.at(0, t, k)) <
              1e-9 * (1.0 + std::abs(y1.at(0, t, k))));
  }
}

TEST_CASE("zero loading signals the singular coherence at DC") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  CHECK_THROWS_AS(design_bank(g, config, 0.0), std::runtime_error);
}

TEST_CASE("bank serialization round trip is exact") {
  const auto g = ArrayGeometry::circular_default();
  FrameConfig config;
  const auto bank = design_bank(g, config, 3e-2, 18);
  const std::string path = "test_bank_roundtrip.json";
  save_bank(bank, path);
  const auto loaded = load_bank(path);
  std::filesystem::remove(path);

  CHECK(loaded.num_beams() == bank.num_beams());
  CHECK(loaded.diagonal_loading() == bank.diagonal_loading());
  CHECK(loaded.config().frame_length == bank.config().frame_length);
  for (int b = 0; b < bank.num_beams(); ++b)
    CHECK(loaded.beam_weights(b) == bank.beam_weights(b));
  CHECK(loaded.focus_angles_deg() == bank.focus_angles_deg());
}

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "streamsep/geometry.hpp"
#include "streamsep/signal.hpp"

namespace streamsep {

/// Fixed superdirective beamformer bank: per beam and bin,
///   w = G^-1 d / (d^H G^-1 d),  G = Gamma + loading*I,
/// where Gamma is the spherically isotropic diffuse-noise coherence
/// Gamma_ij(f) = sinc(2 pi f d_ij / c) and d is the steering vector in
/// reference-microphone normalization (d_ref = 1). A plane wave from the
/// focus direction therefore passes through with exactly the reference
/// microphone's signal.
class BeamformerBank {
 public:
  BeamformerBank() = default;
  BeamformerBank(std::vector<Eigen::MatrixXcd> weights,
                 std::vector<double> focus_angles_deg, ArrayGeometry geometry,
                 FrameConfig config, double diagonal_loading);

  int num_beams() const { return static_cast<int>(weights_.size()); }
  int num_bins() const { return config_.num_bins(); }
  int num_channels() const { return geometry_.num_mics(); }
  const std::vector<double>& focus_angles_deg() const { return focus_; }
  const ArrayGeometry& geometry() const { return geometry_; }
  const FrameConfig& config() const { return config_; }
  double diagonal_loading() const { return loading_; }

  /// bins x channels; row k is w for beam `beam` at bin k.
  const Eigen::MatrixXcd& beam_weights(int beam) const;

 private:
  std::vector<Eigen::MatrixXcd> weights_;  // per beam: bins x channels
  std::vector<double> focus_;
  ArrayGeometry geometry_;
  FrameConfig config_;
  double loading_ = 0.0;
};

/// Diffuse-noise coherence matrix at one frequency (real symmetric,
/// unit diagonal).
Eigen::MatrixXd diffuse_coherence(const ArrayGeometry& geometry,
                                  double freq_hz);

BeamformerBank design_bank(const ArrayGeometry& geometry,
                           const FrameConfig& config, double loading = 1e-2,
                           int num_beams = 18);

/// Y(t,f) = w^H X(t,f); frame-local, zero look-ahead.
MultiChannelSpectrogram apply_beam(const BeamformerBank& bank, int beam,
                                   const MultiChannelSpectrogram& spec);
Eigen::VectorXcd apply_beam_frame(const BeamformerBank& bank, int beam,
                                  const Eigen::MatrixXcd& frame);

/// Beam whose focus angle has minimum circular distance to `angle_deg`;
/// ties break toward the lower index.
int select_beam(const BeamformerBank& bank, double angle_deg);

/// Diagnostics. distortionless_error is max over beams and bins of
/// ||w^H d_focus| - 1| with d in reference normalization.
double distortionless_error(const BeamformerBank& bank);
Eigen::MatrixXd white_noise_gain(const BeamformerBank& bank);    // beams x bins
Eigen::MatrixXd diffuse_noise_power(const BeamformerBank& bank); // beams x bins

void save_bank(const BeamformerBank& bank, const std::string& path);
BeamformerBank load_bank(const std::string& path);

}  // namespace streamsep

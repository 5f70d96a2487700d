#pragma once

#include <vector>

#include <Eigen/Dense>

#include "streamsep/geometry.hpp"
#include "streamsep/signal.hpp"

namespace streamsep {

/// Per-frame input to the mask estimators: reference-channel magnitude
/// spectrum plus one IPD row per non-reference microphone, pairs ordered
/// by ascending channel index. IPD values lie in (-pi, pi].
struct FeatureFrame {
  int frame_index = 0;
  Eigen::VectorXd ref_magnitude;  // bins
  Eigen::MatrixXd ipd;            // (mics - 1) x bins
};

/// ipd[m] = arg(X_ref * conj(X_m)) for each non-reference mic m.
FeatureFrame extract_feature_frame(const Eigen::MatrixXcd& frame,
                                   int ref_channel, int frame_index);
std::vector<FeatureFrame> extract_features(const MultiChannelSpectrogram& spec,
                                           int ref_channel);

/// Raw directional feature c(t,f) = |z^H h| with z the magnitude-
/// normalized observation and h the nearest-grid steering vector for
/// `angle_deg`; zero-energy bins yield 0. Rows are frames in
/// [frame_begin, frame_end), columns bins, values in [0, 1].
Eigen::MatrixXd directional_feature(const MultiChannelSpectrogram& spec,
                                    const SteeringTable& table,
                                    double angle_deg, int frame_begin,
                                    int frame_end);

/// Winner-take-all sparsification over competing angles: feature i keeps
/// c(t,f) only where angle i attains the per-bin maximum; earlier angles
/// win ties, so at most one output is nonzero per bin.
std::vector<Eigen::MatrixXd> sparsified_directional_features(
    const MultiChannelSpectrogram& spec, const SteeringTable& table,
    const std::vector<double>& angles_deg, int frame_begin, int frame_end);

/// Directional feature row for a single precomputed observation matrix
/// (channels x bins); used by streaming consumers.
Eigen::VectorXd directional_feature_frame(const Eigen::MatrixXcd& frame,
                                          const SteeringTable& table,
                                          int angle_index);

}  // namespace streamsep

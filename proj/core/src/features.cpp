#include "streamsep/features.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace streamsep {

namespace {

// Map std::arg's [-pi, pi] onto (-pi, pi].
double wrap_phase(double phi) {
  if (phi <= -std::numbers::pi) return phi + 2.0 * std::numbers::pi;
  return phi;
}

}  // namespace

FeatureFrame extract_feature_frame(const Eigen::MatrixXcd& frame,
                                   int ref_channel, int frame_index) {
  const int mics = static_cast<int>(frame.rows());
  const int bins = static_cast<int>(frame.cols());
  if (mics < 2)
    throw std::invalid_argument("extract_features: need at least 2 channels");
  if (ref_channel < 0 || ref_channel >= mics)
    throw std::invalid_argument("extract_features: invalid reference channel");

  FeatureFrame out;
  out.frame_index = frame_index;
  out.ref_magnitude = frame.row(ref_channel).cwiseAbs().transpose();
  out.ipd.resize(mics - 1, bins);
  int row = 0;
  for (int m = 0; m < mics; ++m) {
    if (m == ref_channel) continue;
    for (int k = 0; k < bins; ++k) {
      const std::complex<double> cross =
          frame(ref_channel, k) * std::conj(frame(m, k));
      out.ipd(row, k) = wrap_phase(std::arg(cross));
    }
    ++row;
  }
  return out;
}

std::vector<FeatureFrame> extract_features(const MultiChannelSpectrogram& spec,
                                           int ref_channel) {
  std::vector<FeatureFrame> out;
  out.reserve(spec.num_frames());
  for (int t = 0; t < spec.num_frames(); ++t)
    out.push_back(extract_feature_frame(spec.frame_matrix(t), ref_channel, t));
  return out;
}

Eigen::VectorXd directional_feature_frame(const Eigen::MatrixXcd& frame,
                                          const SteeringTable& table,
                                          int angle_index) {
  const int bins = static_cast<int>(frame.cols());
  Eigen::VectorXd c(bins);
  for (int k = 0; k < bins; ++k) {
    const Eigen::VectorXcd x = frame.col(k);
    const double norm = x.norm();
    if (norm <= 0.0) {
      c[k] = 0.0;
      continue;
    }
    const Eigen::VectorXcd h = table.bin_matrix(k).row(angle_index).transpose();
    c[k] = std::abs(x.dot(h)) / norm;  // Eigen dot conjugates the left side
  }
  return c;
}

Eigen::MatrixXd directional_feature(const MultiChannelSpectrogram& spec,
                                    const SteeringTable& table,
                                    double angle_deg, int frame_begin,
                                    int frame_end) {
  if (frame_begin < 0 || frame_end > spec.num_frames() ||
      frame_begin > frame_end)
    throw std::invalid_argument("directional_feature: bad frame range");
  const int angle_index = table.nearest_index(angle_deg);
  Eigen::MatrixXd out(frame_end - frame_begin, spec.num_bins());
  for (int t = frame_begin; t < frame_end; ++t)
    out.row(t - frame_begin) =
        directional_feature_frame(spec.frame_matrix(t), table, angle_index)
            .transpose();
  return out;
}

std::vector<Eigen::MatrixXd> sparsified_directional_features(
    const MultiChannelSpectrogram& spec, const SteeringTable& table,
    const std::vector<double>& angles_deg, int frame_begin, int frame_end) {
  std::vector<Eigen::MatrixXd> raw;
  raw.reserve(angles_deg.size());
  for (double a : angles_deg)
    raw.push_back(
        directional_feature(spec, table, a, frame_begin, frame_end));
  std::vector<Eigen::MatrixXd> out(raw.size());
  for (size_t i = 0; i < raw.size(); ++i)
    out[i] = Eigen::MatrixXd::Zero(raw[i].rows(), raw[i].cols());
  for (int t = 0; t < static_cast<int>(raw.empty() ? 0 : raw[0].rows()); ++t) {
    for (int k = 0; k < static_cast<int>(raw[0].cols()); ++k) {
      size_t winner = 0;
      for (size_t i = 1; i < raw.size(); ++i)
        if (raw[i](t, k) > raw[winner](t, k)) winner = i;
      out[winner](t, k) = raw[winner](t, k);
    }
  }
  return out;
}

}  // namespace streamsep

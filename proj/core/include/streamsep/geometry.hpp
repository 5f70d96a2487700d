#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

#include "streamsep/signal.hpp"

namespace streamsep {

/// Planar microphone array. Azimuths are degrees in [0, 360), measured
/// counter-clockwise from the +x axis; localization is azimuth-only.
struct ArrayGeometry {
  Eigen::Matrix2Xd mic_positions;  // meters, one column per mic
  int reference_index = 0;
  double speed_of_sound = 343.0;

  int num_mics() const { return static_cast<int>(mic_positions.cols()); }
  void validate() const;

  /// Far-field delay of mic `m` relative to the reference for a plane
  /// wave arriving from `azimuth_deg`. Positive when mic m hears later.
  double relative_delay_s(int mic, double azimuth_deg) const;

  /// 6 mics uniformly on a circle of radius 0.0425 m plus a center mic;
  /// the center mic is index 0 and the reference.
  static ArrayGeometry circular_default();
  /// `count` mics uniformly on a circle, first at azimuth 0.
  static ArrayGeometry uniform_circle(int count, double radius_m);
};

/// Text format: one "x y" pair per line (meters); '#' starts a comment;
/// an optional "reference <index>" line overrides the default 0.
ArrayGeometry load_geometry(const std::string& path);
ArrayGeometry parse_geometry(const std::string& text);

/// Unit-norm far-field steering vector: element m is
/// exp(-j 2 pi f tau_m) / sqrt(M); the reference element has zero phase.
Eigen::VectorXcd steering_vector(const ArrayGeometry& geometry,
                                 double angle_deg, int bin,
                                 const FrameConfig& config);

/// Steering vectors for a discrete angle grid and all bins.
class SteeringTable {
 public:
  SteeringTable(ArrayGeometry geometry, std::vector<double> angle_grid_deg,
                FrameConfig config);

  const std::vector<double>& angle_grid() const { return grid_; }
  int num_angles() const { return static_cast<int>(grid_.size()); }
  int num_bins() const { return static_cast<int>(per_bin_.size()); }
  int num_channels() const { return geometry_.num_mics(); }
  const ArrayGeometry& geometry() const { return geometry_; }
  const FrameConfig& config() const { return config_; }

  /// angles x channels matrix for one bin; row a is the steering vector
  /// for grid angle a (conjugate-ready for scoring products).
  const Eigen::MatrixXcd& bin_matrix(int bin) const { return per_bin_[bin]; }
  Eigen::VectorXcd vector(int angle_index, int bin) const {
    return per_bin_[bin].row(angle_index).transpose();
  }
  int nearest_index(double angle_deg) const;

 private:
  ArrayGeometry geometry_;
  std::vector<double> grid_;
  FrameConfig config_;
  std::vector<Eigen::MatrixXcd> per_bin_;
};

SteeringTable build_steering_table(const ArrayGeometry& geometry,
                                   const std::vector<double>& angle_grid_deg,
                                   const FrameConfig& config);

/// {0, step, 2*step, ...} covering [0, 360).
std::vector<double> uniform_angle_grid(double step_deg);

/// Circular distance between two azimuths, in [0, 180].
double circular_distance_deg(double a, double b);

}  // namespace streamsep

#include "streamsep/geometry.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace streamsep {

namespace {
constexpr double kDegToRad = std::numbers::pi / 180.0;
}

void ArrayGeometry::validate() const {
  if (num_mics() < 2)
    throw std::invalid_argument("geometry: need at least 2 microphones");
  if (reference_index < 0 || reference_index >= num_mics())
    throw std::invalid_argument("geometry: reference index out of range");
  if (!mic_positions.allFinite())
    throw std::invalid_argument("geometry: non-finite mic position");
  if (speed_of_sound <= 0)
    throw std::invalid_argument("geometry: speed of sound must be > 0");
  for (int i = 0; i < num_mics(); ++i)
    for (int j = i + 1; j < num_mics(); ++j)
      if ((mic_positions.col(i) - mic_positions.col(j)).norm() <= 0.0)
        throw std::invalid_argument("geometry: coincident distinct mics");
}

double ArrayGeometry::relative_delay_s(int mic, double azimuth_deg) const {
  // Plane wave from azimuth w propagates along -u, u = (cos w, sin w).
  // A mic at p hears the wavefront at time -(p . u)/c relative to the
  // origin, so relative to the reference: tau = ((p_ref - p_m) . u)/c.
  const double w = azimuth_deg * kDegToRad;
  const Eigen::Vector2d u(std::cos(w), std::sin(w));
  const Eigen::Vector2d d =
      mic_positions.col(reference_index) - mic_positions.col(mic);
  return d.dot(u) / speed_of_sound;
}

ArrayGeometry ArrayGeometry::circular_default() {
  ArrayGeometry g;
  g.mic_positions.resize(2, 7);
  g.mic_positions.col(0).setZero();  // center, reference
  const double radius = 0.0425;
  for (int i = 0; i < 6; ++i) {
    const double w = 60.0 * i * kDegToRad;
    g.mic_positions.col(i + 1) << radius * std::cos(w), radius * std::sin(w);
  }
  g.reference_index = 0;
  return g;
}

ArrayGeometry ArrayGeometry::uniform_circle(int count, double radius_m) {
  ArrayGeometry g;
  g.mic_positions.resize(2, count);
  for (int i = 0; i < count; ++i) {
    const double w = 360.0 * i / count * kDegToRad;
    g.mic_positions.col(i) << radius_m * std::cos(w), radius_m * std::sin(w);
  }
  g.reference_index = 0;
  return g;
}

ArrayGeometry parse_geometry(const std::string& text) {
  ArrayGeometry g;
  std::vector<Eigen::Vector2d> positions;
  int reference = 0;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string first;
    if (!(ls >> first)) continue;
    if (first == "reference") {
      if (!(ls >> reference))
        throw std::invalid_argument("geometry: malformed reference line");
      continue;
    }
    if (first == "speed_of_sound") {
      if (!(ls >> g.speed_of_sound))
        throw std::invalid_argument("geometry: malformed speed_of_sound line");
      continue;
    }
    double x = 0.0, y = 0.0;
    try {
      x = std::stod(first);
    } catch (const std::exception&) {
      throw std::invalid_argument("geometry: malformed position line: " + line);
    }
    if (!(ls >> y))
      throw std::invalid_argument("geometry: malformed position line: " + line);
    positions.emplace_back(x, y);
  }
  g.mic_positions.resize(2, static_cast<int>(positions.size()));
  for (size_t i = 0; i < positions.size(); ++i)
    g.mic_positions.col(static_cast<int>(i)) = positions[i];
  g.reference_index = reference;
  g.validate();
  return g;
}

ArrayGeometry load_geometry(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open geometry file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_geometry(ss.str());
}

Eigen::VectorXcd steering_vector(const ArrayGeometry& geometry,
                                 double angle_deg, int bin,
                                 const FrameConfig& config) {
  if (angle_deg < 0.0 || angle_deg >= 360.0)
    throw std::invalid_argument("steering_vector: angle outside [0, 360)");
  if (bin < 0 || bin >= config.num_bins())
    throw std::invalid_argument("steering_vector: bin out of range");
  const int m = geometry.num_mics();
  const double f = config.bin_hz(bin);
  const double scale = 1.0 / std::sqrt(static_cast<double>(m));
  Eigen::VectorXcd h(m);
  for (int i = 0; i < m; ++i) {
    const double phase =
        -2.0 * std::numbers::pi * f * geometry.relative_delay_s(i, angle_deg);
    h[i] = std::polar(scale, phase);
  }
  return h;
}

SteeringTable::SteeringTable(ArrayGeometry geometry,
                             std::vector<double> angle_grid_deg,
                             FrameConfig config)
    : geometry_(std::move(geometry)),
      grid_(std::move(angle_grid_deg)),
      config_(config) {
  geometry_.validate();
  config_.validate();
  if (grid_.empty()) throw std::invalid_argument("steering table: empty grid");
  for (size_t i = 0; i < grid_.size(); ++i) {
    if (grid_[i] < 0.0 || grid_[i] >= 360.0)
      throw std::invalid_argument("steering table: angle outside [0, 360)");
    if (i > 0 && grid_[i] <= grid_[i - 1])
      throw std::invalid_argument(
          grid_[i] == grid_[i - 1] ? "steering table: duplicate grid angle"
                                   : "steering table: grid not ascending");
  }
  const int bins = config_.num_bins();
  const int mics = geometry_.num_mics();
  per_bin_.resize(bins);
  for (int k = 0; k < bins; ++k) {
    per_bin_[k].resize(static_cast<int>(grid_.size()), mics);
    for (size_t a = 0; a < grid_.size(); ++a)
      per_bin_[k].row(static_cast<int>(a)) =
          steering_vector(geometry_, grid_[a], k, config_).transpose();
  }
}

int SteeringTable::nearest_index(double angle_deg) const {
  int best = 0;
  double best_dist = circular_distance_deg(angle_deg, grid_[0]);
  for (size_t i = 1; i < grid_.size(); ++i) {
    const double d = circular_distance_deg(angle_deg, grid_[i]);
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(i);
    }
  }
  return best;
}

SteeringTable build_steering_table(const ArrayGeometry& geometry,
                                   const std::vector<double>& angle_grid_deg,
                                   const FrameConfig& config) {
  return SteeringTable(geometry, angle_grid_deg, config);
}

std::vector<double> uniform_angle_grid(double step_deg) {
  if (step_deg <= 0.0 || step_deg > 360.0)
    throw std::invalid_argument("angle grid step out of range");
  std::vector<double> grid;
  for (double a = 0.0; a < 360.0 - 1e-9; a += step_deg) grid.push_back(a);
  return grid;
}

double circular_distance_deg(double a, double b) {
  double d = std::fmod(std::abs(a - b), 360.0);
  return d > 180.0 ? 360.0 - d : d;
}

}  // namespace streamsep

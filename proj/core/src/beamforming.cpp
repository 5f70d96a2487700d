#include "streamsep/beamforming.hpp"

#include <cmath>
#include <fstream>
#include <numbers>
#include <stdexcept>

#include <json.hpp>

namespace streamsep {

namespace {

// Steering vector in reference-microphone normalization: d_m =
// exp(-j 2 pi f tau_m), d_ref = 1. Equals sqrt(M) times the unit-norm
// steering vector.
Eigen::VectorXcd reference_steering(const ArrayGeometry& geometry,
                                    double angle_deg, int bin,
                                    const FrameConfig& config) {
  return steering_vector(geometry, angle_deg, bin, config) *
         std::sqrt(static_cast<double>(geometry.num_mics()));
}

}  // namespace

BeamformerBank::BeamformerBank(std::vector<Eigen::MatrixXcd> weights,
                               std::vector<double> focus_angles_deg,
                               ArrayGeometry geometry, FrameConfig config,
                               double diagonal_loading)
    : weights_(std::move(weights)),
      focus_(std::move(focus_angles_deg)),
      geometry_(std::move(geometry)),
      config_(config),
      loading_(diagonal_loading) {}

const Eigen::MatrixXcd& BeamformerBank::beam_weights(int beam) const {
  if (beam < 0 || beam >= num_beams())
    throw std::invalid_argument("beam index out of range");
  return weights_[beam];
}

Eigen::MatrixXd diffuse_coherence(const ArrayGeometry& geometry,
                                  double freq_hz) {
  const int m = geometry.num_mics();
  Eigen::MatrixXd gamma(m, m);
  for (int i = 0; i < m; ++i) {
    gamma(i, i) = 1.0;
    for (int j = i + 1; j < m; ++j) {
      const double dist =
          (geometry.mic_positions.col(i) - geometry.mic_positions.col(j))
              .norm();
      const double x =
          2.0 * std::numbers::pi * freq_hz * dist / geometry.speed_of_sound;
      const double v = x == 0.0 ? 1.0 : std::sin(x) / x;
      gamma(i, j) = v;
      gamma(j, i) = v;
    }
  }
  return gamma;
}

BeamformerBank design_bank(const ArrayGeometry& geometry,
                           const FrameConfig& config, double loading,
                           int num_beams) {
  geometry.validate();
  config.validate();
  if (loading < 0) throw std::invalid_argument("diagonal loading must be >= 0");
  if (num_beams < 1) throw std::invalid_argument("need at least one beam");

  const int mics = geometry.num_mics();
  const int bins = config.num_bins();
  std::vector<double> focus(num_beams);
  for (int b = 0; b < num_beams; ++b) focus[b] = 360.0 * b / num_beams;

  std::vector<Eigen::MatrixXcd> weights(
      num_beams, Eigen::MatrixXcd(bins, mics));
  for (int k = 0; k < bins; ++k) {
    Eigen::MatrixXcd g =
        (diffuse_coherence(geometry, config.bin_hz(k)) +
         loading * Eigen::MatrixXd::Identity(mics, mics))
            .cast<std::complex<double>>();
    Eigen::LLT<Eigen::MatrixXcd> llt(g);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("design_bank: loaded coherence not positive "
                               "definite (increase diagonal loading)");
    for (int b = 0; b < num_beams; ++b) {
      const Eigen::VectorXcd d =
          reference_steering(geometry, focus[b], k, config);
      const Eigen::VectorXcd gid = llt.solve(d);
      const std::complex<double> denom = d.dot(gid);  // d^H G^-1 d, real > 0
      weights[b].row(k) = (gid / denom.real()).transpose();
    }
  }
  return BeamformerBank(std::move(weights), std::move(focus), geometry, config,
                        loading);
}

Eigen::VectorXcd apply_beam_frame(const BeamformerBank& bank, int beam,
                                  const Eigen::MatrixXcd& frame) {
  const Eigen::MatrixXcd& w = bank.beam_weights(beam);
  const int bins = static_cast<int>(frame.cols());
  Eigen::VectorXcd out(bins);
  for (int k = 0; k < bins; ++k) out[k] = w.row(k).dot(frame.col(k));
  return out;
}

MultiChannelSpectrogram apply_beam(const BeamformerBank& bank, int beam,
                                   const MultiChannelSpectrogram& spec) {
  if (spec.num_channels() != bank.num_channels())
    throw std::invalid_argument("apply_beam: channel count mismatch");
  if (spec.num_bins() != bank.num_bins())
    throw std::invalid_argument("apply_beam: bin count mismatch");
  MultiChannelSpectrogram out(1, spec.num_frames(), spec.config());
  const Eigen::MatrixXcd& w = bank.beam_weights(beam);
  for (int t = 0; t < spec.num_frames(); ++t) {
    for (int k = 0; k < spec.num_bins(); ++k) {
      std::complex<double> acc = 0.0;
      for (int c = 0; c < spec.num_channels(); ++c)
        acc += std::conj(w(k, c)) * spec.at(c, t, k);
      out.at(0, t, k) = acc;
    }
  }
  return out;
}

int select_beam(const BeamformerBank& bank, double angle_deg) {
  if (angle_deg < 0.0 || angle_deg >= 360.0)
    throw std::invalid_argument("select_beam: angle outside [0, 360)");
  const auto& focus = bank.focus_angles_deg();
  int best = 0;
  double best_dist = circular_distance_deg(angle_deg, focus[0]);
  for (size_t b = 1; b < focus.size(); ++b) {
    const double d = circular_distance_deg(angle_deg, focus[b]);
    if (d < best_dist) {
      best_dist = d;
      best = static_cast<int>(b);
    }
  }
  return best;
}

double distortionless_error(const BeamformerBank& bank) {
  double worst = 0.0;
  for (int b = 0; b < bank.num_beams(); ++b) {
    const Eigen::MatrixXcd& w = bank.beam_weights(b);
    for (int k = 0; k < bank.num_bins(); ++k) {
      const Eigen::VectorXcd d = reference_steering(
          bank.geometry(), bank.focus_angles_deg()[b], k, bank.config());
      const std::complex<double> r = w.row(k).dot(d);
      worst = std::max(worst, std::abs(std::abs(r) - 1.0));
    }
  }
  return worst;
}

Eigen::MatrixXd white_noise_gain(const BeamformerBank& bank) {
  Eigen::MatrixXd out(bank.num_beams(), bank.num_bins());
  for (int b = 0; b < bank.num_beams(); ++b)
    out.row(b) = bank.beam_weights(b).rowwise().squaredNorm().transpose();
  return out;
}

Eigen::MatrixXd diffuse_noise_power(const BeamformerBank& bank) {
  Eigen::MatrixXd out(bank.num_beams(), bank.num_bins());
  for (int k = 0; k < bank.num_bins(); ++k) {
    const Eigen::MatrixXcd gamma =
        diffuse_coherence(bank.geometry(), bank.config().bin_hz(k))
            .cast<std::complex<double>>();
    for (int b = 0; b < bank.num_beams(); ++b) {
      const Eigen::VectorXcd w = bank.beam_weights(b).row(k).transpose();
      out(b, k) = (w.dot(gamma * w)).real();
    }
  }
  return out;
}

void save_bank(const BeamformerBank& bank, const std::string& path) {
  nlohmann::json j;
  j["sample_rate"] = bank.config().sample_rate;
  j["frame_shift"] = bank.config().frame_shift;
  j["frame_length"] = bank.config().frame_length;
  j["window"] =
      bank.config().window == WindowKind::kSqrtHann ? "sqrt_hann" : "rect";
  j["diagonal_loading"] = bank.diagonal_loading();
  j["focus_angles_deg"] = bank.focus_angles_deg();
  j["reference_index"] = bank.geometry().reference_index;
  j["speed_of_sound"] = bank.geometry().speed_of_sound;
  auto& mics = j["mic_positions"] = nlohmann::json::array();
  for (int i = 0; i < bank.geometry().num_mics(); ++i)
    mics.push_back({bank.geometry().mic_positions(0, i),
                    bank.geometry().mic_positions(1, i)});
  auto& beams = j["weights"] = nlohmann::json::array();
  for (int b = 0; b < bank.num_beams(); ++b) {
    nlohmann::json beam = nlohmann::json::array();
    const Eigen::MatrixXcd& w = bank.beam_weights(b);
    for (int k = 0; k < bank.num_bins(); ++k) {
      nlohmann::json bin = nlohmann::json::array();
      for (int c = 0; c < bank.num_channels(); ++c)
        bin.push_back({w(k, c).real(), w(k, c).imag()});
      beam.push_back(std::move(bin));
    }
    beams.push_back(std::move(beam));
  }
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write bank file: " + path);
  out << j.dump();
}

BeamformerBank load_bank(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open bank file: " + path);
  nlohmann::json j;
  in >> j;

  FrameConfig config;
  config.sample_rate = j.at("sample_rate").get<int>();
  config.frame_shift = j.at("frame_shift").get<int>();
  config.frame_length = j.at("frame_length").get<int>();
  config.window = j.at("window").get<std::string>() == "rect"
                      ? WindowKind::kRect
                      : WindowKind::kSqrtHann;

  ArrayGeometry geometry;
  const auto& mics = j.at("mic_positions");
  geometry.mic_positions.resize(2, static_cast<int>(mics.size()));
  for (size_t i = 0; i < mics.size(); ++i) {
    geometry.mic_positions(0, static_cast<int>(i)) = mics[i][0].get<double>();
    geometry.mic_positions(1, static_cast<int>(i)) = mics[i][1].get<double>();
  }
  geometry.reference_index = j.at("reference_index").get<int>();
  geometry.speed_of_sound = j.at("speed_of_sound").get<double>();

  std::vector<double> focus = j.at("focus_angles_deg").get<std::vector<double>>();
  const auto& beams = j.at("weights");
  std::vector<Eigen::MatrixXcd> weights;
  weights.reserve(beams.size());
  for (const auto& beam : beams) {
    Eigen::MatrixXcd w(static_cast<int>(beam.size()), geometry.num_mics());
    for (size_t k = 0; k < beam.size(); ++k)
      for (int c = 0; c < geometry.num_mics(); ++c)
        w(static_cast<int>(k), c) = {beam[k][c][0].get<double>(),
                                     beam[k][c][1].get<double>()};
    weights.push_back(std::move(w));
  }
  if (static_cast<int>(weights.size()) != static_cast<int>(focus.size()))
    throw std::runtime_error("bank file: beam/focus count mismatch");
  return BeamformerBank(std::move(weights), std::move(focus),
                        std::move(geometry), config,
                        j.at("diagonal_loading").get<double>());
}

}  // namespace streamsep

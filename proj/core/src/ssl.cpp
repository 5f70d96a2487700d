#include "streamsep/ssl.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace streamsep {

void SslSchedule::validate() const {
  if (!(window_frames >= stride_frames && stride_frames >= 1))
    throw std::invalid_argument("ssl schedule: need window >= stride >= 1");
  if (margin_frames < 0)
    throw std::invalid_argument("ssl schedule: negative margin");
  if (epsilon <= 0.0) throw std::invalid_argument("ssl schedule: epsilon <= 0");
}

int SslSchedule::first_governed_frame() const {
  const int first_decision =
      ((window_frames + stride_frames - 1) / stride_frames) * stride_frames;
  return std::max(0, first_decision - margin_frames);
}

int SslSchedule::decision_frame_for(int frame) const {
  const int d = ((frame + margin_frames) / stride_frames) * stride_frames;
  const int first_decision =
      ((window_frames + stride_frames - 1) / stride_frames) * stride_frames;
  return std::max(d, first_decision);
}

const TrackEntry* DirectionTrack::at(int frame) const {
  if (entries.empty()) return nullptr;
  if (frame < entries.front().begin_frame) return &entries.front();
  for (const auto& e : entries)
    if (frame < e.end_frame) return &e;
  return &entries.back();
}

void DirectionTrack::validate() const {
  for (size_t i = 0; i < entries.size(); ++i) {
    if (entries[i].end_frame <= entries[i].begin_frame)
      throw std::invalid_argument("direction track: empty interval");
    if (i > 0 && entries[i].begin_frame != entries[i - 1].end_frame)
      throw std::invalid_argument("direction track: intervals not contiguous");
  }
}

Eigen::MatrixXd cacg_frame_scores(const Eigen::MatrixXcd& frame,
                                  const SteeringTable& table, double epsilon) {
  if (epsilon <= 0.0) throw std::invalid_argument("cacg: epsilon <= 0");
  const int bins = static_cast<int>(frame.cols());
  const int angles = table.num_angles();
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(angles, bins);
  const double inv_one_plus_eps = 1.0 / (1.0 + epsilon);
  Eigen::VectorXcd zbar(frame.rows());
  Eigen::VectorXcd response(angles);
  for (int k = 0; k < bins; ++k) {
    const double norm = frame.col(k).norm();
    if (norm <= 0.0) continue;
    // |(H zbar)_a| = |h_a^H z|; conjugating the observation avoids
    // materializing a conjugated copy of the table.
    zbar = frame.col(k).conjugate() / norm;
    response.noalias() = table.bin_matrix(k) * zbar;
    for (int a = 0; a < angles; ++a) {
      const double c2 = std::norm(response[a]);
      // |z^H h| <= 1 by Cauchy-Schwarz, so the argument stays positive.
      scores(a, k) = -std::log(1.0 - c2 * inv_one_plus_eps);
    }
  }
  return scores;
}

namespace {

void check_window_args(const MultiChannelSpectrogram& spec,
                       const Eigen::MatrixXd& mask, int frame_begin,
                       int frame_end) {
  if (frame_begin < 0 || frame_end > spec.num_frames() ||
      frame_begin > frame_end)
    throw std::invalid_argument("cacg: bad frame range");
  if (mask.rows() != spec.num_frames() || mask.cols() != spec.num_bins())
    throw std::invalid_argument("cacg: mask not aligned with spectrogram");
}

}  // namespace

Eigen::VectorXd cacg_log_likelihood(const MultiChannelSpectrogram& spec,
                                    const Eigen::MatrixXd& mask,
                                    const SteeringTable& table, double epsilon,
                                    int frame_begin, int frame_end) {
  check_window_args(spec, mask, frame_begin, frame_end);
  Eigen::VectorXd total = Eigen::VectorXd::Zero(table.num_angles());
  for (int t = frame_begin; t < frame_end; ++t) {
    const Eigen::MatrixXd scores =
        cacg_frame_scores(spec.frame_matrix(t), table, epsilon);
    total += scores * mask.row(t).transpose();
  }
  return total;
}

Eigen::VectorXd cacg_log_likelihood_direct(const MultiChannelSpectrogram& spec,
                                           const Eigen::MatrixXd& mask,
                                           const SteeringTable& table,
                                           double epsilon, int frame_begin,
                                           int frame_end) {
  check_window_args(spec, mask, frame_begin, frame_end);
  if (epsilon <= 0.0) throw std::invalid_argument("cacg: epsilon <= 0");
  const int m = table.num_channels();
  const int bins = spec.num_bins();
  const int angles = table.num_angles();
  const double log_const = std::log(0.5) -
                           m * std::log(std::numbers::pi) +
                           std::lgamma(static_cast<double>(m));

  // Normalized observations, gathered per bin across the window.
  std::vector<std::vector<std::pair<int, Eigen::VectorXcd>>> obs(bins);
  for (int t = frame_begin; t < frame_end; ++t) {
    const Eigen::MatrixXcd frame = spec.frame_matrix(t);
    for (int k = 0; k < bins; ++k) {
      const double norm = frame.col(k).norm();
      if (norm <= 0.0) continue;  // zero-energy bins contribute nothing
      obs[k].emplace_back(t, frame.col(k) / norm);
    }
  }

  // Oracle-grade evaluation: the flooring makes B ill-conditioned
  // (kappa ~ 1/eps) and the per-term constants are large against the
  // score differences downstream tests compare, so the solve gets one
  // refinement step and the sums an extended-precision accumulator.
  std::vector<long double> total(angles, 0.0L);
  const Eigen::MatrixXcd eye =
      Eigen::MatrixXcd::Identity(m, m) * std::complex<double>(epsilon, 0.0);
  for (int k = 0; k < bins; ++k) {
    if (obs[k].empty()) continue;
    for (int a = 0; a < angles; ++a) {
      const Eigen::VectorXcd h = table.bin_matrix(k).row(a).transpose();
      const Eigen::MatrixXcd b = h * h.adjoint() + eye;
      Eigen::LLT<Eigen::MatrixXcd> llt(b);
      if (llt.info() != Eigen::Success)
        throw std::runtime_error("cacg direct: factorization failed");
      long double log_det = 0.0L;
      for (int i = 0; i < m; ++i)
        log_det += 2.0L * std::log(static_cast<long double>(
                              llt.matrixL()(i, i).real()));
      for (const auto& [t, z] : obs[k]) {
        const double w = mask(t, k);
        if (w == 0.0) continue;
        Eigen::VectorXcd y = llt.solve(z);
        y += llt.solve(z - b * y);
        const long double quad = z.dot(y).real();
        total[a] += static_cast<long double>(w) *
                    (static_cast<long double>(log_const) - log_det -
                     static_cast<long double>(m) * std::log(quad));
      }
    }
  }
  Eigen::VectorXd out(angles);
  for (int a = 0; a < angles; ++a) out[a] = static_cast<double>(total[a]);
  return out;
}

SslTracker::SslTracker(std::shared_ptr<const SteeringTable> table,
                       SslSchedule schedule)
    : table_(std::move(table)), schedule_(schedule) {
  if (!table_) throw std::invalid_argument("ssl tracker: null table");
  schedule_.validate();
  score_sum_ = Eigen::MatrixXd::Zero(table_->num_angles(), 2);
}

std::optional<TrackEntry> SslTracker::push(const Eigen::MatrixXcd& frame,
                                           const Eigen::VectorXd& speech_mask0,
                                           const Eigen::VectorXd& speech_mask1) {
  const int t = next_frame_++;
  const Eigen::MatrixXd scores =
      cacg_frame_scores(frame, *table_, schedule_.epsilon);
  Eigen::MatrixXd per_channel(table_->num_angles(), 2);
  per_channel.col(0) = scores * speech_mask0;
  per_channel.col(1) = scores * speech_mask1;
  window_.push_back(per_channel);
  masses_.emplace_back(speech_mask0.sum(), speech_mask1.sum());
  if (static_cast<int>(window_.size()) > schedule_.window_frames) {
    window_.pop_front();
    masses_.pop_front();
  }

  if (t < schedule_.window_frames || t % schedule_.stride_frames != 0)
    return std::nullopt;

  // Summed fresh per decision; an incremental sum would accumulate
  // round-off and defeat the exact flatness test on silent windows.
  score_sum_.setZero();
  mass_sum_.setZero();
  for (const auto& w : window_) score_sum_ += w;
  for (const auto& m : masses_) mass_sum_ += m;

  TrackEntry entry;
  entry.decision_frame = t;
  double angle[2];
  bool confident[2];
  double best_score[2];
  // A full window of all-ones masks would weigh window*bins; masses
  // negligible against that mean the channel is effectively silent.
  const double mass_floor =
      1e-6 * static_cast<double>(schedule_.window_frames) *
      static_cast<double>(table_->num_bins());
  for (int i = 0; i < 2; ++i) {
    int arg = 0;
    const double hi = score_sum_.col(i).maxCoeff(&arg);
    const double lo = score_sum_.col(i).minCoeff();
    const bool flat = mass_sum_[i] <= mass_floor ||
                      (hi - lo) <= 1e-6 * mass_sum_[i];
    confident[i] = !flat;
    angle[i] = flat ? prev_angle_[i] : table_->angle_grid()[arg];
    best_score[i] = hi;
    prev_angle_[i] = angle[i];
  }
  entry.target_deg = angle[0];
  entry.interference_deg = angle[1];
  entry.target_confident = confident[0];
  entry.interference_confident = confident[1];
  entry.target_score = best_score[0];
  entry.interference_score = best_score[1];

  entry.begin_frame = std::max(t - schedule_.margin_frames, prev_end_);
  entry.end_frame = t - schedule_.margin_frames + schedule_.stride_frames;
  if (entry.end_frame <= entry.begin_frame) return std::nullopt;
  prev_end_ = entry.end_frame;
  return entry;
}

DirectionTrack localize(const MultiChannelSpectrogram& spec,
                        const std::array<Eigen::MatrixXd, 2>& speech_masks,
                        const SslSchedule& schedule,
                        const SteeringTable& table) {
  for (const auto& m : speech_masks)
    if (m.rows() != spec.num_frames() || m.cols() != spec.num_bins())
      throw std::invalid_argument("localize: masks not aligned");
  SslTracker tracker(std::make_shared<SteeringTable>(table), schedule);
  DirectionTrack track;
  for (int t = 0; t < spec.num_frames(); ++t) {
    auto entry = tracker.push(spec.frame_matrix(t),
                              speech_masks[0].row(t).transpose(),
                              speech_masks[1].row(t).transpose());
    if (entry) track.entries.push_back(*entry);
  }
  if (!track.entries.empty()) track.entries.front().begin_frame = 0;
  track.validate();
  return track;
}

void save_track_csv(const DirectionTrack& track, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write track file: " + path);
  out << "interval_start,interval_end,target_deg,interference_deg\n";
  for (const auto& e : track.entries)
    out << e.begin_frame << ',' << e.end_frame << ',' << e.target_deg << ','
        << e.interference_deg << '\n';
}

DirectionTrack load_track_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open track file: " + path);
  DirectionTrack track;
  std::string line;
  bool header = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (header) {
      header = false;
      continue;
    }
    TrackEntry e;
    char comma;
    std::istringstream ls(line);
    if (!(ls >> e.begin_frame >> comma >> e.end_frame >> comma >>
          e.target_deg >> comma >> e.interference_deg))
      throw std::runtime_error("track file: malformed line: " + line);
    track.entries.push_back(e);
  }
  return track;
}

}  // namespace streamsep

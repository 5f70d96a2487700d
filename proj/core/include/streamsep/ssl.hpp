#pragma once

#include <deque>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "streamsep/geometry.hpp"
#include "streamsep/signal.hpp"

namespace streamsep {

/// Windowed localization schedule: a decision every stride frames scores
/// the trailing window; the margin keeps each decision ahead of the
/// frames it governs so it sees future context relative to them.
struct SslSchedule {
  int window_frames = 50;
  int stride_frames = 10;
  int margin_frames = 20;
  double epsilon = 1e-3;  // flooring value in B = h h^H + eps I

  void validate() const;
  /// First frame covered by a decision; earlier frames have no causal
  /// estimate and fall back to startup defaults.
  int first_governed_frame() const;
  /// Decision frame governing `frame`: the largest stride multiple
  /// <= frame + margin (never later, so downstream stages meet the
  /// look-ahead + margin latency budget).
  int decision_frame_for(int frame) const;
};

struct TrackEntry {
  int begin_frame = 0;  // governed interval [begin, end)
  int end_frame = 0;
  int decision_frame = 0;
  double target_deg = 0.0;
  double interference_deg = 0.0;
  bool target_confident = false;
  bool interference_confident = false;
  double target_score = 0.0;
  double interference_score = 0.0;
};

/// Time-indexed (target, interference) estimates over contiguous,
/// non-overlapping, ordered frame intervals.
struct DirectionTrack {
  std::vector<TrackEntry> entries;
  /// Entry covering `frame`, clamped to the first/last entry outside
  /// the covered range; nullptr when empty.
  const TrackEntry* at(int frame) const;
  void validate() const;
};

/// Masked cACG log likelihood per grid angle over a frame window:
///   L(w) = -sum_{t,f} m_{t,f} log(1 - |z^H h|^2 / (1 + eps)),
/// z the magnitude-normalized observation; zero-energy bins contribute
/// nothing. Rows of `mask` are frames aligned with `spec`.
Eigen::VectorXd cacg_log_likelihood(const MultiChannelSpectrogram& spec,
                                    const Eigen::MatrixXd& mask,
                                    const SteeringTable& table, double epsilon,
                                    int frame_begin, int frame_end);

/// Literal evaluation of the cACG density
///   p(z|w) = 0.5 pi^-M (M-1)! |B|^-1 (z^H B^-1 z)^-M,  B = h h^H + eps I,
/// with determinant and solve taken from a matrix factorization of B.
/// Independent oracle for cacg_log_likelihood: score differences equal
/// M times the fast form's differences.
Eigen::VectorXd cacg_log_likelihood_direct(const MultiChannelSpectrogram& spec,
                                           const Eigen::MatrixXd& mask,
                                           const SteeringTable& table,
                                           double epsilon, int frame_begin,
                                           int frame_end);

/// Per-bin score terms -log(1 - |z^H h|^2/(1+eps)) for one observation
/// frame (channels x bins) as an angles x bins matrix; zero columns for
/// zero-energy bins. Building block shared by scoring and tracking.
Eigen::MatrixXd cacg_frame_scores(const Eigen::MatrixXcd& frame,
                                  const SteeringTable& table, double epsilon);

/// Streaming localizer: feed aligned (observation frame, two speech mask
/// frames); a TrackEntry comes back at every decision frame. A flat
/// score profile (max - min <= 1e-6 x window mask mass) marks the
/// estimate low-confidence and holds the previous angle.
class SslTracker {
 public:
  SslTracker(std::shared_ptr<const SteeringTable> table, SslSchedule schedule);

  std::optional<TrackEntry> push(const Eigen::MatrixXcd& frame,
                                 const Eigen::VectorXd& speech_mask0,
                                 const Eigen::VectorXd& speech_mask1);
  const SslSchedule& schedule() const { return schedule_; }

 private:
  std::shared_ptr<const SteeringTable> table_;
  SslSchedule schedule_;
  std::deque<Eigen::MatrixXd> window_;  // per frame: angles x 2 channel scores
  std::deque<Eigen::Vector2d> masses_;
  Eigen::MatrixXd score_sum_;  // angles x 2
  Eigen::Vector2d mass_sum_ = Eigen::Vector2d::Zero();
  double prev_angle_[2] = {0.0, 0.0};
  int next_frame_ = 0;
  int prev_end_ = 0;
};

/// Batch localization; the first entry is extended back to frame 0.
DirectionTrack localize(const MultiChannelSpectrogram& spec,
                        const std::array<Eigen::MatrixXd, 2>& speech_masks,
                        const SslSchedule& schedule,
                        const SteeringTable& table);

/// CSV with header interval_start,interval_end,target_deg,interference_deg.
void save_track_csv(const DirectionTrack& track, const std::string& path);
DirectionTrack load_track_csv(const std::string& path);

}  // namespace streamsep

#pragma once

#include <deque>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "streamsep/features.hpp"
#include "streamsep/geometry.hpp"

namespace streamsep {

/// Masks for one frame: two speech channels plus noise, values in [0,1].
struct MaskFrame {
  std::array<Eigen::VectorXd, 2> speech;
  Eigen::VectorXd noise;
};

/// Block of masks, each frames x bins.
struct MaskSet {
  std::array<Eigen::MatrixXd, 2> speech;
  Eigen::MatrixXd noise;

  MaskSet() = default;
  MaskSet(int frames, int bins);
  int num_frames() const { return static_cast<int>(noise.rows()); }
  int num_bins() const { return static_cast<int>(noise.cols()); }
  MaskFrame frame(int t) const;
  void set_frame(int t, const MaskFrame& f);
  void validate() const;  // throws on shape mismatch or values outside [0,1]
};

/// Ideal ratio masks from per-source reference-channel spectrograms:
/// speech_i = |S_i| / (|S_1| + |S_2| + |N| + eps); all masks are zero
/// where the magnitude sum falls below eps. Accepts one or two sources.
MaskSet oracle_masks(const std::vector<Eigen::MatrixXcd>& source_specs,
                     const Eigen::MatrixXcd& noise_spec,
                     const Eigen::MatrixXcd& mixture_spec, double eps = 1e-9);

struct PitResult {
  double loss = 0.0;
  std::vector<int> permutation;  // permutation[i] = reference index for est i
};

/// Minimum over output-to-reference permutations of the summed per-pair
/// mean squared error; ties resolve to the lexicographically smallest
/// permutation.
PitResult pit_mse_loss(const std::vector<Eigen::MatrixXd>& estimated,
                       const std::vector<Eigen::MatrixXd>& references);

/// Total look-ahead of stacked layers (look-aheads compose additively).
int lookahead_frames(const std::vector<int>& layer_lookaheads);

enum class ChannelOrder { kIdentity, kSwap };

/// Orders the current buffer's speech channels against the previous
/// buffer's by minimum MSE between masked reference magnitudes
/// (mask x |X_ref|) over the overlap; an exact tie keeps identity.
ChannelOrder align_permutation(const MaskSet& prev_tail,
                               const MaskSet& cur_head,
                               const Eigen::MatrixXd& ref_magnitude);

/// Streaming mask estimator. Instances live for one buffer; push()
/// receives that buffer's feature frames in order and returns the mask
/// frames that became available. A mask for frame n may depend only on
/// features up to n + lookahead(); flush() drains the tail once the
/// buffer's window ends.
class MaskEstimator {
 public:
  virtual ~MaskEstimator() = default;
  virtual int lookahead() const = 0;
  virtual void reset() = 0;
  virtual std::vector<MaskFrame> push(const FeatureFrame& features) = 0;
  virtual std::vector<MaskFrame> flush() = 0;
};

struct BufferContext {
  int buffer_index = 0;
  int start_frame = 0;
};

/// Creates a fresh estimator instance for one buffer.
using EstimatorFactory =
    std::function<std::unique_ptr<MaskEstimator>(const BufferContext&)>;

/// Replays precomputed masks (indexed by global frame) with a declared
/// look-ahead delay; stand-in for a trained separation network.
EstimatorFactory oracle_estimator_factory(std::shared_ptr<const MaskSet> masks,
                                          int lookahead = 4);

/// Wraps another factory and swaps the speech channels of every
/// odd-indexed buffer; exercises the stitcher's permutation repair.
EstimatorFactory adversarial_estimator_factory(EstimatorFactory inner);

/// Wraps another factory and delays every emission by `extra` frames
/// while keeping the inner declaration, so each mask effectively uses
/// `extra` more future frames than declared. Validation aid for the
/// causality audit.
EstimatorFactory faulty_estimator_factory(EstimatorFactory inner,
                                          int extra = 1);

struct BaselineParams {
  int lookahead = 4;
  double min_separation_deg = 40.0;  // exclusion around the first peak
  double noise_floor = 0.5;          // softmax floor feeding the noise mask
  int profile_window = 50;           // frames of direction evidence
};

/// Signal-driven estimator requiring no ground truth: tracks the two
/// strongest directions from IPD-derived observations and assigns each
/// bin by dominant directional feature.
EstimatorFactory baseline_estimator_factory(
    std::shared_ptr<const SteeringTable> table, BaselineParams params = {});

struct StitchConfig {
  int buffer_frames = 150;  // 2.4 s at a 16 ms shift; must be even
};

struct StitchedFrame {
  int frame_index = 0;
  MaskFrame masks;
};

/// Double-buffering stitcher. Buffer k spans frames
/// [H*k, H*k + buffer_frames), H = buffer_frames/2, and runs on a fresh
/// estimator instance. Buffer 0 emits its whole span in identity order;
/// every later buffer recomputes masks over its first half (the previous
/// buffer's emitted second half), fixes its channel order against that
/// overlap, and emits its second half under the fixed order. Stitched
/// frame n is released exactly when feature frame n + lookahead arrives.
class MaskStitcher {
 public:
  MaskStitcher(EstimatorFactory factory, StitchConfig config = {});
  ~MaskStitcher();

  int lookahead() const { return lookahead_; }
  std::vector<StitchedFrame> push(const FeatureFrame& features);
  std::vector<StitchedFrame> finish();
  /// True once any frame was released later than its scheduled clock
  /// (the estimator produced masks slower than its declaration allows).
  bool lookahead_violated() const { return lookahead_violated_; }

 private:
  struct Buffer;
  void spawn_buffer(int start_frame);
  void feed_buffer(Buffer& b, const FeatureFrame& f);
  void try_fix_order(Buffer& b);
  std::vector<StitchedFrame> release_ready(bool draining);

  EstimatorFactory factory_;
  StitchConfig config_;
  int half_;
  int lookahead_;
  int clock_ = -1;         // last feature frame index pushed
  int next_release_ = 0;   // next stitched frame index to emit
  bool lookahead_violated_ = false;
  std::vector<std::unique_ptr<Buffer>> buffers_;
  std::deque<Eigen::VectorXd> ref_magnitude_;  // alignment window
  long ref_base_ = 0;  // global frame index of ref_magnitude_.front()
};

/// Batch wrapper around MaskStitcher.
MaskSet stitch_stream(const EstimatorFactory& factory,
                      const std::vector<FeatureFrame>& features,
                      StitchConfig config = {});

/// Binary mask tensor dump (speech0, speech1, noise planes).
void save_masks(const MaskSet& masks, const std::string& path);
MaskSet load_masks(const std::string& path);

}  // namespace streamsep

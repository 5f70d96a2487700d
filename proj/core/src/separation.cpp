#include "streamsep/separation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <deque>
#include <fstream>
#include <numeric>
#include <stdexcept>

namespace streamsep {

MaskSet::MaskSet(int frames, int bins)
    : speech{Eigen::MatrixXd::Zero(frames, bins),
             Eigen::MatrixXd::Zero(frames, bins)},
      noise(Eigen::MatrixXd::Zero(frames, bins)) {}

MaskFrame MaskSet::frame(int t) const {
  MaskFrame f;
  f.speech[0] = speech[0].row(t).transpose();
  f.speech[1] = speech[1].row(t).transpose();
  f.noise = noise.row(t).transpose();
  return f;
}

void MaskSet::set_frame(int t, const MaskFrame& f) {
  speech[0].row(t) = f.speech[0].transpose();
  speech[1].row(t) = f.speech[1].transpose();
  noise.row(t) = f.noise.transpose();
}

void MaskSet::validate() const {
  for (const auto* m : {&speech[0], &speech[1], &noise}) {
    if (m->rows() != noise.rows() || m->cols() != noise.cols())
      throw std::invalid_argument("mask set: shape mismatch");
    if (m->size() > 0 &&
        (m->minCoeff() < -1e-9 || m->maxCoeff() > 1.0 + 1e-9))
      throw std::invalid_argument("mask set: values outside [0, 1]");
  }
}

MaskSet oracle_masks(const std::vector<Eigen::MatrixXcd>& source_specs,
                     const Eigen::MatrixXcd& noise_spec,
                     const Eigen::MatrixXcd& mixture_spec, double eps) {
  if (source_specs.empty() || source_specs.size() > 2)
    throw std::invalid_argument("oracle_masks: need one or two sources");
  const auto rows = noise_spec.rows();
  const auto cols = noise_spec.cols();
  for (const auto& s : source_specs)
    if (s.rows() != rows || s.cols() != cols)
      throw std::invalid_argument("oracle_masks: shape mismatch");
  if (mixture_spec.rows() != rows || mixture_spec.cols() != cols)
    throw std::invalid_argument("oracle_masks: shape mismatch");

  MaskSet out(static_cast<int>(rows), static_cast<int>(cols));
  Eigen::MatrixXd mags[2];
  mags[0] = source_specs[0].cwiseAbs();
  mags[1] = source_specs.size() > 1
                ? Eigen::MatrixXd(source_specs[1].cwiseAbs())
                : Eigen::MatrixXd::Zero(rows, cols);
  const Eigen::MatrixXd noise_mag = noise_spec.cwiseAbs();
  for (Eigen::Index t = 0; t < rows; ++t) {
    for (Eigen::Index k = 0; k < cols; ++k) {
      const double sum = mags[0](t, k) + mags[1](t, k) + noise_mag(t, k);
      if (sum < eps) continue;  // masks stay zero
      out.speech[0](t, k) = mags[0](t, k) / (sum + eps);
      out.speech[1](t, k) = mags[1](t, k) / (sum + eps);
      out.noise(t, k) = noise_mag(t, k) / (sum + eps);
    }
  }
  return out;
}

PitResult pit_mse_loss(const std::vector<Eigen::MatrixXd>& estimated,
                       const std::vector<Eigen::MatrixXd>& references) {
  const size_t k = estimated.size();
  if (k == 0 || references.size() != k)
    throw std::invalid_argument("pit_mse_loss: need K >= 1 matching sets");
  if (k > 8) throw std::invalid_argument("pit_mse_loss: K too large");
  const auto rows = estimated[0].rows();
  const auto cols = estimated[0].cols();
  for (const auto* group : {&estimated, &references})
    for (const auto& m : *group)
      if (m.rows() != rows || m.cols() != cols)
        throw std::invalid_argument("pit_mse_loss: shape mismatch");

  // Scalar accumulation in storage order keeps the cost values exactly
  // reproducible by an independent elementwise enumeration.
  const double n = static_cast<double>(rows) * static_cast<double>(cols);
  Eigen::MatrixXd cost(k, k);
  for (size_t i = 0; i < k; ++i)
    for (size_t j = 0; j < k; ++j) {
      double acc = 0.0;
      for (Eigen::Index e = 0; e < estimated[i].size(); ++e) {
        const double d = estimated[i](e) - references[j](e);
        acc += d * d;
      }
      cost(i, j) = acc / n;
    }

  std::vector<int> perm(k);
  std::iota(perm.begin(), perm.end(), 0);
  PitResult best;
  best.loss = std::numeric_limits<double>::infinity();
  // next_permutation enumerates in lexicographic order, so keeping the
  // first strict minimum yields the lexicographically smallest tie.
  do {
    double loss = 0.0;
    for (size_t i = 0; i < k; ++i) loss += cost(i, perm[i]);
    if (loss < best.loss) {
      best.loss = loss;
      best.permutation = perm;
    }
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

int lookahead_frames(const std::vector<int>& layer_lookaheads) {
  int total = 0;
  for (int v : layer_lookaheads) {
    if (v < 0) throw std::invalid_argument("negative layer look-ahead");
    total += v;
  }
  return total;
}

ChannelOrder align_permutation(const MaskSet& prev_tail,
                               const MaskSet& cur_head,
                               const Eigen::MatrixXd& ref_magnitude) {
  if (prev_tail.num_frames() == 0)
    throw std::invalid_argument("align_permutation: empty overlap");
  if (prev_tail.num_frames() != cur_head.num_frames() ||
      prev_tail.num_bins() != cur_head.num_bins() ||
      ref_magnitude.rows() != prev_tail.num_frames() ||
      ref_magnitude.cols() != prev_tail.num_bins())
    throw std::invalid_argument("align_permutation: shape mismatch");

  Eigen::MatrixXd a0 = prev_tail.speech[0].cwiseProduct(ref_magnitude);
  Eigen::MatrixXd a1 = prev_tail.speech[1].cwiseProduct(ref_magnitude);
  Eigen::MatrixXd b0 = cur_head.speech[0].cwiseProduct(ref_magnitude);
  Eigen::MatrixXd b1 = cur_head.speech[1].cwiseProduct(ref_magnitude);
  const double identity = (b0 - a0).squaredNorm() + (b1 - a1).squaredNorm();
  const double swapped = (b0 - a1).squaredNorm() + (b1 - a0).squaredNorm();
  return swapped < identity ? ChannelOrder::kSwap : ChannelOrder::kIdentity;
}

// ---------------------------------------------------------------------------
// Estimators

namespace {

class OracleEstimator : public MaskEstimator {
 public:
  OracleEstimator(std::shared_ptr<const MaskSet> masks, int start,
                  int lookahead)
      : masks_(std::move(masks)), start_(start), lookahead_(lookahead) {}

  int lookahead() const override { return lookahead_; }
  void reset() override { consumed_ = emitted_ = 0; }

  std::vector<MaskFrame> push(const FeatureFrame&) override {
    ++consumed_;
    std::vector<MaskFrame> out;
    while (emitted_ + lookahead_ < consumed_) out.push_back(take());
    return out;
  }

  std::vector<MaskFrame> flush() override {
    std::vector<MaskFrame> out;
    while (emitted_ < consumed_) out.push_back(take());
    return out;
  }

 private:
  MaskFrame take() {
    const int global = start_ + emitted_;
    if (global >= masks_->num_frames())
      throw std::out_of_range("oracle estimator: frame beyond mask data");
    ++emitted_;
    return masks_->frame(global);
  }

  std::shared_ptr<const MaskSet> masks_;
  int start_;
  int lookahead_;
  int consumed_ = 0;
  int emitted_ = 0;
};

class AdversarialEstimator : public MaskEstimator {
 public:
  AdversarialEstimator(std::unique_ptr<MaskEstimator> inner, bool swap)
      : inner_(std::move(inner)), swap_(swap) {}
  int lookahead() const override { return inner_->lookahead(); }
  void reset() override { inner_->reset(); }
  std::vector<MaskFrame> push(const FeatureFrame& f) override {
    return maybe_swap(inner_->push(f));
  }
  std::vector<MaskFrame> flush() override { return maybe_swap(inner_->flush()); }

 private:
  std::vector<MaskFrame> maybe_swap(std::vector<MaskFrame> frames) {
    if (swap_)
      for (auto& f : frames) std::swap(f.speech[0], f.speech[1]);
    return frames;
  }
  std::unique_ptr<MaskEstimator> inner_;
  bool swap_;
};

class FaultyEstimator : public MaskEstimator {
 public:
  FaultyEstimator(std::unique_ptr<MaskEstimator> inner, int extra)
      : inner_(std::move(inner)), extra_(extra) {}
  int lookahead() const override { return inner_->lookahead(); }
  void reset() override {
    inner_->reset();
    queue_.clear();
    pushes_ = 0;
  }

  std::vector<MaskFrame> push(const FeatureFrame& f) override {
    ++pushes_;
    last_feature_mean_ = f.ref_magnitude.size() > 0
                             ? f.ref_magnitude.mean()
                             : 0.0;
    for (auto& m : inner_->push(f)) queue_.push_back({pushes_ + extra_, m});
    std::vector<MaskFrame> out;
    while (!queue_.empty() && queue_.front().due <= pushes_) {
      out.push_back(taint(queue_.front().masks));
      queue_.pop_front();
    }
    return out;
  }

  std::vector<MaskFrame> flush() override {
    for (auto& m : inner_->flush()) queue_.push_back({0, m});
    std::vector<MaskFrame> out;
    for (auto& item : queue_) out.push_back(taint(item.masks));
    queue_.clear();
    return out;
  }

 private:
  // Mixes the newest feature into the mask so the content genuinely
  // depends on frames beyond the declared look-ahead.
  MaskFrame taint(const MaskFrame& m) const {
    const double s = 1e-4 * std::tanh(last_feature_mean_);
    MaskFrame out = m;
    for (auto* v : {&out.speech[0], &out.speech[1], &out.noise})
      *v = (v->array() * (1.0 - s)).cwiseMin(1.0).cwiseMax(0.0).matrix();
    return out;
  }

  struct Pending {
    long due;
    MaskFrame masks;
  };
  std::unique_ptr<MaskEstimator> inner_;
  int extra_;
  std::deque<Pending> queue_;
  long pushes_ = 0;
  double last_feature_mean_ = 0.0;
};

class BaselineEstimator : public MaskEstimator {
 public:
  BaselineEstimator(std::shared_ptr<const SteeringTable> table,
                    BaselineParams params)
      : table_(std::move(table)), p_(params) {
    const int angles = table_->num_angles();
    profile_sum_ = Eigen::VectorXd::Zero(angles);
  }

  int lookahead() const override { return p_.lookahead; }

  void reset() override {
    pending_.clear();
    profiles_.clear();
    profile_sum_.setZero();
    consumed_ = emitted_ = 0;
  }

  std::vector<MaskFrame> push(const FeatureFrame& f) override {
    ingest(f);
    std::vector<MaskFrame> out;
    while (emitted_ + p_.lookahead < consumed_) out.push_back(emit());
    return out;
  }

  std::vector<MaskFrame> flush() override {
    std::vector<MaskFrame> out;
    while (emitted_ < consumed_) out.push_back(emit());
    return out;
  }

 private:
  void ingest(const FeatureFrame& f) {
    const int bins = static_cast<int>(f.ref_magnitude.size());
    const int mics = table_->num_channels();
    const int ref = table_->geometry().reference_index;
    const double scale = 1.0 / std::sqrt(static_cast<double>(mics));

    // Pseudo observation from IPDs: unit magnitude per channel, the
    // reference at zero phase. Plane waves have flat inter-channel
    // magnitude, so this retains the directional information.
    Eigen::MatrixXcd zhat(mics, bins);
    int row = 0;
    for (int m = 0; m < mics; ++m) {
      if (m == ref) {
        zhat.row(m).setConstant(scale);
        continue;
      }
      for (int k = 0; k < bins; ++k)
        zhat(m, k) = std::polar(scale, -f.ipd(row, k));
      ++row;
    }

    // Energy-weighted direction evidence for this frame.
    const double energy = f.ref_magnitude.squaredNorm();
    Eigen::VectorXd profile = Eigen::VectorXd::Zero(table_->num_angles());
    if (energy > 0.0) {
      Eigen::VectorXcd resp(table_->num_angles());
      for (int k = 0; k < bins; ++k) {
        const double w = f.ref_magnitude[k] * f.ref_magnitude[k] / energy;
        if (w <= 0.0) continue;
        resp.noalias() = table_->bin_matrix(k) * zhat.col(k).conjugate();
        profile += w * resp.cwiseAbs2();
      }
    }
    profiles_.push_back(profile);
    profile_sum_ += profile;
    if (static_cast<int>(profiles_.size()) > p_.profile_window) {
      profile_sum_ -= profiles_.front();
      profiles_.pop_front();
    }
    pending_.push_back({f.ref_magnitude, std::move(zhat)});
    ++consumed_;
  }

  MaskFrame emit() {
    const auto& grid = table_->angle_grid();
    int a1 = 0;
    profile_sum_.maxCoeff(&a1);
    int a2 = -1;
    double best = -1.0;
    for (int a = 0; a < static_cast<int>(grid.size()); ++a) {
      if (circular_distance_deg(grid[a], grid[a1]) < p_.min_separation_deg)
        continue;
      if (profile_sum_[a] > best) {
        best = profile_sum_[a];
        a2 = a;
      }
    }
    if (a2 < 0) a2 = a1;  // degenerate grid

    const Pending& cur = pending_.front();
    const int bins = static_cast<int>(cur.ref_magnitude.size());
    const int mics = table_->num_channels();
    const double floor = p_.noise_floor / mics;
    MaskFrame f;
    for (auto* v : {&f.speech[0], &f.speech[1]})
      v->resize(bins);
    f.noise.resize(bins);
    for (int k = 0; k < bins; ++k) {
      const Eigen::VectorXcd z = cur.zhat.col(k);
      const double e1 =
          std::abs(z.dot(table_->bin_matrix(k).row(a1).transpose()));
      const double e2 =
          std::abs(z.dot(table_->bin_matrix(k).row(a2).transpose()));
      const double q1 = e1 * e1, q2 = e2 * e2;
      const double denom = q1 + q2 + floor;
      f.speech[0][k] = q1 / denom;
      f.speech[1][k] = q2 / denom;
      f.noise[k] = floor / denom;
    }
    pending_.pop_front();
    ++emitted_;
    return f;
  }

  struct Pending {
    Eigen::VectorXd ref_magnitude;
    Eigen::MatrixXcd zhat;
  };

  std::shared_ptr<const SteeringTable> table_;
  BaselineParams p_;
  std::deque<Pending> pending_;
  std::deque<Eigen::VectorXd> profiles_;
  Eigen::VectorXd profile_sum_;
  int consumed_ = 0;
  int emitted_ = 0;
};

}  // namespace

EstimatorFactory oracle_estimator_factory(std::shared_ptr<const MaskSet> masks,
                                          int lookahead) {
  if (lookahead < 0) throw std::invalid_argument("negative look-ahead");
  return [masks, lookahead](const BufferContext& ctx) {
    return std::make_unique<OracleEstimator>(masks, ctx.start_frame,
                                             lookahead);
  };
}

EstimatorFactory adversarial_estimator_factory(EstimatorFactory inner) {
  return [inner = std::move(inner)](const BufferContext& ctx) {
    return std::make_unique<AdversarialEstimator>(inner(ctx),
                                                  ctx.buffer_index % 2 != 0);
  };
}

EstimatorFactory faulty_estimator_factory(EstimatorFactory inner, int extra) {
  if (extra < 1) throw std::invalid_argument("faulty estimator: extra >= 1");
  return [inner = std::move(inner), extra](const BufferContext& ctx) {
    return std::make_unique<FaultyEstimator>(inner(ctx), extra);
  };
}

EstimatorFactory baseline_estimator_factory(
    std::shared_ptr<const SteeringTable> table, BaselineParams params) {
  if (!table) throw std::invalid_argument("baseline estimator: null table");
  return [table, params](const BufferContext&) {
    return std::make_unique<BaselineEstimator>(table, params);
  };
}

// ---------------------------------------------------------------------------
// Double-buffering stitcher

struct MaskStitcher::Buffer {
  int index = 0;
  int start = 0;
  int emit_begin = 0;
  int emit_end = 0;
  std::unique_ptr<MaskEstimator> estimator;
  std::vector<MaskFrame> raw;  // raw[i] is the mask for frame start + i
  bool window_done = false;
  bool order_fixed = false;
  ChannelOrder order = ChannelOrder::kIdentity;
};

MaskStitcher::MaskStitcher(EstimatorFactory factory, StitchConfig config)
    : factory_(std::move(factory)), config_(config) {
  if (config_.buffer_frames < 2 || config_.buffer_frames % 2 != 0)
    throw std::invalid_argument("stitcher: buffer_frames must be even >= 2");
  half_ = config_.buffer_frames / 2;
  lookahead_ = factory_(BufferContext{0, 0})->lookahead();
  if (lookahead_ < 0)
    throw std::invalid_argument("stitcher: negative declared look-ahead");
}

MaskStitcher::~MaskStitcher() = default;

void MaskStitcher::spawn_buffer(int start_frame) {
  auto b = std::make_unique<Buffer>();
  b->index = start_frame / half_;
  b->start = start_frame;
  b->emit_begin = b->index == 0 ? 0 : start_frame + half_;
  b->emit_end = start_frame + config_.buffer_frames;
  b->estimator = factory_(BufferContext{b->index, b->start});
  b->order_fixed = b->index == 0;  // buffer 0 is the order anchor
  buffers_.push_back(std::move(b));
}

void MaskStitcher::feed_buffer(Buffer& b, const FeatureFrame& f) {
  auto frames = b.estimator->push(f);
  for (auto& m : frames) b.raw.push_back(std::move(m));
  if (f.frame_index == b.start + config_.buffer_frames - 1) {
    for (auto& m : b.estimator->flush()) b.raw.push_back(std::move(m));
    b.estimator.reset();
    b.window_done = true;
  }
}

void MaskStitcher::try_fix_order(Buffer& b) {
  if (b.order_fixed) return;
  const int have = static_cast<int>(b.raw.size());
  if (have < half_) return;

  // Previous buffer: the one emitting up to this buffer's second half.
  Buffer* prev = nullptr;
  for (auto& other : buffers_)
    if (other->emit_end == b.start + half_) prev = other.get();
  if (prev == nullptr || !prev->order_fixed) return;
  const int prev_have = static_cast<int>(prev->raw.size());
  if (prev->start + prev_have < b.start + half_) return;

  const int bins = static_cast<int>(b.raw[0].speech[0].size());
  MaskSet prev_tail(half_, bins), cur_head(half_, bins);
  Eigen::MatrixXd refmag(half_, bins);
  for (int i = 0; i < half_; ++i) {
    const int global = b.start + i;
    MaskFrame pf = prev->raw[global - prev->start];
    if (prev->order == ChannelOrder::kSwap)
      std::swap(pf.speech[0], pf.speech[1]);
    prev_tail.set_frame(i, pf);
    cur_head.set_frame(i, b.raw[i]);
    refmag.row(i) =
        ref_magnitude_[global - ref_base_].transpose();
  }
  b.order = align_permutation(prev_tail, cur_head, refmag);
  b.order_fixed = true;
}

std::vector<StitchedFrame> MaskStitcher::release_ready(bool draining) {
  std::vector<StitchedFrame> out;
  for (;;) {
    Buffer* owner = nullptr;
    for (auto& b : buffers_)
      if (b->emit_begin <= next_release_ && next_release_ < b->emit_end)
        owner = b.get();
    if (owner == nullptr) break;

    const bool scheduled = clock_ >= next_release_ + lookahead_;
    if (!draining && !scheduled) break;
    const int local = next_release_ - owner->start;
    const bool available =
        owner->order_fixed && local < static_cast<int>(owner->raw.size());
    if (!available) {
      // An honest estimator has emitted this frame by its scheduled
      // clock; running late means the declaration was violated.
      if (scheduled && !draining) lookahead_violated_ = true;
      break;
    }
    StitchedFrame sf;
    sf.frame_index = next_release_;
    sf.masks = owner->raw[local];
    if (owner->order == ChannelOrder::kSwap)
      std::swap(sf.masks.speech[0], sf.masks.speech[1]);
    out.push_back(std::move(sf));
    ++next_release_;
  }

  // Drop buffers that emitted everything and are no longer an alignment
  // reference for a pending buffer.
  std::erase_if(buffers_, [this](const std::unique_ptr<Buffer>& b) {
    if (next_release_ < b->emit_end) return false;
    for (const auto& other : buffers_)
      if (!other->order_fixed && other->start + half_ == b->emit_end)
        return false;
    return b->window_done;
  });
  // Prune the reference-magnitude store to what alignment can still need.
  const long keep_from =
      std::max<long>(0, static_cast<long>(clock_) - 2L * config_.buffer_frames);
  while (ref_base_ < keep_from && !ref_magnitude_.empty()) {
    ref_magnitude_.pop_front();
    ++ref_base_;
  }
  return out;
}

std::vector<StitchedFrame> MaskStitcher::push(const FeatureFrame& features) {
  if (features.frame_index != clock_ + 1)
    throw std::invalid_argument("stitcher: non-contiguous feature stream");
  clock_ = features.frame_index;
  ref_magnitude_.push_back(features.ref_magnitude);

  if (clock_ % half_ == 0) spawn_buffer(clock_);
  for (auto& b : buffers_)
    if (b->estimator && b->start <= clock_ &&
        clock_ < b->start + config_.buffer_frames)
      feed_buffer(*b, features);
  for (auto& b : buffers_) try_fix_order(*b);
  return release_ready(false);
}

std::vector<StitchedFrame> MaskStitcher::finish() {
  for (auto& b : buffers_) {
    if (b->estimator) {
      for (auto& m : b->estimator->flush()) b->raw.push_back(std::move(m));
      b->estimator.reset();
      b->window_done = true;
    }
  }
  // Fix any pending order with whatever overlap exists.
  for (auto& b : buffers_) {
    if (b->order_fixed) continue;
    Buffer* prev = nullptr;
    for (auto& other : buffers_)
      if (other->emit_end == b->start + half_) prev = other.get();
    int overlap = static_cast<int>(b->raw.size());
    if (prev != nullptr && prev->order_fixed) {
      overlap = std::min(
          overlap, prev->start + static_cast<int>(prev->raw.size()) - b->start);
    } else {
      prev = nullptr;
    }
    if (prev == nullptr || overlap <= 0) {
      b->order = ChannelOrder::kIdentity;
      b->order_fixed = true;
      continue;
    }
    const int bins = static_cast<int>(b->raw[0].speech[0].size());
    MaskSet prev_tail(overlap, bins), cur_head(overlap, bins);
    Eigen::MatrixXd refmag(overlap, bins);
    for (int i = 0; i < overlap; ++i) {
      const int global = b->start + i;
      MaskFrame pf = prev->raw[global - prev->start];
      if (prev->order == ChannelOrder::kSwap)
        std::swap(pf.speech[0], pf.speech[1]);
      prev_tail.set_frame(i, pf);
      cur_head.set_frame(i, b->raw[i]);
      refmag.row(i) = ref_magnitude_[global - ref_base_].transpose();
    }
    b->order = align_permutation(prev_tail, cur_head, refmag);
    b->order_fixed = true;
  }
  return release_ready(true);
}

MaskSet stitch_stream(const EstimatorFactory& factory,
                      const std::vector<FeatureFrame>& features,
                      StitchConfig config) {
  MaskStitcher stitcher(factory, config);
  std::vector<StitchedFrame> all;
  for (const auto& f : features)
    for (auto& s : stitcher.push(f)) all.push_back(std::move(s));
  for (auto& s : stitcher.finish()) all.push_back(std::move(s));

  if (all.empty()) return MaskSet(0, 0);
  const int bins = static_cast<int>(all[0].masks.speech[0].size());
  MaskSet out(static_cast<int>(all.size()), bins);
  for (const auto& s : all) out.set_frame(s.frame_index, s.masks);
  return out;
}

// ---------------------------------------------------------------------------
// Mask dump

namespace {
constexpr char kMaskMagic[4] = {'M', 'S', 'K', 'B'};
constexpr uint32_t kMaskVersion = 1;

void write_plane(std::ofstream& out, const Eigen::MatrixXd& m) {
  std::vector<float> row(m.cols());
  for (Eigen::Index t = 0; t < m.rows(); ++t) {
    for (Eigen::Index k = 0; k < m.cols(); ++k)
      row[k] = static_cast<float>(m(t, k));
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(row.size() * sizeof(float)));
  }
}

Eigen::MatrixXd read_plane(std::ifstream& in, uint32_t frames, uint32_t bins) {
  Eigen::MatrixXd m(frames, bins);
  std::vector<float> row(bins);
  for (uint32_t t = 0; t < frames; ++t) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(row.size() * sizeof(float)));
    if (!in) throw std::runtime_error("mask file: truncated");
    for (uint32_t k = 0; k < bins; ++k) m(t, k) = row[k];
  }
  return m;
}
}  // namespace

void save_masks(const MaskSet& masks, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write mask file: " + path);
  out.write(kMaskMagic, 4);
  const uint32_t version = kMaskVersion;
  const uint32_t frames = static_cast<uint32_t>(masks.num_frames());
  const uint32_t bins = static_cast<uint32_t>(masks.num_bins());
  out.write(reinterpret_cast<const char*>(&version), sizeof(version));
  out.write(reinterpret_cast<const char*>(&frames), sizeof(frames));
  out.write(reinterpret_cast<const char*>(&bins), sizeof(bins));
  write_plane(out, masks.speech[0]);
  write_plane(out, masks.speech[1]);
  write_plane(out, masks.noise);
}

MaskSet load_masks(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open mask file: " + path);
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, kMaskMagic, 4) != 0)
    throw std::runtime_error("mask file: bad magic");
  uint32_t version = 0, frames = 0, bins = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof(version));
  in.read(reinterpret_cast<char*>(&frames), sizeof(frames));
  in.read(reinterpret_cast<char*>(&bins), sizeof(bins));
  if (!in || version != kMaskVersion)
    throw std::runtime_error("mask file: unsupported version");
  MaskSet out(static_cast<int>(frames), static_cast<int>(bins));
  out.speech[0] = read_plane(in, frames, bins);
  out.speech[1] = read_plane(in, frames, bins);
  out.noise = read_plane(in, frames, bins);
  return out;
}

}  // namespace streamsep

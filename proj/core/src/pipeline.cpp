#include "streamsep/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <deque>
#include <random>
#include <sstream>
#include <stdexcept>

namespace streamsep {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct EnhancedFrame {
  std::array<Eigen::VectorXcd, 2> bins;
};

// Frame-driven engine: consumes one spectrogram frame per input frame
// and advances every downstream stage as far as its dependencies allow.
class PipelineEngine {
 public:
  PipelineEngine(const PipelineConfig& config, const BeamformerBank& bank,
                 std::shared_ptr<const SteeringTable> table,
                 EstimatorFactory factory, const OracleResources* oracle,
                 bool strict, StageTimes* times)
      : config_(config),
        bank_(bank),
        table_(std::move(table)),
        oracle_(oracle),
        strict_(strict),
        times_(times),
        stitcher_(std::move(factory), config.stitch),
        tracker_(table_, config.schedule),
        synth_{OverlapAddSynth(config.frame), OverlapAddSynth(config.frame)},
        first_governed_(config.schedule.first_governed_frame()) {
    sep_[0].reserve(1 << 20);
    sep_[1].reserve(1 << 20);
  }

  void push_frame(int n, Eigen::MatrixXcd frame) {
    input_clock_ = n;

    auto t0 = Clock::now();
    FeatureFrame features = extract_feature_frame(
        frame, config_.geometry.reference_index, n);
    times_->features_s += seconds_since(t0);

    spec_frames_.push_back(std::move(frame));

    t0 = Clock::now();
    auto stitched = stitcher_.push(features);
    if (stitcher_.lookahead_violated()) handle_violation();
    times_->separation_s += seconds_since(t0);

    t0 = Clock::now();
    ingest_masks(std::move(stitched));
    times_->ssl_s += seconds_since(t0);

    drain(false);
  }

  void finish() {
    auto t0 = Clock::now();
    auto stitched = stitcher_.finish();
    if (stitcher_.lookahead_violated()) handle_violation();
    times_->separation_s += seconds_since(t0);

    t0 = Clock::now();
    ingest_masks(std::move(stitched));
    times_->ssl_s += seconds_since(t0);

    drain(true);

    t0 = Clock::now();
    for (int i = 0; i < 2; ++i) append(i, synth_[i].flush());
    times_->synthesis_s += seconds_since(t0);
  }

  const std::array<std::vector<double>, 2>& separated() const { return sep_; }
  const std::vector<TrackEntry>& entries() const { return entries_; }
  const std::vector<StitchedFrame>& mask_log() const { return mask_log_; }
  int measured_latency() const { return measured_latency_; }
  bool violation() const { return violation_; }

 private:
  void handle_violation() {
    violation_ = true;
    if (strict_)
      throw std::runtime_error(
          "separation stage: mask estimator exceeded its declared look-ahead");
  }

  void ingest_masks(std::vector<StitchedFrame> stitched) {
    for (auto& sf : stitched) {
      auto entry = tracker_.push(spec_frames_[sf.frame_index - spec_base_],
                                 sf.masks.speech[0], sf.masks.speech[1]);
      if (entry) entries_.push_back(*entry);
      mask_clock_ = sf.frame_index;
      mask_log_.push_back(std::move(sf));
    }
  }

  const TrackEntry* entry_covering(int frame) {
    while (entry_cursor_ < entries_.size() &&
           entries_[entry_cursor_].end_frame <= frame)
      ++entry_cursor_;
    if (entry_cursor_ < entries_.size() &&
        entries_[entry_cursor_].begin_frame <= frame)
      return &entries_[entry_cursor_];
    return nullptr;
  }

  void drain(bool draining) {
    for (;;) {
      const int m = next_out_;
      if (m > input_clock_ || m > mask_clock_) break;

      const TrackEntry* entry = nullptr;
      if (m >= first_governed_) {
        entry = entry_covering(m);
        if (entry == nullptr) {
          if (!draining) break;
          // Stream ended before a decision covered this frame: hold the
          // last estimate, or startup defaults when none exists.
          if (!entries_.empty()) entry = &entries_.back();
        }
      }

      auto t0 = Clock::now();
      const MaskFrame& masks = mask_log_[m].masks;
      EnhancedFrame out = enhance(m, masks, entry);
      times_->enhancement_s += seconds_since(t0);

      t0 = Clock::now();
      for (int i = 0; i < 2; ++i) append(i, synth_[i].push(out.bins[i]));
      times_->synthesis_s += seconds_since(t0);

      measured_latency_ = std::max(measured_latency_, input_clock_ - m);
      ++next_out_;
      // Frames before m are no longer needed by enhancement; keep a
      // margin for the tracker which reads frames at the mask clock.
      while (spec_base_ < next_out_ && spec_base_ < mask_clock_ - 1 &&
             !spec_frames_.empty()) {
        spec_frames_.pop_front();
        ++spec_base_;
      }
    }
  }

  EnhancedFrame enhance(int m, const MaskFrame& masks,
                        const TrackEntry* entry) {
    // Channel 0 targets the first mask's direction, channel 1 the
    // second; each treats the other as interference.
    double target[2] = {0.0, 180.0};
    if (entry != nullptr) {
      target[0] = entry->target_deg;
      target[1] = entry->interference_deg;
    }
    EnhancedFrame out;
    for (int i = 0; i < 2; ++i) {
      const int beam = entry == nullptr ? 0 : select_beam(bank_, target[i]);
      Eigen::VectorXcd y =
          apply_beam_frame(bank_, beam, spec_frames_[m - spec_base_]);
      switch (config_.post_filter) {
        case PostFilterChoice::kMaskReuse:
          y = y.cwiseProduct(masks.speech[i].cast<std::complex<double>>());
          break;
        case PostFilterChoice::kOracle: {
          const Eigen::MatrixXcd& clean = oracle_->clean_ref_specs[i];
          for (int k = 0; k < y.size(); ++k) {
            const double want = std::abs(clean(m, k));
            const double have = std::abs(y[k]);
            y[k] *= std::min(1.0, want / (have + 1e-12));
          }
          break;
        }
        case PostFilterChoice::kPassthrough:
          break;
      }
      out.bins[i] = std::move(y);
    }
    return out;
  }

  void append(int channel, const Eigen::VectorXd& samples) {
    sep_[channel].insert(sep_[channel].end(), samples.data(),
                         samples.data() + samples.size());
  }

  const PipelineConfig& config_;
  const BeamformerBank& bank_;
  std::shared_ptr<const SteeringTable> table_;
  const OracleResources* oracle_;
  bool strict_;
  StageTimes* times_;

  MaskStitcher stitcher_;
  SslTracker tracker_;
  std::array<OverlapAddSynth, 2> synth_;
  int first_governed_;

  std::deque<Eigen::MatrixXcd> spec_frames_;
  int spec_base_ = 0;
  std::vector<StitchedFrame> mask_log_;
  std::vector<TrackEntry> entries_;
  size_t entry_cursor_ = 0;
  std::array<std::vector<double>, 2> sep_;

  int input_clock_ = -1;
  int mask_clock_ = -1;
  int next_out_ = 0;
  int measured_latency_ = 0;
  bool violation_ = false;
};

EstimatorFactory make_factory(const PipelineConfig& config,
                              std::shared_ptr<const SteeringTable> table,
                              const OracleResources* oracle) {
  auto base = [&]() -> EstimatorFactory {
    if (oracle != nullptr && oracle->masks)
      return oracle_estimator_factory(oracle->masks,
                                      config.estimator_lookahead);
    BaselineParams params = config.baseline;
    params.lookahead = config.estimator_lookahead;
    return baseline_estimator_factory(table, params);
  };
  switch (config.estimator) {
    case EstimatorChoice::kOracle:
      if (oracle == nullptr || !oracle->masks)
        throw std::invalid_argument(
            "oracle estimator requires ground-truth resources");
      return oracle_estimator_factory(oracle->masks,
                                      config.estimator_lookahead);
    case EstimatorChoice::kBaseline: {
      BaselineParams params = config.baseline;
      params.lookahead = config.estimator_lookahead;
      return baseline_estimator_factory(table, params);
    }
    case EstimatorChoice::kAdversarial:
      return adversarial_estimator_factory(base());
    case EstimatorChoice::kFaulty:
      return faulty_estimator_factory(base());
  }
  throw std::logic_error("unknown estimator choice");
}

std::string echo_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "sample_rate=" << c.frame.sample_rate
      << " frame_shift=" << c.frame.frame_shift
      << " frame_length=" << c.frame.frame_length
      << " mics=" << c.geometry.num_mics()
      << " estimator=" << to_string(c.estimator)
      << " post_filter=" << to_string(c.post_filter)
      << " lookahead=" << c.estimator_lookahead
      << " buffer_frames=" << c.stitch.buffer_frames
      << " ssl_window=" << c.schedule.window_frames
      << " ssl_stride=" << c.schedule.stride_frames
      << " ssl_margin=" << c.schedule.margin_frames
      << " ssl_epsilon=" << c.schedule.epsilon
      << " grid_step=" << c.ssl_grid_step_deg
      << " beams=" << c.num_beams
      << " loading=" << c.diagonal_loading;
  return out.str();
}

}  // namespace

const char* to_string(EstimatorChoice c) {
  switch (c) {
    case EstimatorChoice::kOracle: return "oracle";
    case EstimatorChoice::kBaseline: return "baseline";
    case EstimatorChoice::kAdversarial: return "adversarial";
    case EstimatorChoice::kFaulty: return "faulty";
  }
  return "?";
}

const char* to_string(PostFilterChoice c) {
  switch (c) {
    case PostFilterChoice::kMaskReuse: return "mask-reuse";
    case PostFilterChoice::kOracle: return "oracle";
    case PostFilterChoice::kPassthrough: return "passthrough";
  }
  return "?";
}

void PipelineConfig::validate() const {
  frame.validate();
  geometry.validate();
  schedule.validate();
  if (estimator_lookahead < 0)
    throw std::invalid_argument("pipeline: negative look-ahead");
  if (estimator_lookahead > stitch.buffer_frames)
    throw std::invalid_argument("pipeline: look-ahead exceeds buffer");
  if (num_beams < 1) throw std::invalid_argument("pipeline: no beams");
  if (ssl_grid_step_deg <= 0 || ssl_grid_step_deg > 360)
    throw std::invalid_argument("pipeline: bad ssl grid step");
}

OutputStreams run_pipeline(const std::vector<Eigen::VectorXd>& input,
                           const PipelineConfig& config,
                           const PipelineOptions& options) {
  const auto wall0 = Clock::now();
  config.validate();
  if (static_cast<int>(input.size()) != config.geometry.num_mics())
    throw std::invalid_argument(
        "pipeline: input channel count does not match geometry");
  const long num_samples = input.empty() ? 0 : input[0].size();
  for (const auto& ch : input)
    if (ch.size() != num_samples)
      throw std::invalid_argument("pipeline: channel length mismatch");
  if (num_samples < config.frame.frame_length)
    throw std::invalid_argument("pipeline: input shorter than one frame");
  if ((config.estimator == EstimatorChoice::kOracle ||
       config.post_filter == PostFilterChoice::kOracle) &&
      options.oracle == nullptr)
    throw std::invalid_argument(
        "pipeline: oracle mode requires ground-truth resources");
  if (config.post_filter == PostFilterChoice::kOracle &&
      options.oracle->clean_ref_specs.size() < 2)
    throw std::invalid_argument(
        "pipeline: oracle post-filter needs two clean reference spectrograms");

  StageTimes times;
  auto t0 = Clock::now();
  BeamformerBank bank =
      config.beam_bank_path
          ? load_bank(*config.beam_bank_path)
          : design_bank(config.geometry, config.frame, config.diagonal_loading,
                        config.num_beams);
  if (bank.num_channels() != config.geometry.num_mics() ||
      bank.num_bins() != config.frame.num_bins())
    throw std::invalid_argument("pipeline: beam bank does not match config");
  auto table = std::make_shared<const SteeringTable>(
      config.geometry, uniform_angle_grid(config.ssl_grid_step_deg),
      config.frame);
  EstimatorFactory factory = make_factory(config, table, options.oracle);
  times.setup_s = seconds_since(t0);

  PipelineEngine engine(config, bank, table, std::move(factory),
                        options.oracle, options.strict_lookahead, &times);
  FrameAnalyzer analyzer(static_cast<int>(input.size()), config.frame);
  const int frames = config.frame.num_frames(num_samples);
  for (int n = 0; n < frames; ++n) {
    t0 = Clock::now();
    Eigen::MatrixXcd frame = analyzer.analyze(input, n);
    times.stft_s += seconds_since(t0);
    engine.push_frame(n, std::move(frame));
  }
  engine.finish();

  // Align the output streams: sample k carries content k - latency.
  const long latency_samples = static_cast<long>(
      config.total_latency_frames() * config.frame.frame_shift);
  OutputStreams out;
  out.sample_rate = config.frame.sample_rate;
  for (int i = 0; i < 2; ++i) {
    const auto& sep = engine.separated()[i];
    out.channels[i] = Eigen::VectorXd::Zero(num_samples);
    for (long k = latency_samples; k < num_samples; ++k) {
      const long j = k - latency_samples;
      if (j < static_cast<long>(sep.size())) out.channels[i][k] = sep[j];
    }
  }

  times.total_s = seconds_since(wall0);
  if (options.report != nullptr) {
    RunReport& r = *options.report;
    r.stages = times;
    r.audio_duration_s =
        static_cast<double>(num_samples) / config.frame.sample_rate;
    r.rtf = times.total_s / r.audio_duration_s;
    r.declared_latency_frames = config.total_latency_frames();
    r.measured_latency_frames = engine.measured_latency();
    r.lookahead_violation = engine.violation();
    r.config_echo = echo_config(config);
  }
  if (options.dumps != nullptr) {
    const auto& log = engine.mask_log();
    if (!log.empty()) {
      const int bins = static_cast<int>(log[0].masks.speech[0].size());
      options.dumps->masks = MaskSet(static_cast<int>(log.size()), bins);
      for (const auto& sf : log)
        options.dumps->masks.set_frame(sf.frame_index, sf.masks);
    }
    options.dumps->track.entries = engine.entries();
    if (!options.dumps->track.entries.empty())
      options.dumps->track.entries.front().begin_frame = 0;
  }
  return out;
}

bool AuditReport::all_pass() const {
  for (const auto& p : probes)
    if (!p.pass) return false;
  return true;
}

std::string AuditReport::summary() const {
  std::ostringstream out;
  for (const auto& p : probes) {
    out << "probe frame " << p.frame << ": "
        << (p.pass ? (p.vacuous ? "pass (vacuous)" : "pass")
                   : "FAIL (" + p.offending_stage + ")")
        << '\n';
  }
  return out.str();
}

namespace {

struct CaptureResult {
  OutputStreams out;
  PipelineDumps dumps;
  RunReport report;
  bool ok = false;
  std::string error;
};

CaptureResult run_capture(const std::vector<Eigen::VectorXd>& input,
                          const PipelineConfig& config,
                          const OracleResources* oracle) {
  CaptureResult r;
  PipelineOptions options;
  options.oracle = oracle;
  options.report = &r.report;
  options.dumps = &r.dumps;
  options.strict_lookahead = false;
  try {
    r.out = run_pipeline(input, config, options);
    r.ok = true;
  } catch (const std::exception& e) {
    r.error = e.what();
  }
  return r;
}

bool masks_equal(const MaskSet& a, const MaskSet& b, int frames) {
  if (a.num_frames() < frames || b.num_frames() < frames) return false;
  const std::pair<const Eigen::MatrixXd*, const Eigen::MatrixXd*> planes[] = {
      {&a.speech[0], &b.speech[0]},
      {&a.speech[1], &b.speech[1]},
      {&a.noise, &b.noise}};
  for (const auto& [x, y] : planes)
    for (int t = 0; t < frames; ++t)
      if ((x->row(t).array() != y->row(t).array()).any()) return false;
  return true;
}

bool entries_equal(const DirectionTrack& a, const DirectionTrack& b,
                   int max_decision_frame) {
  size_t i = 0, j = 0;
  for (;;) {
    while (i < a.entries.size() &&
           a.entries[i].decision_frame > max_decision_frame)
      ++i;
    while (j < b.entries.size() &&
           b.entries[j].decision_frame > max_decision_frame)
      ++j;
    if (i >= a.entries.size() || j >= b.entries.size()) break;
    const auto& x = a.entries[i];
    const auto& y = b.entries[j];
    if (x.decision_frame != y.decision_frame ||
        x.begin_frame != y.begin_frame || x.end_frame != y.end_frame ||
        x.target_deg != y.target_deg ||
        x.interference_deg != y.interference_deg)
      return false;
    ++i;
    ++j;
  }
  return true;
}

}  // namespace

AuditReport causality_audit(const std::vector<Eigen::VectorXd>& input,
                            const PipelineConfig& config,
                            const OracleResources* oracle,
                            const std::vector<int>& probe_frames,
                            uint64_t noise_seed) {
  const long num_samples = input.empty() ? 0 : input[0].size();
  const int latency = config.total_latency_frames();
  const int margin = config.schedule.margin_frames;

  CaptureResult base = run_capture(input, config, oracle);
  AuditReport report;
  for (int n : probe_frames) {
    AuditProbe probe;
    probe.frame = n;
    const long horizon =
        static_cast<long>(n + latency) * config.frame.frame_shift +
        config.frame.frame_length;
    if (!base.ok) {
      probe.pass = false;
      probe.offending_stage = "pipeline error: " + base.error;
      report.probes.push_back(probe);
      continue;
    }
    if (base.report.lookahead_violation) {
      probe.pass = false;
      probe.offending_stage = "separation";
      report.probes.push_back(probe);
      continue;
    }
    if (horizon >= num_samples) {
      probe.pass = true;
      probe.vacuous = true;
      report.probes.push_back(probe);
      continue;
    }

    // Replace everything after the horizon with seeded noise at roughly
    // the input's level.
    std::vector<Eigen::VectorXd> perturbed = input;
    std::mt19937_64 rng(noise_seed ^ (0x9e3779b97f4a7c15ULL * (n + 1)));
    double rms = std::sqrt(input[0].squaredNorm() / num_samples);
    if (rms <= 0.0) rms = 0.1;
    std::uniform_real_distribution<double> dist(-2.0 * rms, 2.0 * rms);
    for (auto& ch : perturbed)
      for (long k = horizon; k < num_samples; ++k) ch[k] = dist(rng);

    CaptureResult alt = run_capture(perturbed, config, oracle);
    if (!alt.ok) {
      probe.pass = false;
      probe.offending_stage = "pipeline error: " + alt.error;
      report.probes.push_back(probe);
      continue;
    }
    if (alt.report.lookahead_violation) {
      probe.pass = false;
      probe.offending_stage = "separation";
      report.probes.push_back(probe);
      continue;
    }

    const int total_frames = config.frame.num_frames(num_samples);
    const int mask_frames = std::min(n + margin + 1, total_frames);
    const long out_samples = std::min(
        static_cast<long>(n + 1) * config.frame.frame_shift, num_samples);
    if (!masks_equal(base.dumps.masks, alt.dumps.masks, mask_frames)) {
      probe.offending_stage = "separation";
    } else if (!entries_equal(base.dumps.track, alt.dumps.track, n + margin)) {
      probe.offending_stage = "ssl";
    } else {
      bool same = true;
      for (int i = 0; i < 2 && same; ++i)
        for (long k = 0; k < out_samples; ++k)
          if (base.out.channels[i][k] != alt.out.channels[i][k]) {
            same = false;
            break;
          }
      if (!same) probe.offending_stage = "enhancement";
    }
    probe.pass = probe.offending_stage.empty();
    report.probes.push_back(probe);
  }
  return report;
}

}  // namespace streamsep

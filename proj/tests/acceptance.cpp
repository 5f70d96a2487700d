// Acceptance suite: one line per criterion, nonzero exit on any failure.
// Run through ctest as "acceptance" or directly from the build tree.

#include <chrono>
#include <cmath>
#include <cstdarg>
#include <cstdio>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include "streamsep/config.hpp"
#include "streamsep/pipeline.hpp"
#include "streamsep/simkit.hpp"
#include "streamsep/ssl.hpp"

using namespace streamsep;

namespace {

int g_failures = 0;

void report(const std::string& name, bool pass, const std::string& detail) {
  std::printf("[%s] %s%s%s\n", pass ? "PASS" : "FAIL", name.c_str(),
              detail.empty() ? "" : " -- ", detail.c_str());
  if (!pass) ++g_failures;
}

std::string fmt(const char* f, ...) {
  va_list ap;
  va_start(ap, f);
  char buf[512];
  std::vsnprintf(buf, sizeof buf, f, ap);
  va_end(ap);
  return buf;
}

// --------------------------------------------------------------------------
// 1. Fast cACG form vs the literal density on random instances.

void criterion1() {
  const auto t0 = std::chrono::steady_clock::now();
  const auto geometry = ArrayGeometry::circular_default();
  FrameConfig config;
  config.frame_length = 16;  // 9 bins keeps the literal form affordable
  config.frame_shift = 8;
  const auto table =
      build_steering_table(geometry, uniform_angle_grid(30.0), config);
  const int m = geometry.num_mics();

  std::mt19937_64 rng(1);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  bool diffs_ok = true, argmax_ok = true;
  double worst_rel = 0.0;
  for (int instance = 0; instance < 1000; ++instance) {
    const double eps = instance % 2 == 0 ? 1e-4 : 1e-2;
    const int frames = 2;
    MultiChannelSpectrogram spec(m, frames, config);
    for (int c = 0; c < m; ++c)
      for (int t = 0; t < frames; ++t)
        for (int k = 0; k < config.num_bins(); ++k)
          spec.at(c, t, k) = {gauss(rng), gauss(rng)};
    Eigen::MatrixXd mask(frames, config.num_bins());
    for (int t = 0; t < frames; ++t)
      for (int k = 0; k < config.num_bins(); ++k) mask(t, k) = uni(rng);

    const auto fast =
        cacg_log_likelihood(spec, mask, table, eps, 0, frames);
    const auto direct =
        cacg_log_likelihood_direct(spec, mask, table, eps, 0, frames);
    for (int a = 1; a < table.num_angles(); ++a) {
      const double lhs = fast[a] - fast[0];
      const double rhs = (direct[a] - direct[0]) / m;
      const double scale = std::max({std::abs(lhs), std::abs(rhs), 1e-12});
      worst_rel = std::max(worst_rel, std::abs(lhs - rhs) / scale);
      if (std::abs(lhs - rhs) > 1e-9 * scale) diffs_ok = false;
    }
    int a_fast = 0, a_direct = 0;
    fast.maxCoeff(&a_fast);
    direct.maxCoeff(&a_direct);
    if (a_fast != a_direct) argmax_ok = false;
  }
  const double elapsed =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  report("C1 cACG reduced form matches the literal density",
         diffs_ok && argmax_ok && elapsed < 5.0,
         fmt("worst relative diff %.2e, argmax %s, %.2f s over 1000 instances",
             worst_rel, argmax_ok ? "agrees" : "DISAGREES", elapsed));
}

// --------------------------------------------------------------------------
// 2. Localization accuracy: grid sweep and two-speaker scenes.

void criterion2() {
  FrameConfig frame;
  const auto geometry = ArrayGeometry::circular_default();
  const auto table =
      build_steering_table(geometry, uniform_angle_grid(5.0), frame);

  double worst_single = 0.0;
  bool single_ok = true;
  for (int a = 0; a < 72; ++a) {
    const double angle = 5.0 * a;
    Scenario s;
    s.duration_s = 0.9;
    s.noise_level_db = -40.0;  // 20 dB SNR against the -20 dB source
    s.seed = 1000 + a;
    SourceSpec src;
    src.signal = make_speechlike(0.9, frame.sample_rate, 77 + a, nullptr,
                                 true);
    src.azimuth_deg = angle;
    src.level_db = -20.0;
    s.sources.push_back(std::move(src));
    const auto sim = synthesize(s);
    const auto spec = stft(sim.channels, frame);
    const Eigen::MatrixXd ones =
        Eigen::MatrixXd::Ones(spec.num_frames(), spec.num_bins());
    const auto track =
        localize(spec, {ones, ones}, SslSchedule{}, table);
    for (const auto& e : track.entries) {
      const double err = circular_distance_deg(e.target_deg, angle);
      worst_single = std::max(worst_single, err);
      if (err > 5.0) single_ok = false;
    }
  }

  bool pair_ok = true;
  double worst_pair = 0.0;
  const double pairs[][2] = {{60.0, 220.0}, {0.0, 40.0}, {100.0, 255.0}};
  for (int p = 0; p < 3; ++p) {
    const auto scenario = make_overlap_scenario(8.0, pairs[p][0], pairs[p][1],
                                                300 + p, -40.0);
    const auto sim = synthesize(scenario);
    const auto resources = make_oracle_resources(sim.channels, sim.truth);
    const auto spec = stft(sim.channels, scenario.frame);
    const auto track = localize(
        spec, {resources.masks->speech[0], resources.masks->speech[1]},
        SslSchedule{}, table);
    if (track.entries.empty()) pair_ok = false;
    for (const auto& e : track.entries) {
      const double e0 = circular_distance_deg(e.target_deg, pairs[p][0]);
      const double e1 =
          circular_distance_deg(e.interference_deg, pairs[p][1]);
      worst_pair = std::max({worst_pair, e0, e1});
      if (e0 > 10.0 || e1 > 10.0) pair_ok = false;
    }
  }
  report("C2 SSL accuracy",
         single_ok && pair_ok,
         fmt("single wave max error %.1f deg over 72 angles; "
             "two-speaker max error %.1f deg",
             worst_single, worst_pair));
}

// --------------------------------------------------------------------------
// 3. Margin frames help at utterance onsets.

void criterion3() {
  FrameConfig frame;
  const auto geometry = ArrayGeometry::circular_default();
  const auto table =
      build_steering_table(geometry, uniform_angle_grid(5.0), frame);

  double err_with_margin = 0.0, err_without = 0.0;
  long onset_frames = 0;
  for (uint64_t seed : {401, 402, 403}) {
    const auto scenario = make_meeting_scenario(30.0, 60.0, 220.0, seed,
                                                -45.0);
    const auto sim = synthesize(scenario);
    const auto resources = make_oracle_resources(sim.channels, sim.truth);
    const auto spec = stft(sim.channels, scenario.frame);

    SslSchedule with_margin;  // margin 20
    SslSchedule without = with_margin;
    without.margin_frames = 0;
    const std::array<Eigen::MatrixXd, 2> masks{resources.masks->speech[0],
                                               resources.masks->speech[1]};
    const auto track_margin = localize(spec, masks, with_margin, table);
    const auto track_plain = localize(spec, masks, without, table);

    const long onset_span = static_cast<long>(0.2 * frame.sample_rate);
    for (const auto& u : sim.truth.utterances) {
      const int first = static_cast<int>(u.begin_sample / frame.frame_shift);
      const int last = static_cast<int>(
          std::min(u.begin_sample + onset_span, u.end_sample) /
          frame.frame_shift);
      for (int t = first; t <= last && t < spec.num_frames(); ++t) {
        const auto* em = track_margin.at(t);
        const auto* ep = track_plain.at(t);
        if (em == nullptr || ep == nullptr) continue;
        const double truth_angle = sim.truth.angles_deg[u.source];
        const double am =
            u.source == 0 ? em->target_deg : em->interference_deg;
        const double ap =
            u.source == 0 ? ep->target_deg : ep->interference_deg;
        err_with_margin += circular_distance_deg(am, truth_angle);
        err_without += circular_distance_deg(ap, truth_angle);
        ++onset_frames;
      }
    }
  }
  err_with_margin /= static_cast<double>(onset_frames);
  err_without /= static_cast<double>(onset_frames);
  report("C3 SSL margin effect at utterance onsets",
         err_with_margin <= err_without,
         fmt("mean onset error %.2f deg with margin vs %.2f deg without "
             "(%ld onset frames)",
             err_with_margin, err_without, onset_frames));
}

// --------------------------------------------------------------------------
// 4. Beamformer bank: distortionless and diffuse-noise reduction.

void criterion4() {
  FrameConfig frame;
  const auto bank = design_bank(ArrayGeometry::circular_default(), frame);
  const double dist_err = distortionless_error(bank);

  const auto power = diffuse_noise_power(bank);
  double worst_mean_db = 1e9;
  for (int b = 0; b < bank.num_beams(); ++b) {
    double mean_db = 0.0;
    int count = 0;
    for (int k = 0; k < bank.num_bins(); ++k) {
      if (frame.bin_hz(k) <= 1000.0) continue;
      mean_db += -10.0 * std::log10(power(b, k));
      ++count;
    }
    worst_mean_db = std::min(worst_mean_db, mean_db / count);
  }
  report("C4 fixed beamformer bank",
         dist_err < 1e-6 && worst_mean_db >= 3.0,
         fmt("distortionless error %.2e; diffuse reduction above 1 kHz "
             ">= %.2f dB on every beam",
             dist_err, worst_mean_db));
}

// --------------------------------------------------------------------------
// 5. Double buffering keeps utterances channel-pure; adversarial swaps
// are repaired.

void criterion5() {
  const auto scenario = make_meeting_scenario(60.0, 60.0, 220.0, 500, -45.0);
  const auto sim = synthesize(scenario);
  const auto resources = make_oracle_resources(sim.channels, sim.truth);

  auto run = [&](EstimatorChoice choice) {
    PipelineConfig config;
    config.estimator = choice;
    PipelineOptions options;
    options.oracle = &resources;
    const auto out = run_pipeline(sim.channels, config, options);
    const auto aligned =
        align_outputs(out, config.total_latency_frames(), scenario.frame);
    return channel_purity(aligned, sim.truth);
  };
  const auto purity = run(EstimatorChoice::kOracle);
  const auto purity_adv = run(EstimatorChoice::kAdversarial);

  double min_purity = 1.0, max_diff = 0.0;
  for (size_t i = 0; i < purity.size(); ++i) {
    min_purity = std::min(min_purity, purity[i]);
    max_diff = std::max(max_diff, std::abs(purity[i] - purity_adv[i]));
  }
  report("C5 double-buffered stitching",
         min_purity >= 0.95 && max_diff <= 0.01,
         fmt("min purity %.4f over %zu utterances; adversarial delta %.4f",
             min_purity, purity.size(), max_diff));
}

// --------------------------------------------------------------------------
// 6. PIT loss equals the brute-force permutation minimum.

void pit_rec(const std::vector<Eigen::MatrixXd>& est,
             const std::vector<Eigen::MatrixXd>& ref, std::vector<bool>& used,
             size_t i, double acc, double& best) {
  if (i == est.size()) {
    best = std::min(best, acc);
    return;
  }
  for (size_t j = 0; j < ref.size(); ++j) {
    if (used[j]) continue;
    double mse = 0.0;
    for (Eigen::Index c = 0; c < est[i].cols(); ++c)
      for (Eigen::Index r = 0; r < est[i].rows(); ++r) {
        const double d = est[i](r, c) - ref[j](r, c);
        mse += d * d;
      }
    used[j] = true;
    pit_rec(est, ref, used, i + 1, acc + mse / est[i].size(), best);
    used[j] = false;
  }
}

void criterion6() {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  bool ok = true;
  for (int instance = 0; instance < 100; ++instance) {
    const int k = 1 + instance % 4;
    const int frames = 4, bins = 10;
    std::vector<Eigen::MatrixXd> est(k), ref(k);
    for (int i = 0; i < k; ++i) {
      est[i].resize(frames, bins);
      ref[i].resize(frames, bins);
      for (int t = 0; t < frames; ++t)
        for (int b = 0; b < bins; ++b) {
          est[i](t, b) = uni(rng);
          ref[i](t, b) = uni(rng);
        }
    }
    const auto fast = pit_mse_loss(est, ref);
    double brute = std::numeric_limits<double>::infinity();
    std::vector<bool> used(k, false);
    pit_rec(est, ref, used, 0, 0.0, brute);
    if (fast.loss != brute) ok = false;
  }
  report("C6 PIT loss equals the exhaustive minimum", ok,
         "100 instances, K = 1..4, exact equality");
}

// --------------------------------------------------------------------------
// 7. Causality audit, exact latency, fault detection, latency arithmetic.

void criterion7() {
  const auto scenario = make_meeting_scenario(20.0, 60.0, 220.0, 700, -40.0);
  const auto sim = synthesize(scenario);
  const auto resources = make_oracle_resources(sim.channels, sim.truth);
  PipelineConfig config;
  config.estimator = EstimatorChoice::kOracle;

  std::mt19937_64 rng(7);
  const int frames = config.frame.num_frames(sim.channels[0].size());
  std::uniform_int_distribution<int> dist(0, frames - 1);
  std::vector<int> probes;
  for (int i = 0; i < 10; ++i) probes.push_back(dist(rng));
  const auto audit =
      causality_audit(sim.channels, config, &resources, probes);

  // Impulse latency: the click must surface exactly 24 frames late.
  Scenario imp;
  imp.duration_s = 2.0;
  imp.noise_level_db = -200.0;
  SourceSpec click;
  click.signal = Eigen::VectorXd::Zero(32000);
  click.signal[8000] = 1.0;
  click.azimuth_deg = 0.0;
  click.level_db = -6.0;
  click.utterances.emplace_back(8000 - 256, 8000 + 256);
  imp.sources.push_back(click);
  const auto imp_sim = synthesize(imp);
  const auto imp_res = make_oracle_resources(imp_sim.channels, imp_sim.truth);
  PipelineOptions imp_options;
  imp_options.oracle = &imp_res;
  const auto imp_out = run_pipeline(imp_sim.channels, config, imp_options);
  int arg = 0;
  imp_out.channels[0].cwiseAbs().maxCoeff(&arg);
  const bool latency_exact =
      arg == 8000 + 24 * 256 &&
      imp_out.channels[0].head(24 * 256).cwiseAbs().maxCoeff() == 0.0;

  // Fault injection: one extra frame of look-ahead must be caught and
  // attributed to the separation stage.
  PipelineConfig faulty = config;
  faulty.estimator = EstimatorChoice::kFaulty;
  const auto fault_audit =
      causality_audit(sim.channels, faulty, &resources, {probes[0]});
  const bool fault_caught = !fault_audit.probes[0].pass &&
                            fault_audit.probes[0].offending_stage ==
                                "separation";

  // 24 frames at 16 ms against the segment-rebuffering floor of the
  // windowed approach (0.8 s shift + 0.4 s trim).
  const double latency_s = config.total_latency_frames() * 0.016;
  const bool arithmetic_ok = latency_s == 0.384 && latency_s < 0.8 + 0.4;

  report("C7 causality and latency contract",
         audit.all_pass() && latency_exact && fault_caught && arithmetic_ok,
         fmt("audit %s over 10 probes; impulse at +24 frames %s; fault "
             "%s; %.3f s < 1.2 s",
             audit.all_pass() ? "passed" : "FAILED",
             latency_exact ? "exact" : "WRONG",
             fault_caught ? "caught" : "MISSED", latency_s));
}

// --------------------------------------------------------------------------
// 8. Analysis/synthesis reconstruction.

void criterion8() {
  FrameConfig config;
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> uni(-1.0, 1.0);
  double worst = 0.0;
  for (int trial = 0; trial < 5; ++trial) {
    const long len = 512 + (rng() % 32000);
    Eigen::VectorXd x(len);
    for (long i = 0; i < len; ++i) x[i] = uni(rng);
    const auto y = istft(stft(x, config));
    const long margin = config.frame_length - config.frame_shift;
    const long n = std::min<long>(x.size(), y.size()) - 2 * margin;
    const double err =
        (x.segment(margin, n) - y.segment(margin, n)).norm() /
        x.segment(margin, n).norm();
    worst = std::max(worst, err);
  }
  report("C8 analysis/synthesis reconstruction", worst <= 1e-6,
         fmt("worst interior relative RMS error %.2e", worst));
}

// --------------------------------------------------------------------------
// 9. End-to-end oracle run on fully overlapped 0 dB speech.

void criterion9() {
  const auto scenario = make_overlap_scenario(60.0, 60.0, 220.0, 900, -40.0);
  const auto sim = synthesize(scenario);
  const auto resources = make_oracle_resources(sim.channels, sim.truth);
  PipelineConfig config;
  config.estimator = EstimatorChoice::kOracle;
  config.post_filter = PostFilterChoice::kOracle;
  PipelineOptions options;
  options.oracle = &resources;
  const auto out = run_pipeline(sim.channels, config, options);
  const auto aligned =
      align_outputs(out, config.total_latency_frames(), scenario.frame);

  double worst = 1e9;
  for (const auto& u : sim.truth.utterances) {
    const long len = u.end_sample - u.begin_sample;
    const Eigen::VectorXd clean =
        sim.truth.clean_ref_signals[u.source].segment(u.begin_sample, len);
    const double before =
        si_sdr_db(sim.channels[0].segment(u.begin_sample, len), clean);
    const double after = std::max(
        si_sdr_db(aligned[0].segment(u.begin_sample, len), clean),
        si_sdr_db(aligned[1].segment(u.begin_sample, len), clean));
    worst = std::min(worst, after - before);
  }
  report("C9 end-to-end oracle separation", worst >= 8.0,
         fmt("per-utterance SI-SDR improvement >= %.2f dB over the "
             "reference microphone (%zu utterances)",
             worst, sim.truth.utterances.size()));
}

// --------------------------------------------------------------------------
// 10. Real-time factor of the full no-truth pipeline.

void criterion10() {
  const auto scenario = make_meeting_scenario(30.0, 60.0, 220.0, 1000, -40.0);
  const auto sim = synthesize(scenario);
  PipelineConfig config;  // baseline estimator, mask-reuse post-filter
  RunReport run_report;
  PipelineOptions options;
  options.report = &run_report;
  const auto out = run_pipeline(sim.channels, config, options);
  (void)out;
  report("C10 real-time factor", run_report.rtf < 1.0,
         fmt("RTF %.3f on %.0f s of 7-channel 16 kHz input "
             "(single thread)",
             run_report.rtf, run_report.audio_duration_s));
}

}  // namespace

int main() {
  criterion1();
  criterion2();
  criterion3();
  criterion4();
  criterion5();
  criterion6();
  criterion7();
  criterion8();
  criterion9();
  criterion10();
  if (g_failures > 0) {
    std::printf("%d criterion(s) failed\n", g_failures);
    return 1;
  }
  std::printf("all criteria passed\n");
  return 0;
}

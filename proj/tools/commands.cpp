#include "commands.hpp"

#include <cinttypes>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include <json.hpp>

#include "streamsep/config.hpp"
#include "streamsep/wav.hpp"

namespace streamsep::cli {

namespace fs = std::filesystem;

namespace {

Eigen::VectorXd load_mono_signal(const std::string& spec_token, int sample_rate,
                                 double duration_s,
                                 std::vector<std::pair<long, long>>* utts) {
  if (spec_token.rfind("gen:", 0) == 0) {
    std::istringstream ss(spec_token.substr(4));
    std::string kind;
    std::getline(ss, kind, ':');
    uint64_t seed = 1;
    std::string seed_str;
    if (std::getline(ss, seed_str)) seed = std::stoull(seed_str);
    if (kind == "speech")
      return make_speechlike(duration_s, sample_rate, seed, utts, false);
    if (kind == "continuous")
      return make_speechlike(duration_s, sample_rate, seed, utts, true);
    throw std::invalid_argument("scenario: unknown generator '" + spec_token +
                                "'");
  }
  const WavData wav = read_wav(spec_token);
  if (wav.sample_rate != sample_rate)
    throw std::invalid_argument("scenario: " + spec_token +
                                " sample rate mismatch");
  if (wav.channels.size() != 1)
    throw std::invalid_argument("scenario: " + spec_token + " must be mono");
  if (utts) utts->emplace_back(0, wav.channels[0].size());
  return wav.channels[0];
}

}  // namespace

Scenario parse_scenario(const std::string& text) {
  Scenario scenario;
  scenario.noise_level_db = -200.0;
  scenario.duration_s = 0.0;  // must be stated explicitly
  struct PendingSource {
    std::string token;
    double angle, onset, level;
  };
  std::vector<PendingSource> pending;

  std::istringstream in(text);
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    std::istringstream ls(line);
    std::string key;
    if (!(ls >> key)) continue;
    try {
      if (key == "duration") {
        ls >> scenario.duration_s;
      } else if (key == "seed") {
        ls >> scenario.seed;
      } else if (key == "noise") {
        ls >> scenario.noise_level_db;
      } else if (key == "geometry") {
        std::string v;
        ls >> v;
        scenario.geometry = v == "default" ? ArrayGeometry::circular_default()
                                           : load_geometry(v);
      } else if (key == "source") {
        PendingSource p;
        if (!(ls >> p.token >> p.angle >> p.onset >> p.level))
          throw std::invalid_argument("expected: source <signal> <angle> "
                                      "<onset> <level>");
        pending.push_back(p);
      } else {
        throw std::invalid_argument("unknown key '" + key + "'");
      }
    } catch (const std::exception& e) {
      throw std::invalid_argument("scenario line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
  }
  if (scenario.duration_s <= 0.0)
    throw std::invalid_argument("scenario: missing or invalid duration");
  for (const auto& p : pending) {
    SourceSpec src;
    src.azimuth_deg = p.angle;
    src.onset_s = p.onset;
    src.level_db = p.level;
    src.name = p.token;
    src.signal =
        load_mono_signal(p.token, scenario.frame.sample_rate,
                         std::max(0.5, scenario.duration_s - p.onset),
                         &src.utterances);
    scenario.sources.push_back(std::move(src));
  }
  return scenario;
}

Scenario load_scenario(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scenario file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_scenario(ss.str());
}

void save_truth(const GroundTruth& truth, const std::string& dir) {
  fs::create_directories(dir);
  nlohmann::json j;
  j["sample_rate"] = truth.frame.sample_rate;
  j["frame_shift"] = truth.frame.frame_shift;
  j["frame_length"] = truth.frame.frame_length;
  j["angles_deg"] = truth.angles_deg;
  auto& utts = j["utterances"] = nlohmann::json::array();
  for (const auto& u : truth.utterances)
    utts.push_back({u.source, u.begin_sample, u.end_sample});
  auto& sources = j["sources"] = nlohmann::json::array();
  for (size_t i = 0; i < truth.clean_ref_signals.size(); ++i) {
    const std::string name = "source_" + std::to_string(i) + ".wav";
    write_wav((fs::path(dir) / name).string(), {truth.clean_ref_signals[i]},
              truth.frame.sample_rate);
    sources.push_back(name);
  }
  j["noise"] = "noise_ref.wav";
  write_wav((fs::path(dir) / "noise_ref.wav").string(),
            {truth.noise_ref_signal}, truth.frame.sample_rate);
  std::ofstream out(fs::path(dir) / "truth.json");
  if (!out) throw std::runtime_error("cannot write truth.json in " + dir);
  out << j.dump(2) << '\n';
}

GroundTruth load_truth(const std::string& dir) {
  std::ifstream in(fs::path(dir) / "truth.json");
  if (!in) throw std::runtime_error("cannot open " + dir + "/truth.json");
  nlohmann::json j;
  in >> j;

  GroundTruth truth;
  truth.frame.sample_rate = j.at("sample_rate").get<int>();
  truth.frame.frame_shift = j.at("frame_shift").get<int>();
  truth.frame.frame_length = j.at("frame_length").get<int>();
  truth.angles_deg = j.at("angles_deg").get<std::vector<double>>();
  for (const auto& u : j.at("utterances"))
    truth.utterances.push_back(
        {u[0].get<int>(), u[1].get<long>(), u[2].get<long>()});
  for (const auto& name : j.at("sources")) {
    const WavData wav =
        read_wav((fs::path(dir) / name.get<std::string>()).string());
    truth.clean_ref_signals.push_back(wav.channels[0]);
  }
  {
    const WavData wav =
        read_wav((fs::path(dir) / j.at("noise").get<std::string>()).string());
    truth.noise_ref_signal = wav.channels[0];
  }

  const int frames =
      truth.frame.num_frames(truth.clean_ref_signals.empty()
                                 ? 0
                                 : truth.clean_ref_signals[0].size());
  for (size_t i = 0; i < truth.clean_ref_signals.size(); ++i) {
    const auto spec = stft(truth.clean_ref_signals[i], truth.frame);
    Eigen::MatrixXcd m(spec.num_frames(), spec.num_bins());
    for (int t = 0; t < spec.num_frames(); ++t)
      for (int k = 0; k < spec.num_bins(); ++k) m(t, k) = spec.at(0, t, k);
    truth.clean_ref_specs.push_back(std::move(m));
    std::vector<bool> act(frames, false);
    for (const auto& u : truth.utterances) {
      if (u.source != static_cast<int>(i)) continue;
      for (int t = 0; t < frames; ++t) {
        const long fb = static_cast<long>(t) * truth.frame.frame_shift;
        const long fe = fb + truth.frame.frame_length;
        if (fb < u.end_sample && u.begin_sample < fe) act[t] = true;
      }
    }
    truth.active.push_back(std::move(act));
  }
  return truth;
}

PipelineConfig config_from_args(const std::optional<std::string>& path) {
  return path ? load_pipeline_config(*path) : PipelineConfig{};
}

void print_report(const RunReport& r) {
  std::printf("audio duration      %8.2f s\n", r.audio_duration_s);
  std::printf("processing time     %8.2f s\n", r.stages.total_s);
  std::printf("real-time factor    %8.3f\n", r.rtf);
  std::printf("declared latency    %8d frames\n", r.declared_latency_frames);
  std::printf("measured latency    %8d frames\n", r.measured_latency_frames);
  std::printf("stage times: stft %.2fs features %.2fs separation %.2fs "
              "ssl %.2fs enhancement %.2fs synthesis %.2fs setup %.2fs\n",
              r.stages.stft_s, r.stages.features_s, r.stages.separation_s,
              r.stages.ssl_s, r.stages.enhancement_s, r.stages.synthesis_s,
              r.stages.setup_s);
  std::printf("config: %s\n", r.config_echo.c_str());
}

int cmd_simulate(const SimulateArgs& args) {
  Scenario scenario = load_scenario(args.scenario_path);
  if (args.seed) scenario.seed = *args.seed;
  const SimResult sim = synthesize(scenario);
  write_wav(args.out_wav, sim.channels, scenario.frame.sample_rate);
  save_truth(sim.truth, args.truth_dir);
  std::printf("wrote %s (%d channels, %.2f s) and %s\n", args.out_wav.c_str(),
              static_cast<int>(sim.channels.size()), scenario.duration_s,
              args.truth_dir.c_str());
  return 0;
}

namespace {

nlohmann::json report_to_json(const RunReport& r) {
  nlohmann::json j;
  j["audio_duration_s"] = r.audio_duration_s;
  j["rtf"] = r.rtf;
  j["declared_latency_frames"] = r.declared_latency_frames;
  j["measured_latency_frames"] = r.measured_latency_frames;
  j["lookahead_violation"] = r.lookahead_violation;
  j["stages"] = {{"stft_s", r.stages.stft_s},
                 {"features_s", r.stages.features_s},
                 {"separation_s", r.stages.separation_s},
                 {"ssl_s", r.stages.ssl_s},
                 {"enhancement_s", r.stages.enhancement_s},
                 {"synthesis_s", r.stages.synthesis_s},
                 {"setup_s", r.stages.setup_s},
                 {"total_s", r.stages.total_s}};
  j["config"] = r.config_echo;
  return j;
}

}  // namespace

int cmd_separate(const SeparateArgs& args) {
  const WavData wav = read_wav(args.in_wav);
  PipelineConfig config = config_from_args(args.config_path);
  if (wav.sample_rate != config.frame.sample_rate)
    throw std::invalid_argument("input sample rate does not match config");

  OracleResources resources;
  const bool needs_truth = config.estimator == EstimatorChoice::kOracle ||
                           config.post_filter == PostFilterChoice::kOracle ||
                           config.estimator == EstimatorChoice::kAdversarial ||
                           config.estimator == EstimatorChoice::kFaulty;
  PipelineOptions options;
  if (args.truth_dir) {
    const GroundTruth truth = load_truth(*args.truth_dir);
    resources = make_oracle_resources(wav.channels, truth);
    options.oracle = &resources;
  } else if (needs_truth && config.estimator != EstimatorChoice::kAdversarial &&
             config.estimator != EstimatorChoice::kFaulty) {
    throw std::invalid_argument(
        "this configuration needs --truth <dir> (oracle masks)");
  }

  RunReport report;
  PipelineDumps dumps;
  options.report = &report;
  options.dumps = &dumps;
  const OutputStreams out = run_pipeline(wav.channels, config, options);
  write_wav(args.out_wav[0], {out.channels[0]}, out.sample_rate);
  write_wav(args.out_wav[1], {out.channels[1]}, out.sample_rate);
  if (args.dump_masks) save_masks(dumps.masks, *args.dump_masks);
  if (args.dump_track) save_track_csv(dumps.track, *args.dump_track);
  if (args.report_path) {
    std::ofstream rp(*args.report_path);
    rp << report_to_json(report).dump(2) << '\n';
  }
  print_report(report);

  if (args.audit) {
    std::mt19937_64 rng(args.seed);
    const int frames = config.frame.num_frames(wav.channels[0].size());
    std::uniform_int_distribution<int> dist(0, std::max(1, frames - 1));
    std::vector<int> probes;
    for (int i = 0; i < args.audit_probes; ++i) probes.push_back(dist(rng));
    const AuditReport audit = causality_audit(
        wav.channels, config, options.oracle, probes, args.seed);
    std::fputs(audit.summary().c_str(), stdout);
    if (!audit.all_pass()) return 1;
  }
  return 0;
}

int cmd_ssl(const SslArgs& args) {
  const WavData wav = read_wav(args.in_wav);
  const MaskSet masks = load_masks(args.masks_path);
  FrameConfig frame;
  frame.sample_rate = wav.sample_rate;
  const ArrayGeometry geometry = args.geometry_path
                                     ? load_geometry(*args.geometry_path)
                                     : ArrayGeometry::circular_default();
  if (static_cast<int>(wav.channels.size()) != geometry.num_mics())
    throw std::invalid_argument("ssl: channel count does not match geometry");
  const auto spec = stft(wav.channels, frame);
  if (masks.num_frames() != spec.num_frames() ||
      masks.num_bins() != spec.num_bins())
    throw std::invalid_argument("ssl: mask dump does not match the input");
  const auto table =
      build_steering_table(geometry, uniform_angle_grid(args.grid_step_deg),
                           frame);
  const DirectionTrack track =
      localize(spec, {masks.speech[0], masks.speech[1]}, args.schedule, table);
  save_track_csv(track, args.out_csv);
  std::printf("wrote %s (%zu intervals)\n", args.out_csv.c_str(),
              track.entries.size());
  return 0;
}

int cmd_design_beams(const DesignBeamsArgs& args) {
  FrameConfig frame;
  const ArrayGeometry geometry = args.geometry_path
                                     ? load_geometry(*args.geometry_path)
                                     : ArrayGeometry::circular_default();
  const BeamformerBank bank =
      design_bank(geometry, frame, args.loading, args.num_beams);
  save_bank(bank, args.out_path);
  std::printf("wrote %s: %d beams, %d bins, distortionless error %.2e\n",
              args.out_path.c_str(), bank.num_beams(), bank.num_bins(),
              distortionless_error(bank));
  return 0;
}

int cmd_eval(const EvalArgs& args) {
  const GroundTruth truth = load_truth(args.truth_dir);
  const WavData a = read_wav(args.out_wav[0]);
  const WavData b = read_wav(args.out_wav[1]);
  OutputStreams out;
  out.sample_rate = a.sample_rate;
  out.channels[0] = a.channels.at(0);
  out.channels[1] = b.channels.at(0);
  if (out.channels[0].size() != out.channels[1].size())
    throw std::invalid_argument("eval: output lengths differ");

  std::optional<Eigen::VectorXd> mix_ref;
  if (args.mix_wav) {
    const WavData mix = read_wav(*args.mix_wav);
    mix_ref = mix.channels.at(0);
    if (mix_ref->size() != out.channels[0].size())
      throw std::invalid_argument("eval: mixture length differs from outputs");
  }

  const auto aligned = align_outputs(out, args.latency_frames, truth.frame);
  const auto purity = channel_purity(aligned, truth);

  std::ostringstream csv;
  csv << "utterance,source,begin_sample,end_sample,si_sdr_db,purity";
  if (mix_ref) csv << ",mix_si_sdr_db,improvement_db";
  csv << '\n';
  double sum_sdr = 0.0, sum_improve = 0.0, sum_purity = 0.0;
  for (size_t i = 0; i < truth.utterances.size(); ++i) {
    const auto& u = truth.utterances[i];
    const long len = u.end_sample - u.begin_sample;
    const Eigen::VectorXd clean =
        truth.clean_ref_signals[u.source].segment(u.begin_sample, len);
    const double sdr = std::max(
        si_sdr_db(aligned[0].segment(u.begin_sample, len), clean),
        si_sdr_db(aligned[1].segment(u.begin_sample, len), clean));
    csv << i << ',' << u.source << ',' << u.begin_sample << ','
        << u.end_sample << ',' << sdr << ',' << purity[i];
    sum_sdr += sdr;
    sum_purity += purity[i];
    if (mix_ref) {
      const double before =
          si_sdr_db(mix_ref->segment(u.begin_sample, len), clean);
      csv << ',' << before << ',' << sdr - before;
      sum_improve += sdr - before;
    }
    csv << '\n';
  }
  if (args.csv_path) {
    std::ofstream f(*args.csv_path);
    if (!f) throw std::runtime_error("cannot write " + *args.csv_path);
    f << csv.str();
  } else {
    std::fputs(csv.str().c_str(), stdout);
  }

  const double n = std::max<size_t>(1, truth.utterances.size());
  std::printf("utterances: %zu\n", truth.utterances.size());
  std::printf("mean si-sdr: %.2f dB\n", sum_sdr / n);
  std::printf("mean purity: %.4f\n", sum_purity / n);
  if (mix_ref) std::printf("mean improvement: %.2f dB\n", sum_improve / n);

  if (args.track_csv && truth.angles_deg.size() >= 1) {
    const DirectionTrack track = load_track_csv(*args.track_csv);
    double err_sum = 0.0, err_max = 0.0;
    long count = 0;
    for (const auto& e : track.entries) {
      double err;
      if (truth.angles_deg.size() >= 2) {
        const double direct =
            std::max(circular_distance_deg(e.target_deg, truth.angles_deg[0]),
                     circular_distance_deg(e.interference_deg,
                                           truth.angles_deg[1]));
        const double crossed =
            std::max(circular_distance_deg(e.target_deg, truth.angles_deg[1]),
                     circular_distance_deg(e.interference_deg,
                                           truth.angles_deg[0]));
        err = std::min(direct, crossed);
      } else {
        err = circular_distance_deg(e.target_deg, truth.angles_deg[0]);
      }
      err_sum += err;
      err_max = std::max(err_max, err);
      ++count;
    }
    if (count > 0)
      std::printf("ssl angular error: mean %.2f deg, max %.2f deg over %ld "
                  "intervals\n",
                  err_sum / count, err_max, count);
  }
  return 0;
}

int cmd_audit(const AuditArgs& args) {
  const WavData wav = read_wav(args.in_wav);
  PipelineConfig config = config_from_args(args.config_path);
  OracleResources resources;
  PipelineOptions base_options;
  const OracleResources* oracle = nullptr;
  if (args.truth_dir) {
    const GroundTruth truth = load_truth(*args.truth_dir);
    resources = make_oracle_resources(wav.channels, truth);
    oracle = &resources;
  }
  std::mt19937_64 rng(args.seed);
  const int frames = config.frame.num_frames(wav.channels[0].size());
  std::uniform_int_distribution<int> dist(0, std::max(1, frames - 1));
  std::vector<int> probes;
  for (int i = 0; i < args.probes; ++i) probes.push_back(dist(rng));
  const AuditReport report =
      causality_audit(wav.channels, config, oracle, probes, args.seed);
  std::fputs(report.summary().c_str(), stdout);
  std::printf("%s\n", report.all_pass() ? "audit: PASS" : "audit: FAIL");
  return report.all_pass() ? 0 : 1;
}

int cmd_bench(const BenchArgs& args) {
  const Scenario scenario =
      make_meeting_scenario(args.duration_s, 60.0, 220.0, args.seed, -40.0);
  const SimResult sim = synthesize(scenario);
  PipelineConfig config = config_from_args(args.config_path);
  RunReport report;
  PipelineOptions options;
  options.report = &report;
  const OutputStreams out = run_pipeline(sim.channels, config, options);
  (void)out;
  print_report(report);
  if (report.rtf >= 1.0) {
    std::fprintf(stderr, "real-time factor %.3f is not below 1.0\n",
                 report.rtf);
    return 1;
  }
  return report.lookahead_violation ? 1 : 0;
}

}  // namespace streamsep::cli

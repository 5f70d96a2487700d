#include <cstdio>
#include <exception>

#include <CLI11.hpp>

#include "commands.hpp"

using namespace streamsep;
using namespace streamsep::cli;

int main(int argc, char** argv) {
  CLI::App app{"streamsep: low-latency continuous speech separation"};
  app.require_subcommand(1);

  SimulateArgs sim_args;
  auto* sim = app.add_subcommand("simulate",
                                 "synthesize a multichannel scene with truth");
  sim->add_option("--scenario", sim_args.scenario_path, "scenario text file")
      ->required();
  sim->add_option("--out", sim_args.out_wav, "output mixture wav")->required();
  sim->add_option("--truth", sim_args.truth_dir, "ground-truth directory")
      ->required();
  uint64_t sim_seed = 0;
  auto* sim_seed_opt =
      sim->add_option("--seed", sim_seed, "override the scenario seed");

  SeparateArgs sep_args;
  auto* sep = app.add_subcommand("separate",
                                 "separate a capture into two streams");
  sep->add_option("--in", sep_args.in_wav, "multichannel input wav")
      ->required();
  std::vector<std::string> outs;
  sep->add_option("--out", outs, "two output wavs")
      ->expected(2)
      ->required();
  sep->add_option("--config", sep_args.config_path, "pipeline config file");
  sep->add_option("--truth", sep_args.truth_dir,
                  "ground-truth directory (oracle modes)");
  sep->add_option("--dump-masks", sep_args.dump_masks, "mask tensor dump");
  sep->add_option("--dump-track", sep_args.dump_track, "direction track csv");
  sep->add_option("--report", sep_args.report_path, "run report json");
  sep->add_flag("--audit", sep_args.audit, "run the causality audit after");
  sep->add_option("--audit-probes", sep_args.audit_probes, "probe count");
  sep->add_option("--seed", sep_args.seed, "seed for audit noise");

  SslArgs ssl_args;
  auto* ssl = app.add_subcommand("ssl", "localize from a capture and masks");
  ssl->add_option("--in", ssl_args.in_wav, "multichannel input wav")
      ->required();
  ssl->add_option("--masks", ssl_args.masks_path, "mask tensor dump")
      ->required();
  ssl->add_option("--out", ssl_args.out_csv, "track csv")->required();
  ssl->add_option("--geometry", ssl_args.geometry_path, "geometry file");
  ssl->add_option("--window", ssl_args.schedule.window_frames, "N_W frames");
  ssl->add_option("--stride", ssl_args.schedule.stride_frames, "N_S frames");
  ssl->add_option("--margin", ssl_args.schedule.margin_frames, "N_M frames");
  ssl->add_option("--epsilon", ssl_args.schedule.epsilon, "flooring value");
  ssl->add_option("--grid-step", ssl_args.grid_step_deg, "grid step deg");

  DesignBeamsArgs beam_args;
  auto* beams = app.add_subcommand("design-beams",
                                   "design and store the beamformer bank");
  beams->add_option("--out", beam_args.out_path, "bank json")->required();
  beams->add_option("--geometry", beam_args.geometry_path, "geometry file");
  beams->add_option("--loading", beam_args.loading, "diagonal loading");
  beams->add_option("--beams", beam_args.num_beams, "number of beams");

  EvalArgs eval_args;
  auto* eval = app.add_subcommand("eval", "score outputs against truth");
  std::vector<std::string> eval_outs;
  eval->add_option("--outputs", eval_outs, "two separated wavs")
      ->expected(2)
      ->required();
  eval->add_option("--truth", eval_args.truth_dir, "ground-truth directory")
      ->required();
  eval->add_option("--mix", eval_args.mix_wav,
                   "mixture wav (adds improvement columns)");
  eval->add_option("--track", eval_args.track_csv, "direction track csv");
  eval->add_option("--csv", eval_args.csv_path, "write the table here");
  eval->add_option("--latency-frames", eval_args.latency_frames,
                   "declared pipeline latency");

  AuditArgs audit_args;
  auto* audit = app.add_subcommand("audit", "causality audit of a capture");
  audit->add_option("--in", audit_args.in_wav, "multichannel input wav")
      ->required();
  audit->add_option("--config", audit_args.config_path, "pipeline config");
  audit->add_option("--truth", audit_args.truth_dir, "ground-truth directory");
  audit->add_option("--probes", audit_args.probes, "probe count");
  audit->add_option("--seed", audit_args.seed, "noise seed");

  BenchArgs bench_args;
  auto* bench = app.add_subcommand("bench",
                                   "measure the real-time factor");
  bench->add_option("--duration", bench_args.duration_s, "scene seconds");
  bench->add_option("--config", bench_args.config_path, "pipeline config");
  bench->add_option("--seed", bench_args.seed, "scene seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*sim) {
      if (*sim_seed_opt) sim_args.seed = sim_seed;
      return cmd_simulate(sim_args);
    }
    if (*sep) {
      sep_args.out_wav[0] = outs[0];
      sep_args.out_wav[1] = outs[1];
      return cmd_separate(sep_args);
    }
    if (*ssl) return cmd_ssl(ssl_args);
    if (*beams) return cmd_design_beams(beam_args);
    if (*eval) {
      eval_args.out_wav[0] = eval_outs[0];
      eval_args.out_wav[1] = eval_outs[1];
      return cmd_eval(eval_args);
    }
    if (*audit) return cmd_audit(audit_args);
    if (*bench) return cmd_bench(bench_args);
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}

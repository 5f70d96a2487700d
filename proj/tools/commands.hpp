#pragma once

#include <optional>
#include <string>
#include <vector>

#include "streamsep/pipeline.hpp"
#include "streamsep/simkit.hpp"

namespace streamsep::cli {

/// Declarative scene description:
///   duration 30
///   seed 7
///   noise -40
///   geometry default            (or a geometry file path)
///   source gen:speech:1 60 0.5 -20        # signal angle onset level
///   source gen:continuous:2 220 0 -20
///   source path/to/mono.wav 135 1.0 -25
Scenario parse_scenario(const std::string& text);
Scenario load_scenario(const std::string& path);

/// Ground truth directory: truth.json plus one clean reference-channel
/// wav per source and the diffuse-noise reference wav.
void save_truth(const GroundTruth& truth, const std::string& dir);
GroundTruth load_truth(const std::string& dir);

struct SimulateArgs {
  std::string scenario_path;
  std::string out_wav;
  std::string truth_dir;
  std::optional<uint64_t> seed;  // overrides the scenario seed
};
int cmd_simulate(const SimulateArgs& args);

struct SeparateArgs {
  std::string in_wav;
  std::string out_wav[2];
  std::optional<std::string> config_path;
  std::optional<std::string> truth_dir;  // required for oracle modes
  std::optional<std::string> dump_masks;
  std::optional<std::string> dump_track;
  std::optional<std::string> report_path;  // JSON run report
  bool audit = false;
  int audit_probes = 10;
  uint64_t seed = 1;
};
int cmd_separate(const SeparateArgs& args);

struct SslArgs {
  std::string in_wav;
  std::string masks_path;
  std::string out_csv;
  std::optional<std::string> geometry_path;
  SslSchedule schedule;
  double grid_step_deg = 5.0;
};
int cmd_ssl(const SslArgs& args);

struct DesignBeamsArgs {
  std::string out_path;
  std::optional<std::string> geometry_path;
  double loading = 1e-2;
  int num_beams = 18;
};
int cmd_design_beams(const DesignBeamsArgs& args);

struct EvalArgs {
  std::string out_wav[2];
  std::string truth_dir;
  std::optional<std::string> mix_wav;   // enables improvement columns
  std::optional<std::string> track_csv; // enables angular-error summary
  std::optional<std::string> csv_path;
  int latency_frames = 24;
};
int cmd_eval(const EvalArgs& args);

struct AuditArgs {
  std::string in_wav;
  std::optional<std::string> config_path;
  std::optional<std::string> truth_dir;
  int probes = 10;
  uint64_t seed = 1;
};
int cmd_audit(const AuditArgs& args);

struct BenchArgs {
  double duration_s = 30.0;
  std::optional<std::string> config_path;
  uint64_t seed = 1;
};
int cmd_bench(const BenchArgs& args);

/// Shared helpers.
PipelineConfig config_from_args(const std::optional<std::string>& path);
void print_report(const RunReport& report);

}  // namespace streamsep::cli

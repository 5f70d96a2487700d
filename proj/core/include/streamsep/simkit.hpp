#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "streamsep/geometry.hpp"
#include "streamsep/pipeline.hpp"
#include "streamsep/signal.hpp"

namespace streamsep {

struct SourceSpec {
  Eigen::VectorXd signal;  // mono samples at the scenario rate
  std::vector<std::pair<long, long>> utterances;  // sample intervals in signal
  double azimuth_deg = 0.0;
  double onset_s = 0.0;
  double level_db = -20.0;  // RMS dBFS over the utterance support
  std::string name;
};

/// Synthetic far-field scene: anechoic point sources rendered through
/// the array's exact fractional delays plus diffuse noise shaped to the
/// sinc coherence. Reproducible from the seed.
struct Scenario {
  std::vector<SourceSpec> sources;
  double noise_level_db = -200.0;  // below -150 disables noise
  double duration_s = 10.0;
  ArrayGeometry geometry = ArrayGeometry::circular_default();
  FrameConfig frame;
  uint64_t seed = 1;
};

struct Utterance {
  int source = 0;
  long begin_sample = 0;
  long end_sample = 0;
};

struct GroundTruth {
  std::vector<Eigen::VectorXd> clean_ref_signals;  // per source, scene length
  std::vector<Eigen::MatrixXcd> clean_ref_specs;   // frames x bins
  Eigen::VectorXd noise_ref_signal;
  std::vector<std::vector<bool>> active;  // per source, per frame
  std::vector<double> angles_deg;
  std::vector<Utterance> utterances;
  FrameConfig frame;
};

struct SimResult {
  std::vector<Eigen::VectorXd> channels;
  GroundTruth truth;
};

SimResult synthesize(const Scenario& scenario);

/// Scale-invariant signal-to-distortion ratio in dB, capped to +-100.
double si_sdr_db(const Eigen::VectorXd& estimate,
                 const Eigen::VectorXd& reference);

double rms_dbfs(const Eigen::VectorXd& x);

/// Per-utterance fraction of cross-correlated energy captured by the
/// dominant output channel; outputs must already be latency-aligned.
std::vector<double> channel_purity(
    const std::array<Eigen::VectorXd, 2>& outputs_aligned,
    const GroundTruth& truth);

/// Undo the pipeline's output delay: aligned[k] = out[k + latency].
std::array<Eigen::VectorXd, 2> align_outputs(const OutputStreams& out,
                                             int latency_frames,
                                             const FrameConfig& config);

/// Noise driven through a syllabic envelope and a gentle lowpass;
/// `utterances` receives the active intervals. With `continuous` the
/// whole duration is active, chopped into ~4 s marked segments.
Eigen::VectorXd make_speechlike(double duration_s, int sample_rate,
                                uint64_t seed,
                                std::vector<std::pair<long, long>>* utterances,
                                bool continuous = false);

/// Two speakers taking alternating turns with partial overlaps.
Scenario make_meeting_scenario(double duration_s, double angle0_deg,
                               double angle1_deg, uint64_t seed,
                               double noise_level_db = -40.0,
                               double level_db = -20.0);

/// Two speakers talking continuously (fully overlapped, 0 dB mix).
Scenario make_overlap_scenario(double duration_s, double angle0_deg,
                               double angle1_deg, uint64_t seed,
                               double noise_level_db = -40.0,
                               double level_db = -20.0);

/// Oracle masks plus clean reference spectrograms for the pipeline's
/// oracle estimator and post-filter.
OracleResources make_oracle_resources(
    const std::vector<Eigen::VectorXd>& mixture, const GroundTruth& truth);

}  // namespace streamsep

#include "streamsep/simkit.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <stdexcept>

#include "streamsep/beamforming.hpp"

namespace streamsep {

namespace {

long next_pow2(long n) {
  long p = 1;
  while (p < n) p <<= 1;
  return p;
}

// Exact fractional delays applied over one long FFT of the whole scene.
// The content sits at [pad, pad + len); delays are far smaller than the
// padding, so nothing wraps into the extracted region.
std::vector<Eigen::VectorXd> render_source(const Eigen::VectorXd& placed,
                                           double azimuth_deg,
                                           const ArrayGeometry& geometry,
                                           int sample_rate) {
  const long len = placed.size();
  const long pad = 512;
  const long fft_len = next_pow2(len + 2 * pad);
  Fft fft(static_cast<int>(fft_len));

  Eigen::VectorXd buf = Eigen::VectorXd::Zero(fft_len);
  buf.segment(pad, len) = placed;
  Eigen::VectorXcd spectrum(fft_len / 2 + 1);
  fft.forward(buf.data(), spectrum.data());

  std::vector<Eigen::VectorXd> out(geometry.num_mics());
  Eigen::VectorXcd shifted(fft_len / 2 + 1);
  Eigen::VectorXd time(fft_len);
  for (int m = 0; m < geometry.num_mics(); ++m) {
    const double tau = geometry.relative_delay_s(m, azimuth_deg);
    for (long j = 0; j <= fft_len / 2; ++j) {
      const double f = static_cast<double>(j) * sample_rate / fft_len;
      shifted[j] =
          spectrum[j] * std::polar(1.0, -2.0 * std::numbers::pi * f * tau);
    }
    shifted[fft_len / 2].imag(0.0);  // keep the inverse transform real
    fft.inverse(shifted.data(), time.data());
    out[m] = time.segment(pad, len);
  }
  return out;
}

// Diffuse noise: independent per-channel spectra colored per frequency
// by the Cholesky factor of the sinc coherence.
std::vector<Eigen::VectorXd> render_diffuse_noise(long len,
                                                  const ArrayGeometry& geometry,
                                                  int sample_rate,
                                                  std::mt19937_64& rng) {
  const int mics = geometry.num_mics();
  const long fft_len = next_pow2(len);
  const long bins = fft_len / 2 + 1;
  std::normal_distribution<double> gauss(0.0, 1.0);

  Eigen::MatrixXcd white(mics, bins);
  for (long j = 0; j < bins; ++j)
    for (int m = 0; m < mics; ++m) {
      if (j == 0 || j == bins - 1)
        white(m, j) = gauss(rng);
      else
        white(m, j) = std::complex<double>(gauss(rng), gauss(rng));
    }

  const Eigen::MatrixXd ridge = 1e-9 * Eigen::MatrixXd::Identity(mics, mics);
  for (long j = 0; j < bins; ++j) {
    const double f = static_cast<double>(j) * sample_rate / fft_len;
    Eigen::LLT<Eigen::MatrixXd> llt(diffuse_coherence(geometry, f) + ridge);
    white.col(j) = (llt.matrixL() * white.col(j)).eval();
  }

  Fft fft(static_cast<int>(fft_len));
  std::vector<Eigen::VectorXd> out(mics);
  Eigen::VectorXd time(fft_len);
  Eigen::VectorXcd spec(bins);
  for (int m = 0; m < mics; ++m) {
    spec = white.row(m).transpose();
    spec[0].imag(0.0);
    spec[bins - 1].imag(0.0);
    fft.inverse(spec.data(), time.data());
    out[m] = time.head(len);
  }
  return out;
}

double support_rms(const Eigen::VectorXd& x,
                   const std::vector<std::pair<long, long>>& utterances) {
  double energy = 0.0;
  long count = 0;
  if (utterances.empty()) {
    energy = x.squaredNorm();
    count = x.size();
  } else {
    for (const auto& [a, b] : utterances) {
      const long begin = std::max<long>(a, 0);
      const long end = std::min<long>(b, x.size());
      if (end <= begin) continue;
      energy += x.segment(begin, end - begin).squaredNorm();
      count += end - begin;
    }
  }
  if (count == 0 || energy <= 0.0) return 0.0;
  return std::sqrt(energy / count);
}

}  // namespace

SimResult synthesize(const Scenario& scenario) {
  scenario.geometry.validate();
  scenario.frame.validate();
  if (scenario.duration_s <= 0.0)
    throw std::invalid_argument("scenario: duration must be > 0");
  for (const auto& s : scenario.sources)
    if (s.azimuth_deg < 0.0 || s.azimuth_deg >= 360.0)
      throw std::invalid_argument("scenario: azimuth outside [0, 360)");

  const int sr = scenario.frame.sample_rate;
  const long len = static_cast<long>(std::llround(scenario.duration_s * sr));
  const int mics = scenario.geometry.num_mics();
  const int ref = scenario.geometry.reference_index;

  SimResult result;
  result.channels.assign(mics, Eigen::VectorXd::Zero(len));
  GroundTruth& truth = result.truth;
  truth.frame = scenario.frame;
  truth.noise_ref_signal = Eigen::VectorXd::Zero(len);

  std::mt19937_64 rng(scenario.seed);

  for (size_t i = 0; i < scenario.sources.size(); ++i) {
    const SourceSpec& src = scenario.sources[i];
    const long onset = static_cast<long>(std::llround(src.onset_s * sr));
    Eigen::VectorXd placed = Eigen::VectorXd::Zero(len);
    const long copy = std::min<long>(src.signal.size(), len - onset);
    if (copy > 0) placed.segment(onset, copy) = src.signal.head(copy);

    std::vector<std::pair<long, long>> placed_utts;
    for (const auto& [a, b] : src.utterances) {
      const long begin = std::clamp<long>(a + onset, 0, len);
      const long end = std::clamp<long>(b + onset, 0, len);
      if (end > begin) placed_utts.emplace_back(begin, end);
    }
    if (placed_utts.empty() && copy > 0)
      placed_utts.emplace_back(onset, onset + copy);

    const double rms = support_rms(placed, placed_utts);
    if (rms > 0.0)
      placed *= std::pow(10.0, src.level_db / 20.0) / rms;

    auto rendered =
        render_source(placed, src.azimuth_deg, scenario.geometry, sr);
    for (int m = 0; m < mics; ++m) result.channels[m] += rendered[m];

    truth.clean_ref_signals.push_back(rendered[ref]);
    truth.angles_deg.push_back(src.azimuth_deg);
    for (const auto& [a, b] : placed_utts)
      truth.utterances.push_back({static_cast<int>(i), a, b});
  }

  if (scenario.noise_level_db > -150.0) {
    auto noise = render_diffuse_noise(len, scenario.geometry, sr, rng);
    const double rms = std::sqrt(noise[ref].squaredNorm() / len);
    const double gain =
        rms > 0.0 ? std::pow(10.0, scenario.noise_level_db / 20.0) / rms : 0.0;
    for (int m = 0; m < mics; ++m) {
      noise[m] *= gain;
      result.channels[m] += noise[m];
    }
    truth.noise_ref_signal = noise[ref];
  }

  const int frames = scenario.frame.num_frames(len);
  for (size_t i = 0; i < scenario.sources.size(); ++i) {
    if (len >= scenario.frame.frame_length)
      truth.clean_ref_specs.push_back(
          [&] {
            const MultiChannelSpectrogram s =
                stft(truth.clean_ref_signals[i], scenario.frame);
            Eigen::MatrixXcd m(s.num_frames(), s.num_bins());
            for (int t = 0; t < s.num_frames(); ++t)
              for (int k = 0; k < s.num_bins(); ++k) m(t, k) = s.at(0, t, k);
            return m;
          }());
    std::vector<bool> act(frames, false);
    for (const auto& u : truth.utterances) {
      if (u.source != static_cast<int>(i)) continue;
      for (int t = 0; t < frames; ++t) {
        const long fb = static_cast<long>(t) * scenario.frame.frame_shift;
        const long fe = fb + scenario.frame.frame_length;
        if (fb < u.end_sample && u.begin_sample < fe) act[t] = true;
      }
    }
    truth.active.push_back(std::move(act));
  }
  return result;
}

double si_sdr_db(const Eigen::VectorXd& estimate,
                 const Eigen::VectorXd& reference) {
  if (estimate.size() != reference.size())
    throw std::invalid_argument("si_sdr: length mismatch");
  const double ref_energy = reference.squaredNorm();
  if (ref_energy <= 0.0)
    throw std::invalid_argument("si_sdr: silent reference");
  const double alpha = estimate.dot(reference) / ref_energy;
  const double target_energy = alpha * alpha * ref_energy;
  const double residual_energy =
      (estimate - alpha * reference).squaredNorm();
  if (target_energy <= 0.0) return -100.0;
  if (residual_energy <= 0.0) return 100.0;
  const double db = 10.0 * std::log10(target_energy / residual_energy);
  return std::clamp(db, -100.0, 100.0);
}

double rms_dbfs(const Eigen::VectorXd& x) {
  if (x.size() == 0) return -240.0;
  const double rms = std::sqrt(x.squaredNorm() / x.size());
  return 20.0 * std::log10(rms + 1e-12);
}

std::vector<double> channel_purity(
    const std::array<Eigen::VectorXd, 2>& outputs_aligned,
    const GroundTruth& truth) {
  std::vector<double> purity;
  purity.reserve(truth.utterances.size());
  for (const auto& u : truth.utterances) {
    const long len = std::min<long>(outputs_aligned[0].size(), u.end_sample) -
                     u.begin_sample;
    if (len <= 0) {
      purity.push_back(0.0);
      continue;
    }
    const Eigen::VectorXd clean =
        truth.clean_ref_signals[u.source].segment(u.begin_sample, len);
    double energy[2];
    for (int i = 0; i < 2; ++i) {
      const double c =
          outputs_aligned[i].segment(u.begin_sample, len).dot(clean);
      energy[i] = c * c;
    }
    const double total = energy[0] + energy[1];
    purity.push_back(total > 0.0 ? std::max(energy[0], energy[1]) / total
                                 : 0.0);
  }
  return purity;
}

std::array<Eigen::VectorXd, 2> align_outputs(const OutputStreams& out,
                                             int latency_frames,
                                             const FrameConfig& config) {
  const long shift = static_cast<long>(latency_frames) * config.frame_shift;
  std::array<Eigen::VectorXd, 2> aligned;
  for (int i = 0; i < 2; ++i) {
    const Eigen::VectorXd& ch = out.channels[i];
    aligned[i] = Eigen::VectorXd::Zero(ch.size());
    if (shift < ch.size())
      aligned[i].head(ch.size() - shift) = ch.tail(ch.size() - shift);
  }
  return aligned;
}

Eigen::VectorXd make_speechlike(double duration_s, int sample_rate,
                                uint64_t seed,
                                std::vector<std::pair<long, long>>* utterances,
                                bool continuous) {
  const long total = static_cast<long>(std::llround(duration_s * sample_rate));
  Eigen::VectorXd out = Eigen::VectorXd::Zero(total);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> uni(0.0, 1.0);

  auto fill_utterance = [&](long begin, long end) {
    const double f_syl = 2.5 + 2.0 * uni(rng);
    const double phase = 2.0 * std::numbers::pi * uni(rng);
    const double a = 1.0 - std::exp(-2.0 * std::numbers::pi * 1500.0 /
                                    sample_rate);
    double lp = 0.0;
    const long ramp = sample_rate / 50;  // 20 ms fades
    double energy = 0.0;
    for (long n = begin; n < end; ++n) {
      const double w = gauss(rng);
      lp += a * (w - lp);
      const double t = static_cast<double>(n - begin) / sample_rate;
      double env = 0.4 + 0.6 * std::abs(std::sin(
                                    2.0 * std::numbers::pi * f_syl * t + phase));
      const long from_edge = std::min(n - begin, end - 1 - n);
      if (from_edge < ramp)
        env *= static_cast<double>(from_edge + 1) / ramp;
      out[n] = env * (0.75 * lp + 0.25 * w);
      energy += out[n] * out[n];
    }
    if (energy > 0.0)
      out.segment(begin, end - begin) /=
          std::sqrt(energy / static_cast<double>(end - begin));
  };

  if (continuous) {
    const long chunk = 4 * sample_rate;
    for (long begin = 0; begin < total; begin += chunk) {
      const long end = std::min(begin + chunk, total);
      fill_utterance(begin, end);
      if (utterances && end - begin > sample_rate / 4)
        utterances->emplace_back(begin, end);
    }
    return out;
  }

  long pos = static_cast<long>(uni(rng) * 0.5 * sample_rate);
  while (pos < total) {
    const long utt =
        static_cast<long>((1.5 + 2.0 * uni(rng)) * sample_rate);
    const long end = std::min(pos + utt, total);
    if (end - pos < sample_rate / 4) break;
    fill_utterance(pos, end);
    if (utterances) utterances->emplace_back(pos, end);
    pos = end + static_cast<long>((0.3 + 0.9 * uni(rng)) * sample_rate);
  }
  return out;
}

namespace {

// Content starts after the pipeline's startup span and ends early
// enough that the latency-shifted output still covers it.
constexpr double kSceneLeadInS = 0.6;
constexpr double kSceneLeadOutS = 0.5;

Scenario two_source_scenario(double duration_s, double angle0_deg,
                             double angle1_deg, uint64_t seed,
                             double noise_level_db, double level_db,
                             bool continuous) {
  Scenario s;
  s.duration_s = duration_s;
  s.seed = seed;
  s.noise_level_db = noise_level_db;
  const double content_s =
      std::max(1.0, duration_s - kSceneLeadInS - kSceneLeadOutS);
  const double angles[2] = {angle0_deg, angle1_deg};
  for (int i = 0; i < 2; ++i) {
    SourceSpec src;
    src.azimuth_deg = angles[i];
    src.level_db = level_db;
    src.onset_s = kSceneLeadInS;
    src.name = i == 0 ? "speaker0" : "speaker1";
    src.signal = make_speechlike(content_s, s.frame.sample_rate,
                                 seed * 2654435761ULL + i + 1,
                                 &src.utterances, continuous);
    s.sources.push_back(std::move(src));
  }
  return s;
}

}  // namespace

Scenario make_meeting_scenario(double duration_s, double angle0_deg,
                               double angle1_deg, uint64_t seed,
                               double noise_level_db, double level_db) {
  // Alternating turns with partial overlaps, built on a shared timeline.
  Scenario s;
  s.duration_s = duration_s;
  s.seed = seed;
  s.noise_level_db = noise_level_db;
  const int sr = s.frame.sample_rate;
  const long total = static_cast<long>(std::llround(duration_s * sr));
  const double angles[2] = {angle0_deg, angle1_deg};

  std::array<SourceSpec, 2> sources;
  for (int i = 0; i < 2; ++i) {
    sources[i].azimuth_deg = angles[i];
    sources[i].level_db = level_db;
    sources[i].signal = Eigen::VectorXd::Zero(total);
    sources[i].name = i == 0 ? "speaker0" : "speaker1";
  }

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> uni(0.0, 1.0);
  long t = static_cast<long>(kSceneLeadInS * sr);
  const long content_end =
      total - static_cast<long>(kSceneLeadOutS * sr);
  int speaker = 0;
  int turn = 0;
  while (t < content_end) {
    const long utt = static_cast<long>((1.5 + 1.5 * uni(rng)) * sr);
    const long end = std::min(t + utt, content_end);
    if (end - t < sr / 4) break;
    std::vector<std::pair<long, long>> one;
    Eigen::VectorXd content = make_speechlike(
        static_cast<double>(end - t) / sr, sr,
        seed * 1000003ULL + 17 * turn + speaker, nullptr, true);
    sources[speaker].signal.segment(t, end - t) = content.head(end - t);
    sources[speaker].utterances.emplace_back(t, end);

    // Every third turn leaves a gap; otherwise the next speaker starts
    // before this turn ends.
    long next;
    if (turn % 3 == 2) {
      next = end + static_cast<long>((0.2 + 0.4 * uni(rng)) * sr);
    } else {
      const long overlap = static_cast<long>((0.3 + 0.6 * uni(rng)) * sr);
      next = std::max(t + sr / 2, end - overlap);
    }
    t = next;
    speaker ^= 1;
    ++turn;
  }
  s.sources.assign(sources.begin(), sources.end());
  return s;
}

Scenario make_overlap_scenario(double duration_s, double angle0_deg,
                               double angle1_deg, uint64_t seed,
                               double noise_level_db, double level_db) {
  return two_source_scenario(duration_s, angle0_deg, angle1_deg, seed,
                             noise_level_db, level_db, true);
}

OracleResources make_oracle_resources(
    const std::vector<Eigen::VectorXd>& mixture, const GroundTruth& truth) {
  if (truth.clean_ref_specs.empty())
    throw std::invalid_argument("oracle resources: no clean spectrograms");
  const int ref = 0;  // mixture spectrogram only validates shapes
  const MultiChannelSpectrogram mix_spec = stft(mixture[ref], truth.frame);
  Eigen::MatrixXcd mix(mix_spec.num_frames(), mix_spec.num_bins());
  for (int t = 0; t < mix_spec.num_frames(); ++t)
    for (int k = 0; k < mix_spec.num_bins(); ++k) mix(t, k) = mix_spec.at(0, t, k);

  Eigen::MatrixXcd noise;
  if (truth.noise_ref_signal.size() >= truth.frame.frame_length) {
    const MultiChannelSpectrogram n = stft(truth.noise_ref_signal, truth.frame);
    noise.resize(n.num_frames(), n.num_bins());
    for (int t = 0; t < n.num_frames(); ++t)
      for (int k = 0; k < n.num_bins(); ++k) noise(t, k) = n.at(0, t, k);
  } else {
    noise = Eigen::MatrixXcd::Zero(mix.rows(), mix.cols());
  }

  OracleResources res;
  res.masks = std::make_shared<MaskSet>(
      oracle_masks(truth.clean_ref_specs, noise, mix));
  res.clean_ref_specs = truth.clean_ref_specs;
  if (res.clean_ref_specs.size() == 1)
    res.clean_ref_specs.push_back(
        Eigen::MatrixXcd::Zero(mix.rows(), mix.cols()));
  return res;
}

}  // namespace streamsep

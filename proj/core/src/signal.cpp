#include "streamsep/signal.hpp"

#include <fftw3.h>

#include <cmath>
#include <mutex>
#include <numbers>
#include <stdexcept>

namespace streamsep {

namespace {

// FFTW planning is not thread-safe; execution with per-instance buffers is.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}

Eigen::VectorXd make_window(WindowKind kind, int length) {
  Eigen::VectorXd w(length);
  switch (kind) {
    case WindowKind::kSqrtHann:
      // sqrt of the periodic Hann window: sin(pi n / N)
      for (int n = 0; n < length; ++n)
        w[n] = std::sin(std::numbers::pi * n / length);
      break;
    case WindowKind::kRect:
      w.setOnes();
      break;
  }
  return w;
}

}  // namespace

void FrameConfig::validate() const {
  if (sample_rate <= 0) throw std::invalid_argument("sample_rate must be > 0");
  if (frame_shift <= 0 || frame_length <= 0)
    throw std::invalid_argument("frame_shift and frame_length must be > 0");
  if (frame_length % frame_shift != 0)
    throw std::invalid_argument("frame_shift must divide frame_length");
  if (frame_length % 2 != 0)
    throw std::invalid_argument("frame_length must be even");
}

Eigen::VectorXd analysis_window(const FrameConfig& config) {
  return make_window(config.window, config.frame_length);
}

Eigen::VectorXd synthesis_window(const FrameConfig& config) {
  return make_window(config.window, config.frame_length);
}

double cola_gain(const FrameConfig& config) {
  const Eigen::VectorXd p =
      analysis_window(config).cwiseProduct(synthesis_window(config));
  const int hop = config.frame_shift;
  double sum = 0.0;
  for (int n = 0; n < config.frame_length; n += hop) sum += p[n];
  return sum;
}

double cola_error(const FrameConfig& config) {
  const Eigen::VectorXd p =
      analysis_window(config).cwiseProduct(synthesis_window(config));
  const int hop = config.frame_shift;
  const double gain = cola_gain(config);
  double worst = 0.0;
  for (int offset = 0; offset < hop; ++offset) {
    double sum = 0.0;
    for (int n = offset; n < config.frame_length; n += hop) sum += p[n];
    worst = std::max(worst, std::abs(sum - gain));
  }
  return worst;
}

bool is_cola(const FrameConfig& config) { return cola_error(config) < 1e-9; }

struct Fft::Impl {
  fftw_plan fwd = nullptr;
  fftw_plan inv = nullptr;
  double* real_buf = nullptr;
  fftw_complex* cplx_buf = nullptr;
};

Fft::Fft(int size) : impl_(std::make_unique<Impl>()), size_(size) {
  if (size <= 0 || size % 2 != 0)
    throw std::invalid_argument("fft size must be positive and even");
  std::lock_guard<std::mutex> lock(planner_mutex());
  impl_->real_buf = fftw_alloc_real(size);
  impl_->cplx_buf = fftw_alloc_complex(size / 2 + 1);
  impl_->fwd = fftw_plan_dft_r2c_1d(size, impl_->real_buf, impl_->cplx_buf,
                                    FFTW_ESTIMATE);
  impl_->inv = fftw_plan_dft_c2r_1d(size, impl_->cplx_buf, impl_->real_buf,
                                    FFTW_ESTIMATE);
  if (!impl_->fwd || !impl_->inv) throw std::runtime_error("fftw plan failed");
}

Fft::~Fft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  if (impl_->fwd) fftw_destroy_plan(impl_->fwd);
  if (impl_->inv) fftw_destroy_plan(impl_->inv);
  fftw_free(impl_->real_buf);
  fftw_free(impl_->cplx_buf);
}

void Fft::forward(const double* in, std::complex<double>* out) const {
  std::copy(in, in + size_, impl_->real_buf);
  fftw_execute(impl_->fwd);
  const int bins = size_ / 2 + 1;
  for (int k = 0; k < bins; ++k)
    out[k] = {impl_->cplx_buf[k][0], impl_->cplx_buf[k][1]};
}

void Fft::inverse(const std::complex<double>* in, double* out) const {
  const int bins = size_ / 2 + 1;
  for (int k = 0; k < bins; ++k) {
    impl_->cplx_buf[k][0] = in[k].real();
    impl_->cplx_buf[k][1] = in[k].imag();
  }
  fftw_execute(impl_->inv);
  const double scale = 1.0 / size_;
  for (int n = 0; n < size_; ++n) out[n] = impl_->real_buf[n] * scale;
}

MultiChannelSpectrogram::MultiChannelSpectrogram(int channels, int frames,
                                                 const FrameConfig& config)
    : channels_(channels),
      frames_(frames),
      bins_(config.num_bins()),
      config_(config) {
  if (channels < 0 || frames < 0)
    throw std::invalid_argument("negative spectrogram dimensions");
  data_.assign(static_cast<size_t>(channels) * frames * bins_, {0.0, 0.0});
}

Eigen::MatrixXcd MultiChannelSpectrogram::frame_matrix(int frame) const {
  Eigen::MatrixXcd m(channels_, bins_);
  for (int c = 0; c < channels_; ++c)
    for (int k = 0; k < bins_; ++k) m(c, k) = at(c, frame, k);
  return m;
}

void MultiChannelSpectrogram::set_frame_matrix(int frame,
                                               const Eigen::MatrixXcd& m) {
  for (int c = 0; c < channels_; ++c)
    for (int k = 0; k < bins_; ++k) at(c, frame, k) = m(c, k);
}

bool MultiChannelSpectrogram::all_finite() const {
  for (const auto& v : data_)
    if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
  return true;
}

MultiChannelSpectrogram stft(const std::vector<Eigen::VectorXd>& channels,
                             const FrameConfig& config) {
  config.validate();
  if (channels.empty()) throw std::invalid_argument("stft: empty input");
  const long len = channels[0].size();
  for (const auto& ch : channels)
    if (ch.size() != len)
      throw std::invalid_argument("stft: channel length mismatch");
  if (len < config.frame_length)
    throw std::invalid_argument("stft: input shorter than one frame");

  const int frames = config.num_frames(len);
  MultiChannelSpectrogram spec(static_cast<int>(channels.size()), frames,
                               config);
  const Eigen::VectorXd window = analysis_window(config);
  Fft fft(config.frame_length);
  Eigen::VectorXd buf(config.frame_length);
  for (size_t c = 0; c < channels.size(); ++c) {
    for (int t = 0; t < frames; ++t) {
      const long start = static_cast<long>(t) * config.frame_shift;
      buf = channels[c].segment(start, config.frame_length).cwiseProduct(
          window);
      fft.forward(buf.data(), spec.frame(static_cast<int>(c), t).data());
    }
  }
  return spec;
}

MultiChannelSpectrogram stft(const Eigen::VectorXd& mono,
                             const FrameConfig& config) {
  return stft(std::vector<Eigen::VectorXd>{mono}, config);
}

Eigen::VectorXd istft(const MultiChannelSpectrogram& spec, int channel) {
  if (channel < 0 || channel >= spec.num_channels())
    throw std::invalid_argument("istft: channel out of range");
  if (!is_cola(spec.config()))
    throw std::invalid_argument("istft: window pair is not constant-overlap-add");
  OverlapAddSynth synth(spec.config());
  const int bins = spec.num_bins();
  std::vector<Eigen::VectorXd> pieces;
  Eigen::VectorXcd frame_bins(bins);
  long total = 0;
  for (int t = 0; t < spec.num_frames(); ++t) {
    for (int k = 0; k < bins; ++k) frame_bins[k] = spec.at(channel, t, k);
    pieces.push_back(synth.push(frame_bins));
    total += pieces.back().size();
  }
  pieces.push_back(synth.flush());
  total += pieces.back().size();
  Eigen::VectorXd out(total);
  long pos = 0;
  for (const auto& p : pieces) {
    out.segment(pos, p.size()) = p;
    pos += p.size();
  }
  return out;
}

FrameAnalyzer::FrameAnalyzer(int channels, const FrameConfig& config)
    : config_(config),
      window_(analysis_window(config)),
      fft_(std::make_unique<Fft>(config.frame_length)),
      time_buf_(config.frame_length),
      bin_buf_(config.num_bins()) {
  (void)channels;
  config.validate();
}

Eigen::MatrixXcd FrameAnalyzer::analyze(
    const std::vector<Eigen::VectorXd>& channels, int frame) const {
  const long start = static_cast<long>(frame) * config_.frame_shift;
  Eigen::MatrixXcd out(static_cast<int>(channels.size()), config_.num_bins());
  for (size_t c = 0; c < channels.size(); ++c) {
    time_buf_ =
        channels[c].segment(start, config_.frame_length).cwiseProduct(window_);
    fft_->forward(time_buf_.data(), bin_buf_.data());
    out.row(static_cast<int>(c)) = bin_buf_.transpose();
  }
  return out;
}

OverlapAddSynth::OverlapAddSynth(const FrameConfig& config)
    : config_(config),
      window_product_(
          analysis_window(config).cwiseProduct(synthesis_window(config))),
      synthesis_(synthesis_window(config)),
      fft_(std::make_unique<Fft>(config.frame_length)),
      acc_(Eigen::VectorXd::Zero(config.frame_length)),
      profile_(Eigen::VectorXd::Zero(config.frame_length)),
      time_buf_(config.frame_length) {
  if (!is_cola(config))
    throw std::invalid_argument(
        "OverlapAddSynth: window pair is not constant-overlap-add");
}

Eigen::VectorXd OverlapAddSynth::push(const Eigen::VectorXcd& bins) {
  const int n = config_.frame_length;
  const int hop = config_.frame_shift;
  fft_->inverse(bins.data(), time_buf_.data());
  acc_ += time_buf_.cwiseProduct(synthesis_);
  profile_ += window_product_;
  ++frames_pushed_;

  // The leading hop samples no longer overlap any future frame.
  Eigen::VectorXd out(hop);
  for (int i = 0; i < hop; ++i)
    out[i] = profile_[i] > 1e-12 ? acc_[i] / profile_[i] : 0.0;
  // Slide the accumulators by one hop.
  acc_.head(n - hop) = acc_.tail(n - hop).eval();
  acc_.tail(hop).setZero();
  profile_.head(n - hop) = profile_.tail(n - hop).eval();
  profile_.tail(hop).setZero();
  emitted_ += hop;
  return out;
}

Eigen::VectorXd OverlapAddSynth::flush() {
  const int n = config_.frame_length;
  const int hop = config_.frame_shift;
  if (frames_pushed_ == 0) return Eigen::VectorXd(0);
  // Remaining tail of the final frame.
  const int tail = n - hop;
  Eigen::VectorXd out(tail);
  for (int i = 0; i < tail; ++i)
    out[i] = profile_[i] > 1e-12 ? acc_[i] / profile_[i] : 0.0;
  acc_.setZero();
  profile_.setZero();
  emitted_ += tail;
  return out;
}

}  // namespace streamsep

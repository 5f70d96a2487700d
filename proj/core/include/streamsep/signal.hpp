#pragma once

#include <complex>
#include <memory>
#include <span>
#include <vector>

#include <Eigen/Dense>

namespace streamsep {

enum class WindowKind { kSqrtHann, kRect };

/// Frame parameters shared by every STFT-domain stage.
struct FrameConfig {
  int sample_rate = 16000;
  int frame_shift = 256;   // 0.016 s at 16 kHz
  int frame_length = 512;
  WindowKind window = WindowKind::kSqrtHann;

  int num_bins() const { return frame_length / 2 + 1; }
  double frame_period_s() const {
    return static_cast<double>(frame_shift) / sample_rate;
  }
  double bin_hz(int bin) const {
    return static_cast<double>(bin) * sample_rate / frame_length;
  }
  /// Frames produced from `num_samples` samples (tail shorter than one
  /// frame is dropped).
  int num_frames(long num_samples) const {
    if (num_samples < frame_length) return 0;
    return static_cast<int>((num_samples - frame_length) / frame_shift) + 1;
  }
  void validate() const;  // throws std::invalid_argument
};

Eigen::VectorXd analysis_window(const FrameConfig& config);
Eigen::VectorXd synthesis_window(const FrameConfig& config);

/// Overlap-add profile of analysis*synthesis over one shift period.
/// A constant-overlap-add pair has max deviation < 1e-9 from the gain.
double cola_gain(const FrameConfig& config);
double cola_error(const FrameConfig& config);
bool is_cola(const FrameConfig& config);

/// One-sided real FFT of a fixed size, FFTW-backed. Instances are cheap
/// to create and not safe for concurrent use; make one per thread.
class Fft {
 public:
  explicit Fft(int size);
  ~Fft();
  Fft(const Fft&) = delete;
  Fft& operator=(const Fft&) = delete;

  int size() const { return size_; }
  /// in: size() reals; out: size()/2+1 bins.
  void forward(const double* in, std::complex<double>* out) const;
  /// Inverse of forward (includes the 1/N normalization).
  void inverse(const std::complex<double>* in, double* out) const;

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
  int size_;
};

/// Complex time-frequency tensor indexed (channel, frame, bin).
class MultiChannelSpectrogram {
 public:
  MultiChannelSpectrogram() = default;
  MultiChannelSpectrogram(int channels, int frames, const FrameConfig& config);

  int num_channels() const { return channels_; }
  int num_frames() const { return frames_; }
  int num_bins() const { return bins_; }
  const FrameConfig& config() const { return config_; }

  std::complex<double>& at(int channel, int frame, int bin) {
    return data_[index(channel, frame, bin)];
  }
  const std::complex<double>& at(int channel, int frame, int bin) const {
    return data_[index(channel, frame, bin)];
  }
  /// Contiguous bins of one (channel, frame).
  std::span<const std::complex<double>> frame(int channel, int frame) const {
    return {data_.data() + index(channel, frame, 0),
            static_cast<size_t>(bins_)};
  }
  std::span<std::complex<double>> frame(int channel, int frame) {
    return {data_.data() + index(channel, frame, 0),
            static_cast<size_t>(bins_)};
  }
  /// channels x bins matrix of one frame (column = observation vector).
  Eigen::MatrixXcd frame_matrix(int frame) const;
  void set_frame_matrix(int frame, const Eigen::MatrixXcd& m);

  bool all_finite() const;

 private:
  size_t index(int channel, int frame, int bin) const {
    return (static_cast<size_t>(channel) * frames_ + frame) * bins_ + bin;
  }
  std::vector<std::complex<double>> data_;
  int channels_ = 0;
  int frames_ = 0;
  int bins_ = 0;
  FrameConfig config_;
};

/// Analysis. All channels must have the same length >= frame_length;
/// the first frame starts at sample 0, trailing samples are dropped.
MultiChannelSpectrogram stft(const std::vector<Eigen::VectorXd>& channels,
                             const FrameConfig& config);
MultiChannelSpectrogram stft(const Eigen::VectorXd& mono,
                             const FrameConfig& config);

/// Synthesis of one channel; requires a constant-overlap-add window pair.
/// Output length is (frames-1)*shift + length; the fully overlapped
/// interior reproduces the input of an unmodified analysis/synthesis
/// round trip to within 1e-6 relative RMS.
Eigen::VectorXd istft(const MultiChannelSpectrogram& spec, int channel = 0);

/// Computes single frames on demand; used by the streaming pipeline.
class FrameAnalyzer {
 public:
  FrameAnalyzer(int channels, const FrameConfig& config);
  /// channels x bins matrix for frame index `frame` of `channels` input.
  Eigen::MatrixXcd analyze(const std::vector<Eigen::VectorXd>& channels,
                           int frame) const;

 private:
  FrameConfig config_;
  Eigen::VectorXd window_;
  std::unique_ptr<Fft> fft_;
  mutable Eigen::VectorXd time_buf_;
  mutable Eigen::VectorXcd bin_buf_;
};

/// Streaming weighted overlap-add synthesis. push() returns the samples
/// that became final (no future frame overlaps them anymore).
class OverlapAddSynth {
 public:
  explicit OverlapAddSynth(const FrameConfig& config);
  Eigen::VectorXd push(const Eigen::VectorXcd& bins);
  Eigen::VectorXd flush();
  long samples_emitted() const { return emitted_; }

 private:
  FrameConfig config_;
  Eigen::VectorXd window_product_;  // analysis * synthesis
  Eigen::VectorXd synthesis_;
  std::unique_ptr<Fft> fft_;
  Eigen::VectorXd acc_;      // pending signal tail
  Eigen::VectorXd profile_;  // pending window-product tail
  Eigen::VectorXd time_buf_;
  long emitted_ = 0;
  int frames_pushed_ = 0;
};

}  // namespace streamsep

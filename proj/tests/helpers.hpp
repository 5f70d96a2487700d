#pragma once

#include <complex>
#include <numbers>
#include <random>
#include <vector>

#include <Eigen/Dense>

#include "streamsep/signal.hpp"

namespace testing_helpers {

inline Eigen::VectorXd random_signal(long n, uint64_t seed,
                                     double amplitude = 1.0) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> dist(-amplitude, amplitude);
  Eigen::VectorXd x(n);
  for (long i = 0; i < n; ++i) x[i] = dist(rng);
  return x;
}

// O(N^2) reference DFT of one windowed frame; independent of the FFT
// path under test.
inline Eigen::VectorXcd brute_force_frame_dft(const Eigen::VectorXd& samples,
                                              long frame_start,
                                              const Eigen::VectorXd& window) {
  const long n = window.size();
  Eigen::VectorXcd out(n / 2 + 1);
  for (long k = 0; k <= n / 2; ++k) {
    std::complex<double> acc = 0.0;
    for (long i = 0; i < n; ++i) {
      const double phase = -2.0 * std::numbers::pi * k * i / n;
      acc += samples[frame_start + i] * window[i] *
             std::complex<double>(std::cos(phase), std::sin(phase));
    }
    out[k] = acc;
  }
  return out;
}

// Relative RMS error over the fully overlapped interior of a
// reconstruction.
inline double interior_relative_rms(const Eigen::VectorXd& original,
                                    const Eigen::VectorXd& reconstructed,
                                    const streamsep::FrameConfig& config) {
  const long margin = config.frame_length - config.frame_shift;
  const long end =
      std::min<long>(original.size(), reconstructed.size()) - margin;
  if (end <= margin) return 0.0;
  const long n = end - margin;
  const double err =
      (original.segment(margin, n) - reconstructed.segment(margin, n)).norm();
  const double ref = original.segment(margin, n).norm();
  return ref > 0 ? err / ref : err;
}

}  // namespace testing_helpers

#pragma once

#include <string>
#include <vector>

#include <Eigen/Dense>

namespace streamsep {

struct WavData {
  std::vector<Eigen::VectorXd> channels;  // samples in [-1, 1]
  int sample_rate = 0;
};

/// Reads PCM 16-bit or IEEE float32 RIFF/WAVE files.
WavData read_wav(const std::string& path);

enum class WavFormat { kFloat32, kPcm16 };

void write_wav(const std::string& path,
               const std::vector<Eigen::VectorXd>& channels, int sample_rate,
               WavFormat format = WavFormat::kFloat32);

}  // namespace streamsep

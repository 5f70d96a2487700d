#include "streamsep/wav.hpp"

#include <algorithm>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace streamsep {

namespace {

struct Reader {
  std::ifstream in;
  explicit Reader(const std::string& path)
      : in(path, std::ios::binary) {
    if (!in) throw std::runtime_error("cannot open wav file: " + path);
  }
  void bytes(void* dst, size_t n) {
    in.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
    if (!in) throw std::runtime_error("wav: truncated file");
  }
  uint32_t u32() {
    uint32_t v;
    bytes(&v, 4);
    return v;
  }
  uint16_t u16() {
    uint16_t v;
    bytes(&v, 2);
    return v;
  }
  void skip(std::streamoff n) { in.seekg(n, std::ios::cur); }
};

template <typename T>
void put(std::ofstream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

}  // namespace

WavData read_wav(const std::string& path) {
  Reader r(path);
  char tag[4];
  r.bytes(tag, 4);
  if (std::memcmp(tag, "RIFF", 4) != 0)
    throw std::runtime_error("wav: not a RIFF file");
  r.u32();  // riff size
  r.bytes(tag, 4);
  if (std::memcmp(tag, "WAVE", 4) != 0)
    throw std::runtime_error("wav: not a WAVE file");

  uint16_t format = 0, channels = 0, bits = 0;
  uint32_t rate = 0;
  bool have_fmt = false;
  WavData out;

  while (r.in.peek() != EOF) {
    if (!r.in.good()) break;
    char chunk[4];
    r.in.read(chunk, 4);
    if (r.in.gcount() < 4) break;
    const uint32_t size = r.u32();
    if (std::memcmp(chunk, "fmt ", 4) == 0) {
      format = r.u16();
      channels = r.u16();
      rate = r.u32();
      r.u32();  // byte rate
      r.u16();  // block align
      bits = r.u16();
      if (size > 16) r.skip(size - 16);
      have_fmt = true;
    } else if (std::memcmp(chunk, "data", 4) == 0) {
      if (!have_fmt) throw std::runtime_error("wav: data before fmt");
      if (channels == 0) throw std::runtime_error("wav: zero channels");
      const bool pcm16 = format == 1 && bits == 16;
      const bool f32 = format == 3 && bits == 32;
      if (!pcm16 && !f32)
        throw std::runtime_error(
            "wav: unsupported format (need PCM16 or float32)");
      const size_t bytes_per = bits / 8;
      const size_t frames = size / (bytes_per * channels);
      out.channels.assign(channels, Eigen::VectorXd(frames));
      std::vector<char> raw(size);
      r.bytes(raw.data(), size);
      for (size_t n = 0; n < frames; ++n) {
        for (int c = 0; c < channels; ++c) {
          const char* p = raw.data() + (n * channels + c) * bytes_per;
          double v;
          if (pcm16) {
            int16_t s;
            std::memcpy(&s, p, 2);
            v = static_cast<double>(s) / 32768.0;
          } else {
            float f;
            std::memcpy(&f, p, 4);
            v = f;
          }
          out.channels[c][static_cast<long>(n)] = v;
        }
      }
      if (size % 2 == 1) r.skip(1);
    } else {
      r.skip(size + (size % 2));
    }
  }
  if (!have_fmt || out.channels.empty())
    throw std::runtime_error("wav: missing fmt or data chunk");
  out.sample_rate = static_cast<int>(rate);
  return out;
}

void write_wav(const std::string& path,
               const std::vector<Eigen::VectorXd>& channels, int sample_rate,
               WavFormat format) {
  if (channels.empty()) throw std::invalid_argument("wav: no channels");
  const long frames = channels[0].size();
  for (const auto& ch : channels)
    if (ch.size() != frames)
      throw std::invalid_argument("wav: channel length mismatch");

  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write wav file: " + path);

  const uint16_t num_channels = static_cast<uint16_t>(channels.size());
  const uint16_t bits = format == WavFormat::kFloat32 ? 32 : 16;
  const uint16_t fmt = format == WavFormat::kFloat32 ? 3 : 1;
  const uint32_t data_size =
      static_cast<uint32_t>(frames * num_channels * (bits / 8));

  out.write("RIFF", 4);
  put<uint32_t>(out, 36 + data_size);
  out.write("WAVE", 4);
  out.write("fmt ", 4);
  put<uint32_t>(out, 16);
  put<uint16_t>(out, fmt);
  put<uint16_t>(out, num_channels);
  put<uint32_t>(out, static_cast<uint32_t>(sample_rate));
  put<uint32_t>(out,
                static_cast<uint32_t>(sample_rate) * num_channels * (bits / 8));
  put<uint16_t>(out, num_channels * (bits / 8));
  put<uint16_t>(out, bits);
  out.write("data", 4);
  put<uint32_t>(out, data_size);

  for (long n = 0; n < frames; ++n) {
    for (const auto& ch : channels) {
      if (format == WavFormat::kFloat32) {
        put<float>(out, static_cast<float>(ch[n]));
      } else {
        const double clamped = std::clamp(ch[n], -1.0, 1.0);
        put<int16_t>(out, static_cast<int16_t>(
                              std::lround(clamped * 32767.0)));
      }
    }
  }
}

}  // namespace streamsep

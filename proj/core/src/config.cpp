#include "streamsep/config.hpp"

#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>

namespace streamsep {

namespace {

std::string trim(const std::string& s) {
  const auto begin = s.find_first_not_of(" \t\r");
  if (begin == std::string::npos) return "";
  const auto end = s.find_last_not_of(" \t\r");
  return s.substr(begin, end - begin + 1);
}

EstimatorChoice parse_estimator(const std::string& v) {
  if (v == "oracle") return EstimatorChoice::kOracle;
  if (v == "baseline") return EstimatorChoice::kBaseline;
  if (v == "adversarial") return EstimatorChoice::kAdversarial;
  if (v == "faulty") return EstimatorChoice::kFaulty;
  throw std::invalid_argument("config: unknown estimator '" + v + "'");
}

PostFilterChoice parse_post_filter(const std::string& v) {
  if (v == "mask-reuse") return PostFilterChoice::kMaskReuse;
  if (v == "oracle") return PostFilterChoice::kOracle;
  if (v == "passthrough") return PostFilterChoice::kPassthrough;
  throw std::invalid_argument("config: unknown post_filter '" + v + "'");
}

}  // namespace

PipelineConfig parse_pipeline_config(const std::string& text) {
  PipelineConfig config;
  std::istringstream in(text);
  std::string line, section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw std::invalid_argument("config: bad section header: " + line);
      section = trim(line.substr(1, line.size() - 2));
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos)
      throw std::invalid_argument("config: expected key = value: " + line);
    const std::string key =
        (section.empty() ? "" : section + ".") + trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    try {
      if (key == "stft.sample_rate") config.frame.sample_rate = std::stoi(value);
      else if (key == "stft.frame_shift") config.frame.frame_shift = std::stoi(value);
      else if (key == "stft.frame_length") config.frame.frame_length = std::stoi(value);
      else if (key == "stft.window") {
        if (value == "sqrt_hann") config.frame.window = WindowKind::kSqrtHann;
        else if (value == "rect") config.frame.window = WindowKind::kRect;
        else throw std::invalid_argument("unknown window '" + value + "'");
      }
      else if (key == "geometry.file") config.geometry = load_geometry(value);
      else if (key == "geometry.preset") {
        if (value != "circular7")
          throw std::invalid_argument("unknown geometry preset '" + value + "'");
        config.geometry = ArrayGeometry::circular_default();
      }
      else if (key == "separation.estimator") config.estimator = parse_estimator(value);
      else if (key == "separation.lookahead") config.estimator_lookahead = std::stoi(value);
      else if (key == "separation.buffer_frames") config.stitch.buffer_frames = std::stoi(value);
      else if (key == "ssl.window") config.schedule.window_frames = std::stoi(value);
      else if (key == "ssl.stride") config.schedule.stride_frames = std::stoi(value);
      else if (key == "ssl.margin") config.schedule.margin_frames = std::stoi(value);
      else if (key == "ssl.epsilon") config.schedule.epsilon = std::stod(value);
      else if (key == "ssl.grid_step") config.ssl_grid_step_deg = std::stod(value);
      else if (key == "enhancement.post_filter") config.post_filter = parse_post_filter(value);
      else if (key == "enhancement.num_beams") config.num_beams = std::stoi(value);
      else if (key == "enhancement.diagonal_loading") config.diagonal_loading = std::stod(value);
      else if (key == "enhancement.beam_bank") config.beam_bank_path = value;
      else throw std::invalid_argument("unknown key '" + key + "'");
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("config line " + std::to_string(lineno) +
                                  ": " + e.what());
    }
  }
  config.validate();
  return config;
}

PipelineConfig load_pipeline_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config file: " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_pipeline_config(ss.str());
}

std::string serialize_pipeline_config(const PipelineConfig& c) {
  std::ostringstream out;
  out << "[stft]\n"
      << "sample_rate = " << c.frame.sample_rate << "\n"
      << "frame_shift = " << c.frame.frame_shift << "\n"
      << "frame_length = " << c.frame.frame_length << "\n"
      << "window = "
      << (c.frame.window == WindowKind::kSqrtHann ? "sqrt_hann" : "rect")
      << "\n\n[separation]\n"
      << "estimator = " << to_string(c.estimator) << "\n"
      << "lookahead = " << c.estimator_lookahead << "\n"
      << "buffer_frames = " << c.stitch.buffer_frames << "\n\n[ssl]\n"
      << "window = " << c.schedule.window_frames << "\n"
      << "stride = " << c.schedule.stride_frames << "\n"
      << "margin = " << c.schedule.margin_frames << "\n"
      << "epsilon = " << c.schedule.epsilon << "\n"
      << "grid_step = " << c.ssl_grid_step_deg << "\n\n[enhancement]\n"
      << "post_filter = " << to_string(c.post_filter) << "\n"
      << "num_beams = " << c.num_beams << "\n"
      << "diagonal_loading = " << c.diagonal_loading << "\n";
  if (c.beam_bank_path) out << "beam_bank = " << *c.beam_bank_path << "\n";
  return out.str();
}

}  // namespace streamsep

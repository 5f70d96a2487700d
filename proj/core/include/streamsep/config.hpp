#pragma once

#include <string>

#include "streamsep/pipeline.hpp"

namespace streamsep {

/// Sectioned key = value text config mirroring PipelineConfig; every key
/// is optional and defaults to the standard low-latency profile
/// (16 kHz, 512/256 frames, 150-frame buffers, look-ahead 4, SSL window
/// 50 / stride 10 / margin 20, 18 beams). See README for the key list.
PipelineConfig parse_pipeline_config(const std::string& text);
PipelineConfig load_pipeline_config(const std::string& path);
std::string serialize_pipeline_config(const PipelineConfig& config);

}  // namespace streamsep

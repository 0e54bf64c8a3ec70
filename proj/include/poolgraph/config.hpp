#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "poolgraph/detectors.hpp"
#include "poolgraph/pipeline.hpp"

namespace poolgraph {

/// Everything a run needs besides the stream. An empty architecture list means the built-in set.
struct RunConfig {
  PipelineConfig pipeline;
  std::vector<ArchitectureSpec> architectures;

  std::vector<ArchitectureSpec> arch_set() const;
};

/// Sets one configuration field from text. Keys: batch_size, alpha, beta, gamma, theta_drift,
/// resolution, capacity, damping, seed, mode, shuffle_louvain, threshold_policy, threshold_k,
/// threshold_window, threshold_q. Throws Error on an unknown key or a malformed value.
void set_config_value(PipelineConfig& config, std::string_view key, std::string_view value);

/// Flat key=value text with optional [pipeline], [threshold] and [architectures] sections.
/// Inside [threshold] the keys are policy, k, window and q. Each [architectures] line is an
/// architecture spec such as "knn window=8 neighbors=5". '#' starts a comment.
RunConfig parse_config(std::string_view text);
RunConfig load_config(const std::filesystem::path& path);
std::string format_config(const RunConfig& config);

}  // namespace poolgraph

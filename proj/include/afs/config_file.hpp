#pragma once

#include <iosfwd>
#include <string>

#include "afs/config.hpp"
#include "afs/harness.hpp"

// Plain-text run configuration:
//
//   # comment
//   [pipeline]
//   n_steps = 50
//   t_split = 0.8,0.6,0.4
//   ...
//   [family]
//   name = attribute
//   target_weight = 0.2
//   ...
//   [rubric]
//   count_checks = false
//
// Parsing is strict: unknown sections, unknown keys, malformed values, and
// keys outside any section all throw InvalidArgument naming the line.  The
// parsed result is validated before being returned.

namespace afs {

struct RunConfig {
  PipelineConfig pipeline;
  std::string family = "attribute";
  DifficultyParams difficulty;
};

RunConfig load_run_config(std::istream& in);
RunConfig load_run_config_file(const std::string& path);

}  // namespace afs

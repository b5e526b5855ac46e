#include "afs/config_file.hpp"

#include <fstream>
#include <istream>
#include <string>

#include "afs/errors.hpp"
#include "afs/text_format.hpp"

namespace afs {
namespace {

std::string trim(const std::string& s) {
  const std::size_t a = s.find_first_not_of(" \t\r");
  if (a == std::string::npos) return "";
  const std::size_t b = s.find_last_not_of(" \t\r");
  return s.substr(a, b - a + 1);
}

bool parse_bool(const std::string& v, std::size_t line) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw InvalidArgument("config line " + std::to_string(line) +
                        ": expected true/false, got '" + v + "'");
}

[[noreturn]] void fail(std::size_t line, const std::string& what) {
  throw InvalidArgument("config line " + std::to_string(line) + ": " + what);
}

}  // namespace

RunConfig load_run_config(std::istream& in) {
  RunConfig rc;
  std::string section;
  std::string raw;
  std::size_t line_no = 0;

  while (std::getline(in, raw)) {
    ++line_no;
    const std::string line = trim(raw);
    if (line.empty() || line[0] == '#') continue;

    if (line.front() == '[') {
      if (line.back() != ']') fail(line_no, "unterminated section header");
      section = line.substr(1, line.size() - 2);
      if (section != "pipeline" && section != "family" &&
          section != "rubric") {
        fail(line_no, "unknown section [" + section + "]");
      }
      continue;
    }

    const std::size_t eq = line.find('=');
    if (eq == std::string::npos) fail(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail(line_no, "empty key");
    if (section.empty()) {
      fail(line_no, "key '" + key + "' appears before any [section]");
    }

    try {
      if (section == "pipeline") {
        PipelineConfig& p = rc.pipeline;
        if (key == "n_steps") {
          p.n_steps = text::parse_size(value);
        } else if (key == "t_split") {
          p.t_split = text::parse_double_list(value);
        } else if (key == "horizon") {
          p.horizon = text::parse_size(value);
        } else if (key == "width") {
          p.width = text::parse_size(value);
        } else if (key == "eta") {
          p.eta = text::parse_double(value);
        } else if (key == "sigma") {
          p.sigma = text::parse_double(value);
        } else if (key == "threshold") {
          p.threshold = text::parse_double(value);
        } else if (key == "max_retries") {
          p.max_retries = static_cast<int>(text::parse_size(value));
        } else if (key == "skip_search_when_clean") {
          p.skip_search_when_clean = parse_bool(value, line_no);
        } else if (key == "deep_scoring") {
          p.deep_scoring = parse_bool(value, line_no);
        } else if (key == "critic") {
          if (value == "oracle") {
            p.critic_mode = CriticMode::kOracle;
          } else if (value == "remote") {
            p.critic_mode = CriticMode::kRemote;
          } else {
            fail(line_no, "critic must be 'oracle' or 'remote'");
          }
        } else if (key == "fallback_to_oracle") {
          p.fallback_to_oracle = parse_bool(value, line_no);
        } else if (key == "remote_refine") {
          p.remote_refine = parse_bool(value, line_no);
        } else {
          fail(line_no, "unknown [pipeline] key '" + key + "'");
        }
      } else if (section == "family") {
        if (key == "name") {
          rc.family = value;
        } else if (key == "target_weight") {
          rc.difficulty.target_weight = text::parse_double(value);
        } else if (key == "basin_separation") {
          rc.difficulty.basin_separation = text::parse_double(value);
        } else if (key == "noise_scale") {
          rc.difficulty.noise_scale = text::parse_double(value);
        } else {
          fail(line_no, "unknown [family] key '" + key + "'");
        }
      } else {  // rubric
        RubricConfig& r = rc.pipeline.rubric;
        if (key == "count_checks") {
          r.enable_count_checks = parse_bool(value, line_no);
        } else if (key == "bleeding") {
          r.enable_bleeding = parse_bool(value, line_no);
        } else if (key == "bonuses") {
          r.enable_bonuses = parse_bool(value, line_no);
        } else {
          fail(line_no, "unknown [rubric] key '" + key + "'");
        }
      }
    } catch (const InvalidArgument& e) {
      const std::string what = e.what();
      if (what.rfind("config line", 0) == 0) throw;
      fail(line_no, what);
    }
  }

  rc.pipeline.validate();
  rc.difficulty.validate();
  make_family(rc.family, rc.difficulty);  // validates the family name
  return rc;
}

RunConfig load_run_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidArgument("cannot open config file '" + path + "'");
  try {
    return load_run_config(in);
  } catch (const InvalidArgument& e) {
    throw InvalidArgument(path + ": " + e.what());
  }
}

}  // namespace afs

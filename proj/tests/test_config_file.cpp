#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <filesystem>
#include <sstream>
#include <string>

#include "afs/config_file.hpp"
#include "afs/errors.hpp"

using namespace afs;

namespace {

RunConfig parse(const std::string& text) {
  std::istringstream in(text);
  return load_run_config(in);
}

std::string error_of(const std::string& text) {
  try {
    parse(text);
  } catch (const InvalidArgument& e) {
    return e.what();
  }
  return "";
}

}  // namespace

TEST_CASE("the shipped default config reproduces the built-in defaults") {
  const std::filesystem::path here(__FILE__);
  const std::filesystem::path cfg =
      here.parent_path().parent_path() / "configs" / "default.cfg";
  REQUIRE(std::filesystem::exists(cfg));

  const RunConfig rc = load_run_config_file(cfg.string());
  const PipelineConfig fresh;
  CHECK(rc.pipeline.n_steps == fresh.n_steps);
  CHECK(rc.pipeline.t_split == fresh.t_split);
  CHECK(rc.pipeline.horizon == fresh.horizon);
  CHECK(rc.pipeline.width == fresh.width);
  CHECK(rc.pipeline.eta == fresh.eta);
  CHECK(rc.pipeline.sigma == fresh.sigma);
  CHECK(rc.pipeline.threshold == fresh.threshold);
  CHECK(rc.pipeline.max_retries == fresh.max_retries);
  CHECK(rc.pipeline.skip_search_when_clean == fresh.skip_search_when_clean);
  CHECK(rc.pipeline.deep_scoring == fresh.deep_scoring);
  CHECK(rc.pipeline.critic_mode == fresh.critic_mode);
  CHECK(rc.pipeline.fallback_to_oracle == fresh.fallback_to_oracle);
  CHECK(rc.pipeline.remote_refine == fresh.remote_refine);
  CHECK(rc.pipeline.rubric.enable_count_checks == false);
  CHECK(rc.pipeline.rubric.enable_bleeding == false);
  CHECK(rc.pipeline.rubric.enable_bonuses == false);

  CHECK(rc.family == "attribute");
  const DifficultyParams d;
  CHECK(rc.difficulty.target_weight == d.target_weight);
  CHECK(rc.difficulty.basin_separation == d.basin_separation);
  CHECK(rc.difficulty.noise_scale == d.noise_scale);
}

TEST_CASE("parser tolerates comments, blank lines, and spacing") {
  const RunConfig rc = parse(
      "# leading comment\n"
      "\n"
      "  [pipeline]  \n"
      "   n_steps=40\n"
      "t_split =  0.8, 0.5\n"
      "eta= 3.5\n"
      "# trailing comment\n"
      "[family]\n"
      "name = spatial\n");
  CHECK(rc.pipeline.n_steps == 40);
  CHECK(rc.pipeline.t_split == std::vector<double>{0.8, 0.5});
  CHECK(rc.pipeline.eta == 3.5);
  CHECK(rc.family == "spatial");
  // Unset keys keep their defaults.
  CHECK(rc.pipeline.width == PipelineConfig{}.width);
}

TEST_CASE("later assignments override earlier ones") {
  const RunConfig rc = parse(
      "[pipeline]\n"
      "width = 1\n"
      "width = 3\n");
  CHECK(rc.pipeline.width == 3);
}

TEST_CASE("boolean and enum keys parse their full value sets") {
  const RunConfig rc = parse(
      "[pipeline]\n"
      "skip_search_when_clean = 0\n"
      "deep_scoring = true\n"
      "critic = remote\n"
      "fallback_to_oracle = 1\n"
      "[rubric]\n"
      "count_checks = true\n"
      "bleeding = false\n"
      "bonuses = 1\n");
  CHECK_FALSE(rc.pipeline.skip_search_when_clean);
  CHECK(rc.pipeline.deep_scoring);
  CHECK(rc.pipeline.critic_mode == CriticMode::kRemote);
  CHECK(rc.pipeline.fallback_to_oracle);
  CHECK(rc.pipeline.rubric.enable_count_checks);
  CHECK_FALSE(rc.pipeline.rubric.enable_bleeding);
  CHECK(rc.pipeline.rubric.enable_bonuses);
}

TEST_CASE("strict errors carry the offending line number") {
  SUBCASE("unknown section") {
    const std::string what = error_of("[pipelines]\n");
    CHECK(what.find("line 1") != std::string::npos);
    CHECK(what.find("unknown section") != std::string::npos);
  }
  SUBCASE("unterminated section header") {
    CHECK(error_of("[pipeline\n").find("unterminated") != std::string::npos);
  }
  SUBCASE("unknown key names the section") {
    const std::string what = error_of("[pipeline]\nstep_count = 50\n");
    CHECK(what.find("line 2") != std::string::npos);
    CHECK(what.find("[pipeline] key") != std::string::npos);
  }
  SUBCASE("key before any section") {
    const std::string what = error_of("n_steps = 50\n");
    CHECK(what.find("before any [section]") != std::string::npos);
  }
  SUBCASE("line without an equals sign") {
    CHECK(error_of("[pipeline]\nn_steps 50\n").find("key = value") !=
          std::string::npos);
  }
  SUBCASE("empty key") {
    CHECK(error_of("[pipeline]\n = 50\n").find("empty key") !=
          std::string::npos);
  }
  SUBCASE("malformed numeric value") {
    const std::string what = error_of("[pipeline]\n\neta = fast\n");
    CHECK(what.find("line 3") != std::string::npos);
  }
  SUBCASE("malformed decision-point list") {
    const std::string what = error_of("[pipeline]\nt_split = 0.8,,0.4\n");
    CHECK(what.find("line 2") != std::string::npos);
  }
  SUBCASE("bad boolean") {
    CHECK(error_of("[pipeline]\ndeep_scoring = yes\n").find("true/false") !=
          std::string::npos);
  }
  SUBCASE("bad critic mode") {
    CHECK(error_of("[pipeline]\ncritic = local\n")
              .find("'oracle' or 'remote'") != std::string::npos);
  }
  SUBCASE("unknown family key") {
    CHECK(error_of("[family]\nscale = 2\n").find("[family] key") !=
          std::string::npos);
  }
  SUBCASE("unknown rubric key") {
    CHECK(error_of("[rubric]\nstrictness = 9\n").find("[rubric] key") !=
          std::string::npos);
  }
}

TEST_CASE("semantic validation runs after parsing") {
  SUBCASE("unknown family name") {
    CHECK_THROWS_AS(parse("[family]\nname = photoreal\n"), LookupError);
  }
  SUBCASE("out-of-range difficulty") {
    CHECK_THROWS_AS(parse("[family]\ntarget_weight = 1.5\n"),
                    InvalidArgument);
  }
  SUBCASE("infeasible decision-point geometry") {
    // t_split 0.05 on a 50-step grid leaves no room for the default
    // 5-step horizon before t=0.
    CHECK_THROWS_AS(parse("[pipeline]\nt_split = 0.05\n"), InvalidArgument);
  }
  SUBCASE("decision points outside (0,1)") {
    CHECK_THROWS_AS(parse("[pipeline]\nt_split = 1.0,0.5\n"),
                    InvalidArgument);
  }
}

TEST_CASE("missing config files are reported by path") {
  try {
    load_run_config_file("/nonexistent/afs.cfg");
    FAIL("expected InvalidArgument");
  } catch (const InvalidArgument& e) {
    CHECK(std::string(e.what()).find("/nonexistent/afs.cfg") !=
          std::string::npos);
  }
}

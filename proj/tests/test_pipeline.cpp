#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <bit>
#include <cstdint>
#include <string>
#include <vector>

#include "afs/critic.hpp"
#include "afs/critic_remote.hpp"
#include "afs/errors.hpp"
#include "afs/flow.hpp"
#include "afs/harness.hpp"
#include "afs/pipeline.hpp"

using namespace afs;

namespace {

bool same_bits(const std::vector<double>& a, const std::vector<double>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::bit_cast<std::uint64_t>(a[i]) !=
        std::bit_cast<std::uint64_t>(b[i])) {
      return false;
    }
  }
  return true;
}

// One decision point keeps scripted-critic call counting simple: each
// attempt scores the stage's base branch once and the final sample once.
PipelineConfig single_stage_config() {
  PipelineConfig c;
  c.t_split = {0.6};
  return c;
}

}  // namespace

TEST_CASE("redesign_decision gates on threshold and retry budget") {
  PipelineConfig config;
  config.threshold = 7.5;
  config.max_retries = 2;
  using D = RedesignDecision;

  CHECK(redesign_decision(7.5, 0, config) == D::kContinue);  // not strictly below
  CHECK(redesign_decision(7.49, 0, config) == D::kRetry);
  CHECK(redesign_decision(-10.0, 1, config) == D::kRetry);
  CHECK(redesign_decision(-10.0, 2, config) == D::kContinue);  // budget spent
  CHECK_THROWS_AS(
      redesign_decision(std::numeric_limits<double>::quiet_NaN(), 0, config),
      InvalidArgument);
}

TEST_CASE("threshold vignettes drive the retry loop") {
  const SceneBundle bundle = make_family("attribute").make();
  PipelineConfig config = single_stage_config();

  SUBCASE("a stuck-low critic exhausts every retry") {
    config.max_retries = 2;
    ScriptedCritic critic({5.0});
    const GenerationResult r = generate(bundle.scene, bundle.model,
                                        bundle.decoder, config, 1, &critic);
    CHECK(r.attempts.size() == 3);
    CHECK(r.retries_used() == 2);
    CHECK(r.final_score() == 5.0);
  }
  SUBCASE("a floor threshold never retries") {
    config.threshold = -10.0;
    config.max_retries = 2;
    ScriptedCritic critic({-10.0});
    const GenerationResult r = generate(bundle.scene, bundle.model,
                                        bundle.decoder, config, 1, &critic);
    CHECK(r.attempts.size() == 1);
    CHECK(r.retries_used() == 0);
  }
  SUBCASE("one failing attempt, then success") {
    config.max_retries = 2;
    ScriptedCritic critic({7.0, 7.0, 9.0, 9.0});
    const GenerationResult r = generate(bundle.scene, bundle.model,
                                        bundle.decoder, config, 1, &critic);
    CHECK(r.attempts.size() == 2);
    CHECK(r.final_score() == 9.0);
    CHECK(critic.calls() == 4);
  }
  SUBCASE("attempt count is bounded by 1 + max_retries") {
    config.max_retries = 3;
    ScriptedCritic critic({0.0});
    const GenerationResult r = generate(bundle.scene, bundle.model,
                                        bundle.decoder, config, 1, &critic);
    CHECK(r.attempts.size() == 4);
  }
  SUBCASE("the best attempt wins, earliest on ties") {
    config.max_retries = 1;
    config.threshold = 9.5;
    ScriptedCritic down({9.0, 9.0, 5.0, 5.0});
    const GenerationResult r = generate(bundle.scene, bundle.model,
                                        bundle.decoder, config, 2, &down);
    REQUIRE(r.attempts.size() == 2);
    CHECK(r.best_attempt == 0);
    CHECK(r.final_score() == 9.0);

    ScriptedCritic flat({6.0});
    const GenerationResult tie = generate(bundle.scene, bundle.model,
                                          bundle.decoder, config, 2, &flat);
    REQUIRE(tie.attempts.size() == 2);
    CHECK(tie.best_attempt == 0);
  }
}

TEST_CASE("closed loop with width 1 collapses to open-loop integration") {
  const SceneBundle bundle = make_family("attribute").make();
  PipelineConfig config;
  config.width = 1;
  config.max_retries = 0;

  const GenerationResult r =
      generate(bundle.scene, bundle.model, bundle.decoder, config, 0xAB);
  REQUIRE(r.attempts.size() == 1);
  const AttemptRecord& a = r.attempts[0];
  CHECK(a.final_state.t == 0.0);

  const SampleState prior = sample_prior(bundle.model.dim(), a.attempt_seed);
  const Trajectory open = euler_integrate(prior, make_gmm_field(bundle.model),
                                          0.0, config.n_steps);
  CHECK(same_bits(a.final_state.values, open.end_state().values));
}

TEST_CASE("generation records are structurally sound and reproducible") {
  const SceneBundle bundle = make_family("complex").make();
  PipelineConfig config;
  config.n_steps = 25;
  config.t_split = {0.6, 0.4};

  const GenerationResult r =
      generate(bundle.scene, bundle.model, bundle.decoder, config, 99);
  CHECK(r.seed == 99);
  CHECK(r.specs.size() == r.attempts.size());
  for (const AttemptRecord& a : r.attempts) {
    CHECK(a.final_state.t == 0.0);
    REQUIRE(a.stages.size() == 2);
    CHECK(a.stages[0].stage_t > a.stages[1].stage_t);
    for (const SearchStageResult& s : a.stages) {
      CHECK(s.stage_t > 0.0);
      CHECK(s.stage_t < 1.0);
    }
  }
  // Distinct attempts restart from distinct derived seeds.
  if (r.attempts.size() > 1) {
    CHECK(r.attempts[0].attempt_seed != r.attempts[1].attempt_seed);
  }

  const GenerationResult again =
      generate(bundle.scene, bundle.model, bundle.decoder, config, 99);
  CHECK(again.to_json().dump() == r.to_json().dump());

  const GenerationResult other =
      generate(bundle.scene, bundle.model, bundle.decoder, config, 100);
  CHECK(other.to_json().dump() != r.to_json().dump());
}

TEST_CASE("refine_constraints canonicalizes and applies edits") {
  SceneSpec spec;
  spec.latent_dim = 2;
  ConceptEmbedding longer{"alpha", {3.0, 4.0}};
  ConceptEmbedding unit{"beta", {0.0, 1.0}};
  spec.concept_table = {{"alpha", longer}, {"beta", unit}};
  spec.slots = {{"obj0", "alpha", std::nullopt}};
  spec.slot_layout = {{"obj0", {0, 2}}};
  spec.instruction = "";  // synthesized by refinement

  SUBCASE("canonicalization normalizes, defaults weights, fills instruction") {
    const SceneSpec refined = refine_constraints(spec);
    CHECK(refined.concept_table[0].second.vector ==
          std::vector<double>{0.6, 0.8});
    CHECK(refined.concept_table[1].second.vector ==
          std::vector<double>{0.0, 1.0});
    CHECK(refined.integrity_weight("obj0") == 1.0);
    CHECK_FALSE(refined.instruction.empty());

    // Second pass is bitwise idempotent and logs nothing new.
    const SceneSpec twice = refine_constraints(refined);
    CHECK(same_bits(twice.concept_table[0].second.vector,
                    refined.concept_table[0].second.vector));
    CHECK(twice.revision_log.size() == refined.revision_log.size());
    CHECK(twice.instruction == refined.instruction);
  }
  SUBCASE("failure feedback doubles failing-slot weights and logs it") {
    FailureFeedback feedback;
    feedback.failing_slots = {"obj0"};
    feedback.summary = "attempt 1 scored 4.5";
    const SceneSpec refined = refine_constraints(spec, &feedback);
    CHECK(refined.integrity_weight("obj0") == 2.0);
    REQUIRE(refined.revision_log.size() == 2);
    CHECK(refined.revision_log[1] == "attempt 1 scored 4.5");

    const SceneSpec doubled = refine_constraints(refined, &feedback);
    CHECK(doubled.integrity_weight("obj0") == 4.0);

    FailureFeedback unknown;
    unknown.failing_slots = {"objX"};
    CHECK_THROWS_AS(refine_constraints(spec, &unknown), LookupError);
  }
  SUBCASE("proposals may tune emphasis but not move goalposts") {
    RefineProposal proposal;
    proposal.instruction = "rewritten";
    proposal.edits = {{"obj0", "integrity_weight", 2.5}};
    const SceneSpec refined = refine_constraints(spec, nullptr, &proposal);
    CHECK(refined.integrity_weight("obj0") == 2.5);
    CHECK(refined.instruction == "rewritten");
    CHECK(refined.revision_log.size() == 2);

    RefineProposal off_limits;
    off_limits.edits = {{"obj0", "target_concept", 1.0}};
    CHECK_THROWS_AS(refine_constraints(spec, nullptr, &off_limits),
                    ConstraintViolation);

    RefineProposal nonpositive;
    nonpositive.edits = {{"obj0", "integrity_weight", 0.0}};
    CHECK_THROWS_AS(refine_constraints(spec, nullptr, &nonpositive),
                    ConstraintViolation);

    RefineProposal unknown;
    unknown.edits = {{"objX", "integrity_weight", 2.0}};
    CHECK_THROWS_AS(refine_constraints(spec, nullptr, &unknown), LookupError);
  }
  SUBCASE("zero-norm concepts cannot be canonicalized") {
    // Scene validation runs before canonicalization and rejects them first.
    SceneSpec degenerate = spec;
    degenerate.concept_table[0].second.vector = {0.0, 0.0};
    CHECK_THROWS_AS(refine_constraints(degenerate), InvalidArgument);
  }
}

TEST_CASE("refine proposals parse strictly from JSON") {
  const json good = {
      {"instruction", "tighten obj0"},
      {"edits",
       {{{"slot_id", "obj0"}, {"field", "integrity_weight"}, {"value", 2.0}}}}};
  const RefineProposal p = refine_proposal_from_json(good);
  CHECK(p.instruction == "tighten obj0");
  REQUIRE(p.edits.size() == 1);
  CHECK(p.edits[0].slot_id == "obj0");
  CHECK(p.edits[0].value == 2.0);

  SUBCASE("non-object roots are rejected") {
    CHECK_THROWS_AS(refine_proposal_from_json(json::array()), ProtocolError);
  }
  SUBCASE("ill-typed members name their JSON path") {
    json broken = good;
    broken["edits"][0]["value"] = "two";
    try {
      refine_proposal_from_json(broken);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.field() == "edits[0].value");
    }
  }
  SUBCASE("edits must be an array") {
    json broken = good;
    broken["edits"] = 7;
    try {
      refine_proposal_from_json(broken);
      FAIL("expected ProtocolError");
    } catch (const ProtocolError& e) {
      CHECK(e.field() == "edits");
    }
  }
}

TEST_CASE("remote transport failures abort or fall back as configured") {
  const SceneBundle bundle = make_family("attribute").make();
  PipelineConfig config = single_stage_config();
  config.max_retries = 0;

  RemoteConfig dead;
  dead.base_url = "http://127.0.0.1:9";  // nothing listens on the discard port
  dead.timeout_ms = 50;
  dead.retries = 0;

  SUBCASE("without fallback the generation aborts") {
    RemoteCritic critic(dead);
    CHECK_THROWS_AS(generate(bundle.scene, bundle.model, bundle.decoder,
                             config, 5, &critic),
                    AbortedGeneration);
  }
  SUBCASE("with fallback the run matches the local oracle exactly") {
    config.fallback_to_oracle = true;
    RemoteCritic critic(dead);
    const GenerationResult remote_run = generate(
        bundle.scene, bundle.model, bundle.decoder, config, 5, &critic);
    const GenerationResult oracle_run =
        generate(bundle.scene, bundle.model, bundle.decoder, config, 5);
    CHECK(remote_run.to_json().dump() == oracle_run.to_json().dump());
  }
}

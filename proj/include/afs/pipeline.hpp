#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "afs/config.hpp"
#include "afs/critic.hpp"
#include "afs/flow.hpp"
#include "afs/preview.hpp"
#include "afs/search.hpp"

// The closed generation loop: integrate, pause at the configured decision
// times for diagnosis + rollout search, finish to t = 0, score, and — when
// the score falls strictly below the redesign threshold — refine the scene
// constraints and retry from a freshly derived seed.

namespace afs {

// Outcome of the post-attempt gate.
enum class RedesignDecision { kContinue, kRetry };

// Retry iff total < config.threshold and another attempt is allowed.
RedesignDecision redesign_decision(double total, std::size_t retries_used,
                                   const PipelineConfig& config);

// What the refinement step learns from a failed attempt.
struct FailureFeedback {
  std::vector<std::string> failing_slots;  // integrity weight doubled
  std::string summary;                     // appended to the revision log
};

// A critic-proposed spec edit.  Only integrity-weight emphasis may be
// edited; attempts to touch targets, spatial constraints, or counts are
// rejected with ConstraintViolation ("the critic tunes emphasis, it does not
// move the goalposts").
struct RefineProposal {
  struct Edit {
    std::string slot_id;
    std::string field;  // must be "integrity_weight"
    double value = 0.0;
  };
  std::string instruction;  // replacement instruction ("" = keep)
  std::vector<Edit> edits;
};

// Strict parse; missing/ill-typed members -> ProtocolError naming the field.
RefineProposal refine_proposal_from_json(const json& j);

// Canonicalizes a spec and applies refinement:
//  - concept vectors are normalized to unit length (skipped when already
//    within 1e-12, so the operation is bitwise idempotent),
//  - every slot gets an explicit integrity weight (default 1.0),
//  - an empty instruction is synthesized from the slot constraints,
//  - feedback doubles the integrity weight of each failing slot,
//  - a proposal may replace the instruction and adjust integrity weights.
// Every change is appended to revision_log.
SceneSpec refine_constraints(const SceneSpec& spec,
                             const FailureFeedback* feedback = nullptr,
                             const RefineProposal* proposal = nullptr);

struct AttemptRecord {
  std::uint64_t attempt_seed = 0;
  std::vector<SearchStageResult> stages;
  SampleState final_state;  // t = 0
  ScoreBreakdown final_score;
};

struct GenerationResult {
  std::uint64_t seed = 0;
  std::vector<AttemptRecord> attempts;
  // Spec actually used by each attempt (refinement evolves it).
  std::vector<SceneSpec> specs;
  std::size_t best_attempt = 0;  // max final total, ties -> earliest

  const AttemptRecord& best() const { return attempts[best_attempt]; }
  double final_score() const { return best().final_score.total; }
  const SampleState& final_state() const { return best().final_state; }
  std::size_t retries_used() const { return attempts.size() - 1; }

  // Full deterministic record; byte-identical across reruns of the same
  // seed/config (the reproducibility tests compare dumps).
  json to_json() const;
};

// Runs up to 1 + config.max_retries attempts.  `critic` defaults to the
// local oracle; remote critics may abort (AbortedGeneration) on transport
// failure unless config.fallback_to_oracle is set.
GenerationResult generate(const SceneSpec& scene, const GmmFlowModel& model,
                          const AffineDecoder& dec,
                          const PipelineConfig& config, std::uint64_t seed,
                          Critic* critic = nullptr);

}  // namespace afs

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "afs/config.hpp"
#include "afs/critic.hpp"
#include "afs/flow.hpp"
#include "afs/preview.hpp"
#include "afs/steering.hpp"

// Parallel rollout search: branch construction from a diagnosis, short-
// horizon simulation, preview scoring, and conservative selection (a failed
// fix must never beat the baseline it failed against).

namespace afs {

enum class BranchKind { kBase, kSteer, kExplore };

const char* branch_kind_name(BranchKind k);  // "base" / "steer" / "explore"

struct ExploreSpec {
  double sigma = 0.0;
  std::uint64_t noise_seed = 0;
};

struct BranchAction {
  BranchKind kind = BranchKind::kBase;
  std::optional<SteeringDirective> directive;  // kSteer only
  std::optional<ExploreSpec> explore;          // kExplore only
};

struct BranchOutcome {
  BranchAction action;
  SampleState end_state;   // t strictly below the stage's decision time
  DecodedPreview preview;  // what the critic scored
  ScoreBreakdown score;
  std::vector<InterventionRecord> intervention_log;
};

// Integrates from grid index i0 to i1, one Euler step per grid interval, so
// a segmented closed-loop run reproduces a single open-loop integration
// bit-for-bit.  `state.t` must equal grid_time(i0).  Hook interventions are
// re-indexed to global step indices and appended to `log` when given.
SampleState walk_grid(const SampleState& state, std::size_t i0, std::size_t i1,
                      const VelocityField& field, const PipelineConfig& config,
                      const StepHook* hook = nullptr,
                      std::vector<InterventionRecord>* log = nullptr);

// The steering directive a diagnosis implies: the target/attained concepts
// embedded into observation space at the diagnosed slot's position, the
// segmenter's mask (with any configured fault injected), and config.eta.
// A "none" attained concept steers away from the target's antipode.
// Throws LookupError when the diagnosis names unknown concepts.
SteeringDirective assemble_directive(const Diagnosis& diag,
                                     const SceneSpec& spec,
                                     const AffineDecoder& dec,
                                     const PipelineConfig& config);

// Width-dependent action set:
//   W=1: [Base]
//   W=2: [Base, Steer]            (Steer -> Explore when diagnosis is clean)
//   W=3: [Base, Steer, Explore]   (Steer -> second Explore when clean)
//   W>3: additional Explore branches, each with an independently derived
//        noise seed.
// stage_seed drives all Explore seeds via the documented derivation.
std::vector<BranchAction> build_branches(const SampleState& state,
                                         const Diagnosis& diag,
                                         const SceneSpec& spec,
                                         const AffineDecoder& dec,
                                         const PipelineConfig& config,
                                         std::uint64_t stage_seed);

// One branch: Base integrates plainly, Steer integrates under the steering
// hook, Explore perturbs the start state then integrates plainly — always
// `horizon` steps along the global grid — then projects, decodes, and has
// the critic score the preview (with deep_scoring, the branch is first
// completed to t = 0 and the final state is scored instead).
BranchOutcome simulate_branch(const SampleState& state,
                              const BranchAction& action,
                              const SceneSpec& spec, const VelocityField& field,
                              const AffineDecoder& dec,
                              const PipelineConfig& config, Critic& critic);

// Max total; ties broken Base > Steer > Explore, then list order.  Returns
// an index into `outcomes`.
std::size_t select_branch(const std::vector<BranchOutcome>& outcomes);

struct SearchStageResult {
  double stage_t = 0.0;        // snapped decision time
  std::size_t stage_index = 0; // grid index of stage_t
  Diagnosis diagnosis;
  bool skipped_clean = false;  // clean diagnosis short-circuited to Base-only
  std::vector<BranchOutcome> outcomes;
  std::size_t chosen = 0;

  const BranchOutcome& chosen_outcome() const { return outcomes[chosen]; }
};

// Full stage: diagnose the projected preview, build branches, simulate them
// (branch dynamics run concurrently; scoring is an ordered, deterministic
// reduce), select.  Remote-critic transport failures fall back to the oracle
// when config.fallback_to_oracle, otherwise abort the generation.
SearchStageResult run_search_stage(const SampleState& state,
                                   const SceneSpec& spec,
                                   const PipelineConfig& config,
                                   const VelocityField& field,
                                   const AffineDecoder& dec, Critic& critic,
                                   std::uint64_t stage_seed);

// One JSON line per branch:
//   {"stage_t":..,"branch_kind":"..","score_total":..,"score_fields":{..},
//    "selected":bool}
void write_stage_jsonl(std::ostream& out, const SearchStageResult& stage);

json stage_to_json(const SearchStageResult& stage);

}  // namespace afs

#include "afs/search.hpp"

#include <cmath>
#include <future>
#include <ostream>
#include <utility>

#include "afs/errors.hpp"
#include "afs/rng.hpp"
#include "afs/text_format.hpp"

namespace afs {
namespace {

constexpr double kGridTolerance = 1e-9;

std::size_t index_on_grid(const SampleState& state,
                          const PipelineConfig& config) {
  const std::size_t idx = config.snap_index(state.t);
  if (std::abs(config.grid_time(idx) - state.t) > kGridTolerance) {
    throw InvalidArgument("state time " + text::fmt17(state.t) +
                          " does not lie on the integration grid");
  }
  return idx;
}

int kind_rank(BranchKind k) {
  switch (k) {
    case BranchKind::kBase:
      return 0;
    case BranchKind::kSteer:
      return 1;
    case BranchKind::kExplore:
      return 2;
  }
  return 3;
}

// Branch dynamics without scoring: pure, safe to run concurrently.
struct BranchDynamics {
  SampleState end_state;
  DecodedPreview scored_preview;
  std::vector<InterventionRecord> log;
};

BranchDynamics run_dynamics(const SampleState& state,
                            const BranchAction& action,
                            const VelocityField& field,
                            const AffineDecoder& dec,
                            const PipelineConfig& config) {
  const std::size_t start = index_on_grid(state, config);
  if (start + config.horizon > config.n_steps) {
    throw InvalidArgument("simulate_branch: horizon overruns t=0");
  }
  BranchDynamics out;
  try {
    SampleState cur = state;
    StepHook hook;
    if (action.kind == BranchKind::kSteer) {
      if (!action.directive) {
        throw InvalidArgument("steer branch without a directive");
      }
      hook = make_steering_hook(*action.directive, dec);
    } else if (action.kind == BranchKind::kExplore) {
      if (!action.explore) {
        throw InvalidArgument("explore branch without an explore payload");
      }
      cur = inject_noise(cur, action.explore->sigma, action.explore->noise_seed);
    }
    out.end_state = walk_grid(cur, start, start + config.horizon, field,
                              config, hook ? &hook : nullptr, &out.log);

    if (config.deep_scoring) {
      const SampleState final_state = walk_grid(
          out.end_state, start + config.horizon, config.n_steps, field, config);
      out.scored_preview =
          decode(DataPreview{final_state.values, 0.0}, dec);
    } else {
      const Velocity v_end = field(out.end_state);
      out.scored_preview = decode(project_to_data(out.end_state, v_end), dec);
    }
  } catch (const NumericalFailure& e) {
    throw NumericalFailure(std::string("branch ") +
                               branch_kind_name(action.kind) + ": " + e.what(),
                           e.step_index());
  }
  return out;
}

ScoreBreakdown score_with_fallback(Critic& critic, const DecodedPreview& p,
                                   const SceneSpec& spec,
                                   const PipelineConfig& config) {
  try {
    return critic.score(p, spec);
  } catch (const TransportError& e) {
    if (config.fallback_to_oracle) {
      OracleCritic oracle(config.rubric);
      return oracle.score(p, spec);
    }
    throw AbortedGeneration(std::string("critic transport failure while "
                                        "scoring (") +
                            e.what() + ")");
  }
}

Diagnosis diagnose_with_fallback(Critic& critic, const DecodedPreview& p,
                                 const SceneSpec& spec,
                                 const PipelineConfig& config) {
  try {
    return critic.diagnose(p, spec);
  } catch (const TransportError& e) {
    if (config.fallback_to_oracle) {
      OracleCritic oracle(config.rubric);
      return oracle.diagnose(p, spec);
    }
    throw AbortedGeneration(std::string("critic transport failure while "
                                        "diagnosing (") +
                            e.what() + ")");
  }
}

}  // namespace

const char* branch_kind_name(BranchKind k) {
  switch (k) {
    case BranchKind::kBase:
      return "base";
    case BranchKind::kSteer:
      return "steer";
    case BranchKind::kExplore:
      return "explore";
  }
  return "?";
}

SampleState walk_grid(const SampleState& state, std::size_t i0, std::size_t i1,
                      const VelocityField& field, const PipelineConfig& config,
                      const StepHook* hook,
                      std::vector<InterventionRecord>* log) {
  if (i0 >= i1 || i1 > config.n_steps) {
    throw InvalidArgument("walk_grid: bad index range");
  }
  SampleState cur = state;
  for (std::size_t i = i0; i < i1; ++i) {
    Trajectory step =
        euler_integrate(cur, field, config.grid_time(i + 1), 1, hook);
    if (log) {
      for (InterventionRecord rec : step.interventions) {
        rec.step_index = i;  // re-index to the global grid
        log->push_back(rec);
      }
    }
    cur = std::move(step.states.back());
  }
  return cur;
}

SteeringDirective assemble_directive(const Diagnosis& diag,
                                     const SceneSpec& spec,
                                     const AffineDecoder& dec,
                                     const PipelineConfig& config) {
  const SlotRange& range = spec.layout(diag.segmentation_keyword);
  const std::size_t obs_dim = dec.rows();
  if (range.end > obs_dim) {
    throw InvalidArgument("assemble_directive: slot range exceeds decoder "
                          "observation dim");
  }

  const auto embed = [&](const std::vector<double>& patch,
                         const std::string& label) {
    ConceptEmbedding e;
    e.label = label;
    e.vector.assign(obs_dim, 0.0);
    for (std::size_t i = 0; i < patch.size(); ++i) {
      e.vector[range.begin + i] = patch[i];
    }
    return e;
  };

  const ConceptEmbedding& pos_patch = spec.concept_of(diag.positive_concept);
  SteeringDirective d;
  d.positive = embed(pos_patch.vector, diag.positive_concept);
  if (diag.negative_concept.empty() || diag.negative_concept == "none") {
    // Nothing attained: repel from the target's antipode, which makes the
    // contrastive energy a pure pull toward the target concept.
    std::vector<double> anti(pos_patch.vector.size());
    for (std::size_t i = 0; i < anti.size(); ++i) {
      anti[i] = -pos_patch.vector[i];
    }
    d.negative = embed(anti, "none");
  } else {
    d.negative = embed(spec.concept_of(diag.negative_concept).vector,
                       diag.negative_concept);
  }
  d.mask = keyword_to_mask(diag.segmentation_keyword, spec, config.mask_fault,
                           config.dilate_dims);
  d.eta = config.eta;
  validate_directive(d, obs_dim, dec.cols());
  return d;
}

std::vector<BranchAction> build_branches(const SampleState& state,
                                         const Diagnosis& diag,
                                         const SceneSpec& spec,
                                         const AffineDecoder& dec,
                                         const PipelineConfig& config,
                                         std::uint64_t stage_seed) {
  (void)state;
  if (config.width < 1) {
    throw InvalidArgument("build_branches: width must be >= 1");
  }
  std::vector<BranchAction> actions;
  actions.push_back({BranchKind::kBase, std::nullopt, std::nullopt});

  std::uint64_t explore_ordinal = 0;
  const auto next_explore = [&]() {
    ExploreSpec e;
    e.sigma = config.sigma;
    e.noise_seed = rng::derive_seed(stage_seed, rng::Purpose::kExploreNoise,
                                    explore_ordinal++);
    return BranchAction{BranchKind::kExplore, std::nullopt, e};
  };

  for (std::size_t slot = 1; slot < config.width; ++slot) {
    if (slot == 1 && diag.needs_correction) {
      BranchAction steer;
      steer.kind = BranchKind::kSteer;
      steer.directive = assemble_directive(diag, spec, dec, config);
      actions.push_back(std::move(steer));
    } else {
      actions.push_back(next_explore());
    }
  }
  return actions;
}

BranchOutcome simulate_branch(const SampleState& state,
                              const BranchAction& action, const SceneSpec& spec,
                              const VelocityField& field,
                              const AffineDecoder& dec,
                              const PipelineConfig& config, Critic& critic) {
  BranchDynamics dyn = run_dynamics(state, action, field, dec, config);
  BranchOutcome out;
  out.action = action;
  out.end_state = std::move(dyn.end_state);
  out.preview = std::move(dyn.scored_preview);
  out.intervention_log = std::move(dyn.log);
  out.score = score_with_fallback(critic, out.preview, spec, config);
  return out;
}

std::size_t select_branch(const std::vector<BranchOutcome>& outcomes) {
  if (outcomes.empty()) {
    throw InvalidArgument("select_branch: empty outcome list");
  }
  std::size_t best = 0;
  for (std::size_t i = 1; i < outcomes.size(); ++i) {
    const bool strictly_better =
        outcomes[i].score.total > outcomes[best].score.total;
    const bool tie_preferred =
        outcomes[i].score.total == outcomes[best].score.total &&
        kind_rank(outcomes[i].action.kind) <
            kind_rank(outcomes[best].action.kind);
    if (strictly_better || tie_preferred) best = i;
  }
  return best;
}

SearchStageResult run_search_stage(const SampleState& state,
                                   const SceneSpec& spec,
                                   const PipelineConfig& config,
                                   const VelocityField& field,
                                   const AffineDecoder& dec, Critic& critic,
                                   std::uint64_t stage_seed) {
  SearchStageResult result;
  result.stage_index = index_on_grid(state, config);
  result.stage_t = state.t;

  const Velocity v = field(state);
  const DecodedPreview decoded = decode(project_to_data(state, v), dec);
  result.diagnosis = diagnose_with_fallback(critic, decoded, spec, config);

  std::vector<BranchAction> actions;
  if (!result.diagnosis.needs_correction && config.skip_search_when_clean) {
    result.skipped_clean = true;
    actions.push_back({BranchKind::kBase, std::nullopt, std::nullopt});
  } else {
    actions =
        build_branches(state, result.diagnosis, spec, dec, config, stage_seed);
  }

  // Dynamics are pure: run them concurrently.  Scoring happens afterwards as
  // an ordered reduce so critics see a deterministic call sequence no matter
  // how the simulations interleave.
  std::vector<BranchDynamics> dynamics(actions.size());
  if (actions.size() == 1) {
    dynamics[0] = run_dynamics(state, actions[0], field, dec, config);
  } else {
    std::vector<std::future<BranchDynamics>> futures;
    futures.reserve(actions.size());
    for (const BranchAction& action : actions) {
      futures.push_back(std::async(std::launch::async, [&, &action = action] {
        return run_dynamics(state, action, field, dec, config);
      }));
    }
    for (std::size_t i = 0; i < futures.size(); ++i) {
      dynamics[i] = futures[i].get();
    }
  }

  result.outcomes.reserve(actions.size());
  for (std::size_t i = 0; i < actions.size(); ++i) {
    BranchOutcome out;
    out.action = std::move(actions[i]);
    out.end_state = std::move(dynamics[i].end_state);
    out.preview = std::move(dynamics[i].scored_preview);
    out.intervention_log = std::move(dynamics[i].log);
    out.score = score_with_fallback(critic, out.preview, spec, config);
    result.outcomes.push_back(std::move(out));
  }
  result.chosen = select_branch(result.outcomes);
  return result;
}

json stage_to_json(const SearchStageResult& stage) {
  json branches = json::array();
  for (std::size_t i = 0; i < stage.outcomes.size(); ++i) {
    const BranchOutcome& b = stage.outcomes[i];
    json rec{{"branch_kind", branch_kind_name(b.action.kind)},
             {"score_total", b.score.total},
             {"score_fields", score_breakdown_to_json(b.score)},
             {"selected", i == stage.chosen},
             {"end_t", b.end_state.t},
             {"end_values", b.end_state.values}};
    if (b.action.explore) {
      rec["sigma"] = b.action.explore->sigma;
      rec["noise_seed"] = b.action.explore->noise_seed;
    }
    if (!b.intervention_log.empty()) {
      json log = json::array();
      for (const InterventionRecord& r : b.intervention_log) {
        log.push_back(json{{"step_index", r.step_index},
                           {"t", r.t},
                           {"energy", r.energy},
                           {"correction_norm", r.correction_norm},
                           {"skipped", r.skipped}});
      }
      rec["interventions"] = log;
    }
    branches.push_back(std::move(rec));
  }
  return json{{"stage_t", stage.stage_t},
              {"stage_index", stage.stage_index},
              {"skipped_clean", stage.skipped_clean},
              {"diagnosis", diagnosis_to_json(stage.diagnosis)},
              {"branches", branches},
              {"chosen", stage.chosen}};
}

void write_stage_jsonl(std::ostream& out, const SearchStageResult& stage) {
  for (std::size_t i = 0; i < stage.outcomes.size(); ++i) {
    const BranchOutcome& b = stage.outcomes[i];
    const json line{{"stage_t", stage.stage_t},
                    {"branch_kind", branch_kind_name(b.action.kind)},
                    {"score_total", b.score.total},
                    {"score_fields", score_breakdown_to_json(b.score)},
                    {"selected", i == stage.chosen}};
    out << line.dump() << "\n";
  }
}

}  // namespace afs

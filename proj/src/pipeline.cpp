#include "afs/pipeline.hpp"

#include <cmath>
#include <optional>
#include <utility>

#include "afs/errors.hpp"
#include "afs/kernels.hpp"
#include "afs/rng.hpp"
#include "afs/text_format.hpp"

namespace afs {
namespace {

constexpr double kUnitNormTolerance = 1e-12;
// A slot counts as failing for refinement purposes when it misses its target,
// violates its spatial constraint, or attains it with a sub-unit margin.
constexpr double kFragileMargin = 1.0;

std::string synthesize_instruction(const SceneSpec& spec) {
  std::string out;
  for (const SlotConstraint& slot : spec.slots) {
    if (!out.empty()) out += "; ";
    out += "place " + slot.target_concept + " at " + slot.slot_id;
    if (slot.spatial) {
      out += " with axis" + std::to_string(slot.spatial->axis) +
             (slot.spatial->sign > 0 ? " > " : " < ") +
             text::fmt17(slot.spatial->boundary);
    }
  }
  return out;
}

ScoreBreakdown score_or_fallback(Critic& critic, const DecodedPreview& p,
                                 const SceneSpec& spec,
                                 const PipelineConfig& config) {
  try {
    return critic.score(p, spec);
  } catch (const TransportError& e) {
    if (config.fallback_to_oracle) {
      OracleCritic oracle(config.rubric);
      return oracle.score(p, spec);
    }
    throw AbortedGeneration(
        std::string("critic transport failure while scoring the final state "
                    "(") +
        e.what() + ")");
  }
}

}  // namespace

RedesignDecision redesign_decision(double total, std::size_t retries_used,
                                   const PipelineConfig& config) {
  if (!std::isfinite(total)) {
    throw InvalidArgument("redesign_decision: non-finite score");
  }
  const bool below = total < config.threshold;
  const bool budget_left =
      retries_used < static_cast<std::size_t>(config.max_retries);
  return (below && budget_left) ? RedesignDecision::kRetry
                                : RedesignDecision::kContinue;
}

RefineProposal refine_proposal_from_json(const json& j) {
  if (!j.is_object()) {
    throw ProtocolError("refine proposal must be a JSON object", "(root)");
  }
  RefineProposal p;
  if (j.contains("instruction")) {
    if (!j["instruction"].is_string()) {
      throw ProtocolError("instruction must be a string", "instruction");
    }
    p.instruction = j["instruction"].get<std::string>();
  }
  if (j.contains("edits")) {
    if (!j["edits"].is_array()) {
      throw ProtocolError("edits must be an array", "edits");
    }
    std::size_t i = 0;
    for (const json& e : j["edits"]) {
      const std::string where = "edits[" + std::to_string(i) + "]";
      if (!e.is_object()) {
        throw ProtocolError("edit must be an object", where);
      }
      RefineProposal::Edit edit;
      if (!e.contains("slot_id") || !e["slot_id"].is_string()) {
        throw ProtocolError("edit needs a string slot_id", where + ".slot_id");
      }
      if (!e.contains("field") || !e["field"].is_string()) {
        throw ProtocolError("edit needs a string field", where + ".field");
      }
      if (!e.contains("value") || !e["value"].is_number()) {
        throw ProtocolError("edit needs a numeric value", where + ".value");
      }
      edit.slot_id = e["slot_id"].get<std::string>();
      edit.field = e["field"].get<std::string>();
      edit.value = e["value"].get<double>();
      p.edits.push_back(std::move(edit));
      ++i;
    }
  }
  return p;
}

SceneSpec refine_constraints(const SceneSpec& spec,
                             const FailureFeedback* feedback,
                             const RefineProposal* proposal) {
  spec.validate();
  SceneSpec out = spec;

  // Canonicalize: unit concepts, explicit weights, non-empty instruction.
  for (auto& [name, emb] : out.concept_table) {
    const double n = kernels::norm(emb.vector);
    if (n <= 0.0) {
      throw DegenerateInput("refine_constraints: concept '" + name +
                            "' has zero norm");
    }
    if (std::abs(n - 1.0) > kUnitNormTolerance) {
      for (double& v : emb.vector) v /= n;
    }
  }
  for (const SlotConstraint& slot : out.slots) {
    out.integrity_weights.emplace(slot.slot_id, 1.0);  // keeps existing
  }
  if (out.instruction.empty()) out.instruction = synthesize_instruction(out);

  if (feedback) {
    for (const std::string& slot_id : feedback->failing_slots) {
      auto it = out.integrity_weights.find(slot_id);
      if (it == out.integrity_weights.end()) {
        throw LookupError("refine_constraints: feedback names unknown slot '" +
                          slot_id + "'");
      }
      it->second *= 2.0;
      out.revision_log.push_back("doubled integrity weight of " + slot_id +
                                 " to " + text::fmt17(it->second));
    }
    if (!feedback->summary.empty()) {
      out.revision_log.push_back(feedback->summary);
    }
  }

  if (proposal) {
    for (const RefineProposal::Edit& edit : proposal->edits) {
      if (edit.field != "integrity_weight") {
        throw ConstraintViolation(
            "refine proposal may only adjust integrity_weight, not '" +
            edit.field + "'");
      }
      if (!std::isfinite(edit.value) || edit.value <= 0.0) {
        throw ConstraintViolation(
            "refine proposal: integrity_weight must be finite and > 0");
      }
      auto it = out.integrity_weights.find(edit.slot_id);
      if (it == out.integrity_weights.end()) {
        throw LookupError("refine proposal names unknown slot '" +
                          edit.slot_id + "'");
      }
      it->second = edit.value;
      out.revision_log.push_back("proposal set integrity weight of " +
                                 edit.slot_id + " to " +
                                 text::fmt17(edit.value));
    }
    if (!proposal->instruction.empty()) {
      out.instruction = proposal->instruction;
      out.revision_log.push_back("proposal replaced instruction");
    }
  }

  out.validate();
  return out;
}

json GenerationResult::to_json() const {
  json attempts_j = json::array();
  for (const AttemptRecord& a : attempts) {
    json stages_j = json::array();
    for (const SearchStageResult& s : a.stages) {
      stages_j.push_back(stage_to_json(s));
    }
    attempts_j.push_back(json{
        {"attempt_seed", a.attempt_seed},
        {"final_t", a.final_state.t},
        {"final_values", a.final_state.values},
        {"final_score", score_breakdown_to_json(a.final_score)},
        {"stages", std::move(stages_j)},
    });
  }
  return json{{"seed", seed},
              {"retries_used", retries_used()},
              {"best_attempt", best_attempt},
              {"final_score_total", final_score()},
              {"attempts", std::move(attempts_j)}};
}

GenerationResult generate(const SceneSpec& scene, const GmmFlowModel& model,
                          const AffineDecoder& dec,
                          const PipelineConfig& config, std::uint64_t seed,
                          Critic* critic) {
  config.validate();
  if (model.dim() != dec.cols()) {
    throw InvalidArgument("generate: decoder consumes " +
                          std::to_string(dec.cols()) +
                          " dims but the flow model produces " +
                          std::to_string(model.dim()));
  }
  const std::vector<std::size_t> decisions = config.decision_indices();
  const VelocityField field = make_gmm_field(model);
  OracleCritic default_oracle(config.rubric);
  Critic& cr = critic ? *critic : default_oracle;

  GenerationResult result;
  result.seed = seed;
  SceneSpec spec_cur = refine_constraints(scene);

  for (std::size_t attempt = 0;; ++attempt) {
    result.specs.push_back(spec_cur);

    AttemptRecord rec;
    rec.attempt_seed = rng::derive_seed(seed, rng::Purpose::kRetry, attempt);
    SampleState state = sample_prior(model.dim(), rec.attempt_seed);

    std::size_t cursor = 0;
    for (std::size_t s = 0; s < decisions.size(); ++s) {
      if (decisions[s] > cursor) {
        state = walk_grid(state, cursor, decisions[s], field, config);
      }
      const std::uint64_t stage_seed =
          rng::derive_seed(rec.attempt_seed, rng::Purpose::kStage, s);
      SearchStageResult stage = run_search_stage(state, spec_cur, config,
                                                 field, dec, cr, stage_seed);
      state = stage.chosen_outcome().end_state;
      cursor = decisions[s] + config.horizon;
      rec.stages.push_back(std::move(stage));
    }
    if (cursor < config.n_steps) {
      state = walk_grid(state, cursor, config.n_steps, field, config);
    }

    rec.final_state = std::move(state);
    const DecodedPreview final_preview =
        decode(DataPreview{rec.final_state.values, 0.0}, dec);
    rec.final_score = score_or_fallback(cr, final_preview, spec_cur, config);
    result.attempts.push_back(std::move(rec));

    const double total = result.attempts.back().final_score.total;
    if (redesign_decision(total, attempt, config) ==
        RedesignDecision::kContinue) {
      break;
    }

    // Build next attempt's spec from what actually failed.
    FailureFeedback fb;
    fb.summary = "attempt " + std::to_string(attempt) + " scored " +
                 text::fmt17(total) + ", below threshold " +
                 text::fmt17(config.threshold);
    const AttainedAttributes attrs = perceive(final_preview, spec_cur);
    for (std::size_t i = 0; i < spec_cur.slots.size(); ++i) {
      const SlotConstraint& slot = spec_cur.slots[i];
      const SlotAttainment& got = attrs.slots[i];
      const bool failing = got.attained_concept != slot.target_concept ||
                           !got.spatial_ok || got.margin < kFragileMargin;
      if (failing) fb.failing_slots.push_back(slot.slot_id);
    }

    std::optional<RefineProposal> prop;
    if (config.remote_refine) {
      try {
        const std::optional<json> pj =
            cr.propose_refinement(final_preview, spec_cur);
        if (pj) prop = refine_proposal_from_json(*pj);
      } catch (const TransportError& e) {
        if (!config.fallback_to_oracle) {
          throw AbortedGeneration(
              std::string("critic transport failure while refining (") +
              e.what() + ")");
        }
        // Fall back to feedback-only refinement.
      }
    }
    spec_cur = refine_constraints(spec_cur, &fb, prop ? &*prop : nullptr);
  }

  result.best_attempt = 0;
  for (std::size_t i = 1; i < result.attempts.size(); ++i) {
    if (result.attempts[i].final_score.total >
        result.attempts[result.best_attempt].final_score.total) {
      result.best_attempt = i;
    }
  }
  return result;
}

}  // namespace afs

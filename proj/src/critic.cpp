#include "afs/critic.hpp"

#include <algorithm>
#include <cmath>

#include "afs/errors.hpp"
#include "afs/kernels.hpp"
#include "afs/text_format.hpp"

namespace afs {
namespace {

constexpr double kNormFloor = 1e-9;

double clamp(double v, double lo, double hi) {
  return std::min(std::max(v, lo), hi);
}

double finish_total(ScoreBreakdown& s) {
  double sum = s.adherence + s.relational + s.integrity;
  for (const Deduction& d : s.deductions) sum += d.amount;
  for (const Bonus& b : s.bonuses) sum += b.amount;
  s.total = clamp(sum, -10.0, 10.0);
  return s.total;
}

}  // namespace

void SceneSpec::validate() const {
  if (latent_dim == 0) throw InvalidArgument("SceneSpec: latent_dim == 0");
  if (slots.empty()) throw InvalidArgument("SceneSpec: no slots");
  if (slot_layout.size() != slots.size()) {
    throw InvalidArgument("SceneSpec: slot_layout size != slots size");
  }
  if (concept_table.empty()) {
    throw InvalidArgument("SceneSpec: empty concept table");
  }

  // Layout must tile a prefix of the latent dims with uniform-width slots,
  // in slot order.
  const std::size_t width = slot_layout.front().second.width();
  if (width == 0) throw InvalidArgument("SceneSpec: zero-width slot");
  std::size_t cursor = 0;
  for (std::size_t i = 0; i < slots.size(); ++i) {
    const auto& [id, range] = slot_layout[i];
    if (id != slots[i].slot_id) {
      throw InvalidArgument("SceneSpec: slot_layout order differs from slots");
    }
    if (range.begin != cursor || range.width() != width) {
      throw InvalidArgument(
          "SceneSpec: layout ranges must be disjoint, uniform-width, and "
          "cover a prefix (slot '" + id + "')");
    }
    cursor = range.end;
  }
  if (cursor > latent_dim) {
    throw InvalidArgument("SceneSpec: layout exceeds latent_dim");
  }

  for (const auto& [name, emb] : concept_table) {
    if (name.empty() || name == "none") {
      throw InvalidArgument("SceneSpec: concept name '" + name +
                            "' is reserved/empty");
    }
    validate_concept(emb, width);
  }
  for (const SlotConstraint& slot : slots) {
    concept_of(slot.target_concept);  // throws LookupError if absent
    if (slot.spatial && slot.spatial->axis >= latent_dim) {
      throw InvalidArgument("SceneSpec: spatial axis out of range for slot '" +
                            slot.slot_id + "'");
    }
    if (slot.spatial && slot.spatial->sign != 1 && slot.spatial->sign != -1) {
      throw InvalidArgument("SceneSpec: spatial sign must be +1/-1 for slot '" +
                            slot.slot_id + "'");
    }
  }
}

const ConceptEmbedding& SceneSpec::concept_of(const std::string& name) const {
  for (const auto& [n, emb] : concept_table) {
    if (n == name) return emb;
  }
  throw LookupError("unknown concept '" + name + "'");
}

const SlotRange& SceneSpec::layout(const std::string& slot_id) const {
  for (const auto& [id, range] : slot_layout) {
    if (id == slot_id) return range;
  }
  throw LookupError("unknown slot '" + slot_id + "'");
}

double SceneSpec::integrity_weight(const std::string& slot_id) const {
  const auto it = integrity_weights.find(slot_id);
  return it == integrity_weights.end() ? 1.0 : it->second;
}

std::size_t SceneSpec::slot_width() const {
  return slot_layout.empty() ? 0 : slot_layout.front().second.width();
}

AttainedAttributes perceive(const DecodedPreview& preview,
                            const SceneSpec& spec) {
  spec.validate();
  const std::size_t needed = spec.slot_layout.back().second.end;
  if (preview.dim() < needed) {
    throw InvalidArgument("perceive: preview dim " +
                          std::to_string(preview.dim()) +
                          " smaller than slot layout end " +
                          std::to_string(needed));
  }
  AttainedAttributes out;
  out.slots.reserve(spec.slots.size());
  for (std::size_t i = 0; i < spec.slots.size(); ++i) {
    const SlotConstraint& slot = spec.slots[i];
    const SlotRange& range = spec.slot_layout[i].second;
    const std::span<const double> sub(preview.values.data() + range.begin,
                                      range.width());
    SlotAttainment att;

    if (slot.spatial) {
      att.spatial_ok = slot.spatial->satisfied(preview.values[slot.spatial->axis]);
    }

    const double sub_norm = kernels::norm(sub);
    if (sub_norm <= kNormFloor) {
      att.attained_concept.clear();  // "none"
      att.margin = 0.0;
    } else {
      double best = 0.0, second = 0.0;
      bool have_best = false, have_second = false;
      const std::string* best_name = nullptr;
      for (const auto& [name, emb] : spec.concept_table) {
        const double c =
            kernels::dot(sub, emb.vector) / (sub_norm * kernels::norm(emb.vector));
        if (!have_best || c > best) {
          if (have_best) {
            second = best;
            have_second = true;
          }
          best = c;
          best_name = &name;
          have_best = true;
        } else if (!have_second || c > second) {
          second = c;
          have_second = true;
        }
      }
      att.attained_concept = *best_name;
      // Single-concept tables have no runner-up; use the antipodal bound.
      att.margin = best - (have_second ? second : -1.0);
    }
    out.slots.push_back(std::move(att));
  }
  return out;
}

ScoreBreakdown oracle_score(const AttainedAttributes& attrs,
                            const SceneSpec& spec,
                            const RubricConfig& rubric) {
  if (attrs.slots.size() != spec.slots.size()) {
    throw InvalidArgument("oracle_score: attrs/spec slot count mismatch");
  }
  const std::size_t n = spec.slots.size();
  ScoreBreakdown s;

  std::size_t correct = 0;
  std::size_t spatial_total = 0, spatial_ok = 0;
  double weight_sum = 0.0, weighted_margin = 0.0;

  for (std::size_t i = 0; i < n; ++i) {
    const SlotConstraint& slot = spec.slots[i];
    const SlotAttainment& att = attrs.slots[i];
    const bool is_correct =
        !att.attained_concept.empty() && att.attained_concept == slot.target_concept;
    if (is_correct) {
      ++correct;
    } else if (att.attained_concept.empty()) {
      s.deductions.push_back({"missing:" + slot.slot_id, kDeductMissing});
    } else {
      s.deductions.push_back(
          {"wrong_attribute:" + slot.slot_id, kDeductWrongAttribute});
    }
    if (slot.spatial) {
      ++spatial_total;
      if (att.spatial_ok) {
        ++spatial_ok;
      } else {
        s.deductions.push_back({"spatial:" + slot.slot_id, kDeductSpatial});
      }
    }
    const double w = spec.integrity_weight(slot.slot_id);
    weight_sum += w;
    weighted_margin += w * clamp(att.margin, 0.0, 1.0);
  }

  s.adherence = 5.0 * static_cast<double>(correct) / static_cast<double>(n);
  s.relational = spatial_total == 0
                     ? 3.0
                     : 3.0 * static_cast<double>(spatial_ok) /
                           static_cast<double>(spatial_total);
  s.integrity = 2.0 * weighted_margin / weight_sum;

  if (rubric.enable_count_checks) {
    for (const auto& [concept_name, expected] : spec.expected_counts) {
      std::size_t actual = 0;
      for (const SlotAttainment& att : attrs.slots) {
        if (att.attained_concept == concept_name) ++actual;
      }
      if (actual != expected) {
        s.deductions.push_back({"count:" + concept_name, kDeductWrongCount});
      }
    }
  }

  if (rubric.enable_bleeding) {
    // A slot "bleeds" when it misses its own target but lands on some other
    // slot's target concept.
    for (std::size_t i = 0; i < n; ++i) {
      const SlotAttainment& att = attrs.slots[i];
      if (att.attained_concept.empty() ||
          att.attained_concept == spec.slots[i].target_concept) {
        continue;
      }
      for (std::size_t j = 0; j < n; ++j) {
        if (j != i && spec.slots[j].target_concept == att.attained_concept) {
          s.deductions.push_back(
              {"bleeding:" + spec.slots[i].slot_id, kDeductBleeding});
          break;
        }
      }
    }
  }

  if (rubric.enable_bonuses) {
    const bool all_correct = correct == n;
    const bool all_spatial = spatial_ok == spatial_total;
    const bool crisp = std::all_of(
        attrs.slots.begin(), attrs.slots.end(),
        [](const SlotAttainment& a) { return a.margin >= 1.5; });
    if (all_correct && all_spatial && crisp) {
      s.bonuses.push_back({"exceptional_margin", kBonusAmount});
    }
  }

  finish_total(s);
  return s;
}

Diagnosis oracle_diagnose(const AttainedAttributes& attrs,
                          const SceneSpec& spec) {
  if (attrs.slots.size() != spec.slots.size()) {
    throw InvalidArgument("oracle_diagnose: attrs/spec slot count mismatch");
  }
  Diagnosis d;

  // Pick the most confidently wrong slot (largest margin, ties by slot
  // order); if all attributes are correct but a spatial constraint fails,
  // pick the most confident spatially-failing slot instead.
  std::ptrdiff_t wrong_pick = -1, spatial_pick = -1;
  for (std::size_t i = 0; i < spec.slots.size(); ++i) {
    const SlotAttainment& att = attrs.slots[i];
    const bool is_correct = !att.attained_concept.empty() &&
                            att.attained_concept == spec.slots[i].target_concept;
    if (!is_correct) {
      if (wrong_pick < 0 || att.margin > attrs.slots[wrong_pick].margin) {
        wrong_pick = static_cast<std::ptrdiff_t>(i);
      }
    }
    if (spec.slots[i].spatial && !att.spatial_ok) {
      if (spatial_pick < 0 ||
          att.margin > attrs.slots[spatial_pick].margin) {
        spatial_pick = static_cast<std::ptrdiff_t>(i);
      }
    }
  }

  const std::ptrdiff_t pick = wrong_pick >= 0 ? wrong_pick : spatial_pick;
  if (pick < 0) {
    d.needs_correction = false;
    return d;
  }

  const std::size_t i = static_cast<std::size_t>(pick);
  const SlotConstraint& slot = spec.slots[i];
  const SlotRange& range = spec.slot_layout[i].second;
  d.needs_correction = true;
  d.segmentation_keyword = slot.slot_id;
  d.target_object = slot.slot_id;
  d.positive_concept = slot.target_concept;
  d.negative_concept = attrs.slots[i].attained_concept.empty()
                           ? "none"
                           : attrs.slots[i].attained_concept;
  const double dim = static_cast<double>(spec.latent_dim);
  d.target_region = {static_cast<double>(range.begin) / dim, 0.0,
                     static_cast<double>(range.end) / dim, 1.0};
  return d;
}

SteeringMask keyword_to_mask(const std::string& keyword, const SceneSpec& spec,
                             MaskFault fault, std::size_t dilate_dims) {
  SteeringMask mask;
  mask.weights.assign(spec.latent_dim, 0.0);
  if (fault == MaskFault::kEmpty) return mask;

  // Resolve the base slot; fault modes tolerate unknown keywords by falling
  // back to the first slot (the no-fault path must throw).
  std::ptrdiff_t index = -1;
  for (std::size_t i = 0; i < spec.slot_layout.size(); ++i) {
    if (spec.slot_layout[i].first == keyword) {
      index = static_cast<std::ptrdiff_t>(i);
      break;
    }
  }
  if (index < 0) {
    if (fault == MaskFault::kNone) {
      throw LookupError("keyword_to_mask: unknown slot '" + keyword + "'");
    }
    index = 0;
  }

  if (fault == MaskFault::kWrongSlot) {
    index = static_cast<std::ptrdiff_t>(
        (static_cast<std::size_t>(index) + 1) % spec.slot_layout.size());
  }

  SlotRange range = spec.slot_layout[static_cast<std::size_t>(index)].second;
  if (fault == MaskFault::kDilated) {
    range.begin = range.begin >= dilate_dims ? range.begin - dilate_dims : 0;
    range.end = std::min(range.end + dilate_dims, spec.latent_dim);
  }
  for (std::size_t i = range.begin; i < range.end; ++i) mask.weights[i] = 1.0;
  return mask;
}

ScoreBreakdown score_breakdown_from_total(double total) {
  ScoreBreakdown s;
  s.adherence = clamp(total, 0.0, 5.0);
  s.relational = clamp(total - 5.0, 0.0, 3.0);
  s.integrity = clamp(total - 8.0, 0.0, 2.0);
  if (total < 0.0) {
    s.deductions.push_back({"remote_total", std::max(total, -10.0)});
  }
  finish_total(s);
  return s;
}

ScoreBreakdown OracleCritic::score(const DecodedPreview& preview,
                                   const SceneSpec& spec) {
  return oracle_score(perceive(preview, spec), spec, rubric_);
}

Diagnosis OracleCritic::diagnose(const DecodedPreview& preview,
                                 const SceneSpec& spec) {
  return oracle_diagnose(perceive(preview, spec), spec);
}

ScriptedCritic::ScriptedCritic(std::vector<double> totals)
    : totals_(std::move(totals)) {
  if (totals_.empty()) {
    throw InvalidArgument("ScriptedCritic: needs at least one total");
  }
  for (double t : totals_) {
    if (!(t >= -10.0 && t <= 10.0)) {
      throw InvalidArgument("ScriptedCritic: totals must lie in [-10,10]");
    }
  }
}

ScoreBreakdown ScriptedCritic::score(const DecodedPreview&, const SceneSpec&) {
  const double total =
      totals_[std::min(calls_, totals_.size() - 1)];
  ++calls_;
  return score_breakdown_from_total(total);
}

Diagnosis ScriptedCritic::diagnose(const DecodedPreview&, const SceneSpec&) {
  return Diagnosis{};  // always clean
}

json diagnosis_to_json(const Diagnosis& d) {
  return json{{"needs_correction", d.needs_correction},
              {"segmentation_keyword", d.segmentation_keyword},
              {"target_object", d.target_object},
              {"positive_concept", d.positive_concept},
              {"negative_concept", d.negative_concept},
              {"target_bbox", d.target_region}};
}

namespace {

const json& require_field(const json& j, const char* field) {
  const auto it = j.find(field);
  if (it == j.end()) {
    throw ProtocolError(std::string("diagnosis missing field '") + field + "'",
                        field);
  }
  return *it;
}

std::string require_string(const json& j, const char* field) {
  const json& v = require_field(j, field);
  if (!v.is_string()) {
    throw ProtocolError(std::string("diagnosis field '") + field +
                            "' must be a string",
                        field);
  }
  return v.get<std::string>();
}

}  // namespace

Diagnosis diagnosis_from_json(const json& j) {
  if (!j.is_object()) {
    throw ProtocolError("diagnosis payload must be a JSON object", "(root)");
  }
  Diagnosis d;
  const json& nc = require_field(j, "needs_correction");
  if (!nc.is_boolean()) {
    throw ProtocolError("diagnosis field 'needs_correction' must be a boolean",
                        "needs_correction");
  }
  d.needs_correction = nc.get<bool>();
  d.segmentation_keyword = require_string(j, "segmentation_keyword");
  d.target_object = require_string(j, "target_object");
  d.positive_concept = require_string(j, "positive_concept");
  d.negative_concept = require_string(j, "negative_concept");
  const json& bbox = require_field(j, "target_bbox");
  if (!bbox.is_array() || bbox.size() != 4) {
    throw ProtocolError("diagnosis field 'target_bbox' must be 4 numbers",
                        "target_bbox");
  }
  for (std::size_t i = 0; i < 4; ++i) {
    if (!bbox[i].is_number()) {
      throw ProtocolError("diagnosis field 'target_bbox' must be 4 numbers",
                          "target_bbox");
    }
    const double v = bbox[i].get<double>();
    if (!(v >= 0.0 && v <= 1.0)) {
      throw ProtocolError("diagnosis field 'target_bbox' entries must lie in "
                          "[0,1], got " + text::fmt17(v),
                          "target_bbox");
    }
    d.target_region[i] = v;
  }
  return d;
}

json score_breakdown_to_json(const ScoreBreakdown& s) {
  json deductions = json::array();
  for (const Deduction& d : s.deductions) {
    deductions.push_back(json{{"reason", d.reason}, {"amount", d.amount}});
  }
  json bonuses = json::array();
  for (const Bonus& b : s.bonuses) {
    bonuses.push_back(json{{"reason", b.reason}, {"amount", b.amount}});
  }
  return json{{"adherence", s.adherence},   {"relational", s.relational},
              {"integrity", s.integrity},   {"deductions", deductions},
              {"bonuses", bonuses},         {"total", s.total}};
}

}  // namespace afs

#pragma once

#include <array>
#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "afs/preview.hpp"
#include "afs/steering.hpp"

// The -10..+10 scoring rubric, the oracle critic/segmenter over synthetic
// vector scenes, and the typed surface (Critic) behind which the remote
// wire-protocol client can be swapped in.
//
// Scene model: the latent vector is carved into contiguous "slots", one per
// scene object.  Every slot has the same width; a shared concept table maps
// attribute names to fixed unit directions in slot-patch space.  A slot
// "attains" whichever concept its decoded sub-vector is most cosine-aligned
// with.  Optional half-plane constraints on designated coordinates stand in
// for spatial relations.

namespace afs {

using json = nlohmann::ordered_json;

// Spatial relation: coordinate `axis` of the decoded preview must lie
// strictly on the `sign` side of `boundary` (sign > 0: value > boundary;
// sign < 0: value < boundary).
struct HalfplaneConstraint {
  std::size_t axis = 0;
  int sign = 1;  // +1 or -1
  double boundary = 0.0;

  bool satisfied(double value) const {
    return sign > 0 ? value > boundary : value < boundary;
  }
};

struct SlotConstraint {
  std::string slot_id;
  std::string target_concept;
  std::optional<HalfplaneConstraint> spatial;
};

struct SlotRange {
  std::size_t begin = 0;
  std::size_t end = 0;  // exclusive

  std::size_t width() const { return end - begin; }
};

// Which rubric extensions are live.  Count checks, bleeding, and bonuses are
// optional extensions, default off; the acceptance tests exercise their
// arithmetic, not any perceptual claim.
struct RubricConfig {
  bool enable_count_checks = false;
  bool enable_bleeding = false;
  bool enable_bonuses = false;
};

// Deduction / bonus constants used by oracle_score.
inline constexpr double kDeductMissing = -5.0;
inline constexpr double kDeductWrongAttribute = -3.0;
inline constexpr double kDeductSpatial = -3.0;
inline constexpr double kDeductWrongCount = -4.0;
inline constexpr double kDeductBleeding = -2.5;
inline constexpr double kBonusAmount = 1.0;

class SceneSpec {
 public:
  std::vector<SlotConstraint> slots;
  // Insertion-ordered: perceive breaks cosine ties by table order.
  std::vector<std::pair<std::string, ConceptEmbedding>> concept_table;
  std::vector<std::pair<std::string, SlotRange>> slot_layout;
  std::size_t latent_dim = 0;
  // Opaque human-readable instruction; the payload the wire protocol ships.
  std::string instruction;
  // Optional count extension: concept name -> expected number of slots.
  std::map<std::string, std::size_t> expected_counts;
  // Per-slot emphasis in the integrity proxy (default 1.0); the redesign
  // loop raises the weight of failing slots.
  std::map<std::string, double> integrity_weights;
  std::vector<std::string> revision_log;

  // Checks: uniform slot width; layout ranges disjoint and covering a prefix
  // of the latent dims; every target concept present in the table; concept
  // vectors finite, nonzero, and of slot width; spatial axes in range.
  void validate() const;

  // Lookups throw afs::LookupError on unknown names.
  const ConceptEmbedding& concept_of(const std::string& name) const;
  const SlotRange& layout(const std::string& slot_id) const;
  double integrity_weight(const std::string& slot_id) const;
  std::size_t slot_width() const;
};

// Per-slot perception output: best-aligned concept (empty string = none
// detected), spatial sign test, and the cosine margin (best minus
// second-best alignment; with a single-concept table the runner-up is taken
// as the antipodal bound -1).
struct SlotAttainment {
  std::string attained_concept;
  bool spatial_ok = true;
  double margin = 0.0;
};

struct AttainedAttributes {
  std::vector<SlotAttainment> slots;
};

struct Deduction {
  std::string reason;
  double amount = 0.0;  // <= 0
};

struct Bonus {
  std::string reason;
  double amount = 0.0;  // +1.0
};

struct ScoreBreakdown {
  double adherence = 0.0;   // [0, 5]
  double relational = 0.0;  // [0, 3]
  double integrity = 0.0;   // [0, 2]
  std::vector<Deduction> deductions;
  std::vector<Bonus> bonuses;
  double total = 0.0;  // clamp(sum, -10, 10)
};

// Structured defect report, field-for-field the wire protocol's diagnosis
// object (target_region serializes as "target_bbox").
struct Diagnosis {
  bool needs_correction = false;
  std::string segmentation_keyword;
  std::string target_object;
  std::string positive_concept;
  std::string negative_concept;  // "none" when the slot attained nothing
  std::array<double, 4> target_region{0.0, 0.0, 0.0, 0.0};
};

// ---- oracle operations ---------------------------------------------------

AttainedAttributes perceive(const DecodedPreview& preview,
                            const SceneSpec& spec);

ScoreBreakdown oracle_score(const AttainedAttributes& attrs,
                            const SceneSpec& spec,
                            const RubricConfig& rubric = {});

Diagnosis oracle_diagnose(const AttainedAttributes& attrs,
                          const SceneSpec& spec);

enum class MaskFault {
  kNone,
  kWrongSlot,  // a different slot's mask
  kDilated,    // range widened by dilate_dims on both sides
  kEmpty,      // all zeros
};

SteeringMask keyword_to_mask(const std::string& keyword, const SceneSpec& spec,
                             MaskFault fault = MaskFault::kNone,
                             std::size_t dilate_dims = 2);

// Reconstructs a rubric-shaped breakdown from a bare total (the remote
// protocol only ships a number): fills categories greedily to their caps and
// books any negative total as a single deduction.
ScoreBreakdown score_breakdown_from_total(double total);

// ---- critic surface -------------------------------------------------------

class Critic {
 public:
  virtual ~Critic() = default;
  virtual ScoreBreakdown score(const DecodedPreview& preview,
                               const SceneSpec& spec) = 0;
  virtual Diagnosis diagnose(const DecodedPreview& preview,
                             const SceneSpec& spec) = 0;
  // Optional constraint-refinement proposal (raw JSON; the redesign loop
  // parses and validates it).  Critics without the capability return nullopt.
  virtual std::optional<json> propose_refinement(const DecodedPreview&,
                                                 const SceneSpec&) {
    return std::nullopt;
  }
  virtual std::string name() const = 0;
};

class OracleCritic final : public Critic {
 public:
  explicit OracleCritic(RubricConfig rubric = {}) : rubric_(rubric) {}
  ScoreBreakdown score(const DecodedPreview& preview,
                       const SceneSpec& spec) override;
  Diagnosis diagnose(const DecodedPreview& preview,
                     const SceneSpec& spec) override;
  std::string name() const override { return "oracle"; }

 private:
  RubricConfig rubric_;
};

// Test/ablation critic: returns a fixed sequence of totals (holding the last
// one once exhausted) and always-clean diagnoses.
class ScriptedCritic final : public Critic {
 public:
  explicit ScriptedCritic(std::vector<double> totals);
  ScoreBreakdown score(const DecodedPreview& preview,
                       const SceneSpec& spec) override;
  Diagnosis diagnose(const DecodedPreview& preview,
                     const SceneSpec& spec) override;
  std::string name() const override { return "scripted"; }
  std::size_t calls() const { return calls_; }

 private:
  std::vector<double> totals_;
  std::size_t calls_ = 0;
};

// ---- JSON (wire + logging) ------------------------------------------------

json diagnosis_to_json(const Diagnosis& d);
// Strict parse: missing field / wrong type / out-of-range bbox ->
// afs::ProtocolError carrying the offending field name.
Diagnosis diagnosis_from_json(const json& j);

json score_breakdown_to_json(const ScoreBreakdown& s);

}  // namespace afs

#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <limits>
#include <string>
#include <vector>

#include "afs/config.hpp"
#include "afs/critic.hpp"
#include "afs/flow.hpp"
#include "afs/pipeline.hpp"
#include "afs/preview.hpp"

// Benchmark harness: synthetic task families whose open-loop success rates
// are known analytically, batch/sweep runners over derived per-trial seeds
// (paired across sweep cells), and the CSV trial log.

namespace afs {

struct DifficultyParams {
  // Mixture weight of the basin that satisfies the brief; the open-loop
  // success rate of the "attribute" family equals this (up to Gaussian
  // leakage across basins, < 1e-3 at the defaults).
  double target_weight = 0.2;
  // Distance of component means from the origin, in units of noise_scale
  // it controls how separated the basins are.
  double basin_separation = 3.0;
  double noise_scale = 0.35;  // per-component standard deviation

  void validate() const;
};

struct SceneBundle {
  SceneSpec scene;
  GmmFlowModel model;
  AffineDecoder decoder;
};

// A named synthetic benchmark: deterministic geometry from params alone.
//   attribute  2-D, one slot, target concept vs a 120-degree distractor;
//              open-loop success rate = target_weight.
//   spatial    3-D, one slot always attaining its concept, success hinges on
//              a half-plane constraint; steering is a no-op here (the target
//              and attained concept coincide), only explore/retry help.
//   complex    6-D, two slots with tetrahedral concepts plus one spatial
//              constraint; open-loop success rate = target_weight^2.
class TaskFamily {
 public:
  std::string name;
  DifficultyParams params;
  // Strict success: a flawless scene scores exactly +10 under the default
  // rubric (all slots correct, all constraints met, unit-clamped margins).
  double success_threshold = 10.0;

  SceneBundle make() const;
  bool success(double total) const { return total >= success_threshold; }
};

// Throws LookupError for names other than attribute/spatial/complex.
TaskFamily make_family(const std::string& name, DifficultyParams params = {});

struct TrialResult {
  std::uint64_t seed = 0;  // derived per-trial generation seed
  bool success = false;
  bool aborted = false;
  double final_score = std::numeric_limits<double>::quiet_NaN();
  std::size_t retries_used = 0;
  double wall_ms = 0.0;
  std::string abort_reason;
};

struct BatchReport {
  std::string family;
  std::size_t trials = 0;
  std::size_t successes = 0;
  std::size_t failures = 0;  // completed but unsuccessful
  std::size_t aborts = 0;    // AbortedGeneration (itemized separately)
  // How often each branch kind won a search stage, across all attempts of all
  // completed trials (indexed by BranchKind).
  std::array<std::size_t, 3> selections{{0, 0, 0}};
  std::vector<TrialResult> results;

  double success_rate() const {
    return trials == 0
               ? 0.0
               : static_cast<double>(successes) / static_cast<double>(trials);
  }
  double mean_score() const;    // over completed trials
  double mean_retries() const;  // over completed trials
};

// Runs n_trials generations with seeds derived from base_seed (trial i uses
// derive_seed(base_seed, kTrial, i), so reports are reproducible and sweep
// cells pair trial-for-trial).  Aborts are recorded, never propagated.
BatchReport run_batch(const TaskFamily& family, const PipelineConfig& config,
                      std::size_t n_trials, std::uint64_t base_seed,
                      Critic* critic = nullptr);

// One sweep cell: a parsed parameter override applied to the base config.
struct SweepPoint {
  std::string label;      // raw value text, e.g. "3" or "0.8|0.5"
  PipelineConfig config;  // base with the override applied
};

// parameter is one of: t_split, horizon, width, eta, sigma.  t_split values
// are '|'-joined descending times; everything else is a single number.
// Throws InvalidArgument on unknown parameters or unparsable values.
std::vector<SweepPoint> make_sweep(const PipelineConfig& base,
                                   const std::string& parameter,
                                   const std::vector<std::string>& values);

struct SweepRow {
  std::string label;
  bool feasible = true;
  std::string infeasible_reason;
  BatchReport report;  // empty when infeasible
};

// Paired-seed sweep: every feasible cell sees the identical trial seeds.
// Cells whose config fails validation are marked infeasible and skipped.
std::vector<SweepRow> run_sweep(const TaskFamily& family,
                                const PipelineConfig& base,
                                const std::string& parameter,
                                const std::vector<std::string>& values,
                                std::size_t trials, std::uint64_t base_seed,
                                Critic* critic = nullptr);

// Exact column set, one row per trial:
//   family,seed,variant,t_split,horizon,width,eta,sigma,final_score,success,
//   retries,wall_ms
// t_split is '|'-joined; success is 0/1; wall_ms uses three decimals, all
// other reals use round-trip precision.
void write_csv_header(std::ostream& out);
void write_trial_rows(std::ostream& out, const std::string& family,
                      const PipelineConfig& config, const std::string& variant,
                      const BatchReport& report);

// Human-readable sweep table.
void write_sweep_summary(std::ostream& out, const std::string& parameter,
                         const std::vector<SweepRow>& rows);

}  // namespace afs

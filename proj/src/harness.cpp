#include "afs/harness.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <utility>

#include "afs/errors.hpp"
#include "afs/rng.hpp"
#include "afs/text_format.hpp"

namespace afs {
namespace {

// Offset of the spatial basins from the half-plane boundary, in family
// latent units; ~5.7 noise sigmas at the default noise_scale, so boundary
// leakage is negligible next to the mixture weights.
constexpr double kSpatialOffset = 2.0;

std::vector<double> unit2(double angle_rad) {
  return {std::cos(angle_rad), std::sin(angle_rad)};
}

GmmComponent component(double w, std::vector<double> mean, double noise) {
  GmmComponent c;
  c.weight = w;
  c.variance.assign(mean.size(), noise * noise);
  c.mean = std::move(mean);
  return c;
}

ConceptEmbedding embedding(std::string label, std::vector<double> v) {
  ConceptEmbedding e;
  e.label = std::move(label);
  e.vector = std::move(v);
  return e;
}

SceneBundle make_attribute(const DifficultyParams& p) {
  const double r = p.basin_separation;
  const std::vector<double> alpha = unit2(0.0);
  const std::vector<double> beta = unit2(2.0 * std::acos(-1.0) / 3.0);  // 120°

  SceneSpec scene;
  scene.latent_dim = 2;
  scene.slots.push_back({"obj0", "alpha", std::nullopt});
  scene.concept_table.push_back({"alpha", embedding("alpha", alpha)});
  scene.concept_table.push_back({"beta", embedding("beta", beta)});
  scene.slot_layout.push_back({"obj0", SlotRange{0, 2}});
  scene.instruction = "place alpha at obj0";

  std::vector<GmmComponent> comps;
  comps.push_back(component(p.target_weight,
                            {r * alpha[0], r * alpha[1]}, p.noise_scale));
  comps.push_back(component(1.0 - p.target_weight,
                            {r * beta[0], r * beta[1]}, p.noise_scale));
  return SceneBundle{std::move(scene), GmmFlowModel(std::move(comps), 2),
                     AffineDecoder::identity(2)};
}

SceneBundle make_spatial(const DifficultyParams& p) {
  const double r = p.basin_separation;
  const std::vector<double> alpha = unit2(0.0);

  SceneSpec scene;
  scene.latent_dim = 3;
  HalfplaneConstraint above;
  above.axis = 2;
  above.sign = 1;
  above.boundary = 0.0;
  scene.slots.push_back({"obj0", "alpha", above});
  scene.concept_table.push_back({"alpha", embedding("alpha", alpha)});
  scene.slot_layout.push_back({"obj0", SlotRange{0, 2}});
  scene.instruction = "place alpha at obj0 with axis2 > 0";

  std::vector<GmmComponent> comps;
  comps.push_back(component(p.target_weight,
                            {r * alpha[0], r * alpha[1], kSpatialOffset},
                            p.noise_scale));
  comps.push_back(component(1.0 - p.target_weight,
                            {r * alpha[0], r * alpha[1], -kSpatialOffset},
                            p.noise_scale));
  return SceneBundle{std::move(scene), GmmFlowModel(std::move(comps), 3),
                     AffineDecoder::identity(3)};
}

SceneBundle make_complex(const DifficultyParams& p) {
  const double r = p.basin_separation;
  const double s = 1.0 / std::sqrt(3.0);
  // Tetrahedral directions: pairwise cosine -1/3, so the attained-vs-runner-
  // up margin at a clean basin mean is 4/3 (> 1, integrity-safe).
  const std::vector<std::vector<double>> tau = {
      {s, s, s}, {s, -s, -s}, {-s, s, -s}, {-s, -s, s}};

  SceneSpec scene;
  scene.latent_dim = 6;
  HalfplaneConstraint above;
  above.axis = 4;  // slot1's middle coordinate: +s at tau2, -s at tau3
  above.sign = 1;
  above.boundary = 0.0;
  scene.slots.push_back({"obj0", "tau0", std::nullopt});
  scene.slots.push_back({"obj1", "tau2", above});
  for (std::size_t k = 0; k < tau.size(); ++k) {
    const std::string name = "tau" + std::to_string(k);
    scene.concept_table.push_back({name, embedding(name, tau[k])});
  }
  scene.slot_layout.push_back({"obj0", SlotRange{0, 3}});
  scene.slot_layout.push_back({"obj1", SlotRange{3, 6}});
  scene.instruction = "place tau0 at obj0; place tau2 at obj1 with axis4 > 0";

  const auto mean_for = [&](const std::vector<double>& a,
                            const std::vector<double>& b) {
    std::vector<double> m;
    for (double v : a) m.push_back(r * v);
    for (double v : b) m.push_back(r * v);
    return m;
  };
  const double tw = p.target_weight;
  std::vector<GmmComponent> comps;
  comps.push_back(component(tw * tw, mean_for(tau[0], tau[2]), p.noise_scale));
  comps.push_back(
      component(tw * (1.0 - tw), mean_for(tau[0], tau[3]), p.noise_scale));
  comps.push_back(
      component((1.0 - tw) * tw, mean_for(tau[1], tau[2]), p.noise_scale));
  comps.push_back(component((1.0 - tw) * (1.0 - tw),
                            mean_for(tau[1], tau[3]), p.noise_scale));
  return SceneBundle{std::move(scene), GmmFlowModel(std::move(comps), 6),
                     AffineDecoder::identity(6)};
}

}  // namespace

void DifficultyParams::validate() const {
  if (!(target_weight > 0.0 && target_weight < 1.0)) {
    throw InvalidArgument("difficulty: target_weight must lie in (0,1)");
  }
  if (!(basin_separation > 0.0) || !std::isfinite(basin_separation)) {
    throw InvalidArgument("difficulty: basin_separation must be > 0");
  }
  if (!(noise_scale > 0.0) || !std::isfinite(noise_scale)) {
    throw InvalidArgument("difficulty: noise_scale must be > 0");
  }
}

SceneBundle TaskFamily::make() const {
  params.validate();
  if (name == "attribute") return make_attribute(params);
  if (name == "spatial") return make_spatial(params);
  if (name == "complex") return make_complex(params);
  throw LookupError("unknown task family '" + name + "'");
}

TaskFamily make_family(const std::string& name, DifficultyParams params) {
  TaskFamily family;
  family.name = name;
  family.params = params;
  family.make();  // validates eagerly
  return family;
}

double BatchReport::mean_score() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TrialResult& r : results) {
    if (!r.aborted) {
      sum += r.final_score;
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

double BatchReport::mean_retries() const {
  double sum = 0.0;
  std::size_t n = 0;
  for (const TrialResult& r : results) {
    if (!r.aborted) {
      sum += static_cast<double>(r.retries_used);
      ++n;
    }
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

BatchReport run_batch(const TaskFamily& family, const PipelineConfig& config,
                      std::size_t n_trials, std::uint64_t base_seed,
                      Critic* critic) {
  config.validate();
  const SceneBundle bundle = family.make();

  BatchReport report;
  report.family = family.name;
  report.trials = n_trials;
  report.results.reserve(n_trials);

  for (std::size_t i = 0; i < n_trials; ++i) {
    TrialResult trial;
    trial.seed = rng::derive_seed(base_seed, rng::Purpose::kTrial, i);
    const auto t0 = std::chrono::steady_clock::now();
    try {
      const GenerationResult gen = generate(bundle.scene, bundle.model,
                                            bundle.decoder, config, trial.seed,
                                            critic);
      trial.final_score = gen.final_score();
      trial.retries_used = gen.retries_used();
      trial.success = family.success(trial.final_score);
      for (const AttemptRecord& attempt : gen.attempts) {
        for (const SearchStageResult& stage : attempt.stages) {
          ++report.selections[static_cast<std::size_t>(
              stage.chosen_outcome().action.kind)];
        }
      }
    } catch (const AbortedGeneration& e) {
      trial.aborted = true;
      trial.abort_reason = e.what();
    }
    const auto t1 = std::chrono::steady_clock::now();
    trial.wall_ms =
        std::chrono::duration<double, std::milli>(t1 - t0).count();

    if (trial.aborted) {
      ++report.aborts;
    } else if (trial.success) {
      ++report.successes;
    } else {
      ++report.failures;
    }
    report.results.push_back(std::move(trial));
  }
  return report;
}

std::vector<SweepPoint> make_sweep(const PipelineConfig& base,
                                   const std::string& parameter,
                                   const std::vector<std::string>& values) {
  if (values.empty()) {
    throw InvalidArgument("make_sweep: need at least one value");
  }
  std::vector<SweepPoint> points;
  points.reserve(values.size());
  for (const std::string& raw : values) {
    SweepPoint point;
    point.label = raw;
    point.config = base;
    if (parameter == "t_split") {
      std::vector<double> ts;
      for (const std::string& part : text::split(raw, '|')) {
        ts.push_back(text::parse_double(part));
      }
      point.config.t_split = std::move(ts);
    } else if (parameter == "horizon") {
      point.config.horizon = text::parse_size(raw);
    } else if (parameter == "width") {
      point.config.width = text::parse_size(raw);
    } else if (parameter == "eta") {
      point.config.eta = text::parse_double(raw);
    } else if (parameter == "sigma") {
      point.config.sigma = text::parse_double(raw);
    } else {
      throw InvalidArgument("make_sweep: unknown parameter '" + parameter +
                            "' (expected t_split, horizon, width, eta, or "
                            "sigma)");
    }
    points.push_back(std::move(point));
  }
  return points;
}

std::vector<SweepRow> run_sweep(const TaskFamily& family,
                                const PipelineConfig& base,
                                const std::string& parameter,
                                const std::vector<std::string>& values,
                                std::size_t trials, std::uint64_t base_seed,
                                Critic* critic) {
  std::vector<SweepRow> rows;
  for (const SweepPoint& point : make_sweep(base, parameter, values)) {
    SweepRow row;
    row.label = point.label;
    try {
      point.config.validate();
    } catch (const InvalidArgument& e) {
      row.feasible = false;
      row.infeasible_reason = e.what();
      rows.push_back(std::move(row));
      continue;
    }
    row.report = run_batch(family, point.config, trials, base_seed, critic);
    rows.push_back(std::move(row));
  }
  return rows;
}

void write_csv_header(std::ostream& out) {
  out << "family,seed,variant,t_split,horizon,width,eta,sigma,final_score,"
         "success,retries,wall_ms\n";
}

void write_trial_rows(std::ostream& out, const std::string& family,
                      const PipelineConfig& config, const std::string& variant,
                      const BatchReport& report) {
  const std::string t_split = text::join17(config.t_split, '|');
  for (const TrialResult& r : report.results) {
    char wall[32];
    std::snprintf(wall, sizeof(wall), "%.3f", r.wall_ms);
    out << family << ',' << r.seed << ',' << variant << ',' << t_split << ','
        << config.horizon << ',' << config.width << ','
        << text::fmt17(config.eta) << ',' << text::fmt17(config.sigma) << ','
        << (r.aborted ? "nan" : text::fmt17(r.final_score)) << ','
        << (r.success ? 1 : 0) << ',' << r.retries_used << ',' << wall
        << '\n';
  }
}

void write_sweep_summary(std::ostream& out, const std::string& parameter,
                         const std::vector<SweepRow>& rows) {
  out << "sweep over " << parameter << "\n";
  for (const SweepRow& row : rows) {
    out << "  " << parameter << "=" << row.label << ": ";
    if (!row.feasible) {
      out << "infeasible (" << row.infeasible_reason << ")\n";
      continue;
    }
    const BatchReport& r = row.report;
    out << r.successes << "/" << r.trials << " ok (rate "
        << text::fmt17(r.success_rate()) << ", mean score "
        << text::fmt17(r.mean_score()) << ", mean retries "
        << text::fmt17(r.mean_retries());
    if (r.aborts > 0) out << ", aborts " << r.aborts;
    out << ")\n";
  }
}

}  // namespace afs

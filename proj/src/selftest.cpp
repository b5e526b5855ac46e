#include "afs/selftest.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <sstream>

#include "afs/config.hpp"
#include "afs/critic.hpp"
#include "afs/critic_remote.hpp"
#include "afs/errors.hpp"
#include "afs/flow.hpp"
#include "afs/harness.hpp"
#include "afs/kernels.hpp"
#include "afs/mock_critic.hpp"
#include "afs/pipeline.hpp"
#include "afs/preview.hpp"
#include "afs/rng.hpp"
#include "afs/search.hpp"
#include "afs/stats.hpp"
#include "afs/steering.hpp"
#include "afs/text_format.hpp"

namespace afs::selftest {
namespace {

using rng::RandomStream;

bool same_bits(double a, double b) {
  return std::bit_cast<std::uint64_t>(a) == std::bit_cast<std::uint64_t>(b);
}

CheckResult timed(int id, const std::string& name,
                  const std::function<bool(std::ostringstream&)>& body) {
  CheckResult r;
  r.id = id;
  r.name = name;
  std::ostringstream detail;
  const auto t0 = std::chrono::steady_clock::now();
  try {
    r.passed = body(detail);
  } catch (const std::exception& e) {
    r.passed = false;
    detail << " unexpected exception: " << e.what();
  }
  const auto t1 = std::chrono::steady_clock::now();
  r.ms = std::chrono::duration<double, std::milli>(t1 - t0).count();
  r.detail = detail.str();
  return r;
}

// ---- check 1: projection identity ----------------------------------------

bool check_projection(std::ostringstream& detail) {
  RandomStream rs(0xAF51);
  constexpr std::size_t kDim = 8;
  double worst = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    std::vector<double> z0(kDim), z1(kDim);
    rs.fill_gaussian(z0);
    rs.fill_gaussian(z1);
    const double t = rs.next_unit();
    SampleState state;
    state.t = t;
    state.values.resize(kDim);
    for (std::size_t i = 0; i < kDim; ++i) {
      state.values[i] = t * z1[i] + (1.0 - t) * z0[i];
    }
    Velocity v;
    v.values.resize(kDim);
    for (std::size_t i = 0; i < kDim; ++i) v.values[i] = z1[i] - z0[i];

    const DataPreview p = project_to_data(state, v);
    double err = 0.0, ref = 0.0;
    for (std::size_t i = 0; i < kDim; ++i) {
      err += (p.values[i] - z0[i]) * (p.values[i] - z0[i]);
      ref += z0[i] * z0[i];
    }
    worst = std::max(worst, std::sqrt(err) / std::max(1.0, std::sqrt(ref)));
  }
  detail << "max rel err " << text::fmt17(worst) << " over 1000 triples";
  return worst <= 1e-12;
}

// ---- check 2: gradient oracle ---------------------------------------------

bool check_gradient(std::ostringstream& detail) {
  RandomStream rs(0xAF52);
  const double h = 1e-5;
  double worst = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t latent = 2 + (rs.next_u64() % 4);  // 2..5
    const std::size_t obs = latent + (rs.next_u64() % 3);
    std::vector<double> matrix(obs * latent), offset(obs);
    rs.fill_gaussian(matrix);
    rs.fill_gaussian(offset);
    const AffineDecoder dec(obs, latent, matrix, offset);

    const auto unit_concept = [&](const std::string& label) {
      ConceptEmbedding e;
      e.label = label;
      e.vector.resize(obs);
      rs.fill_gaussian(e.vector);
      const double n = kernels::norm(e.vector);
      for (double& x : e.vector) x /= n;
      return e;
    };
    const ConceptEmbedding pos = unit_concept("pos");
    const ConceptEmbedding neg = unit_concept("neg");

    DataPreview z;
    z.source_t = 0.5;
    z.values.resize(latent);
    do {
      rs.fill_gaussian(z.values);
    } while (kernels::norm(decode(z, dec).values) < 0.5);

    const std::vector<double> analytic = energy_gradient(z, dec, pos, neg);

    std::vector<double> fd(latent);
    for (std::size_t i = 0; i < latent; ++i) {
      DataPreview zp = z, zm = z;
      zp.values[i] += h;
      zm.values[i] -= h;
      const double ep = contrastive_energy(decode(zp, dec), pos, neg);
      const double em = contrastive_energy(decode(zm, dec), pos, neg);
      fd[i] = (ep - em) / (2.0 * h);
    }
    double diff = 0.0;
    for (std::size_t i = 0; i < latent; ++i) {
      diff += (fd[i] - analytic[i]) * (fd[i] - analytic[i]);
    }
    const double rel =
        std::sqrt(diff) / std::max(1.0, kernels::norm(analytic));
    worst = std::max(worst, rel);
  }
  detail << "max rel err " << text::fmt17(worst)
         << " vs central differences (h=1e-5), 100 instances";
  return worst < 1e-5;
}

// ---- check 3: steering algebra --------------------------------------------

bool check_steering_algebra(std::ostringstream& detail) {
  RandomStream rs(0xAF53);
  double worst_norm_err = 0.0;
  for (int trial = 0; trial < 1000; ++trial) {
    const std::size_t dim = 2 + (rs.next_u64() % 7);
    Velocity v;
    v.values.resize(dim);
    rs.fill_gaussian(v.values);
    std::vector<double> grad(dim);
    rs.fill_gaussian(grad);

    SteeringDirective d;
    d.positive.label = "p";
    d.negative.label = "n";
    d.positive.vector.assign(dim, 1.0);
    d.negative.vector.assign(dim, -1.0);
    d.eta = 4.0 * rs.next_unit();
    d.mask.weights.resize(dim);
    for (double& w : d.mask.weights) {
      w = (rs.next_unit() < 0.4) ? 0.0 : rs.next_unit();
    }
    const double t = rs.next_unit();

    const Velocity steered = steer_velocity(v, grad, d, t);

    double corr = 0.0, masked = 0.0;
    for (std::size_t i = 0; i < dim; ++i) {
      const double delta = steered.values[i] - v.values[i];
      corr += delta * delta;
      const double gm = grad[i] * d.mask.weights[i];
      masked += gm * gm;
      if (d.mask.weights[i] == 0.0 &&
          !same_bits(steered.values[i], v.values[i])) {
        detail << "masked-out component changed at trial " << trial;
        return false;
      }
    }
    const double expected = d.eta * t * std::sqrt(masked);
    const double err =
        std::abs(std::sqrt(corr) - expected) / std::max(1.0, expected);
    worst_norm_err = std::max(worst_norm_err, err);

    const Velocity frozen = steer_velocity(v, grad, d, 0.0);
    for (std::size_t i = 0; i < dim; ++i) {
      if (!same_bits(frozen.values[i], v.values[i])) {
        detail << "t=0 not bitwise identity at trial " << trial;
        return false;
      }
    }
  }
  detail << "norm-law max rel err " << text::fmt17(worst_norm_err)
         << ", masked/t=0 components bitwise stable, 1000 instances";
  return worst_norm_err <= 1e-12;
}

// ---- check 4: gmm flow fidelity -------------------------------------------

bool check_flow_fidelity(std::ostringstream& detail) {
  // (a) occupancy: endpoints of the exact-oracle flow must land in each
  // mixture basin at the component's weight.
  const TaskFamily family = make_family("attribute");
  const SceneBundle bundle = family.make();
  const VelocityField field = make_gmm_field(bundle.model);

  constexpr std::size_t kSeeds = 10000;
  constexpr std::size_t kSteps = 512;
  std::vector<std::size_t> counts(bundle.model.components().size(), 0);
  for (std::size_t seed = 0; seed < kSeeds; ++seed) {
    const SampleState prior = sample_prior(bundle.model.dim(), seed);
    const Trajectory traj = euler_integrate(prior, field, 0.0, kSteps);
    ++counts[bundle.model.classify(traj.end_state().values)];
  }
  bool occupancy_ok = true;
  std::string occupancy_txt;
  for (std::size_t k = 0; k < counts.size(); ++k) {
    const stats::Interval ci = stats::binomial_ci(counts[k], kSeeds);
    const double w = bundle.model.components()[k].weight;
    occupancy_ok = occupancy_ok && ci.contains(w);
    occupancy_txt += (k ? " " : "") + std::string("w") + std::to_string(k) +
                     "=" + text::fmt17(static_cast<double>(counts[k]) /
                                       static_cast<double>(kSeeds));
  }

  // (b) first-order convergence to the closed-form single-Gaussian flow:
  // z(0) = mu + s (.) z(1).
  const std::vector<double> mu = {0.7, -1.3};
  const std::vector<double> sdev = {1.1, 0.8};
  GmmComponent comp;
  comp.weight = 1.0;
  comp.mean = mu;
  comp.variance = {sdev[0] * sdev[0], sdev[1] * sdev[1]};
  const GmmFlowModel gauss({comp}, 2);
  const VelocityField gfield = make_gmm_field(gauss);

  const std::vector<std::size_t> grid = {4, 8, 16, 32, 64, 128};
  std::vector<double> hs, errs;
  for (const std::size_t n : grid) {
    double sum = 0.0;
    for (std::size_t seed = 0; seed < 64; ++seed) {
      const SampleState prior = sample_prior(2, 7000 + seed);
      const Trajectory traj = euler_integrate(prior, gfield, 0.0, n);
      double e2 = 0.0;
      for (std::size_t i = 0; i < 2; ++i) {
        const double exact = mu[i] + sdev[i] * prior.values[i];
        const double d = traj.end_state().values[i] - exact;
        e2 += d * d;
      }
      sum += std::sqrt(e2);
    }
    hs.push_back(1.0 / static_cast<double>(n));
    errs.push_back(sum / 64.0);
  }
  const stats::LineFit fit = stats::fit_loglog(hs, errs);
  const bool slope_ok = fit.slope >= 0.8 && fit.slope <= 1.2;

  detail << "occupancy " << occupancy_txt << " (" << kSeeds
         << " seeds, 99% CI " << (occupancy_ok ? "ok" : "MISS")
         << "); convergence slope " << text::fmt17(fit.slope);
  return occupancy_ok && slope_ok;
}

// ---- check 5: rubric conformance ------------------------------------------

SceneSpec rubric_spec(std::size_t n_slots, bool with_spatial) {
  SceneSpec spec;
  spec.latent_dim = 2 * n_slots;
  const std::vector<std::pair<std::string, std::vector<double>>> table = {
      {"alpha", {1.0, 0.0}},
      {"beta", {-0.5, std::sqrt(3.0) / 2.0}},
      {"gamma", {-0.5, -std::sqrt(3.0) / 2.0}},
  };
  for (const auto& [name, vec] : table) {
    ConceptEmbedding e;
    e.label = name;
    e.vector = vec;
    spec.concept_table.push_back({name, e});
  }
  for (std::size_t s = 0; s < n_slots; ++s) {
    const std::string id = "slot" + std::to_string(s);
    SlotConstraint c;
    c.slot_id = id;
    c.target_concept = table[s % table.size()].first;
    if (with_spatial && s == 0) {
      HalfplaneConstraint hp;
      hp.axis = 0;
      hp.sign = 1;
      hp.boundary = 0.0;
      c.spatial = hp;
    }
    spec.slots.push_back(c);
    spec.slot_layout.push_back({id, SlotRange{2 * s, 2 * s + 2}});
  }
  spec.instruction = "rubric probe";
  return spec;
}

AttainedAttributes perfect_attrs(const SceneSpec& spec, double margin = 1.5) {
  AttainedAttributes attrs;
  for (const SlotConstraint& slot : spec.slots) {
    attrs.slots.push_back({slot.target_concept, true, margin});
  }
  return attrs;
}

bool check_rubric(std::ostringstream& detail) {
  // Pinned constants.
  if (kDeductMissing != -5.0 || kDeductWrongAttribute != -3.0 ||
      kDeductSpatial != -3.0 || kDeductWrongCount != -4.0 ||
      kDeductBleeding != -2.5 || kBonusAmount != 1.0) {
    detail << "deduction constants drifted";
    return false;
  }

  // Perfect scene saturates at exactly +10 with caps 5/3/2.
  {
    const SceneSpec spec = rubric_spec(3, true);
    const ScoreBreakdown s = oracle_score(perfect_attrs(spec), spec);
    if (s.adherence != 5.0 || s.relational != 3.0 || s.integrity != 2.0 ||
        s.total != 10.0) {
      detail << "perfect-scene saturation failed (total "
             << text::fmt17(s.total) << ")";
      return false;
    }
  }

  // One-of-two wrong attribute, margins 1: 2.5 + 3 + 2 - 3 = 4.5.
  {
    const SceneSpec spec = rubric_spec(2, false);
    AttainedAttributes attrs = perfect_attrs(spec, 1.0);
    attrs.slots[1].attained_concept = "gamma";  // target is beta
    const ScoreBreakdown s = oracle_score(attrs, spec);
    if (s.total != 4.5) {
      detail << "wrong-attribute vignette scored " << text::fmt17(s.total)
             << ", want 4.5";
      return false;
    }
  }

  // Missing everything clamps at -10.
  {
    const SceneSpec spec = rubric_spec(3, false);
    AttainedAttributes attrs;
    for (std::size_t i = 0; i < 3; ++i) attrs.slots.push_back({"", true, 0.0});
    const ScoreBreakdown s = oracle_score(attrs, spec);
    if (s.total != -10.0) {
      detail << "clamp floor failed (total " << text::fmt17(s.total) << ")";
      return false;
    }
  }

  // Count deduction arithmetic (flag-gated): exactly -4 when enabled.
  {
    SceneSpec spec = rubric_spec(2, false);
    spec.slots[1].target_concept = "alpha";
    spec.expected_counts["alpha"] = 2;
    AttainedAttributes attrs = perfect_attrs(spec, 1.0);
    attrs.slots[1].attained_concept = "beta";
    const ScoreBreakdown off = oracle_score(attrs, spec, RubricConfig{});
    RubricConfig with_counts;
    with_counts.enable_count_checks = true;
    const ScoreBreakdown on = oracle_score(attrs, spec, with_counts);
    if (on.total - off.total != kDeductWrongCount) {
      detail << "count deduction delta " << text::fmt17(on.total - off.total);
      return false;
    }
  }

  // Monotonicity + caps + perfect-iff over randomized attainments.
  RandomStream rs(0xAF55);
  const SceneSpec spec = rubric_spec(3, true);
  for (int trial = 0; trial < 300; ++trial) {
    AttainedAttributes attrs;
    for (const SlotConstraint& slot : spec.slots) {
      SlotAttainment a;
      const double pick = rs.next_unit();
      if (pick < 0.2) {
        a.attained_concept = "";
      } else if (pick < 0.6) {
        a.attained_concept = slot.target_concept;
      } else {
        a.attained_concept = spec.concept_table[rs.next_u64() % 3].first;
      }
      a.spatial_ok = !slot.spatial || rs.next_unit() < 0.7;
      a.margin = 2.0 * rs.next_unit();
      attrs.slots.push_back(a);
    }
    const ScoreBreakdown s = oracle_score(attrs, spec);
    if (s.adherence > 5.0 || s.relational > 3.0 || s.integrity > 2.0 ||
        s.total < -10.0 || s.total > 10.0) {
      detail << "caps/clamp violated on randomized case";
      return false;
    }

    bool flawless = true;
    for (std::size_t i = 0; i < spec.slots.size(); ++i) {
      flawless = flawless &&
                 attrs.slots[i].attained_concept ==
                     spec.slots[i].target_concept &&
                 attrs.slots[i].spatial_ok && attrs.slots[i].margin >= 1.0;
    }
    if (flawless != (s.total == 10.0)) {
      detail << "perfect-scene characterization failed";
      return false;
    }

    for (std::size_t i = 0; i < spec.slots.size(); ++i) {
      if (attrs.slots[i].attained_concept == spec.slots[i].target_concept) {
        continue;
      }
      AttainedAttributes fixed = attrs;
      fixed.slots[i].attained_concept = spec.slots[i].target_concept;
      if (oracle_score(fixed, spec).total < s.total) {
        detail << "fixing slot " << i << " decreased the total";
        return false;
      }
    }
  }

  // Selection vignette: 8.5 base vs 9.5 steer -> steer; exact tie -> base.
  {
    const auto outcome = [](BranchKind kind, double total) {
      BranchOutcome o;
      o.action.kind = kind;
      o.score = score_breakdown_from_total(total);
      return o;
    };
    std::vector<BranchOutcome> duel;
    duel.push_back(outcome(BranchKind::kBase, 8.5));
    duel.push_back(outcome(BranchKind::kSteer, 9.5));
    duel.push_back(outcome(BranchKind::kExplore, 7.0));
    if (select_branch(duel) != 1) {
      detail << "8.5 vs 9.5 selection picked the wrong branch";
      return false;
    }
    std::vector<BranchOutcome> tie;
    tie.push_back(outcome(BranchKind::kSteer, 6.0));
    tie.push_back(outcome(BranchKind::kBase, 6.0));
    if (select_branch(tie) != 1) {
      detail << "tie at 6.0 must revert to base";
      return false;
    }
  }

  detail << "caps, clamp, constants, 4.5 vignette, count arithmetic, "
            "monotonicity (300 randomized), selection vignette";
  return true;
}

// ---- check 6: mask-fault recovery -----------------------------------------

bool check_fault_recovery(std::ostringstream& detail) {
  const TaskFamily family = make_family("complex");
  const SceneBundle bundle = family.make();

  PipelineConfig base;
  base.width = 2;  // Base + (possibly faulted) Steer: pure reversion duel
  base.deep_scoring = true;
  base.max_retries = 0;
  base.validate();

  PipelineConfig solo = base;
  solo.width = 1;

  const MaskFault faults[] = {MaskFault::kWrongSlot, MaskFault::kDilated,
                              MaskFault::kEmpty};
  std::size_t reversions = 0, steer_stages = 0;
  for (const MaskFault fault : faults) {
    PipelineConfig faulted = base;
    faulted.mask_fault = fault;
    for (std::size_t trial = 0; trial < 200; ++trial) {
      const std::uint64_t seed =
          rng::derive_seed(0xFA171, rng::Purpose::kTrial, trial);
      const GenerationResult with_fault = generate(
          bundle.scene, bundle.model, bundle.decoder, faulted, seed);
      for (const AttemptRecord& attempt : with_fault.attempts) {
        for (const SearchStageResult& stage : attempt.stages) {
          if (stage.outcomes.front().action.kind != BranchKind::kBase) {
            detail << "base branch missing from a stage";
            return false;
          }
          if (stage.chosen_outcome().score.total <
              stage.outcomes.front().score.total) {
            detail << "selected branch scored below base (fault "
                   << static_cast<int>(fault) << ", seed " << seed << ")";
            return false;
          }
          bool has_steer = false;
          for (const BranchOutcome& o : stage.outcomes) {
            has_steer = has_steer || o.action.kind == BranchKind::kSteer;
          }
          if (has_steer) {
            ++steer_stages;
            if (stage.outcomes[stage.chosen].action.kind == BranchKind::kBase) {
              ++reversions;
            }
          }
        }
      }
      const GenerationResult base_only =
          generate(bundle.scene, bundle.model, bundle.decoder, solo, seed);
      if (with_fault.final_score() < base_only.final_score()) {
        detail << "faulted run finished below the same-seed base-only run "
                  "(fault "
               << static_cast<int>(fault) << ", seed " << seed << ")";
        return false;
      }
    }
  }
  detail << "3 fault modes x 200 trials: selected >= base at every stage, "
            "final >= base-only final; "
         << reversions << "/" << steer_stages << " steer stages reverted";
  return true;
}

// ---- check 9: pipeline bounds and determinism ------------------------------

bool check_pipeline_bounds(std::ostringstream& detail) {
  const TaskFamily family = make_family("attribute");
  const SceneBundle bundle = family.make();

  PipelineConfig single;
  single.t_split = {0.6};
  single.validate();

  // Adversarial critic pinned at 5.0: exactly max_retries + 1 attempts,
  // best-of-attempts equals the pinned score.
  {
    ScriptedCritic critic({5.0});
    PipelineConfig cfg = single;
    cfg.max_retries = 2;
    const GenerationResult gen = generate(bundle.scene, bundle.model,
                                          bundle.decoder, cfg, 11, &critic);
    if (gen.attempts.size() != 3 || gen.retries_used() != 2 ||
        gen.final_score() != 5.0) {
      detail << "pinned-critic bound failed (attempts "
             << gen.attempts.size() << ")";
      return false;
    }
  }

  // threshold = -10 can never trigger a retry (totals clamp at -10).
  {
    ScriptedCritic critic({-10.0});
    PipelineConfig cfg = single;
    cfg.threshold = -10.0;
    cfg.max_retries = 2;
    const GenerationResult gen = generate(bundle.scene, bundle.model,
                                          bundle.decoder, cfg, 11, &critic);
    if (gen.retries_used() != 0) {
      detail << "threshold -10 still retried";
      return false;
    }
  }

  // Threshold vignette: 7.0 < 7.5 -> one retry; 9.0 -> stop.  The scripted
  // critic is consumed once per stage preview and once per final scoring.
  {
    ScriptedCritic critic({7.0, 7.0, 9.0, 9.0});
    PipelineConfig cfg = single;
    cfg.threshold = 7.5;
    cfg.max_retries = 2;
    const GenerationResult gen = generate(bundle.scene, bundle.model,
                                          bundle.decoder, cfg, 11, &critic);
    if (gen.retries_used() != 1 || gen.final_score() != 9.0) {
      detail << "threshold vignette failed (retries " << gen.retries_used()
             << ", final " << text::fmt17(gen.final_score()) << ")";
      return false;
    }
  }

  // Bitwise reproducibility under the oracle critic, full default config.
  {
    PipelineConfig cfg;  // defaults: W=3, three decision points, retries
    cfg.validate();
    const GenerationResult a =
        generate(bundle.scene, bundle.model, bundle.decoder, cfg, 123);
    const GenerationResult b =
        generate(bundle.scene, bundle.model, bundle.decoder, cfg, 123);
    if (a.to_json().dump() != b.to_json().dump()) {
      detail << "same-seed reruns diverged";
      return false;
    }
    for (const AttemptRecord& attempt : a.attempts) {
      double prev = 1.0;
      for (const SearchStageResult& stage : attempt.stages) {
        if (!(stage.stage_t < prev) || !(stage.stage_t > 0.0)) {
          detail << "stage times not strictly decreasing in (0,1)";
          return false;
        }
        prev = stage.stage_t;
      }
    }
  }

  detail << "attempt bounds, threshold vignettes, byte-identical reruns, "
            "ordered stage times";
  return true;
}

// ---- check 10: wire protocol ----------------------------------------------

bool check_wire_protocol(std::ostringstream& detail) {
  const TaskFamily family = make_family("attribute");
  const SceneBundle bundle = family.make();

  MockCriticServer server;
  RemoteConfig rc;
  rc.base_url = server.url();
  rc.timeout_ms = 2000;
  rc.retries = 1;
  RemoteCritic critic(rc);

  DecodedPreview preview;
  preview.values = {3.0, 0.0};  // clean alpha attainment

  // Fixture round trip: the parsed diagnosis equals the served document.
  {
    const json fixture{{"needs_correction", true},
                       {"segmentation_keyword", "obj0"},
                       {"target_object", "obj0"},
                       {"positive_concept", "alpha"},
                       {"negative_concept", "beta"},
                       {"target_bbox", {0.0, 0.25, 0.5, 1.0}}};
    server.set_fixture("/diagnose", 200, fixture.dump());
    const Diagnosis d = critic.diagnose(preview, bundle.scene);
    if (!d.needs_correction || d.segmentation_keyword != "obj0" ||
        d.positive_concept != "alpha" || d.negative_concept != "beta" ||
        d.target_region[1] != 0.25) {
      detail << "fixture diagnosis round trip mismatched";
      return false;
    }
    if (diagnosis_to_json(d).dump() != fixture.dump()) {
      detail << "diagnosis JSON re-serialization drifted from the fixture";
      return false;
    }
  }

  // Oracle-mode round trip: remote score/diagnose equal the local oracle.
  {
    server.clear_fixture("/diagnose");
    server.set_scene(bundle.scene);
    OracleCritic oracle;
    const ScoreBreakdown local = oracle.score(preview, bundle.scene);
    const ScoreBreakdown remote = critic.score(preview, bundle.scene);
    if (remote.total != local.total) {
      detail << "remote score " << text::fmt17(remote.total)
             << " != oracle " << text::fmt17(local.total);
      return false;
    }
    const Diagnosis dl = oracle.diagnose(preview, bundle.scene);
    const Diagnosis dr = critic.diagnose(preview, bundle.scene);
    if (diagnosis_to_json(dl).dump() != diagnosis_to_json(dr).dump()) {
      detail << "remote diagnosis diverged from the oracle";
      return false;
    }
  }

  // Out-of-range score -> protocol error naming "score".
  {
    server.set_fixture("/score", 200,
                       json{{"score", 12.0}, {"reason", "x"}}.dump());
    bool threw = false;
    try {
      critic.score(preview, bundle.scene);
    } catch (const ProtocolError& e) {
      threw = e.field() == "score";
    }
    if (!threw) {
      detail << "score 12.0 was not rejected as a protocol error";
      return false;
    }
    server.clear_fixture("/score");
  }

  // Missing field -> protocol error naming the field.
  {
    server.set_fixture("/diagnose", 200,
                       json{{"needs_correction", true},
                            {"target_object", "obj0"},
                            {"positive_concept", "alpha"},
                            {"negative_concept", "beta"},
                            {"target_bbox", {0.0, 0.0, 0.5, 1.0}}}
                           .dump());
    bool threw = false;
    try {
      critic.diagnose(preview, bundle.scene);
    } catch (const ProtocolError& e) {
      threw = e.field() == "segmentation_keyword";
    }
    if (!threw) {
      detail << "missing field was not rejected as a protocol error";
      return false;
    }
  }

  detail << "fixture + oracle round trips, range rejection, missing-field "
            "rejection";
  return true;
}

}  // namespace

std::vector<CheckResult> run_core_checks() {
  std::vector<CheckResult> results;
  results.push_back(timed(1, "projection identity", [](std::ostringstream& d) {
    return check_projection(d);
  }));
  results.back().passed = results.back().passed && results.back().ms < 1000.0;

  results.push_back(timed(2, "gradient oracle", [](std::ostringstream& d) {
    return check_gradient(d);
  }));
  results.back().passed = results.back().passed && results.back().ms < 5000.0;

  results.push_back(timed(3, "steering algebra", [](std::ostringstream& d) {
    return check_steering_algebra(d);
  }));

  results.push_back(timed(4, "gmm flow fidelity", [](std::ostringstream& d) {
    return check_flow_fidelity(d);
  }));
  results.back().passed = results.back().passed && results.back().ms < 30000.0;

  results.push_back(timed(5, "rubric conformance", [](std::ostringstream& d) {
    return check_rubric(d);
  }));

  results.push_back(timed(6, "mask-fault recovery", [](std::ostringstream& d) {
    return check_fault_recovery(d);
  }));

  results.push_back(
      timed(9, "pipeline bounds and determinism",
            [](std::ostringstream& d) { return check_pipeline_bounds(d); }));

  results.push_back(timed(10, "wire protocol", [](std::ostringstream& d) {
    return check_wire_protocol(d);
  }));
  return results;
}

CheckResult run_closed_loop_gain() {
  return timed(7, "closed-loop gain", [](std::ostringstream& detail) {
    const TaskFamily family = make_family("attribute");  // target weight 0.2
    constexpr std::size_t kTrials = 400;
    constexpr std::uint64_t kSeed = 0xC10;

    PipelineConfig open_loop;
    open_loop.width = 1;
    open_loop.max_retries = 0;
    open_loop.validate();
    const BatchReport open = run_batch(family, open_loop, kTrials, kSeed);

    PipelineConfig full;  // defaults: W=3, multi-stage, calibrated eta
    full.validate();
    const BatchReport closed = run_batch(family, full, kTrials, kSeed);

    const stats::Interval ci =
        stats::binomial_ci(open.successes, open.trials);
    const double z = stats::two_proportion_z(closed.successes, closed.trials,
                                             open.successes, open.trials);
    detail << "open-loop rate " << text::fmt17(open.success_rate())
           << " (99% CI [" << text::fmt17(ci.lo) << ", " << text::fmt17(ci.hi)
           << "] vs 0.2), closed-loop rate "
           << text::fmt17(closed.success_rate()) << ", one-sided z "
           << text::fmt17(z);
    return ci.contains(0.2) &&
           closed.success_rate() > open.success_rate() &&
           z > stats::kZ99OneSided;
  });
}

CheckResult run_width_monotonicity() {
  return timed(8, "width monotonicity", [](std::ostringstream& detail) {
    const TaskFamily family = make_family("attribute");
    PipelineConfig base;
    // Completion scoring ranks branches by their true endpoint quality, so
    // widening the action set cannot demote a stage's selection.
    base.deep_scoring = true;
    base.validate();

    const std::vector<SweepRow> rows =
        run_sweep(family, base, "width", {"1", "2", "3"}, 250, 0xA11);
    double prev = -1.0;
    bool ok = true;
    for (const SweepRow& row : rows) {
      if (!row.feasible) return false;
      const double rate = row.report.success_rate();
      ok = ok && rate >= prev;
      prev = rate;
      detail << "W=" << row.label << ": " << text::fmt17(rate) << "  ";
    }
    return ok;
  });
}

std::string format_result(const CheckResult& r) {
  std::ostringstream out;
  out << (r.passed ? "[PASS]" : "[FAIL]") << " criterion " << r.id << ": "
      << r.name << " — " << r.detail << " [" << text::fmt17(r.ms) << " ms]";
  return out.str();
}

}  // namespace afs::selftest

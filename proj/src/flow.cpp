#include "afs/flow.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <ostream>

#include "afs/errors.hpp"
#include "afs/kernels.hpp"
#include "afs/rng.hpp"
#include "afs/text_format.hpp"

namespace afs {
namespace {

bool all_finite(std::span<const double> v) {
  return std::all_of(v.begin(), v.end(),
                     [](double x) { return std::isfinite(x); });
}

void require_finite_state(const SampleState& x, const char* who) {
  if (!(x.t >= 0.0 && x.t <= 1.0)) {
    throw InvalidArgument(std::string(who) + ": t must lie in [0,1], got " +
                          text::fmt17(x.t));
  }
  if (!all_finite(x.values)) {
    throw InvalidArgument(std::string(who) + ": state has non-finite entries");
  }
}

// log responsibilities (unnormalized) of each component for z_t = x.
std::vector<double> log_posterior(const GmmFlowModel& model,
                                  std::span<const double> x, double t) {
  const double a = 1.0 - t;
  const auto& ops = kernels::active();
  std::vector<double> lw(model.components().size());
  for (std::size_t k = 0; k < lw.size(); ++k) {
    const GmmComponent& c = model.components()[k];
    const double quad = ops.gmm_quad(x.data(), c.mean.data(),
                                     c.variance.data(), a, t, x.size());
    double logdet = 0.0;
    for (double s2 : c.variance) logdet += std::log(a * a * s2 + t * t);
    lw[k] = std::log(c.weight) - 0.5 * (quad + logdet);
  }
  return lw;
}

std::vector<double> softmax(std::vector<double> lw) {
  const double m = *std::max_element(lw.begin(), lw.end());
  double sum = 0.0;
  for (double& v : lw) {
    v = std::exp(v - m);
    sum += v;
  }
  for (double& v : lw) v /= sum;
  return lw;
}

}  // namespace

GmmFlowModel::GmmFlowModel(std::vector<GmmComponent> components,
                           std::size_t dim)
    : components_(std::move(components)), dim_(dim) {
  if (dim_ == 0) throw InvalidArgument("GmmFlowModel: dim must be >= 1");
  if (components_.empty()) {
    throw InvalidArgument("GmmFlowModel: needs at least one component");
  }
  double weight_sum = 0.0;
  for (std::size_t k = 0; k < components_.size(); ++k) {
    const GmmComponent& c = components_[k];
    const std::string where = "GmmFlowModel component " + std::to_string(k);
    if (!(c.weight > 0.0) || !std::isfinite(c.weight)) {
      throw InvalidArgument(where + ": weight must be finite and > 0");
    }
    if (c.mean.size() != dim_ || c.variance.size() != dim_) {
      throw InvalidArgument(where + ": mean/variance length != dim");
    }
    if (!all_finite(c.mean)) {
      throw InvalidArgument(where + ": non-finite mean");
    }
    for (double s2 : c.variance) {
      if (!(s2 > 0.0) || !std::isfinite(s2)) {
        throw InvalidArgument(where + ": variances must be finite and > 0");
      }
    }
    weight_sum += c.weight;
  }
  if (std::abs(weight_sum - 1.0) > 1e-12) {
    throw InvalidArgument("GmmFlowModel: weights sum to " +
                          text::fmt17(weight_sum) + ", expected 1 (+/-1e-12)");
  }
}

std::vector<double> GmmFlowModel::responsibilities(std::span<const double> x,
                                                   double t) const {
  if (x.size() != dim_) {
    throw InvalidArgument("responsibilities: dimension mismatch");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw InvalidArgument("responsibilities: t outside [0,1]");
  }
  return softmax(log_posterior(*this, x, t));
}

std::size_t GmmFlowModel::classify(std::span<const double> x) const {
  if (x.size() != dim_) throw InvalidArgument("classify: dimension mismatch");
  const std::vector<double> lw = log_posterior(*this, x, /*t=*/0.0);
  std::size_t best = 0;
  for (std::size_t k = 1; k < lw.size(); ++k) {
    if (lw[k] > lw[best]) best = k;
  }
  return best;
}

GmmFlowModel GmmFlowModel::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidArgument("gmm load: empty input");
  }
  const auto header = text::split_ws(line);
  if (header.size() != 3 || header[0] != "gmm") {
    throw InvalidArgument("gmm load: bad header '" + line + "'");
  }
  const std::size_t dim = text::parse_size(text::expect_kv(header[1], "dim"));
  const std::size_t k = text::parse_size(text::expect_kv(header[2], "k"));
  std::vector<GmmComponent> components;
  components.reserve(k);
  for (std::size_t i = 0; i < k; ++i) {
    if (!std::getline(in, line)) {
      throw InvalidArgument("gmm load: expected " + std::to_string(k) +
                            " component lines, got " + std::to_string(i));
    }
    const auto fields = text::split_ws(line);
    if (fields.size() != 3) {
      throw InvalidArgument("gmm load: component line needs 3 fields: '" +
                            line + "'");
    }
    GmmComponent c;
    c.weight = text::parse_double(text::expect_kv(fields[0], "w"));
    c.mean = text::parse_double_list(text::expect_kv(fields[1], "mean"));
    c.variance = text::parse_double_list(text::expect_kv(fields[2], "var"));
    components.push_back(std::move(c));
  }
  return GmmFlowModel(std::move(components), dim);
}

void GmmFlowModel::save(std::ostream& out) const {
  out << "gmm dim=" << dim_ << " k=" << components_.size() << "\n";
  for (const GmmComponent& c : components_) {
    out << "w=" << text::fmt17(c.weight) << " mean=" << text::join17(c.mean)
        << " var=" << text::join17(c.variance) << "\n";
  }
}

void write_intervention_csv(std::ostream& out,
                            const std::vector<InterventionRecord>& records) {
  out << "step_index,t,energy,correction_norm\n";
  for (const InterventionRecord& r : records) {
    out << r.step_index << ',' << text::fmt17(r.t) << ','
        << text::fmt17(r.energy) << ',' << text::fmt17(r.correction_norm)
        << "\n";
  }
}

SampleState sample_prior(std::size_t dim, std::uint64_t seed) {
  if (dim == 0) throw InvalidArgument("sample_prior: dim must be >= 1");
  rng::RandomStream stream(seed,
                           static_cast<std::uint64_t>(rng::Purpose::kPrior));
  SampleState out;
  out.values.resize(dim);
  stream.fill_gaussian(out.values);
  out.t = 1.0;
  return out;
}

Velocity gmm_marginal_velocity(const SampleState& x,
                               const GmmFlowModel& model) {
  if (x.dim() != model.dim()) {
    throw InvalidArgument("gmm_marginal_velocity: dimension mismatch");
  }
  require_finite_state(x, "gmm_marginal_velocity");
  const double t = x.t;
  const double a = 1.0 - t;
  const std::vector<double> resp = softmax(log_posterior(model, x.values, t));
  Velocity v;
  v.values.assign(x.dim(), 0.0);
  const auto& ops = kernels::active();
  for (std::size_t k = 0; k < resp.size(); ++k) {
    const GmmComponent& c = model.components()[k];
    ops.gmm_vel_accum(resp[k], x.values.data(), c.mean.data(),
                      c.variance.data(), a, t, v.values.data(), x.dim());
  }
  return v;
}

VelocityField make_gmm_field(const GmmFlowModel& model) {
  return [model](const SampleState& s) {
    return gmm_marginal_velocity(s, model);
  };
}

Trajectory euler_integrate(const SampleState& start,
                           const VelocityField& field, double t_end,
                           std::size_t n_steps, const StepHook* hook) {
  require_finite_state(start, "euler_integrate");
  if (!(t_end >= 0.0) || !(t_end < start.t)) {
    throw InvalidArgument("euler_integrate: need 0 <= t_end < start.t, got "
                          "t_end=" +
                          text::fmt17(t_end) +
                          " start.t=" + text::fmt17(start.t));
  }
  if (n_steps == 0) throw InvalidArgument("euler_integrate: n_steps >= 1");

  // Grid times are analytic in (start.t, t_end, i) — no accumulation — and
  // the final time is pinned to t_end exactly.
  const auto grid = [&](std::size_t i) -> double {
    if (i == 0) return start.t;
    if (i == n_steps) return t_end;
    return start.t + (t_end - start.t) *
                         (static_cast<double>(i) / static_cast<double>(n_steps));
  };

  Trajectory traj;
  traj.states.reserve(n_steps + 1);
  traj.velocities.reserve(n_steps);
  traj.states.push_back(start);

  for (std::size_t i = 0; i < n_steps; ++i) {
    const SampleState& cur = traj.states.back();
    Velocity v = field(cur);
    if (v.dim() != cur.dim()) {
      throw InvalidArgument("euler_integrate: field returned wrong dimension");
    }
    if (hook && *hook) {
      v = (*hook)(cur, v, i, traj.interventions);
      if (v.dim() != cur.dim()) {
        throw InvalidArgument("euler_integrate: hook returned wrong dimension");
      }
    }
    if (!all_finite(v.values)) {
      throw NumericalFailure("euler_integrate: non-finite velocity", i);
    }
    const double dt = grid(i + 1) - grid(i);  // negative: t moves downward
    SampleState next;
    next.t = grid(i + 1);
    next.values.resize(cur.dim());
    kernels::active().scale_add(dt, v.values.data(), cur.values.data(),
                                next.values.data(), cur.dim());
    if (!all_finite(next.values)) {
      throw NumericalFailure("euler_integrate: non-finite state", i);
    }
    traj.velocities.push_back(std::move(v));
    traj.states.push_back(std::move(next));
  }
  return traj;
}

SampleState inject_noise(const SampleState& x, double sigma,
                         std::uint64_t seed) {
  if (!(sigma >= 0.0) || !std::isfinite(sigma)) {
    throw InvalidArgument("inject_noise: sigma must be finite and >= 0");
  }
  if (sigma == 0.0) return x;
  rng::RandomStream stream(
      seed, static_cast<std::uint64_t>(rng::Purpose::kExploreNoise));
  std::vector<double> eps(x.dim());
  stream.fill_gaussian(eps);
  SampleState out = x;
  kernels::axpy(sigma, eps, out.values);
  return out;
}

}  // namespace afs

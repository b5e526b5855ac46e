#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

// Flow states, the sampling ODE, and the exact Gaussian-mixture velocity
// oracle that stands in for a learned flow network.
//
// Time convention (fixed everywhere): t = 1 is pure noise, t = 0 is data,
// integration always moves t downward.  Interpolation is the linear bridge
// z_t = t*z1 + (1-t)*z0 with z0 ~ mixture (data) and z1 ~ N(0, I) (noise),
// so the ground-truth per-pair velocity is u_t = z1 - z0.

namespace afs {

// A point on the flow trajectory together with its flow time.
struct SampleState {
  std::vector<double> values;
  double t = 1.0;

  std::size_t dim() const { return values.size(); }
};

struct Velocity {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

struct GmmComponent {
  double weight = 0.0;
  std::vector<double> mean;
  std::vector<double> variance;  // diagonal, strictly positive
};

// Diagonal Gaussian mixture over the data endpoint z0.  Validated on
// construction: weights positive and summing to 1 within 1e-12, variances
// strictly positive, consistent dimensions, everything finite.
class GmmFlowModel {
 public:
  GmmFlowModel(std::vector<GmmComponent> components, std::size_t dim);

  std::size_t dim() const { return dim_; }
  const std::vector<GmmComponent>& components() const { return components_; }

  // Posterior responsibilities of each component for observing z_t = x at
  // time t under the bridge (component k gives x ~ N((1-t)mu_k,
  // (1-t)^2 s2_k + t^2) per coordinate).  Sums to 1.
  std::vector<double> responsibilities(std::span<const double> x,
                                       double t) const;

  // Most likely component for a clean (t = 0) sample: argmax_k of
  // weight_k * N(x; mu_k, diag s2_k).  Ties go to the lower index.
  std::size_t classify(std::span<const double> x) const;

  // Plain-text model format, round-trips bit-exactly (17 significant
  // digits):
  //   gmm dim=<d> k=<k>
  //   w=<w> mean=<v1,v2,...> var=<v1,...>     (one line per component)
  static GmmFlowModel load(std::istream& in);
  void save(std::ostream& out) const;

 private:
  std::vector<GmmComponent> components_;
  std::size_t dim_;
};

// One per-step steering record.  `skipped` marks steps where the steering
// hook hit a degenerate preview and let the raw velocity through; such rows
// serialize with energy = nan.
struct InterventionRecord {
  std::size_t step_index = 0;
  double t = 0.0;
  double energy = 0.0;
  double correction_norm = 0.0;
  bool skipped = false;
};

// CSV export, header "step_index,t,energy,correction_norm".
void write_intervention_csv(std::ostream& out,
                            const std::vector<InterventionRecord>& records);

struct Trajectory {
  std::vector<SampleState> states;        // n_steps + 1, strictly decreasing t
  std::vector<Velocity> velocities;       // n_steps (velocity actually applied)
  std::vector<InterventionRecord> interventions;

  const SampleState& end_state() const { return states.back(); }
};

using VelocityField = std::function<Velocity(const SampleState&)>;

// Per-step intervention: receives the current state, the raw field output,
// and the step index; may return a replacement velocity and append to the
// intervention log.
using StepHook = std::function<Velocity(const SampleState&, const Velocity&,
                                        std::size_t,
                                        std::vector<InterventionRecord>&)>;

// Standard-normal start state at t = 1.  Same (dim, seed) -> identical bits.
SampleState sample_prior(std::size_t dim, std::uint64_t seed);

// Exact marginal velocity E[z1 - z0 | z_t = x.values] under the linear
// bridge with z0 ~ model, z1 ~ N(0, I).  Closed form per component and
// coordinate; components mixed by posterior responsibilities.
Velocity gmm_marginal_velocity(const SampleState& x, const GmmFlowModel& model);

// Velocity field closure over a model copy (models are small).
VelocityField make_gmm_field(const GmmFlowModel& model);

// Explicit Euler from start.t down to t_end in n_steps uniform steps.
// Grid times are computed analytically from (start.t, t_end, i, n), never by
// accumulation, and the final time is exactly t_end.  The hook, when
// present, may replace each step's velocity.  Throws NumericalFailure with
// the step index if the applied velocity or updated state goes non-finite.
Trajectory euler_integrate(const SampleState& start, const VelocityField& field,
                           double t_end, std::size_t n_steps,
                           const StepHook* hook = nullptr);

// x + sigma * eps with seeded standard-normal eps; sigma = 0 returns the
// input unchanged (bitwise).
SampleState inject_noise(const SampleState& x, double sigma,
                         std::uint64_t seed);

}  // namespace afs

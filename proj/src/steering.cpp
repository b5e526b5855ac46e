#include "afs/steering.hpp"

#include <cmath>
#include <limits>
#include <utility>

#include "afs/errors.hpp"
#include "afs/kernels.hpp"

namespace afs {
namespace {

constexpr double kNormFloor = 1e-9;

// Adds the gradient of sign * cos(x, e) at x into acc.
void accumulate_cosine_gradient(std::span<const double> x, double x_norm,
                                const ConceptEmbedding& e, double sign,
                                std::vector<double>& acc) {
  const double e_norm = kernels::norm(e.vector);
  const double cosine =
      kernels::dot(x, e.vector) / (x_norm * e_norm);
  kernels::axpy(sign / (x_norm * e_norm), e.vector, acc);
  kernels::axpy(-sign * cosine / (x_norm * x_norm), x, acc);
}

double cosine(std::span<const double> a, double a_norm,
              const ConceptEmbedding& e) {
  return kernels::dot(a, e.vector) / (a_norm * kernels::norm(e.vector));
}

}  // namespace

void validate_concept(const ConceptEmbedding& c, std::size_t obs_dim) {
  if (c.dim() != obs_dim) {
    throw InvalidArgument("concept '" + c.label +
                          "': dimension != observation dim");
  }
  for (double v : c.vector) {
    if (!std::isfinite(v)) {
      throw InvalidArgument("concept '" + c.label + "': non-finite entry");
    }
  }
  if (!(kernels::norm(c.vector) > kNormFloor)) {
    throw InvalidArgument("concept '" + c.label + "': norm <= 1e-9");
  }
}

void validate_mask(const SteeringMask& m, std::size_t latent_dim) {
  if (m.dim() != latent_dim) {
    throw InvalidArgument("steering mask: dimension != latent dim");
  }
  for (double w : m.weights) {
    if (!(w >= 0.0 && w <= 1.0)) {
      throw InvalidArgument("steering mask: weights must lie in [0,1]");
    }
  }
}

void validate_directive(const SteeringDirective& d, std::size_t obs_dim,
                        std::size_t latent_dim) {
  validate_concept(d.positive, obs_dim);
  validate_concept(d.negative, obs_dim);
  validate_mask(d.mask, latent_dim);
  if (!std::isfinite(d.eta) || !(d.eta >= 0.0)) {
    throw InvalidArgument("steering directive: eta must be finite and >= 0");
  }
}

double contrastive_energy(const DecodedPreview& x, const ConceptEmbedding& pos,
                          const ConceptEmbedding& neg) {
  if (pos.dim() != x.dim() || neg.dim() != x.dim()) {
    throw InvalidArgument("contrastive_energy: dimension mismatch");
  }
  const double x_norm = kernels::norm(x.values);
  if (!(x_norm > kNormFloor)) {
    throw DegenerateInput("contrastive_energy: preview norm <= 1e-9");
  }
  validate_concept(pos, x.dim());
  validate_concept(neg, x.dim());
  return cosine(x.values, x_norm, neg) - cosine(x.values, x_norm, pos);
}

std::vector<double> energy_gradient(const DataPreview& z,
                                    const AffineDecoder& dec,
                                    const ConceptEmbedding& pos,
                                    const ConceptEmbedding& neg) {
  const DecodedPreview x = decode(z, dec);
  if (pos.dim() != x.dim() || neg.dim() != x.dim()) {
    throw InvalidArgument("energy_gradient: concept dimension mismatch");
  }
  validate_concept(pos, x.dim());
  validate_concept(neg, x.dim());
  const double x_norm = kernels::norm(x.values);
  if (!(x_norm > kNormFloor)) {
    throw DegenerateInput("energy_gradient: decoded preview norm <= 1e-9");
  }
  std::vector<double> grad_obs(x.dim(), 0.0);
  accumulate_cosine_gradient(x.values, x_norm, neg, +1.0, grad_obs);
  accumulate_cosine_gradient(x.values, x_norm, pos, -1.0, grad_obs);
  return decoder_pullback(dec, grad_obs);
}

Velocity steer_velocity(const Velocity& v, std::span<const double> grad,
                        const SteeringDirective& d, double t) {
  if (grad.size() != v.dim() || d.mask.dim() != v.dim()) {
    throw InvalidArgument("steer_velocity: dimension mismatch");
  }
  if (!(t >= 0.0 && t <= 1.0)) {
    throw InvalidArgument("steer_velocity: t outside [0,1]");
  }
  if (!std::isfinite(d.eta) || !(d.eta >= 0.0)) {
    throw InvalidArgument("steer_velocity: eta must be finite and >= 0");
  }
  const double scale = d.eta * t;
  if (scale == 0.0) return v;  // eta or t zero: bitwise identity, never v + 0.0
  Velocity out;
  out.values.resize(v.dim());
  kernels::active().steer_blend(v.values.data(), grad.data(),
                                d.mask.weights.data(), scale,
                                out.values.data(), v.dim());
  return out;
}

StepHook make_steering_hook(SteeringDirective directive, AffineDecoder dec) {
  validate_directive(directive, dec.rows(), dec.cols());
  return [directive = std::move(directive), dec = std::move(dec)](
             const SampleState& state, const Velocity& raw, std::size_t step,
             std::vector<InterventionRecord>& log) -> Velocity {
    const DataPreview z = project_to_data(state, raw);
    double energy;
    std::vector<double> grad;
    try {
      const DecodedPreview x = decode(z, dec);
      energy = contrastive_energy(x, directive.positive, directive.negative);
      grad = energy_gradient(z, dec, directive.positive, directive.negative);
    } catch (const DegenerateInput&) {
      // Transient: the flow leaves the origin immediately; step unsteered.
      log.push_back({step, state.t, std::numeric_limits<double>::quiet_NaN(),
                     0.0, /*skipped=*/true});
      return raw;
    }
    Velocity steered = steer_velocity(raw, grad, directive, state.t);
    std::vector<double> masked(grad.size());
    for (std::size_t i = 0; i < grad.size(); ++i) {
      masked[i] = grad[i] * directive.mask.weights[i];
    }
    const double correction = directive.eta * state.t * kernels::norm(masked);
    log.push_back({step, state.t, energy, correction, /*skipped=*/false});
    return steered;
  };
}

}  // namespace afs

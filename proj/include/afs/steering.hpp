#pragma once

#include <string>
#include <vector>

#include "afs/flow.hpp"
#include "afs/preview.hpp"

// Flow steering: the contrastive semantic energy, its exact gradient through
// the affine decoder, and the time-scaled mask-gated velocity correction
//   v_corrected = v + eta * t * (grad (.) mask).
// Descent rationale: the energy depends on v through the preview
// z_hat0 = z - t*v, so d E / d v = -t * dE/dz_hat0; stepping v along
// +eta*t*grad moves the re-projected preview along -grad, i.e. downhill.

namespace afs {

// Fixed direction in observation space standing in for a text embedding.
struct ConceptEmbedding {
  std::string label;
  std::vector<double> vector;  // norm must exceed 1e-9

  std::size_t dim() const { return vector.size(); }
};

// Per-latent-dimension gate, each weight in [0,1].
struct SteeringMask {
  std::vector<double> weights;

  std::size_t dim() const { return weights.size(); }
};

// Everything one corrective branch steers with.  Concepts live in
// observation space; the mask lives in latent space.
struct SteeringDirective {
  ConceptEmbedding positive;
  ConceptEmbedding negative;
  SteeringMask mask;
  // Finite, >= 0.  Zero disables the correction: steer_velocity returns the
  // raw velocity bitwise, so an eta=0 run is the exact no-steer baseline.
  double eta = 1.0;
};

void validate_concept(const ConceptEmbedding& c, std::size_t obs_dim);
void validate_mask(const SteeringMask& m, std::size_t latent_dim);
void validate_directive(const SteeringDirective& d, std::size_t obs_dim,
                        std::size_t latent_dim);

// E = cos(x, neg) - cos(x, pos), in [-2, 2].  Throws DegenerateInput when
// ||x|| <= 1e-9 (cosine undefined at the origin).
double contrastive_energy(const DecodedPreview& x, const ConceptEmbedding& pos,
                          const ConceptEmbedding& neg);

// Analytic gradient of contrastive_energy(decode(z)) with respect to z:
// observation-space cosine gradients
//   d cos(x,e) / dx = e/(||x|| ||e||) - cos(x,e) * x/||x||^2
// combined and pulled back through the decoder transpose.
std::vector<double> energy_gradient(const DataPreview& z,
                                    const AffineDecoder& dec,
                                    const ConceptEmbedding& pos,
                                    const ConceptEmbedding& neg);

// out[i] = v[i] + eta * t * grad[i] * mask[i]; entries with mask[i] == 0 are
// bitwise unchanged, and eta*t == 0 returns v bitwise.
Velocity steer_velocity(const Velocity& v, std::span<const double> grad,
                        const SteeringDirective& d, double t);

// Hook for euler_integrate: per step, projects the state with the raw
// velocity, decodes, evaluates energy and gradient, applies steer_velocity,
// and appends an InterventionRecord (energy, correction norm).  A degenerate
// (near-zero-norm) preview records a skipped step and passes the raw
// velocity through unchanged.
StepHook make_steering_hook(SteeringDirective directive, AffineDecoder dec);

}  // namespace afs

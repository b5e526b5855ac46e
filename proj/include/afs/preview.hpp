#pragma once

#include <iosfwd>
#include <span>
#include <vector>

#include "afs/flow.hpp"

// Lookahead projection to the data manifold and the affine decoder that
// stands in for a VAE: x = A z + b with exact Jacobian A, so the gradient
// pullback A^T g is analytic.

namespace afs {

// The projected clean latent ("where does this trajectory land if the
// velocity stays constant"), tagged with the time it was projected from.
struct DataPreview {
  std::vector<double> values;
  double source_t = 0.0;

  std::size_t dim() const { return values.size(); }
};

struct DecodedPreview {
  std::vector<double> values;

  std::size_t dim() const { return values.size(); }
};

// Affine map latent -> observation space, row-major (rows x cols) matrix
// plus offset.  Validated finite on construction.
class AffineDecoder {
 public:
  AffineDecoder(std::size_t rows, std::size_t cols, std::vector<double> matrix,
                std::vector<double> offset);

  static AffineDecoder identity(std::size_t dim);

  std::size_t rows() const { return rows_; }  // obs_dim
  std::size_t cols() const { return cols_; }  // latent_dim
  std::span<const double> row(std::size_t r) const;
  const std::vector<double>& matrix() const { return matrix_; }
  const std::vector<double>& offset() const { return offset_; }

  // Restriction to output rows [begin, end): same latent space, smaller
  // observation space.  Used to score/steer a single scene slot.
  AffineDecoder row_range(std::size_t begin, std::size_t end) const;

  // Plain-text format, bit-exact round trip:
  //   decoder rows=<m> cols=<n>
  //   row=<v1,...,vn>        (m lines)
  //   offset=<v1,...,vm>
  static AffineDecoder load(std::istream& in);
  void save(std::ostream& out) const;

 private:
  std::size_t rows_, cols_;
  std::vector<double> matrix_;  // row-major
  std::vector<double> offset_;
};

// z_hat0 = z_t - t * v_t (exact for the linear bridge when v is the true
// per-pair velocity).
DataPreview project_to_data(const SampleState& x, const Velocity& v);

// matrix * z + offset.
DecodedPreview decode(const DataPreview& z, const AffineDecoder& dec);

// matrix^T * g: pulls an observation-space gradient back to latent space.
std::vector<double> decoder_pullback(const AffineDecoder& dec,
                                     std::span<const double> g);

}  // namespace afs

#include "afs/preview.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <ostream>
#include <string>

#include "afs/errors.hpp"
#include "afs/kernels.hpp"
#include "afs/text_format.hpp"

namespace afs {

AffineDecoder::AffineDecoder(std::size_t rows, std::size_t cols,
                             std::vector<double> matrix,
                             std::vector<double> offset)
    : rows_(rows), cols_(cols), matrix_(std::move(matrix)),
      offset_(std::move(offset)) {
  if (rows_ == 0 || cols_ == 0) {
    throw InvalidArgument("AffineDecoder: rows and cols must be >= 1");
  }
  if (matrix_.size() != rows_ * cols_) {
    throw InvalidArgument("AffineDecoder: matrix size != rows*cols");
  }
  if (offset_.size() != rows_) {
    throw InvalidArgument("AffineDecoder: offset size != rows");
  }
  const auto finite = [](double v) { return std::isfinite(v); };
  if (!std::all_of(matrix_.begin(), matrix_.end(), finite) ||
      !std::all_of(offset_.begin(), offset_.end(), finite)) {
    throw InvalidArgument("AffineDecoder: non-finite entries");
  }
}

AffineDecoder AffineDecoder::identity(std::size_t dim) {
  std::vector<double> m(dim * dim, 0.0);
  for (std::size_t i = 0; i < dim; ++i) m[i * dim + i] = 1.0;
  return AffineDecoder(dim, dim, std::move(m), std::vector<double>(dim, 0.0));
}

std::span<const double> AffineDecoder::row(std::size_t r) const {
  return {matrix_.data() + r * cols_, cols_};
}

AffineDecoder AffineDecoder::row_range(std::size_t begin,
                                       std::size_t end) const {
  if (begin >= end || end > rows_) {
    throw InvalidArgument("AffineDecoder::row_range: bad range [" +
                          std::to_string(begin) + "," + std::to_string(end) +
                          ") with rows=" + std::to_string(rows_));
  }
  std::vector<double> m(matrix_.begin() + begin * cols_,
                        matrix_.begin() + end * cols_);
  std::vector<double> b(offset_.begin() + begin, offset_.begin() + end);
  return AffineDecoder(end - begin, cols_, std::move(m), std::move(b));
}

AffineDecoder AffineDecoder::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) {
    throw InvalidArgument("decoder load: empty input");
  }
  const auto header = text::split_ws(line);
  if (header.size() != 3 || header[0] != "decoder") {
    throw InvalidArgument("decoder load: bad header '" + line + "'");
  }
  const std::size_t rows =
      text::parse_size(text::expect_kv(header[1], "rows"));
  const std::size_t cols =
      text::parse_size(text::expect_kv(header[2], "cols"));
  std::vector<double> matrix;
  matrix.reserve(rows * cols);
  for (std::size_t r = 0; r < rows; ++r) {
    if (!std::getline(in, line)) {
      throw InvalidArgument("decoder load: expected " + std::to_string(rows) +
                            " row lines, got " + std::to_string(r));
    }
    const auto row =
        text::parse_double_list(text::expect_kv(line, "row"));
    if (row.size() != cols) {
      throw InvalidArgument("decoder load: row " + std::to_string(r) +
                            " has " + std::to_string(row.size()) +
                            " values, expected " + std::to_string(cols));
    }
    matrix.insert(matrix.end(), row.begin(), row.end());
  }
  if (!std::getline(in, line)) {
    throw InvalidArgument("decoder load: missing offset line");
  }
  auto offset = text::parse_double_list(text::expect_kv(line, "offset"));
  return AffineDecoder(rows, cols, std::move(matrix), std::move(offset));
}

void AffineDecoder::save(std::ostream& out) const {
  out << "decoder rows=" << rows_ << " cols=" << cols_ << "\n";
  for (std::size_t r = 0; r < rows_; ++r) {
    out << "row=";
    for (std::size_t c = 0; c < cols_; ++c) {
      if (c) out << ',';
      out << text::fmt17(matrix_[r * cols_ + c]);
    }
    out << "\n";
  }
  out << "offset=" << text::join17(offset_) << "\n";
}

DataPreview project_to_data(const SampleState& x, const Velocity& v) {
  if (x.dim() != v.dim()) {
    throw InvalidArgument("project_to_data: dimension mismatch");
  }
  if (!(x.t >= 0.0 && x.t <= 1.0)) {
    throw InvalidArgument("project_to_data: t outside [0,1]");
  }
  DataPreview out;
  out.source_t = x.t;
  out.values.resize(x.dim());
  kernels::active().scale_add(-x.t, v.values.data(), x.values.data(),
                              out.values.data(), x.dim());
  return out;
}

DecodedPreview decode(const DataPreview& z, const AffineDecoder& dec) {
  if (z.dim() != dec.cols()) {
    throw InvalidArgument("decode: latent dimension mismatch");
  }
  DecodedPreview out;
  out.values.resize(dec.rows());
  const auto& ops = kernels::active();
  for (std::size_t r = 0; r < dec.rows(); ++r) {
    out.values[r] =
        dec.offset()[r] + ops.dot(dec.row(r).data(), z.values.data(), dec.cols());
  }
  return out;
}

std::vector<double> decoder_pullback(const AffineDecoder& dec,
                                     std::span<const double> g) {
  if (g.size() != dec.rows()) {
    throw InvalidArgument("decoder_pullback: observation dimension mismatch");
  }
  std::vector<double> out(dec.cols(), 0.0);
  for (std::size_t r = 0; r < dec.rows(); ++r) {
    kernels::active().axpy(g[r], dec.row(r).data(), out.data(), dec.cols());
  }
  return out;
}

}  // namespace afs

#include "dea/types.hpp"

#include <string>

namespace dea {

void DataTriplet::validate() const {
  const Index rows = y.rows();
  if (x.rows() != rows || z.rows() != rows) {
    throw Error(ErrorCode::DimensionMismatch,
                "X, Y and Z must share the row count (got " + std::to_string(x.rows()) + ", " +
                    std::to_string(rows) + ", " + std::to_string(z.rows()) + ")");
  }
  if (rows < 2) throw Error(ErrorCode::InsufficientSamples, "need at least 2 observations");
  if (!x.allFinite() || !y.allFinite() || !z.allFinite()) {
    throw Error(ErrorCode::DomainError, "observations contain NaN or Inf");
  }
}

Matrix DataTriplet::xz() const {
  Matrix out(x.rows(), x.cols() + z.cols());
  out.leftCols(x.cols()) = x;
  out.rightCols(z.cols()) = z;
  return out;
}

}  // namespace dea

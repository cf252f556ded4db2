#pragma once

#include <cstddef>

namespace poolforge::detail {

// C (M x N) = op(A) * op(B), or C += ... when `accumulate`. All operands are
// row-major; op(A) is M x K and op(B) is K x N.
void gemm(const double* a, bool trans_a, const double* b, bool trans_b, double* c, std::size_t m, std::size_t n,
          std::size_t k, bool accumulate);

}  // namespace poolforge::detail

#include "gemm.hpp"

#include <Eigen/Core>

namespace poolforge::detail {

namespace {
using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ConstMap = Eigen::Map<const RowMat>;
using MutMap = Eigen::Map<RowMat>;
}  // namespace

void gemm(const double* a, bool trans_a, const double* b, bool trans_b, double* c, std::size_t m, std::size_t n,
          std::size_t k, bool accumulate) {
  const auto M = static_cast<Eigen::Index>(m);
  const auto N = static_cast<Eigen::Index>(n);
  const auto K = static_cast<Eigen::Index>(k);
  MutMap cm(c, M, N);
  if (!accumulate) cm.setZero();
  if (!trans_a && !trans_b)
    cm.noalias() += ConstMap(a, M, K) * ConstMap(b, K, N);
  else if (trans_a && !trans_b)
    cm.noalias() += ConstMap(a, K, M).transpose() * ConstMap(b, K, N);
  else if (!trans_a && trans_b)
    cm.noalias() += ConstMap(a, M, K) * ConstMap(b, N, K).transpose();
  else
    cm.noalias() += ConstMap(a, K, M).transpose() * ConstMap(b, N, K).transpose();
}

}  // namespace poolforge::detail

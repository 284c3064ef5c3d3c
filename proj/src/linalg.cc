#include "a2v/linalg.h"

#ifdef A2V_HAVE_EIGEN
#include <Eigen/Dense>
#endif

namespace a2v::linalg {

#ifdef A2V_HAVE_EIGEN

namespace {
using MatMap = Eigen::Map<
    const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>,
    0, Eigen::OuterStride<>>;
using MutMap = Eigen::Map<
    Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>, 0,
    Eigen::OuterStride<>>;
}  // namespace

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double* a, int64_t lda, const double* b,
          int64_t ldb, double beta, double* c, int64_t ldc) {
  MatMap ma(a, trans_a ? k : m, trans_a ? m : k, Eigen::OuterStride<>(lda));
  MatMap mb(b, trans_b ? n : k, trans_b ? k : n, Eigen::OuterStride<>(ldb));
  MutMap mc(c, m, n, Eigen::OuterStride<>(ldc));
  if (beta == 0.0)
    mc.setZero();
  else if (beta != 1.0)
    mc *= beta;
  if (trans_a && trans_b)
    mc.noalias() += alpha * (ma.transpose() * mb.transpose());
  else if (trans_a)
    mc.noalias() += alpha * (ma.transpose() * mb);
  else if (trans_b)
    mc.noalias() += alpha * (ma * mb.transpose());
  else
    mc.noalias() += alpha * (ma * mb);
}

#else  // portable fallback

void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double* a, int64_t lda, const double* b,
          int64_t ldb, double beta, double* c, int64_t ldc) {
  auto a_at = [&](int64_t i, int64_t p) {
    return trans_a ? a[p * lda + i] : a[i * lda + p];
  };
  auto b_at = [&](int64_t p, int64_t j) {
    return trans_b ? b[j * ldb + p] : b[p * ldb + j];
  };
#pragma omp parallel for schedule(static)
  for (int64_t i = 0; i < m; ++i) {
    for (int64_t j = 0; j < n; ++j) {
      double acc = 0.0;
      for (int64_t p = 0; p < k; ++p) acc += a_at(i, p) * b_at(p, j);
      c[i * ldc + j] = alpha * acc + (beta == 0.0 ? 0.0 : beta * c[i * ldc + j]);
    }
  }
}

#endif

}  // namespace a2v::linalg

#ifndef A2V_LINALG_H_
#define A2V_LINALG_H_

#include <cstdint>

namespace a2v::linalg {

// C[m,n] = alpha * op(A) * op(B) + beta * C, row-major buffers.
// op(A) is A[m,k] or, when trans_a, the transpose of A[k,m]; same for B.
void gemm(bool trans_a, bool trans_b, int64_t m, int64_t n, int64_t k,
          double alpha, const double* a, int64_t lda, const double* b,
          int64_t ldb, double beta, double* c, int64_t ldc);

}  // namespace a2v::linalg

#endif  // A2V_LINALG_H_

#pragma once

#include <cstddef>

namespace sernet::nn {

// Register-blocked row-major GEMM kernels. These carry the bulk of the
// training FLOPs (im2col convolution and dense layers), so the inner tile is
// sized for the vector units: MR rows of NR accumulators live in registers
// across the k loop and the compiler vectorizes the NR axis.
//
// All loops have a fixed evaluation order, so results are bit-reproducible
// run to run regardless of the thread count above this layer.

namespace detail {

template <typename T>
struct GemmTile {
  static constexpr int MR = 4;
  static constexpr int NR = 32;  // floats: two 512-bit or four 256-bit rows
};
template <>
struct GemmTile<double> {
  static constexpr int MR = 4;
  static constexpr int NR = 16;
};

template <typename T, int MR, int NR>
inline void gemm_tile(int K, const T* __restrict a, int lda, const T* __restrict b, int ldb,
                      T* __restrict c, int ldc) {
  T acc[MR][NR];
  for (int i = 0; i < MR; ++i)
    for (int j = 0; j < NR; ++j) acc[i][j] = T(0);
  for (int k = 0; k < K; ++k) {
    const T* brow = b + static_cast<size_t>(k) * ldb;
    for (int i = 0; i < MR; ++i) {
      T av = a[static_cast<size_t>(i) * lda + k];
      for (int j = 0; j < NR; ++j) acc[i][j] += av * brow[j];
    }
  }
  for (int i = 0; i < MR; ++i)
    for (int j = 0; j < NR; ++j) c[static_cast<size_t>(i) * ldc + j] += acc[i][j];
}

}  // namespace detail

// C[M,N] += A[M,K] * B[K,N]
template <typename T>
void gemm_acc(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc) {
  constexpr int MR = detail::GemmTile<T>::MR;
  constexpr int NR = detail::GemmTile<T>::NR;
  int m = 0;
  for (; m + MR <= M; m += MR) {
    const T* arow = A + static_cast<size_t>(m) * lda;
    int n = 0;
    for (; n + NR <= N; n += NR)
      detail::gemm_tile<T, MR, NR>(K, arow, lda, B + n, ldb, C + static_cast<size_t>(m) * ldc + n,
                                   ldc);
    for (; n < N; ++n)
      for (int i = 0; i < MR; ++i) {
        T s = T(0);
        const T* ai = arow + static_cast<size_t>(i) * lda;
        for (int k = 0; k < K; ++k) s += ai[k] * B[static_cast<size_t>(k) * ldb + n];
        C[static_cast<size_t>(m + i) * ldc + n] += s;
      }
  }
  for (; m < M; ++m)
    for (int n = 0; n < N; ++n) {
      T s = T(0);
      const T* ai = A + static_cast<size_t>(m) * lda;
      for (int k = 0; k < K; ++k) s += ai[k] * B[static_cast<size_t>(k) * ldb + n];
      C[static_cast<size_t>(m) * ldc + n] += s;
    }
}

// C[K,N] += A[M,K]^T * B[M,N]; the contraction runs over A/B rows, so each
// step is a rank-1 update that vectorizes along N. Used for weight gradients.
template <typename T>
void gemm_at_acc(int M, int N, int K, const T* A, int lda, const T* B, int ldb, T* C, int ldc) {
  for (int m = 0; m < M; ++m) {
    const T* arow = A + static_cast<size_t>(m) * lda;
    const T* brow = B + static_cast<size_t>(m) * ldb;
    for (int k = 0; k < K; ++k) {
      T av = arow[k];
      T* crow = C + static_cast<size_t>(k) * ldc;
      for (int n = 0; n < N; ++n) crow[n] += av * brow[n];
    }
  }
}

// out[C,R] = in[R,C]^T. Weight matrices are small; input-gradient GEMMs
// transpose them once and then run the fast gemm_acc path.
template <typename T>
void transpose(int R, int C, const T* in, T* out) {
  for (int r = 0; r < R; ++r)
    for (int c = 0; c < C; ++c) out[static_cast<size_t>(c) * R + r] = in[static_cast<size_t>(r) * C + c];
}

}  // namespace sernet::nn

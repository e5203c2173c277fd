#pragma once

// Row-major matrix kernels used by every layer. Each output row is owned
// by exactly one thread and its reduction runs in a fixed sequential
// order, so results are bit-identical for any thread count.

#include <cstdlib>
#include <thread>

namespace amc::nn {

// Worker count for parallel regions: AMC_THREADS env var, else hardware
// concurrency. A value of 1 disables parallelism entirely.
int thread_count();
void set_thread_count(int n);  // 0 restores the environment default

// C[M,N] = (accumulate ? C : 0) + A[M,K] * B[K,N]
template <class T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

// C[M,N] = (accumulate ? C : 0) + A[M,K] * B[N,K]^T
template <class T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

// C[M,N] = (accumulate ? C : 0) + A[K,M]^T * B[K,N]
template <class T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate);

extern template void gemm_nn<float>(const float*, const float*, float*, int, int, int, bool);
extern template void gemm_nt<float>(const float*, const float*, float*, int, int, int, bool);
extern template void gemm_tn<float>(const float*, const float*, float*, int, int, int, bool);
extern template void gemm_nn<double>(const double*, const double*, double*, int, int, int, bool);
extern template void gemm_nt<double>(const double*, const double*, double*, int, int, int, bool);
extern template void gemm_tn<double>(const double*, const double*, double*, int, int, int, bool);

}  // namespace amc::nn

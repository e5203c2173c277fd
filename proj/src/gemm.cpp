#include "amc/nn/gemm.hpp"

#include <algorithm>
#include <atomic>
#include <cstring>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace amc::nn {

namespace {
std::atomic<int> g_threads{-1};

int env_threads() {
    if (const char* env = std::getenv("AMC_THREADS")) {
        const int n = std::atoi(env);
        if (n >= 1) return n;
    }
    const unsigned hw = std::thread::hardware_concurrency();
    return hw ? static_cast<int>(hw) : 1;
}
}  // namespace

int thread_count() {
    int t = g_threads.load(std::memory_order_relaxed);
    if (t <= 0) {
        t = env_threads();
        g_threads.store(t, std::memory_order_relaxed);
    }
    return t;
}

void set_thread_count(int n) { g_threads.store(n >= 1 ? n : env_threads(), std::memory_order_relaxed); }

template <class T>
void gemm_nn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    const int nt = thread_count();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1 && m > 1)
#endif
    for (int i = 0; i < m; ++i) {
        T* __restrict__ crow = c + static_cast<size_t>(i) * n;
        if (!accumulate)
            for (int j = 0; j < n; ++j) crow[j] = T(0);
        const T* arow = a + static_cast<size_t>(i) * k;
        for (int p = 0; p < k; ++p) {
            const T aip = arow[p];
            if (aip == T(0)) continue;
            const T* __restrict__ brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += aip * brow[j];
        }
    }
}

template <class T>
void gemm_nt(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    const int nt = thread_count();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1 && m > 1)
#endif
    for (int i = 0; i < m; ++i) {
        const T* __restrict__ arow = a + static_cast<size_t>(i) * k;
        T* crow = c + static_cast<size_t>(i) * n;
        for (int j = 0; j < n; ++j) {
            const T* __restrict__ brow = b + static_cast<size_t>(j) * k;
            T acc = T(0);
            for (int p = 0; p < k; ++p) acc += arow[p] * brow[p];
            crow[j] = accumulate ? crow[j] + acc : acc;
        }
    }
}

template <class T>
void gemm_tn(const T* a, const T* b, T* c, int m, int k, int n, bool accumulate) {
    const int nt = thread_count();
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(nt) if (nt > 1 && m > 1)
#endif
    for (int i = 0; i < m; ++i) {
        T* __restrict__ crow = c + static_cast<size_t>(i) * n;
        if (!accumulate)
            for (int j = 0; j < n; ++j) crow[j] = T(0);
        for (int p = 0; p < k; ++p) {
            const T api = a[static_cast<size_t>(p) * m + i];
            if (api == T(0)) continue;
            const T* __restrict__ brow = b + static_cast<size_t>(p) * n;
            for (int j = 0; j < n; ++j) crow[j] += api * brow[j];
        }
    }
}

template void gemm_nn<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm_nt<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm_tn<float>(const float*, const float*, float*, int, int, int, bool);
template void gemm_nn<double>(const double*, const double*, double*, int, int, int, bool);
template void gemm_nt<double>(const double*, const double*, double*, int, int, int, bool);
template void gemm_tn<double>(const double*, const double*, double*, int, int, int, bool);

}  // namespace amc::nn

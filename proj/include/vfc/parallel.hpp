#ifndef VFC_PARALLEL_HPP
#define VFC_PARALLEL_HPP

#include <cstddef>
#include <vector>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace vfc::par {

enum class Mode { serial, openmp };

// Global execution mode. The OpenMP kernels and the serial reference kernels
// produce bit-identical results (per-item values are reduced in index order),
// so the mode only affects wall time. test_parallel.cpp asserts the identity
// and vfc_bench compares the two.
inline Mode& mode() {
#ifdef _OPENMP
  static Mode m = Mode::openmp;
#else
  static Mode m = Mode::serial;
#endif
  return m;
}

template <class F>
void for_each_serial(std::size_t n, F&& fn) {
  for (std::size_t i = 0; i < n; ++i) fn(i);
}

template <class F>
void for_each_openmp(std::size_t n, F&& fn) {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 1)
  for (long long i = 0; i < static_cast<long long>(n); ++i) fn(static_cast<std::size_t>(i));
#else
  for_each_serial(n, fn);
#endif
}

template <class F>
void for_each(std::size_t n, F&& fn) {
  if (mode() == Mode::openmp)
    for_each_openmp(n, fn);
  else
    for_each_serial(n, fn);
}

// Sum of fn(i) for i in [0,n), accumulated in index order.
template <class F>
double map_sum_serial(std::size_t n, F&& fn) {
  std::vector<double> buf(n);
  for_each_serial(n, [&](std::size_t i) { buf[i] = fn(i); });
  double s = 0.0;
  for (double v : buf) s += v;
  return s;
}

template <class F>
double map_sum_openmp(std::size_t n, F&& fn) {
  std::vector<double> buf(n);
  for_each_openmp(n, [&](std::size_t i) { buf[i] = fn(i); });
  double s = 0.0;
  for (double v : buf) s += v;
  return s;
}

template <class F>
double map_sum(std::size_t n, F&& fn) {
  return mode() == Mode::openmp ? map_sum_openmp(n, fn) : map_sum_serial(n, fn);
}

inline int thread_count() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

}  // namespace vfc::par

#endif

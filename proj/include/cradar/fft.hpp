#pragma once

// Thin FFTW wrapper. Plans are created once per shape and cached; planning is
// serialized because FFTW's planner is not thread-safe, execution is not.

#include <complex>
#include <map>
#include <mutex>
#include <tuple>

#include <fftw3.h>

namespace cradar {

using cplx = std::complex<double>;

enum class FftDirection { forward = FFTW_FORWARD, backward = FFTW_BACKWARD };

class FftPlanCache {
 public:
  static FftPlanCache& instance() {
    static FftPlanCache cache;
    return cache;
  }

  FftPlanCache(const FftPlanCache&) = delete;
  FftPlanCache& operator=(const FftPlanCache&) = delete;

  /// `howmany` transforms of length n, elements `stride` apart, transforms
  /// `dist` apart. In and out share the layout.
  /// In-place plans are distinct from out-of-place ones in FFTW.
  fftw_plan plan(int n, int howmany, int stride, int dist, FftDirection dir, bool in_place) {
    const Key key{n, howmany, stride, dist, static_cast<int>(dir), in_place};
    std::lock_guard<std::mutex> lock(mutex_);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    // FFTW_ESTIMATE leaves the scratch arrays untouched; UNALIGNED lets the plan
    // run on std::vector storage.
    const auto extent = static_cast<std::size_t>(n - 1) * stride +
                        static_cast<std::size_t>(howmany - 1) * dist + 1;
    auto* in = fftw_alloc_complex(extent);
    auto* out = in_place ? in : fftw_alloc_complex(extent);
    fftw_plan p = fftw_plan_many_dft(1, &n, howmany, in, nullptr, stride, dist, out, nullptr, stride,
                                     dist, static_cast<int>(dir), FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!in_place) fftw_free(out);
    fftw_free(in);
    plans_.emplace(key, p);
    return p;
  }

  ~FftPlanCache() {
    for (auto& [k, p] : plans_) fftw_destroy_plan(p);
  }

 private:
  FftPlanCache() = default;

  using Key = std::tuple<int, int, int, int, int, bool>;
  std::mutex mutex_;
  std::map<Key, fftw_plan> plans_;
};

/// Unnormalized in-place or out-of-place DFT of `n` contiguous samples.
inline void fft(const cplx* in, cplx* out, int n, FftDirection dir = FftDirection::forward) {
  fftw_plan p = FftPlanCache::instance().plan(n, 1, 1, n, dir, in == out);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

/// Batched strided DFT; see FftPlanCache::plan for the layout.
inline void fft_many(const cplx* in, cplx* out, int n, int howmany, int stride, int dist,
                     FftDirection dir = FftDirection::forward) {
  fftw_plan p = FftPlanCache::instance().plan(n, howmany, stride, dist, dir, in == out);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in)),
                   reinterpret_cast<fftw_complex*>(out));
}

}  // namespace cradar

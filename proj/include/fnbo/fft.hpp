#pragma once

// Thin RAII layer over FFTW. Plans are created once per transform size under a
// lock and executed with the new-array interface, which is thread-safe.
// FFTW_ESTIMATE keeps the chosen algorithm, and hence the output bits,
// identical from run to run.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <new>
#include <utility>
#include <vector>

namespace fnbo {

template <class T>
struct FftwAllocator {
    using value_type = T;
    FftwAllocator() = default;
    template <class U>
    FftwAllocator(const FftwAllocator<U>&) {}
    T* allocate(std::size_t n) {
        void* p = fftw_malloc(n * sizeof(T));
        if (!p) throw std::bad_alloc();
        return static_cast<T*>(p);
    }
    void deallocate(T* p, std::size_t) { fftw_free(p); }
    template <class U>
    bool operator==(const FftwAllocator<U>&) const { return true; }
};

template <class T>
using FftwVector = std::vector<T, FftwAllocator<T>>;

namespace detail {

class PlanCache {
public:
    static PlanCache& instance() {
        static PlanCache c;
        return c;
    }
    ~PlanCache() {
        for (auto& [k, p] : plans_) fftw_destroy_plan(p);
    }
    /// Complex (n/2+1) -> real n, unnormalized.
    fftw_plan c2r(int n) { return get(n, false); }
    /// Real n -> complex (n/2+1), unnormalized.
    fftw_plan r2c(int n) { return get(n, true); }

private:
    fftw_plan get(int n, bool forward) {
        std::lock_guard<std::mutex> lock(mu_);
        auto key = std::make_pair(n, forward);
        auto it = plans_.find(key);
        if (it != plans_.end()) return it->second;
        FftwVector<double> r(n);
        FftwVector<std::complex<double>> c(n / 2 + 1);
        auto* cp = reinterpret_cast<fftw_complex*>(c.data());
        fftw_plan p = forward ? fftw_plan_dft_r2c_1d(n, r.data(), cp, FFTW_ESTIMATE)
                              : fftw_plan_dft_c2r_1d(n, cp, r.data(), FFTW_ESTIMATE);
        plans_.emplace(key, p);
        return p;
    }
    std::mutex mu_;
    std::map<std::pair<int, bool>, fftw_plan> plans_;
};

}  // namespace detail

/// Real sequence from its half spectrum; spectrum is overwritten by FFTW.
inline void inverseRealFft(FftwVector<std::complex<double>>& spectrum, FftwVector<double>& out) {
    const int n = static_cast<int>(out.size());
    fftw_execute_dft_c2r(detail::PlanCache::instance().c2r(n),
                         reinterpret_cast<fftw_complex*>(spectrum.data()), out.data());
}

inline void forwardRealFft(FftwVector<double>& in, FftwVector<std::complex<double>>& spectrum) {
    const int n = static_cast<int>(in.size());
    fftw_execute_dft_r2c(detail::PlanCache::instance().r2c(n), in.data(),
                         reinterpret_cast<fftw_complex*>(spectrum.data()));
}

/// Smallest n' >= n whose prime factors are 2, 3, 5 or 7.
inline std::size_t fftFriendlySize(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 2);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u, 7u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace fnbo

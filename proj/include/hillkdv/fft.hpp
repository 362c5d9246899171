#pragma once

// Thin RAII wrapper over FFTW real-to-complex / complex-to-real transforms of
// 1-periodic samples. Coefficients follow the Fourier-series convention
//   f(x_j) = sum_n c_n exp(i 2 pi n x_j),   x_j = j / M,
// so forward() divides by M and inverse() does not.

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>
#include <stdexcept>
#include <vector>

namespace hillkdv {

using cplx = std::complex<double>;

namespace detail {
// FFTW's planner is not re-entrant.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}
}  // namespace detail

class RealFFT {
  public:
    explicit RealFFT(std::size_t m) : m_(m), nc_(m / 2 + 1) {
        if (m < 2) throw std::invalid_argument("RealFFT: grid size must be >= 2");
        real_ = fftw_alloc_real(m_);
        spec_ = fftw_alloc_complex(nc_);
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(m_), real_, spec_, FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(static_cast<int>(m_), spec_, real_, FFTW_ESTIMATE);
    }
    RealFFT(const RealFFT&) = delete;
    RealFFT& operator=(const RealFFT&) = delete;
    ~RealFFT() {
        std::lock_guard<std::mutex> lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(bwd_);
        fftw_destroy_plan(fwd_);
        fftw_free(spec_);
        fftw_free(real_);
    }

    std::size_t size() const { return m_; }
    std::size_t spectrum_size() const { return nc_; }

    /// Samples -> coefficients c_0 .. c_{M/2}.
    void forward(std::span<const double> samples, std::span<cplx> coeffs) {
        if (samples.size() != m_ || coeffs.size() != nc_)
            throw std::invalid_argument("RealFFT::forward: size mismatch");
        std::copy(samples.begin(), samples.end(), real_);
        fftw_execute(fwd_);
        const double s = 1.0 / static_cast<double>(m_);
        for (std::size_t k = 0; k < nc_; ++k) coeffs[k] = cplx(spec_[k][0], spec_[k][1]) * s;
    }

    /// Coefficients c_0 .. c_{M/2} -> samples. The imaginary parts of c_0 and
    /// of the Nyquist coefficient (even M) are ignored.
    void inverse(std::span<const cplx> coeffs, std::span<double> samples) {
        if (samples.size() != m_ || coeffs.size() != nc_)
            throw std::invalid_argument("RealFFT::inverse: size mismatch");
        for (std::size_t k = 0; k < nc_; ++k) {
            spec_[k][0] = coeffs[k].real();
            spec_[k][1] = coeffs[k].imag();
        }
        fftw_execute(bwd_);
        std::copy(real_, real_ + m_, samples.begin());
    }

    std::vector<cplx> forward(std::span<const double> samples) {
        std::vector<cplx> c(nc_);
        forward(samples, c);
        return c;
    }
    std::vector<double> inverse(std::span<const cplx> coeffs) {
        std::vector<double> s(m_);
        inverse(coeffs, s);
        return s;
    }

  private:
    std::size_t m_;
    std::size_t nc_;
    double* real_ = nullptr;
    fftw_complex* spec_ = nullptr;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// Smallest size >= n of the form 2^a 3^b 5^c.
inline std::size_t fft_friendly_size(std::size_t n) {
    for (std::size_t m = std::max<std::size_t>(n, 2);; ++m) {
        std::size_t r = m;
        for (std::size_t p : {2u, 3u, 5u})
            while (r % p == 0) r /= p;
        if (r == 1) return m;
    }
}

}  // namespace hillkdv

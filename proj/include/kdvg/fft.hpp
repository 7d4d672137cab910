#pragma once

#include <fftw3.h>

#include <complex>
#include <cstddef>
#include <mutex>
#include <span>

#include "kdvg/error.hpp"

namespace kdvg {

using cplx = std::complex<double>;

namespace detail {

/// FFTW planning is not thread safe; execution on distinct plans is.
inline std::mutex& fftw_planner_mutex() {
    static std::mutex m;
    return m;
}

template <typename T>
struct FftwBuffer {
    explicit FftwBuffer(std::size_t n)
        : data(static_cast<T*>(fftw_malloc(sizeof(T) * (n == 0 ? 1 : n)))), size(n) {
        if (data == nullptr) throw Error("fftw_malloc failed");
    }
    ~FftwBuffer() { fftw_free(data); }
    FftwBuffer(const FftwBuffer&) = delete;
    FftwBuffer& operator=(const FftwBuffer&) = delete;

    std::span<T> span() noexcept { return {data, size}; }
    std::span<const T> span() const noexcept { return {data, size}; }

    T* data;
    std::size_t size;
};

inline fftw_complex* as_fftw(cplx* p) { return reinterpret_cast<fftw_complex*>(p); }

}  // namespace detail

/// Unnormalized real-to-half-complex transform pair of fixed length.
///
/// Planned with FFTW_ESTIMATE so repeated runs pick the same algorithm and
/// produce bit-identical output.
class RealFft {
public:
    explicit RealFft(std::size_t n) : n_(n), real_(n), spec_(n / 2 + 1) {
        if (n < 2) throw InvalidArgument("RealFft length must be at least 2");
        std::lock_guard lock(detail::fftw_planner_mutex());
        fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_.data,
                                    detail::as_fftw(spec_.data), FFTW_ESTIMATE);
        bwd_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), detail::as_fftw(spec_.data),
                                    real_.data, FFTW_ESTIMATE);
    }
    ~RealFft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    RealFft(const RealFft&) = delete;
    RealFft& operator=(const RealFft&) = delete;

    std::size_t size() const noexcept { return n_; }
    std::span<double> real() noexcept { return real_.span(); }
    std::span<cplx> spectrum() noexcept { return spec_.span(); }

    /// real() -> spectrum()
    void forward() noexcept { fftw_execute(fwd_); }
    /// spectrum() -> real(); destroys spectrum().
    void backward() noexcept { fftw_execute(bwd_); }

private:
    std::size_t n_;
    detail::FftwBuffer<double> real_;
    detail::FftwBuffer<cplx> spec_;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

/// In-place unnormalized complex transform in one or two dimensions.
class ComplexFft {
public:
    /// One-dimensional transform of length n.
    explicit ComplexFft(std::size_t n) : ComplexFft(1, n) {}

    /// Row-major two-dimensional transform of shape (rows, cols).
    ComplexFft(std::size_t rows, std::size_t cols)
        : rows_(rows), cols_(cols), buf_(rows * cols) {
        if (rows == 0 || cols == 0) throw InvalidArgument("ComplexFft shape must be nonzero");
        std::lock_guard lock(detail::fftw_planner_mutex());
        auto* p = detail::as_fftw(buf_.data);
        if (rows == 1) {
            fwd_ = fftw_plan_dft_1d(static_cast<int>(cols), p, p, FFTW_FORWARD, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_1d(static_cast<int>(cols), p, p, FFTW_BACKWARD, FFTW_ESTIMATE);
        } else {
            fwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p,
                                    FFTW_FORWARD, FFTW_ESTIMATE);
            bwd_ = fftw_plan_dft_2d(static_cast<int>(rows), static_cast<int>(cols), p, p,
                                    FFTW_BACKWARD, FFTW_ESTIMATE);
        }
    }
    ~ComplexFft() {
        std::lock_guard lock(detail::fftw_planner_mutex());
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
    }
    ComplexFft(const ComplexFft&) = delete;
    ComplexFft& operator=(const ComplexFft&) = delete;

    std::span<cplx> data() noexcept { return buf_.span(); }
    std::size_t rows() const noexcept { return rows_; }
    std::size_t cols() const noexcept { return cols_; }

    /// Sign -1 exponent.
    void forward() noexcept { fftw_execute(fwd_); }
    /// Sign +1 exponent, no 1/n scaling.
    void backward() noexcept { fftw_execute(bwd_); }

private:
    std::size_t rows_;
    std::size_t cols_;
    detail::FftwBuffer<cplx> buf_;
    fftw_plan fwd_ = nullptr;
    fftw_plan bwd_ = nullptr;
};

}  // namespace kdvg

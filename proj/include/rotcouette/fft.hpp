#pragma once

// Thin RAII wrapper around FFTW 3D complex transforms.
//
// Transform convention: forward is unnormalized with exp(-i ...), backward
// is exp(+i ...) and the caller applies 1/(nx ny nz). SpectralField stores
// series amplitudes, so to_physical() is the plain backward transform and
// to_spectral() is the forward transform scaled by 1/N.

#include <fftw3.h>

#include <mutex>
#include <span>
#include <stdexcept>

#include "spectral_core.hpp"

namespace rotcouette {

namespace detail {
// The FFTW planner is not thread-safe; plan execution on new arrays is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace detail

class FftPlan3d {
 public:
  explicit FftPlan3d(const GridSpec& grid) : grid_(grid) {
    grid_.validate();
    fftw_complex* scratch = fftw_alloc_complex(grid_.size());
    if (scratch == nullptr) throw std::bad_alloc();
    {
      std::lock_guard lock(detail::fftw_planner_mutex());
      const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
      forward_ = fftw_plan_dft_3d(grid_.nx, grid_.ny, grid_.nz, scratch, scratch,
                                  FFTW_FORWARD, flags);
      backward_ = fftw_plan_dft_3d(grid_.nx, grid_.ny, grid_.nz, scratch, scratch,
                                   FFTW_BACKWARD, flags);
    }
    fftw_free(scratch);
    if (forward_ == nullptr || backward_ == nullptr)
      throw std::runtime_error("FftPlan3d: FFTW planning failed");
  }

  ~FftPlan3d() {
    std::lock_guard lock(detail::fftw_planner_mutex());
    if (forward_) fftw_destroy_plan(forward_);
    if (backward_) fftw_destroy_plan(backward_);
  }

  FftPlan3d(const FftPlan3d&) = delete;
  FftPlan3d& operator=(const FftPlan3d&) = delete;

  const GridSpec& grid() const { return grid_; }

  /// In-place unnormalized forward transform.
  void forward(std::span<complex> data) const { execute(forward_, data); }
  /// In-place unnormalized backward transform.
  void backward(std::span<complex> data) const { execute(backward_, data); }

  /// Series amplitudes -> grid values.
  void to_physical(std::span<complex> data) const { backward(data); }

  /// Grid values -> series amplitudes.
  void to_spectral(std::span<complex> data) const {
    forward(data);
    const double scale = 1.0 / double(grid_.size());
    for (auto& c : data) c *= scale;
  }

 private:
  void execute(fftw_plan plan, std::span<complex> data) const {
    if (data.size() != grid_.size())
      throw std::invalid_argument("FftPlan3d: buffer size does not match grid");
    auto* p = reinterpret_cast<fftw_complex*>(data.data());
    fftw_execute_dft(plan, p, p);
  }

  GridSpec grid_;
  fftw_plan forward_ = nullptr;
  fftw_plan backward_ = nullptr;
};

}  // namespace rotcouette

#pragma once

#include <fftw3.h>

#include <cmath>
#include <complex>
#include <memory>
#include <mutex>
#include <numbers>
#include <span>
#include <vector>

#include "embedcast/errors.hpp"
#include "embedcast/grid.hpp"

namespace embedcast::systems {

using Complex = std::complex<double>;

namespace detail {

// FFTW's planner is not thread-safe; executing plans is.
inline std::mutex& fftw_planner_mutex() {
  static std::mutex mutex;
  return mutex;
}

struct FftwFree {
  void operator()(void* p) const noexcept { fftw_free(p); }
};

struct FftwPlanDestroy {
  void operator()(fftw_plan p) const noexcept {
    std::lock_guard lock(fftw_planner_mutex());
    fftw_destroy_plan(p);
  }
};

}  // namespace detail

// Real <-> half-spectrum transform pair of fixed length. The inverse is
// normalized, so inverse(forward(u)) == u up to rounding.
class RealFft {
 public:
  explicit RealFft(std::size_t n) : n_(n) {
    real_.reset(static_cast<double*>(fftw_malloc(sizeof(double) * n)));
    spec_.reset(static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * (n / 2 + 1))));
    std::lock_guard lock(detail::fftw_planner_mutex());
    const int len = static_cast<int>(n);
    forward_.reset(fftw_plan_dft_r2c_1d(len, real_.get(), spec_.get(), FFTW_ESTIMATE));
    inverse_.reset(fftw_plan_dft_c2r_1d(len, spec_.get(), real_.get(), FFTW_ESTIMATE));
  }

  std::size_t size() const noexcept { return n_; }
  std::size_t spectrum_size() const noexcept { return n_ / 2 + 1; }

  void forward(std::span<const double> in, std::span<Complex> out) {
    std::copy(in.begin(), in.end(), real_.get());
    fftw_execute(forward_.get());
    auto* spec = reinterpret_cast<const Complex*>(spec_.get());
    std::copy(spec, spec + spectrum_size(), out.begin());
  }

  void inverse(std::span<const Complex> in, std::span<double> out) {
    auto* spec = reinterpret_cast<Complex*>(spec_.get());
    std::copy(in.begin(), in.end(), spec);
    fftw_execute(inverse_.get());
    const double scale = 1.0 / static_cast<double>(n_);
    for (std::size_t i = 0; i < n_; ++i) out[i] = real_.get()[i] * scale;
  }

 private:
  std::size_t n_;
  std::unique_ptr<double, detail::FftwFree> real_;
  std::unique_ptr<fftw_complex, detail::FftwFree> spec_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, detail::FftwPlanDestroy> forward_;
  std::unique_ptr<std::remove_pointer_t<fftw_plan>, detail::FftwPlanDestroy> inverse_;
};

// Per-wavenumber coefficients of the fourth-order exponential time-differencing
// Runge-Kutta scheme for u_t = -u_xxxx - u_xx - u u_x on a periodic domain.
// The phi-functions are averaged over a semicircular contour around each
// eigenvalue h*c, which avoids cancellation for small |h*c|.
struct ETDRK4Coefficients {
  double dt = 0.0;
  double domain_length = 0.0;
  std::size_t modes = 0;
  bool nonlinear = true;
  std::vector<double> wavenumber;  // k
  std::vector<double> linear;      // c = k^2 - k^4
  std::vector<double> e;           // exp(c h)
  std::vector<double> e2;          // exp(c h / 2)
  std::vector<double> q;
  std::vector<double> f1, f2, f3;
  std::vector<Complex> g;  // -i k / 2 on retained modes, zero beyond the 2/3 cutoff

  static ETDRK4Coefficients make(double dt, double domain_length, std::size_t modes, bool nonlinear = true,
                                 std::size_t contour_points = 16) {
    if (!(dt > 0.0)) throw InvalidConfig("ks dt must be positive");
    if (!(domain_length > 0.0)) throw InvalidConfig("ks domain length must be positive");
    if (modes < 16 || modes % 2 != 0) throw InvalidConfig("ks modes must be even and >= 16");

    ETDRK4Coefficients c;
    c.dt = dt;
    c.domain_length = domain_length;
    c.modes = modes;
    c.nonlinear = nonlinear;
    const std::size_t half = modes / 2 + 1;
    c.wavenumber.resize(half);
    c.linear.resize(half);
    c.e.resize(half);
    c.e2.resize(half);
    c.q.resize(half);
    c.f1.resize(half);
    c.f2.resize(half);
    c.f3.resize(half);
    c.g.resize(half);

    const double two_pi = 2.0 * std::numbers::pi;
    const std::size_t cutoff = modes / 3;
    for (std::size_t j = 0; j < half; ++j) {
      const double k = (j == modes / 2) ? 0.0 : two_pi * static_cast<double>(j) / domain_length;
      const double lin = k * k - k * k * k * k;
      c.wavenumber[j] = k;
      c.linear[j] = lin;
      c.e[j] = std::exp(dt * lin);
      c.e2[j] = std::exp(dt * lin / 2.0);
      c.g[j] = (j <= cutoff) ? Complex(0.0, -0.5 * k) : Complex(0.0, 0.0);

      Complex q_sum{}, f1_sum{}, f2_sum{}, f3_sum{};
      for (std::size_t p = 1; p <= contour_points; ++p) {
        const double angle = std::numbers::pi * (static_cast<double>(p) - 0.5) / static_cast<double>(contour_points);
        const Complex z = dt * lin + std::polar(1.0, angle);
        const Complex ez = std::exp(z);
        const Complex z3 = z * z * z;
        q_sum += (std::exp(z / 2.0) - 1.0) / z;
        f1_sum += (-4.0 - z + ez * (4.0 - 3.0 * z + z * z)) / z3;
        f2_sum += (2.0 + z + ez * (-2.0 + z)) / z3;
        f3_sum += (-4.0 - 3.0 * z - z * z + ez * (4.0 - z)) / z3;
      }
      const double inv = 1.0 / static_cast<double>(contour_points);
      c.q[j] = dt * q_sum.real() * inv;
      c.f1[j] = dt * f1_sum.real() * inv;
      c.f2[j] = dt * f2_sum.real() * inv;
      c.f3[j] = dt * f3_sum.real() * inv;
    }
    return c;
  }
};

// Advances a spectral state in place; owns the transform scratch buffers.
class KSStepper {
 public:
  explicit KSStepper(ETDRK4Coefficients coeffs)
      : c_(std::move(coeffs)), fft_(c_.modes), phys_(c_.modes), nv_(half()), na_(half()), nb_(half()),
        nc_(half()), a_(half()), b_(half()), cc_(half()) {}

  const ETDRK4Coefficients& coefficients() const noexcept { return c_; }

  std::vector<Complex> step(std::span<const Complex> v) {
    if (v.size() != half()) throw ContractError("spectral state size does not match coefficients");
    const std::size_t h = half();
    nonlinear_term(v, nv_);
    for (std::size_t j = 0; j < h; ++j) a_[j] = c_.e2[j] * v[j] + c_.q[j] * nv_[j];
    nonlinear_term(a_, na_);
    for (std::size_t j = 0; j < h; ++j) b_[j] = c_.e2[j] * v[j] + c_.q[j] * na_[j];
    nonlinear_term(b_, nb_);
    for (std::size_t j = 0; j < h; ++j) cc_[j] = c_.e2[j] * a_[j] + c_.q[j] * (2.0 * nb_[j] - nv_[j]);
    nonlinear_term(cc_, nc_);
    std::vector<Complex> out(h);
    for (std::size_t j = 0; j < h; ++j)
      out[j] = c_.e[j] * v[j] + nv_[j] * c_.f1[j] + 2.0 * (na_[j] + nb_[j]) * c_.f2[j] + nc_[j] * c_.f3[j];
    return out;
  }

  std::vector<Complex> to_spectral(std::span<const double> u) {
    std::vector<Complex> v(half());
    fft_.forward(u, v);
    return v;
  }

  std::vector<double> to_physical(std::span<const Complex> v) {
    std::vector<double> u(c_.modes);
    fft_.inverse(v, u);
    return u;
  }

 private:
  std::size_t half() const noexcept { return c_.modes / 2 + 1; }

  // Spectrum of -u u_x = -(u^2)_x / 2, truncated by the 2/3 rule.
  void nonlinear_term(std::span<const Complex> v, std::vector<Complex>& out) {
    if (!c_.nonlinear) {
      std::fill(out.begin(), out.end(), Complex{});
      return;
    }
    fft_.inverse(v, phys_);
    for (double& x : phys_) x *= x;
    fft_.forward(phys_, out);
    for (std::size_t j = 0; j < out.size(); ++j) out[j] *= c_.g[j];
  }

  ETDRK4Coefficients c_;
  RealFft fft_;
  std::vector<double> phys_;
  std::vector<Complex> nv_, na_, nb_, nc_, a_, b_, cc_;
};

inline std::vector<Complex> etdrk4_step(std::span<const Complex> spectral_state, const ETDRK4Coefficients& coeffs) {
  KSStepper stepper(coeffs);
  return stepper.step(spectral_state);
}

struct KSConfig {
  double domain_length = 22.0;
  double dt = 0.5;
  std::size_t modes = 64;
  std::size_t steps = 531;
  std::size_t burn_in = 0;
  // Collocation points are x_j = x_origin + j * domain_length / modes.
  double x_origin = 0.0;
  // Explicit initial profile on the collocation points.
  // When empty: u = bump_amplitude on [bump_lo, bump_hi], zero elsewhere.
  std::vector<double> initial_state;
  double bump_amplitude = 1e-5;
  double bump_lo = 5.0;
  double bump_hi = 15.0;

  void validate() const {
    if (!(domain_length > 0.0)) throw InvalidConfig("ks domain length must be positive");
    if (!std::isfinite(x_origin)) throw InvalidConfig("ks x_origin must be finite");
    if (!(dt > 0.0)) throw InvalidConfig("ks dt must be positive");
    if (modes < 16 || modes % 2 != 0) throw InvalidConfig("ks modes must be even and >= 16");
    if (steps < 1) throw InvalidConfig("ks needs at least 1 step");
    if (!initial_state.empty() && initial_state.size() != modes)
      throw InvalidConfig("ks initial_state length must equal modes");
  }

  std::vector<double> initial_profile() const {
    if (!initial_state.empty()) return initial_state;
    std::vector<double> u(modes, 0.0);
    for (std::size_t j = 0; j < modes; ++j) {
      const double x = x_origin + static_cast<double>(j) * domain_length / static_cast<double>(modes);
      if (x >= bump_lo && x <= bump_hi) u[j] = bump_amplitude;
    }
    return u;
  }
};

// Real-space solution sampled at the collocation points, one row per time step.
inline Grid simulate_ks(const KSConfig& cfg) {
  cfg.validate();
  KSStepper stepper(ETDRK4Coefficients::make(cfg.dt, cfg.domain_length, cfg.modes));
  std::vector<Complex> v = stepper.to_spectral(cfg.initial_profile());

  auto advance = [&](std::size_t step) {
    v = stepper.step(v);
    for (const Complex& z : v)
      if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) throw DivergenceError(step, "ks diverged");
  };

  for (std::size_t step = 0; step < cfg.burn_in; ++step) advance(step + 1);

  Grid grid(cfg.steps, cfg.modes);
  grid.time_step = cfg.dt;
  grid.space_label = "x";
  for (std::size_t n = 0; n < cfg.steps; ++n) {
    if (n > 0) advance(cfg.burn_in + n);
    const std::vector<double> u = stepper.to_physical(v);
    for (std::size_t j = 0; j < cfg.modes; ++j) {
      if (!(std::abs(u[j]) <= 1e6)) throw DivergenceError(cfg.burn_in + n, "ks diverged");
      grid(n, j) = u[j];
    }
  }
  return grid;
}

}  // namespace embedcast::systems

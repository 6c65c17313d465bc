#include "nslab/spectral_field.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "nslab/fft.hpp"
#include "nslab/rng.hpp"

namespace nslab {

using cd = std::complex<double>;

double Vec2::norm() const { return std::sqrt(x * x + y * y); }

GridSpec::GridSpec(int n_) : n(n_) {
  if (n < 8 || (n & (n - 1)) != 0) {
    throw std::invalid_argument("GridSpec: n must be a power of two >= 8");
  }
}

SpectralField::SpectralField(GridSpec grid, std::vector<cd> ux_hat, std::vector<cd> uy_hat,
                             std::optional<double> time_tag)
    : grid_(grid), ux_hat_(std::move(ux_hat)), uy_hat_(std::move(uy_hat)), time_tag_(time_tag) {
  if (ux_hat_.size() != grid_.size() || uy_hat_.size() != grid_.size()) {
    throw std::invalid_argument("SpectralField: coefficient array size mismatch");
  }
  finalize();
}

void SpectralField::finalize() {
  const int n = grid_.n;
  const int kd = grid_.dealias_limit();
  // Dealias, then enforce conjugate symmetry exactly by averaging
  // uhat(k) with conj(uhat(-k)).
  for (auto* comp : {&ux_hat_, &uy_hat_}) {
    auto& c = *comp;
    for (int iy = 0; iy < n; ++iy) {
      const int ky = grid_.wavenumber(iy);
      for (int ix = 0; ix < n; ++ix) {
        const int kx = grid_.wavenumber(ix);
        if (std::abs(kx) > kd || std::abs(ky) > kd) c[static_cast<size_t>(iy) * n + ix] = 0.0;
      }
    }
    for (int iy = 0; iy < n; ++iy) {
      const int jy = (n - iy) % n;
      for (int ix = 0; ix < n; ++ix) {
        const int jx = (n - ix) % n;
        const size_t a = static_cast<size_t>(iy) * n + ix;
        const size_t b = static_cast<size_t>(jy) * n + jx;
        if (a > b) continue;
        const cd avg = 0.5 * (c[a] + std::conj(c[b]));
        c[a] = avg;
        c[b] = std::conj(avg);
      }
    }
  }
  // Active-mode list: relative threshold keeps point evaluation cheap for
  // sparse fields while remaining exact to roundoff.
  double cmax = 0.0;
  for (size_t i = 0; i < grid_.size(); ++i) {
    cmax = std::max(cmax, std::max(std::abs(ux_hat_[i]), std::abs(uy_hat_[i])));
  }
  const double thresh = cmax * 1e-14;
  active_.clear();
  kmax_active_ = 0;
  for (int iy = 0; iy < n; ++iy) {
    const int ky = grid_.wavenumber(iy);
    for (int ix = 0; ix < n; ++ix) {
      const int kx = grid_.wavenumber(ix);
      const size_t i = static_cast<size_t>(iy) * n + ix;
      if (std::abs(ux_hat_[i]) > thresh || std::abs(uy_hat_[i]) > thresh) {
        active_.push_back({kx, ky, ux_hat_[i], uy_hat_[i]});
        kmax_active_ = std::max({kmax_active_, std::abs(kx), std::abs(ky)});
      }
    }
  }
}

SpectralField SpectralField::zero(GridSpec grid) {
  return SpectralField(grid, std::vector<cd>(grid.size()), std::vector<cd>(grid.size()));
}

SpectralField SpectralField::from_physical(GridSpec grid, std::span<const double> u,
                                           std::span<const double> v,
                                           std::optional<double> time_tag) {
  if (u.size() != grid.size() || v.size() != grid.size()) {
    throw std::invalid_argument("from_physical: grid size mismatch");
  }
  std::vector<cd> uh(u.begin(), u.end()), vh(v.begin(), v.end());
  fft::forward2d(grid.n, uh.data());
  fft::forward2d(grid.n, vh.data());
  return SpectralField(grid, std::move(uh), std::move(vh), time_tag);
}

SpectralField SpectralField::projected_divergence_free() const {
  std::vector<cd> ux = ux_hat_, uy = uy_hat_;
  const int n = grid_.n;
  for (int iy = 0; iy < n; ++iy) {
    const double ky = grid_.wavenumber(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double kx = grid_.wavenumber(ix);
      const double k2 = kx * kx + ky * ky;
      if (k2 == 0.0) continue;
      const size_t i = static_cast<size_t>(iy) * n + ix;
      const cd kdotu = kx * ux[i] + ky * uy[i];
      ux[i] -= kx * kdotu / k2;
      uy[i] -= ky * kdotu / k2;
    }
  }
  return SpectralField(grid_, std::move(ux), std::move(uy), time_tag_);
}

SpectralField project_divergence_free(const SpectralField& f) {
  return f.projected_divergence_free();
}

SpectralField SpectralField::laplacian() const {
  std::vector<cd> ux = ux_hat_, uy = uy_hat_;
  const int n = grid_.n;
  for (int iy = 0; iy < n; ++iy) {
    const double ky = grid_.wavenumber(iy);
    for (int ix = 0; ix < n; ++ix) {
      const double kx = grid_.wavenumber(ix);
      const double k2 = kx * kx + ky * ky;
      const size_t i = static_cast<size_t>(iy) * n + ix;
      ux[i] *= -k2;
      uy[i] *= -k2;
    }
  }
  return SpectralField(grid_, std::move(ux), std::move(uy), time_tag_);
}

Vec2 SpectralField::evaluate(Vec2 p) const {
  cd sx = 0.0, sy = 0.0;
  for (const ActiveMode& m : active_) {
    const double phase = m.kx * p.x + m.ky * p.y;
    const cd e(std::cos(phase), std::sin(phase));
    sx += m.ux * e;
    sy += m.uy * e;
  }
  return {sx.real(), sy.real()};
}

std::vector<Vec2> SpectralField::evaluate_at(std::span<const Vec2> pts) const {
  std::vector<Vec2> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = evaluate(pts[i]);
  return out;
}

Mat2 SpectralField::gradient(Vec2 p) const {
  cd gxx = 0.0, gxy = 0.0, gyx = 0.0, gyy = 0.0;
  for (const ActiveMode& m : active_) {
    const double phase = m.kx * p.x + m.ky * p.y;
    const cd ie(-std::sin(phase), std::cos(phase));  // i e^{i phase}
    gxx += m.ux * ie * double(m.kx);
    gxy += m.ux * ie * double(m.ky);
    gyx += m.uy * ie * double(m.kx);
    gyy += m.uy * ie * double(m.ky);
  }
  Mat2 g;
  g(0, 0) = gxx.real();
  g(0, 1) = gxy.real();
  g(1, 0) = gyx.real();
  g(1, 1) = gyy.real();
  return g;
}

std::vector<Mat2> SpectralField::gradient_at(std::span<const Vec2> pts) const {
  std::vector<Mat2> out(pts.size());
  for (size_t i = 0; i < pts.size(); ++i) out[i] = gradient(pts[i]);
  return out;
}

std::vector<double> SpectralField::to_physical(int comp) const {
  std::vector<cd> work = data(comp);
  fft::backward2d(grid_.n, work.data());
  std::vector<double> out(grid_.size());
  for (size_t i = 0; i < out.size(); ++i) out[i] = work[i].real();
  return out;
}

double SpectralField::max_abs() const {
  const auto u = to_physical(0);
  const auto v = to_physical(1);
  double m = 0.0;
  for (size_t i = 0; i < u.size(); ++i) {
    m = std::max(m, std::sqrt(u[i] * u[i] + v[i] * v[i]));
  }
  return m;
}

double SpectralField::divergence_rel() const {
  double div_max = 0.0, coef_max = 0.0;
  for (const ActiveMode& m : active_) {
    div_max = std::max(div_max, std::abs(double(m.kx) * m.ux + double(m.ky) * m.uy));
    coef_max = std::max(coef_max, std::max(std::abs(m.ux), std::abs(m.uy)));
  }
  return coef_max > 0.0 ? div_max / coef_max : 0.0;
}

SpectralField SpectralField::with_time_tag(std::optional<double> t) const {
  return SpectralField(grid_, ux_hat_, uy_hat_, t);
}

SpectralField operator+(const SpectralField& a, const SpectralField& b) {
  if (!(a.grid_ == b.grid_)) throw std::invalid_argument("field grid mismatch");
  std::vector<cd> ux = a.ux_hat_, uy = a.uy_hat_;
  for (size_t i = 0; i < ux.size(); ++i) {
    ux[i] += b.ux_hat_[i];
    uy[i] += b.uy_hat_[i];
  }
  return SpectralField(a.grid_, std::move(ux), std::move(uy), a.time_tag_);
}

SpectralField operator-(const SpectralField& a, const SpectralField& b) {
  return a + (-1.0 * b);
}

SpectralField operator*(double s, const SpectralField& a) {
  std::vector<cd> ux = a.ux_hat_, uy = a.uy_hat_;
  for (size_t i = 0; i < ux.size(); ++i) {
    ux[i] *= s;
    uy[i] *= s;
  }
  return SpectralField(a.grid_, std::move(ux), std::move(uy), a.time_tag_);
}

SpectralField taylor_green(double t, double nu, GridSpec grid) {
  const int n = grid.n;
  const double amp = std::exp(-2.0 * nu * t);
  std::vector<double> u(grid.size()), v(grid.size());
  for (int iy = 0; iy < n; ++iy) {
    const double y = kTwoPi * iy / n;
    for (int ix = 0; ix < n; ++ix) {
      const double x = kTwoPi * ix / n;
      u[static_cast<size_t>(iy) * n + ix] = amp * std::sin(x) * std::cos(y);
      v[static_cast<size_t>(iy) * n + ix] = -amp * std::cos(x) * std::sin(y);
    }
  }
  return SpectralField::from_physical(grid, u, v, t);
}

SpectralField random_lowmode(GridSpec grid, std::uint64_t seed, int max_mode, double amplitude) {
  if (max_mode < 1 || max_mode > grid.dealias_limit()) {
    throw std::invalid_argument("random_lowmode: max_mode out of range");
  }
  std::vector<cd> ux(grid.size()), uy(grid.size());
  std::uint64_t ctr = 0;
  for (int ky = -max_mode; ky <= max_mode; ++ky) {
    for (int kx = -max_mode; kx <= max_mode; ++kx) {
      if (kx == 0 && ky == 0) continue;
      // Gaussian coefficients from the counter-based generator.
      double g[4];
      for (int j = 0; j < 2; ++j) {
        const auto [a, b] = rng::normal_pair(rng::mix64(seed ^ rng::mix64(ctr)),
                                             rng::mix64(seed ^ rng::mix64(ctr + 1)));
        ctr += 2;
        g[2 * j] = a;
        g[2 * j + 1] = b;
      }
      const double k2 = double(kx) * kx + double(ky) * ky;
      const size_t i = static_cast<size_t>(grid.index_of(ky)) * grid.n + grid.index_of(kx);
      ux[i] = cd(g[0], g[1]) / k2;
      uy[i] = cd(g[2], g[3]) / k2;
    }
  }
  SpectralField f =
      SpectralField(grid, std::move(ux), std::move(uy)).projected_divergence_free();
  const double m = f.max_abs();
  return m > 0.0 ? (amplitude / m) * f : f;
}

double inner_product(const SpectralField& f, const SpectralField& g) {
  if (!(f.grid() == g.grid())) throw std::invalid_argument("field grid mismatch");
  double s = 0.0;
  for (int c = 0; c < 2; ++c) {
    const auto& a = f.data(c);
    const auto& b = g.data(c);
    for (size_t i = 0; i < a.size(); ++i) s += (a[i] * std::conj(b[i])).real();
  }
  return kTwoPi * kTwoPi * s;
}

double l2_norm(const SpectralField& f) { return std::sqrt(std::max(0.0, inner_product(f, f))); }

SpectralField advection_term(const SpectralField& u, const SpectralField& f) {
  if (!(u.grid() == f.grid())) throw std::invalid_argument("field grid mismatch");
  const GridSpec grid = u.grid();
  const int n = grid.n;
  // Spectral derivatives of f, products on the grid, transform back.
  // Dealiasing of the result happens in the SpectralField constructor.
  std::vector<cd> dfx[2], dfy[2];
  for (int c = 0; c < 2; ++c) {
    dfx[c].assign(grid.size(), 0.0);
    dfy[c].assign(grid.size(), 0.0);
    const auto& fc = f.data(c);
    for (int iy = 0; iy < n; ++iy) {
      const double ky = grid.wavenumber(iy);
      for (int ix = 0; ix < n; ++ix) {
        const double kx = grid.wavenumber(ix);
        const size_t i = static_cast<size_t>(iy) * n + ix;
        dfx[c][i] = cd(0.0, kx) * fc[i];
        dfy[c][i] = cd(0.0, ky) * fc[i];
      }
    }
    fft::backward2d(n, dfx[c].data());
    fft::backward2d(n, dfy[c].data());
  }
  const auto up = u.to_physical(0);
  const auto vp = u.to_physical(1);
  std::vector<cd> outx(grid.size()), outy(grid.size());
  for (size_t i = 0; i < grid.size(); ++i) {
    outx[i] = up[i] * dfx[0][i].real() + vp[i] * dfy[0][i].real();
    outy[i] = up[i] * dfx[1][i].real() + vp[i] * dfy[1][i].real();
  }
  fft::forward2d(n, outx.data());
  fft::forward2d(n, outy.data());
  return SpectralField(grid, std::move(outx), std::move(outy));
}

}  // namespace nslab

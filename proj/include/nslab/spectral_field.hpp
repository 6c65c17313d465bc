#pragma once

#include <complex>
#include <cstdint>
#include <optional>
#include <span>
#include <vector>

namespace nslab {

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

struct Vec2 {
  double x = 0.0;
  double y = 0.0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  Vec2& operator+=(Vec2 o) { x += o.x; y += o.y; return *this; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const;
};

// Row-major 2x2 tensor; a(i, j) = d u_i / d x_j for velocity gradients.
struct Mat2 {
  double m[2][2] = {{0.0, 0.0}, {0.0, 0.0}};
  double& operator()(int i, int j) { return m[i][j]; }
  double operator()(int i, int j) const { return m[i][j]; }
  double det() const { return m[0][0] * m[1][1] - m[0][1] * m[1][0]; }
  // Transpose-vector product (A^T v).
  Vec2 tmul(Vec2 v) const {
    return {m[0][0] * v.x + m[1][0] * v.y, m[0][1] * v.x + m[1][1] * v.y};
  }
};

// Square periodic grid on [0, 2pi)^2; n must be a power of two >= 8.
struct GridSpec {
  int n = 0;
  explicit GridSpec(int n_);
  GridSpec() = default;
  bool operator==(const GridSpec&) const = default;
  // Signed wavenumber for storage index i in [0, n).
  int wavenumber(int i) const { return i <= n / 2 ? i : i - n; }
  // Storage index for signed wavenumber k.
  int index_of(int k) const { return k >= 0 ? k : k + n; }
  // Largest retained |k_i| under the two-thirds rule.
  int dealias_limit() const { return n / 3; }
  size_t size() const { return static_cast<size_t>(n) * n; }
};

// One retained Fourier mode of a velocity field (kept for fast point
// evaluation; only modes with nonzero amplitude are listed).
struct ActiveMode {
  int kx, ky;
  std::complex<double> ux, uy;
};

// Divergence-free two-component velocity field on the periodic torus,
// stored as Fourier coefficients uhat(k), |k_i| <= n/2, with conjugate
// symmetry and two-thirds dealiasing enforced at construction. Immutable.
class SpectralField {
 public:
  using cd = std::complex<double>;

  SpectralField(GridSpec grid, std::vector<cd> ux_hat, std::vector<cd> uy_hat,
                std::optional<double> time_tag = std::nullopt);

  static SpectralField zero(GridSpec grid);
  // Build from physical-grid samples (row-major, y outer, x inner).
  static SpectralField from_physical(GridSpec grid, std::span<const double> u,
                                     std::span<const double> v,
                                     std::optional<double> time_tag = std::nullopt);

  const GridSpec& grid() const { return grid_; }
  std::optional<double> time_tag() const { return time_tag_; }

  cd coeff(int comp, int kx, int ky) const {
    return data(comp)[static_cast<size_t>(grid_.index_of(ky)) * grid_.n + grid_.index_of(kx)];
  }
  const std::vector<cd>& data(int comp) const { return comp == 0 ? ux_hat_ : uy_hat_; }
  const std::vector<ActiveMode>& active_modes() const { return active_; }
  int max_active_wavenumber() const { return kmax_active_; }

  // Leray projection uhat <- uhat - k (k.uhat)/|k|^2; mean mode untouched.
  SpectralField projected_divergence_free() const;
  // uhat(k) <- -|k|^2 uhat(k).
  SpectralField laplacian() const;

  // Exact trigonometric-polynomial evaluation at arbitrary points
  // (periodically wrapped).
  Vec2 evaluate(Vec2 p) const;
  std::vector<Vec2> evaluate_at(std::span<const Vec2> pts) const;
  // Velocity-gradient tensor (grad u)_{ij} = d u_i / d x_j.
  Mat2 gradient(Vec2 p) const;
  std::vector<Mat2> gradient_at(std::span<const Vec2> pts) const;

  // Inverse transform of one component to the physical grid.
  std::vector<double> to_physical(int comp) const;
  // max |u| over the physical grid (used for CFL checks).
  double max_abs() const;
  // max_k |k.uhat| / max_k |uhat| (0 for the zero field).
  double divergence_rel() const;

  SpectralField with_time_tag(std::optional<double> t) const;

  // Coefficient-wise linear algebra (grids must match).
  friend SpectralField operator+(const SpectralField& a, const SpectralField& b);
  friend SpectralField operator-(const SpectralField& a, const SpectralField& b);
  friend SpectralField operator*(double s, const SpectralField& a);

 private:
  GridSpec grid_;
  std::vector<cd> ux_hat_, uy_hat_;
  std::optional<double> time_tag_;
  std::vector<ActiveMode> active_;
  int kmax_active_ = 0;

  void finalize();  // symmetrize, dealias, build active-mode list
};

// Leray projection of an arbitrary conjugate-symmetric two-component field.
SpectralField project_divergence_free(const SpectralField& f);

// u(x, y, t) = e^{-2 nu t} (sin x cos y, -cos x sin y), an exact
// Navier-Stokes solution on the torus.
SpectralField taylor_green(double t, double nu, GridSpec grid);

// Divergence-free random field with modes 1 <= |k|_inf <= max_mode,
// scaled so max |u| = amplitude. Deterministic in seed.
SpectralField random_lowmode(GridSpec grid, std::uint64_t seed, int max_mode, double amplitude);

// L2 inner product int f.g over [0,2pi)^2, computed spectrally.
double inner_product(const SpectralField& f, const SpectralField& g);
double l2_norm(const SpectralField& f);

// Dealiased pseudo-spectral advection term (u.grad) f.
SpectralField advection_term(const SpectralField& u, const SpectralField& f);

}  // namespace nslab

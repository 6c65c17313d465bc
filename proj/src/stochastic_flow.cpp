#include "nslab/stochastic_flow.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#if defined(__AVX2__) && defined(__FMA__)
#include <immintrin.h>
#endif

#include "nslab/fft.hpp"
#include "nslab/rng.hpp"

namespace nslab {

using cd = std::complex<double>;

void EnsembleSpec::validate() const {
  if (n_samples < 1) throw std::invalid_argument("EnsembleSpec: n_samples must be >= 1");
  if (sde_dt <= 0.0) throw std::invalid_argument("EnsembleSpec: sde_dt must be > 0");
}

Vec2 brownian_increment(std::uint64_t base_seed, std::uint64_t sample_index,
                        std::uint64_t step_index) {
  const std::uint64_t h =
      rng::mix64(base_seed ^ rng::mix64(sample_index ^ rng::mix64(step_index)));
  const auto [a, b] = rng::normal_pair(rng::mix64(h ^ 0x243f6a8885a308d3ULL),
                                       rng::mix64(h ^ 0x13198a2e03707344ULL));
  return {a, b};
}

// ---------------------------------------------------------------------------
// DriftEvaluator

DriftEvaluator::DriftEvaluator(const VelocityHistory& h, bool exact) : h_(h), exact_(exact) {
  // Size the fine grid so the Hermite-bicubic error bound, summed over the
  // retained modes of representative snapshots, stays below 1e-6.
  const auto& snaps = h.snapshots();
  std::vector<const SpectralField*> probes = {&snaps.front().second, &snaps.back().second};
  if (snaps.size() > 2) probes.push_back(&snaps[snaps.size() / 2].second);
  fine_n_ = std::max(64, 2 * h.snapshots().front().second.grid().n);
  for (;; fine_n_ *= 2) {
    const double hf = kTwoPi / fine_n_;
    double bound = 0.0;
    for (const SpectralField* f : probes) {
      // 1D cubic Hermite error is h^4 max|f''''| / 384; the tensor
      // product adds the two directional terms. Components are
      // interpolated independently, so the bound is per component.
      double bu = 0.0, bv = 0.0;
      for (const ActiveMode& m : f->active_modes()) {
        const double e =
            (std::pow(m.kx * hf, 4) + std::pow(m.ky * hf, 4)) / 384.0;
        bu += e * std::abs(m.ux);
        bv += e * std::abs(m.uy);
      }
      bound = std::max({bound, bu, bv});
    }
    if (bound <= 1e-6 || fine_n_ >= 4096) break;
  }
  cache_.resize(3);
}

const SpectralField& DriftEvaluator::field_for(double t) {
  for (auto& e : exact_cache_) {
    if (e.first == t) return e.second;
  }
  if (exact_cache_.size() >= 3) exact_cache_.erase(exact_cache_.begin());
  exact_cache_.emplace_back(t, h_.sample(t));
  return exact_cache_.back().second;
}

const DriftEvaluator::Table& DriftEvaluator::table_for(double t) {
  Table* lru = &cache_[0];
  for (auto& tb : cache_) {
    if (tb.stamp >= 0 && tb.t == t) {
      tb.stamp = ++clock_;
      return tb;
    }
    if (tb.stamp < lru->stamp) lru = &tb;
  }
  Table& tb = *lru;
  tb.t = t;
  tb.stamp = ++clock_;
  const SpectralField f = h_.sample(t);
  const GridSpec grid = f.grid();
  const int F = fine_n_;
  std::vector<cd> pad(static_cast<size_t>(F) * F);
  tb.g.assign(pad.size() * 8, 0.0);
  for (int c = 0; c < 2; ++c) {
    for (int d = 0; d < 4; ++d) {
      std::fill(pad.begin(), pad.end(), cd(0.0));
      for (const ActiveMode& m : f.active_modes()) {
        const cd a = (c == 0) ? m.ux : m.uy;
        cd v = a;
        if (d == 1 || d == 3) v *= cd(0.0, m.kx);
        if (d == 2 || d == 3) v *= cd(0.0, m.ky);
        const int ix = m.kx >= 0 ? m.kx : m.kx + F;
        const int iy = m.ky >= 0 ? m.ky : m.ky + F;
        pad[static_cast<size_t>(iy) * F + ix] = v;
      }
      fft::backward2d(F, pad.data());
      const int ch = c * 4 + d;
      for (size_t i = 0; i < pad.size(); ++i) {
        tb.g[i * 8 + ch] = static_cast<float>(pad[i].real());
      }
    }
  }
  (void)grid;
  return tb;
}

void DriftEvaluator::eval(double t, std::span<const Vec2> pts, std::span<Vec2> out) {
  if (exact_) {
    const SpectralField& f = field_for(t);
    for (size_t i = 0; i < pts.size(); ++i) out[i] = f.evaluate(pts[i]);
    return;
  }
  const Table& tb = table_for(t);
  const int F = fine_n_;
  const double inv_hf = F / kTwoPi;
  const double hf = kTwoPi / F;
  const int mask = F - 1;
  for (size_t i = 0; i < pts.size(); ++i) {
    double gx = pts[i].x * inv_hf;
    double gy = pts[i].y * inv_hf;
    const double fx = std::floor(gx);
    const double fy = std::floor(gy);
    const double s = gx - fx;
    const double r = gy - fy;
    const int ix0 = static_cast<int>(fx) & mask;
    const int iy0 = static_cast<int>(fy) & mask;
    const int ix1 = (ix0 + 1) & mask;
    const int iy1 = (iy0 + 1) & mask;
    // Hermite basis in x (a: values, b: derivatives scaled by cell size).
    const double s2 = s * s, s3 = s2 * s;
    const double ax0 = 2 * s3 - 3 * s2 + 1, ax1 = -2 * s3 + 3 * s2;
    const double bx0 = (s3 - 2 * s2 + s) * hf, bx1 = (s3 - s2) * hf;
    const double r2 = r * r, r3 = r2 * r;
    const double ay0 = 2 * r3 - 3 * r2 + 1, ay1 = -2 * r3 + 3 * r2;
    const double by0 = (r3 - 2 * r2 + r) * hf, by1 = (r3 - r2) * hf;
    const float* n00 = &tb.g[(static_cast<size_t>(iy0) * F + ix0) * 8];
    const float* n01 = &tb.g[(static_cast<size_t>(iy0) * F + ix1) * 8];
    const float* n10 = &tb.g[(static_cast<size_t>(iy1) * F + ix0) * 8];
    const float* n11 = &tb.g[(static_cast<size_t>(iy1) * F + ix1) * 8];
#if defined(__AVX2__) && defined(__FMA__)
    // Per corner, the weight vector [Ay*Ax, Ay*Bx, By*Ax, By*Bx] is dotted
    // with the channel block [f, fx, fy, fxy]; u and v share the weights.
    const __m256d wx = _mm256_setr_pd(ax0, bx0, ax0, bx0);
    const __m256d wx1 = _mm256_setr_pd(ax1, bx1, ax1, bx1);
    const __m256d wy0 = _mm256_setr_pd(ay0, ay0, by0, by0);
    const __m256d wy1 = _mm256_setr_pd(ay1, ay1, by1, by1);
    const __m256d w00 = _mm256_mul_pd(wy0, wx);
    const __m256d w01 = _mm256_mul_pd(wy0, wx1);
    const __m256d w10 = _mm256_mul_pd(wy1, wx);
    const __m256d w11 = _mm256_mul_pd(wy1, wx1);
    __m256d au = _mm256_mul_pd(w00, _mm256_cvtps_pd(_mm_loadu_ps(n00)));
    __m256d av = _mm256_mul_pd(w00, _mm256_cvtps_pd(_mm_loadu_ps(n00 + 4)));
    au = _mm256_fmadd_pd(w01, _mm256_cvtps_pd(_mm_loadu_ps(n01)), au);
    av = _mm256_fmadd_pd(w01, _mm256_cvtps_pd(_mm_loadu_ps(n01 + 4)), av);
    au = _mm256_fmadd_pd(w10, _mm256_cvtps_pd(_mm_loadu_ps(n10)), au);
    av = _mm256_fmadd_pd(w10, _mm256_cvtps_pd(_mm_loadu_ps(n10 + 4)), av);
    au = _mm256_fmadd_pd(w11, _mm256_cvtps_pd(_mm_loadu_ps(n11)), au);
    av = _mm256_fmadd_pd(w11, _mm256_cvtps_pd(_mm_loadu_ps(n11 + 4)), av);
    const __m256d hu = _mm256_hadd_pd(au, av);
    const __m128d sum = _mm_add_pd(_mm256_castpd256_pd128(hu), _mm256_extractf128_pd(hu, 1));
    out[i] = {_mm_cvtsd_f64(sum), _mm_cvtsd_f64(_mm_unpackhi_pd(sum, sum))};
#else
    double res[2];
    for (int c = 0; c < 2; ++c) {
      const float* c00 = n00 + 4 * c;
      const float* c01 = n01 + 4 * c;
      const float* c10 = n10 + 4 * c;
      const float* c11 = n11 + 4 * c;
      res[c] = ay0 * (ax0 * c00[0] + ax1 * c01[0] + bx0 * c00[1] + bx1 * c01[1]) +
               ay1 * (ax0 * c10[0] + ax1 * c11[0] + bx0 * c10[1] + bx1 * c11[1]) +
               by0 * (ax0 * c00[2] + ax1 * c01[2] + bx0 * c00[3] + bx1 * c01[3]) +
               by1 * (ax0 * c10[2] + ax1 * c11[2] + bx0 * c10[3] + bx1 * c11[3]);
    }
    out[i] = {res[0], res[1]};
#endif
  }
}

// ---------------------------------------------------------------------------
// Integration engine

namespace {

std::vector<double> plan_times(double t_from, double t_to, double dt, FlowDirection dir) {
  const double span = std::abs(t_to - t_from);
  const long m = std::max(1L, static_cast<long>(std::ceil(span / dt - 1e-9)));
  std::vector<double> times(m + 1);
  const double sgn = dir == FlowDirection::forward ? 1.0 : -1.0;
  for (long k = 0; k < m; ++k) times[k] = t_from + sgn * k * dt;
  times[m] = t_to;
  return times;
}

void warn_if_coarse(const VelocityHistory& h, const EnsembleSpec& ens) {
  static bool warned = false;
  if (warned) return;
  const double umax = h.snapshots().front().second.max_abs();
  const int n = h.snapshots().front().second.grid().n;
  if (umax * ens.sde_dt > 0.5 * kTwoPi / n) {
    std::fprintf(stderr, "nslab: warning: sde_dt * max|u| exceeds half a grid cell\n");
    warned = true;
  }
}

}  // namespace

void advect_ensemble(const VelocityHistory& h, DriftEvaluator& drift,
                     std::span<const Vec2> labels, double t_from, double t_to, FlowDirection dir,
                     const EnsembleSpec& ens, std::span<const int> samples,
                     std::vector<Vec2>& positions) {
  ens.validate();
  const double eps = 1e-12;
  if (t_from < h.t0() - eps || t_from > h.tf() + eps || t_to < h.t0() - eps ||
      t_to > h.tf() + eps) {
    throw std::out_of_range("advect: times outside history interval");
  }
  if (dir == FlowDirection::backward ? t_to > t_from + eps : t_to < t_from - eps) {
    throw std::invalid_argument("advect: target time on the wrong side of the anchor");
  }
  const size_t L = labels.size();
  positions.assign(samples.size() * L, Vec2{});
  for (size_t s = 0; s < samples.size(); ++s) {
    std::copy(labels.begin(), labels.end(), positions.begin() + s * L);
  }
  if (std::abs(t_to - t_from) <= eps) return;
  warn_if_coarse(h, ens);

  const double nu = h.params().nu;
  const double sgn = dir == FlowDirection::forward ? 1.0 : -1.0;
  const auto times = plan_times(t_from, t_to, ens.sde_dt, dir);

  // Work on sample chunks sized to keep the step state in cache; the
  // samples are independent, so chunking cannot change the results (the
  // drift tables are rebuilt per chunk, which is the cheaper side of the
  // trade at large ensembles).
  const size_t chunk_samples = std::max<size_t>(1, 32768 / std::max<size_t>(1, L));
  std::vector<Vec2> u1, pred, u2, etas;
  for (size_t s0 = 0; s0 < samples.size(); s0 += chunk_samples) {
    const size_t nc = std::min(chunk_samples, samples.size() - s0);
    const size_t total = nc * L;
    const std::span<Vec2> chunk_pos(positions.data() + s0 * L, total);
    u1.assign(total, Vec2{});
    pred.assign(total, Vec2{});
    u2.assign(total, Vec2{});
    etas.assign(nc, Vec2{});

    for (size_t k = 0; k + 1 < times.size(); ++k) {
      const double tk = times[k];
      const double tk1 = times[k + 1];
      const double hstep = std::abs(tk1 - tk);
      drift.eval(tk, chunk_pos, u1);
      const double noise_amp = std::sqrt(2.0 * nu * hstep);
      for (size_t s = 0; s < nc; ++s) {
        Vec2 eta{0.0, 0.0};
        if (nu > 0.0) {
          const Vec2 xi = brownian_increment(ens.base_seed, samples[s0 + s], k);
          eta = xi * noise_amp;
        }
        etas[s] = eta;
        for (size_t i = s * L; i < (s + 1) * L; ++i) {
          pred[i] = chunk_pos[i] + u1[i] * (sgn * hstep) + eta;
        }
      }
      drift.eval(tk1, pred, u2);
      for (size_t s = 0; s < nc; ++s) {
        const Vec2 eta = etas[s];
        for (size_t i = s * L; i < (s + 1) * L; ++i) {
          chunk_pos[i] += (u1[i] + u2[i]) * (sgn * 0.5 * hstep) + eta;
        }
      }
    }
  }
}

std::vector<Vec2> advect_points(const VelocityHistory& h, DriftEvaluator& drift,
                                std::span<const Vec2> labels, double t_from, double t_to,
                                FlowDirection dir, const EnsembleSpec& ens, int sample_index) {
  const int samples[1] = {sample_index};
  std::vector<Vec2> pos;
  advect_ensemble(h, drift, labels, t_from, t_to, dir, ens, samples, pos);
  return pos;
}

namespace {

double wrap2pi(double v) {
  v = std::fmod(v, kTwoPi);
  return v < 0.0 ? v + kTwoPi : v;
}

FlowEnsemble run_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                      const EnsembleSpec& ens, double t_from, FlowDirection dir) {
  ens.validate();
  DriftEvaluator drift(h, ens.exact_drift);
  std::vector<int> samples(ens.n_samples);
  for (int s = 0; s < ens.n_samples; ++s) samples[s] = s;
  FlowEnsemble out;
  out.labels.assign(labels.begin(), labels.end());
  out.t_start = t_from;
  out.t_end = t;
  out.nu = h.params().nu;
  out.n_samples = ens.n_samples;
  advect_ensemble(h, drift, labels, t_from, t, dir, ens, samples, out.positions);
  for (Vec2& p : out.positions) p = {wrap2pi(p.x), wrap2pi(p.y)};
  return out;
}

}  // namespace

FlowEnsemble backward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                           const EnsembleSpec& ens, double t_from) {
  return run_flow(h, labels, t, ens, t_from, FlowDirection::backward);
}

FlowEnsemble backward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                           const EnsembleSpec& ens) {
  return backward_flow(h, labels, t, ens, h.tf());
}

FlowEnsemble forward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                          const EnsembleSpec& ens, double t_from) {
  return run_flow(h, labels, t, ens, t_from, FlowDirection::forward);
}

FlowEnsemble forward_flow(const VelocityHistory& h, std::span<const Vec2> labels, double t,
                          const EnsembleSpec& ens) {
  return forward_flow(h, labels, t, ens, h.t0());
}

}  // namespace nslab

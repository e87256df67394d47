#ifndef QCOMPAT_REGIONS_HPP
#define QCOMPAT_REGIONS_HPP

// Closed-form compatibility-region membership, boundary curves and the noise
// coefficients a_k, b for the three device pairs, in the standard ([0,1]^2)
// and extended (overnoisy) settings.
//
// Membership uses non-strict inequalities with tolerance 1e-12 on the
// closed-form residuals; ties count as inside (the regions are closed).

#include <algorithm>
#include <cmath>
#include <utility>
#include <vector>

#include "qcompat/numkit.hpp"

namespace qcompat {
namespace regions {

using numkit::admissibility_error;

inline constexpr double kBoundaryTol = 1e-12;

// The three device pairs: meter-meter (MUB), channel-channel, meter-channel.
enum class PairKind { QP, II, QI };

inline double m1_of(int d) { return -1.0 / (d - 1); }
inline double m2_of(int d) { return -1.0 / (static_cast<double>(d) * d - 1.0); }

// Noise coefficients a_k(r), b(r); k = 1 for meters, k = 2 for channels.
struct NoiseCoeffs {
  int k;
  double r;
  double a;
  double b;
};

inline double mk_of(int k, int d) {
  const double dk = std::pow(static_cast<double>(d), k);
  return -1.0 / (dk - 1.0);
}

inline NoiseCoeffs noise_coeffs(int k, int d, double r) {
  if (k != 1 && k != 2) throw admissibility_error("noise_coeffs: k must be 1 or 2");
  const double dk = std::pow(static_cast<double>(d), k);
  if (r < mk_of(k, d) - 1e-12 || r > 1.0 + 1e-12)
    throw admissibility_error("noise_coeffs: r outside [m_k, 1]");
  const double rad = std::max(r * (dk - 1.0) + 1.0, 0.0);
  NoiseCoeffs c;
  c.k = k;
  c.r = r;
  c.a = (std::sqrt(rad) - std::sqrt(std::max(1.0 - r, 0.0))) / std::sqrt(dk);
  c.b = std::sqrt(std::max(1.0 - r, 0.0));
  return c;
}

// Signed residual of the ellipse d^k (s^2 + t^2) + 2(d^k - 2)(1-s)(1-t) = d^k;
// its intersection with the relevant half-plane carries the extreme points.
inline double ellipse_residual(int k, int d, double s, double t) {
  const double dk = std::pow(static_cast<double>(d), k);
  return dk * (s * s + t * t) + 2.0 * (dk - 2.0) * (1.0 - s) * (1.0 - t) - dk;
}

// Signed residual of d^2 s^2 + 4 t^2 + 4(1+s)(1-t) = 4 (the arc carrying the
// overnoisy lower QI boundary).
inline double ellipse_neg_residual(int d, double s, double t) {
  const double d2 = static_cast<double>(d) * d;
  return d2 * s * s + 4.0 * t * t + 4.0 * (1.0 + s) * (1.0 - t) - 4.0;
}

struct RegionQuery {
  PairKind kind;
  int dim;
  double s;
  double t;
  bool extended;
};

// Admissible parameter rectangle for the pair.
inline std::pair<double, double> admissible_s_range(PairKind kind, int d, bool extended) {
  if (!extended) return {0.0, 1.0};
  switch (kind) {
    case PairKind::QP:
    case PairKind::QI:
      return {m1_of(d), 1.0};
    case PairKind::II:
      return {m2_of(d), 1.0};
  }
  return {0.0, 1.0};
}

inline std::pair<double, double> admissible_t_range(PairKind kind, int d, bool extended) {
  if (!extended) return {0.0, 1.0};
  switch (kind) {
    case PairKind::QP:
      return {m1_of(d), 1.0};
    case PairKind::II:
    case PairKind::QI:
      return {m2_of(d), 1.0};
  }
  return {0.0, 1.0};
}

inline void require_admissible(const RegionQuery& q) {
  if (q.dim < 2) throw admissibility_error("RegionQuery: d >= 2 required");
  auto [slo, shi] = admissible_s_range(q.kind, q.dim, q.extended);
  auto [tlo, thi] = admissible_t_range(q.kind, q.dim, q.extended);
  const double eps = 1e-12;
  if (q.s < slo - eps || q.s > shi + eps || q.t < tlo - eps || q.t > thi + eps)
    throw admissibility_error("RegionQuery: (s,t) outside the admissible rectangle");
}

namespace detail {

// sqrt of (1-d^k) m^2 + (d^k-2) m + 1, clipped against rounding; the radicand
// is a downward parabola with roots at m_k and 1, so it is nonnegative on the
// admissible range.
inline double boundary_radical(double dk, double m) {
  return std::sqrt(std::max((1.0 - dk) * m * m + (dk - 2.0) * m + 1.0, 0.0));
}

// Right-hand side of the extended min-form condition
//   s + t - 1 <= (2/d^k) [m - 1 + sqrt((1-d^k) m^2 + (d^k-2) m + 1)],
// with m = min(s, t).
inline double min_form_rhs(double dk, double m) {
  return (2.0 / dk) * (m - 1.0 + boundary_radical(dk, m));
}

}  // namespace detail

// Largest admissible s compatible with the given t (Heisenberg limit of the
// extended region); for t in [0,1] this coincides with the standard boundary.
inline double boundary_s_max(PairKind kind, int d, double t);

// t_d case split of the meter-channel lower bound: for d >= 3 the bound is
// flat below (d-2)/(2(d-1)); for d = 2 it always follows t.
inline double t_lower_anchor(int d, double t) {
  if (d >= 3) {
    const double td = (d - 2.0) / (2.0 * (d - 1.0));
    if (t <= td) return td;
  }
  return t;
}

inline double qi_s_max(int d, double t) {
  const double d2 = static_cast<double>(d) * d;
  return ((d2 - 2.0) * (1.0 - t) + 2.0 * detail::boundary_radical(d2, t)) / d2;
}

inline double qi_s_min(int d, double t) {
  const double d2 = static_cast<double>(d) * d;
  const double td = t_lower_anchor(d, t);
  return -2.0 * (1.0 - td + detail::boundary_radical(d2, td)) / d2;
}

inline bool in_region(const RegionQuery& q) {
  require_admissible(q);
  const int d = q.dim;
  const double s = q.s;
  const double t = q.t;

  if (!q.extended) {
    // Standard forms: s + t - 1 <= (2/sqrt(d^k)) sqrt((1-s)(1-t)).
    const double root = std::sqrt(std::max((1.0 - s) * (1.0 - t), 0.0));
    const double coeff = (q.kind == PairKind::QP) ? 2.0 / std::sqrt(static_cast<double>(d))
                                                  : 2.0 / d;
    return s + t - 1.0 <= coeff * root + kBoundaryTol;
  }

  switch (q.kind) {
    case PairKind::QP: {
      if (d == 2) return s * s + t * t <= 1.0 + kBoundaryTol;
      const double m = std::min(s, t);
      return s + t - 1.0 <= detail::min_form_rhs(static_cast<double>(d), m) + kBoundaryTol;
    }
    case PairKind::II: {
      const double m = std::min(s, t);
      return s + t - 1.0 <=
             detail::min_form_rhs(static_cast<double>(d) * d, m) + kBoundaryTol;
    }
    case PairKind::QI: {
      return s <= qi_s_max(d, t) + kBoundaryTol && s >= qi_s_min(d, t) - kBoundaryTol;
    }
  }
  return false;
}

namespace detail {

// Boundary of the standard form s + t - 1 = (2/sqrt(d^k)) sqrt((1-s)(1-t)),
// solved for s as a quadratic in sqrt(1-s); exact for t in [0, 1].
inline double std_s_max(int k, int d, double t) {
  const double dk = std::pow(static_cast<double>(d), k);
  const double c = 2.0 / std::sqrt(dk);
  const double v = std::max(1.0 - t, 0.0);
  const double root_u = 0.5 * (-c * std::sqrt(v) + std::sqrt(c * c * v + 4.0 * (1.0 - v)));
  return 1.0 - root_u * root_u;
}

// Extended upper boundary for QP (k=1, d>=3) and II (k=2): on this branch
// t = min(s, t), so the min-form equality is explicit in s.
inline double ext_upper_s_max(int k, int d, double t) {
  const double dk = std::pow(static_cast<double>(d), k);
  return 1.0 - t + min_form_rhs(dk, t);
}

// Lower branch of the extended QP/II boundary as an explicit graph
// t = g(s) = 1 - s + (2/d^k)[s - 1 + rad(s)], increasing on [m_k, 0].
inline double lower_branch_t_of_s(int k, int d, double s) {
  const double dk = std::pow(static_cast<double>(d), k);
  return 1.0 - s + min_form_rhs(dk, s);
}

// Smallest in-region s for fixed t on the extended QP/II regions. Below the
// critical height g(m_k) the slice reaches the admissible edge m_k.
inline double ext_s_lo(int k, int d, double t) {
  if (k == 1 && d == 2) return -std::sqrt(std::max(1.0 - t * t, 0.0));
  const double mk = mk_of(k, d);
  if (t <= lower_branch_t_of_s(k, d, mk) + 1e-15) return mk;
  double lo = mk, hi = 0.0;
  for (int it = 0; it < 80 && hi - lo > 1e-14; ++it) {
    const double mid = 0.5 * (lo + hi);
    (lower_branch_t_of_s(k, d, mid) < t ? lo : hi) = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace detail

inline double boundary_s_max(PairKind kind, int d, double t) {
  auto [tlo, thi] = admissible_t_range(kind, d, true);
  if (t < tlo - 1e-12 || t > thi + 1e-12)
    throw admissibility_error("boundary_s_max: t outside the admissible range");
  switch (kind) {
    case PairKind::QI:
      return qi_s_max(d, t);
    case PairKind::QP:
      if (d == 2) return (t < 0.0) ? std::sqrt(std::max(1.0 - t * t, 0.0))
                                   : detail::std_s_max(1, d, t);
      return (t < 0.0) ? detail::ext_upper_s_max(1, d, t) : detail::std_s_max(1, d, t);
    case PairKind::II:
      return (t < 0.0) ? detail::ext_upper_s_max(2, d, t) : detail::std_s_max(2, d, t);
  }
  throw admissibility_error("boundary_s_max: unreachable");
}

// Exposed for the meter-channel pair only; the lower boundaries of the QP/II
// extended regions are min-form conditions without a single-valued s_min(t)
// (sample_boundary reports them as curves instead).
inline double boundary_s_min(PairKind kind, int d, double t) {
  if (kind != PairKind::QI)
    throw admissibility_error("boundary_s_min: defined for the QI pair only");
  auto [tlo, thi] = admissible_t_range(kind, d, true);
  if (t < tlo - 1e-12 || t > thi + 1e-12)
    throw admissibility_error("boundary_s_min: t outside the admissible range");
  return qi_s_min(d, t);
}

// t-coordinate of the symmetric boundary point (s = t).
inline double symmetric_boundary_t(PairKind kind, int d) {
  const double root_dk = (kind == PairKind::QP) ? std::sqrt(static_cast<double>(d))
                                                : static_cast<double>(d);
  return (root_dk + 2.0) / (2.0 * (root_dk + 1.0));
}

// n boundary points parameterized by t ascending over its admissible span.
// For odd n the grid is anchored so the symmetric point (s = t) is included.
// Extended regions emit the upper branch (s_max) followed by the lower
// branch, each with t ascending.
inline std::vector<std::pair<double, double>> sample_boundary(PairKind kind, int d,
                                                              bool extended, int n) {
  if (n < 2) throw admissibility_error("sample_boundary: n >= 2 required");

  auto t_grid = [&](double lo, double hi, int count) {
    std::vector<double> g;
    if (count == 1) {
      g.push_back(lo);
      return g;
    }
    const double tsym = symmetric_boundary_t(kind, d);
    if (count % 2 == 1 && count >= 3 && tsym > lo && tsym < hi) {
      const int half = (count + 1) / 2;
      for (int i = 0; i < half; ++i) g.push_back(lo + (tsym - lo) * i / (half - 1));
      for (int i = 1; i < half; ++i) g.push_back(tsym + (hi - tsym) * i / (half - 1));
    } else {
      for (int i = 0; i < count; ++i) g.push_back(lo + (hi - lo) * i / (count - 1));
    }
    return g;
  };

  std::vector<std::pair<double, double>> pts;
  const auto [tlo, thi] = extended ? admissible_t_range(kind, d, true)
                                   : std::make_pair(0.0, 1.0);
  if (!extended) {
    for (double t : t_grid(tlo, thi, n)) pts.emplace_back(boundary_s_max(kind, d, t), t);
    return pts;
  }

  const int n_up = n - n / 2;
  const int n_lo = n / 2;
  for (double t : t_grid(tlo, thi, n_up)) pts.emplace_back(boundary_s_max(kind, d, t), t);
  if (n_lo > 0) {
    for (double t : t_grid(tlo, thi, n_lo)) {
      double s = (kind == PairKind::QI)
                     ? boundary_s_min(kind, d, t)
                     : detail::ext_s_lo(kind == PairKind::QP ? 1 : 2, d, t);
      pts.emplace_back(s, t);
    }
  }
  return pts;
}

}  // namespace regions
}  // namespace qcompat

#endif  // QCOMPAT_REGIONS_HPP

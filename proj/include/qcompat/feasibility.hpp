#ifndef QCOMPAT_FEASIBILITY_HPP
#define QCOMPAT_FEASIBILITY_HPP

// Independent numerical oracle: decides compatibility at a given (s,t) by
// convex feasibility (Dykstra-corrected alternating projections between the
// affine constraint subspace and the product PSD cone) and locates empirical
// region boundaries by bisection. Everything is deterministic: fixed
// initialization, fixed iteration order, no randomness.
//
// Problem layouts:
//   QI -> d PSD d x d blocks S(x) subject to the two covariant-reduction
//         constraint equations (the symmetrization lemma makes this lossless);
//   QP -> d^2 PSD d x d effects with the 2d marginal equalities;
//   II -> one PSD d^3 x d^3 Choi operator with two partial-trace equalities.

#include <cmath>
#include <functional>
#include <limits>
#include <utility>
#include <vector>

#include "qcompat/covariance.hpp"
#include "qcompat/devices.hpp"
#include "qcompat/regions.hpp"

namespace qcompat {
namespace feasibility {

using devices::Channel;
using devices::Meter;
using devices::VectorMeasure;
using numkit::admissibility_error;
using numkit::CMatrix;
using numkit::cx;
using numkit::HermitianMatrix;
using regions::PairKind;

struct FeasibilityProblem {
  PairKind kind;
  int dim;
  double s;
  double t;
};

enum class Status { Feasible, InfeasibleEvidence, Undetermined };

struct FeasibilityResult {
  Status status;
  long iterations;
  double residual;
  // Certificate blocks for Feasible results: the S(x) family (QI), the d^2
  // effects (QP), or the single Choi operator (II).
  std::vector<HermitianMatrix> certificate;
};

namespace detail {

// Isometric real coordinates of a Hermitian n x n matrix: diagonal entries,
// then sqrt(2) Re / sqrt(2) Im of the upper triangle. Frobenius norm maps to
// the Euclidean norm, so PSD projection commutes with the embedding.
inline void coords_of(const CMatrix& h, double* out) {
  const int n = h.rows();
  int k = 0;
  for (int i = 0; i < n; ++i) out[k++] = h(i, i).real();
  const double rt2 = std::sqrt(2.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      out[k++] = rt2 * h(i, j).real();
      out[k++] = rt2 * h(i, j).imag();
    }
}

inline CMatrix block_of(const double* in, int n) {
  CMatrix h(n, n);
  int k = 0;
  for (int i = 0; i < n; ++i) h(i, i) = in[k++];
  const double inv = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      const double re = in[k++] * inv;
      const double im = in[k++] * inv;
      h(i, j) = cx(re, im);
      h(j, i) = cx(re, -im);
    }
  return h;
}

// Hermitian operator basis element m of an n-dimensional system, dual to the
// coordinates above (tr(H_m X) = coordinate m of X).
inline CMatrix coord_operator(int n, int m) {
  CMatrix h(n, n);
  if (m < n) {
    h(m, m) = 1.0;
    return h;
  }
  int k = n;
  const double inv = 1.0 / std::sqrt(2.0);
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j) {
      if (k == m) {
        h(i, j) = inv;
        h(j, i) = inv;
        return h;
      }
      ++k;
      if (k == m) {
        h(i, j) = cx(0.0, inv);
        h(j, i) = cx(0.0, -inv);
        return h;
      }
      ++k;
    }
  throw std::invalid_argument("coord_operator: index out of range");
}

struct AffineSystem {
  std::vector<std::vector<double>> rows;  // m rows of length n
  std::vector<double> rhs;                // length m
};

// Least-squares projector onto {v : Mv = c}: v - M^T (MM^T)^+ (Mv - c),
// with the pseudo-inverse built once by eigendecomposition.
class AffineProjector {
 public:
  explicit AffineProjector(const AffineSystem& sys) : m_(sys.rows.size()), rows_(sys.rows), rhs_(sys.rhs) {
    CMatrix gram(static_cast<int>(m_), static_cast<int>(m_));
    for (size_t i = 0; i < m_; ++i)
      for (size_t j = i; j < m_; ++j) {
        double acc = 0.0;
        for (size_t k = 0; k < rows_[i].size(); ++k) acc += rows_[i][k] * rows_[j][k];
        gram(static_cast<int>(i), static_cast<int>(j)) = acc;
        gram(static_cast<int>(j), static_cast<int>(i)) = acc;
      }
    numkit::EigenSystem es = numkit::hermitian_eigensystem(HermitianMatrix(gram, 1e-9));
    const double cutoff = 1e-12 * std::max(es.values.back(), 1.0);
    pinv_.assign(m_, std::vector<double>(m_, 0.0));
    for (size_t k = 0; k < m_; ++k) {
      if (es.values[k] <= cutoff) continue;
      const double w = 1.0 / es.values[k];
      for (size_t i = 0; i < m_; ++i) {
        const double vik = es.vectors(static_cast<int>(i), static_cast<int>(k)).real();
        if (vik == 0.0) continue;
        for (size_t j = 0; j < m_; ++j)
          pinv_[i][j] += w * vik * es.vectors(static_cast<int>(j), static_cast<int>(k)).real();
      }
    }
  }

  double residual_inf(const std::vector<double>& v) const {
    double worst = 0.0;
    for (size_t i = 0; i < m_; ++i) {
      double acc = -rhs_[i];
      for (size_t k = 0; k < v.size(); ++k) acc += rows_[i][k] * v[k];
      worst = std::max(worst, std::abs(acc));
    }
    return worst;
  }

  void project(std::vector<double>& v) const {
    std::vector<double> r(m_);
    for (size_t i = 0; i < m_; ++i) {
      double acc = -rhs_[i];
      for (size_t k = 0; k < v.size(); ++k) acc += rows_[i][k] * v[k];
      r[i] = acc;
    }
    std::vector<double> w(m_, 0.0);
    for (size_t i = 0; i < m_; ++i) {
      double acc = 0.0;
      for (size_t j = 0; j < m_; ++j) acc += pinv_[i][j] * r[j];
      w[i] = acc;
    }
    for (size_t i = 0; i < m_; ++i) {
      if (w[i] == 0.0) continue;
      const auto& row = rows_[i];
      for (size_t k = 0; k < v.size(); ++k) v[k] -= row[k] * w[i];
    }
  }

 private:
  size_t m_;
  std::vector<std::vector<double>> rows_;
  std::vector<double> rhs_;
  std::vector<std::vector<double>> pinv_;
};

struct ProblemLayout {
  std::vector<int> block_dims;  // reduced dimensions (0 = block forced to zero)
  AffineSystem system;
  std::vector<double> init;  // maximally mixed, scaled to the trace constraints
  // Per-block isometries V (full_dim x block_dim) when a facial reduction was
  // applied; empty when blocks are unreduced. Certificates expand as V S V*.
  std::vector<CMatrix> isometries;
  int full_dim = 0;
};

inline int coords_per_block(int n) { return n * n; }

// Columns spanning the orthogonal complement of span{forbidden}: constraints
// tr(R S) = 0 with R = |v><v| and S PSD confine S to that complement, and
// restricting the problem there keeps the iteration linearly convergent
// (the unreduced problem has no Slater point on such faces). Returns the
// isometry and the face dimension (0 = block forced to zero).
inline std::pair<CMatrix, int> face_isometry(int d, const std::vector<CMatrix>& forbidden) {
  CMatrix gram(d, d);
  for (const CMatrix& v : forbidden) gram += v * v.adjoint();
  numkit::EigenSystem es = numkit::hermitian_eigensystem(HermitianMatrix(gram, 1e-9));
  int f = 0;
  while (f < d && es.values[f] <= 1e-9) ++f;
  if (f == 0) return {CMatrix::identity(d), 0};
  CMatrix v(d, f);
  for (int k = 0; k < f; ++k)
    for (int i = 0; i < d; ++i) v(i, k) = es.vectors(i, k);
  return {v, f};
}

inline ProblemLayout build_layout(const FeasibilityProblem& p) {
  const int d = p.dim;
  Meter q = devices::sharp_meter(devices::standard_basis(d));
  Meter pm = devices::sharp_meter(
      devices::fourier_conjugate(devices::standard_basis(d)));

  ProblemLayout lay;
  auto add_row = [&](const std::vector<std::pair<int, CMatrix>>& terms, double rhs) {
    std::vector<double> row;
    int total = 0;
    for (int bd : lay.block_dims) total += coords_per_block(bd);
    row.assign(total, 0.0);
    for (const auto& [b, op] : terms) {
      int offset = 0;
      for (int k = 0; k < b; ++k) offset += coords_per_block(lay.block_dims[k]);
      std::vector<double> c(coords_per_block(lay.block_dims[b]));
      coords_of(op, c.data());
      for (size_t k = 0; k < c.size(); ++k) row[offset + k] += c[k];
    }
    lay.system.rows.push_back(std::move(row));
    lay.system.rhs.push_back(rhs);
  };

  switch (p.kind) {
    case PairKind::QI: {
      lay.full_dim = d;
      auto q_target = [&](int z) {
        return (z == 0 ? p.s : 0.0) + (1.0 - p.s) / d;
      };
      auto p_target = [&](int x, int z) {
        return (x == 0 && z == 0 ? p.t : 0.0) + (1.0 - p.t) / (d * d);
      };
      // Zero targets at the admissibility edges (s = m1 or 1, t = m2 or 1)
      // pin blocks to faces of the PSD cone; reduce onto those faces so the
      // iteration keeps a relative interior to converge into.
      std::vector<std::vector<CMatrix>> forbidden(d);
      for (int z = 0; z < d; ++z)
        if (std::abs(q_target(z)) <= 1e-12)
          for (int x = 0; x < d; ++x)
            forbidden[x].push_back(devices::standard_basis(d).vector(z));
      for (int x = 0; x < d; ++x)
        for (int z = 0; z < d; ++z)
          if (std::abs(p_target(x, z)) <= 1e-12)
            forbidden[x].push_back(
                devices::fourier_conjugate(devices::standard_basis(d)).vector(z));

      lay.isometries.reserve(d);
      for (int x = 0; x < d; ++x) {
        if (forbidden[x].empty()) {
          lay.isometries.push_back(CMatrix::identity(d));
          lay.block_dims.push_back(d);
        } else {
          auto [v, f] = face_isometry(d, forbidden[x]);
          lay.isometries.push_back(v);
          lay.block_dims.push_back(f);
        }
      }

      auto reduced = [&](int x, const CMatrix& op) {
        return lay.isometries[x].adjoint() * op * lay.isometries[x];
      };
      // tr(Q(z) sum_x S(x)) = s delta_{z,0} + (1-s)/d
      for (int z = 0; z < d; ++z) {
        std::vector<std::pair<int, CMatrix>> terms;
        for (int x = 0; x < d; ++x)
          if (lay.block_dims[x] > 0) terms.emplace_back(x, reduced(x, q.effect(z).mat()));
        add_row(terms, q_target(z));
      }
      // tr(P(z) S(x)) = t delta delta + (1-t)/d^2
      for (int x = 0; x < d; ++x)
        for (int z = 0; z < d; ++z) {
          std::vector<std::pair<int, CMatrix>> terms;
          if (lay.block_dims[x] > 0)
            terms.emplace_back(x, reduced(x, pm.effect(z).mat()));
          add_row(terms, p_target(x, z));
        }
      int total = 0;
      for (int f : lay.block_dims) total += coords_per_block(f);
      lay.init.assign(total, 0.0);
      int offset = 0;
      for (int x = 0; x < d; ++x) {
        for (int i = 0; i < lay.block_dims[x]; ++i) lay.init[offset + i] = 1.0 / (d * d);
        offset += coords_per_block(lay.block_dims[x]);
      }
      break;
    }
    case PairKind::QP: {
      lay.block_dims.assign(d * d, d);
      Meter qs = devices::noisy_meter(q, p.s);
      Meter pt = devices::noisy_meter(pm, p.t);
      const int nb = coords_per_block(d);
      for (int x = 0; x < d; ++x)
        for (int m = 0; m < nb; ++m) {
          CMatrix op = coord_operator(d, m);
          std::vector<std::pair<int, CMatrix>> terms;
          for (int y = 0; y < d; ++y) terms.emplace_back(x * d + y, op);
          std::vector<double> target(nb);
          coords_of(qs.effect(x).mat(), target.data());
          add_row(terms, target[m]);
        }
      for (int y = 0; y < d; ++y)
        for (int m = 0; m < nb; ++m) {
          CMatrix op = coord_operator(d, m);
          std::vector<std::pair<int, CMatrix>> terms;
          for (int x = 0; x < d; ++x) terms.emplace_back(x * d + y, op);
          std::vector<double> target(nb);
          coords_of(pt.effect(y).mat(), target.data());
          add_row(terms, target[m]);
        }
      lay.init.assign(d * d * nb, 0.0);
      for (int b = 0; b < d * d; ++b)
        for (int i = 0; i < d; ++i) lay.init[b * nb + i] = 1.0 / (d * d);
      break;
    }
    case PairKind::II: {
      const int n = d * d * d;
      lay.block_dims.assign(1, n);
      const int nb = coords_per_block(d * d);
      // Partial trace over clone 2 (resp. clone 1) of the Choi must match the
      // depolarizing Choi at s (resp. t). Factor order is (in, o1, o2).
      CMatrix cs = devices::depolarizing_choi(d, p.s);
      CMatrix ct = devices::depolarizing_choi(d, p.t);
      for (int m = 0; m < nb; ++m) {
        CMatrix op = coord_operator(d * d, m);
        CMatrix lift1(n, n);  // op on (in, o1), identity on o2
        CMatrix lift2(n, n);  // op on (in, o2), identity on o1
        for (int i = 0; i < d; ++i)
          for (int j = 0; j < d; ++j)
            for (int a = 0; a < d; ++a)
              for (int b = 0; b < d; ++b) {
                const cx val = op(i * d + a, j * d + b);
                if (val == cx(0.0, 0.0)) continue;
                for (int k = 0; k < d; ++k) {
                  lift1((i * d + a) * d + k, (j * d + b) * d + k) += val;
                  lift2((i * d + k) * d + a, (j * d + k) * d + b) += val;
                }
              }
        std::vector<double> ts(nb), tt(nb);
        coords_of(cs, ts.data());
        coords_of(ct, tt.data());
        add_row({{0, lift1}}, ts[m]);
        add_row({{0, lift2}}, tt[m]);
      }
      lay.init.assign(coords_per_block(n), 0.0);
      for (int i = 0; i < n; ++i) lay.init[i] = 1.0 / n;
      break;
    }
  }
  return lay;
}

inline void psd_project_blocks(std::vector<double>& v, const std::vector<int>& dims) {
  int offset = 0;
  for (int n : dims) {
    if (n == 0) continue;
    CMatrix h = block_of(v.data() + offset, n);
    HermitianMatrix proj = numkit::psd_projection(HermitianMatrix(h, 1e-6));
    coords_of(proj.mat(), v.data() + offset);
    offset += coords_per_block(n);
  }
}

}  // namespace detail

inline void require_admissible(const FeasibilityProblem& p) {
  regions::require_admissible(
      regions::RegionQuery{p.kind, p.dim, p.s, p.t, /*extended=*/true});
}

// Dykstra-corrected alternating projections. Feasible results carry a
// certificate meeting every equality to 1e-7 with PSD margins >= -1e-9;
// InfeasibleEvidence is one-sided (a residual plateau above 1e-5).
inline FeasibilityResult check(const FeasibilityProblem& problem, long budget = 50000) {
  if (budget < 100) throw admissibility_error("check: budget < 100 rejected");
  require_admissible(problem);

  detail::ProblemLayout lay = detail::build_layout(problem);
  detail::AffineProjector affine(lay.system);

  const size_t n = lay.init.size();
  std::vector<double> x = lay.init;
  std::vector<double> p_corr(n, 0.0), q_corr(n, 0.0), y(n), tmp(n);

  std::vector<double> best_history;
  best_history.reserve(budget);
  double best = std::numeric_limits<double>::infinity();

  FeasibilityResult res;
  res.status = Status::Undetermined;
  res.iterations = 0;

  for (long k = 0; k < budget; ++k) {
    // y = P_affine(x + p); p += x - y
    for (size_t i = 0; i < n; ++i) y[i] = x[i] + p_corr[i];
    tmp = y;
    affine.project(tmp);
    for (size_t i = 0; i < n; ++i) p_corr[i] = y[i] - tmp[i];
    // x = P_psd(y' + q); q += y' - x
    for (size_t i = 0; i < n; ++i) y[i] = tmp[i] + q_corr[i];
    x = y;
    detail::psd_project_blocks(x, lay.block_dims);
    for (size_t i = 0; i < n; ++i) q_corr[i] = y[i] - x[i];

    res.iterations = k + 1;
    const double r = affine.residual_inf(x);
    best = std::min(best, r);
    best_history.push_back(best);

    if (r < 1e-7) {
      res.status = Status::Feasible;
      res.residual = r;
      int offset = 0;
      for (size_t b = 0; b < lay.block_dims.size(); ++b) {
        const int bd = lay.block_dims[b];
        if (!lay.isometries.empty()) {
          // Expand facially reduced blocks back to the full dimension.
          CMatrix full(lay.full_dim, lay.full_dim);
          if (bd > 0) {
            CMatrix small = detail::block_of(x.data() + offset, bd);
            full = lay.isometries[b] * small * lay.isometries[b].adjoint();
          }
          res.certificate.emplace_back(full, 1e-6);
        } else {
          res.certificate.emplace_back(detail::block_of(x.data() + offset, bd), 1e-6);
        }
        offset += detail::coords_per_block(bd);
      }
      return res;
    }
    if (k >= 1000) {
      const double decrease = best_history[k - 1000] - best;
      if (decrease < 1e-12 && best > 1e-5) {
        res.status = Status::InfeasibleEvidence;
        res.residual = best;
        return res;
      }
    }
  }
  res.residual = best;
  if (best > 1e-5) res.status = Status::InfeasibleEvidence;
  return res;
}

enum class Direction { Max, Min };

// Bisection on s at fixed t against the oracle, to bracket width 1e-3
// (hard-capped at 40 iterations); returns the midpoint of the final bracket.
inline double empirical_boundary(PairKind kind, int d, double t, Direction direction,
                                 long budget = 50000) {
  auto [tlo, thi] = regions::admissible_t_range(kind, d, true);
  if (t < tlo - 1e-12 || t > thi + 1e-12)
    throw admissibility_error("empirical_boundary: t outside the admissible range");
  auto feasible = [&](double s) {
    return check(FeasibilityProblem{kind, d, s, t}, budget).status == Status::Feasible;
  };

  if (direction == Direction::Max) {
    double lo = 0.0, hi = 1.0;
    if (feasible(hi)) return hi;
    for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
      const double mid = 0.5 * (lo + hi);
      (feasible(mid) ? lo : hi) = mid;
    }
    return 0.5 * (lo + hi);
  }
  double bottom = regions::admissible_s_range(kind, d, true).first;
  if (feasible(bottom)) return bottom;
  double lo = bottom, hi = 0.0;
  for (int it = 0; it < 40 && hi - lo > 1e-3; ++it) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? hi : lo) = mid;
  }
  return 0.5 * (lo + hi);
}

struct OracleRow {
  double t;
  double s_closed;
  double s_empirical;
  double gap;
  bool admissible;
};

struct OracleComparison {
  std::vector<OracleRow> rows;
  bool pass;  // every admissible row within 2e-3 and nothing skipped
};

// Cross-validation harness: closed-form upper boundary vs the oracle.
inline OracleComparison oracle_vs_theory(PairKind kind, int d,
                                         const std::vector<double>& t_grid,
                                         long budget = 50000) {
  OracleComparison out;
  out.pass = true;
  auto [tlo, thi] = regions::admissible_t_range(kind, d, true);
  for (double t : t_grid) {
    OracleRow row{t, 0.0, 0.0, 0.0, true};
    if (t < tlo - 1e-12 || t > thi + 1e-12) {
      row.admissible = false;
      out.pass = false;
      out.rows.push_back(row);
      continue;
    }
    row.s_closed = regions::boundary_s_max(kind, d, t);
    row.s_empirical = empirical_boundary(kind, d, t, Direction::Max, budget);
    row.gap = std::abs(row.s_closed - row.s_empirical);
    if (row.gap > 2e-3) out.pass = false;
    out.rows.push_back(row);
  }
  return out;
}

}  // namespace feasibility
}  // namespace qcompat

#endif  // QCOMPAT_FEASIBILITY_HPP

#ifndef QCOMPAT_COVARIANCE_HPP
#define QCOMPAT_COVARIANCE_HPP

// Weyl-covariance machinery: symmetrization of instruments, the covariant
// instrument <-> vector measure correspondence, induced smeared meters and
// Weyl-covariant channels, canonical vector measures, and the residuals of
// the two constraint equations characterizing joint instruments for
// (Q_s, I_t).

#include <cmath>
#include <utility>
#include <vector>

#include "qcompat/devices.hpp"
#include "qcompat/regions.hpp"

namespace qcompat {
namespace covariance {

using devices::Instrument;
using devices::Meter;
using devices::VectorMeasure;
using numkit::admissibility_error;
using numkit::CMatrix;
using numkit::cx;
using numkit::HermitianMatrix;

enum class VectorMeasureKind { Optimal, Tilde, TildeMinus, Corner };

namespace detail {

inline Meter canonical_q(int d) { return devices::sharp_meter(devices::standard_basis(d)); }
inline Meter canonical_p(int d) {
  return devices::sharp_meter(devices::fourier_conjugate(devices::standard_basis(d)));
}

// Choi transform of rho -> W J(W* rho W) W*: B' = (conj(W) (x) W) B (...)^dag.
inline CMatrix conjugated_choi(const CMatrix& block, const CMatrix& w) {
  CMatrix lift = numkit::kron(w.conjugate(), w);
  return lift * block * lift.adjoint();
}

}  // namespace detail

// Largest violation of W(x,y) J(z, rho) W(x,y)* = J(x+z, W(x,y) rho W(x,y)*)
// over all x, y, z and the operator basis rho in {W(a,b)} (a spanning set, so
// a small residual is a hard guarantee).
inline double covariance_residual(const Instrument& j) {
  const int d = j.dim_in();
  double worst = 0.0;
  for (int x = 0; x < d; ++x)
    for (int y = 0; y < d; ++y) {
      CMatrix w = devices::weyl(d, x, y);
      for (int z = 0; z < d; ++z)
        for (int a = 0; a < d; ++a)
          for (int b = 0; b < d; ++b) {
            CMatrix rho = devices::weyl(d, a, b);
            CMatrix lhs = w * j.branch_apply(z, rho) * w.adjoint();
            CMatrix rhs = j.branch_apply((x + z) % d, w * rho * w.adjoint());
            worst = std::max(worst, numkit::max_abs_diff(lhs, rhs));
          }
    }
  return worst;
}

// Group average over the Weyl orbit; a projection onto W-covariant
// instruments that preserves the induced meter and the total channel.
inline Instrument symmetrize(const Instrument& j) {
  const int d = j.dim_in();
  std::vector<CMatrix> blocks(d, CMatrix(d * d, d * d));
  for (int x = 0; x < d; ++x)
    for (int y = 0; y < d; ++y) {
      CMatrix w = devices::weyl(d, x, y);
      for (int z = 0; z < d; ++z) {
        const int src = ((z - x) % d + d) % d;
        blocks[z] += detail::conjugated_choi(j.branch(src).mat(), w);
      }
    }
  std::vector<HermitianMatrix> out;
  out.reserve(d);
  for (int z = 0; z < d; ++z) out.emplace_back(blocks[z] * cx(1.0 / (d * d)), 1e-10);
  return Instrument(d, d, std::move(out));
}

// W-covariant instrument determined by a vector measure S. In the canonical
// bases the branch action reduces to
//   J(z, E_ij) = sum_x E_{i-x, j-x} S(x)_{z-i, z-j},
// the matrix-element form of the correspondence.
inline Instrument from_vector_measure(const VectorMeasure& vm) {
  const int d = vm.dim();
  std::vector<HermitianMatrix> blocks;
  blocks.reserve(d);
  for (int z = 0; z < d; ++z) {
    CMatrix b(d * d, d * d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j)
        for (int a = 0; a < d; ++a)
          for (int bb = 0; bb < d; ++bb) {
            const int x = ((i - a) % d + d) % d;
            if (x != ((j - bb) % d + d) % d) continue;
            const int r = ((z - i) % d + d) % d;
            const int c = ((z - j) % d + d) % d;
            b(i * d + a, j * d + bb) = vm.at(x)(r, c);
          }
    blocks.emplace_back(b, 1e-10);
  }
  return Instrument(d, d, std::move(blocks));
}

// q(z) = tr(Q(z) sum_x S(x)) and p(x,z) = tr(P(z) S(x)): the smearing of the
// induced meter and the Kraus distribution of the induced covariant channel.
struct InducedDistributions {
  std::vector<double> q;               // over Z_d
  std::vector<std::vector<double>> p;  // p[x][z] over Z_d x Z_d
};

inline InducedDistributions induced_distributions(const VectorMeasure& vm) {
  const int d = vm.dim();
  Meter qm = detail::canonical_q(d);
  Meter pm = detail::canonical_p(d);
  CMatrix total(d, d);
  for (int x = 0; x < d; ++x) total += vm.at(x).mat();

  InducedDistributions out;
  out.q.resize(d);
  for (int z = 0; z < d; ++z) out.q[z] = (qm.effect(z).mat() * total).trace().real();
  out.p.assign(d, std::vector<double>(d));
  for (int x = 0; x < d; ++x)
    for (int z = 0; z < d; ++z)
      out.p[x][z] = (pm.effect(z).mat() * vm.at(x).mat()).trace().real();
  return out;
}

// Residuals of the two constraint equations
//   tr(Q(z) sum_x S(x)) = s delta_{z,0} + (1-s)/d
//   tr(P(z) S(x))       = t delta_{x,0} delta_{z,0} + (1-t)/d^2 ;
// both vanish exactly when from_vector_measure(vm) is a joint instrument for
// (Q_s, I_t).
struct ConstraintResidual {
  double meter_residual;
  double channel_residual;
};

inline ConstraintResidual constraint_residual(const VectorMeasure& vm, double s,
                                              double t) {
  const int d = vm.dim();
  InducedDistributions dist = induced_distributions(vm);
  ConstraintResidual r{0.0, 0.0};
  for (int z = 0; z < d; ++z) {
    const double target = (z == 0 ? s : 0.0) + (1.0 - s) / d;
    r.meter_residual = std::max(r.meter_residual, std::abs(dist.q[z] - target));
  }
  for (int x = 0; x < d; ++x)
    for (int z = 0; z < d; ++z) {
      const double target = (x == 0 && z == 0 ? t : 0.0) + (1.0 - t) / (d * d);
      r.channel_residual = std::max(r.channel_residual, std::abs(dist.p[x][z] - target));
    }
  return r;
}

// The vector measures of the named optimal instruments: each S(x) is a
// positive multiple of a projection, so positivity is automatic.
inline VectorMeasure canonical_vector_measure(VectorMeasureKind kind, int d,
                                              double param = 0.0) {
  Meter qm = detail::canonical_q(d);
  Meter pm = detail::canonical_p(d);
  const CMatrix q0 = qm.effect(0).mat();
  const CMatrix p0 = pm.effect(0).mat();
  const CMatrix eye = CMatrix::identity(d);

  std::vector<HermitianMatrix> s;
  s.reserve(d);
  switch (kind) {
    case VectorMeasureKind::Optimal:
    case VectorMeasureKind::Tilde: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      const double ka = (kind == VectorMeasureKind::Optimal) ? c.a : c.b;
      const double kb = (kind == VectorMeasureKind::Optimal) ? c.b : c.a;
      for (int x = 0; x < d; ++x) {
        CMatrix k = eye * cx(ka);
        if (x == 0) k += p0 * cx(d * kb);
        s.emplace_back(k * q0 * k * cx(1.0 / d), 1e-10);
      }
      break;
    }
    case VectorMeasureKind::TildeMinus: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      for (int x = 0; x < d; ++x) {
        CMatrix k = eye * cx(c.b);
        if (x == 0) k -= p0 * cx(d * c.a + 2.0 * c.b);
        const CMatrix& qmx = qm.effect(((-x) % d + d) % d).mat();
        s.emplace_back(k * qmx * k * cx(1.0 / d), 1e-10);
      }
      break;
    }
    case VectorMeasureKind::Corner: {
      if (d < 3)
        throw admissibility_error("canonical_vector_measure: corner requires d >= 3");
      CMatrix diff = q0 - p0;
      CMatrix proj = diff * diff * cx(d / (d - 1.0));
      for (int x = 0; x < d; ++x) {
        CMatrix v(d, d);
        if (x == 0) {
          v = (eye - proj) * cx(1.0 / (d - 2.0));
        } else {
          v = (eye - q0) * cx(d / ((d - 1.0) * (d - 1.0)));
        }
        s.emplace_back(v * cx(1.0 / (d + 1.0)), 1e-10);
      }
      break;
    }
  }
  return VectorMeasure(d, std::move(s));
}

}  // namespace covariance
}  // namespace qcompat

#endif  // QCOMPAT_COVARIANCE_HPP

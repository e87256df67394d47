#ifndef QCOMPAT_CONSTRUCTIONS_HPP
#define QCOMPAT_CONSTRUCTIONS_HPP

// Constructors for the explicit optimal joint devices (meters, cloners,
// instruments) and verifiers checking their margin identities and positivity.

#include <cmath>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "qcompat/devices.hpp"
#include "qcompat/regions.hpp"

namespace qcompat {
namespace constructions {

using devices::Channel;
using devices::Instrument;
using devices::Meter;
using devices::NoiseBounds;
using numkit::admissibility_error;
using numkit::CMatrix;
using numkit::cx;
using numkit::HermitianMatrix;

enum class JointMeterKind { Optimal, Tilde, Minus, Corner };
enum class ClonerKind { Optimal, Tilde, Corner };
enum class InstrumentKind {
  Optimal,
  Tilde,
  TildeMinus,
  Corner,
  Luders,
  LudersReflect,
  LudersCornerPost
};

// F (xi (x) zeta) = zeta (x) xi.
inline CMatrix flip_operator(int d) {
  CMatrix f(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) f(i * d + j, j * d + i) = 1.0;
  return f;
}

// Projections onto the symmetric (h = +1) / antisymmetric (h = -1) subspace.
inline CMatrix exchange_projector(int d, int h) {
  CMatrix s = CMatrix::identity(d * d);
  s += flip_operator(d) * cx(h);
  return s * cx(0.5);
}

namespace detail {

// Q_s(x)^{1/2} = a_1(s) Q(x) + b(s)/sqrt(d) * 1, valid on [m1, 1].
inline CMatrix noisy_sqrt(const Meter& q, int x, double s) {
  const int d = q.dim();
  const regions::NoiseCoeffs c = regions::noise_coeffs(1, d, s);
  return q.effect(x).mat() * cx(c.a) +
         CMatrix::identity(d) * cx(c.b / std::sqrt(static_cast<double>(d)));
}

inline void require_sharp_mub(const Meter& q, const Meter& p) {
  if (!devices::is_sharp(q) || !devices::is_sharp(p))
    throw std::invalid_argument("joint device: meters must be sharp");
  if (!devices::is_mutually_unbiased(q, p, 1e-9))
    throw std::invalid_argument("joint device: meters must be mutually unbiased");
}

}  // namespace detail

inline Meter joint_meter(JointMeterKind kind, const Meter& q, const Meter& p,
                         double param = 0.0) {
  detail::require_sharp_mub(q, p);
  const int d = q.dim();
  std::vector<HermitianMatrix> effects;
  effects.reserve(d * d);

  switch (kind) {
    case JointMeterKind::Optimal: {
      // G(x,y) = Q_s(x)^{1/2} P(y) Q_s(x)^{1/2}
      for (int x = 0; x < d; ++x) {
        CMatrix r = detail::noisy_sqrt(q, x, param);
        for (int y = 0; y < d; ++y) effects.emplace_back(r * p.effect(y).mat() * r);
      }
      break;
    }
    case JointMeterKind::Tilde: {
      // G(x,y) = P_t(y)^{1/2} Q(x) P_t(y)^{1/2}
      for (int x = 0; x < d; ++x)
        for (int y = 0; y < d; ++y) {
          CMatrix r = detail::noisy_sqrt(p, y, param);
          effects.emplace_back(r * q.effect(x).mat() * r);
        }
      break;
    }
    case JointMeterKind::Minus: {
      if (d != 2)
        throw admissibility_error("joint_meter: the minus kind exists only for d = 2");
      // G(x,y) = Q_s(x)^{1/2} P_{-1}(y) Q_s(x)^{1/2} = Q_s(x) - G_opt(x,y)
      for (int x = 0; x < 2; ++x) {
        CMatrix r = detail::noisy_sqrt(q, x, param);
        for (int y = 0; y < 2; ++y) {
          CMatrix p_rev = CMatrix::identity(2) - p.effect(y).mat();
          effects.emplace_back(r * p_rev * r);
        }
      }
      break;
    }
    case JointMeterKind::Corner: {
      if (d < 3)
        throw admissibility_error("joint_meter: the corner kind requires d >= 3");
      // (1/(d(d-2))) [1 - d/(d-1) (Q(x)-P(y))^2]; the subtrahend is the
      // projection onto span{phi_x, psi_y}.
      for (int x = 0; x < d; ++x)
        for (int y = 0; y < d; ++y) {
          CMatrix diff = q.effect(x).mat() - p.effect(y).mat();
          CMatrix e = CMatrix::identity(d) - diff * diff * cx(d / (d - 1.0));
          effects.emplace_back(e * cx(1.0 / (d * (d - 2.0))));
        }
      break;
    }
  }
  return Meter(d, std::move(effects), std::make_pair(d, d));
}

inline Channel cloner(ClonerKind kind, int d, double param = 0.0) {
  if (d < 2) throw numkit::dimension_error("cloner: d >= 2 required");
  switch (kind) {
    case ClonerKind::Optimal:
    case ClonerKind::Tilde: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      const double ka = (kind == ClonerKind::Optimal) ? c.a : c.b;
      const double kb = (kind == ClonerKind::Optimal) ? c.b : c.a;
      CMatrix k = CMatrix::identity(d * d) * cx(ka) + flip_operator(d) * cx(kb);
      return Channel::from_action(d, d * d, [d, k](const CMatrix& rho) {
        return k * numkit::kron(rho, CMatrix::identity(d) * cx(1.0 / d)) * k;
      });
    }
    case ClonerKind::Corner: {
      CMatrix sp = exchange_projector(d, +1);
      CMatrix sm = exchange_projector(d, -1);
      const double norm = 1.0 / (static_cast<double>(d) * d - 2.0);
      return Channel::from_action(d, d * d, [=](const CMatrix& rho) {
        CMatrix acc = CMatrix::identity(d * d) * rho.trace();
        CMatrix re = numkit::kron(rho, CMatrix::identity(d));
        acc -= sp * re * sp * cx(2.0 / (d + 1.0));
        acc -= sm * re * sm * cx(2.0 / (d - 1.0));
        return acc * cx(norm);
      });
    }
  }
  throw admissibility_error("cloner: unreachable");
}

inline Instrument instrument(InstrumentKind kind, const Meter& q, double param = 0.0) {
  if (!devices::is_sharp(q)) throw std::invalid_argument("instrument: meter must be sharp");
  const int d = q.dim();
  const NoiseBounds nb(d);
  const CMatrix eye = CMatrix::identity(d);

  auto from = [&](auto&& f) { return Instrument::from_actions(d, d, d, f); };

  switch (kind) {
    case InstrumentKind::Optimal: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      return from([=, &q](int x, const CMatrix& rho) {
        const CMatrix& qx = q.effect(x).mat();
        CMatrix acc = eye * ((rho * qx).trace() * cx(c.a * c.a));
        acc += (rho * qx + qx * rho) * cx(c.a * c.b);
        acc += rho * cx(c.b * c.b);
        return acc * cx(1.0 / d);
      });
    }
    case InstrumentKind::Tilde: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      return from([=, &q](int x, const CMatrix& rho) {
        const CMatrix& qx = q.effect(x).mat();
        CMatrix acc = eye * ((rho * qx).trace() * cx(c.b * c.b));
        acc += (rho * qx + qx * rho) * cx(c.a * c.b);
        acc += rho * cx(c.a * c.a);
        return acc * cx(1.0 / d);
      });
    }
    case InstrumentKind::TildeMinus: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      const double cc = c.a + 2.0 * c.b / d;
      return from([=, &q](int x, const CMatrix& rho) {
        const CMatrix& qx = q.effect(x).mat();
        CMatrix k = eye * cx(cc) - qx * cx(c.b);
        CMatrix acc = qx * ((rho * (eye - qx)).trace() * cx(c.b * c.b));
        acc += k * rho * k;
        return acc * cx(1.0 / d);
      });
    }
    case InstrumentKind::Corner: {
      if (d < 3)
        throw admissibility_error("instrument: the corner kind requires d >= 3");
      return from([=, &q](int x, const CMatrix& rho) {
        const CMatrix& qx = q.effect(x).mat();
        CMatrix acc = (qx * rho + rho * qx - rho) * cx(1.0 / (d - 2.0));
        CMatrix prep(d, d);
        for (int z = 0; z < d; ++z)
          prep += q.effect(z).mat() * (rho * q.effect(z).mat()).trace();
        prep -= qx * ((rho * qx).trace() * cx(static_cast<double>(d)));
        acc += prep * cx(1.0 / ((d - 1.0) * (d - 2.0)));
        acc += eye * ((rho * (eye - qx)).trace() * cx(d / (d - 1.0)));
        return acc * cx(1.0 / (static_cast<double>(d) * d - 1.0));
      });
    }
    case InstrumentKind::Luders: {
      regions::noise_coeffs(1, d, param);  // admissibility gate
      return from([=, &q](int x, const CMatrix& rho) {
        CMatrix r = detail::noisy_sqrt(q, x, param);
        return r * rho * r;
      });
    }
    case InstrumentKind::LudersReflect: {
      regions::noise_coeffs(1, d, param);
      return from([=, &q](int x, const CMatrix& rho) {
        CMatrix r = detail::noisy_sqrt(q, x, param);
        CMatrix u = eye - q.effect(x).mat() * cx(2.0);
        return u * r * rho * r * u;
      });
    }
    case InstrumentKind::LudersCornerPost: {
      if (d < 3)
        throw admissibility_error("instrument: corner postprocessing requires d >= 3");
      // The conditional channel is trace preserving only on the range of
      // 1 - Q(x), i.e. on the posterior states of the s = m1 Luders branch.
      if (std::abs(param - nb.m1) > 1e-9)
        throw admissibility_error("instrument: corner postprocessing requires s = m1");
      return from([=, &q](int x, const CMatrix& rho) {
        const CMatrix proj = eye - q.effect(x).mat();
        CMatrix mid = proj * rho * proj;
        CMatrix acc(d, d);
        for (int z = 0; z < d; ++z) {
          if (z == x) continue;
          CMatrix az = eye * cx(1.0 / (d - 1.0)) - q.effect(z).mat();
          acc += az * mid * az;
        }
        return acc * cx(1.0 / (d - 2.0));
      });
    }
  }
  throw admissibility_error("instrument: unreachable");
}

// G(x,y) = J^dag(x, P(y)); joint meter for the induced meter of J and the
// adjoint image of P under the total channel.
inline Meter sequential_compose(const Instrument& j, const Meter& p) {
  if (j.dim_out() != p.dim())
    throw numkit::dimension_error("sequential_compose: dimension mismatch");
  std::vector<HermitianMatrix> effects;
  effects.reserve(j.n_outcomes() * p.n_outcomes());
  for (int x = 0; x < j.n_outcomes(); ++x)
    for (int y = 0; y < p.n_outcomes(); ++y)
      effects.emplace_back(j.branch_adjoint(x, p.effect(y).mat()), 1e-11);
  return Meter(j.dim_in(), std::move(effects),
               std::make_pair(j.n_outcomes(), p.n_outcomes()));
}

// Phi_Q(rho) = sum_x tr(rho Q(x)) Q(x).
inline Channel measure_and_prepare(const Meter& q) {
  if (!devices::is_sharp(q))
    throw std::invalid_argument("measure_and_prepare: meter must be sharp");
  const int d = q.dim();
  return Channel::from_action(d, d, [&q, d](const CMatrix& rho) {
    CMatrix acc(d, d);
    for (int x = 0; x < q.n_outcomes(); ++x)
      acc += q.effect(x).mat() * (rho * q.effect(x).mat()).trace();
    return acc;
  });
}

// I'_t = t rho + (1-t) Phi_Q(rho): depolarizing noise replaced by the
// measure-and-prepare channel. On meters unbiased with Q the adjoint acts
// exactly like the depolarizer.
inline Channel q_biased_depolarizer(const Meter& q, double t) {
  if (!devices::is_sharp(q))
    throw std::invalid_argument("q_biased_depolarizer: meter must be sharp");
  const int d = q.dim();
  const NoiseBounds nb(d);
  if (t < nb.m2 - 1e-12 || t > 1.0 + 1e-12)
    throw admissibility_error("q_biased_depolarizer: t outside [m2, 1]");
  return Channel::from_action(d, d, [&q, d, t](const CMatrix& rho) {
    CMatrix acc = rho * cx(t);
    for (int x = 0; x < q.n_outcomes(); ++x)
      acc += q.effect(x).mat() * ((rho * q.effect(x).mat()).trace() * cx(1.0 - t));
    return acc;
  });
}

// ---------------------------------------------------------------------------
// Verification

struct VerifyReport {
  double max_margin_residual = 0.0;
  double min_psd_margin = 0.0;
  bool pass = false;
  // Noise parameters of the expected margin pair.
  double expected_param_1 = 0.0;
  double expected_param_2 = 0.0;
  // Depolarizing parameters recovered from channel margins, when they apply.
  std::optional<double> detected_r_1;
  std::optional<double> detected_r_2;
};

namespace detail {

inline double meter_diff(const Meter& a, const Meter& b) {
  double m = 0.0;
  for (int x = 0; x < a.n_outcomes(); ++x)
    m = std::max(m, numkit::max_abs_diff(a.effect(x).mat(), b.effect(x).mat()));
  return m;
}

// Expected (first, second) margin noise parameters for each joint-meter kind.
inline std::pair<double, double> joint_meter_margin_params(JointMeterKind kind, int d,
                                                           double param) {
  const double m1 = regions::m1_of(d);
  switch (kind) {
    case JointMeterKind::Optimal: {
      const double a = regions::noise_coeffs(1, d, param).a;
      return {param, 1.0 - a * a};
    }
    case JointMeterKind::Tilde: {
      const double a = regions::noise_coeffs(1, d, param).a;
      return {1.0 - a * a, param};
    }
    case JointMeterKind::Minus: {
      const double a = regions::noise_coeffs(1, d, param).a;
      return {param, -(1.0 - a * a)};
    }
    case JointMeterKind::Corner:
      return {m1, m1};
  }
  return {0.0, 0.0};
}

inline std::pair<double, double> cloner_margin_params(ClonerKind kind, int d,
                                                      double param) {
  const double m2 = regions::m2_of(d);
  switch (kind) {
    case ClonerKind::Optimal: {
      const double a = regions::noise_coeffs(2, d, param).a;
      return {param, 1.0 - a * a};
    }
    case ClonerKind::Tilde: {
      const double a = regions::noise_coeffs(2, d, param).a;
      return {1.0 - a * a, param};
    }
    case ClonerKind::Corner:
      return {m2, m2};
  }
  return {0.0, 0.0};
}

}  // namespace detail

inline VerifyReport verify_joint_meter(const Meter& g, JointMeterKind kind,
                                       const Meter& q, const Meter& p, double param,
                                       double res_tol = 1e-10, double psd_tol = 1e-10) {
  VerifyReport r;
  auto [s1, s2] = detail::joint_meter_margin_params(kind, q.dim(), param);
  r.expected_param_1 = s1;
  r.expected_param_2 = s2;
  Meter margin1 = devices::joint_meter_margin(g, 1);
  Meter margin2 = devices::joint_meter_margin(g, 2);
  r.max_margin_residual =
      std::max(detail::meter_diff(margin1, devices::noisy_meter(q, s1)),
               detail::meter_diff(margin2, devices::noisy_meter(p, s2)));
  r.min_psd_margin = g.min_psd_margin();
  r.pass = r.max_margin_residual <= res_tol && r.min_psd_margin >= -psd_tol;
  return r;
}

inline VerifyReport verify_cloner(const Channel& c, ClonerKind kind, double param,
                                  double res_tol = 1e-10, double psd_tol = 1e-10) {
  VerifyReport r;
  const int d = c.in_dim();
  auto [r1, r2] = detail::cloner_margin_params(kind, d, param);
  r.expected_param_1 = r1;
  r.expected_param_2 = r2;

  // Margins keep clone 1 (trace out the second output factor) and clone 2.
  CMatrix keep1 = numkit::trace_out(c.choi().mat(), {d, d, d}, 2);
  CMatrix keep2 = numkit::trace_out(c.choi().mat(), {d, d, d}, 1);
  r.max_margin_residual =
      std::max(numkit::max_abs_diff(keep1, devices::depolarizing_choi(d, r1)),
               numkit::max_abs_diff(keep2, devices::depolarizing_choi(d, r2)));
  r.min_psd_margin = numkit::psd_margin(c.choi());
  Channel m1(d, d, HermitianMatrix(keep1, 1e-9), 1e-8);
  Channel m2(d, d, HermitianMatrix(keep2, 1e-9), 1e-8);
  r.detected_r_1 = devices::detect_depolarizing(m1, 1e-8);
  r.detected_r_2 = devices::detect_depolarizing(m2, 1e-8);
  r.pass = r.max_margin_residual <= res_tol && r.min_psd_margin >= -psd_tol;
  return r;
}

inline VerifyReport verify_instrument(const Instrument& j, InstrumentKind kind,
                                      const Meter& q, double param,
                                      double res_tol = 1e-10, double psd_tol = 1e-10) {
  VerifyReport r;
  const int d = j.dim_in();
  const NoiseBounds nb(d);

  double meter_param = 0.0;
  std::optional<double> channel_param;       // depolarizing expectation
  std::optional<double> biased_channel_param;  // Q-biased expectation
  switch (kind) {
    case InstrumentKind::Optimal: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      meter_param = param;
      channel_param = 1.0 - c.a * c.a;
      break;
    }
    case InstrumentKind::Tilde: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      meter_param = 1.0 - c.a * c.a;
      channel_param = param;
      break;
    }
    case InstrumentKind::TildeMinus: {
      regions::NoiseCoeffs c = regions::noise_coeffs(2, d, param);
      meter_param = -(2.0 / d) * c.b * (c.a + 2.0 * c.b / d);
      channel_param = param;
      break;
    }
    case InstrumentKind::Corner:
      meter_param = nb.m1;
      channel_param = nb.m2;
      break;
    case InstrumentKind::Luders: {
      regions::NoiseCoeffs c = regions::noise_coeffs(1, d, param);
      meter_param = param;
      biased_channel_param = 1.0 - c.a * c.a;
      break;
    }
    case InstrumentKind::LudersReflect: {
      regions::NoiseCoeffs c = regions::noise_coeffs(1, d, param);
      const double shifted = c.a + 2.0 * c.b / std::sqrt(static_cast<double>(d));
      meter_param = param;
      biased_channel_param = 1.0 - shifted * shifted;
      break;
    }
    case InstrumentKind::LudersCornerPost:
      // Only the induced meter has a stated identity for this kind.
      meter_param = nb.m1;
      break;
  }

  r.expected_param_1 = meter_param;
  Meter induced = devices::instrument_induced_meter(j);
  r.max_margin_residual =
      detail::meter_diff(induced, devices::noisy_meter(q, meter_param));

  Channel total = devices::instrument_total_channel(j, 1e-8);
  if (channel_param) {
    r.expected_param_2 = *channel_param;
    r.max_margin_residual = std::max(
        r.max_margin_residual, numkit::max_abs_diff(total.choi().mat(),
                                                    devices::depolarizing_choi(d, *channel_param)));
    r.detected_r_2 = devices::detect_depolarizing(total, 1e-8);
  } else if (biased_channel_param) {
    // The reflected-Luders channel parameter ranges down to m1, outside the
    // public I'_t constructor gate, so assemble the expected Choi directly.
    const double t = *biased_channel_param;
    r.expected_param_2 = t;
    CMatrix expect = devices::maximally_entangled_projector(d) * cx(t);
    expect += measure_and_prepare(q).choi().mat() * cx(1.0 - t);
    r.max_margin_residual = std::max(
        r.max_margin_residual, numkit::max_abs_diff(total.choi().mat(), expect));
  } else {
    r.expected_param_2 = std::numeric_limits<double>::quiet_NaN();
  }

  double psd = 0.0;
  for (int x = 0; x < j.n_outcomes(); ++x)
    psd = std::min(psd, numkit::psd_margin(j.branch(x)));
  r.min_psd_margin = psd;
  r.pass = r.max_margin_residual <= res_tol && r.min_psd_margin >= -psd_tol;
  return r;
}

}  // namespace constructions
}  // namespace qcompat

#endif  // QCOMPAT_CONSTRUCTIONS_HPP

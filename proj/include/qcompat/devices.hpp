#ifndef QCOMPAT_DEVICES_HPP
#define QCOMPAT_DEVICES_HPP

// Value types and constructors for qudit meters, channels, instruments,
// vector measures, Weyl operators and the Fourier-conjugate basis.
//
// Conventions fixed here and used throughout:
//   * omega = exp(2*pi*i/d) is the canonical d-th root of unity.
//   * Channels store normalized Choi operators (trace 1 when trace
//     preserving); instrument branches store unnormalized Choi blocks so the
//     blocks of one instrument sum to dim_in times the total-channel Choi.
//   * Subsystem 1 is always the slow (left) tensor factor.
//   * Outcome labels are integers 0..n-1; product outcomes (x,y) are
//     serialized as x*n2 + y.

#include <cmath>
#include <functional>
#include <optional>
#include <utility>
#include <vector>

#include "qcompat/numkit.hpp"

namespace qcompat {
namespace devices {

using numkit::admissibility_error;
using numkit::CMatrix;
using numkit::cx;
using numkit::dimension_error;
using numkit::HermitianMatrix;

inline cx omega_power(int d, long long k) {
  const long long r = ((k % d) + d) % d;
  const double ang = 2.0 * M_PI * static_cast<double>(r) / d;
  return cx(std::cos(ang), std::sin(ang));
}

// Minimal admissible noise parameters: m1 for meters, m2 for channels.
struct NoiseBounds {
  int dim;
  double m1;
  double m2;
  explicit NoiseBounds(int d)
      : dim(d), m1(-1.0 / (d - 1)), m2(-1.0 / (static_cast<double>(d) * d - 1)) {
    if (d < 2) throw dimension_error("NoiseBounds: d >= 2 required");
  }
};

// d orthonormal column vectors in C^d.
class Basis {
 public:
  Basis(int dim, CMatrix vectors, double tol = numkit::kStructuralTol)
      : dim_(dim), v_(std::move(vectors)) {
    if (v_.rows() != dim_ || v_.cols() != dim_)
      throw dimension_error("Basis: vectors must be d x d");
    CMatrix gram = v_.adjoint() * v_;
    if (numkit::max_abs_diff(gram, CMatrix::identity(dim_)) > tol)
      throw std::invalid_argument("Basis: columns are not orthonormal");
  }

  int dim() const { return dim_; }
  const CMatrix& vectors() const { return v_; }

  CMatrix vector(int k) const {
    CMatrix col(dim_, 1);
    for (int i = 0; i < dim_; ++i) col(i, 0) = v_(i, k);
    return col;
  }

  // Rank-1 projector |v_k><v_k|.
  CMatrix projector(int k) const {
    CMatrix p(dim_, dim_);
    for (int i = 0; i < dim_; ++i)
      for (int j = 0; j < dim_; ++j) p(i, j) = v_(i, k) * std::conj(v_(j, k));
    return p;
  }

 private:
  int dim_;
  CMatrix v_;
};

inline Basis standard_basis(int d) { return Basis(d, CMatrix::identity(d)); }

// POVM: outcome-indexed PSD effects summing to the identity.
class Meter {
 public:
  Meter(int dim, std::vector<HermitianMatrix> effects,
        std::optional<std::pair<int, int>> product_shape = std::nullopt,
        double tol = numkit::kStructuralTol)
      : dim_(dim), effects_(std::move(effects)), product_shape_(product_shape) {
    if (effects_.empty()) throw dimension_error("Meter: no effects");
    CMatrix sum(dim_, dim_);
    for (const auto& e : effects_) {
      if (e.dim() != dim_) throw dimension_error("Meter: effect dim mismatch");
      if (numkit::psd_margin(e) < -tol)
        throw std::invalid_argument("Meter: effect is not PSD");
      sum += e.mat();
    }
    if (numkit::max_abs_diff(sum, CMatrix::identity(dim_)) > tol)
      throw std::invalid_argument("Meter: effects do not sum to identity");
    if (product_shape_) {
      const auto [n1, n2] = *product_shape_;
      if (n1 * n2 != static_cast<int>(effects_.size()))
        throw dimension_error("Meter: product shape mismatch");
    }
  }

  int dim() const { return dim_; }
  int n_outcomes() const { return static_cast<int>(effects_.size()); }
  const HermitianMatrix& effect(int x) const { return effects_.at(x); }
  const std::vector<HermitianMatrix>& effects() const { return effects_; }
  const std::optional<std::pair<int, int>>& product_shape() const {
    return product_shape_;
  }
  // Effect for the product outcome (x, y).
  const HermitianMatrix& effect(int x, int y) const {
    if (!product_shape_) throw dimension_error("Meter: outcomes are not a product");
    return effects_.at(x * product_shape_->second + y);
  }

  double min_psd_margin() const {
    double m = 0.0;
    bool first = true;
    for (const auto& e : effects_) {
      double v = numkit::psd_margin(e);
      m = first ? v : std::min(m, v);
      first = false;
    }
    return m;
  }

 private:
  int dim_;
  std::vector<HermitianMatrix> effects_;
  std::optional<std::pair<int, int>> product_shape_;
};

// CPTP map stored as a normalized Choi operator on C^in (x) C^out
// (trace 1; partial trace over the output factor equals identity/in_dim).
class Channel {
 public:
  Channel(int in_dim, int out_dim, HermitianMatrix choi,
          double tol = numkit::kStructuralTol)
      : in_(in_dim), out_(out_dim), choi_(std::move(choi)) {
    if (choi_.dim() != in_ * out_) throw dimension_error("Channel: choi dim mismatch");
    if (numkit::psd_margin(choi_) < -tol)
      throw std::invalid_argument("Channel: Choi operator is not PSD (map not CP)");
    CMatrix marg = numkit::trace_out(choi_.mat(), {in_, out_}, 1);
    if (numkit::max_abs_diff(marg, CMatrix::identity(in_) * cx(1.0 / in_)) > tol)
      throw std::invalid_argument("Channel: map is not trace preserving");
  }

  static Channel from_action(int in_dim, int out_dim,
                             const std::function<CMatrix(const CMatrix&)>& f,
                             double tol = numkit::kStructuralTol) {
    CMatrix b(in_dim * out_dim, in_dim * out_dim);
    for (int i = 0; i < in_dim; ++i)
      for (int j = 0; j < in_dim; ++j) {
        CMatrix e(in_dim, in_dim);
        e(i, j) = 1.0;
        CMatrix fe = f(e);
        for (int a = 0; a < out_dim; ++a)
          for (int bb = 0; bb < out_dim; ++bb)
            b(i * out_dim + a, j * out_dim + bb) = fe(a, bb) / cx(in_dim);
      }
    return Channel(in_dim, out_dim, HermitianMatrix(b, 1e-11), tol);
  }

  int in_dim() const { return in_; }
  int out_dim() const { return out_; }
  const HermitianMatrix& choi() const { return choi_; }

  CMatrix apply(const CMatrix& rho) const {
    if (rho.rows() != in_ || rho.cols() != in_)
      throw dimension_error("Channel::apply: state dim mismatch");
    CMatrix r(out_, out_);
    for (int a = 0; a < out_; ++a)
      for (int b = 0; b < out_; ++b) {
        cx acc = 0.0;
        for (int i = 0; i < in_; ++i)
          for (int j = 0; j < in_; ++j)
            acc += rho(i, j) * choi_(i * out_ + a, j * out_ + b);
        r(a, b) = acc * cx(in_);
      }
    return r;
  }

  // Heisenberg picture: A on the output space pulled back to the input space.
  CMatrix adjoint_apply(const CMatrix& a_out) const {
    if (a_out.rows() != out_ || a_out.cols() != out_)
      throw dimension_error("Channel::adjoint_apply: operator dim mismatch");
    CMatrix r(in_, in_);
    for (int i = 0; i < in_; ++i)
      for (int j = 0; j < in_; ++j) {
        cx acc = 0.0;
        for (int a = 0; a < out_; ++a)
          for (int b = 0; b < out_; ++b)
            acc += a_out(a, b) * choi_(j * out_ + b, i * out_ + a);
        r(i, j) = acc * cx(in_);
      }
    return r;
  }

 private:
  int in_, out_;
  HermitianMatrix choi_;
};

// Outcome-indexed CP maps whose sum is a channel. Branches are unnormalized
// Choi blocks; the factor dim_in is applied exactly once, at the Channel
// boundary (total_channel()).
class Instrument {
 public:
  Instrument(int dim_in, int dim_out, std::vector<HermitianMatrix> branches,
             double tol = numkit::kStructuralTol)
      : in_(dim_in), out_(dim_out), branches_(std::move(branches)) {
    if (branches_.empty()) throw dimension_error("Instrument: no branches");
    CMatrix sum(in_ * out_, in_ * out_);
    for (const auto& b : branches_) {
      if (b.dim() != in_ * out_) throw dimension_error("Instrument: branch dim mismatch");
      if (numkit::psd_margin(b) < -tol)
        throw std::invalid_argument("Instrument: branch is not CP");
      sum += b.mat();
    }
    // The branch sum must be a valid (unnormalized) channel Choi.
    CMatrix marg = numkit::trace_out(sum, {in_, out_}, 1);
    if (numkit::max_abs_diff(marg, CMatrix::identity(in_)) > tol * in_)
      throw std::invalid_argument("Instrument: branch sum is not trace preserving");
  }

  static Instrument from_actions(int dim_in, int dim_out, int n_outcomes,
                                 const std::function<CMatrix(int, const CMatrix&)>& f,
                                 double tol = numkit::kStructuralTol) {
    std::vector<HermitianMatrix> blocks;
    blocks.reserve(n_outcomes);
    for (int x = 0; x < n_outcomes; ++x) {
      CMatrix b(dim_in * dim_out, dim_in * dim_out);
      for (int i = 0; i < dim_in; ++i)
        for (int j = 0; j < dim_in; ++j) {
          CMatrix e(dim_in, dim_in);
          e(i, j) = 1.0;
          CMatrix fe = f(x, e);
          for (int a = 0; a < dim_out; ++a)
            for (int bb = 0; bb < dim_out; ++bb)
              b(i * dim_out + a, j * dim_out + bb) = fe(a, bb);
        }
      blocks.emplace_back(b, 1e-11);
    }
    return Instrument(dim_in, dim_out, std::move(blocks), tol);
  }

  int dim_in() const { return in_; }
  int dim_out() const { return out_; }
  int n_outcomes() const { return static_cast<int>(branches_.size()); }
  const HermitianMatrix& branch(int x) const { return branches_.at(x); }
  const std::vector<HermitianMatrix>& branches() const { return branches_; }

  CMatrix branch_apply(int x, const CMatrix& rho) const {
    const HermitianMatrix& b = branches_.at(x);
    CMatrix r(out_, out_);
    for (int a = 0; a < out_; ++a)
      for (int bb = 0; bb < out_; ++bb) {
        cx acc = 0.0;
        for (int i = 0; i < in_; ++i)
          for (int j = 0; j < in_; ++j)
            acc += rho(i, j) * b(i * out_ + a, j * out_ + bb);
        r(a, bb) = acc;
      }
    return r;
  }

  CMatrix branch_adjoint(int x, const CMatrix& a_out) const {
    const HermitianMatrix& blk = branches_.at(x);
    CMatrix r(in_, in_);
    for (int i = 0; i < in_; ++i)
      for (int j = 0; j < in_; ++j) {
        cx acc = 0.0;
        for (int a = 0; a < out_; ++a)
          for (int b = 0; b < out_; ++b)
            acc += a_out(a, b) * blk(j * out_ + b, i * out_ + a);
        r(i, j) = acc;
      }
    return r;
  }

 private:
  int in_, out_;
  std::vector<HermitianMatrix> branches_;
};

// Outcome-indexed PSD operators with total trace 1 (the covariant-instrument
// reduction object).
class VectorMeasure {
 public:
  VectorMeasure(int dim, std::vector<HermitianMatrix> s,
                double tol = numkit::kStructuralTol)
      : dim_(dim), s_(std::move(s)) {
    if (static_cast<int>(s_.size()) != dim_)
      throw dimension_error("VectorMeasure: needs d operators on Z_d");
    double total = 0.0;
    for (const auto& m : s_) {
      if (m.dim() != dim_) throw dimension_error("VectorMeasure: operator dim mismatch");
      if (numkit::psd_margin(m) < -tol)
        throw std::invalid_argument("VectorMeasure: S(x) is not PSD");
      total += m.trace_real();
    }
    if (std::abs(total - 1.0) > tol)
      throw std::invalid_argument("VectorMeasure: total trace != 1");
  }

  int dim() const { return dim_; }
  const HermitianMatrix& at(int x) const { return s_.at(((x % dim_) + dim_) % dim_); }
  const std::vector<HermitianMatrix>& values() const { return s_; }

 private:
  int dim_;
  std::vector<HermitianMatrix> s_;
};

// ---------------------------------------------------------------------------
// Constructors

inline Meter sharp_meter(const Basis& basis) {
  std::vector<HermitianMatrix> effects;
  effects.reserve(basis.dim());
  for (int x = 0; x < basis.dim(); ++x)
    effects.emplace_back(basis.projector(x), 1e-11);
  return Meter(basis.dim(), std::move(effects));
}

inline bool is_sharp(const Meter& m, double tol = numkit::kStructuralTol) {
  if (m.n_outcomes() != m.dim()) return false;
  for (const auto& e : m.effects()) {
    if (std::abs(e.trace_real() - 1.0) > tol) return false;
    if (numkit::max_abs_diff(e.mat() * e.mat(), e.mat()) > tol) return false;
  }
  return true;
}

// s Q(x) + (1-s)/d * 1 for s in [m1, 1]; s < 0 gives the overnoisy range
// down to the reverse version at s = m1.
inline Meter noisy_meter(const Meter& q, double s, double tol = numkit::kStructuralTol) {
  if (!is_sharp(q)) throw std::invalid_argument("noisy_meter: meter must be sharp");
  const int d = q.dim();
  const NoiseBounds nb(d);
  if (s < nb.m1 - 1e-12 || s > 1.0 + 1e-12)
    throw admissibility_error("noisy_meter: s outside [m1, 1]");
  std::vector<HermitianMatrix> effects;
  effects.reserve(d);
  for (int x = 0; x < d; ++x) {
    CMatrix e = q.effect(x).mat() * cx(s) + CMatrix::identity(d) * cx((1.0 - s) / d);
    effects.emplace_back(e);
  }
  return Meter(d, std::move(effects), std::nullopt, tol);
}

inline CMatrix maximally_entangled_projector(int d) {
  CMatrix p(d * d, d * d);
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) p(i * d + i, j * d + j) = 1.0 / d;
  return p;
}

// Normalized Choi of the depolarizing channel I_r, without the admissibility
// gate (used internally by the detector).
inline CMatrix depolarizing_choi(int d, double r) {
  CMatrix c = maximally_entangled_projector(d) * cx(r);
  for (int k = 0; k < d * d; ++k) c(k, k) += (1.0 - r) / (d * d);
  return c;
}

// I_r = r I + (1-r)/d * 1 tr, CP exactly for r in [m2, 1].
inline Channel depolarizing(int d, double r, double tol = numkit::kStructuralTol) {
  const NoiseBounds nb(d);
  if (r < nb.m2 - 1e-12 || r > 1.0 + 1e-12)
    throw admissibility_error("depolarizing: r outside [m2, 1]");
  return Channel(d, d, HermitianMatrix(depolarizing_choi(d, r)), tol);
}

// W(x,y) phi_z = omega^{yz} phi_{x+z} in the standard basis.
inline CMatrix weyl(int d, int x, int y) {
  if (x < 0 || x >= d || y < 0 || y >= d) throw dimension_error("weyl: x,y in Z_d");
  CMatrix w(d, d);
  for (int z = 0; z < d; ++z) w((x + z) % d, z) = omega_power(d, static_cast<long long>(y) * z);
  return w;
}

// psi_z = F* phi_z with F phi_z = (1/sqrt d) sum_u omega^{-uz} phi_u; the
// output basis is mutually unbiased with the input.
inline Basis fourier_conjugate(const Basis& basis) {
  const int d = basis.dim();
  CMatrix g(d, d);
  const double inv = 1.0 / std::sqrt(static_cast<double>(d));
  for (int u = 0; u < d; ++u)
    for (int z = 0; z < d; ++z)
      g(u, z) = omega_power(d, static_cast<long long>(u) * z) * inv;
  return Basis(d, basis.vectors() * g);
}

inline bool is_mutually_unbiased(const Meter& q, const Meter& p, double tol) {
  if (q.dim() != p.dim()) throw dimension_error("is_mutually_unbiased: dim mismatch");
  const int d = q.dim();
  for (int x = 0; x < q.n_outcomes(); ++x)
    for (int y = 0; y < p.n_outcomes(); ++y) {
      const cx overlap = (q.effect(x).mat() * p.effect(y).mat()).trace();
      if (std::abs(overlap - cx(1.0 / d)) > tol) return false;
    }
  return true;
}

// Marginal meter of a joint meter with product outcomes: side 1 sums over
// the second index, side 2 over the first.
inline Meter joint_meter_margin(const Meter& g, int side,
                                double tol = numkit::kStructuralTol) {
  if (!g.product_shape())
    throw dimension_error("joint_meter_margin: outcome set is not a product");
  const auto [n1, n2] = *g.product_shape();
  const int d = g.dim();
  const int n = (side == 1) ? n1 : n2;
  if (side != 1 && side != 2) throw dimension_error("joint_meter_margin: side is 1 or 2");
  std::vector<HermitianMatrix> effects;
  effects.reserve(n);
  for (int k = 0; k < n; ++k) {
    CMatrix sum(d, d);
    if (side == 1) {
      for (int y = 0; y < n2; ++y) sum += g.effect(k, y).mat();
    } else {
      for (int x = 0; x < n1; ++x) sum += g.effect(x, k).mat();
    }
    effects.emplace_back(sum, 1e-11);
  }
  return Meter(d, std::move(effects), std::nullopt, tol);
}

// M(x) = J^dag(x, 1).
inline Meter instrument_induced_meter(const Instrument& j) {
  std::vector<HermitianMatrix> effects;
  effects.reserve(j.n_outcomes());
  for (int x = 0; x < j.n_outcomes(); ++x)
    effects.emplace_back(j.branch_adjoint(x, CMatrix::identity(j.dim_out())), 1e-11);
  return Meter(j.dim_in(), std::move(effects));
}

inline Channel instrument_total_channel(const Instrument& j,
                                        double tol = numkit::kStructuralTol) {
  CMatrix sum(j.dim_in() * j.dim_out(), j.dim_in() * j.dim_out());
  for (int x = 0; x < j.n_outcomes(); ++x) sum += j.branch(x).mat();
  return Channel(j.dim_in(), j.dim_out(),
                 HermitianMatrix(sum * cx(1.0 / j.dim_in()), 1e-11), tol);
}

// Recovers r when phi is (numerically) a depolarizing channel: the fidelity
// with the maximally entangled state fixes r, then the whole Choi must match.
inline std::optional<double> detect_depolarizing(const Channel& phi,
                                                 double tol = numkit::kStructuralTol) {
  if (phi.in_dim() != phi.out_dim())
    throw dimension_error("detect_depolarizing: square channel required");
  const int d = phi.in_dim();
  cx fid = 0.0;
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) fid += phi.choi()(i * d + i, j * d + j);
  const double r =
      (static_cast<double>(d) * d * (fid.real() / d) - 1.0) / (static_cast<double>(d) * d - 1.0);
  if (numkit::max_abs_diff(phi.choi().mat(), depolarizing_choi(d, r)) > tol)
    return std::nullopt;
  return r;
}

}  // namespace devices
}  // namespace qcompat

#endif  // QCOMPAT_DEVICES_HPP

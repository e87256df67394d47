#ifndef QCOMPAT_NUMKIT_HPP
#define QCOMPAT_NUMKIT_HPP

// Dense complex linear algebra sized for small qudit systems (d <= 4) and
// their 2- and 3-fold tensor products. Everything is a value type; all
// operations are pure functions.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace qcompat {
namespace numkit {

using cx = std::complex<double>;

// Structural checks (Hermiticity, PSD, unitarity).
inline constexpr double kStructuralTol = 1e-10;
// Iterative-solver residuals.
inline constexpr double kIterativeTol = 1e-7;

// Parameter outside the range where the constructed object is a valid
// quantum device (meter / channel / instrument).
class admissibility_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

class dimension_error : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Row-major dense complex matrix.
class CMatrix {
 public:
  CMatrix() : rows_(0), cols_(0) {}
  CMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), a_(static_cast<size_t>(rows) * cols) {
    if (rows < 1 || cols < 1) throw dimension_error("CMatrix: rows, cols >= 1");
  }

  static CMatrix identity(int n) {
    CMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }
  static CMatrix zero(int rows, int cols) { return CMatrix(rows, cols); }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  cx& operator()(int i, int j) { return a_[static_cast<size_t>(i) * cols_ + j]; }
  const cx& operator()(int i, int j) const {
    return a_[static_cast<size_t>(i) * cols_ + j];
  }

  CMatrix& operator+=(const CMatrix& o) {
    check_same_shape(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] += o.a_[k];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    check_same_shape(o);
    for (size_t k = 0; k < a_.size(); ++k) a_[k] -= o.a_[k];
    return *this;
  }
  CMatrix& operator*=(cx s) {
    for (auto& v : a_) v *= s;
    return *this;
  }

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(CMatrix a, cx s) { return a *= s; }
  friend CMatrix operator*(cx s, CMatrix a) { return a *= s; }

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols_ != b.rows_) throw dimension_error("CMatrix multiply: shape mismatch");
    CMatrix c(a.rows_, b.cols_);
    for (int i = 0; i < a.rows_; ++i) {
      for (int k = 0; k < a.cols_; ++k) {
        const cx aik = a(i, k);
        if (aik == cx(0.0, 0.0)) continue;
        for (int j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    }
    return c;
  }

  CMatrix adjoint() const {
    CMatrix c(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) c(j, i) = std::conj((*this)(i, j));
    return c;
  }
  CMatrix transpose() const {
    CMatrix c(cols_, rows_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) c(j, i) = (*this)(i, j);
    return c;
  }
  CMatrix conjugate() const {
    CMatrix c(rows_, cols_);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < cols_; ++j) c(i, j) = std::conj((*this)(i, j));
    return c;
  }

  cx trace() const {
    if (rows_ != cols_) throw dimension_error("trace: square matrix required");
    cx t = 0.0;
    for (int i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& v : a_) m = std::max(m, std::abs(v));
    return m;
  }

  // max_ij |A_ij - conj(A_ji)|
  double hermiticity_defect() const {
    if (rows_ != cols_) return max_abs();
    double m = 0.0;
    for (int i = 0; i < rows_; ++i)
      for (int j = i; j < cols_; ++j)
        m = std::max(m, std::abs((*this)(i, j) - std::conj((*this)(j, i))));
    return m;
  }

  bool all_finite() const {
    for (const auto& v : a_)
      if (!std::isfinite(v.real()) || !std::isfinite(v.imag())) return false;
    return true;
  }

 private:
  void check_same_shape(const CMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw dimension_error("CMatrix: shape mismatch");
  }

  int rows_, cols_;
  std::vector<cx> a_;
};

inline double max_abs_diff(const CMatrix& a, const CMatrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw dimension_error("max_abs_diff: shape mismatch");
  double m = 0.0;
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) m = std::max(m, std::abs(a(i, j) - b(i, j)));
  return m;
}

// Square matrix certified Hermitian within a relative tolerance; entries are
// exactly symmetrized on construction so downstream eigensolves see A = A*.
class HermitianMatrix {
 public:
  HermitianMatrix() = default;
  explicit HermitianMatrix(const CMatrix& m, double rel_tol = 1e-12) {
    if (m.rows() != m.cols())
      throw dimension_error("HermitianMatrix: square matrix required");
    if (!m.all_finite())
      throw std::invalid_argument("HermitianMatrix: non-finite entries");
    const double scale = std::max(m.max_abs(), 1.0);
    if (m.hermiticity_defect() > rel_tol * scale)
      throw std::invalid_argument("HermitianMatrix: input not Hermitian within tolerance");
    m_ = m;
    for (int i = 0; i < m_.rows(); ++i) {
      m_(i, i) = cx(m_(i, i).real(), 0.0);
      for (int j = i + 1; j < m_.cols(); ++j) {
        const cx v = 0.5 * (m_(i, j) + std::conj(m_(j, i)));
        m_(i, j) = v;
        m_(j, i) = std::conj(v);
      }
    }
  }

  int dim() const { return m_.rows(); }
  const CMatrix& mat() const { return m_; }
  const cx& operator()(int i, int j) const { return m_(i, j); }
  double trace_real() const { return m_.trace().real(); }

 private:
  CMatrix m_;
};

// Kronecker product under the row-major convention: subsystem 1 (the left
// factor) is the slow index.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix c(a.rows() * b.rows(), a.cols() * b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < a.cols(); ++j) {
      const cx aij = a(i, j);
      for (int k = 0; k < b.rows(); ++k)
        for (int l = 0; l < b.cols(); ++l)
          c(i * b.rows() + k, j * b.cols() + l) = aij * b(k, l);
    }
  return c;
}

// Traces out factor `which` (0-based) of a square matrix on the tensor
// product with the given factor dimensions, keeping the remaining factors in
// order.
inline CMatrix trace_out(const CMatrix& m, const std::vector<int>& dims, int which) {
  int total = 1;
  for (int d : dims) total *= d;
  if (m.rows() != total || m.cols() != total)
    throw dimension_error("trace_out: dimension mismatch");
  if (which < 0 || which >= static_cast<int>(dims.size()))
    throw dimension_error("trace_out: bad factor index");

  int keep = total / dims[which];
  // Strides for the multi-index (row-major, first factor slowest).
  std::vector<int> stride(dims.size());
  int s = 1;
  for (int f = static_cast<int>(dims.size()) - 1; f >= 0; --f) {
    stride[f] = s;
    s *= dims[f];
  }

  // Map a kept multi-index to a full index with factor `which` set to t.
  std::vector<int> kept_dims;
  std::vector<int> kept_strides;
  for (size_t f = 0; f < dims.size(); ++f) {
    if (static_cast<int>(f) == which) continue;
    kept_dims.push_back(dims[f]);
    kept_strides.push_back(stride[f]);
  }

  auto expand = [&](int kept_index, int t) {
    int full = t * stride[which];
    for (int f = static_cast<int>(kept_dims.size()) - 1; f >= 0; --f) {
      full += (kept_index % kept_dims[f]) * kept_strides[f];
      kept_index /= kept_dims[f];
    }
    return full;
  };

  CMatrix r(keep, keep);
  for (int i = 0; i < keep; ++i)
    for (int j = 0; j < keep; ++j) {
      cx acc = 0.0;
      for (int t = 0; t < dims[which]; ++t) acc += m(expand(i, t), expand(j, t));
      r(i, j) = acc;
    }
  return r;
}

// Partial trace on C^{d1} (x) C^{d2}; keep selects the surviving subsystem
// (1 = left/slow factor, 2 = right/fast factor).
inline HermitianMatrix partial_trace(const HermitianMatrix& m, int keep, int d1, int d2) {
  if (m.dim() != d1 * d2) throw dimension_error("partial_trace: dim != d1*d2");
  if (keep != 1 && keep != 2) throw dimension_error("partial_trace: keep must be 1 or 2");
  return HermitianMatrix(trace_out(m.mat(), {d1, d2}, keep == 1 ? 1 : 0));
}

struct EigenSystem {
  std::vector<double> values;  // ascending
  CMatrix vectors;             // unitary, column k pairs with values[k]
};

// Cyclic complex Jacobi eigensolver with threshold sweeps. Dimensions here
// never exceed ~81, so O(n^3) per sweep is fine and the iteration is fully
// deterministic.
inline EigenSystem hermitian_eigensystem(const HermitianMatrix& h) {
  const int n = h.dim();
  CMatrix a = h.mat();
  CMatrix v = CMatrix::identity(n);

  const double scale = std::max(a.max_abs(), 1.0);
  const double stop = 1e-15 * scale;
  const int max_sweeps = 100;

  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    double off = 0.0;
    for (int p = 0; p < n; ++p)
      for (int q = p + 1; q < n; ++q) off = std::max(off, std::abs(a(p, q)));
    if (off <= stop) break;
    // Annihilating elements below the sweep threshold wastes rotations.
    const double thresh = (sweep < 3) ? 0.1 * off : stop;

    for (int p = 0; p < n; ++p) {
      for (int q = p + 1; q < n; ++q) {
        const cx apq = a(p, q);
        const double beta = std::abs(apq);
        if (beta <= thresh) continue;

        // Phase factor turning the pivot real, then a real rotation.
        const cx phase = apq / beta;  // e^{i theta}
        const double app = a(p, p).real();
        const double aqq = a(q, q).real();
        const double tau = (aqq - app) / (2.0 * beta);
        const double t = (tau >= 0.0 ? -1.0 : 1.0) /
                         (std::abs(tau) + std::sqrt(1.0 + tau * tau));
        const double c = 1.0 / std::sqrt(1.0 + t * t);
        const double s = t * c;

        // Column rotation G on (p,q): G_pp = c, G_pq = -s, G_qp =
        // conj(phase)*s, G_qq = conj(phase)*c. Updates A <- G* A G, V <- V G.
        for (int i = 0; i < n; ++i) {
          const cx aip = a(i, p);
          const cx aiq = a(i, q);
          a(i, p) = c * aip + s * std::conj(phase) * aiq;
          a(i, q) = -s * aip + c * std::conj(phase) * aiq;
        }
        for (int j = 0; j < n; ++j) {
          const cx apj = a(p, j);
          const cx aqj = a(q, j);
          a(p, j) = c * apj + s * phase * aqj;
          a(q, j) = -s * apj + c * phase * aqj;
        }
        for (int i = 0; i < n; ++i) {
          const cx vip = v(i, p);
          const cx viq = v(i, q);
          v(i, p) = c * vip + s * std::conj(phase) * viq;
          v(i, q) = -s * vip + c * std::conj(phase) * viq;
        }
        a(p, q) = 0.0;
        a(q, p) = 0.0;
      }
    }
  }

  EigenSystem es;
  es.values.resize(n);
  std::vector<int> order(n);
  for (int i = 0; i < n; ++i) order[i] = i;
  std::vector<double> diag(n);
  for (int i = 0; i < n; ++i) diag[i] = a(i, i).real();
  std::stable_sort(order.begin(), order.end(),
                   [&](int x, int y) { return diag[x] < diag[y]; });
  es.vectors = CMatrix(n, n);
  for (int k = 0; k < n; ++k) {
    es.values[k] = diag[order[k]];
    for (int i = 0; i < n; ++i) es.vectors(i, k) = v(i, order[k]);
  }
  return es;
}

// Minimum eigenvalue; the caller treats the matrix as PSD when the returned
// margin >= -tol.
inline double psd_margin(const HermitianMatrix& m) {
  return hermitian_eigensystem(m).values.front();
}

// Clips negative eigenvalues to zero (projection onto the PSD cone in
// Frobenius norm).
inline HermitianMatrix psd_projection(const HermitianMatrix& m) {
  EigenSystem es = hermitian_eigensystem(m);
  const int n = m.dim();
  CMatrix r(n, n);
  for (int k = 0; k < n; ++k) {
    if (es.values[k] <= 0.0) continue;
    for (int i = 0; i < n; ++i) {
      const cx vik = es.vectors(i, k);
      for (int j = 0; j < n; ++j)
        r(i, j) += es.values[k] * vik * std::conj(es.vectors(j, k));
    }
  }
  return HermitianMatrix(r, 1e-9);
}

}  // namespace numkit
}  // namespace qcompat

#endif  // QCOMPAT_NUMKIT_HPP

#include "qcompat/covariance.hpp"

#include <cmath>
#include <random>

#include "qcompat/constructions.hpp"
#include "gtest/gtest.h"

using namespace qcompat;
using namespace qcompat::covariance;
using constructions::InstrumentKind;
using devices::Instrument;
using devices::Meter;
using devices::VectorMeasure;
using numkit::CMatrix;
using numkit::cx;
using numkit::HermitianMatrix;
using numkit::max_abs_diff;

namespace {

Meter canonical_q(int d) { return devices::sharp_meter(devices::standard_basis(d)); }

double instrument_diff(const Instrument& a, const Instrument& b) {
  double m = 0.0;
  for (int x = 0; x < a.n_outcomes(); ++x)
    m = std::max(m, max_abs_diff(a.branch(x).mat(), b.branch(x).mat()));
  return m;
}

// Random vector measure: PSD blocks with total trace 1, fixed seed.
VectorMeasure random_vm(int d, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::vector<CMatrix> raw;
  double total = 0.0;
  for (int x = 0; x < d; ++x) {
    CMatrix g(d, d);
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) g(i, j) = cx(u(rng), u(rng));
    CMatrix p = g * g.adjoint();
    total += p.trace().real();
    raw.push_back(p);
  }
  std::vector<HermitianMatrix> blocks;
  for (auto& p : raw) blocks.emplace_back(p * cx(1.0 / total), 1e-10);
  return VectorMeasure(d, std::move(blocks));
}

Instrument random_joint_instrument(int d, std::mt19937_64& rng) {
  return from_vector_measure(random_vm(d, rng));
}

}  // namespace

TEST(Symmetrize, FixesAlreadyCovariantInstrument) {
  for (int d : {2, 3}) {
    Meter q = canonical_q(d);
    Instrument j = constructions::instrument(InstrumentKind::Optimal, q, 0.4);
    Instrument sym = symmetrize(j);
    EXPECT_LT(instrument_diff(j, sym), 1e-12) << "d=" << d;
  }
}

TEST(Symmetrize, MakesTrivialInstrumentCovariant) {
  const int d = 3;
  Instrument trivial = Instrument::from_actions(
      d, d, d,
      [&](int x, const CMatrix& rho) { return x == 0 ? rho : CMatrix::zero(d, d); });
  Instrument sym = symmetrize(trivial);
  EXPECT_LT(covariance_residual(sym), 1e-10);
}

TEST(Symmetrize, PreservesMarginsAndIsIdempotent) {
  std::mt19937_64 rng(101);
  for (int d : {2, 3}) {
    for (int rep = 0; rep < 3; ++rep) {
      Instrument j = random_joint_instrument(d, rng);
      Instrument sym = symmetrize(j);
      Meter m_before = devices::instrument_induced_meter(j);
      Meter m_after = devices::instrument_induced_meter(sym);
      for (int x = 0; x < d; ++x)
        EXPECT_LT(max_abs_diff(m_before.effect(x).mat(), m_after.effect(x).mat()), 1e-12);
      CMatrix c_before = devices::instrument_total_channel(j).choi().mat();
      CMatrix c_after = devices::instrument_total_channel(sym).choi().mat();
      EXPECT_LT(max_abs_diff(c_before, c_after), 1e-12);

      Instrument twice = symmetrize(sym);
      EXPECT_LT(instrument_diff(sym, twice), 1e-12);
    }
  }
}

TEST(FromVectorMeasure, ReproducesOptimalInstrument) {
  for (int d : {2, 3}) {
    Meter q = canonical_q(d);
    for (double s : {0.9, 0.4, regions::m2_of(d)}) {
      VectorMeasure vm = canonical_vector_measure(VectorMeasureKind::Optimal, d, s);
      Instrument built = from_vector_measure(vm);
      Instrument expect = constructions::instrument(InstrumentKind::Optimal, q, s);
      EXPECT_LT(instrument_diff(built, expect), 1e-10) << "d=" << d << " s=" << s;
    }
  }
}

TEST(FromVectorMeasure, ReproducesTildeFamilies) {
  for (int d : {2, 3}) {
    Meter q = canonical_q(d);
    for (double t : {0.7, 0.2}) {
      Instrument bt = from_vector_measure(
          canonical_vector_measure(VectorMeasureKind::Tilde, d, t));
      Instrument et = constructions::instrument(InstrumentKind::Tilde, q, t);
      EXPECT_LT(instrument_diff(bt, et), 1e-10);

      Instrument bm = from_vector_measure(
          canonical_vector_measure(VectorMeasureKind::TildeMinus, d, t));
      Instrument em = constructions::instrument(InstrumentKind::TildeMinus, q, t);
      EXPECT_LT(instrument_diff(bm, em), 1e-10);
    }
  }
}

TEST(FromVectorMeasure, ReproducesCornerInstrument) {
  const int d = 3;
  VectorMeasure vm = canonical_vector_measure(VectorMeasureKind::Corner, d);
  Instrument built = from_vector_measure(vm);
  Instrument expect = constructions::instrument(InstrumentKind::Corner, canonical_q(d));
  EXPECT_LT(instrument_diff(built, expect), 1e-10);
}

TEST(FromVectorMeasure, OutputIsAlwaysCovariant) {
  std::mt19937_64 rng(7);
  for (int d : {2, 3}) {
    for (int rep = 0; rep < 4; ++rep) {
      Instrument j = random_joint_instrument(d, rng);
      EXPECT_LT(covariance_residual(j), 1e-10);
    }
  }
}

TEST(FromVectorMeasure, DeltaMeasureDistributions) {
  const int d = 3;
  std::vector<HermitianMatrix> blocks;
  for (int x = 0; x < d; ++x) {
    CMatrix b(d, d);
    if (x == 0)
      for (int i = 0; i < d; ++i) b(i, i) = 1.0 / d;
    blocks.emplace_back(b, 1e-12);
  }
  VectorMeasure vm(d, std::move(blocks));
  InducedDistributions dist = induced_distributions(vm);
  for (int z = 0; z < d; ++z) EXPECT_NEAR(dist.q[z], 1.0 / d, 1e-14);
  for (int x = 0; x < d; ++x)
    for (int z = 0; z < d; ++z)
      EXPECT_NEAR(dist.p[x][z], x == 0 ? 1.0 / d : 0.0, 1e-14);
}

TEST(InducedDistributions, OptimalAndUniformAndTilde) {
  const int d = 3;
  // S^(s): q(z) = s delta + (1-s)/d.
  const double s = 0.55;
  InducedDistributions ds =
      induced_distributions(canonical_vector_measure(VectorMeasureKind::Optimal, d, s));
  for (int z = 0; z < d; ++z)
    EXPECT_NEAR(ds.q[z], (z == 0 ? s : 0.0) + (1.0 - s) / d, 1e-12);

  // Uniform vm: everything flat.
  std::vector<HermitianMatrix> blocks;
  for (int x = 0; x < d; ++x)
    blocks.emplace_back(CMatrix::identity(d) * cx(1.0 / (d * d)), 1e-12);
  InducedDistributions du = induced_distributions(VectorMeasure(d, std::move(blocks)));
  for (int z = 0; z < d; ++z) EXPECT_NEAR(du.q[z], 1.0 / d, 1e-13);
  for (int x = 0; x < d; ++x)
    for (int z = 0; z < d; ++z) EXPECT_NEAR(du.p[x][z], 1.0 / (d * d), 1e-13);

  // S~(t): p(x,z) = t delta delta + (1-t)/d^2.
  const double t = 0.35;
  InducedDistributions dt =
      induced_distributions(canonical_vector_measure(VectorMeasureKind::Tilde, d, t));
  for (int x = 0; x < d; ++x)
    for (int z = 0; z < d; ++z)
      EXPECT_NEAR(dt.p[x][z], (x == 0 && z == 0 ? t : 0.0) + (1.0 - t) / (d * d), 1e-12);
}

TEST(CanonicalVectorMeasure, TraceAndPositivity) {
  for (int d : {2, 3}) {
    for (int i = 0; i < 20; ++i) {
      const double s = regions::m2_of(d) + (1.0 - regions::m2_of(d)) * i / 19.0;
      VectorMeasure vm = canonical_vector_measure(VectorMeasureKind::Optimal, d, s);
      double total = 0.0;
      for (int x = 0; x < d; ++x) total += vm.at(x).trace_real();
      EXPECT_NEAR(total, 1.0, 1e-10);
    }
  }
  VectorMeasure corner = canonical_vector_measure(VectorMeasureKind::Corner, 3);
  for (int x = 0; x < 3; ++x)
    EXPECT_GE(numkit::psd_margin(corner.at(x)), -1e-12);
  EXPECT_THROW(canonical_vector_measure(VectorMeasureKind::Corner, 2),
               numkit::admissibility_error);
}

TEST(CanonicalVectorMeasure, TildeAtZeroLosesOutcomeDependence) {
  // b(0) = 1, a2(0) = 0: S(x) = (1/d) Q(0) for every x.
  const int d = 3;
  VectorMeasure vm = canonical_vector_measure(VectorMeasureKind::Tilde, d, 0.0);
  Meter q = canonical_q(d);
  for (int x = 0; x < d; ++x)
    EXPECT_LT(max_abs_diff(vm.at(x).mat(), q.effect(0).mat() * cx(1.0 / d)), 1e-14);
}

TEST(ConstraintResidual, VanishesAtNamedBoundaryPoints) {
  for (int d : {2, 3}) {
    for (int i = 0; i <= 10; ++i) {
      const double t = regions::m2_of(d) + (1.0 - regions::m2_of(d)) * i / 10.0;
      const double smax = regions::boundary_s_max(regions::PairKind::QI, d, t);
      ConstraintResidual r = constraint_residual(
          canonical_vector_measure(VectorMeasureKind::Tilde, d, t), smax, t);
      EXPECT_LT(r.meter_residual, 1e-10) << "d=" << d << " t=" << t;
      EXPECT_LT(r.channel_residual, 1e-10);

      const double td = (d >= 3) ? (d - 2.0) / (2.0 * (d - 1.0)) : regions::m2_of(d);
      if (t >= td) {
        const double smin = regions::boundary_s_min(regions::PairKind::QI, d, t);
        ConstraintResidual rm = constraint_residual(
            canonical_vector_measure(VectorMeasureKind::TildeMinus, d, t), smin, t);
        EXPECT_LT(rm.meter_residual, 1e-10) << "d=" << d << " t=" << t;
        EXPECT_LT(rm.channel_residual, 1e-10);
      }
    }
  }
}

TEST(ConstraintResidual, UniformMeasureAtFullyNoisyPoint) {
  const int d = 2;
  std::vector<HermitianMatrix> blocks;
  for (int x = 0; x < d; ++x)
    blocks.emplace_back(CMatrix::identity(d) * cx(1.0 / (d * d)), 1e-12);
  ConstraintResidual r =
      constraint_residual(VectorMeasure(d, std::move(blocks)), 0.0, 0.0);
  EXPECT_LT(r.meter_residual, 1e-12);
  EXPECT_LT(r.channel_residual, 1e-12);
}

TEST(ConstraintResidual, CornerAtItsCornerPoint) {
  const int d = 3;
  ConstraintResidual r =
      constraint_residual(canonical_vector_measure(VectorMeasureKind::Corner, d),
                          regions::m1_of(d), regions::m2_of(d));
  EXPECT_LT(r.meter_residual, 1e-10);
  EXPECT_LT(r.channel_residual, 1e-10);
}

TEST(Orthogonality, RootOfUnitySumsExactCounts) {
  // sum_u omega^{uv} = d delta_{v,0}: the phase multiset {uv mod d} has g =
  // gcd(v,d) copies of each multiple of g, and the full set of (d/g)-th roots
  // sums to zero exactly; integer counting keeps the check exact.
  for (int d = 2; d <= 12; ++d) {
    for (int v = 0; v < d; ++v) {
      std::vector<int> count(d, 0);
      for (int u = 0; u < d; ++u) ++count[(u * v) % d];
      if (v == 0) {
        EXPECT_EQ(count[0], d);
        for (int k = 1; k < d; ++k) EXPECT_EQ(count[k], 0);
      } else {
        const int g = std::gcd(v, d);
        ASSERT_GT(d / g, 1);
        for (int k = 0; k < d; ++k) EXPECT_EQ(count[k], (k % g == 0) ? g : 0);
      }
      // Floating cross-check.
      cx sum = 0.0;
      for (int u = 0; u < d; ++u) sum += devices::omega_power(d, u * v);
      EXPECT_NEAR(std::abs(sum - cx(v == 0 ? d : 0)), 0.0, 1e-12);
    }
  }
}

TEST(FromVectorMeasure, InducedMeterIsSmearingAndChannelIsWeylKraus) {
  std::mt19937_64 rng(55);
  for (int d : {2, 3}) {
    VectorMeasure vm = random_vm(d, rng);
    Instrument j = from_vector_measure(vm);
    InducedDistributions dist = induced_distributions(vm);
    Meter q = canonical_q(d);
    // M(z) = sum_u q(z - u) Q(u): the smeared version of the sharp meter.
    Meter induced = devices::instrument_induced_meter(j);
    for (int z = 0; z < d; ++z) {
      CMatrix expect(d, d);
      for (int u = 0; u < d; ++u)
        expect += q.effect(u).mat() * cx(dist.q[((z - u) % d + d) % d]);
      EXPECT_LT(max_abs_diff(induced.effect(z).mat(), expect), 1e-12);
    }
    // Phi(rho) = sum_{x,z} p(x,z) W(x,z)* rho W(x,z): Weyl-covariant Kraus form.
    devices::Channel total = devices::instrument_total_channel(j);
    for (int i = 0; i < d; ++i)
      for (int k = 0; k < d; ++k) {
        CMatrix e(d, d);
        e(i, k) = 1.0;
        CMatrix expect(d, d);
        for (int x = 0; x < d; ++x)
          for (int z = 0; z < d; ++z) {
            CMatrix w = devices::weyl(d, x, z);
            expect += w.adjoint() * e * w * cx(dist.p[x][z]);
          }
        EXPECT_LT(max_abs_diff(total.apply(e), expect), 1e-12);
      }
  }
}

// Command-line surface: export region-boundary curves (CSV), verify named
// joint devices, run oracle-vs-theory scans, and run the module property
// suites. Exit codes: 0 success, 1 verification/scan failure, 2 usage error.

#include <cstdio>
#include <fstream>
#include <iostream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "qcompat/qcompat.hpp"

namespace {

using namespace qcompat;
using constructions::ClonerKind;
using constructions::InstrumentKind;
using constructions::JointMeterKind;
using constructions::VerifyReport;
using devices::Meter;
using regions::PairKind;

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

std::optional<PairKind> parse_pair(const std::string& s) {
  if (s == "qp") return PairKind::QP;
  if (s == "ii") return PairKind::II;
  if (s == "qi") return PairKind::QI;
  return std::nullopt;
}

const char* pair_name(PairKind k) {
  switch (k) {
    case PairKind::QP: return "qp";
    case PairKind::II: return "ii";
    case PairKind::QI: return "qi";
  }
  return "?";
}

Meter canonical_q(int d) { return devices::sharp_meter(devices::standard_basis(d)); }
Meter canonical_p(int d) {
  return devices::sharp_meter(devices::fourier_conjugate(devices::standard_basis(d)));
}

class Output {
 public:
  explicit Output(const std::string& path) {
    if (!path.empty()) {
      file_.open(path);
      if (!file_) throw std::runtime_error("cannot open " + path);
    }
  }
  std::ostream& stream() { return file_.is_open() ? file_ : std::cout; }

 private:
  std::ofstream file_;
};

// ---------------------------------------------------------------------------
// region

int cmd_region(PairKind kind, int d, bool extended, int n, const std::string& out_path) {
  Output out(out_path);
  auto pts = regions::sample_boundary(kind, d, extended, n);
  out.stream() << "pair,d,extended,s,t,on_boundary\n";
  auto row = [&](double s, double t, int on_boundary) {
    out.stream() << pair_name(kind) << ',' << d << ',' << (extended ? 1 : 0) << ','
                 << fmt(s) << ',' << fmt(t) << ',' << on_boundary << '\n';
  };
  for (const auto& [s, t] : pts) row(s, t, 1);

  // Corner / extreme points of the region.
  row(0.0, 0.0, 0);
  if (!extended) {
    row(1.0, 0.0, 0);
    row(0.0, 1.0, 0);
  } else {
    const double m1 = regions::m1_of(d);
    const double m2 = regions::m2_of(d);
    if (kind == PairKind::QP && d >= 3) row(m1, m1, 0);
    if (kind == PairKind::II) row(m2, m2, 0);
    if (kind == PairKind::QI && d >= 3) row(m1, m2, 0);
  }
  return 0;
}

// ---------------------------------------------------------------------------
// check

struct DeviceSpec {
  enum class Family { JointMeter, Cloner, Instrument };
  Family family;
  int kind;
  bool needs_param;
};

std::optional<DeviceSpec> lookup_device(const std::string& name) {
  using F = DeviceSpec::Family;
  if (name == "g-opt") return DeviceSpec{F::JointMeter, (int)JointMeterKind::Optimal, true};
  if (name == "g-tilde") return DeviceSpec{F::JointMeter, (int)JointMeterKind::Tilde, true};
  if (name == "g-minus") return DeviceSpec{F::JointMeter, (int)JointMeterKind::Minus, true};
  if (name == "g-corner") return DeviceSpec{F::JointMeter, (int)JointMeterKind::Corner, false};
  if (name == "gamma-opt") return DeviceSpec{F::Cloner, (int)ClonerKind::Optimal, true};
  if (name == "gamma-tilde") return DeviceSpec{F::Cloner, (int)ClonerKind::Tilde, true};
  if (name == "gamma-corner") return DeviceSpec{F::Cloner, (int)ClonerKind::Corner, false};
  if (name == "j-opt") return DeviceSpec{F::Instrument, (int)InstrumentKind::Optimal, true};
  if (name == "j-tilde") return DeviceSpec{F::Instrument, (int)InstrumentKind::Tilde, true};
  if (name == "j-tilde-minus")
    return DeviceSpec{F::Instrument, (int)InstrumentKind::TildeMinus, true};
  if (name == "j-corner") return DeviceSpec{F::Instrument, (int)InstrumentKind::Corner, false};
  if (name == "luders") return DeviceSpec{F::Instrument, (int)InstrumentKind::Luders, true};
  if (name == "luders-reflect")
    return DeviceSpec{F::Instrument, (int)InstrumentKind::LudersReflect, true};
  if (name == "luders-corner-post")
    return DeviceSpec{F::Instrument, (int)InstrumentKind::LudersCornerPost, false};
  return std::nullopt;
}

void print_report(std::ostream& os, const std::string& device, int d, double param,
                  const VerifyReport& rep) {
  os << "device " << device << "  d=" << d << "  param=" << fmt(param) << "\n";
  os << "  max margin residual : " << fmt(rep.max_margin_residual) << "\n";
  os << "  min psd margin      : " << fmt(rep.min_psd_margin) << "\n";
  os << "  margin noise params : (" << fmt(rep.expected_param_1) << ", "
     << fmt(rep.expected_param_2) << ")\n";
  if (rep.detected_r_1)
    os << "  detected depolarizing r (margin 1): " << fmt(*rep.detected_r_1) << "\n";
  if (rep.detected_r_2)
    os << "  detected depolarizing r (margin 2): " << fmt(*rep.detected_r_2) << "\n";
  os << "  " << (rep.pass ? "PASS" : "FAIL") << "\n";
}

int cmd_check(const std::string& device, int d, std::optional<double> param,
              const std::string& out_path) {
  auto spec = lookup_device(device);
  if (!spec) {
    std::cerr << "unknown device: " << device << "\n";
    return 2;
  }
  double p = 0.0;
  if (spec->needs_param) {
    if (!param) {
      std::cerr << "device " << device << " requires --param\n";
      return 2;
    }
    p = *param;
  } else if (device == "luders-corner-post") {
    p = param.value_or(regions::m1_of(d));
  }

  Output out(out_path);
  VerifyReport rep;
  try {
    switch (spec->family) {
      case DeviceSpec::Family::JointMeter: {
        auto kind = static_cast<JointMeterKind>(spec->kind);
        Meter g = constructions::joint_meter(kind, canonical_q(d), canonical_p(d), p);
        rep = constructions::verify_joint_meter(g, kind, canonical_q(d), canonical_p(d), p);
        break;
      }
      case DeviceSpec::Family::Cloner: {
        auto kind = static_cast<ClonerKind>(spec->kind);
        rep = constructions::verify_cloner(constructions::cloner(kind, d, p), kind, p);
        break;
      }
      case DeviceSpec::Family::Instrument: {
        auto kind = static_cast<InstrumentKind>(spec->kind);
        rep = constructions::verify_instrument(
            constructions::instrument(kind, canonical_q(d), p), kind, canonical_q(d), p);
        break;
      }
    }
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid device request: " << e.what() << "\n";
    return 2;
  }
  print_report(out.stream(), device, d, p, rep);
  return rep.pass ? 0 : 1;
}

// ---------------------------------------------------------------------------
// scan

int cmd_scan(PairKind kind, int d, const std::vector<double>& t_list,
             const std::string& out_path) {
  Output out(out_path);
  feasibility::OracleComparison cmp = feasibility::oracle_vs_theory(kind, d, t_list);
  out.stream() << "t,s_closed,s_empirical,gap,status\n";
  bool any_skip = false, any_fail = false;
  for (const auto& row : cmp.rows) {
    if (!row.admissible) {
      any_skip = true;
      out.stream() << fmt(row.t) << ",nan,nan,nan,SKIP\n";
      continue;
    }
    const bool pass = row.gap <= 2e-3;
    any_fail = any_fail || !pass;
    out.stream() << fmt(row.t) << ',' << fmt(row.s_closed) << ',' << fmt(row.s_empirical)
                 << ',' << fmt(row.gap) << ',' << (pass ? "PASS" : "FAIL") << '\n';
  }
  return (any_skip || any_fail) ? 1 : 0;
}

// ---------------------------------------------------------------------------
// verify

struct SuiteResult {
  std::string name;
  int passed = 0;
  int total = 0;
  void expect(bool ok) {
    ++total;
    if (ok) ++passed;
  }
  bool ok() const { return passed == total; }
};

SuiteResult verify_numkit(int d) {
  SuiteResult s{"numkit"};
  std::mt19937_64 rng(2024);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int n : {d, 2 * d, d * d}) {
    numkit::CMatrix m(n, n);
    for (int i = 0; i < n; ++i) {
      m(i, i) = u(rng);
      for (int j = i + 1; j < n; ++j) {
        m(i, j) = numkit::cx(u(rng), u(rng));
        m(j, i) = std::conj(m(i, j));
      }
    }
    numkit::HermitianMatrix h(m);
    auto es = numkit::hermitian_eigensystem(h);
    numkit::CMatrix lam(n, n);
    for (int k = 0; k < n; ++k) lam(k, k) = es.values[k];
    numkit::CMatrix rec = es.vectors * lam * es.vectors.adjoint();
    s.expect(numkit::max_abs_diff(rec, h.mat()) <=
             1e-10 * std::max(1.0, h.mat().max_abs()));
    s.expect(numkit::max_abs_diff(es.vectors.adjoint() * es.vectors,
                                  numkit::CMatrix::identity(n)) <= 1e-10);
  }
  return s;
}

SuiteResult verify_devices(int d) {
  SuiteResult s{"devices"};
  Meter q = canonical_q(d), p = canonical_p(d);
  devices::NoiseBounds nb(d);
  s.expect(devices::is_mutually_unbiased(q, p, 1e-10));
  Meter qs = devices::noisy_meter(q, 0.3);
  for (int x = 0; x < d; ++x)
    for (int y = 0; y < d; ++y)
      for (int z = 0; z < d; ++z) {
        numkit::CMatrix w = devices::weyl(d, x, y);
        numkit::CMatrix lhs = w * qs.effect(z).mat() * w.adjoint();
        s.expect(numkit::max_abs_diff(lhs, qs.effect((x + z) % d).mat()) <= 1e-12);
      }
  double margin = devices::noisy_meter(q, nb.m1).min_psd_margin();
  s.expect(margin >= -1e-10 && margin <= 1e-10);
  double cm = numkit::psd_margin(devices::depolarizing(d, nb.m2).choi());
  s.expect(cm >= -1e-10 && cm <= 1e-10);
  for (int k = 0; k < 10; ++k) {
    double r = nb.m2 + (1.0 - nb.m2) * k / 9.0;
    auto det = devices::detect_depolarizing(devices::depolarizing(d, r));
    s.expect(det.has_value() && std::abs(*det - r) <= 1e-10);
  }
  return s;
}

SuiteResult verify_regions(int d) {
  SuiteResult s{"regions"};
  for (int k : {1, 2}) {
    const double mk = regions::mk_of(k, d);
    const double dk = std::pow(static_cast<double>(d), k);
    for (int i = 0; i < 50; ++i) {
      double r = mk + (1.0 - mk) * i / 49.0;
      auto c = regions::noise_coeffs(k, d, r);
      s.expect(std::abs(c.a * c.a + c.b * c.b + 2.0 / std::sqrt(dk) * c.a * c.b - 1.0) <=
               1e-12);
    }
  }
  for (PairKind kind : {PairKind::QP, PairKind::II, PairKind::QI}) {
    for (int i = 0; i < 20; ++i)
      for (int j = 0; j < 20; ++j) {
        double ss = (i + 0.5) / 20.0, tt = (j + 0.5) / 20.0;
        bool std_m = regions::in_region({kind, d, ss, tt, false});
        bool ext_m = regions::in_region({kind, d, ss, tt, true});
        s.expect(std_m == ext_m);
      }
    double tsym = regions::symmetric_boundary_t(kind, d);
    s.expect(std::abs(regions::boundary_s_max(kind, d, tsym) - tsym) <= 1e-9);
    for (double t : {0.3, 0.7}) {
      double smax = regions::boundary_s_max(kind, d, t);
      s.expect(regions::in_region({kind, d, smax - 1e-9, t, true}));
      s.expect(!regions::in_region({kind, d, smax + 1e-6, t, true}));
    }
  }
  return s;
}

SuiteResult verify_constructions(int d) {
  SuiteResult s{"constructions"};
  Meter q = canonical_q(d), p = canonical_p(d);
  const double m1 = regions::m1_of(d), m2 = regions::m2_of(d);
  for (int i = 0; i < 5; ++i) {
    double s1 = m1 + (1.0 - m1) * i / 4.0;
    double s2 = m2 + (1.0 - m2) * i / 4.0;
    s.expect(constructions::verify_joint_meter(
                 constructions::joint_meter(JointMeterKind::Optimal, q, p, s1),
                 JointMeterKind::Optimal, q, p, s1)
                 .pass);
    s.expect(constructions::verify_cloner(constructions::cloner(ClonerKind::Optimal, d, s2),
                                          ClonerKind::Optimal, s2)
                 .pass);
    s.expect(constructions::verify_instrument(
                 constructions::instrument(InstrumentKind::Optimal, q, s2),
                 InstrumentKind::Optimal, q, s2)
                 .pass);
    s.expect(constructions::verify_instrument(
                 constructions::instrument(InstrumentKind::TildeMinus, q, s2),
                 InstrumentKind::TildeMinus, q, s2)
                 .pass);
    Meter seq = constructions::sequential_compose(
        constructions::instrument(InstrumentKind::Luders, q, s1), p);
    Meter g = constructions::joint_meter(JointMeterKind::Optimal, q, p, s1);
    double diff = 0.0;
    for (int k = 0; k < seq.n_outcomes(); ++k)
      diff = std::max(diff, numkit::max_abs_diff(seq.effect(k).mat(), g.effect(k).mat()));
    s.expect(diff <= 1e-10);
  }
  if (d == 2) {
    s.expect(constructions::verify_joint_meter(
                 constructions::joint_meter(JointMeterKind::Minus, q, p, -0.4),
                 JointMeterKind::Minus, q, p, -0.4)
                 .pass);
  }
  if (d >= 3) {
    s.expect(constructions::verify_joint_meter(
                 constructions::joint_meter(JointMeterKind::Corner, q, p),
                 JointMeterKind::Corner, q, p, 0.0)
                 .pass);
    s.expect(constructions::verify_instrument(constructions::instrument(InstrumentKind::Corner, q),
                                              InstrumentKind::Corner, q, 0.0)
                 .pass);
  }
  s.expect(constructions::verify_cloner(constructions::cloner(ClonerKind::Corner, d),
                                        ClonerKind::Corner, 0.0)
               .pass);
  return s;
}

SuiteResult verify_covariance(int d) {
  SuiteResult s{"covariance"};
  Meter q = canonical_q(d);
  devices::Instrument j = constructions::instrument(InstrumentKind::Optimal, q, 0.35);
  devices::Instrument sym = covariance::symmetrize(j);
  double diff = 0.0;
  for (int x = 0; x < d; ++x)
    diff = std::max(diff, numkit::max_abs_diff(sym.branch(x).mat(), j.branch(x).mat()));
  s.expect(diff <= 1e-12);
  s.expect(covariance::covariance_residual(sym) <= 1e-10);
  for (double t : {0.2, 0.6, 1.0}) {
    auto vm =
        covariance::canonical_vector_measure(covariance::VectorMeasureKind::Tilde, d, t);
    auto res = covariance::constraint_residual(
        vm, regions::boundary_s_max(PairKind::QI, d, t), t);
    s.expect(res.meter_residual <= 1e-10 && res.channel_residual <= 1e-10);
  }
  if (d >= 3) {
    auto vm = covariance::canonical_vector_measure(covariance::VectorMeasureKind::Corner, d);
    auto res = covariance::constraint_residual(vm, regions::m1_of(d), regions::m2_of(d));
    s.expect(res.meter_residual <= 1e-10 && res.channel_residual <= 1e-10);
  }
  return s;
}

SuiteResult verify_feasibility(int d, std::ostream& os) {
  SuiteResult s{"feasibility"};
  using feasibility::Status;
  s.expect(feasibility::check({PairKind::QI, d, 0.3, 0.3}).status == Status::Feasible);
  double tsym_qi = regions::symmetric_boundary_t(PairKind::QI, d);
  s.expect(feasibility::check({PairKind::QI, d, tsym_qi + 0.05, tsym_qi}).status !=
           Status::Feasible);
  double gap = std::abs(feasibility::empirical_boundary(PairKind::QI, d, 0.5,
                                                        feasibility::Direction::Max) -
                        regions::boundary_s_max(PairKind::QI, d, 0.5));
  s.expect(gap <= 2e-3);
  if (d <= 3) {
    s.expect(feasibility::check({PairKind::QP, d, 0.4, 0.4}).status == Status::Feasible);
    double tsym_qp = regions::symmetric_boundary_t(PairKind::QP, d);
    s.expect(feasibility::check({PairKind::QP, d, tsym_qp + 0.05, tsym_qp}).status !=
             Status::Feasible);
  }
  if (d == 2) {
    s.expect(feasibility::check({PairKind::II, d, 0.5, 0.5}).status == Status::Feasible);
    s.expect(feasibility::check({PairKind::II, d, 0.72, 0.72}).status != Status::Feasible);
  } else {
    os << "  (feasibility: II checks skipped for d = " << d << ")\n";
  }
  return s;
}

int cmd_verify(const std::vector<int>& d_list, bool /*all*/) {
  bool ok = true;
  for (int d : d_list) {
    std::cout << "d = " << d << "\n";
    std::vector<SuiteResult> results;
    results.push_back(verify_numkit(d));
    results.push_back(verify_devices(d));
    results.push_back(verify_regions(d));
    results.push_back(verify_constructions(d));
    results.push_back(verify_covariance(d));
    results.push_back(verify_feasibility(d, std::cout));
    for (const auto& r : results) {
      std::cout << "  " << r.name << ": " << r.passed << "/" << r.total
                << (r.ok() ? " ok" : " FAIL") << "\n";
      ok = ok && r.ok();
    }
  }
  std::cout << (ok ? "PASS" : "FAIL") << "\n";
  return ok ? 0 : 1;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"noisy-device compatibility regions and optimal joint devices"};
  app.require_subcommand(1);

  auto* region = app.add_subcommand("region", "export region boundary curve as CSV");
  std::string region_pair;
  int region_d = 2;
  bool region_ext = false;
  int region_n = 100;
  std::string region_out;
  region->add_option("--pair", region_pair, "qp | ii | qi")->required();
  region->add_option("--d", region_d, "dimension (>= 2)")->required();
  region->add_flag("--extended", region_ext, "overnoisy (extended) region");
  region->add_option("--n", region_n, "number of boundary samples");
  region->add_option("--out", region_out, "output file (default stdout)");

  auto* chk = app.add_subcommand("check", "verify a named joint device");
  std::string chk_device;
  int chk_d = 2;
  double chk_param = 0.0;
  bool chk_param_set = false;
  std::string chk_out;
  chk->add_option("--device", chk_device, "device name (g-opt, gamma-corner, ...)")
      ->required();
  chk->add_option("--d", chk_d, "dimension")->required();
  chk->add_option("--param", chk_param, "device parameter (s or t)")
      ->each([&](const std::string&) { chk_param_set = true; });
  chk->add_option("--out", chk_out, "output file (default stdout)");

  auto* scan = app.add_subcommand("scan", "oracle vs closed-form boundary scan");
  std::string scan_pair;
  int scan_d = 2;
  std::vector<double> scan_t;
  std::string scan_out;
  scan->add_option("--pair", scan_pair, "qp | ii | qi")->required();
  scan->add_option("--d", scan_d, "dimension")->required();
  scan->add_option("--t", scan_t, "comma-separated t values")->required()->delimiter(',');
  scan->add_option("--out", scan_out, "output file (default stdout)");

  auto* ver = app.add_subcommand("verify", "run the module property suites");
  std::vector<int> ver_d{2, 3};
  bool ver_all = false;
  ver->add_option("--d", ver_d, "comma-separated dimensions")->delimiter(',');
  ver->add_flag("--all", ver_all, "include every optional suite");

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (region->parsed()) {
      auto kind = parse_pair(region_pair);
      if (!kind || region_d < 2 || region_n < 2) {
        std::cerr << "region: invalid flags\n";
        return 2;
      }
      return cmd_region(*kind, region_d, region_ext, region_n, region_out);
    }
    if (chk->parsed()) {
      std::optional<double> param;
      if (chk_param_set) param = chk_param;
      if (chk_d < 2) {
        std::cerr << "check: invalid dimension\n";
        return 2;
      }
      return cmd_check(chk_device, chk_d, param, chk_out);
    }
    if (scan->parsed()) {
      auto kind = parse_pair(scan_pair);
      if (!kind || scan_d < 2 || scan_t.empty()) {
        std::cerr << "scan: invalid flags\n";
        return 2;
      }
      return cmd_scan(*kind, scan_d, scan_t, scan_out);
    }
    if (ver->parsed()) {
      for (int d : ver_d)
        if (d < 2) {
          std::cerr << "verify: invalid dimension\n";
          return 2;
        }
      return cmd_verify(ver_d, ver_all);
    }
  } catch (const numkit::admissibility_error& e) {
    std::cerr << "inadmissible request: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}

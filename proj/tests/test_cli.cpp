#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "gtest/gtest.h"

#ifndef QCOMPAT_CLI_PATH
#error "QCOMPAT_CLI_PATH must be defined"
#endif

namespace {

struct RunResult {
  int exit_code;
  std::string output;
};

RunResult run_cli(const std::string& args) {
  const std::string out_path = ::testing::TempDir() + "cli_out.txt";
  const std::string cmd =
      std::string(QCOMPAT_CLI_PATH) + " " + args + " > " + out_path + " 2>&1";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
  std::ifstream in(out_path);
  std::stringstream ss;
  ss << in.rdbuf();
  r.output = ss.str();
  return r;
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> lines;
  std::stringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) lines.push_back(line);
  return lines;
}

}  // namespace

TEST(CliRegion, HeaderRowsAndSymmetricPoint) {
  RunResult r = run_cli("region --pair qp --d 3 --n 3");
  EXPECT_EQ(r.exit_code, 0);
  auto lines = lines_of(r.output);
  ASSERT_EQ(lines.size(), 1u + 3u + 3u);  // header + samples + corners
  EXPECT_EQ(lines[0], "pair,d,extended,s,t,on_boundary");
  EXPECT_EQ(lines[1], "qp,3,0,1,0,1");
  // Middle sample is the symmetric boundary point s = t.
  EXPECT_NE(lines[2].find("0.683012702,0.683012702,1"), std::string::npos);
  EXPECT_EQ(lines[3], "qp,3,0,0,1,1");
}

TEST(CliRegion, HundredPointCurve) {
  RunResult r = run_cli("region --pair qp --d 3 --n 100");
  EXPECT_EQ(r.exit_code, 0);
  auto lines = lines_of(r.output);
  EXPECT_EQ(lines.size(), 1u + 100u + 3u);
}

TEST(CliRegion, ExtendedQiReflectionSymmetry) {
  RunResult r = run_cli("region --pair qi --d 2 --extended --n 200");
  EXPECT_EQ(r.exit_code, 0);
  auto lines = lines_of(r.output);
  ASSERT_EQ(lines.size(), 1u + 200u + 1u);  // header + samples + (0,0) corner
  // Row k of the upper branch mirrors row k of the lower branch.
  for (int k = 0; k < 100; k += 25) {
    std::stringstream up(lines[1 + k]), lo(lines[1 + 100 + k]);
    std::string cell;
    std::vector<std::string> ucells, lcells;
    while (std::getline(up, cell, ',')) ucells.push_back(cell);
    while (std::getline(lo, cell, ',')) lcells.push_back(cell);
    const double su = std::stod(ucells[3]), sl = std::stod(lcells[3]);
    EXPECT_NEAR(su, -sl, 1e-9);
    EXPECT_EQ(ucells[4], lcells[4]);  // same t
  }
}

TEST(CliRegion, ByteStableAcrossRuns) {
  RunResult a = run_cli("region --pair ii --d 2 --extended --n 41");
  RunResult b = run_cli("region --pair ii --d 2 --extended --n 41");
  EXPECT_EQ(a.exit_code, 0);
  EXPECT_EQ(a.output, b.output);
}

TEST(CliRegion, UsageErrors) {
  EXPECT_EQ(run_cli("region --pair xx --d 2 --n 10").exit_code, 2);
  EXPECT_EQ(run_cli("region --d 2").exit_code, 2);
  EXPECT_EQ(run_cli("region --pair qp --d 2 --n 1").exit_code, 2);
}

TEST(CliCheck, CornerDevicesPass) {
  RunResult r = run_cli("check --device gamma-corner --d 3");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("PASS"), std::string::npos);
  EXPECT_NE(r.output.find("-0.125"), std::string::npos);

  RunResult j = run_cli("check --device j-corner --d 3");
  EXPECT_EQ(j.exit_code, 0);
  EXPECT_NE(j.output.find("(-0.5, -0.125)"), std::string::npos);
}

TEST(CliCheck, DimensionRestrictionsAndUnknownDevice) {
  EXPECT_EQ(run_cli("check --device g-minus --d 3 --param 0.5").exit_code, 2);
  EXPECT_EQ(run_cli("check --device g-corner --d 2").exit_code, 2);
  EXPECT_EQ(run_cli("check --device nonsense --d 2").exit_code, 2);
  EXPECT_EQ(run_cli("check --device g-opt --d 2").exit_code, 2);  // missing param
}

TEST(CliCheck, ParameterizedDevices) {
  EXPECT_EQ(run_cli("check --device g-opt --d 2 --param 0.5").exit_code, 0);
  EXPECT_EQ(run_cli("check --device luders --d 3 --param -0.25").exit_code, 0);
  EXPECT_EQ(run_cli("check --device gamma-opt --d 4 --param 0.8").exit_code, 0);
  EXPECT_EQ(run_cli("check --device luders-corner-post --d 3").exit_code, 0);
  // Inadmissible parameter is a usage-class error.
  EXPECT_EQ(run_cli("check --device g-opt --d 2 --param 1.5").exit_code, 2);
}

TEST(CliScan, GridPassesAndValues) {
  RunResult r = run_cli("scan --pair qi --d 2 --t 0,0.25,0.5,0.75");
  EXPECT_EQ(r.exit_code, 0);
  auto lines = lines_of(r.output);
  ASSERT_EQ(lines.size(), 5u);
  EXPECT_EQ(lines[0], "t,s_closed,s_empirical,gap,status");
  for (size_t k = 1; k < lines.size(); ++k)
    EXPECT_NE(lines[k].find("PASS"), std::string::npos);

  RunResult rad = run_cli("scan --pair qi --d 3 --t -0.125");
  EXPECT_EQ(rad.exit_code, 0);
  EXPECT_NE(rad.output.find("0.875"), std::string::npos);

  RunResult ii1 = run_cli("scan --pair ii --d 2 --t 1");
  EXPECT_EQ(ii1.exit_code, 0);
  auto ii_lines = lines_of(ii1.output);
  ASSERT_EQ(ii_lines.size(), 2u);
  EXPECT_EQ(ii_lines[1].substr(0, 4), "1,0,");
}

TEST(CliScan, InadmissibleTSkipsRowAndExitsOne) {
  RunResult r = run_cli("scan --pair qi --d 2 --t -0.5,0.5");
  EXPECT_EQ(r.exit_code, 1);
  EXPECT_NE(r.output.find("SKIP"), std::string::npos);
}

TEST(CliVerify, DefaultDimensionsPass) {
  RunResult r = run_cli("verify --d 2");
  EXPECT_EQ(r.exit_code, 0);
  auto lines = lines_of(r.output);
  EXPECT_EQ(lines.back(), "PASS");
  EXPECT_NE(r.output.find("numkit"), std::string::npos);
  EXPECT_NE(r.output.find("feasibility"), std::string::npos);
}

TEST(CliVerify, DimensionFourSkipsHeavyFeasibility) {
  RunResult r = run_cli("verify --d 4");
  EXPECT_EQ(r.exit_code, 0);
  EXPECT_NE(r.output.find("II checks skipped for d = 4"), std::string::npos);
  EXPECT_EQ(lines_of(r.output).back(), "PASS");
}

TEST(CliOutFlag, WritesFile) {
  const std::string path = ::testing::TempDir() + "region.csv";
  RunResult r = run_cli("region --pair qp --d 2 --n 5 --out " + path);
  EXPECT_EQ(r.exit_code, 0);
  std::ifstream in(path);
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, "pair,d,extended,s,t,on_boundary");
}

TEST(CliUsage, NoSubcommand) {
  EXPECT_EQ(run_cli("").exit_code, 2);
}

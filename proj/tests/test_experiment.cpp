#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <sstream>

#include "cqt/experiment.hpp"

using namespace cqt;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream in(text);
  for (std::string l; std::getline(in, l);) out.push_back(l);
  return out;
}

class TempDir {
 public:
  TempDir() {
    path_ = fs::temp_directory_path() / ("cqt_test_" + std::to_string(::testing::UnitTest::GetInstance()->random_seed()) +
                                         "_" + ::testing::UnitTest::GetInstance()->current_test_info()->name());
    fs::remove_all(path_);
    fs::create_directories(path_);
  }
  ~TempDir() { fs::remove_all(path_); }
  fs::path operator/(const std::string& name) const { return path_ / name; }

 private:
  fs::path path_;
};

int run_cli(const std::string& args, const fs::path& log) {
  const std::string cmd = std::string(CQT_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

SweepRow row(Channel c, double p) {
  return {c, p, closed_form_max_s(c, p), 5.0 + p / 3.0, 0.9, 0.7, 0.2, 1.5e-9};
}

}  // namespace

TEST(SweepConfig, DefaultGrid) {
  const SweepConfig cfg;
  const auto ps = cfg.grid();
  ASSERT_EQ(ps.size(), 51u);
  EXPECT_EQ(ps.front(), 0.0);
  EXPECT_EQ(ps.back(), 1.0);
  EXPECT_EQ(cfg.channels().size(), 2u);
  EXPECT_EQ(cfg.seed, 42u);
  EXPECT_EQ(cfg.sdp_tol, 1e-7);
}

TEST(SweepConfig, Validation) {
  SweepConfig cfg;
  cfg.p_min = 0.6;
  cfg.p_max = 0.5;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.p_step = 0.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.sdp_tol = -1.0;
  EXPECT_THROW(cfg.validate(), Error);
  cfg = {};
  cfg.p_max = 1.5;
  EXPECT_THROW(cfg.validate(), Error);
}

TEST(Config, ParsesFlatKeyValueText) {
  const auto kv = parse_config_text("# sweep\n channel = qubit \n\np_min=0.1  # trailing\nsdp-tol=1e-8\n");
  EXPECT_EQ(kv.at("channel"), "qubit");
  EXPECT_EQ(kv.at("p-min"), "0.1");
  EXPECT_EQ(kv.at("sdp-tol"), "1e-8");
  EXPECT_THROW(parse_config_text("channel qubit\n"), Error);
  EXPECT_THROW(parse_config_text("=3\n"), Error);
}

TEST(Config, AppliesValues) {
  SweepConfig cfg;
  apply_config(parse_config_text("channel=total\np-max=0.5\np-step=0.1\nrestarts=3\nseed=7\nout=x.csv\n"
                                 "plot-data=true\njobs=2\n"),
               cfg);
  EXPECT_EQ(cfg.channel, ChannelSelection::total);
  EXPECT_EQ(cfg.p_max, 0.5);
  EXPECT_EQ(cfg.p_step, 0.1);
  EXPECT_EQ(cfg.optimizer_restarts, 3);
  EXPECT_EQ(cfg.seed, 7u);
  EXPECT_EQ(cfg.output_path, "x.csv");
  EXPECT_TRUE(cfg.plot_data);
  EXPECT_EQ(cfg.jobs, 2u);
  EXPECT_THROW(apply_config({{"colour", "red"}}, cfg), Error);
  EXPECT_THROW(apply_config({{"p-min", "0.1x"}}, cfg), Error);
  EXPECT_THROW(apply_config({{"channel", "dephasing"}}, cfg), Error);
  EXPECT_THROW(apply_config({{"seed", "-1"}}, cfg), Error);
}

TEST(Csv, HeaderIsExact) {
  const auto text = format_csv({row(Channel::total, 0.0)});
  EXPECT_EQ(lines(text).front(), "channel,p,s_closed_form,s_optimized,f_c_ne,f_nc_e,ecp,sdp_gap");
  EXPECT_EQ(text.back(), '\n');
}

TEST(Csv, TwoRowsGiveThreeLines) {
  TempDir dir;
  const auto path = dir / "out.csv";
  emit_csv({row(Channel::total, 0.0), row(Channel::qubit, 0.5)}, path.string());
  const auto text = slurp(path);
  EXPECT_EQ(lines(text).size(), 3u);
  EXPECT_EQ(text.back(), '\n');
}

TEST(Csv, RoundTripsAtTwelveDigits) {
  const auto r = row(Channel::qubit, 0.34);
  const auto l = lines(format_csv({r}))[1];
  std::vector<std::string> fields;
  std::istringstream in(l);
  for (std::string f; std::getline(in, f, ',');) fields.push_back(f);
  ASSERT_EQ(fields.size(), 8u);
  EXPECT_EQ(fields[0], "qubit");
  const std::array<double, 7> values{r.p, r.s_closed_form, r.s_optimized, r.f_c_ne, r.f_nc_e, r.ecp, r.sdp_gap};
  for (std::size_t i = 0; i < values.size(); ++i) {
    const double back = std::stod(fields[i + 1]);
    EXPECT_EQ(format_real(back), fields[i + 1]);
    EXPECT_NEAR(back, values[i], 1e-11 * std::max(1.0, std::abs(values[i])));
  }
}

TEST(Csv, Errors) {
  EXPECT_THROW(emit_csv({}, "unused.csv"), Error);
  EXPECT_THROW(emit_csv({row(Channel::total, 0.0)}, "/nonexistent-dir/x/out.csv"), Error);
}

TEST(PlotData, OneFilePerChannel) {
  TempDir dir;
  const auto csv = (dir / "sweep.csv").string();
  const auto written = emit_plot_data({row(Channel::total, 0.0), row(Channel::total, 0.5), row(Channel::qubit, 0.0)}, csv);
  ASSERT_EQ(written.size(), 2u);
  EXPECT_EQ(written[0], (dir / "sweep_total.dat").string());
  const auto l = lines(slurp(written[0]));
  ASSERT_EQ(l.size(), 3u);
  std::istringstream in(l[1]);
  double s = 0.0, e = 0.0;
  in >> s >> e;
  EXPECT_NEAR(s, 4.0 * std::numbers::sqrt2, 1e-11);
  EXPECT_NEAR(e, 0.2, 1e-12);
}

TEST(Sweep, RowsAreSortedAndSatisfyInvariants) {
  SweepConfig cfg;
  cfg.p_step = 0.25;
  cfg.optimizer_restarts = 4;
  const auto result = run_sweep(cfg);
  EXPECT_TRUE(result.failures.empty());
  ASSERT_EQ(result.rows.size(), 10u);
  for (std::size_t i = 0; i < result.rows.size(); ++i) {
    const auto& r = result.rows[i];
    EXPECT_EQ(r.channel, i < 5 ? Channel::total : Channel::qubit);
    EXPECT_NEAR(r.p, 0.25 * (i % 5), 1e-15);
    EXPECT_NEAR(r.ecp, r.f_c_ne - r.f_nc_e, 1e-12);
    for (double s : {r.s_closed_form, r.s_optimized}) {
      EXPECT_GE(s, 0.0);
      EXPECT_LE(s, 4.0 * std::numbers::sqrt2 + 1e-6);
    }
    EXPECT_LE(r.sdp_gap, cfg.sdp_tol);
  }
  const auto& first = result.rows.front();
  EXPECT_NEAR(first.s_closed_form, 4.0 * std::numbers::sqrt2, 1e-12);
  EXPECT_NEAR(first.ecp, 1.0 / 3.0, 1e-6);
  const auto& last = result.rows.back();
  EXPECT_NEAR(last.s_closed_form, 4.0, 1e-12);
  EXPECT_LE(last.ecp, 0.0);
}

TEST(Sweep, ThreadCountDoesNotChangeOutput) {
  SweepConfig cfg;
  cfg.p_step = 0.2;
  cfg.optimizer_restarts = 3;
  cfg.channel = ChannelSelection::qubit;
  const auto serial = format_csv(run_sweep(cfg).rows);
  cfg.jobs = 3;
  EXPECT_EQ(format_csv(run_sweep(cfg).rows), serial);
}

TEST(Sweep, PointSeedsDiffer) {
  EXPECT_NE(point_seed(42, Channel::total, 0), point_seed(42, Channel::qubit, 0));
  EXPECT_NE(point_seed(42, Channel::total, 0), point_seed(42, Channel::total, 1));
  EXPECT_NE(point_seed(42, Channel::total, 0), point_seed(43, Channel::total, 0));
}

TEST(DemoBounds, Values) {
  const auto r = demo_bounds(10, 42);
  EXPECT_EQ(r.broadcast_svetlichny, 4.0);
  EXPECT_EQ(r.broadcast_mermin, 4.0);
  EXPECT_NEAR(r.ghz_svetlichny.value, 4.0 * std::numbers::sqrt2, 1e-3);
  EXPECT_NEAR(r.ghz_mermin.value, r.broadcast_mermin, 1e-6);
}

TEST(Cli, ExitCodesForInvalidArguments) {
  TempDir dir;
  const auto log = dir / "log.txt";
  EXPECT_EQ(run_cli("", log), 1);
  EXPECT_EQ(run_cli("frobnicate", log), 1);
  EXPECT_EQ(run_cli("sweep --channel amplitude", log), 1);
  EXPECT_EQ(run_cli("sweep --p-min 2", log), 1);
  EXPECT_EQ(run_cli("sweep --p-min 0.8 --p-max 0.2", log), 1);
  EXPECT_EQ(run_cli("teleport --channel total", log), 1);
  EXPECT_EQ(run_cli("sweep --config " + (dir / "missing.cfg").string(), log), 1);
  EXPECT_EQ(run_cli("--help", log), 0);
}

TEST(Cli, TeleportPrintsReport) {
  TempDir dir;
  const auto log = dir / "log.txt";
  ASSERT_EQ(run_cli("teleport --channel total --p 0", log), 0);
  const auto text = slurp(log);
  EXPECT_NE(text.find("ecp        0.333333333"), std::string::npos) << text;
  EXPECT_NE(text.find("f_nc_e     0.666666666"), std::string::npos) << text;
}

TEST(Cli, PovmSelftestPasses) {
  TempDir dir;
  EXPECT_EQ(run_cli("povm-selftest", dir / "log.txt"), 0);
}

TEST(Cli, DemoBoundsRuns) {
  TempDir dir;
  const auto log = dir / "log.txt";
  ASSERT_EQ(run_cli("demo-bounds --restarts 5", log), 0);
  EXPECT_NE(slurp(log).find("classical broadcast  svetlichny 4  mermin 4"), std::string::npos);
}

TEST(Cli, ConfigFileWithCommandLineOverride) {
  TempDir dir;
  const auto cfg = dir / "sweep.cfg";
  {
    std::ofstream f(cfg);
    f << "channel = total\np-step = 0.5\nrestarts = 2\nout = " << (dir / "from_file.csv").string() << "\n";
  }
  const auto out = dir / "override.csv";
  ASSERT_EQ(run_cli("sweep --config " + cfg.string() + " --out " + out.string() + " --plot-data", dir / "log.txt"), 0);
  EXPECT_FALSE(fs::exists(dir / "from_file.csv"));
  const auto l = lines(slurp(out));
  ASSERT_EQ(l.size(), 4u);  // header + p = 0, 0.5, 1
  EXPECT_EQ(l[1].rfind("total,0,", 0), 0u);
  EXPECT_TRUE(fs::exists(dir / "override_total.dat"));
  EXPECT_FALSE(fs::exists(dir / "override_qubit.dat"));
}

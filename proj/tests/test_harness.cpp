#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "trasonet/harness.hpp"
#include "trasonet/completion.hpp"
#include "trasonet/sensing.hpp"

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

using namespace trasonet;
namespace fs = std::filesystem;

namespace
{
  struct TempDir
  {
    fs::path path;
    TempDir()
    {
      std::random_device rd;
      path = fs::temp_directory_path() / ("trasonet_test_" + std::to_string(rd()));
      fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string operator/(const std::string &name) const { return (path / name).string(); }
  };

  std::string slurp(const fs::path &p)
  {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  }

  void spit(const fs::path &p, const std::string &text)
  {
    std::ofstream(p, std::ios::binary) << text;
  }

  int run_cli(const std::string &args)
  {
    const int status = std::system((std::string(TRASONET_CLI) + " " + args + " >/dev/null 2>&1").c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
  }

  long count_lines(const std::string &text)
  {
    return std::count(text.begin(), text.end(), '\n');
  }

  const std::string kDesk = TRASONET_SOURCE_DIR "/configs/desk.json";
} // namespace

TEST_CASE("simulate writes a manifest and metrics, byte-identical on rerun")
{
  TempDir tmp;
  std::ostringstream log;
  SimulateOptions opt;
  opt.config_path = kDesk;
  opt.seed = 5;
  opt.out = tmp / "a";
  REQUIRE(cmd_simulate(opt, log) == kExitOk);
  opt.out = tmp / "b";
  REQUIRE(cmd_simulate(opt, log) == kExitOk);
  for (const char *f : {"series.csv", "density_bins.csv"})
  {
    const auto a = slurp(fs::path(tmp / "a") / f);
    CHECK_FALSE(a.empty());
    CHECK(a == slurp(fs::path(tmp / "b") / f));
  }
  const auto manifest = nlohmann::json::parse(slurp(fs::path(tmp / "a") / "manifest.json"));
  CHECK(manifest["status"] == "complete");
  CHECK(manifest["seed"] == 5);
  CHECK(manifest["config_hash"] == hex_hash(slurp(kDesk)));
  CHECK(manifest["wall_clock_s"].get<double>() >= 0.0);
  const auto metrics = nlohmann::json::parse(slurp(fs::path(tmp / "a") / "metrics.json"));
  CHECK(metrics["runs"].size() == 2u);
}

TEST_CASE("simulate rejects malformed input")
{
  TempDir tmp;
  spit(tmp / "bad.json", "{\"n_vehicles\": ");
  std::ostringstream log;
  SimulateOptions opt;
  opt.config_path = tmp / "bad.json";
  opt.out = tmp / "out";
  CHECK(cmd_simulate(opt, log) == kExitParse);
  opt.config_path = tmp / "missing.json";
  CHECK(cmd_simulate(opt, log) == kExitParse);
  opt.config_path = kDesk;
  opt.mode = "sideways";
  CHECK(cmd_simulate(opt, log) == kExitParse);
}

TEST_CASE("estimate: synthetic single run and sweep")
{
  TempDir tmp;
  std::ostringstream log;
  EstimateOptions opt;
  opt.synthetic = true;
  opt.out = tmp / "single";
  REQUIRE(cmd_estimate(opt, log) == kExitOk);
  std::istringstream err(slurp(fs::path(tmp / "single") / "error.csv"));
  std::string header, row;
  std::getline(err, header);
  std::getline(err, row);
  CHECK(header.rfind("sample_rate,trials,average_entropy,estimation_error", 0) == 0);
  std::vector<std::string> cells;
  std::stringstream rs(row);
  for (std::string c; std::getline(rs, c, ',');)
    cells.push_back(c);
  REQUIRE(cells.size() >= 4u);
  CHECK(std::stod(cells[3]) < 0.15);
  for (const char *f : {"matrix_values.csv", "matrix_mask.csv", "estimate.csv", "manifest.json"})
    CHECK(fs::exists(fs::path(tmp / "single") / f));

  opt.sweep = "sample_rate=0.1,0.2,0.3,0.4,0.5";
  opt.out = tmp / "sweep";
  REQUIRE(cmd_estimate(opt, log) == kExitOk);
  const auto curve = slurp(fs::path(tmp / "sweep") / "error_vs_entropy.csv");
  CHECK(count_lines(curve) == 6);
  std::istringstream cs(curve);
  std::getline(cs, header);
  double prev = 1e9;
  for (std::string line; std::getline(cs, line);)
  {
    std::stringstream ls(line);
    std::string field;
    for (int k = 0; k < 4; ++k)
      std::getline(ls, field, ',');
    const double e = std::stod(field);
    CHECK(e <= prev + 0.02);
    prev = e;
  }

  opt.sweep = "rank=1,2";
  opt.out = tmp / "bad";
  CHECK(cmd_estimate(opt, log) == kExitParse);
}

TEST_CASE("estimate: report files")
{
  TempDir tmp;
  std::ostringstream log;
  spit(tmp / "empty.csv", "vehicle_id,cycle,x,y,speed,heading\n");
  EstimateOptions opt;
  opt.reports_path = tmp / "empty.csv";
  opt.config_path = kDesk;
  opt.out = tmp / "empty";
  CHECK(cmd_estimate(opt, log) == kExitOk);
  CHECK(log.str().find("warning") != std::string::npos);
  const auto mask = slurp(fs::path(tmp / "empty") / "matrix_mask.csv");
  CHECK(mask.find(",1") == std::string::npos);

  const auto c = desk_scenario();
  const auto net = build_road_network(c);
  std::vector<GpsReport> reports;
  for (int t = 0; t < 5; ++t)
    reports.push_back({1, t, net.point_on(0, 10.0 * t), 30.0, {0, 1}});
  std::ostringstream rs;
  write_reports_csv(rs, reports);
  spit(tmp / "few.csv", rs.str());
  opt.reports_path = tmp / "few.csv";
  opt.out = tmp / "few";
  CHECK(cmd_estimate(opt, log) == kExitOk);
  std::ifstream est_in(fs::path(tmp / "few") / "estimate.csv");
  const auto est = read_estimate_csv(est_in);
  CHECK(static_cast<std::size_t>(est.rows()) == net.size());

  opt.reports_path = tmp / "nope.csv";
  CHECK(cmd_estimate(opt, log) == kExitParse);
}

TEST_CASE("recommend needs an estimate or --fresh")
{
  TempDir tmp;
  std::ostringstream log;
  RecommendOptions opt;
  opt.config_path = kDesk;
  opt.out = tmp / "r1";
  CHECK(cmd_recommend(opt, log) == kExitParse);

  opt.fresh = true;
  REQUIRE(cmd_recommend(opt, log) == kExitOk);
  const auto voice = slurp(fs::path(tmp / "r1") / "recommendation_voice.csv");
  CHECK(count_lines(voice) == 1 + 16 * 2);
  CHECK(fs::exists(fs::path(tmp / "r1") / "recommendation_video.csv"));

  // Reuse the fresh estimate; the maps must match.
  RecommendOptions reuse;
  reuse.config_path = kDesk;
  reuse.estimate_path = tmp / "r1/estimate.csv";
  reuse.out = tmp / "r2";
  REQUIRE(cmd_recommend(reuse, log) == kExitOk);
  CHECK(slurp(fs::path(tmp / "r2") / "recommendation_voice.csv") == voice);

  spit(tmp / "short.csv", "segment_id,c0\n0,1\n");
  reuse.estimate_path = tmp / "short.csv";
  CHECK(cmd_recommend(reuse, log) == kExitParse);
}

TEST_CASE("ahp command")
{
  TempDir tmp;
  std::ostringstream out, log;
  AhpOptions opt;
  opt.matrix_path = TRASONET_SOURCE_DIR "/data/voice_criteria.csv";
  REQUIRE(cmd_ahp(opt, out, log) == kExitOk);
  CHECK(out.str().find("acceptable,true") != std::string::npos);

  std::ostringstream jout;
  opt.matrix_path = TRASONET_SOURCE_DIR "/data/intransitive.csv";
  opt.json = true;
  REQUIRE(cmd_ahp(opt, jout, log) == kExitOk);
  const auto j = nlohmann::json::parse(jout.str());
  CHECK(j["cr"].get<double>() > 0.1);
  CHECK(j["acceptable"] == false);

  spit(tmp / "bad.csv", "1,2\n2,1\n");
  opt.matrix_path = tmp / "bad.csv";
  CHECK(cmd_ahp(opt, out, log) == kExitParse);
}

TEST_CASE("matrix CSV accepts fractions and comments")
{
  std::istringstream in("# criteria\n1,3\n1/3,1\n");
  const auto m = read_matrix_csv(in);
  REQUIRE(m.size() == 2u);
  CHECK(m[1][0] == doctest::Approx(1.0 / 3.0));
  std::istringstream ragged("1,2\n0.5\n");
  CHECK_THROWS_AS(read_matrix_csv(ragged), ValidationError);
  CHECK(parse_sweep("sample_rate=0.1,0.5") == std::vector<double>{0.1, 0.5});
  CHECK_THROWS_AS(parse_sweep("sample_rate=0.1,x"), ValidationError);
}

TEST_CASE("output directory resolution")
{
  CHECK(resolve_output_dir(std::string("/x/y"), "simulate") == fs::path("/x/y"));
  ::setenv(kOutputRootEnv, "/tmp/root", 1);
  CHECK(resolve_output_dir(std::nullopt, "estimate") == fs::path("/tmp/root/estimate"));
  ::unsetenv(kOutputRootEnv);
  CHECK(resolve_output_dir(std::nullopt, "ahp") == fs::path("trasonet_out/ahp"));
}

TEST_CASE("CLI exit codes")
{
  TempDir tmp;
  spit(tmp / "bad.json", "{");
  CHECK(run_cli("simulate --config " + (tmp / "bad.json") + " --out " + (tmp / "o")) == kExitParse);
  CHECK(run_cli("recommend --config " + kDesk + " --out " + (tmp / "o")) == kExitParse);
  CHECK(run_cli("ahp " + (tmp / "bad.json")) == kExitParse);
  CHECK(run_cli("frobnicate") == kExitParse);
  CHECK(run_cli("estimate --synthetic --rows 20 --cols 12 --rank 2 --out " + (tmp / "e")) == kExitOk);
  CHECK(run_cli(std::string("ahp ") + TRASONET_SOURCE_DIR "/data/video_criteria.csv") == kExitOk);
  CHECK(run_cli("--help") == kExitOk);
}

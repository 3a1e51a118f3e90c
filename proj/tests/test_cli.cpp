#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include "carpenter/cli.hpp"
#include "carpenter/io.hpp"

#include <filesystem>
#include <sstream>

using namespace carpenter;
namespace fs = std::filesystem;

namespace {

const fs::path kConfigs = fs::path(CARPENTER_SOURCE_DIR) / "configs";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run cli(std::vector<std::string> args) {
  args.insert(args.begin(), "carpenter");
  std::ostringstream out;
  std::ostringstream err;
  const int code = run_cli(args, out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "carpenter_test_cli" / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string config(const std::string& name) { return (kConfigs / name).string(); }

} // namespace

TEST_CASE("check examples") {
  auto demo = cli({"check", "--config", config("neumann_demo.json")});
  CHECK(demo.code == 0);

  auto bad = cli({"check", "--config", config("violation.json")});
  CHECK(bad.code == 2);
  auto verdict = nlohmann::json::parse(bad.out);
  CHECK(verdict["first_violation_index"] == 1);
  CHECK(verdict["ok"] == false);

  const fs::path malformed = scratch("malformed.json");
  write_text(malformed, "{\"lambda\": [1, 2");
  CHECK(cli({"check", "--config", malformed.string()}).code == 3);

  const fs::path out = scratch("check_out");
  CHECK(cli({"check", "--config", config("geometric_conservation.json"), "--out", out.string()}).code == 0);
  const std::string profile = read_text(out / "delta_profile.csv");
  CHECK(profile.rfind("k,delta,is_zero,is_record,is_tail_min\n1,0.5,0,1,", 0) == 0);
}

TEST_CASE("construct routes") {
  const fs::path demo = scratch("demo");
  auto r = cli({"construct", "--demo", "neumann-dirichlet", "--window", "64", "--steps", "40", "--out", demo.string()});
  CHECK(r.code == 0);
  CHECK(r.out.find("route PointwiseDominated") != std::string::npos);
  auto report = nlohmann::json::parse(read_text(demo / "report.json"));
  CHECK(report["verification"]["pass"] == true);

  const fs::path geo = scratch("geo");
  auto g = cli({"construct", "--config", config("geometric_conservation.json"), "--out", geo.string()});
  CHECK(g.code == 0);
  CHECK(g.out.find("route ConservationOfMass") != std::string::npos);

  const fs::path id = scratch("identity");
  auto i = cli({"construct", "--config", config("identity.json"), "--out", id.string()});
  CHECK(i.code == 0);
  auto ireport = nlohmann::json::parse(read_text(id / "report.json"));
  CHECK(ireport["logs"].empty());
  CHECK(ireport["route"] == "ZerosInfinitelyOften");

  CHECK(cli({"construct", "--config", config("violation.json"), "--out", scratch("v").string()}).code == 2);
}

TEST_CASE("verify fresh, tampered and missing results") {
  const fs::path dir = scratch("verify");
  REQUIRE(cli({"construct", "--config", config("neumann_demo.json"), "--out", dir.string()}).code == 0);
  CHECK(cli({"verify", "--result", dir.string()}).code == 0);

  std::string vectors = read_text(dir / "vectors.csv");
  const auto line_end = vectors.find('\n', vectors.find('\n') + 1);
  const auto comma = vectors.rfind(',', line_end);
  vectors.replace(comma + 1, line_end - comma - 1, "0.25");
  write_text(dir / "vectors.csv", vectors);
  CHECK(cli({"verify", "--result", dir.string()}).code == 2);

  fs::remove(dir / "report.json");
  CHECK(cli({"verify", "--result", dir.string()}).code == 3);
}

TEST_CASE("demo subcommand") {
  auto table = cli({"demo", "sine-cosine-table"});
  CHECK(table.code == 0);
  CHECK(table.out.find("\n1,0,2\n") != std::string::npos);

  const fs::path dir = scratch("nd");
  auto nd = cli({"demo", "neumann-dirichlet", "--grid", "33", "--out", dir.string()});
  CHECK(nd.code == 0);
  auto report = nlohmann::json::parse(read_text(dir / "report.json"));
  bool found = false;
  for (const auto& v : report["verification"]["per_vector"]) {
    if (v["slot"] == 1) {
      CHECK(std::abs(v["achieved"].get<double>() - 1.0) <= 1e-10);
      found = true;
    }
  }
  CHECK(found);
  CHECK(fs::exists(dir / "sample_s1.csv"));

  CHECK(cli({"demo", "neumann-dirichlet", "--grid", "1", "--out", scratch("g1").string()}).code == 2);
  CHECK(cli({"demo", "no-such-demo"}).code == 2);
}

TEST_CASE("identical runs give identical artifacts") {
  for (const char* name : {"neumann_demo.json", "limalpha.json", "tonondec.json"}) {
    const fs::path a = scratch(std::string("det_a_") + name);
    const fs::path b = scratch(std::string("det_b_") + name);
    REQUIRE(cli({"construct", "--config", config(name), "--seed", "7", "--out", a.string()}).code == 0);
    REQUIRE(cli({"construct", "--config", config(name), "--seed", "7", "--out", b.string()}).code == 0);
    for (const auto& entry : fs::directory_iterator(a)) {
      CHECK(read_text(entry.path()) == read_text(b / entry.path().filename()));
    }
  }
}

TEST_CASE("export writes plans for zero blocks") {
  const fs::path dir = scratch("export");
  CHECK(cli({"export", "--config", config("zeros.json"), "--out", dir.string()}).code == 0);
  auto plans = nlohmann::json::parse(read_text(dir / "block_plans.json"));
  REQUIRE(plans.size() == 2);
  // (0, 1) -> (1, 0) is a rearrangement: no transfer, only relabeling.
  CHECK(plans[0]["transfers"].empty());
  CHECK(plans[0]["block"] == nlohmann::json::array({1, 2}));
}

TEST_CASE("usage errors") {
  CHECK(cli({}).code == 3);
  CHECK(cli({"construct", "--out", scratch("x").string()}).code == 3);
  CHECK(cli({"verify"}).code == 3);
}

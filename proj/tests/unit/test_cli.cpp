#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "rfmfs/cli.hpp"

namespace {

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "rfmfs");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = rfmfs::run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

std::filesystem::path scratch() {
  auto dir = std::filesystem::temp_directory_path() / "rfmfs_cli_unit";
  std::filesystem::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("phase command") {
  const auto r = run({"phase", "--beta", "1", "--J", "2", "--dist", "rademacher:1"});
  CHECK(r.code == 0);
  CHECK(r.out.find("SpinGlass") != std::string::npos);
  CHECK(r.out.find("0.6666666667") != std::string::npos);
  const auto j = run({"phase", "--beta", "1", "--J", "2", "--dist", "rademacher:1", "--format", "json"});
  const auto doc = nlohmann::json::parse(j.out);
  CHECK(doc["results"]["phase"] == "SpinGlass");
  CHECK(doc["results"]["maximizers"][0][0].get<double>() == doctest::Approx(0.5));
  CHECK(doc["config"]["beta"].get<double>() == 1.0);
  CHECK(doc.contains("build_id"));
}

TEST_CASE("errors name the offending key and leave no files") {
  const auto dir = scratch();
  const auto base = (dir / "err").string();
  std::filesystem::remove(base + ".csv");
  std::filesystem::remove(base + ".json");
  auto r = run({"weights", "--J", "2", "--schedule", "0:1:1:0:1", "--n", "100", "--out", base});
  CHECK(r.code != 0);
  CHECK(r.err.find("'beta'") != std::string::npos);
  CHECK_FALSE(std::filesystem::exists(base + ".csv"));
  CHECK_FALSE(std::filesystem::exists(base + ".json"));

  r = run({"phase", "--beta", "1", "--J", "2", "--dist", "gaussian:0:-1"});
  CHECK(r.code != 0);
  CHECK(r.err.find("'dist'") != std::string::npos);
  r = run({"weights", "--beta", "1", "--J", "2", "--schedule", "0:1:1:0:1"});
  CHECK(r.code != 0);
  CHECK(r.err.find("'n'") != std::string::npos);
  r = run({"metastate", "--beta", "1", "--J", "2", "--dist", "rademacher:1"});
  CHECK(r.code != 0);
  CHECK(r.err.find("'mode'") != std::string::npos);
  r = run({"phase", "--beta", "1", "--J", "2", "--dist", "rademacher:1", "--format", "xml"});
  CHECK(r.code != 0);
  r = run({"--beta", "1"});
  CHECK(r.code != 0);
}

TEST_CASE("config files with flag override and reproducible outputs") {
  const auto dir = scratch();
  {
    std::ofstream cfg(dir / "w.cfg");
    cfg << "beta = 3\nJ = 2\nschedule = 0:1:1:0:1\nn = 100,1000\n";
  }
  const auto a = (dir / "a").string(), b = (dir / "b").string();
  auto ra = run({"weights", "--config", (dir / "w.cfg").string(), "--beta", "1", "--out", a});
  auto rb = run({"weights", "--config", (dir / "w.cfg").string(), "--beta", "1", "--out", b});
  REQUIRE(ra.code == 0);
  REQUIRE(rb.code == 0);
  CHECK(slurp(a + ".csv") == slurp(b + ".csv"));
  const auto csv = slurp(a + ".csv");
  CHECK(csv.rfind("n,m_par,m_perp,w_plus\n", 0) == 0);
  auto ja = nlohmann::json::parse(slurp(a + ".json"));
  auto jb = nlohmann::json::parse(slurp(b + ".json"));
  CHECK(ja["config"]["beta"].get<double>() == 1.0);
  ja.erase("runtime_seconds");
  jb.erase("runtime_seconds");
  CHECK(ja == jb);
  // 17 significant digits.
  CHECK(csv.find("0.01") != std::string::npos);
}

TEST_CASE("metastate modes produce the documented schemas") {
  auto r = run({"metastate", "--mode", "arcsine", "--dist", "rademacher:1", "--N", "500", "--replicas", "20",
                "--seed", "7", "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("replica,t_plus\n", 0) == 0);
  r = run({"metastate", "--mode", "aw", "--beta", "1", "--J", "2", "--dist", "gaussian:0:1", "--n", "200",
           "--replicas", "10", "--format", "csv"});
  REQUIRE(r.code == 0);
  CHECK(r.out.rfind("replica,w_plus,f0,", 0) == 0);
  r = run({"metastate", "--mode", "aw", "--beta", "0.5", "--J", "2", "--dist", "gaussian:0:1", "--n", "200"});
  CHECK(r.code != 0);
  CHECK(r.err.find("OrderedParamagnet") != std::string::npos);
}

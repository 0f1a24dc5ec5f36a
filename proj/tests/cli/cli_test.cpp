#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <json.hpp>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;

namespace {

struct Workdir
{
  fs::path path;

  explicit Workdir(const std::string& name)
    : path(fs::temp_directory_path() / ("contiv_cli_" + name))
  {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~Workdir() { fs::remove_all(path); }

  std::string operator/(const std::string& f) const { return (path / f).string(); }
};

int
run(const std::string& args)
{
  const std::string cmd = std::string("\"") + CONTIV_CLI_PATH + "\" " + args + " 2>/dev/null";
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::vector<std::vector<std::string>>
read_csv(const std::string& path)
{
  std::ifstream in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) {
      cells.push_back(cell);
    }
    rows.push_back(cells);
  }
  return rows;
}

nlohmann::json
read_json(const std::string& path)
{
  std::ifstream in(path);
  return nlohmann::json::parse(in);
}

} // namespace

TEST_CASE("simulate smoke run")
{
  Workdir w("simulate");
  REQUIRE(run("simulate --dgp liv_main --n 500 --S 2 --seed 3 --alphas 0.1 --output " + (w / "grid.csv")) == 0);
  const auto rows = read_csv(w / "grid.csv");
  REQUIRE(rows.size() == 1 + 3);
  CHECK(rows[0][0] == "dgp");
  for (std::size_t r = 1; r < rows.size(); ++r) {
    CHECK(rows[r][0] == "liv_main");
    CHECK(std::isfinite(std::stod(rows[r][6])));
  }
  const auto m = read_json(w / "grid.csv.manifest.json");
  CHECK(m["command"] == "simulate");
  CHECK(m["seed"] == 3);
  CHECK(m["schema_version"] == 1);
}

TEST_CASE("estimate-liv on generated data recovers the LIV curve")
{
  Workdir w("liv");
  REQUIRE(run("generate --dgp liv_main --n 20000 --seed 8 --output " + (w / "data.csv")) == 0);
  REQUIRE(run("estimate-liv --input " + (w / "data.csv") + " --treatment continuous --h 0.4 --seed 9 --output " +
              (w / "liv.csv")) == 0);
  const auto rows = read_csv(w / "liv.csv");
  REQUIRE(rows.size() == 1 + 50);
  CHECK(rows[0] == std::vector<std::string>{"z0", "gamma", "stderr", "ci_lo", "ci_hi", "theta_y", "theta_a", "flag"});
  std::size_t best = 1;
  for (std::size_t r = 1; r < rows.size(); ++r) {
    if (std::abs(std::stod(rows[r][0]) - 2.0) < std::abs(std::stod(rows[best][0]) - 2.0)) {
      best = r;
    }
  }
  const double z0 = std::stod(rows[best][0]);
  const double gamma = std::stod(rows[best][1]);
  const double se = std::stod(rows[best][2]);
  CHECK(std::abs(z0 - 2.0) < 0.1);
  CHECK(std::abs(gamma + 0.507 * z0 * z0) < 3.0 * se);
}

TEST_CASE("automatic bandwidth agrees with select-bandwidth")
{
  Workdir w("auto");
  REQUIRE(run("generate --dgp liv_main --n 3000 --seed 4 --output " + (w / "data.csv")) == 0);
  const std::string common = " --input " + (w / "data.csv") + " --treatment continuous --nuisance learned --seed 5";
  REQUIRE(run("select-bandwidth" + common + " --candidates 0.4,0.8,1.6 --output " + (w / "risk.csv")) == 0);
  REQUIRE(run("estimate-curve" + common + " --h auto --candidates 0.4,0.8,1.6 --output " + (w / "curve.csv")) == 0);
  const auto risk = read_csv(w / "risk.csv");
  REQUIRE(risk.size() == 4);
  double chosen = NAN;
  for (std::size_t r = 1; r < risk.size(); ++r) {
    if (risk[r][4] == "1") {
      chosen = std::stod(risk[r][0]);
    }
  }
  const auto m = read_json(w / "curve.csv.manifest.json");
  CHECK(m["h"].get<double>() == doctest::Approx(chosen));
  CHECK(m["bandwidth"]["h"]["chosen_h"].get<double>() == doctest::Approx(chosen));
  CHECK(read_json(w / "risk.csv.manifest.json")["h"].get<double>() == doctest::Approx(chosen));
}

TEST_CASE("exit codes")
{
  Workdir w("errors");
  CHECK(run("estimate-curve --input " + (w / "missing.csv") + " --output " + (w / "x.csv")) == 94);
  {
    std::ofstream f(w / "bad.csv");
    f << "x1,z,a,y\n0,1,2,1\n";
  }
  CHECK(run("estimate-curve --input " + (w / "bad.csv") + " --output " + (w / "x.csv")) == 91);
  {
    std::ofstream f(w / "noy.csv");
    f << "x1,z,a\n0,1,1\n";
  }
  CHECK(run("estimate-curve --input " + (w / "noy.csv") + " --output " + (w / "x.csv")) == 90);
  CHECK(run("estimate-curve --dgp liv_main --kernel box --output " + (w / "x.csv")) == 12);
  CHECK(run("estimate-curve --dgp liv_main --h -1 --output " + (w / "x.csv")) == 10);
  CHECK(run("simulate --S 1 --output " + (w / "x.csv")) == 80);
  CHECK(run("simulate --bogus") == 95);
  CHECK(run("--help > /dev/null") == 0);
}

TEST_CASE("config file with flag override")
{
  Workdir w("config");
  {
    std::ofstream f(w / "run.ini");
    f << "[simulate]\nS=2\nn=400\nalphas=0.2\nestimators=localpoly\nseed=9\n";
  }
  REQUIRE(run("--config " + (w / "run.ini") + " simulate --seed 4 --output " + (w / "s.csv")) == 0);
  const auto rows = read_csv(w / "s.csv");
  REQUIRE(rows.size() == 2);
  CHECK(rows[1][1] == "localpoly");
  CHECK(rows[1][2] == "400");
  CHECK(read_json(w / "s.csv.manifest.json")["seed"] == 4);
}

#include <sys/wait.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "doctest.h"

namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("casebase_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& path, const std::string& text) { std::ofstream(path, std::ios::binary) << text; }

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

struct Result {
  int code;
  std::string err;
};

Result cli(const fs::path& dir, const std::string& args) {
  const fs::path err = dir / "stderr.txt";
  const std::string cmd = "cd '" + dir.string() + "' && '" CASEBASE_CLI "' " + args + " > /dev/null 2> '" + err.string() + "'";
  const int status = std::system(cmd.c_str());
  return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, read_text(err)};
}

struct Csv {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  std::size_t column(const std::string& name) const {
    for (std::size_t c = 0; c < header.size(); ++c)
      if (header[c] == name) return c;
    FAIL("no column " << name);
    return 0;
  }
  double at(std::size_t row, const std::string& name) const { return std::stod(rows.at(row).at(column(name))); }
};

Csv read_csv(const fs::path& path) {
  std::istringstream in(read_text(path));
  Csv csv;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    if (first) csv.header = cells;
    else csv.rows.push_back(cells);
    first = false;
  }
  return csv;
}

const char* kTruth = R"({"n": 3000, "seed": 8, "tau": 10, "causes": [{"family": "exponential", "rate": 0.1}]})";

}  // namespace

TEST_CASE("simulate, sample, fit, risk pipeline recovers the exponential CIF") {
  const auto dir = scratch("pipeline");
  write_text(dir / "truth.json", kTruth);
  write_text(dir / "profiles.csv", "label\nall\n");
  REQUIRE(cli(dir, "simulate --truth truth.json -o data.csv").code == 0);
  REQUIRE(cli(dir, "sample -i data.csv -o moments.csv --ratio 100 --seed 3").code == 0);
  REQUIRE(cli(dir, "fit -i moments.csv -o model.json -m 'time=constant'").code == 0);
  REQUIRE(cli(dir, "risk --model model.json --profiles profiles.csv --grid 0:10:11 -o risk.csv").code == 0);
  for (const char* f : {"data.csv", "moments.csv", "model.json", "model.coef.csv", "risk.csv",
                        "data.csv.run.json", "moments.csv.run.json", "model.json.run.json", "risk.csv.run.json"})
    CHECK_MESSAGE(fs::exists(dir / f), f);

  const auto coef = read_csv(dir / "model.coef.csv");
  const double log_rate = coef.at(0, "estimate");
  const double se_log_rate = coef.at(0, "std_error");
  const auto risk = read_csv(dir / "risk.csv");
  REQUIRE(risk.rows.size() == 11);
  CHECK(risk.at(5, "time") == 5.0);
  const double rate = std::exp(log_rate);
  const double se_cif = 5.0 * rate * std::exp(-5.0 * rate) * se_log_rate;
  CHECK(std::abs(risk.at(5, "cif_all") - (1.0 - std::exp(-0.5))) <= 3.0 * se_cif);
  CHECK(risk.at(5, "cif_all") + risk.at(5, "surv_all") == doctest::Approx(1.0).epsilon(1e-12));

  const std::string meta = read_text(dir / "moments.csv.run.json");
  CHECK(meta.find("\"command\"") != std::string::npos);
  CHECK(meta.find("\"seed\": 3") != std::string::npos);
  CHECK(meta.find("\"version\"") != std::string::npos);

  REQUIRE(cli(dir, "fit -i moments.csv -o nested.json -m 'time=constant'").code == 0);
  REQUIRE(cli(dir, "fit -i moments.csv -o full.json -m 'time=log'").code == 0);
  REQUIRE(cli(dir, "compare --nested nested.json --full full.json -o lrt.json").code == 0);
  CHECK(read_text(dir / "lrt.json").find("\"df\"") != std::string::npos);
  REQUIRE(cli(dir, "poptime -i data.csv --base moments.csv -o plot.svg --layout-out layout.csv").code == 0);
  CHECK(read_text(dir / "plot.svg").find("<svg") != std::string::npos);
  CHECK(fs::exists(dir / "layout.csv"));
}

TEST_CASE("reruns are byte-identical") {
  const auto dir = scratch("rerun");
  write_text(dir / "truth.json", kTruth);
  write_text(dir / "profiles.csv", "label\nall\n");
  auto run = [&](const std::string& tag) {
    REQUIRE(cli(dir, "simulate --truth truth.json -o d" + tag + ".csv").code == 0);
    REQUIRE(cli(dir, "sample -i d" + tag + ".csv -o m" + tag + ".csv --ratio 20 --seed 9").code == 0);
    REQUIRE(cli(dir, "fit -i m" + tag + ".csv -o f" + tag + ".json -m 'time=bspline(df=4)'").code == 0);
    REQUIRE(cli(dir, "risk --model f" + tag + ".json --profiles profiles.csv --method monte_carlo --n-samples 2000 -o r" +
                         tag + ".csv")
                .code == 0);
    REQUIRE(cli(dir, "poptime -i d" + tag + ".csv --base m" + tag + ".csv -o p" + tag + ".svg").code == 0);
  };
  run("1");
  run("2");
  for (const char* stem : {"d%.csv", "m%.csv", "f%.json", "f%.coef.csv", "r%.csv", "p%.svg"}) {
    std::string a = stem, b = stem;
    a.replace(a.find('%'), 1, "1");
    b.replace(b.find('%'), 1, "2");
    CHECK_MESSAGE(read_text(dir / a) == read_text(dir / b), a);
  }
}

TEST_CASE("fit samples a raw survival dataset on the fly") {
  const auto dir = scratch("autosample");
  write_text(dir / "truth.json", kTruth);
  REQUIRE(cli(dir, "simulate --truth truth.json -o data.csv").code == 0);
  REQUIRE(cli(dir, "fit -i data.csv -o model.json -m 'time=constant' --ratio 10 --seed 2").code == 0);
  const auto coef = read_csv(dir / "model.coef.csv");
  CHECK(std::abs(coef.at(0, "estimate") - std::log(0.1)) <= 4.0 * coef.at(0, "std_error"));
}

TEST_CASE("config files supply defaults and flags win") {
  const auto dir = scratch("config");
  write_text(dir / "truth.json", kTruth);
  REQUIRE(cli(dir, "simulate --truth truth.json -o data.csv").code == 0);
  write_text(dir / "sample.conf", "# sampling defaults\nratio = 5\nseed = 4\n");
  REQUIRE(cli(dir, "--config sample.conf sample -i data.csv -o a.csv").code == 0);
  REQUIRE(cli(dir, "sample -i data.csv -o b.csv --ratio 5 --seed 4").code == 0);
  CHECK(read_text(dir / "a.csv") == read_text(dir / "b.csv"));
  REQUIRE(cli(dir, "--config sample.conf sample -i data.csv -o c.csv --ratio 2").code == 0);
  REQUIRE(cli(dir, "sample -i data.csv -o d.csv --ratio 2 --seed 4").code == 0);
  CHECK(read_text(dir / "c.csv") == read_text(dir / "d.csv"));
  write_text(dir / "broken.conf", "ratio 5\n");
  CHECK(cli(dir, "--config broken.conf sample -i data.csv -o e.csv").code == 2);
  CHECK(cli(dir, "--config missing.conf sample -i data.csv -o e.csv").code == 3);
}

TEST_CASE("exit codes and the error line") {
  const auto dir = scratch("errors");
  auto before = [&] {
    std::size_t n = 0;
    for ([[maybe_unused]] const auto& e : fs::directory_iterator(dir)) ++n;
    return n;
  };

  auto r = cli(dir, "sample --bogus -i x.csv -o y.csv");
  CHECK(r.code == 2);
  CHECK(r.err.rfind("casebase: error kind=usage exit=2 message=", 0) == 0);
  CHECK(!fs::exists(dir / "y.csv"));
  CHECK(cli(dir, "").code == 2);
  CHECK(cli(dir, "teleport").code == 2);
  CHECK(cli(dir, "--version").code == 0);

  write_text(dir / "bad.csv", "id,time,event\n1,-1,1\n2,3,0\n");
  const std::size_t files = before();
  r = cli(dir, "sample -i bad.csv -o out.csv");
  CHECK(r.code == 3);
  CHECK(r.err.rfind("casebase: error kind=", 0) == 0);
  CHECK(r.err.find(" exit=3 message=") != std::string::npos);
  CHECK(std::count(r.err.begin(), r.err.end(), '\n') == 1);
  CHECK(!fs::exists(dir / "out.csv"));
  CHECK(before() == files);

  CHECK(cli(dir, "sample -i nothing.csv -o out.csv").code == 3);

  write_text(dir / "sep.csv",
             "id,time,event,x\n1,1,1,1\n2,2,1,2\n3,3,1,3\n4,4,1,4\n5,5,0,1e9\n6,6,0,1e9\n7,2.5,0,1e9\n");
  CHECK(cli(dir, "sample -i sep.csv -o out.csv --ratio -3").code == 2);
  r = cli(dir, "fit -i sep.csv -o sep.json -m 'time=constant; terms=flag' --annotate 'flag=x<=time' --ratio 5");
  CHECK(r.code == 4);
  CHECK(r.err.find("exit=4") != std::string::npos);
  CHECK(!fs::exists(dir / "sep.json"));

  write_text(dir / "model.json", "{\"format\": \"casebase-model\", \"version\": 999}");
  write_text(dir / "profiles.csv", "label\nall\n");
  CHECK(cli(dir, "risk --model model.json --profiles profiles.csv -o risk.csv").code == 3);
}

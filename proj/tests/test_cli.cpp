#include <catch_amalgamated.hpp>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "cavity/cli/runner.hpp"

using namespace cavity;
using namespace cavity::cli;
namespace fs = std::filesystem;
using Catch::Matchers::ContainsSubstring;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

/// Fresh scratch directory per test case, removed afterwards.
struct ScratchDir {
  fs::path path;
  explicit ScratchDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("cavity_cli_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~ScratchDir() { fs::remove_all(path); }
  std::string str(const std::string& sub = "") const { return (path / sub).string(); }
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(p));
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::string cell;
    std::istringstream ls(line);
    while (std::getline(ls, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

int run(const std::vector<std::string>& args, std::string* err_text = nullptr) {
  std::ostringstream out, err;
  const int rc = run_cli(args, out, err);
  if (err_text) *err_text = err.str();
  return rc;
}

void write_text(const fs::path& p, const std::string& text) { std::ofstream(p) << text; }

}  // namespace

TEST_CASE("number formatting", "[cli]") {
  CHECK(format_number(0.0) == "0");
  CHECK(format_number(0.5) == "0.5");
  CHECK(format_number(4.26171998765432) == "4.26171998765");
  CHECK(format_number(-123456.7890123) == "-123456.789012");
  CHECK(format_number(1e-4) == "0.0001");
  CHECK(format_number(2.5e-5) == "2.50000000000e-05");
  CHECK(format_number(1e6) == "1.00000000000e+06");
  CHECK(format_number(std::nan("")) == "nan");
}

TEST_CASE("sha256 of known strings", "[cli]") {
  CHECK(sha256_hex("") == "e3b0c44298fc1c149afbf4c8996fb92427ae41e4649b934ca495991b7852b855");
  CHECK(sha256_hex("abc") == "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
}

TEST_CASE("minimal flags give a complete config", "[cli][config]") {
  const auto cfg = parse_config({"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--beta", "0.26"});
  CHECK(cfg.command == "evolve");
  CHECK(*cfg.g == 1.0);
  CHECK(cfg.betas == std::vector<double>{0.26});
  CHECK(cfg.lambda_re == 1.0);
  CHECK(cfg.lambda_im == 0.0);
  CHECK(cfg.t0 == 0.0);
  CHECK(cfg.t1 == 5.0);
  CHECK_FALSE(cfg.modes.has_value());
  const auto& d = cfg.defaults_applied;
  for (const char* key : {"hbar", "c", "kB", "lambda_re", "t1", "dt", "modes", "coupling_convention"}) {
    CHECK(std::find(d.begin(), d.end(), key) != d.end());
  }
  CHECK_THAT(cfg.params().delta_omega(), WithinRel(10.0, 1e-15));
}

TEST_CASE("alpha supplies g", "[cli][config]") {
  const auto cfg = parse_config({"spectrum", "--alpha", "0.2", "--omega-bar", "5", "--delta", "0.1"});
  CHECK_THAT(*cfg.g, WithinRel(1.0, 1e-12));
  CHECK_THAT(cfg.params().g(), WithinRel(1.0, 1e-12));
  CHECK_THROWS_WITH(
      parse_config({"spectrum", "--alpha", "0.2", "--g", "3", "--omega-bar", "5", "--delta", "0.1"}),
      ContainsSubstring("alpha"));
}

TEST_CASE("invalid values name the field", "[cli][config]") {
  CHECK_THROWS_WITH(parse_config({"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--beta", "-1"}),
                    "beta must be positive");
  CHECK_THROWS_WITH(parse_config({"evolve", "--g", "0", "--omega-bar", "5", "--delta", "0.1", "--beta", "1"}),
                    "g must be positive");
  CHECK_THROWS_WITH(parse_config({"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1"}),
                    ContainsSubstring("beta"));
  CHECK_THROWS_WITH(parse_config({"evolve", "--omega-bar", "5", "--delta", "0.1", "--beta", "1"}),
                    ContainsSubstring("g is required"));
  CHECK_THROWS_WITH(parse_config({"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--beta", "1",
                                  "--t0", "3", "--t1", "2"}),
                    "t1 must exceed t0");
  CHECK_THROWS_WITH(parse_config({"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--temperature",
                                  "0"}),
                    "temperature must be positive");
  CHECK_THROWS_AS(parse_config({"teleport", "--g", "1"}), ConfigError);
  CHECK_THROWS_AS(parse_config({"evolve", "--g", "abc"}), ConfigError);
}

TEST_CASE("config file, overrides and unknown keys", "[cli][config]") {
  ScratchDir dir("config");
  write_text(dir.path / "run.json",
             R"({"g": 1, "omega_bar": 5, "delta": 0.1, "temperature": [2.0, 4.0], "t1": 3, "modes": 80})");
  const auto cfg = parse_config({"evolve", "--config", dir.str("run.json"), "--t1", "4"});
  CHECK(cfg.t1 == 4.0);
  CHECK(*cfg.modes == 80);
  REQUIRE(cfg.betas.size() == 2);
  CHECK_THAT(cfg.betas[0], WithinRel(0.5, 1e-15));
  CHECK(cfg.resolved["temperature_input"] == nlohmann::json({2.0, 4.0}));

  const auto flagged = parse_config({"evolve", "--config", dir.str("run.json"), "--beta", "0.3"});
  CHECK(flagged.betas == std::vector<double>{0.3});

  write_text(dir.path / "bad.json", R"({"g": 1, "omega_bar": 5, "delta": 0.1, "beta": 1, "gee": 2})");
  CHECK_THROWS_WITH(parse_config({"evolve", "--config", dir.str("bad.json")}),
                    "unknown configuration key: gee");
  write_text(dir.path / "broken.json", "{ g: 1");
  CHECK_THROWS_AS(parse_config({"evolve", "--config", dir.str("broken.json")}), ConfigError);
  CHECK_THROWS_AS(parse_config({"evolve", "--config", dir.str("missing.json")}), ConfigError);
}

TEST_CASE("manifest round-trips", "[cli][manifest]") {
  RunManifest m;
  m.command = "evolve";
  m.config = {{"g", 1.0}, {"beta", {0.26, 0.51}}, {"dt", nullptr}};
  m.defaults_applied = {"hbar", "dt"};
  m.field_modes = 64;
  m.normal_modes = 65;
  m.tail_bound = 3.14159e-13;
  m.started_at = "2026-01-01T00:00:00Z";
  m.wall_seconds = 0.123456789;
  m.warnings = {"something"};
  m.files = {{"series.csv", std::string(64, 'a'), 1234}};
  CHECK(parse_manifest(serialize(m)) == m);
}

TEST_CASE("spectrum command", "[cli]") {
  ScratchDir dir("spectrum");
  REQUIRE(run({"spectrum", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--modes", "32", "--out",
               dir.str("reference")}) == 0);
  const auto rows = read_csv(dir.path / "reference" / "spectrum.csv");
  REQUIRE(rows.size() == 34);
  CHECK(rows[0] == std::vector<std::string>{"r", "omega", "t0", "branch"});
  CHECK_THAT(std::stod(rows[1][1]), WithinAbs(4.27, 0.02));
  CHECK(fs::exists(dir.path / "reference" / "spectrum.txt"));

  REQUIRE(run({"spectrum", "--g", "1e-20", "--omega-bar", "5", "--delta", "1e-21", "--modes", "5", "--out",
               dir.str("weak")}) == 0);
  const auto weak = read_csv(dir.path / "weak" / "spectrum.csv");
  CHECK_THAT(std::stod(weak[1][1]), WithinRel(5.0, 1e-9));
  for (int k = 1; k <= 5; ++k) CHECK_THAT(std::stod(weak[k + 1][1]), WithinRel(10.0 * k, 1e-9));

  const auto manifest = parse_manifest(slurp(dir.path / "weak" / "manifest.json"));
  CHECK(manifest.field_modes == 5);
  REQUIRE(manifest.files.size() == 2);
  CHECK(manifest.files[0].sha256 == sha256_hex(slurp(dir.path / "weak" / "spectrum.csv")));
}

TEST_CASE("evolve command is deterministic", "[cli]") {
  ScratchDir dir("evolve");
  const std::vector<std::string> base{"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1",
                                      "--beta", "0.26", "--beta", "0.51", "--dt", "0.01", "--modes", "64"};
  auto a = base, b = base;
  a.insert(a.end(), {"--out", dir.str("a")});
  b.insert(b.end(), {"--out", dir.str("b")});
  REQUIRE(run(a) == 0);
  REQUIRE(run(b) == 0);
  for (const char* f : {"series.csv", "means.csv", "variances.csv", "survival.csv", "extrema.csv"}) {
    CHECK(slurp(dir.path / "a" / f) == slurp(dir.path / "b" / f));
  }
  const auto series = read_csv(dir.path / "a" / "series.csv");
  REQUIRE(series.size() == 502);
  CHECK(series[0] == std::vector<std::string>{"t", "delta_beta_0.26", "delta_beta_0.51"});
  CHECK(series[1] == std::vector<std::string>{"0", "0.5", "0.5"});

  const auto m = parse_manifest(slurp(dir.path / "a" / "manifest.json"));
  CHECK(m.files.size() == 5);
  CHECK(m.config["dt"] == 0.01);
}

TEST_CASE("zero-temperature column stays at one half", "[cli]") {
  ScratchDir dir("cold");
  REQUIRE(run({"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--beta", "1e300", "--dt", "0.05",
               "--modes", "64", "--out", dir.str()}) == 0);
  const auto rows = read_csv(dir.path / "series.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) CHECK(rows[i][1] == "0.5");
}

TEST_CASE("strict mode turns warnings into errors", "[cli]") {
  ScratchDir dir("strict");
  const std::vector<std::string> args{"evolve", "--g", "1", "--omega-bar", "5", "--delta", "0.1",
                                      "--beta", "0.01", "--modes", "4", "--dt", "0.1", "--out", dir.str()};
  REQUIRE(run(args) == 0);
  const auto m = parse_manifest(slurp(dir.path / "manifest.json"));
  REQUIRE(m.warnings.size() == 1);
  CHECK_THAT(m.warnings[0], ContainsSubstring("tail bound"));
  auto strict = args;
  strict.push_back("--strict");
  std::string err;
  CHECK(run(strict, &err) == 1);
  CHECK_THAT(err, ContainsSubstring("--strict"));
}

TEST_CASE("sweep rows follow input order", "[cli]") {
  ScratchDir dir("sweep");
  REQUIRE(run({"sweep", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--sweep-delta", "0.2",
               "--sweep-delta", "0.1", "--beta", "0.51", "--beta", "0.26", "--t1", "10", "--dt", "0.01",
               "--modes", "64", "--out", dir.str()}) == 0);
  const auto rows = read_csv(dir.path / "sweep.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[1][0] == "0.2");
  CHECK(rows[1][1] == "0.51");
  CHECK(rows[2][1] == "0.26");
  CHECK(rows[3][0] == "0.1");

  // A single sweep point reduces to the evolve summary.
  const auto p = build_params(1.0, 5.0, 0.1);
  const auto s = exact_spectrum(p, Truncation::full(64));
  const auto ser = series(p, s, occupations(p, 0.26, 64), Complex(1.0, 0.0), 0.0, 10.0, 0.01);
  const auto pl = plateau_estimate(ser, 5.0, 10.0);
  CHECK(rows[4][4] == format_number(pl.mean));
  CHECK(rows[4][5] == format_number(pl.amplitude));
}

TEST_CASE("oracle-check passes and names a corrupted matrix", "[cli]") {
  ScratchDir dir("oracle");
  REQUIRE(run({"oracle-check", "--g", "1", "--omega-bar", "5", "--delta", "0.1", "--beta", "0.26", "--t1",
               "10", "--out", dir.str("ok")}) == 0);
  const auto report = nlohmann::json::parse(slurp(dir.path / "ok" / "oracle_report.json"));
  CHECK(report["passed"] == true);
  CHECK(report["checks"].size() == 8);

  REQUIRE(run({"oracle-check", "--g", "1e-20", "--omega-bar", "5", "--delta", "1e-21", "--beta", "0.26",
               "--out", dir.str("weak")}) == 0);

  write_text(dir.path / "corrupt.json",
             R"({"g": 1, "omega_bar": 5, "delta": 0.1, "beta": 0.26, "corrupt_t_matrix": true})");
  std::string err;
  CHECK(run({"oracle-check", "--config", dir.str("corrupt.json"), "--out", dir.str("bad")}, &err) == 2);
  CHECK_THAT(err, ContainsSubstring("orthonormality"));
  const auto bad = nlohmann::json::parse(slurp(dir.path / "bad" / "oracle_report.json"));
  CHECK(bad["passed"] == false);
  CHECK(bad["checks"][0]["name"] == "orthonormality");
  CHECK(bad["checks"][0]["passed"] == false);
}

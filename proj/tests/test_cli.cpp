#include "binreg/cli.hpp"
#include "binreg/io.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <random>
#include <string>
#include <sys/wait.h>

using namespace binreg;
namespace fs = std::filesystem;

namespace {

const std::string kFixture = std::string(BINREG_FIXTURE_DIR) + "/sine_n600.csv";

struct TempDir
{
  fs::path path;
  TempDir()
  {
    std::random_device rd;
    path = fs::temp_directory_path() / ("binreg-cli-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir()
  {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
};

fs::path write_config(const TempDir& t, const std::string& name, const Json& j)
{
  const fs::path p = t.path / name;
  write_text_file(p, j.dump(2));
  return p;
}

int run_cli(const std::string& command, const fs::path& config, const fs::path& out,
            const std::vector<std::string>& extra = {})
{
  std::vector<std::string> args{ command, "--config", config.string(), "--out",
                                 out.string() };
  args.insert(args.end(), extra.begin(), extra.end());
  return cli::run(args);
}

//! Runs the installed binary, capturing stderr; returns the exit status.
int spawn_cli(const std::string& args, const fs::path& err)
{
  const std::string cmd =
    std::string(BINREG_CLI_PATH) + " " + args + " >/dev/null 2>" + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

//! Progress messages precede the error record on stderr.
Json last_line(const std::string& text)
{
  std::string t = text;
  while (!t.empty() && t.back() == '\n')
    t.pop_back();
  return Json::parse(t.substr(t.rfind('\n') + 1));
}

Json simple_config()
{
  return { { "command", "test-simple" },
           { "dataset", kFixture },
           { "test", { { "beta", 1.0 }, { "gamma", 2.0 } } },
           { "constants", { { "simple_C", 1.0 } } } };
}

Json power_config()
{
  return { { "command", "mc-power" },
           { "test", { { "kind", "simple" } } },
           { "n", 300 },
           { "reps", 24 },
           { "model", { { "f", { { "type", "sine" } } }, { "g", { { "type", "uniform" } } } } } };
}

} // namespace

TEST_CASE("successful run writes provenance")
{
  TempDir t;
  const fs::path cfg = write_config(t, "c.json", simple_config());
  const fs::path out = t.path / "out";
  REQUIRE(run_cli("test-simple", cfg, out, { "--seed", "3" }) == cli::kExitOk);
  REQUIRE(fs::exists(out / "summary.json"));
  REQUIRE(fs::exists(out / "config.resolved.json"));
  const Json summary = Json::parse(read_text_file(out / "summary.json"));
  const Json resolved = Json::parse(read_text_file(out / "config.resolved.json"));
  CHECK(summary["command"] == "test-simple");
  CHECK(summary["seed"] == 3);
  CHECK(summary["config_hash"] == resolved["config_hash"]);
  CHECK(summary["config_hash"].get<std::string>() == config_hash(resolved["config"]));
  CHECK(summary["test"]["j0"] == 4);
  // Defaults are recorded in the resolved configuration.
  CHECK(resolved["config"]["basis"]["family"] == "haar");
  CHECK(resolved["config"]["alpha"] == 0.1);
}

TEST_CASE("validation errors exit 1 and write nothing")
{
  TempDir t;
  const fs::path out = t.path / "out";

  Json bad = simple_config();
  bad["test"]["betaa"] = 1.0;
  CHECK(run_cli("test-simple", write_config(t, "a.json", bad), out) == cli::kExitValidation);
  CHECK_FALSE(fs::exists(out));

  Json mismatch = simple_config();
  mismatch["command"] = "confset";
  CHECK(run_cli("test-simple", write_config(t, "b.json", mismatch), out) == cli::kExitValidation);

  Json missing = simple_config();
  missing["dataset"] = (t.path / "nope.csv").string();
  CHECK(run_cli("test-simple", write_config(t, "c.json", missing), out) == cli::kExitValidation);

  Json range = simple_config();
  range["test"]["gamma"] = 0.5; // gamma must exceed beta
  CHECK(run_cli("test-simple", write_config(t, "d.json", range), out) == cli::kExitValidation);

  write_text_file(t.path / "e.json", "{ not json");
  CHECK(run_cli("test-simple", t.path / "e.json", out) == cli::kExitValidation);
  CHECK(run_cli("test-simple", t.path / "absent.json", out) == cli::kExitValidation);
  CHECK(cli::run({ "no-such-command" }) == cli::kExitValidation);
  CHECK(run_cli("test-simple", write_config(t, "f.json", simple_config()), out,
                { "--threads", "-2" }) == cli::kExitValidation);
  CHECK_FALSE(fs::exists(out));
}

TEST_CASE("errors are one JSON line on stderr")
{
  TempDir t;
  Json bad = simple_config();
  bad["surprise"] = 1;
  const fs::path cfg = write_config(t, "c.json", bad);
  const fs::path err = t.path / "err.txt";
  CHECK(spawn_cli("test-simple --config " + cfg.string() + " --out " + (t.path / "o").string(),
                  err) == 1);
  const std::string text = read_text_file(err);
  REQUIRE(!text.empty());
  CHECK(text.find('\n') == text.size() - 1);
  const Json j = Json::parse(text);
  CHECK(j["error"] == "validation");
  CHECK(j["exit"] == 1);
  CHECK(j["message"].get<std::string>().find("surprise") != std::string::npos);
}

TEST_CASE("runtime failures exit 2")
{
  TempDir t;
  // No separation constant inside the range reaches the requested power.
  const Json cfg = { { "command", "calibrate" },
                     { "target", "separation" },
                     { "test", { { "kind", "simple" } } },
                     { "constants", { { "simple_C", 1.0 } } },
                     { "n", 200 },
                     { "reps", 20 },
                     { "power", 0.99 },
                     { "D_range", { 1e-6, 1e-5 } } };
  const fs::path err = t.path / "err.txt";
  const fs::path path = write_config(t, "c.json", cfg);
  CHECK(spawn_cli("calibrate --config " + path.string() + " --out " + (t.path / "o").string(),
                  err) == 2);
  const Json j = last_line(read_text_file(err));
  CHECK(j["error"] == "calibration");
  CHECK(j["exit"] == 2);
}

TEST_CASE("repeated runs are byte identical")
{
  TempDir t;
  const fs::path cfg = write_config(t, "p.json", power_config());
  REQUIRE(run_cli("mc-power", cfg, t.path / "a", { "--seed", "11" }) == 0);
  REQUIRE(run_cli("mc-power", cfg, t.path / "b", { "--seed", "11" }) == 0);
  REQUIRE(run_cli("mc-power", cfg, t.path / "c", { "--seed", "11", "--threads", "3" }) == 0);
  REQUIRE(run_cli("mc-power", cfg, t.path / "d", { "--seed", "12" }) == 0);
  for (const char* f : { "summary.json", "records.csv", "config.resolved.json" }) {
    CHECK(read_text_file(t.path / "a" / f) == read_text_file(t.path / "b" / f));
    CHECK(read_text_file(t.path / "a" / f) == read_text_file(t.path / "c" / f));
  }
  CHECK(read_text_file(t.path / "a" / "records.csv") !=
        read_text_file(t.path / "d" / "records.csv"));
  const std::string records = read_text_file(t.path / "a" / "records.csv");
  CHECK(records.rfind("# config_hash=", 0) == 0);
  CHECK(records.find("seed=11") != std::string::npos);
}

TEST_CASE("confidence set selects a grid smoothness")
{
  TempDir t;
  const Json cfg = { { "command", "confset" },
                     { "dataset", kFixture },
                     { "params", { { "beta_min", 1.0 }, { "beta_max", 2.01 } } } };
  REQUIRE(run_cli("confset", write_config(t, "c.json", cfg), t.path / "o") == 0);
  const Json s = Json::parse(read_text_file(t.path / "o" / "summary.json"));
  const double b = s["ball"]["beta_hat"];
  CHECK((b == 1.0 || b == 2.0));
  CHECK(s["ball"]["radius_squared"].get<double>() > 0.0);
  const GridFunction center = read_grid_csv(t.path / "o" / "center.csv");
  CHECK(center.values.minCoeff() > 0.0);
  CHECK(center.values.maxCoeff() < 1.0);
}

TEST_CASE("estimation commands write grids")
{
  TempDir t;
  const Json cfg = { { "command", "estimate-regression" },
                     { "dataset", kFixture },
                     { "grid_resolution", 8 } };
  REQUIRE(run_cli("estimate-regression", write_config(t, "c.json", cfg), t.path / "o") == 0);
  const GridFunction f = read_grid_csv(t.path / "o" / "regression.csv");
  const GridFunction g = read_grid_csv(t.path / "o" / "density.csv");
  CHECK(f.resolution == 8);
  CHECK(g.integral() == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("io round trips")
{
  TempDir t;
  Dataset d{ PointMatrix(2, 3), Eigen::VectorXd(3) };
  d.x << 0.1, 0.2, 0.3, 0.4, 0.5, 1.0 / 3.0;
  d.y << 1, 0, 1;
  const Provenance prov{ "abc", 5 };
  write_dataset_csv(t.path / "d.csv", d, &prov);
  const Dataset back = read_dataset_csv(t.path / "d.csv");
  CHECK(back.x == d.x);
  CHECK(back.y == d.y);

  const GridFunction g = GridFunction::from_function(
    1, 8, [](const PointRef& x) { return std::sin(x[0]); });
  write_grid_csv(t.path / "g.csv", g);
  const GridFunction gb = read_grid_csv(t.path / "g.csv");
  CHECK(gb.resolution == 8);
  CHECK((gb.values - g.values).abs().maxCoeff() == 0.0);

  const WaveletBasis basis = WaveletBasis::build(Family::haar, 1, 1, 8);
  const CoeffTree tree = analyze(basis, g, 5);
  const CoeffTree tb = coeff_tree_from_json(Json::parse(to_json(tree).dump()));
  CHECK(besov_norm(tb, 1.0) == besov_norm(tree, 1.0));
  CHECK(tb.max_level == tree.max_level);

  write_text_file(t.path / "bad.csv", "x_1,y\n0.5,2\n");
  CHECK_THROWS(read_dataset_csv(t.path / "bad.csv"));
  CHECK(fnv1a64_hex("") == "cbf29ce484222325");
  CHECK(fnv1a64_hex("a") == "af63dc4c8601ec8c");
}

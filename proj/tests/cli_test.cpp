#include "wcreg/array_io.hpp"
#include "wcreg/cli/commands.hpp"
#include "wcreg/cli/config.hpp"
#include "wcreg/cli/phantom.hpp"
#include "wcreg/errors.hpp"

#include <doctest.h>
#include <json.hpp>

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

using namespace wcreg;
using namespace wcreg::cli;
namespace fs = std::filesystem;

namespace {
struct Sandbox
{
  fs::path dir;
  explicit Sandbox(const std::string& name) : dir(fs::temp_directory_path() / ("wcreg_cli_" + name))
  {
    fs::remove_all(dir);
    fs::create_directories(dir);
  }
  ~Sandbox() { fs::remove_all(dir); }
  fs::path write(const std::string& file, const std::string& text) const
  {
    std::ofstream(dir / file) << text;
    return dir / file;
  }
};

// runs the CLI binary; stderr goes to <out>.err
int run_cli(const std::string& args, const fs::path& err)
{
  const std::string cmd = std::string(WCREG_CLI) + " " + args + " > /dev/null 2> " + err.string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string fmt_args(const std::string& cmd, const fs::path& cfg, const fs::path& out)
{
  return cmd + " --config " + cfg.string() + " --out " + out.string();
}

std::string slurp(const fs::path& p) { return io::read_file(p); }

std::size_t lines(const std::string& s) { return static_cast<std::size_t>(std::count(s.begin(), s.end(), '\n')); }
} // namespace

TEST_CASE("config parsing")
{
  const Config c = Config::parse("seed = 4\n# note\n[solver]\nalpha = 0.5  # inline\niters=10\nname = a#b\n", "t.ini");
  CHECK(c.get_int("", "seed") == 4);
  CHECK(c.get_double("solver", "alpha") == 0.5);
  CHECK(c.get_size("solver", "iters") == 10);
  CHECK(c.get_string("solver", "name") == "a#b");
  CHECK(c.get_double("solver", "missing", 2.0) == 2.0);
  CHECK(c.where("solver", "iters") == "t.ini:5");
  c.check_all_used();

  const Config d = Config::parse("[a]\nx = 1\ny = 2\n", "d.ini");
  (void)d.get_int("a", "x");
  try {
    d.check_all_used();
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("d.ini:3") != std::string::npos);
  }
  CHECK_THROWS_AS(Config::parse("[a]\nx = 1\nx = 2\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("[a\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("novalue\n"), ConfigError);
  CHECK_THROWS_AS(Config::parse("x = abc\n").get_double("", "x"), ConfigError);
  CHECK_THROWS_AS(Config::parse("x = -1\n").get_size("", "x"), ConfigError);
  CHECK(Config::parse("l = 3, 4,6\n").get_list("", "l") == std::vector<double>{3, 4, 6});
  CHECK(Config::parse("b = yes\n").get_bool("", "b"));
}

TEST_CASE("phantoms")
{
  const Phantom d = make_phantom("discs", 64);
  for (double v : d.image.values()) {
    CHECK(v >= 0.0);
    CHECK(v <= 1.0);
  }
  CHECK(max_abs(d.image) == 1.0);
  CHECK(mini_shepp_checksum() == doctest::Approx(3.86).epsilon(1e-12));
  CHECK(mini_shepp_table()[1].intensity == -0.8);
  const Phantom s = make_phantom("mini-shepp", 64);
  CHECK(max_abs(s.image) == doctest::Approx(1.0));
  const Phantom b = make_phantom("bars", 64);
  for (std::size_t i = 0; i < 64; ++i)
    for (std::size_t j = 0; j < 64; ++j)
      CHECK(b.image.at(i, j) == b.image.at(i, 63 - j));
  CHECK_THROWS_AS(make_phantom("circles", 64), ConfigError);
  CHECK_THROWS_AS(make_phantom("discs", 8), ConfigError);
}

TEST_CASE("solve command")
{
  Sandbox sb("solve");
  const fs::path cfg = sb.write("min.ini", "[problem]\nkind = deconv1d\n[solver]\niters = 200\n");
  const fs::path out = sb.dir / "a";
  REQUIRE(run_cli(fmt_args("solve", cfg, out), sb.dir / "a.err") == kExitOk);
  std::size_t files = 0;
  for (const auto& e : fs::directory_iterator(out))
    files += e.is_regular_file() ? 1 : 0;
  CHECK(files == 3);
  CHECK(fs::exists(out / "trace.csv"));
  CHECK(fs::exists(out / "summary.json"));
  CHECK(fs::exists(out / "reconstruction.raw"));
  CHECK(io::read_raw(out / "reconstruction.raw").shape() == Shape{64});

  const fs::path again = sb.dir / "b";
  REQUIRE(run_cli(fmt_args("solve", cfg, again), sb.dir / "b.err") == kExitOk);
  for (const char* f : {"trace.csv", "summary.json", "reconstruction.raw"})
    CHECK(slurp(out / f) == slurp(again / f));

  const fs::path bad = sb.write("bad.ini", "[solver]\ntau = 2\nsigma = 2\n");
  CHECK(run_cli(fmt_args("solve", bad, sb.dir / "c"), sb.dir / "c.err") == kExitConfig);
  const std::string msg = slurp(sb.dir / "c.err");
  CHECK(msg.find("tau*sigma*|A|^2 < 1") != std::string::npos);
  CHECK(msg.find("bad.ini:2") != std::string::npos);
  // the override flag lets the run through as a regime data point
  CHECK(run_cli(fmt_args("solve", bad, sb.dir / "d") + " --override-constraints", sb.dir / "d.err") != kExitConfig);

  const fs::path typo = sb.write("typo.ini", "[solver]\nitres = 5\n");
  CHECK(run_cli(fmt_args("solve", typo, sb.dir / "e"), sb.dir / "e.err") == kExitConfig);
  CHECK(slurp(sb.dir / "e.err").find("itres") != std::string::npos);
  CHECK(run_cli("solve --config /nonexistent.ini", sb.dir / "f.err") == kExitConfig);
}

TEST_CASE("regpath command")
{
  Sandbox sb("regpath");
  const std::string base = "[problem]\nsignal = bumps\n[operator]\ntaps = 19\nkernel_sigma = 3\nboundary = periodic\n"
                           "[regulariser]\nkind = welsch\nplus_quadratic = 0.03\n[regpath]\nlevels = 3\nmax_iters = 500\n";
  const fs::path cfg = sb.write("rp.ini", base);
  REQUIRE(run_cli(fmt_args("regpath", cfg, sb.dir / "a"), sb.dir / "a.err") == kExitOk);
  CHECK(lines(slurp(sb.dir / "a" / "regpath.csv")) == 4);
  const fs::path bad = sb.write("bad.ini", base + "rule = constant\n");
  CHECK(run_cli(fmt_args("regpath", bad, sb.dir / "b"), sb.dir / "b.err") == kExitConfig);
  CHECK_FALSE(fs::exists(sb.dir / "b" / "regpath.csv"));
}

TEST_CASE("counterexample command")
{
  Sandbox sb("counter");
  const fs::path cfg = sb.write("c.ini", "[counterexample]\ngammas = 4\nlevels = 4\n");
  REQUIRE(run_cli(fmt_args("counterexample", cfg, sb.dir / "a"), sb.dir / "a.err") == kExitOk);
  std::istringstream csv(slurp(sb.dir / "a" / "counterexample.csv"));
  std::string line;
  std::getline(csv, line);
  double expect = 1.0;
  int rows = 0;
  while (std::getline(csv, line)) {
    std::vector<double> f;
    std::stringstream ls(line);
    std::string cell;
    while (std::getline(ls, cell, ','))
      f.push_back(std::stod(cell));
    CHECK(std::abs(f[3] - expect) <= 1e-6 * expect);
    expect *= 2.0;
    ++rows;
  }
  CHECK(rows == 5);
}

TEST_CASE("diagnose command")
{
  Sandbox sb("diagnose");
  const fs::path cfg = sb.write("q.ini", "[regulariser]\nkind = quadratic\n[solver]\niters = 300\n");
  REQUIRE(run_cli(fmt_args("solve", cfg, sb.dir / "run"), sb.dir / "a.err") == kExitOk);
  REQUIRE(run_cli("diagnose " + (sb.dir / "run" / "trace.csv").string() + " --out " + (sb.dir / "diag").string(),
              sb.dir / "b.err") == kExitOk);
  const auto j = nlohmann::json::parse(slurp(sb.dir / "diag" / "certificates.json"));
  CHECK(j["descent"]["pass"] == true);
  CHECK(j["residual"]["pass"] == true);
  CHECK(run_cli("diagnose " + (sb.dir / "missing.csv").string(), sb.dir / "c.err") == kExitConfig);
}

TEST_CASE("train-toy and phantom commands")
{
  Sandbox sb("train");
  const fs::path cfg = sb.write("t.ini", "[train]\nn_per_arm = 20\nepochs_phase1 = 0\nepochs_phase2 = 0\ngrid_n = 16\n");
  REQUIRE(run_cli(fmt_args("train-toy", cfg, sb.dir / "a"), sb.dir / "a.err") == kExitOk);
  CHECK(fs::exists(sb.dir / "a" / "awcr.ckpt"));

  REQUIRE(run_cli("phantom --kind discs -n 32 --out " + (sb.dir / "p").string(), sb.dir / "p.err") == kExitOk);
  const DenseArray img = io::read_raw(sb.dir / "p" / "phantom.raw");
  CHECK(img.shape() == Shape{32, 32});
  CHECK(io::read_pgm(sb.dir / "p" / "phantom.pgm").shape() == Shape{32, 32});
  CHECK(run_cli("phantom --kind blobs --out " + (sb.dir / "q").string(), sb.dir / "q.err") == kExitConfig);
}

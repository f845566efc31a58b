#include <doctest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <string>

#include "mfu/io.hpp"

namespace fs = std::filesystem;

namespace {

const fs::path kDir = fs::temp_directory_path() / "mfu_cli_test";

int cli(const std::string& args) {
  const std::string cmd = std::string(MFU_CLI) + " " + args + " > " + (kDir / "stdout.txt").string() + " 2> " +
                          (kDir / "stderr.txt").string();
  const int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}

std::string stderr_text() { return mfu::io::read_text((kDir / "stderr.txt").string()); }

std::string config(const std::string& name, const std::string& text) {
  const auto p = (kDir / name).string();
  mfu::io::write_text(p, text);
  return p;
}

struct Scratch {
  Scratch() {
    fs::remove_all(kDir);
    fs::create_directories(kDir);
  }
  ~Scratch() {
    std::error_code ec;
    fs::remove_all(kDir, ec);
  }
};

const std::string kGsa = R"({"schema_version": 1, "experiment": "gsa_generic", "seed": 5, "settings": {"n": 500, "replicates": 2}})";

}  // namespace

TEST_CASE("successful run, report and validate") {
  Scratch s;
  const auto cfg = config("gsa.json", kGsa);
  const auto out = (kDir / "out").string();
  CHECK(cli("run --config " + cfg + " --out " + out + " --threads 2") == 0);
  CHECK(fs::exists(out + "/manifest.json"));
  CHECK(fs::exists(out + "/indices_plot.svg"));
  CHECK(cli("report " + out) == 0);
  CHECK(fs::exists(out + "/report.json"));
  CHECK(fs::exists(out + "/report.txt"));
  CHECK(cli("validate --config " + cfg + " --seed-override 9") == 0);
  CHECK(mfu::io::read_text((kDir / "stdout.txt").string()).find("\"seed\": 9") != std::string::npos);
}

TEST_CASE("corrupt config exits 2 with the field named") {
  Scratch s;
  const auto cfg = config("bad.json", R"({"schema_version": 1, "experiment": "gsa_generic", "seed": 5, "settings": {"nn": 5}})");
  CHECK(cli("run --config " + cfg + " --out " + (kDir / "o").string()) == 2);
  CHECK(stderr_text().find("settings.nn") != std::string::npos);
  CHECK_FALSE(fs::exists(kDir / "o"));
  CHECK(cli("validate --config " + (kDir / "missing.json").string()) == 2);
  CHECK(cli("run --config " + config("gsa.json", kGsa)) == 2);  // no output directory anywhere
  CHECK(cli("run --threads 2") == 2);                             // malformed command line
}

TEST_CASE("numerical failure exits 3") {
  Scratch s;
  const auto cfg = config("flat.json", R"({"schema_version": 1, "experiment": "gsa_generic", "seed": 5,
      "settings": {"model": [{"coef": 0, "powers": {"x1": 1}}], "n": 100, "replicates": 2}})");
  CHECK(cli("run --config " + cfg + " --out " + (kDir / "o").string()) == 3);
  CHECK_FALSE(fs::exists(kDir / "o"));
}

TEST_CASE("failed acceptance exits 4 and keeps the outputs") {
  Scratch s;
  const auto cfg = config("poly.json", R"({"schema_version": 1, "experiment": "poly_inadequate", "seed": 5,
      "settings": {"steps": 2000, "prior_draws": 200, "max_coverage": 0.0}})");
  const auto out = (kDir / "o").string();
  CHECK(cli("run --config " + cfg + " --out " + out) == 4);
  CHECK(fs::exists(out + "/manifest.json"));
  CHECK(cli("report " + out) == 4);
  CHECK(mfu::io::read_text(out + "/report.txt").find("FAIL") != std::string::npos);
}

TEST_CASE("report without a manifest fails") {
  Scratch s;
  CHECK(cli("report " + kDir.string()) == 1);
}

TEST_CASE("foreign directories are not overwritten") {
  Scratch s;
  const auto out = kDir / "foreign";
  fs::create_directories(out);
  mfu::io::write_text((out / "keep.txt").string(), "x");
  CHECK(cli("run --config " + config("gsa.json", kGsa) + " --out " + out.string()) == 1);
  CHECK(fs::exists(out / "keep.txt"));
}

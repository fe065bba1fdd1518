#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include "doctest.h"

// End-to-end runs of the installed binary; RANDLAB_CLI and RANDLAB_FIXTURES
// come from the build.

namespace {

namespace fs = std::filesystem;

const std::string kCli = RANDLAB_CLI;
const std::string kFix = RANDLAB_FIXTURES;

fs::path tmp_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "randlab_cli_tests";
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string tmp(const std::string& name) { return (tmp_dir() / name).string(); }

int run(const std::string& args) {
  const std::string cmd = "\"" + kCli + "\" " + args;
  const int rc = std::system(cmd.c_str());
  if (rc == -1) return -1;
  return WIFEXITED(rc) ? WEXITSTATUS(rc) : -2;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream out;
  out << in.rdbuf();
  return out.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  REQUIRE(out.good());
  out << text;
}

std::string fixture(const std::string& name) { return kFix + "/" + name; }

const char* kDesignN4 =
    "randlab-config 1\n"
    "[design]\n"
    "kind = complete\n"
    "n1 = 2\n";

}  // namespace

TEST_CASE("summarize emits exact fields and exits zero") {
  const std::string out = tmp("sum.json");
  const int rc = run("summarize --input " + fixture("pop_n4.csv") +
                     " --out " + out);
  CHECK(rc == 0);
  const std::string body = slurp(out);
  CHECK(body.find("\"tau_s\": 2.5") != std::string::npos);
  CHECK(body.find("\"5/3\"") != std::string::npos);
  CHECK(body.find("\"population_source\": \"file\"") != std::string::npos);
}

TEST_CASE("summarize can draw from a configured model") {
  const std::string cfg = tmp("model_pop.cfg");
  write_file(cfg,
             "randlab-config 1\n"
             "[model]\n"
             "kind = constant_effect\n"
             "mean0 = 0\n"
             "v0 = 1\n"
             "tau = 1.5\n"
             "[population]\n"
             "n = 12\n"
             "[run]\n"
             "seed = 4\n");
  const std::string out = tmp("sum_model.json");
  CHECK(run("summarize --config " + cfg + " --out " + out) == 0);
  const std::string body = slurp(out);
  CHECK(body.find("\"population_source\": \"model\"") != std::string::npos);
  CHECK(body.find("\"population_seed\": \"4\"") != std::string::npos);
  // Constant effects survive the draw exactly.
  CHECK(body.find("\"stausq\": 0") != std::string::npos);

  // Two sources at once is an error, as is none.
  std::string err = tmp("src_err.txt");
  CHECK(run("summarize --input " + fixture("pop_n4.csv") + " --config " + cfg +
            " 2> " + err) == 2);
  CHECK(run("summarize 2> " + tmp("none_err.txt")) == 2);
}

TEST_CASE("enumerate verifies the worked example and exits on its verdict") {
  const std::string cfg = tmp("design_n4.cfg");
  write_file(cfg, kDesignN4);
  const std::string out = tmp("enum.json");
  const int rc = run("enumerate --input " + fixture("pop_n4.csv") +
                     " --config " + cfg + " --out " + out);
  CHECK(rc == 0);
  const std::string body = slurp(out);
  CHECK(body.find("\"5/12\"") != std::string::npos);
  CHECK(body.find("\"identities_hold\": true") != std::string::npos);
  CHECK(body.find("\"f_s\": 0") != std::string::npos);
}

TEST_CASE("enumerate refuses oversized supports through the exit code") {
  const std::string cfg = tmp("enum_big.cfg");
  write_file(cfg,
             "randlab-config 1\n"
             "[model]\n"
             "kind = gaussian\n"
             "mean1 = 0\n"
             "mean0 = 0\n"
             "v1 = 1\n"
             "v0 = 1\n"
             "rho = 0\n"
             "[population]\n"
             "n = 30\n"
             "[design]\n"
             "kind = complete\n"
             "n1 = 15\n");
  const std::string err = tmp("enum_big_err.txt");
  CHECK(run("enumerate --config " + cfg + " 2> " + err) == 2);
  const std::string msg = slurp(err);
  CHECK(msg.find("155117520") != std::string::npos);
}

TEST_CASE("frt prints the exact p value as a fraction") {
  const std::string cfg = tmp("design_frt.cfg");
  write_file(cfg, kDesignN4);
  const std::string out = tmp("frt.json");
  CHECK(run("frt --input " + fixture("obs_n4.csv") + " --config " + cfg +
            " --out " + out) == 0);
  const std::string body = slurp(out);
  CHECK(body.find("\"p_value_fraction\": \"1/3\"") != std::string::npos);
  CHECK(body.find("\"kind\": \"frt_exact\"") != std::string::npos);
}

TEST_CASE("frt with --draws switches to the add-one estimator") {
  const std::string cfg = tmp("design_frt2.cfg");
  write_file(cfg, kDesignN4);
  const std::string out = tmp("frt_mc.json");
  CHECK(run("frt --input " + fixture("obs_n4.csv") + " --config " + cfg +
            " --draws 2000 --seed 5 --out " + out) == 0);
  const std::string body = slurp(out);
  CHECK(body.find("\"kind\": \"frt_monte_carlo\"") != std::string::npos);
  CHECK(body.find("\"add_one\"") != std::string::npos);
  CHECK(body.find("\"draws\": 2000") != std::string::npos);
}

TEST_CASE("study reports are byte-identical across reruns and threads") {
  const std::string cfg = tmp("study.cfg");
  write_file(cfg,
             "randlab-config 1\n"
             "[model]\n"
             "kind = gaussian\n"
             "mean1 = 0\n"
             "mean0 = 0\n"
             "v1 = 1\n"
             "v0 = 1\n"
             "rho = 0.5\n"
             "[study]\n"
             "mode = decomposition\n"
             "n = 6\n"
             "n1 = 3\n"
             "replications = 200\n"
             "[run]\n"
             "seed = 11\n");
  const std::string a = tmp("study_a.json");
  const std::string b = tmp("study_b.json");
  const std::string c = tmp("study_c.json");
  CHECK(run("study --config " + cfg + " --out " + a) == 0);
  CHECK(run("study --config " + cfg + " --out " + b) == 0);
  CHECK(run("study --config " + cfg + " --threads 8 --out " + c) == 0);
  const std::string body = slurp(a);
  CHECK(body == slurp(b));
  CHECK(body == slurp(c));
  CHECK(body.find("\"pass\": true") != std::string::npos);
  // The execution-detail flags leave no trace in the report.
  CHECK(body.find("threads") == std::string::npos);

  const std::string rows = tmp("study_rows.csv");
  CHECK(run("study --config " + cfg + " --rows-out " + rows + " --out " +
            tmp("study_d.json")) == 0);
  const std::string table = slurp(rows);
  std::size_t lines = 0;
  for (char ch : table) lines += ch == '\n';
  CHECK(lines == 201);
  CHECK(table.rfind("replication,", 0) == 0);
}

TEST_CASE("bound reports the sharp lower bound from marginal files") {
  const std::string out = tmp("bound.json");
  CHECK(run("bound --y1 " + fixture("y1_marg.csv") + " --y0 " +
            fixture("y0_marg.csv") + " --out " + out) == 0);
  const std::string body = slurp(out);
  CHECK(body.find("\"81/2\"") != std::string::npos);
  CHECK(body.find("\"coupling\": \"sorted\"") != std::string::npos);
}

TEST_CASE("config mistakes exit with usage errors") {
  const std::string bad_key = tmp("bad_key.cfg");
  write_file(bad_key,
             "randlab-config 1\n"
             "[design]\n"
             "kind = complete\n"
             "n1 = 2\n"
             "typo = 3\n");
  std::string err = tmp("bad_key_err.txt");
  CHECK(run("enumerate --input " + fixture("pop_n4.csv") + " --config " +
            bad_key + " 2> " + err) == 2);
  CHECK(slurp(err).find("typo") != std::string::npos);

  const std::string bad_header = tmp("bad_header.cfg");
  write_file(bad_header, "randlab-config 9\n[design]\nkind = complete\nn1 = 2\n");
  CHECK(run("enumerate --input " + fixture("pop_n4.csv") + " --config " +
            bad_header + " 2> " + tmp("bad_header_err.txt")) == 2);

  const std::string dup = tmp("dup.cfg");
  write_file(dup,
             "randlab-config 1\n"
             "[design]\n"
             "kind = complete\n"
             "n1 = 2\n"
             "n1 = 3\n");
  err = tmp("dup_err.txt");
  CHECK(run("enumerate --input " + fixture("pop_n4.csv") + " --config " + dup +
            " 2> " + err) == 2);
  CHECK(slurp(err).find("n1") != std::string::npos);
}

TEST_CASE("csv format flattens the report") {
  const std::string out = tmp("sum.csv");
  CHECK(run("summarize --input " + fixture("pop_n4.csv") +
            " --format csv --out " + out) == 0);
  const std::string body = slurp(out);
  const auto nl = body.find('\n');
  REQUIRE(nl != std::string::npos);
  CHECK(body.substr(0, nl).find("tau_s") != std::string::npos);
  std::size_t lines = 0;
  for (char ch : body) lines += ch == '\n';
  CHECK(lines == 2);
}

TEST_CASE("usage errors and help behave like a unix tool") {
  CHECK(run("> /dev/null 2>&1") == 2);                 // no subcommand
  CHECK(run("bogus > /dev/null 2>&1") == 2);           // unknown subcommand
  CHECK(run("--help > /dev/null 2>&1") == 0);
  CHECK(run("summarize --help > /dev/null 2>&1") == 0);
  CHECK(run("--version > /dev/null 2>&1") == 0);
  CHECK(run("bound --y1 only.csv > /dev/null 2>&1") == 2);  // missing --y0
  CHECK(run("summarize --input " + fixture("pop_n4.csv") +
            " --format yaml > /dev/null 2>&1") == 2);
  CHECK(run("summarize --input no_such_file.csv 2> " +
            tmp("missing_err.txt")) == 2);
  CHECK(slurp(tmp("missing_err.txt")).find("no_such_file.csv") !=
        std::string::npos);
}

// Command-line front end. Parses run-config files, dispatches to the shared
// library's C interface, and emits JSON or flat-CSV reports. The CLI does no
// statistics of its own; every number in a report comes from the library.
//
// Exit codes: 0 all declared checks pass, 1 a check failed, 2 usage, parse,
// or validation error.
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "CLI11.hpp"
#include "randlab.h"

namespace {

struct CliError {
  std::string message;
};

[[noreturn]] void fail(std::string message) { throw CliError{std::move(message)}; }

[[noreturn]] void fail_at(const std::string& where, const std::string& what) {
  fail(where + ": " + what);
}

// Library call that is expected to succeed; failures become exit-2 errors
// prefixed with the operation name.
void check_rl(rl_status s, const std::string& what) {
  if (s != RL_OK) fail(what + ": " + rl_last_error());
}

template <typename T, void (*Free)(T*)>
struct Handle {
  T* ptr = nullptr;
  Handle() = default;
  Handle(const Handle&) = delete;
  Handle& operator=(const Handle&) = delete;
  ~Handle() { Free(ptr); }
  T** slot() { return &ptr; }
  T* get() const { return ptr; }
};

using PopulationHandle = Handle<rl_population, rl_population_free>;
using ModelHandle = Handle<rl_model, rl_model_free>;
using DesignHandle = Handle<rl_design, rl_design_free>;
using ObservedHandle = Handle<rl_observed, rl_observed_free>;
using ReportHandle = Handle<rl_report, rl_report_free>;

/* ---- run-config files ---------------------------------------------- */
// Flat sectioned key = value text with a versioned first line:
//
//   randlab-config 1
//   [model]
//   kind = gaussian
//   ...
//
// '#' starts a comment. Sections: model, population, design, study, run.
// Unknown sections or keys are errors; silent ignoring would make config
// typos unfalsifiable.

struct ConfigFile {
  std::string path;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> sections;

  bool has(const std::string& sec) const { return sections.count(sec) != 0; }

  std::optional<std::string> get(const std::string& sec, const std::string& key) const {
    auto it = sections.find(sec);
    if (it == sections.end()) return std::nullopt;
    for (const auto& [k, v] : it->second) {
      if (k == key) return v;
    }
    return std::nullopt;
  }

  std::string need(const std::string& sec, const std::string& key) const {
    auto v = get(sec, key);
    if (!v) fail_at(path, "missing key '" + key + "' in [" + sec + "]");
    return *v;
  }

  const std::vector<std::pair<std::string, std::string>>& section(const std::string& sec) const {
    auto it = sections.find(sec);
    if (it == sections.end()) fail_at(path, "missing section [" + sec + "]");
    return it->second;
  }

  // Every key in the section must satisfy `allowed`; typos are fatal.
  template <typename Pred>
  void restrict_keys(const std::string& sec, Pred allowed) const {
    auto it = sections.find(sec);
    if (it == sections.end()) return;
    for (const auto& [k, v] : it->second) {
      if (!allowed(k)) fail_at(path, "unknown key '" + k + "' in [" + sec + "]");
    }
  }
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

bool known_section(const std::string& name) {
  return name == "model" || name == "population" || name == "design" ||
         name == "study" || name == "run";
}

ConfigFile parse_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("cannot open config file '" + path + "'");
  ConfigFile cfg;
  cfg.path = path;
  std::string line, section;
  bool saw_header = false;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string where = path + ":" + std::to_string(lineno);
    if (auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (!saw_header) {
      if (line != "randlab-config 1") {
        fail_at(where, "expected header 'randlab-config 1'");
      }
      saw_header = true;
      continue;
    }
    if (line.front() == '[') {
      if (line.back() != ']') fail_at(where, "unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (!known_section(section)) fail_at(where, "unknown section [" + section + "]");
      if (cfg.sections.count(section)) fail_at(where, "duplicate section [" + section + "]");
      cfg.sections[section];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) fail_at(where, "expected 'key = value'");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty()) fail_at(where, "empty key");
    if (value.empty()) fail_at(where, "empty value for key '" + key + "'");
    if (section.empty()) fail_at(where, "key '" + key + "' appears before any section");
    for (const auto& [k, v] : cfg.sections[section]) {
      if (k == key) fail_at(where, "duplicate key '" + key + "' in [" + section + "]");
    }
    cfg.sections[section].emplace_back(key, value);
  }
  if (!saw_header) fail("config file '" + path + "' is empty (expected 'randlab-config 1')");
  return cfg;
}

int64_t to_int(const std::string& what, const std::string& text) {
  std::size_t used = 0;
  int64_t v = 0;
  try {
    v = std::stoll(text, &used);
  } catch (const std::exception&) {
    fail(what + ": '" + text + "' is not an integer");
  }
  if (used != text.size()) fail(what + ": '" + text + "' is not an integer");
  return v;
}

uint64_t to_uint(const std::string& what, const std::string& text) {
  const int64_t v = to_int(what, text);
  if (v < 0) fail(what + ": must be nonnegative");
  return static_cast<uint64_t>(v);
}

double to_double(const std::string& what, const std::string& text) {
  std::size_t used = 0;
  double v = 0.0;
  try {
    v = std::stod(text, &used);
  } catch (const std::exception&) {
    fail(what + ": '" + text + "' is not a number");
  }
  if (used != text.size()) fail(what + ": '" + text + "' is not a number");
  return v;
}

/* ---- resolved run parameters ---------------------------------------- */
// Defaults, overridden by the [run] section, overridden by flags.

struct RunParams {
  uint64_t seed = 1;
  uint64_t cap = 10000000;
  int32_t threads = 1;
  uint64_t draws = 100000;  // Monte Carlo fallback for frt
};

struct CommonFlags {
  std::string input;
  std::string config;
  std::string out;
  std::string format = "json";
  uint64_t seed = 0;
  uint64_t cap = 0;
  int32_t threads = 0;
  CLI::Option* seed_opt = nullptr;
  CLI::Option* cap_opt = nullptr;
  CLI::Option* threads_opt = nullptr;
  CLI::Option* input_opt = nullptr;
  CLI::Option* config_opt = nullptr;
};

void add_common_flags(CLI::App* sub, CommonFlags& f) {
  f.input_opt = sub->add_option("--input", f.input, "Input CSV path");
  f.config_opt = sub->add_option("--config", f.config, "Run-config file");
  sub->add_option("--out", f.out, "Write the report here instead of stdout");
  sub->add_option("--format", f.format, "Report format")
      ->check(CLI::IsMember({"json", "csv"}))
      ->capture_default_str();
  f.seed_opt = sub->add_option("--seed", f.seed, "Seed for stochastic steps");
  f.cap_opt = sub->add_option("--cap", f.cap, "Refuse enumerations larger than this");
  f.threads_opt = sub->add_option("--threads", f.threads, "Worker threads");
}

RunParams resolve_run(const ConfigFile* cfg, const CommonFlags& f) {
  RunParams r;
  if (cfg && cfg->has("run")) {
    cfg->restrict_keys("run", [](const std::string& k) {
      return k == "seed" || k == "cap" || k == "threads" || k == "draws";
    });
    if (auto v = cfg->get("run", "seed")) r.seed = to_uint("[run] seed", *v);
    if (auto v = cfg->get("run", "cap")) r.cap = to_uint("[run] cap", *v);
    if (auto v = cfg->get("run", "threads")) {
      r.threads = static_cast<int32_t>(to_int("[run] threads", *v));
    }
    if (auto v = cfg->get("run", "draws")) r.draws = to_uint("[run] draws", *v);
  }
  if (f.seed_opt && f.seed_opt->count() > 0) r.seed = f.seed;
  if (f.cap_opt && f.cap_opt->count() > 0) r.cap = f.cap;
  if (f.threads_opt && f.threads_opt->count() > 0) r.threads = f.threads;
  if (r.threads < 1) fail("threads must be at least 1");
  return r;
}

/* ---- config -> library handles -------------------------------------- */

void build_model(const ConfigFile& cfg, ModelHandle& model) {
  const std::string kind = cfg.need("model", "kind");
  if (kind == "gaussian") {
    cfg.restrict_keys("model", [](const std::string& k) {
      return k == "kind" || k == "mean1" || k == "mean0" || k == "v1" ||
             k == "v0" || k == "rho";
    });
    check_rl(rl_model_gaussian(to_double("[model] mean1", cfg.need("model", "mean1")),
                               to_double("[model] mean0", cfg.need("model", "mean0")),
                               to_double("[model] v1", cfg.need("model", "v1")),
                               to_double("[model] v0", cfg.need("model", "v0")),
                               to_double("[model] rho", cfg.need("model", "rho")),
                               model.slot()),
             "model");
  } else if (kind == "constant_effect") {
    cfg.restrict_keys("model", [](const std::string& k) {
      return k == "kind" || k == "mean0" || k == "v0" || k == "tau";
    });
    check_rl(rl_model_constant_effect(to_double("[model] mean0", cfg.need("model", "mean0")),
                                      to_double("[model] v0", cfg.need("model", "v0")),
                                      to_double("[model] tau", cfg.need("model", "tau")),
                                      model.slot()),
             "model");
  } else if (kind == "two_point") {
    cfg.restrict_keys("model", [](const std::string& k) {
      return k == "kind" || k == "y1_a" || k == "y0_a" || k == "y1_b" ||
             k == "y0_b" || k == "prob_a";
    });
    // Exact numerals pass through untouched; the library parses them.
    check_rl(rl_model_two_point(cfg.need("model", "y1_a").c_str(),
                                cfg.need("model", "y0_a").c_str(),
                                cfg.need("model", "y1_b").c_str(),
                                cfg.need("model", "y0_b").c_str(),
                                cfg.need("model", "prob_a").c_str(), model.slot()),
             "model");
  } else {
    fail_at(cfg.path, "unknown model kind '" + kind + "'");
  }
}

void build_design(const ConfigFile& cfg, DesignHandle& design) {
  const std::string kind = cfg.need("design", "kind");
  if (kind == "complete") {
    cfg.restrict_keys("design", [](const std::string& k) { return k == "kind" || k == "n1"; });
    const int64_t n1 = to_int("[design] n1", cfg.need("design", "n1"));
    check_rl(rl_design_complete(static_cast<int32_t>(n1), design.slot()), "design");
  } else if (kind == "stratified") {
    // Per-stratum margins come as n1.<label> keys, in file order.
    cfg.restrict_keys("design", [](const std::string& k) {
      return k == "kind" || k.rfind("n1.", 0) == 0;
    });
    std::vector<std::string> labels;
    std::vector<int32_t> n1s;
    for (const auto& [k, v] : cfg.section("design")) {
      if (k.rfind("n1.", 0) != 0) continue;
      const std::string label = k.substr(3);
      if (label.empty()) fail_at(cfg.path, "empty stratum label in '" + k + "'");
      labels.push_back(label);
      n1s.push_back(static_cast<int32_t>(to_int("[design] " + k, v)));
    }
    if (labels.empty()) fail_at(cfg.path, "stratified design needs n1.<label> keys");
    std::vector<const char*> label_ptrs;
    label_ptrs.reserve(labels.size());
    for (const auto& l : labels) label_ptrs.push_back(l.c_str());
    check_rl(rl_design_stratified(label_ptrs.data(), n1s.data(), label_ptrs.size(),
                                  design.slot()),
             "design");
  } else if (kind == "matched_pairs") {
    cfg.restrict_keys("design", [](const std::string& k) { return k == "kind"; });
    check_rl(rl_design_matched_pairs(design.slot()), "design");
  } else if (kind == "cluster") {
    cfg.restrict_keys("design", [](const std::string& k) { return k == "kind" || k == "m1"; });
    const int64_t m1 = to_int("[design] m1", cfg.need("design", "m1"));
    check_rl(rl_design_cluster(static_cast<int32_t>(m1), design.slot()), "design");
  } else {
    fail_at(cfg.path, "unknown design kind '" + kind + "'");
  }
}

// Rebuilds the section as a canonical one-line echo for report provenance.
std::string section_echo(const ConfigFile& cfg, const std::string& sec) {
  std::string out;
  for (const auto& [k, v] : cfg.section(sec)) {
    if (!out.empty()) out += " ";
    out += k + "=" + v;
  }
  return out;
}

// Exactly one population source: an --input file or a [model] draw sized by
// [population] n. Returns a provenance note for the report.
std::string load_population(const ConfigFile* cfg, const CommonFlags& f,
                            const RunParams& run, PopulationHandle& pop) {
  const bool from_file = f.input_opt->count() > 0;
  const bool from_model = cfg && cfg->has("population");
  if (from_file && from_model) {
    fail("two population sources: --input and [population]; provide exactly one");
  }
  if (from_file) {
    check_rl(rl_population_from_csv_file(f.input.c_str(), pop.slot()), f.input);
    return "file";
  }
  if (from_model) {
    if (!cfg->has("model")) fail_at(cfg->path, "[population] draw needs a [model] section");
    cfg->restrict_keys("population", [](const std::string& k) { return k == "n"; });
    const int64_t n = to_int("[population] n", cfg->need("population", "n"));
    ModelHandle model;
    build_model(*cfg, model);
    check_rl(rl_model_draw(model.get(), static_cast<int32_t>(n), run.seed, pop.slot()),
             "population draw");
    return "model";
  }
  fail("no population source: give --input or a [population] section");
}

// Drawn populations carry their generator and seed in the report.
void annotate_model_source(rl_report* rep, const ConfigFile& cfg, const RunParams& run) {
  check_rl(rl_report_annotate(rep, "population_model", section_echo(cfg, "model").c_str()),
           "report");
  check_rl(rl_report_annotate(rep, "population_seed", std::to_string(run.seed).c_str()),
           "report");
}

/* ---- report emission -------------------------------------------------- */

void write_text(const std::string& out_path, const char* text) {
  if (out_path.empty()) {
    std::fputs(text, stdout);
    return;
  }
  std::ofstream out(out_path, std::ios::binary);
  if (!out) fail("cannot open output file '" + out_path + "'");
  out << text;
  if (!out) fail("failed writing output file '" + out_path + "'");
}

void annotate_paths(rl_report* rep, const std::string& subcommand, const CommonFlags& f) {
  check_rl(rl_report_annotate(rep, "subcommand", subcommand.c_str()), "report");
  if (f.input_opt && f.input_opt->count() > 0) {
    check_rl(rl_report_annotate(rep, "input", f.input.c_str()), "report");
  }
  if (f.config_opt && f.config_opt->count() > 0) {
    check_rl(rl_report_annotate(rep, "config_file", f.config.c_str()), "report");
  }
}

void emit(rl_report* rep, const CommonFlags& f) {
  char* text = nullptr;
  if (f.format == "csv") {
    check_rl(rl_report_csv(rep, &text), "report");
  } else {
    check_rl(rl_report_json(rep, &text), "report");
  }
  std::unique_ptr<char, decltype(&rl_string_free)> owner(text, &rl_string_free);
  write_text(f.out, text);
}

// Exit status mirrors the report's own verdict.
int verdict_exit(rl_report* rep) {
  int32_t pass = 0;
  check_rl(rl_report_pass(rep, &pass), "report");
  return pass ? 0 : 1;
}

/* ---- subcommands -------------------------------------------------------- */

int cmd_summarize(const CommonFlags& f) {
  std::optional<ConfigFile> cfg;
  if (f.config_opt->count() > 0) cfg = parse_config(f.config);
  const RunParams run = resolve_run(cfg ? &*cfg : nullptr, f);
  PopulationHandle pop;
  const std::string source = load_population(cfg ? &*cfg : nullptr, f, run, pop);
  ReportHandle rep;
  check_rl(rl_population_summarize(pop.get(), rep.slot()), "summarize");
  if (source == "model") annotate_model_source(rep.get(), *cfg, run);
  check_rl(rl_report_annotate(rep.get(), "population_source", source.c_str()), "report");
  annotate_paths(rep.get(), "summarize", f);
  emit(rep.get(), f);
  return 0;
}

int cmd_enumerate(const CommonFlags& f) {
  if (f.config_opt->count() == 0) fail("enumerate needs --config with a [design] section");
  const ConfigFile cfg = parse_config(f.config);
  const RunParams run = resolve_run(&cfg, f);
  DesignHandle design;
  build_design(cfg, design);
  PopulationHandle pop;
  const std::string source = load_population(&cfg, f, run, pop);
  rl_enumerate_options opts;
  rl_enumerate_options_default(&opts);
  opts.cap = run.cap;
  opts.threads = run.threads;
  ReportHandle rep;
  check_rl(rl_enumerate_moments(pop.get(), design.get(), &opts, rep.slot()), "enumerate");
  if (source == "model") annotate_model_source(rep.get(), cfg, run);
  check_rl(rl_report_annotate(rep.get(), "population_source", source.c_str()), "report");
  annotate_paths(rep.get(), "enumerate", f);
  emit(rep.get(), f);
  return verdict_exit(rep.get());
}

int cmd_study(const CommonFlags& f, const std::string& rows_out) {
  if (f.config_opt->count() == 0) fail("study needs --config with [model] and [study]");
  const ConfigFile cfg = parse_config(f.config);
  const RunParams run = resolve_run(&cfg, f);
  ModelHandle model;
  build_model(cfg, model);

  cfg.restrict_keys("study", [](const std::string& k) {
    return k == "mode" || k == "n" || k == "n1" || k == "replications" ||
           k == "alpha" || k == "target" || k == "band" ||
           k == "assignments_per_population";
  });
  const std::string mode_name = cfg.need("study", "mode");
  int32_t mode = -1;
  if (mode_name == "decomposition") mode = RL_STUDY_DECOMPOSITION;
  else if (mode_name == "unbiasedness") mode = RL_STUDY_UNBIASEDNESS;
  else if (mode_name == "coverage") mode = RL_STUDY_COVERAGE;
  else fail_at(cfg.path, "unknown study mode '" + mode_name + "'");

  rl_study_options opts;
  rl_study_options_default(&opts);
  if (auto v = cfg.get("study", "n")) opts.n = static_cast<int32_t>(to_int("[study] n", *v));
  if (auto v = cfg.get("study", "n1")) opts.n1 = static_cast<int32_t>(to_int("[study] n1", *v));
  if (auto v = cfg.get("study", "replications")) {
    opts.replications = to_uint("[study] replications", *v);
  }
  if (auto v = cfg.get("study", "alpha")) opts.alpha = to_double("[study] alpha", *v);
  if (auto v = cfg.get("study", "target")) {
    if (*v == "tau") opts.target = RL_TARGET_TAU;
    else if (*v == "tau_s") opts.target = RL_TARGET_TAU_S;
    else fail_at(cfg.path, "unknown study target '" + *v + "'");
  }
  if (auto v = cfg.get("study", "band")) opts.band = to_double("[study] band", *v);
  if (auto v = cfg.get("study", "assignments_per_population")) {
    opts.assignments_per_population =
        static_cast<int32_t>(to_int("[study] assignments_per_population", *v));
  }
  opts.master_seed = run.seed;
  opts.cap = run.cap;
  opts.threads = run.threads;
  opts.per_replication = rows_out.empty() ? 0 : 1;

  ReportHandle rep;
  check_rl(rl_run_study(model.get(), mode, &opts, rep.slot()), "study");
  annotate_paths(rep.get(), "study", f);
  emit(rep.get(), f);
  if (!rows_out.empty()) {
    char* table = nullptr;
    check_rl(rl_report_table_csv(rep.get(), &table), "study table");
    std::unique_ptr<char, decltype(&rl_string_free)> owner(table, &rl_string_free);
    write_text(rows_out, table);
  }
  return verdict_exit(rep.get());
}

int cmd_frt(const CommonFlags& f, CLI::Option* draws_opt, uint64_t draws_flag) {
  if (f.input_opt->count() == 0) fail("frt needs --input with observed data (unit_id,z,yobs)");
  if (f.config_opt->count() == 0) fail("frt needs --config with a [design] section");
  const ConfigFile cfg = parse_config(f.config);
  const RunParams run = resolve_run(&cfg, f);
  DesignHandle design;
  build_design(cfg, design);
  ObservedHandle obs;
  check_rl(rl_observed_from_csv_file(f.input.c_str(), design.get(), obs.slot()), f.input);

  const uint64_t draws = draws_opt->count() > 0 ? draws_flag : run.draws;
  ReportHandle rep;
  if (draws_opt->count() > 0) {
    // An explicit --draws asks for Monte Carlo even when exact would fit.
    check_rl(rl_frt_monte_carlo(obs.get(), draws, run.seed, rep.slot()), "frt");
  } else {
    const rl_status s = rl_frt_exact(obs.get(), run.cap, rep.slot());
    if (s == RL_ERR_CAP_EXCEEDED) {
      check_rl(rl_frt_monte_carlo(obs.get(), draws, run.seed, rep.slot()), "frt");
      check_rl(rl_report_annotate(rep.get(), "fallback",
                                  "support exceeds cap; Monte Carlo p-value"),
               "report");
    } else {
      check_rl(s, "frt");
    }
  }
  annotate_paths(rep.get(), "frt", f);
  emit(rep.get(), f);
  return 0;
}

int cmd_bound(const CommonFlags& f, const std::string& y1_path, const std::string& y0_path) {
  ReportHandle rep;
  check_rl(rl_sharp_bound_files(y1_path.c_str(), y0_path.c_str(), rep.slot()), "bound");
  check_rl(rl_report_annotate(rep.get(), "y1_input", y1_path.c_str()), "report");
  check_rl(rl_report_annotate(rep.get(), "y0_input", y0_path.c_str()), "report");
  annotate_paths(rep.get(), "bound", f);
  emit(rep.get(), f);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"randlab: design-based randomization inference"};
  app.require_subcommand(1);
  app.set_version_flag("--version", rl_version());

  CommonFlags sum_f, enum_f, study_f, frt_f, bound_f;
  std::string rows_out, y1_path, y0_path;
  uint64_t draws_flag = 0;

  CLI::App* sum = app.add_subcommand("summarize", "Population-level means and variances");
  add_common_flags(sum, sum_f);

  CLI::App* enu = app.add_subcommand("enumerate", "Exact randomization distribution checks");
  add_common_flags(enu, enum_f);

  CLI::App* stu = app.add_subcommand("study", "Monte Carlo studies over model draws");
  add_common_flags(stu, study_f);
  stu->add_option("--rows-out", rows_out, "Write the per-replication table to this CSV");

  CLI::App* frt = app.add_subcommand("frt", "Randomization test of the sharp null");
  add_common_flags(frt, frt_f);
  CLI::Option* draws_opt =
      frt->add_option("--draws", draws_flag, "Force Monte Carlo with this many draws");

  CLI::App* bnd = app.add_subcommand("bound", "Sharp lower bound on effect variance");
  add_common_flags(bnd, bound_f);
  bnd->add_option("--y1", y1_path, "Treated marginal CSV (header: value)")->required();
  bnd->add_option("--y0", y0_path, "Control marginal CSV (header: value)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (sum->parsed()) return cmd_summarize(sum_f);
    if (enu->parsed()) return cmd_enumerate(enum_f);
    if (stu->parsed()) return cmd_study(study_f, rows_out);
    if (frt->parsed()) return cmd_frt(frt_f, draws_opt, draws_flag);
    if (bnd->parsed()) return cmd_bound(bound_f, y1_path, y0_path);
  } catch (const CliError& e) {
    std::fprintf(stderr, "randlab: %s\n", e.message.c_str());
    return 2;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "randlab: %s\n", e.what());
    return 2;
  }
  return 2;
}

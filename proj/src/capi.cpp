#include "randlab.h"

#include <cstdlib>
#include <cstring>
#include <optional>
#include <sstream>
#include <string>

#include "randlab/csv.hpp"
#include "randlab/design.hpp"
#include "randlab/error.hpp"
#include "randlab/estimator.hpp"
#include "randlab/oracle.hpp"
#include "randlab/population.hpp"
#include "randlab/report.hpp"
#include "randlab/rng.hpp"
#include "randlab/study.hpp"

using randlab::Json;

struct rl_population {
  randlab::PopulationFile file;
};

struct rl_model {
  randlab::SuperPopulationModel model;
};

struct rl_design {
  randlab::Design design;
};

struct rl_observed {
  randlab::ObservedData data;
};

struct rl_report {
  Json summary;
  std::optional<std::string> table;
  std::optional<bool> pass;
};

namespace {

thread_local std::string g_last_error;

rl_status status_of(randlab::ErrorCode code) {
  switch (code) {
    case randlab::ErrorCode::invalid_argument: return RL_ERR_INVALID_ARGUMENT;
    case randlab::ErrorCode::parse: return RL_ERR_PARSE;
    case randlab::ErrorCode::cap_exceeded: return RL_ERR_CAP_EXCEEDED;
    case randlab::ErrorCode::incompatible: return RL_ERR_INCOMPATIBLE;
  }
  return RL_ERR_INTERNAL;
}

// Runs fn inside the library's error boundary; fn returns RL_OK on the
// happy path and never throws past here.
template <typename Fn>
rl_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const randlab::Error& e) {
    g_last_error = e.what();
    return status_of(e.code());
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return RL_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return RL_ERR_INTERNAL;
  }
}

rl_status require(bool ok, const char* message) {
  if (ok) return RL_OK;
  g_last_error = message;
  return RL_ERR_INVALID_ARGUMENT;
}

char* copy_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

rl_report* make_report(Json summary, std::optional<std::string> table = {},
                       std::optional<bool> pass = {}) {
  return new rl_report{std::move(summary), std::move(table), std::move(pass)};
}

}  // namespace

extern "C" {

const char* rl_version(void) { return "0.1.0"; }

const char* rl_last_error(void) { return g_last_error.c_str(); }

void rl_string_free(char* s) { std::free(s); }

/* ---- populations -------------------------------------------------- */

rl_status rl_population_from_csv(const char* text, rl_population** out) {
  if (rl_status s = require(text && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    std::istringstream in{std::string(text)};
    *out = new rl_population{randlab::read_population_csv(in, "<string>")};
    return RL_OK;
  });
}

rl_status rl_population_from_csv_file(const char* path, rl_population** out) {
  if (rl_status s = require(path && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    *out = new rl_population{randlab::read_population_csv_file(path)};
    return RL_OK;
  });
}

rl_status rl_population_to_csv(const rl_population* pop, char** out) {
  if (rl_status s = require(pop && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    *out = copy_string(randlab::write_population_csv(pop->file));
    return RL_OK;
  });
}

rl_status rl_population_size(const rl_population* pop, int32_t* out) {
  if (rl_status s = require(pop && out, "null argument"); s != RL_OK) return s;
  *out = pop->file.population.n();
  return RL_OK;
}

rl_status rl_population_summarize(const rl_population* pop, rl_report** out) {
  if (rl_status s = require(pop && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    *out = make_report(
        randlab::summary_json(randlab::summarize(pop->file.population)));
    return RL_OK;
  });
}

void rl_population_free(rl_population* pop) { delete pop; }

/* ---- models -------------------------------------------------------- */

rl_status rl_model_gaussian(double mean1, double mean0, double v1, double v0,
                            double rho, rl_model** out) {
  if (rl_status s = require(out != nullptr, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    *out = new rl_model{randlab::SuperPopulationModel::gaussian(mean1, mean0,
                                                                v1, v0, rho)};
    return RL_OK;
  });
}

rl_status rl_model_constant_effect(double mean0, double v0, double tau,
                                   rl_model** out) {
  if (rl_status s = require(out != nullptr, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    *out = new rl_model{
        randlab::SuperPopulationModel::constant_effect(mean0, v0, tau)};
    return RL_OK;
  });
}

rl_status rl_model_two_point(const char* y1_a, const char* y0_a,
                             const char* y1_b, const char* y0_b,
                             const char* prob_a, rl_model** out) {
  if (rl_status s = require(y1_a && y0_a && y1_b && y0_b && prob_a && out,
                            "null argument");
      s != RL_OK) {
    return s;
  }
  return guarded([&] {
    *out = new rl_model{randlab::SuperPopulationModel::two_point(
        randlab::parse_rational(y1_a), randlab::parse_rational(y0_a),
        randlab::parse_rational(y1_b), randlab::parse_rational(y0_b),
        randlab::parse_rational(prob_a))};
    return RL_OK;
  });
}

rl_status rl_model_draw(const rl_model* model, int32_t n, uint64_t seed,
                        rl_population** out) {
  if (rl_status s = require(model && out, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    randlab::Rng rng(seed);
    randlab::FinitePopulation pop = model->model.draw(n, rng);
    randlab::PopulationFile file{{}, std::move(pop)};
    file.unit_ids.reserve(static_cast<std::size_t>(file.population.n()));
    for (int i = 0; i < file.population.n(); ++i) {
      file.unit_ids.push_back("u" + std::to_string(i + 1));
    }
    *out = new rl_population{std::move(file)};
    return RL_OK;
  });
}

void rl_model_free(rl_model* model) { delete model; }

/* ---- designs ------------------------------------------------------- */

rl_status rl_design_complete(int32_t n1, rl_design** out) {
  if (rl_status s = require(out != nullptr, "null argument"); s != RL_OK) {
    return s;
  }
  *out = new rl_design{randlab::Design::complete(n1)};
  return RL_OK;
}

rl_status rl_design_stratified(const char* const* labels, const int32_t* n1s,
                               size_t count, rl_design** out) {
  if (rl_status s = require(labels && n1s && out && count > 0,
                            "null argument");
      s != RL_OK) {
    return s;
  }
  std::vector<std::pair<std::string, int>> table;
  table.reserve(count);
  for (size_t i = 0; i < count; ++i) {
    if (rl_status s = require(labels[i] != nullptr, "null stratum label");
        s != RL_OK) {
      return s;
    }
    table.emplace_back(labels[i], n1s[i]);
  }
  *out = new rl_design{randlab::Design::stratified(std::move(table))};
  return RL_OK;
}

rl_status rl_design_matched_pairs(rl_design** out) {
  if (rl_status s = require(out != nullptr, "null argument"); s != RL_OK) {
    return s;
  }
  *out = new rl_design{randlab::Design::matched_pairs()};
  return RL_OK;
}

rl_status rl_design_cluster(int32_t m1, rl_design** out) {
  if (rl_status s = require(out != nullptr, "null argument"); s != RL_OK) {
    return s;
  }
  *out = new rl_design{randlab::Design::cluster(m1)};
  return RL_OK;
}

void rl_design_free(rl_design* d) { delete d; }

/* ---- observation and estimation ------------------------------------ */

rl_status rl_observed_from_csv(const char* text, const rl_design* d,
                               rl_observed** out) {
  if (rl_status s = require(text && d && out, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    std::istringstream in{std::string(text)};
    const randlab::ObservedFile file =
        randlab::read_observed_csv(in, "<string>");
    *out = new rl_observed{randlab::observed_from_file(file, d->design)};
    return RL_OK;
  });
}

rl_status rl_observed_from_csv_file(const char* path, const rl_design* d,
                                    rl_observed** out) {
  if (rl_status s = require(path && d && out, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    const randlab::ObservedFile file = randlab::read_observed_csv_file(path);
    *out = new rl_observed{randlab::observed_from_file(file, d->design)};
    return RL_OK;
  });
}

rl_status rl_observe_sampled(const rl_population* pop, const rl_design* d,
                             uint64_t seed, rl_observed** out) {
  if (rl_status s = require(pop && d && out, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    randlab::AssignmentSpace space(d->design, pop->file.population);
    randlab::Rng rng(seed);
    const randlab::Assignment a = space.sample(rng);
    *out = new rl_observed{
        randlab::observe(pop->file.population, d->design, a)};
    return RL_OK;
  });
}

void rl_observed_free(rl_observed* o) { delete o; }

rl_status rl_estimate(const rl_observed* o, double alpha, rl_report** out) {
  if (rl_status s = require(o && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    Json j = randlab::estimate_json(randlab::estimate(o->data, alpha));
    j["design"] = randlab::design_json(o->data.design);
    *out = make_report(std::move(j));
    return RL_OK;
  });
}

/* ---- oracle --------------------------------------------------------- */

void rl_enumerate_options_default(rl_enumerate_options* out) {
  if (!out) return;
  out->cap = 10000000;
  out->threads = 1;
  out->exact = 1;
}

rl_status rl_enumerate_moments(const rl_population* pop, const rl_design* d,
                               const rl_enumerate_options* opts,
                               rl_report** out) {
  if (rl_status s = require(pop && d && out, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    rl_enumerate_options local;
    rl_enumerate_options_default(&local);
    if (opts) local = *opts;
    randlab::EnumerateOptions eo;
    eo.cap = randlab::BigInt(local.cap);
    eo.threads = local.threads;
    eo.exact = local.exact != 0;
    const randlab::EnumerationReport rep =
        randlab::enumerate_moments(pop->file.population, d->design, eo);
    Json j = randlab::enumeration_json(rep);
    j["design"] = randlab::design_json(d->design);
    randlab::put_big(j, "cap", eo.cap);
    *out = make_report(std::move(j), {}, rep.identities_hold);
    return RL_OK;
  });
}

rl_status rl_verify_residual_identity(const rl_population* pop,
                                      const rl_design* d, uint64_t cap,
                                      int32_t* holds) {
  if (rl_status s = require(pop && d && holds, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    *holds = randlab::verify_residual_identity(pop->file.population, d->design,
                                               randlab::BigInt(cap))
                 ? 1
                 : 0;
    return RL_OK;
  });
}

rl_status rl_frt_exact(const rl_observed* o, uint64_t cap, rl_report** out) {
  if (rl_status s = require(o && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    const randlab::ExactFrt r = randlab::frt_exact(
        o->data, randlab::FrtStatistic::abs_diff_means, randlab::BigInt(cap));
    Json j = randlab::exact_frt_json(r);
    j["design"] = randlab::design_json(o->data.design);
    randlab::put_big(j, "cap", randlab::BigInt(cap));
    *out = make_report(std::move(j));
    return RL_OK;
  });
}

rl_status rl_frt_monte_carlo(const rl_observed* o, uint64_t draws,
                             uint64_t seed, rl_report** out) {
  if (rl_status s = require(o && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    randlab::Rng rng(seed);
    const randlab::MonteCarloFrt r = randlab::frt_monte_carlo(
        o->data, draws, rng, randlab::FrtStatistic::abs_diff_means);
    Json j = randlab::mc_frt_json(r);
    j["design"] = randlab::design_json(o->data.design);
    j["seed"] = seed;
    *out = make_report(std::move(j));
    return RL_OK;
  });
}

namespace {

rl_status sharp_bound_report(std::vector<randlab::Rat> y1,
                             std::vector<randlab::Rat> y0, rl_report** out) {
  const randlab::Rat bound =
      randlab::sharp_stau2_lower_bound(std::move(y1), std::move(y0));
  Json j;
  j["kind"] = "sharp_bound";
  randlab::put_rat_full(j, "stausq_lower_bound", bound);
  j["coupling"] = "sorted";
  *out = make_report(std::move(j));
  return RL_OK;
}

}  // namespace

rl_status rl_sharp_bound_values(const char* const* y1_values, size_t n1,
                                const char* const* y0_values, size_t n0,
                                rl_report** out) {
  if (rl_status s = require(y1_values && y0_values && out, "null argument");
      s != RL_OK) {
    return s;
  }
  return guarded([&] {
    std::vector<randlab::Rat> y1, y0;
    y1.reserve(n1);
    y0.reserve(n0);
    for (size_t i = 0; i < n1; ++i) {
      y1.push_back(randlab::parse_rational(y1_values[i]));
    }
    for (size_t i = 0; i < n0; ++i) {
      y0.push_back(randlab::parse_rational(y0_values[i]));
    }
    return sharp_bound_report(std::move(y1), std::move(y0), out);
  });
}

rl_status rl_sharp_bound_files(const char* y1_path, const char* y0_path,
                               rl_report** out) {
  if (rl_status s = require(y1_path && y0_path && out, "null argument");
      s != RL_OK) {
    return s;
  }
  return guarded([&] {
    return sharp_bound_report(randlab::read_marginal_csv_file(y1_path),
                              randlab::read_marginal_csv_file(y0_path), out);
  });
}

/* ---- studies --------------------------------------------------------- */

void rl_study_options_default(rl_study_options* out) {
  if (!out) return;
  out->n = 8;
  out->n1 = 4;
  out->replications = 10000;
  out->alpha = 0.05;
  out->master_seed = 1;
  out->target = RL_TARGET_TAU;
  out->band = 3.0;
  out->assignments_per_population = 1;
  out->cap = 10000000;
  out->threads = 1;
  out->per_replication = 0;
}

rl_status rl_run_study(const rl_model* model, int32_t mode,
                       const rl_study_options* opts, rl_report** out) {
  if (rl_status s = require(model && out, "null argument"); s != RL_OK) {
    return s;
  }
  return guarded([&] {
    rl_study_options local;
    rl_study_options_default(&local);
    if (opts) local = *opts;
    randlab::StudyConfig cfg(model->model);
    cfg.n = local.n;
    cfg.n1 = local.n1;
    cfg.replications = local.replications;
    cfg.alpha = local.alpha;
    cfg.master_seed = local.master_seed;
    cfg.target = local.target == RL_TARGET_TAU_S
                     ? randlab::StudyTarget::tau_s
                     : randlab::StudyTarget::tau;
    cfg.band = local.band;
    cfg.assignments_per_population = local.assignments_per_population;
    cfg.cap = randlab::BigInt(local.cap);
    cfg.threads = local.threads;
    cfg.per_replication = local.per_replication != 0;
    const randlab::StudyReport rep = [&] {
      switch (mode) {
        case RL_STUDY_DECOMPOSITION: return randlab::run_decomposition_study(cfg);
        case RL_STUDY_UNBIASEDNESS: return randlab::run_unbiasedness_study(cfg);
        case RL_STUDY_COVERAGE: return randlab::run_coverage_study(cfg);
        default:
          randlab::fail(randlab::ErrorCode::invalid_argument,
                        "unknown study mode");
      }
    }();
    std::optional<std::string> table;
    if (cfg.per_replication) {
      table = randlab::table_csv(rep.columns, rep.rows);
    }
    *out = make_report(randlab::study_json(rep), std::move(table), rep.pass);
    return RL_OK;
  });
}

/* ---- reports ---------------------------------------------------------- */

rl_status rl_report_json(const rl_report* r, char** out) {
  if (rl_status s = require(r && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    *out = copy_string(r->summary.dump(2) + "\n");
    return RL_OK;
  });
}

rl_status rl_report_csv(const rl_report* r, char** out) {
  if (rl_status s = require(r && out, "null argument"); s != RL_OK) return s;
  return guarded([&] {
    *out = copy_string(randlab::flat_csv(r->summary));
    return RL_OK;
  });
}

rl_status rl_report_table_csv(const rl_report* r, char** out) {
  if (rl_status s = require(r && out, "null argument"); s != RL_OK) return s;
  if (!r->table) {
    g_last_error = "report carries no per-replication table";
    return RL_ERR_INVALID_ARGUMENT;
  }
  *out = copy_string(*r->table);
  return RL_OK;
}

rl_status rl_report_pass(const rl_report* r, int32_t* out) {
  if (rl_status s = require(r && out, "null argument"); s != RL_OK) return s;
  if (!r->pass) {
    g_last_error = "report carries no pass/fail verdict";
    return RL_ERR_INVALID_ARGUMENT;
  }
  *out = *r->pass ? 1 : 0;
  return RL_OK;
}

rl_status rl_report_value(const rl_report* r, const char* key, double* out) {
  if (rl_status s = require(r && key && out, "null argument"); s != RL_OK) {
    return s;
  }
  const Json* node = &r->summary;
  std::string path(key);
  std::size_t start = 0;
  while (start <= path.size()) {
    const std::size_t dot = path.find('.', start);
    const std::string part = path.substr(
        start, dot == std::string::npos ? std::string::npos : dot - start);
    if (!node->is_object() || !node->contains(part)) {
      g_last_error = "no field named '" + path + "'";
      return RL_ERR_INVALID_ARGUMENT;
    }
    node = &(*node)[part];
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  if (node->is_number()) {
    *out = node->get<double>();
  } else if (node->is_boolean()) {
    *out = node->get<bool>() ? 1.0 : 0.0;
  } else {
    g_last_error = "field '" + std::string(key) + "' is not numeric";
    return RL_ERR_INVALID_ARGUMENT;
  }
  return RL_OK;
}

rl_status rl_report_annotate(rl_report* r, const char* key,
                             const char* value) {
  if (rl_status s = require(r && key && value, "null argument"); s != RL_OK) {
    return s;
  }
  r->summary[key] = value;
  return RL_OK;
}

void rl_report_free(rl_report* r) { delete r; }

}  // extern "C"

#include "randlab/report.hpp"

#include <charconv>
#include <limits>

#include "randlab/error.hpp"

namespace randlab {

std::string double_string(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

void put_rat(Json& j, const std::string& key, const Rat& v) {
  j[key] = to_double(v);
  j[key + "_exact"] = roundtrip_string(v);
}

void put_rat_full(Json& j, const std::string& key, const Rat& v) {
  j[key] = to_double(v);
  j[key + "_exact"] = roundtrip_string(v);
  j[key + "_fraction"] = fraction_string(v);
}

void put_opt_rat_full(Json& j, const std::string& key,
                      const std::optional<Rat>& v) {
  if (v) {
    put_rat_full(j, key, *v);
  } else {
    j[key] = nullptr;
  }
}

void put_opt(Json& j, const std::string& key,
             const std::optional<double>& v) {
  if (v) {
    j[key] = *v;
  } else {
    j[key] = nullptr;
  }
}

void put_big(Json& j, const std::string& key, const BigInt& v) {
  if (v >= std::numeric_limits<std::int64_t>::min() &&
      v <= std::numeric_limits<std::int64_t>::max()) {
    j[key] = v.convert_to<std::int64_t>();
  } else {
    j[key] = v.str();
  }
}

Json design_json(const Design& d) {
  Json j;
  j["kind"] = d.kind_name();
  switch (d.kind) {
    case Design::Kind::complete:
      j["n1"] = d.n1;
      break;
    case Design::Kind::stratified: {
      Json t;
      for (const auto& [label, n1] : d.stratum_n1) t[label] = n1;
      j["n1_by_stratum"] = t;
      break;
    }
    case Design::Kind::matched_pairs:
      break;
    case Design::Kind::cluster:
      j["m1"] = d.m1;
      break;
  }
  return j;
}

Json model_json(const SuperPopulationModel& m) {
  Json j;
  j["kind"] = m.kind_name();
  for (const auto& [key, value] : m.parameters()) j[key] = value;
  return j;
}

Json summary_json(const PopulationSummary& s) {
  Json j;
  j["kind"] = "population_summary";
  j["n"] = s.n;
  put_rat(j, "ybar1", s.ybar1);
  put_rat(j, "ybar0", s.ybar0);
  put_rat(j, "tau_s", s.tau_s);
  put_rat(j, "s1sq", s.s1sq);
  put_rat(j, "s0sq", s.s0sq);
  put_rat(j, "stausq", s.stausq);
  put_rat(j, "s10", s.s10);
  return j;
}

Json estimate_json(const EstimateReport& r) {
  Json j;
  j["kind"] = "estimate";
  j["tau_hat"] = r.tau_hat;
  put_opt(j, "s1sq", r.s1sq);
  put_opt(j, "s0sq", r.s0sq);
  put_opt(j, "vhat_neyman", r.vhat_neyman);
  put_opt(j, "vhat_sharp", r.vhat_sharp);
  put_opt(j, "ci_lo", r.ci_lo);
  put_opt(j, "ci_hi", r.ci_hi);
  j["alpha"] = r.alpha;
  j["ybar1_obs"] = r.ybar1_obs;
  j["ybar0_obs"] = r.ybar0_obs;
  j["variance_available"] = r.vhat_neyman.has_value();
  // The sharp variant rests on plug-in marginal estimates; keep that
  // visible wherever the number travels.
  j["vhat_sharp_is_plugin"] = r.vhat_sharp.has_value();
  return j;
}

Json enumeration_json(const EnumerationReport& r) {
  Json j;
  j["kind"] = "enumeration";
  j["mode"] = r.exact_mode ? "exact" : "approx";
  put_big(j, "support_size", r.support_size);
  put_rat_full(j, "mean_tau_hat", r.mean_tau_hat);
  put_rat_full(j, "var_tau_hat", r.var_tau_hat);
  put_opt_rat_full(j, "mean_s1sq", r.mean_s1sq);
  put_opt_rat_full(j, "mean_s0sq", r.mean_s0sq);
  put_opt_rat_full(j, "mean_vhat_neyman", r.mean_vhat_neyman);
  put_rat_full(j, "neyman_formula_value", r.neyman_formula_value);
  put_rat_full(j, "f_s", r.f_s);
  put_rat_full(j, "estimand", r.estimand);
  put_opt_rat_full(j, "expected_gap", r.expected_gap);
  j["identities_hold"] = r.identities_hold;
  j["failures"] = r.failures;
  return j;
}

Json exact_frt_json(const ExactFrt& r) {
  Json j;
  j["kind"] = "frt_exact";
  put_rat_full(j, "p_value", r.p_value);
  put_big(j, "support_size", r.support_size);
  put_big(j, "n_extreme", r.n_extreme);
  put_rat(j, "t_observed", r.t_observed);
  j["statistic"] = "abs_diff_means";
  return j;
}

Json mc_frt_json(const MonteCarloFrt& r) {
  Json j;
  j["kind"] = "frt_monte_carlo";
  j["p_value"] = r.p_value;
  j["se"] = r.se;
  j["draws"] = r.draws;
  j["n_extreme"] = r.n_extreme;
  put_rat(j, "t_observed", r.t_observed);
  j["statistic"] = "abs_diff_means";
  j["estimator"] = "add_one";
  return j;
}

Json study_json(const StudyReport& r) {
  Json j;
  j["kind"] = "study";
  j["mode"] = study_mode_name(r.mode);
  Json cfg;
  cfg["model"] = model_json(r.config.model);
  cfg["n"] = r.config.n;
  cfg["n1"] = r.config.n1;
  cfg["replications"] = r.config.replications;
  cfg["alpha"] = r.config.alpha;
  cfg["master_seed"] = r.config.master_seed;
  cfg["target"] = study_target_name(r.config.target);
  cfg["band"] = r.config.band;
  cfg["assignments_per_population"] = r.config.assignments_per_population;
  put_big(cfg, "cap", r.config.cap);
  j["config"] = cfg;
  Json metrics;
  for (const auto& [name, value] : r.metrics) metrics[name] = value;
  j["metrics"] = metrics;
  Json checks = Json::array();
  for (const StudyCheck& c : r.checks) {
    Json e;
    e["name"] = c.name;
    e["value"] = c.value;
    e["lo"] = c.lo;
    e["hi"] = c.hi;
    e["pass"] = c.pass;
    checks.push_back(e);
  }
  j["checks"] = checks;
  j["pass"] = r.pass;
  return j;
}

namespace {

std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::string cell_text(const Json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_escape(v.get<std::string>());
  if (v.is_boolean()) return v.get<bool>() ? "true" : "false";
  if (v.is_number_float()) return double_string(v.get<double>());
  return v.dump();
}

void flatten(const Json& j, const std::string& prefix,
             std::vector<std::pair<std::string, std::string>>& cells) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string key = prefix.empty() ? it.key() : prefix + "." + it.key();
    if (it->is_object()) {
      flatten(*it, key, cells);
    } else if (it->is_array()) {
      continue;  // tables have their own serialization
    } else {
      cells.emplace_back(key, cell_text(*it));
    }
  }
}

}  // namespace

std::string flat_csv(const Json& j) {
  if (!j.is_object()) {
    fail(ErrorCode::invalid_argument, "flat CSV needs an object report");
  }
  std::vector<std::pair<std::string, std::string>> cells;
  flatten(j, "", cells);
  std::string header, row;
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) {
      header += ',';
      row += ',';
    }
    header += csv_escape(cells[i].first);
    row += cells[i].second;
  }
  return header + "\n" + row + "\n";
}

std::string table_csv(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows) {
  std::string out;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out += ',';
    out += csv_escape(columns[i]);
  }
  out += '\n';
  for (const std::vector<double>& row : rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += double_string(row[i]);
    }
    out += '\n';
  }
  return out;
}

}  // namespace randlab

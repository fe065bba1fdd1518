#include "randlab/study.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "randlab/design.hpp"
#include "randlab/error.hpp"
#include "randlab/estimator.hpp"
#include "randlab/normal.hpp"
#include "randlab/oracle.hpp"

namespace randlab {

const char* study_mode_name(StudyMode mode) {
  switch (mode) {
    case StudyMode::decomposition: return "decomposition";
    case StudyMode::unbiasedness: return "unbiasedness";
    case StudyMode::coverage: return "coverage";
  }
  return "?";
}

const char* study_target_name(StudyTarget target) {
  switch (target) {
    case StudyTarget::tau: return "tau";
    case StudyTarget::tau_s: return "tau_s";
  }
  return "?";
}

namespace {

void validate(const StudyConfig& cfg) {
  if (cfg.replications < 100) {
    fail(ErrorCode::invalid_argument, "studies need replications >= 100");
  }
  if (cfg.n < 2 || cfg.n1 < 1 || cfg.n1 > cfg.n - 1) {
    fail(ErrorCode::invalid_argument,
         "need 1 <= n1 <= n-1 with n >= 2");
  }
  if (!(cfg.alpha > 0.0 && cfg.alpha < 1.0)) {
    fail(ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
  }
  if (cfg.band <= 0.0) {
    fail(ErrorCode::invalid_argument, "band must be positive");
  }
  if (cfg.assignments_per_population < 1) {
    fail(ErrorCode::invalid_argument,
         "assignments_per_population must be >= 1");
  }
}

// Fills one record per replication, any worker count; callers reduce the
// records in index order afterwards.
template <typename Fn>
void for_each_replication(std::uint64_t total, int threads, Fn&& fn) {
  const int t = std::max(1, threads);
  if (t == 1) {
    for (std::uint64_t r = 0; r < total; ++r) fn(r);
    return;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    try {
      for (;;) {
        const std::uint64_t r = next.fetch_add(1);
        if (r >= total) return;
        fn(r);
      }
    } catch (...) {
      std::lock_guard<std::mutex> lock(error_mutex);
      if (!first_error) first_error = std::current_exception();
    }
  };
  std::vector<std::thread> pool;
  pool.reserve(static_cast<std::size_t>(t));
  for (int i = 0; i < t; ++i) pool.emplace_back(worker);
  for (std::thread& th : pool) th.join();
  if (first_error) std::rethrow_exception(first_error);
}

double mean_of(const std::vector<double>& xs) {
  double s = 0.0;
  for (double x : xs) s += x;
  return s / static_cast<double>(xs.size());
}

double sd_of(const std::vector<double>& xs) {
  const double m = mean_of(xs);
  double s = 0.0;
  for (double x : xs) s += (x - m) * (x - m);
  return std::sqrt(s / static_cast<double>(xs.size() - 1));
}

// Window floor absorbing double-reduction noise in exactly degenerate cases
// (for example a constant-effect model where every tau_S equals tau); far
// below any statistical tolerance in use.
double window_floor(double target) {
  return 1e-12 * std::max(1.0, std::fabs(target));
}

StudyCheck band_check(const std::string& name, double observed, double target,
                      double se, double band) {
  const double half = band * se + window_floor(target);
  StudyCheck c;
  c.name = name;
  c.value = observed;
  c.lo = target - half;
  c.hi = target + half;
  c.pass = observed >= c.lo && observed <= c.hi;
  return c;
}

void finish(StudyReport& rep) {
  rep.pass = true;
  for (const StudyCheck& c : rep.checks) rep.pass = rep.pass && c.pass;
}

}  // namespace

StudyReport run_decomposition_study(const StudyConfig& cfg) {
  validate(cfg);
  const ModelMoments mm = cfg.model.moments();
  const Design design = Design::complete(cfg.n1);
  const double vtau_over_n = mm.vtau / cfg.n;
  const std::uint64_t total = cfg.replications;

  struct Rec {
    double sq_err = 0.0;
    double cond_var = 0.0;
    double tau_s = 0.0;
  };
  std::vector<Rec> recs(total);
  const Rng master(cfg.master_seed);
  for_each_replication(total, cfg.threads, [&](std::uint64_t r) {
    Rng rng = master.substream(r);
    const FinitePopulation pop = cfg.model.draw(cfg.n, rng);
    const Rat cond_var = enumerate_variance(pop, design, cfg.cap);
    const AssignmentSpace space(design, pop);
    const EstimatorPlan plan(design, pop.n(), pop.strata(), pop.clusters());
    std::vector<Rat> y1, y0;
    for (const Unit& u : pop.units()) {
      y1.push_back(u.y1);
      y0.push_back(u.y0);
    }
    double sq = 0.0;
    for (int k = 0; k < cfg.assignments_per_population; ++k) {
      const Assignment a = space.sample(rng);
      const double tau_hat = to_double(plan.tau_masked(y1, y0, a.z));
      sq += (tau_hat - mm.tau) * (tau_hat - mm.tau);
    }
    Rec& rec = recs[r];
    rec.sq_err = sq / cfg.assignments_per_population;
    rec.cond_var = to_double(cond_var);
    rec.tau_s = to_double(summarize(pop).tau_s);
  });

  std::vector<double> x(total), sq_err(total), cond(total), gsq(total);
  for (std::uint64_t r = 0; r < total; ++r) {
    sq_err[r] = recs[r].sq_err;
    cond[r] = recs[r].cond_var;
    x[r] = recs[r].sq_err - recs[r].cond_var - vtau_over_n;
    gsq[r] = (recs[r].tau_s - mm.tau) * (recs[r].tau_s - mm.tau);
  }
  const double residual = mean_of(x);
  const double residual_se =
      sd_of(x) / std::sqrt(static_cast<double>(total));

  StudyReport rep{StudyMode::decomposition, cfg, {}, {}, false, {}, {}};
  rep.metrics = {
      {"empirical_var_tau_hat", mean_of(sq_err)},
      {"mean_conditional_variance", mean_of(cond)},
      {"vtau_over_n", vtau_over_n},
      {"empirical_var_tau_s", mean_of(gsq)},
      {"residual", residual},
      {"residual_se", residual_se},
  };
  rep.checks.push_back(
      band_check("decomposition_residual", residual, 0.0, residual_se,
                 cfg.band));
  if (cfg.per_replication) {
    rep.columns = {"replication", "tau_s", "conditional_variance",
                   "squared_error", "residual_term"};
    for (std::uint64_t r = 0; r < total; ++r) {
      rep.rows.push_back({static_cast<double>(r), recs[r].tau_s,
                          recs[r].cond_var, recs[r].sq_err, x[r]});
    }
  }
  finish(rep);
  return rep;
}

StudyReport run_unbiasedness_study(const StudyConfig& cfg) {
  validate(cfg);
  const ModelMoments mm = cfg.model.moments();
  const Design design = Design::complete(cfg.n1);
  const std::uint64_t total = cfg.replications;

  struct Rec {
    double tau_s = 0.0;
    double s1sq = 0.0;
    double s0sq = 0.0;
    double stausq = 0.0;
    double tau_hat = 0.0;
  };
  std::vector<Rec> recs(total);
  const Rng master(cfg.master_seed);
  for_each_replication(total, cfg.threads, [&](std::uint64_t r) {
    Rng rng = master.substream(r);
    const FinitePopulation pop = cfg.model.draw(cfg.n, rng);
    const PopulationSummary s = summarize(pop);
    const AssignmentSpace space(design, pop);
    const EstimatorPlan plan(design, pop.n(), pop.strata(), pop.clusters());
    std::vector<Rat> y1, y0;
    for (const Unit& u : pop.units()) {
      y1.push_back(u.y1);
      y0.push_back(u.y0);
    }
    const Assignment a = space.sample(rng);
    Rec& rec = recs[r];
    rec.tau_s = to_double(s.tau_s);
    rec.s1sq = to_double(s.s1sq);
    rec.s0sq = to_double(s.s0sq);
    rec.stausq = to_double(s.stausq);
    rec.tau_hat = to_double(plan.tau_masked(y1, y0, a.z));
  });

  std::vector<double> tau_s(total), s1(total), s0(total), st(total),
      th(total), g(total);
  for (std::uint64_t r = 0; r < total; ++r) {
    tau_s[r] = recs[r].tau_s;
    s1[r] = recs[r].s1sq;
    s0[r] = recs[r].s0sq;
    st[r] = recs[r].stausq;
    th[r] = recs[r].tau_hat;
    g[r] = (recs[r].tau_s - mm.tau) * (recs[r].tau_s - mm.tau);
  }
  const double root_r = std::sqrt(static_cast<double>(total));
  auto check = [&](const std::string& name, const std::vector<double>& xs,
                   double target) {
    return band_check(name, mean_of(xs), target, sd_of(xs) / root_r, cfg.band);
  };

  StudyReport rep{StudyMode::unbiasedness, cfg, {}, {}, false, {}, {}};
  rep.metrics = {
      {"mean_tau_s", mean_of(tau_s)},   {"mean_s1sq", mean_of(s1)},
      {"mean_s0sq", mean_of(s0)},       {"mean_stausq", mean_of(st)},
      {"mean_tau_hat", mean_of(th)},    {"var_tau_s", mean_of(g)},
      {"target_tau", mm.tau},           {"target_v1", mm.v1},
      {"target_v0", mm.v0},             {"target_vtau", mm.vtau},
      {"target_vtau_over_n", mm.vtau / cfg.n},
  };
  rep.checks = {
      check("mean_tau_s_vs_tau", tau_s, mm.tau),
      check("mean_s1sq_vs_v1", s1, mm.v1),
      check("mean_s0sq_vs_v0", s0, mm.v0),
      check("mean_stausq_vs_vtau", st, mm.vtau),
      check("mean_tau_hat_vs_tau", th, mm.tau),
      check("var_tau_s_vs_vtau_over_n", g, mm.vtau / cfg.n),
  };
  if (cfg.per_replication) {
    rep.columns = {"replication", "tau_s", "s1sq", "s0sq", "stausq",
                   "tau_hat"};
    for (std::uint64_t r = 0; r < total; ++r) {
      rep.rows.push_back({static_cast<double>(r), recs[r].tau_s, recs[r].s1sq,
                          recs[r].s0sq, recs[r].stausq, recs[r].tau_hat});
    }
  }
  finish(rep);
  return rep;
}

StudyReport run_coverage_study(const StudyConfig& cfg) {
  validate(cfg);
  if (cfg.n1 < 2 || cfg.n - cfg.n1 < 2) {
    fail(ErrorCode::invalid_argument,
         "coverage studies need at least 2 units per arm");
  }
  const ModelMoments mm = cfg.model.moments();
  const Design design = Design::complete(cfg.n1);
  const std::uint64_t total = cfg.replications;
  const double quantile = normal_quantile(1.0 - cfg.alpha / 2.0);

  struct Rec {
    double tau_hat = 0.0;
    double ci_lo = 0.0;
    double ci_hi = 0.0;
    double target_value = 0.0;
    double covered = 0.0;
    double covered_sharp = 0.0;
    double width = 0.0;
  };
  std::vector<Rec> recs(total);
  const Rng master(cfg.master_seed);
  for_each_replication(total, cfg.threads, [&](std::uint64_t r) {
    Rng rng = master.substream(r);
    const FinitePopulation pop = cfg.model.draw(cfg.n, rng);
    const AssignmentSpace space(design, pop);
    const Assignment a = space.sample(rng);
    ObservedData od;
    od.z = a.z;
    od.design = design;
    od.yobs.reserve(static_cast<std::size_t>(cfg.n));
    for (int i = 0; i < cfg.n; ++i) {
      const Unit& u = pop.unit(i);
      od.yobs.push_back(a.z[static_cast<std::size_t>(i)] ? u.y1 : u.y0);
    }
    const EstimateReport est = estimate(od, cfg.alpha);
    Rec& rec = recs[r];
    rec.tau_hat = est.tau_hat;
    rec.ci_lo = *est.ci_lo;
    rec.ci_hi = *est.ci_hi;
    rec.width = rec.ci_hi - rec.ci_lo;
    if (cfg.target == StudyTarget::tau) {
      rec.target_value = mm.tau;
    } else {
      Rat diff_sum = 0;  // only the mean effect is needed, not all moments
      for (const Unit& u : pop.units()) diff_sum += u.y1 - u.y0;
      rec.target_value = to_double(diff_sum / pop.n());
    }
    rec.covered = (rec.ci_lo <= rec.target_value &&
                   rec.target_value <= rec.ci_hi)
                      ? 1.0
                      : 0.0;
    const double half_sharp = quantile * std::sqrt(*est.vhat_sharp);
    rec.covered_sharp = (est.tau_hat - half_sharp <= rec.target_value &&
                         rec.target_value <= est.tau_hat + half_sharp)
                            ? 1.0
                            : 0.0;
  });

  std::vector<double> covered(total), covered_sharp(total), width(total);
  for (std::uint64_t r = 0; r < total; ++r) {
    covered[r] = recs[r].covered;
    covered_sharp[r] = recs[r].covered_sharp;
    width[r] = recs[r].width;
  }
  const double coverage = mean_of(covered);
  const double coverage_sharp = mean_of(covered_sharp);
  const double nominal = 1.0 - cfg.alpha;
  const double nominal_se =
      std::sqrt(nominal * cfg.alpha / static_cast<double>(total));
  // A normal quantile over an estimated variance under-covers by about
  // phi(q) q (q^2 + 1) / (2 (n - 2)) at finite n; the lower band edge
  // allows that deficit so it is not mistaken for Monte Carlo noise.
  const double phi_q = std::exp(-0.5 * quantile * quantile) /
                       std::sqrt(2.0 * std::acos(-1.0));
  const double plugin_allowance =
      phi_q * quantile * (quantile * quantile + 1.0) /
      (2.0 * std::max(1, cfg.n - 2));

  StudyReport rep{StudyMode::coverage, cfg, {}, {}, false, {}, {}};
  rep.metrics = {
      {"coverage", coverage},
      {"coverage_sharp", coverage_sharp},
      {"nominal", nominal},
      {"nominal_se", nominal_se},
      {"plugin_allowance", plugin_allowance},
      {"mean_width", mean_of(width)},
  };
  const std::string name =
      std::string("coverage_of_") + study_target_name(cfg.target);
  StudyCheck c;
  c.name = name;
  c.value = coverage;
  c.lo = nominal - plugin_allowance - cfg.band * nominal_se;
  if (cfg.target == StudyTarget::tau || mm.vtau == 0.0) {
    c.hi = std::min(1.0, nominal + cfg.band * nominal_se);
  } else {
    // Conservative regime: the interval over-covers tau_S, so only the
    // lower edge is binding.
    c.hi = 1.0;
  }
  c.pass = coverage >= c.lo && coverage <= c.hi;
  rep.checks.push_back(c);
  if (cfg.target == StudyTarget::tau_s && mm.vtau > 0.0) {
    StudyCheck cs;
    cs.name = "coverage_sharp_still_valid";
    cs.value = coverage_sharp;
    cs.lo = c.lo;
    cs.hi = 1.0;
    cs.pass = coverage_sharp >= cs.lo;
    rep.checks.push_back(cs);
  }
  if (cfg.per_replication) {
    rep.columns = {"replication", "tau_hat", "ci_lo",   "ci_hi",
                   "target_value", "covered", "covered_sharp"};
    for (std::uint64_t r = 0; r < total; ++r) {
      rep.rows.push_back({static_cast<double>(r), recs[r].tau_hat,
                          recs[r].ci_lo, recs[r].ci_hi, recs[r].target_value,
                          recs[r].covered, recs[r].covered_sharp});
    }
  }
  finish(rep);
  return rep;
}

}  // namespace randlab

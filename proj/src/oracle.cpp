#include "randlab/oracle.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <mutex>
#include <thread>

#include "randlab/error.hpp"

namespace randlab {

namespace {

constexpr std::uint64_t kBlock = 8192;

// Runs block_fn(begin, end) over fixed-size rank blocks and returns the
// partial results in block order. The fixed block grid makes double-mode
// reductions byte-identical at any worker count.
template <typename Partial, typename Fn>
std::vector<Partial> run_blocks(std::uint64_t total, int threads,
                                Fn&& block_fn) {
  const std::uint64_t nblocks = total == 0 ? 0 : (total - 1) / kBlock + 1;
  std::vector<Partial> parts(nblocks);
  const int t = std::max(1, threads);
  if (t == 1 || nblocks <= 1) {
    for (std::uint64_t b = 0; b < nblocks; ++b) {
      parts[b] = block_fn(b * kBlock, std::min(total, (b + 1) * kBlock));
    }
    return parts;
  }
  std::atomic<std::uint64_t> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    try {
      for (;;) {
        const std::uint64_t b = next.fetch_add(1);
        if (b >= nblocks) return;
        parts[b] = block_fn(b * kBlock, std::min(total, (b + 1) * kBlock));
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
  return parts;
}

std::uint64_t checked_support(const AssignmentSpace& space,
                              const BigInt& cap) {
  const BigInt& support = space.support_size();
  if (support > cap) {
    fail(ErrorCode::cap_exceeded, "support size " + support.str() +
                                      " exceeds cap " + cap.str());
  }
  if (support > BigInt(1) << 62) {
    fail(ErrorCode::cap_exceeded,
         "support size " + support.str() + " exceeds the scanning limit 2^62");
  }
  return support.convert_to<std::uint64_t>();
}

std::vector<Rat> column_y1(const FinitePopulation& pop) {
  std::vector<Rat> v;
  v.reserve(static_cast<std::size_t>(pop.n()));
  for (const Unit& u : pop.units()) v.push_back(u.y1);
  return v;
}

std::vector<Rat> column_y0(const FinitePopulation& pop) {
  std::vector<Rat> v;
  v.reserve(static_cast<std::size_t>(pop.n()));
  for (const Unit& u : pop.units()) v.push_back(u.y0);
  return v;
}

// The design's estimand: what mean_tau_hat must equal exactly.
Rat design_estimand(const FinitePopulation& pop, const Design& design) {
  if (design.kind == Design::Kind::cluster) {
    return summarize(cluster_mean_population(pop)).tau_s;
  }
  return summarize(pop).tau_s;
}

// Closed-form value of E(vhat_neyman | S) - Var(tau_hat | S), per design.
std::optional<Rat> design_gap(const FinitePopulation& pop,
                              const Design& design,
                              const AssignmentSpace& space) {
  switch (design.kind) {
    case Design::Kind::complete: {
      const PopulationSummary s = summarize(pop);
      return s.stausq / Rat(s.n);
    }
    case Design::Kind::stratified: {
      Rat total = 0;
      const Rat n(pop.n());
      for (const AssignmentSpace::Group& g : space.groups()) {
        std::vector<Rat> tau;
        for (const std::vector<int>& slot : g.slots) {
          const Unit& u = pop.unit(slot[0]);
          tau.push_back(u.y1 - u.y0);
        }
        if (tau.size() < 2) return std::nullopt;
        const Rat w = Rat(static_cast<int>(tau.size())) / n;
        // E within-stratum vhat exceeds the stratum variance by
        // Stau_h^2 / n_h; the squared weight carries it to the total.
        total += w * w * rational_variance(tau) /
                 Rat(static_cast<int>(tau.size()));
      }
      return total;
    }
    case Design::Kind::matched_pairs: {
      // E(s_d^2) = S_mu^2 + (1/K) sum delta_h^2 where mu_h is the pair-mean
      // effect and delta_h half the within-pair effect difference, while
      // Var(tau_hat) = (1/K^2) sum delta_h^2; so the gap is S_mu^2 / K.
      std::vector<Rat> mu;
      for (const AssignmentSpace::Group& g : space.groups()) {
        const Unit& a = pop.unit(g.slots[0][0]);
        const Unit& b = pop.unit(g.slots[1][0]);
        mu.push_back(((a.y1 - a.y0) + (b.y1 - b.y0)) / 2);
      }
      if (mu.size() < 2) return std::nullopt;
      return rational_variance(mu) / Rat(static_cast<int>(mu.size()));
    }
    case Design::Kind::cluster: {
      const PopulationSummary s = summarize(cluster_mean_population(pop));
      return s.stausq / Rat(s.n);
    }
  }
  return std::nullopt;
}

struct MomentPartial {
  Rat sum_tau;
  Rat sum_tau_sq;
  Rat sum_s1;
  Rat sum_s0;
  Rat sum_vhat;
  bool s_available = true;
  bool vhat_available = true;
};

struct MomentPartialD {
  double sum_tau = 0.0;
  double sum_tau_sq = 0.0;
  double sum_s1 = 0.0;
  double sum_s0 = 0.0;
  double sum_vhat = 0.0;
  bool s_available = true;
  bool vhat_available = true;
};

bool close_rel(double a, double b) {
  const double scale = std::max({1.0, std::fabs(a), std::fabs(b)});
  return std::fabs(a - b) <= 1e-9 * scale;
}

}  // namespace

ResidualVectors residual_vectors(const FinitePopulation& pop) {
  const PopulationSummary s = summarize(pop);
  ResidualVectors r;
  r.u.reserve(static_cast<std::size_t>(pop.n()));
  r.w.reserve(static_cast<std::size_t>(pop.n()));
  for (const Unit& unit : pop.units()) {
    r.u.push_back(unit.y1 - s.ybar1);
    r.w.push_back(unit.y0 - s.ybar0);
  }
  return r;
}

EnumerationReport enumerate_moments(const FinitePopulation& pop,
                                    const Design& design,
                                    const EnumerateOptions& opts) {
  const AssignmentSpace space(design, pop);
  const std::uint64_t total = checked_support(space, opts.cap);
  const EstimatorPlan plan(design, pop.n(), pop.strata(), pop.clusters());
  const std::vector<Rat> y1 = column_y1(pop);
  const std::vector<Rat> y0 = column_y0(pop);
  const std::size_t n = static_cast<std::size_t>(pop.n());

  EnumerationReport rep;
  rep.support_size = space.support_size();
  rep.exact_mode = opts.exact;
  rep.neyman_formula_value = variance_by_design(pop, design);
  rep.estimand = design_estimand(pop, design);
  const std::optional<Rat> gap = design_gap(pop, design, space);

  const Rat rtotal{BigInt(total)};

  if (opts.exact) {
    auto parts = run_blocks<MomentPartial>(
        total, opts.threads, [&](std::uint64_t begin, std::uint64_t end) {
          MomentPartial p;
          std::vector<Rat> yobs(n);
          space.scan(begin, end, [&](std::uint64_t, const std::vector<int>& z) {
            for (std::size_t i = 0; i < n; ++i) yobs[i] = z[i] ? y1[i] : y0[i];
            const ExactEstimates e = plan.evaluate(yobs, z);
            p.sum_tau += e.tau_hat;
            p.sum_tau_sq += e.tau_hat * e.tau_hat;
            if (e.s1sq && e.s0sq) {
              p.sum_s1 += *e.s1sq;
              p.sum_s0 += *e.s0sq;
            } else {
              p.s_available = false;
            }
            if (e.vhat_neyman) {
              p.sum_vhat += *e.vhat_neyman;
            } else {
              p.vhat_available = false;
            }
          });
          return p;
        });
    MomentPartial all;
    for (const MomentPartial& p : parts) {
      all.sum_tau += p.sum_tau;
      all.sum_tau_sq += p.sum_tau_sq;
      all.sum_s1 += p.sum_s1;
      all.sum_s0 += p.sum_s0;
      all.sum_vhat += p.sum_vhat;
      all.s_available = all.s_available && p.s_available;
      all.vhat_available = all.vhat_available && p.vhat_available;
    }
    rep.mean_tau_hat = all.sum_tau / rtotal;
    rep.var_tau_hat =
        all.sum_tau_sq / rtotal - rep.mean_tau_hat * rep.mean_tau_hat;
    if (all.s_available) {
      rep.mean_s1sq = all.sum_s1 / rtotal;
      rep.mean_s0sq = all.sum_s0 / rtotal;
    }
    if (all.vhat_available) rep.mean_vhat_neyman = all.sum_vhat / rtotal;

    // Second pass: the textbook two-pass variance, compared exactly with
    // the one-pass reduction above.
    const Rat mean = rep.mean_tau_hat;
    auto dev_parts = run_blocks<Rat>(
        total, opts.threads, [&](std::uint64_t begin, std::uint64_t end) {
          Rat sum_dev = 0;
          space.scan(begin, end, [&](std::uint64_t, const std::vector<int>& z) {
            const Rat d = plan.tau_masked(y1, y0, z) - mean;
            sum_dev += d * d;
          });
          return sum_dev;
        });
    Rat sum_dev = 0;
    for (const Rat& d : dev_parts) sum_dev += d;
    const Rat two_pass_var = sum_dev / rtotal;
    if (two_pass_var != rep.var_tau_hat) {
      rep.failures.push_back("one-pass and two-pass variance disagree");
    }
    if (rep.mean_tau_hat != rep.estimand) {
      rep.failures.push_back("mean tau_hat differs from the estimand");
    }
    rep.f_s = rep.neyman_formula_value - rep.var_tau_hat;
    if (rep.f_s != 0) {
      rep.failures.push_back("variance formula differs from enumerated "
                             "variance (f_s != 0)");
    }
    if (rep.mean_vhat_neyman && gap) {
      rep.expected_gap = *gap;
      if (*rep.mean_vhat_neyman - rep.var_tau_hat != *gap) {
        rep.failures.push_back("conservativeness gap differs from its "
                               "closed form");
      }
    }
    if (design.kind == Design::Kind::complete && rep.mean_s1sq) {
      const PopulationSummary s = summarize(pop);
      if (*rep.mean_s1sq != s.s1sq) {
        rep.failures.push_back("mean s1sq differs from S1sq");
      }
      if (*rep.mean_s0sq != s.s0sq) {
        rep.failures.push_back("mean s0sq differs from S0sq");
      }
    }
  } else {
    std::vector<double> dy1(n), dy0(n);
    for (std::size_t i = 0; i < n; ++i) {
      dy1[i] = to_double(y1[i]);
      dy0[i] = to_double(y0[i]);
    }
    auto parts = run_blocks<MomentPartialD>(
        total, opts.threads, [&](std::uint64_t begin, std::uint64_t end) {
          MomentPartialD p;
          std::vector<Rat> yobs(n);
          space.scan(begin, end, [&](std::uint64_t, const std::vector<int>& z) {
            for (std::size_t i = 0; i < n; ++i) yobs[i] = z[i] ? y1[i] : y0[i];
            const ExactEstimates e = plan.evaluate(yobs, z);
            const double tau = to_double(e.tau_hat);
            p.sum_tau += tau;
            p.sum_tau_sq += tau * tau;
            if (e.s1sq && e.s0sq) {
              p.sum_s1 += to_double(*e.s1sq);
              p.sum_s0 += to_double(*e.s0sq);
            } else {
              p.s_available = false;
            }
            if (e.vhat_neyman) {
              p.sum_vhat += to_double(*e.vhat_neyman);
            } else {
              p.vhat_available = false;
            }
          });
          return p;
        });
    MomentPartialD all;
    for (const MomentPartialD& p : parts) {
      all.sum_tau += p.sum_tau;
      all.sum_tau_sq += p.sum_tau_sq;
      all.sum_s1 += p.sum_s1;
      all.sum_s0 += p.sum_s0;
      all.sum_vhat += p.sum_vhat;
      all.s_available = all.s_available && p.s_available;
      all.vhat_available = all.vhat_available && p.vhat_available;
    }
    const double dtotal = static_cast<double>(total);
    const double mean = all.sum_tau / dtotal;
    const double var = all.sum_tau_sq / dtotal - mean * mean;
    rep.mean_tau_hat = rational_from_double(mean);
    rep.var_tau_hat = rational_from_double(var);
    if (all.s_available) {
      rep.mean_s1sq = rational_from_double(all.sum_s1 / dtotal);
      rep.mean_s0sq = rational_from_double(all.sum_s0 / dtotal);
    }
    if (all.vhat_available) {
      rep.mean_vhat_neyman = rational_from_double(all.sum_vhat / dtotal);
    }
    auto dev_parts = run_blocks<double>(
        total, opts.threads, [&](std::uint64_t begin, std::uint64_t end) {
          double sum_dev = 0.0;
          space.scan(begin, end, [&](std::uint64_t, const std::vector<int>& z) {
            const double d = to_double(plan.tau_masked(y1, y0, z)) - mean;
            sum_dev += d * d;
          });
          return sum_dev;
        });
    double sum_dev = 0.0;
    for (double d : dev_parts) sum_dev += d;
    if (!close_rel(sum_dev / dtotal, var)) {
      rep.failures.push_back("one-pass and two-pass variance disagree");
    }
    if (!close_rel(mean, to_double(rep.estimand))) {
      rep.failures.push_back("mean tau_hat differs from the estimand");
    }
    const double formula = to_double(rep.neyman_formula_value);
    rep.f_s = rational_from_double(formula - var);
    if (!close_rel(formula, var)) {
      rep.failures.push_back("variance formula differs from enumerated "
                             "variance (f_s != 0)");
    }
    if (all.vhat_available && gap) {
      rep.expected_gap = *gap;
      if (!close_rel(all.sum_vhat / dtotal - var, to_double(*gap))) {
        rep.failures.push_back("conservativeness gap differs from its "
                               "closed form");
      }
    }
    if (design.kind == Design::Kind::complete && all.s_available) {
      const PopulationSummary s = summarize(pop);
      if (!close_rel(all.sum_s1 / dtotal, to_double(s.s1sq))) {
        rep.failures.push_back("mean s1sq differs from S1sq");
      }
      if (!close_rel(all.sum_s0 / dtotal, to_double(s.s0sq))) {
        rep.failures.push_back("mean s0sq differs from S0sq");
      }
    }
  }
  rep.identities_hold = rep.failures.empty();
  return rep;
}

Rat enumerate_variance(const FinitePopulation& pop, const Design& design,
                       const BigInt& cap) {
  const AssignmentSpace space(design, pop);
  const std::uint64_t total = checked_support(space, cap);
  const EstimatorPlan plan(design, pop.n(), pop.strata(), pop.clusters());
  const std::vector<Rat> y1 = column_y1(pop);
  const std::vector<Rat> y0 = column_y0(pop);
  Rat sum = 0, sumsq = 0;
  space.scan(0, total, [&](std::uint64_t, const std::vector<int>& z) {
    const Rat tau = plan.tau_masked(y1, y0, z);
    sum += tau;
    sumsq += tau * tau;
  });
  const Rat rtotal{BigInt(total)};
  const Rat mean = sum / rtotal;
  return sumsq / rtotal - mean * mean;
}

bool verify_residual_identity(const FinitePopulation& pop,
                              const Design& design,
                              const ResidualVectors& residuals,
                              const BigInt& cap) {
  if (design.kind != Design::Kind::complete) {
    fail(ErrorCode::invalid_argument,
         "the residual identity is stated for complete designs");
  }
  if (static_cast<int>(residuals.u.size()) != pop.n() ||
      static_cast<int>(residuals.w.size()) != pop.n()) {
    fail(ErrorCode::invalid_argument, "residual length mismatch");
  }
  const AssignmentSpace space(design, pop);
  const std::uint64_t total = checked_support(space, cap);
  const EstimatorPlan plan(design, pop.n(), pop.strata(), pop.clusters());
  const std::vector<Rat> y1 = column_y1(pop);
  const std::vector<Rat> y0 = column_y0(pop);
  const Rat tau_s = summarize(pop).tau_s;
  const Rat rn1(design.n1), rn0(pop.n() - design.n1);
  bool ok = true;
  space.scan(0, total, [&](std::uint64_t, const std::vector<int>& z) {
    if (!ok) return;
    Rat zu = 0, zw = 0;
    for (std::size_t i = 0; i < z.size(); ++i) {
      if (z[i]) {
        zu += residuals.u[i];
      } else {
        zw += residuals.w[i];
      }
    }
    const Rat lhs = plan.tau_masked(y1, y0, z) - tau_s;
    if (lhs != zu / rn1 - zw / rn0) ok = false;
  });
  return ok;
}

bool verify_residual_identity(const FinitePopulation& pop,
                              const Design& design, const BigInt& cap) {
  return verify_residual_identity(pop, design, residual_vectors(pop), cap);
}

namespace {

std::vector<std::string> labels_per_unit(int n, const LabelGroups& groups) {
  std::vector<std::string> out(static_cast<std::size_t>(n));
  for (const auto& [label, members] : groups) {
    for (int i : members) out[static_cast<std::size_t>(i)] = label;
  }
  return out;
}

// Sharp-null imputation: both potential outcomes equal the observed one.
FinitePopulation imputed_population(const ObservedData& data) {
  const int n = static_cast<int>(data.yobs.size());
  const std::vector<std::string> strata = labels_per_unit(n, data.strata);
  const std::vector<std::string> clusters = labels_per_unit(n, data.clusters);
  std::vector<Unit> units;
  units.reserve(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const std::size_t k = static_cast<std::size_t>(i);
    units.push_back({data.yobs[k], data.yobs[k], strata[k], clusters[k]});
  }
  return FinitePopulation(std::move(units));
}

Rat abs_rat(Rat r) {
  if (r < 0) r = -r;
  return r;
}

}  // namespace

ExactFrt frt_exact(const ObservedData& data, FrtStatistic /*stat*/,
                   const BigInt& cap) {
  const FinitePopulation imputed = imputed_population(data);
  const AssignmentSpace space(data.design, imputed);
  if (!space.contains(Assignment{data.z})) {
    fail(ErrorCode::incompatible,
         "observed z does not satisfy the design's margins");
  }
  const std::uint64_t total = checked_support(space, cap);
  const EstimatorPlan plan(data.design, imputed.n(), imputed.strata(),
                           imputed.clusters());
  const Rat t_obs = abs_rat(plan.tau_masked(data.yobs, data.yobs, data.z));
  BigInt extreme = 0;
  space.scan(0, total, [&](std::uint64_t, const std::vector<int>& z) {
    if (abs_rat(plan.tau_masked(data.yobs, data.yobs, z)) >= t_obs) {
      ++extreme;
    }
  });
  ExactFrt out;
  out.support_size = space.support_size();
  out.n_extreme = extreme;
  out.p_value = Rat(extreme) / Rat(space.support_size());
  out.t_observed = t_obs;
  return out;
}

MonteCarloFrt frt_monte_carlo(const ObservedData& data, std::uint64_t draws,
                              Rng& rng, FrtStatistic /*stat*/) {
  if (draws < 100) {
    fail(ErrorCode::invalid_argument, "Monte Carlo test needs draws >= 100");
  }
  const FinitePopulation imputed = imputed_population(data);
  const AssignmentSpace space(data.design, imputed);
  if (!space.contains(Assignment{data.z})) {
    fail(ErrorCode::incompatible,
         "observed z does not satisfy the design's margins");
  }
  const EstimatorPlan plan(data.design, imputed.n(), imputed.strata(),
                           imputed.clusters());
  const Rat t_obs = abs_rat(plan.tau_masked(data.yobs, data.yobs, data.z));
  std::uint64_t extreme = 0;
  for (std::uint64_t d = 0; d < draws; ++d) {
    const Assignment a = space.sample(rng);
    if (abs_rat(plan.tau_masked(data.yobs, data.yobs, a.z)) >= t_obs) {
      ++extreme;
    }
  }
  MonteCarloFrt out;
  out.draws = draws;
  out.n_extreme = extreme;
  out.p_value =
      (1.0 + static_cast<double>(extreme)) / (1.0 + static_cast<double>(draws));
  out.se = std::sqrt(out.p_value * (1.0 - out.p_value) /
                     static_cast<double>(draws));
  out.t_observed = t_obs;
  return out;
}

}  // namespace randlab

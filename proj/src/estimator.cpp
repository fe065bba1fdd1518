#include "randlab/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "randlab/error.hpp"
#include "randlab/normal.hpp"

namespace randlab {

namespace {

std::vector<std::vector<int>> member_lists(const LabelGroups& groups) {
  std::vector<std::vector<int>> out;
  out.reserve(groups.size());
  for (const auto& [label, members] : groups) out.push_back(members);
  return out;
}

struct ArmMoments {
  Rat mean;
  std::optional<Rat> var;  // divisor count-1, absent when count < 2
};

ArmMoments arm_moments(const std::vector<Rat>& vals) {
  ArmMoments m;
  m.mean = rational_mean(vals);
  if (vals.size() >= 2) m.var = rational_variance(vals);
  return m;
}

}  // namespace

EstimatorPlan::EstimatorPlan(const Design& design, int n,
                             const LabelGroups& strata,
                             const LabelGroups& clusters)
    : kind_(design.kind), n_(n) {
  switch (kind_) {
    case Design::Kind::complete:
      break;
    case Design::Kind::stratified:
      if (strata.empty()) {
        fail(ErrorCode::incompatible,
             "stratified estimation requires stratum labels");
      }
      strata_ = member_lists(strata);
      break;
    case Design::Kind::matched_pairs:
      if (strata.empty()) {
        fail(ErrorCode::incompatible,
             "matched-pairs estimation requires pair labels");
      }
      strata_ = member_lists(strata);
      for (const auto& pair : strata_) {
        if (pair.size() != 2) {
          fail(ErrorCode::incompatible, "matched pairs need strata of size 2");
        }
      }
      break;
    case Design::Kind::cluster:
      if (clusters.empty()) {
        fail(ErrorCode::incompatible,
             "cluster estimation requires cluster labels");
      }
      clusters_ = member_lists(clusters);
      break;
  }
}

ExactEstimates EstimatorPlan::arm_stats(const std::vector<Rat>& y1vals,
                                        const std::vector<Rat>& y0vals,
                                        int scale_n, bool with_sharp) const {
  const int n1 = static_cast<int>(y1vals.size());
  const int n0 = static_cast<int>(y0vals.size());
  if (n1 == 0 || n0 == 0) {
    fail(ErrorCode::invalid_argument, "an arm has no observations");
  }
  ExactEstimates e;
  const ArmMoments a1 = arm_moments(y1vals);
  const ArmMoments a0 = arm_moments(y0vals);
  e.ybar1 = a1.mean;
  e.ybar0 = a0.mean;
  e.tau_hat = a1.mean - a0.mean;
  e.s1sq = a1.var;
  e.s0sq = a0.var;
  if (a1.var && a0.var) {
    e.vhat_neyman = *a1.var / Rat(n1) + *a0.var / Rat(n0);
    if (with_sharp) {
      std::vector<Rat> m1 = y1vals;
      std::vector<Rat> m0 = y0vals;
      std::sort(m1.begin(), m1.end());
      std::sort(m0.begin(), m0.end());
      const Rat bound = sharp_stau2_lower_bound(expand_marginal(m1, scale_n),
                                                expand_marginal(m0, scale_n));
      Rat sharp = *e.vhat_neyman - bound / Rat(scale_n);
      if (sharp < 0) sharp = 0;
      e.vhat_sharp = sharp;
    }
  }
  return e;
}

ExactEstimates EstimatorPlan::evaluate(const std::vector<Rat>& yobs,
                                       const std::vector<int>& z,
                                       bool with_sharp) const {
  switch (kind_) {
    case Design::Kind::complete: {
      std::vector<Rat> v1, v0;
      v1.reserve(yobs.size());
      v0.reserve(yobs.size());
      for (std::size_t i = 0; i < yobs.size(); ++i) {
        (z[i] ? v1 : v0).push_back(yobs[i]);
      }
      return arm_stats(v1, v0, n_, with_sharp);
    }
    case Design::Kind::stratified: {
      ExactEstimates e;
      e.ybar1 = 0;
      e.ybar0 = 0;
      Rat vhat = 0;
      Rat s1 = 0, s0 = 0;
      bool var_ok = true;
      std::vector<Rat> v1, v0;
      for (const std::vector<int>& members : strata_) {
        v1.clear();
        v0.clear();
        for (int i : members) {
          (z[static_cast<std::size_t>(i)] ? v1 : v0)
              .push_back(yobs[static_cast<std::size_t>(i)]);
        }
        if (v1.empty() || v0.empty()) {
          fail(ErrorCode::invalid_argument,
               "a stratum has an empty arm");
        }
        const Rat w = Rat(static_cast<int>(members.size())) / Rat(n_);
        const ArmMoments a1 = arm_moments(v1);
        const ArmMoments a0 = arm_moments(v0);
        e.ybar1 += w * a1.mean;
        e.ybar0 += w * a0.mean;
        if (a1.var && a0.var) {
          s1 += w * *a1.var;
          s0 += w * *a0.var;
          vhat += w * w *
                  (*a1.var / Rat(static_cast<int>(v1.size())) +
                   *a0.var / Rat(static_cast<int>(v0.size())));
        } else {
          var_ok = false;
        }
      }
      e.tau_hat = e.ybar1 - e.ybar0;
      if (var_ok) {
        e.s1sq = s1;
        e.s0sq = s0;
        e.vhat_neyman = vhat;
      }
      return e;
    }
    case Design::Kind::matched_pairs: {
      const int k = static_cast<int>(strata_.size());
      std::vector<Rat> diffs, treated, control;
      diffs.reserve(static_cast<std::size_t>(k));
      for (const std::vector<int>& pair : strata_) {
        const int a = pair[0];
        const int b = pair[1];
        const bool a_treated = z[static_cast<std::size_t>(a)] == 1;
        const int t = a_treated ? a : b;
        const int c = a_treated ? b : a;
        treated.push_back(yobs[static_cast<std::size_t>(t)]);
        control.push_back(yobs[static_cast<std::size_t>(c)]);
        diffs.push_back(treated.back() - control.back());
      }
      ExactEstimates e;
      e.ybar1 = rational_mean(treated);
      e.ybar0 = rational_mean(control);
      e.tau_hat = e.ybar1 - e.ybar0;
      if (k >= 2) {
        e.s1sq = rational_variance(treated);
        e.s0sq = rational_variance(control);
        e.vhat_neyman = rational_variance(diffs) / Rat(k);
      }
      return e;
    }
    case Design::Kind::cluster: {
      std::vector<Rat> v1, v0;
      for (const std::vector<int>& members : clusters_) {
        Rat sum = 0;
        for (int i : members) sum += yobs[static_cast<std::size_t>(i)];
        const Rat mean = sum / Rat(static_cast<int>(members.size()));
        (z[static_cast<std::size_t>(members[0])] ? v1 : v0).push_back(mean);
      }
      return arm_stats(v1, v0,
                       static_cast<int>(clusters_.size()), with_sharp);
    }
  }
  fail(ErrorCode::invalid_argument, "unknown design kind");
}

Rat EstimatorPlan::tau_masked(const std::vector<Rat>& y1,
                              const std::vector<Rat>& y0,
                              const std::vector<int>& z) const {
  auto group_diff = [&](const std::vector<int>& members) {
    Rat t = 0, c = 0;
    int n1 = 0;
    for (int i : members) {
      const std::size_t k = static_cast<std::size_t>(i);
      if (z[k]) {
        t += y1[k];
        ++n1;
      } else {
        c += y0[k];
      }
    }
    const int n0 = static_cast<int>(members.size()) - n1;
    return t / Rat(n1) - c / Rat(n0);
  };
  switch (kind_) {
    case Design::Kind::complete: {
      Rat t = 0, c = 0;
      int n1 = 0;
      for (std::size_t k = 0; k < z.size(); ++k) {
        if (z[k]) {
          t += y1[k];
          ++n1;
        } else {
          c += y0[k];
        }
      }
      return t / Rat(n1) - c / Rat(static_cast<int>(z.size()) - n1);
    }
    case Design::Kind::stratified: {
      Rat total = 0;
      for (const std::vector<int>& members : strata_) {
        total += Rat(static_cast<int>(members.size())) * group_diff(members);
      }
      return total / Rat(n_);
    }
    case Design::Kind::matched_pairs: {
      Rat total = 0;
      for (const std::vector<int>& pair : strata_) {
        total += group_diff(pair);
      }
      return total / Rat(static_cast<int>(strata_.size()));
    }
    case Design::Kind::cluster: {
      Rat t = 0, c = 0;
      int m1 = 0;
      for (const std::vector<int>& members : clusters_) {
        Rat sum = 0;
        const bool treated = z[static_cast<std::size_t>(members[0])] == 1;
        for (int i : members) {
          const std::size_t k = static_cast<std::size_t>(i);
          sum += treated ? y1[k] : y0[k];
        }
        const Rat mean = sum / Rat(static_cast<int>(members.size()));
        if (treated) {
          t += mean;
          ++m1;
        } else {
          c += mean;
        }
      }
      const int m0 = static_cast<int>(clusters_.size()) - m1;
      return t / Rat(m1) - c / Rat(m0);
    }
  }
  fail(ErrorCode::invalid_argument, "unknown design kind");
}

ObservedData observe(const FinitePopulation& pop, const Design& design,
                     const Assignment& a) {
  AssignmentSpace space(design, pop);
  if (!space.contains(a)) {
    fail(ErrorCode::incompatible, "assignment outside the design's support");
  }
  ObservedData d;
  d.z = a.z;
  d.design = design;
  d.strata = pop.strata();
  d.clusters = pop.clusters();
  d.yobs.reserve(static_cast<std::size_t>(pop.n()));
  for (int i = 0; i < pop.n(); ++i) {
    const Unit& u = pop.unit(i);
    d.yobs.push_back(a.z[static_cast<std::size_t>(i)] ? u.y1 : u.y0);
  }
  return d;
}

ObservedData observed_from_file(const ObservedFile& file,
                                const Design& design) {
  const std::size_t n = file.yobs.size();
  if (file.unit_ids.size() != n || file.z.size() != n ||
      (!file.stratum.empty() && file.stratum.size() != n) ||
      (!file.cluster.empty() && file.cluster.size() != n)) {
    fail(ErrorCode::invalid_argument,
         "observed columns have mismatched lengths");
  }
  std::vector<Unit> units;
  units.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    units.push_back({file.yobs[i], file.yobs[i],
                     file.stratum.empty() ? std::string() : file.stratum[i],
                     file.cluster.empty() ? std::string() : file.cluster[i]});
  }
  FinitePopulation imputed(std::move(units));
  AssignmentSpace space(design, imputed);
  Assignment a{file.z};
  if (!space.contains(a)) {
    fail(ErrorCode::incompatible,
         "observed z does not satisfy the design's margins");
  }
  ObservedData d;
  d.z = file.z;
  d.yobs = file.yobs;
  d.design = design;
  d.strata = imputed.strata();
  d.clusters = imputed.clusters();
  return d;
}

ExactEstimates exact_estimates(const ObservedData& data, bool with_sharp) {
  EstimatorPlan plan(data.design, static_cast<int>(data.z.size()), data.strata,
                     data.clusters);
  return plan.evaluate(data.yobs, data.z, with_sharp);
}

EstimateReport estimate(const ObservedData& data, double alpha) {
  if (!(alpha > 0.0 && alpha < 1.0)) {
    fail(ErrorCode::invalid_argument, "alpha must lie in (0, 1)");
  }
  const ExactEstimates e = exact_estimates(data, /*with_sharp=*/true);
  EstimateReport r;
  r.ybar1_obs = to_double(e.ybar1);
  r.ybar0_obs = to_double(e.ybar0);
  r.tau_hat = to_double(e.tau_hat);
  r.alpha = alpha;
  if (e.s1sq) r.s1sq = to_double(*e.s1sq);
  if (e.s0sq) r.s0sq = to_double(*e.s0sq);
  if (e.vhat_neyman) {
    r.vhat_neyman = to_double(*e.vhat_neyman);
    const double q = normal_quantile(1.0 - alpha / 2.0);
    const double half = q * std::sqrt(*r.vhat_neyman);
    r.ci_lo = r.tau_hat - half;
    r.ci_hi = r.tau_hat + half;
  }
  if (e.vhat_sharp) r.vhat_sharp = to_double(*e.vhat_sharp);
  return r;
}

Rat neyman_true_variance(const PopulationSummary& summary,
                         const Design& design) {
  if (design.kind != Design::Kind::complete) {
    fail(ErrorCode::invalid_argument,
         "three-term variance formula applies to complete designs; use "
         "variance_by_design");
  }
  const int n = summary.n;
  const int n1 = design.n1;
  const int n0 = n - n1;
  if (n1 < 1 || n0 < 1) {
    fail(ErrorCode::invalid_argument, "both arms must be non-empty");
  }
  return summary.s1sq / Rat(n1) + summary.s0sq / Rat(n0) -
         summary.stausq / Rat(n);
}

double superpop_variance(const SuperPopulationModel& model, int n1, int n0) {
  if (n1 < 1 || n0 < 1) {
    fail(ErrorCode::invalid_argument, "arm sizes must be at least 1");
  }
  const ModelMoments m = model.moments();
  return m.v1 / n1 + m.v0 / n0;
}

namespace {

// Three-term formula on one group of units with the given treated count.
Rat group_variance(const FinitePopulation& pop, const std::vector<int>& members,
                   int treat) {
  std::vector<Rat> y1, y0, tau;
  for (int i : members) {
    const Unit& u = pop.unit(i);
    y1.push_back(u.y1);
    y0.push_back(u.y0);
    tau.push_back(u.y1 - u.y0);
  }
  const int m = static_cast<int>(members.size());
  return rational_variance(y1) / Rat(treat) +
         rational_variance(y0) / Rat(m - treat) -
         rational_variance(tau) / Rat(m);
}

}  // namespace

Rat variance_by_design(const FinitePopulation& pop, const Design& design) {
  AssignmentSpace space(design, pop);  // validates compatibility
  switch (design.kind) {
    case Design::Kind::complete:
      return neyman_true_variance(summarize(pop), design);
    case Design::Kind::stratified:
    case Design::Kind::matched_pairs: {
      Rat total = 0;
      const Rat n(pop.n());
      for (const AssignmentSpace::Group& g : space.groups()) {
        std::vector<int> members;
        for (const std::vector<int>& slot : g.slots) {
          members.push_back(slot[0]);
        }
        const Rat w = Rat(static_cast<int>(members.size())) / n;
        total += w * w * group_variance(pop, members, g.treat);
      }
      return total;
    }
    case Design::Kind::cluster: {
      const FinitePopulation means = cluster_mean_population(pop);
      return neyman_true_variance(summarize(means),
                                  Design::complete(design.m1));
    }
  }
  fail(ErrorCode::invalid_argument, "unknown design kind");
}

Rat sharp_stau2_lower_bound(std::vector<Rat> y1_marginal,
                            std::vector<Rat> y0_marginal) {
  if (y1_marginal.size() != y0_marginal.size()) {
    fail(ErrorCode::invalid_argument, "marginals must have equal length");
  }
  if (y1_marginal.size() < 2) {
    fail(ErrorCode::invalid_argument, "marginals need n >= 2");
  }
  std::sort(y1_marginal.begin(), y1_marginal.end());
  std::sort(y0_marginal.begin(), y0_marginal.end());
  std::vector<Rat> diffs;
  diffs.reserve(y1_marginal.size());
  for (std::size_t i = 0; i < y1_marginal.size(); ++i) {
    diffs.push_back(y1_marginal[i] - y0_marginal[i]);
  }
  return rational_variance(diffs);
}

std::vector<Rat> expand_marginal(const std::vector<Rat>& sorted_values,
                                 int n) {
  const int m = static_cast<int>(sorted_values.size());
  if (m < 1 || n < 1) {
    fail(ErrorCode::invalid_argument, "expansion needs non-empty inputs");
  }
  std::vector<Rat> out;
  out.reserve(static_cast<std::size_t>(n));
  for (int j = 1; j <= n; ++j) {
    // index of the (j - 1/2)/n quantile: ceil((2j-1) m / (2n)), 1-based
    const long long num = (2LL * j - 1) * m + 2LL * n - 1;
    long long idx = num / (2LL * n) - 1;
    if (idx < 0) idx = 0;
    if (idx >= m) idx = m - 1;
    out.push_back(sorted_values[static_cast<std::size_t>(idx)]);
  }
  return out;
}

FinitePopulation cluster_mean_population(const FinitePopulation& pop) {
  if (!pop.has_clusters()) {
    fail(ErrorCode::incompatible, "population has no cluster labels");
  }
  if (pop.clusters().size() < 2) {
    fail(ErrorCode::incompatible, "need at least 2 clusters");
  }
  std::vector<Unit> units;
  for (const auto& [label, members] : pop.clusters()) {
    Rat s1 = 0, s0 = 0;
    for (int i : members) {
      s1 += pop.unit(i).y1;
      s0 += pop.unit(i).y0;
    }
    const Rat m(static_cast<int>(members.size()));
    units.push_back({s1 / m, s0 / m, "", ""});
  }
  return FinitePopulation(std::move(units));
}

}  // namespace randlab

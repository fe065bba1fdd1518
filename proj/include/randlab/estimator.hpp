#pragma once

#include <optional>
#include <vector>

#include "randlab/csv.hpp"
#include "randlab/design.hpp"
#include "randlab/population.hpp"
#include "randlab/rational.hpp"

namespace randlab {

// One realized experiment: the assignment plus the outcomes it exposed.
// Labels travel along so estimation can respect the design's structure.
struct ObservedData {
  std::vector<int> z;
  std::vector<Rat> yobs;
  Design design;
  LabelGroups strata;    // empty unless the units carry stratum labels
  LabelGroups clusters;  // empty unless the units carry cluster labels
};

// Masks one potential outcome per unit. Errors on length mismatch or an
// assignment outside the design's support.
ObservedData observe(const FinitePopulation& pop, const Design& design,
                     const Assignment& a);

// Same, from an observed-experiment file; validates the z margins against
// the design.
ObservedData observed_from_file(const ObservedFile& file, const Design& design);

// Estimates in exact arithmetic. Per design kind:
//   complete   arm means; s1sq/s0sq with divisors n1-1/n0-1;
//              vhat_neyman = s1sq/n1 + s0sq/n0.
//   stratified per-stratum arm means combined with weights n_h/n; reported
//              arm means are the weighted combinations, so
//              tau_hat = ybar1 - ybar0 always; vhat_neyman =
//              sum w_h^2 (s1h^2/n1h + s0h^2/n0h), available only when every
//              stratum has >= 2 units per arm; s1sq/s0sq are the weighted
//              within-stratum arm variances (= the complete-design values
//              when there is one stratum).
//   pairs      tau_hat = mean of within-pair treated-minus-control
//              differences; vhat_neyman = var(differences)/K, divisor K-1
//              (conservative pair estimator; the within-pair effect
//              variation is unidentifiable); s1sq/s0sq are across-pair arm
//              variances, descriptive only.
//   cluster    everything computed on cluster means with margins (m1, m0);
//              the estimand is the mean of cluster-level effects, which
//              differs from the unit-level contrast when cluster sizes
//              vary.
// vhat_sharp subtracts a plug-in lower bound on the effect-variance term
// and is available for complete and cluster designs only.
struct ExactEstimates {
  Rat ybar1;
  Rat ybar0;
  Rat tau_hat;
  std::optional<Rat> s1sq;
  std::optional<Rat> s0sq;
  std::optional<Rat> vhat_neyman;
  std::optional<Rat> vhat_sharp;
};

// Reusable evaluation plan: resolves the design against the unit labels
// once, then evaluates assignments cheaply (the enumeration engine calls
// evaluate once per support point).
class EstimatorPlan {
 public:
  EstimatorPlan(const Design& design, int n, const LabelGroups& strata,
                const LabelGroups& clusters);

  ExactEstimates evaluate(const std::vector<Rat>& yobs,
                          const std::vector<int>& z,
                          bool with_sharp = false) const;

  // tau_hat alone, reading y1 where treated and y0 where control; avoids
  // materializing the masked outcome vector in enumeration loops.
  Rat tau_masked(const std::vector<Rat>& y1, const std::vector<Rat>& y0,
                 const std::vector<int>& z) const;

  Design::Kind kind() const { return kind_; }

 private:
  ExactEstimates arm_stats(const std::vector<Rat>& y1vals,
                           const std::vector<Rat>& y0vals, int scale_n,
                           bool with_sharp) const;

  Design::Kind kind_;
  int n_ = 0;
  std::vector<std::vector<int>> strata_;
  std::vector<std::vector<int>> clusters_;
};

ExactEstimates exact_estimates(const ObservedData& data,
                               bool with_sharp = false);

// Double-precision report for serialization; absent optionals are the
// explicit "variance unavailable" state (never NaN).
struct EstimateReport {
  double ybar1_obs = 0.0;
  double ybar0_obs = 0.0;
  double tau_hat = 0.0;
  std::optional<double> s1sq;
  std::optional<double> s0sq;
  std::optional<double> vhat_neyman;
  std::optional<double> vhat_sharp;
  std::optional<double> ci_lo;  // tau_hat +- z_{1-alpha/2} sqrt(vhat_neyman)
  std::optional<double> ci_hi;
  double alpha = 0.0;
};

EstimateReport estimate(const ObservedData& data, double alpha);

// S1sq/n1 + S0sq/n0 - Stausq/n, exact. Complete designs only; other kinds
// go through variance_by_design.
Rat neyman_true_variance(const PopulationSummary& summary,
                         const Design& design);

// V1/n1 + V0/n0.
double superpop_variance(const SuperPopulationModel& model, int n1, int n0);

// True randomization variance of the design's estimator:
//   complete    the three-term formula above;
//   stratified  sum over strata of (n_h/n)^2 times the within-stratum value;
//   pairs       the stratified value with n_h = 2, n1_h = 1;
//   cluster     the complete-design value on cluster means with (m, m1).
Rat variance_by_design(const FinitePopulation& pop, const Design& design);

// Minimum over all pairings of the two marginals of the (n-1)-divisor
// variance of paired differences; attained by pairing both in sorted order.
Rat sharp_stau2_lower_bound(std::vector<Rat> y1_marginal,
                            std::vector<Rat> y0_marginal);

// Inverse-ecdf expansion of a sorted m-point marginal to n points,
// evaluating at probabilities (j - 1/2)/n. Identity when m == n.
std::vector<Rat> expand_marginal(const std::vector<Rat>& sorted_values, int n);

// Per-cluster means of both potential outcomes, clusters in
// first-appearance order.
FinitePopulation cluster_mean_population(const FinitePopulation& pop);

}  // namespace randlab

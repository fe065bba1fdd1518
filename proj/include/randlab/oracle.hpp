#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "randlab/design.hpp"
#include "randlab/estimator.hpp"
#include "randlab/population.hpp"
#include "randlab/rational.hpp"
#include "randlab/rng.hpp"

namespace randlab {

// Centered potential outcomes: u_i = y1_i - ybar1, w_i = y0_i - ybar0.
// Both sum to zero exactly.
struct ResidualVectors {
  std::vector<Rat> u;
  std::vector<Rat> w;
};

ResidualVectors residual_vectors(const FinitePopulation& pop);

struct EnumerateOptions {
  BigInt cap = 10'000'000;  // refuse supports larger than this
  int threads = 1;
  bool exact = true;  // false: double accumulators, 1e-9 relative checks
};

// Exact conditional moments of the design's estimator over the uniform
// assignment support, with every verifiable identity checked:
//   - mean_tau_hat equals the design's estimand (tau_S, or its cluster-mean
//     analogue) exactly;
//   - f_s = neyman_formula_value - var_tau_hat = 0 exactly, where the
//     formula value comes from variance_by_design;
//   - mean_vhat_neyman - var_tau_hat equals the design's closed-form
//     conservativeness gap exactly;
//   - complete designs only: mean_s1sq = S1sq and mean_s0sq = S0sq;
//   - the one-pass variance reduction agrees with the two-pass definition.
// In approximate mode the same checks run at 1e-9 relative tolerance and
// the rational fields hold dyadic conversions of the double accumulators.
struct EnumerationReport {
  BigInt support_size;
  bool exact_mode = true;

  Rat mean_tau_hat;
  Rat var_tau_hat;
  std::optional<Rat> mean_s1sq;
  std::optional<Rat> mean_s0sq;
  std::optional<Rat> mean_vhat_neyman;
  Rat neyman_formula_value;
  Rat f_s;
  Rat estimand;
  std::optional<Rat> expected_gap;

  std::vector<std::string> failures;  // names of identities that failed
  bool identities_hold = false;
};

EnumerationReport enumerate_moments(const FinitePopulation& pop,
                                    const Design& design,
                                    const EnumerateOptions& opts = {});

// Exact Var(tau_hat | S) only; the lean inner loop for study replications.
Rat enumerate_variance(const FinitePopulation& pop, const Design& design,
                       const BigInt& cap);

// Checks, for every assignment in the support, that
//   tau_hat - tau_S = (1/n1) sum z_i u_i - (1/n0) sum (1-z_i) w_i
// holds exactly. The overload taking explicit residuals exists so tests can
// demonstrate that corrupted residuals are caught.
bool verify_residual_identity(const FinitePopulation& pop,
                              const Design& design,
                              const ResidualVectors& residuals,
                              const BigInt& cap = 10'000'000);
bool verify_residual_identity(const FinitePopulation& pop,
                              const Design& design,
                              const BigInt& cap = 10'000'000);

enum class FrtStatistic { abs_diff_means };

// Exact randomization test of the sharp null (no effect for any unit):
// every potential outcome is imputed as the observed one, the statistic is
// evaluated over the full support, and ties count as extreme.
struct ExactFrt {
  Rat p_value;  // in (0, 1]
  BigInt support_size;
  BigInt n_extreme;
  Rat t_observed;
};

ExactFrt frt_exact(const ObservedData& data,
                   FrtStatistic stat = FrtStatistic::abs_diff_means,
                   const BigInt& cap = 10'000'000);

// Monte Carlo version: p = (1 + #extreme) / (1 + draws), never zero, with
// the binomial standard error sqrt(p(1-p)/draws).
struct MonteCarloFrt {
  double p_value;
  double se;
  std::uint64_t draws;
  std::uint64_t n_extreme;
  Rat t_observed;
};

MonteCarloFrt frt_monte_carlo(const ObservedData& data, std::uint64_t draws,
                              Rng& rng,
                              FrtStatistic stat = FrtStatistic::abs_diff_means);

}  // namespace randlab

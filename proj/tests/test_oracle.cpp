#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "randlab/design.hpp"
#include "randlab/error.hpp"
#include "randlab/estimator.hpp"
#include "randlab/oracle.hpp"
#include "test_support.hpp"

using randlab::Assignment;
using randlab::BigInt;
using randlab::Design;
using randlab::EnumerateOptions;
using randlab::Error;
using randlab::ErrorCode;
using randlab::FinitePopulation;
using randlab::Rat;
using randlab::Rng;
using testutil::make_pop;

namespace {

// Independent reference enumeration. Groups are derived straight from the
// labels, subsets come from bitmasks, and the estimator is written from its
// definition; none of the library's enumeration machinery is involved.
struct NaiveGroup {
  std::vector<std::vector<int>> slots;
  int treat = 0;
};

std::vector<NaiveGroup> naive_groups(const FinitePopulation& pop,
                                     const Design& design) {
  std::vector<NaiveGroup> out;
  switch (design.kind) {
    case Design::Kind::complete: {
      NaiveGroup g;
      for (int i = 0; i < pop.n(); ++i) g.slots.push_back({i});
      g.treat = design.n1;
      out.push_back(std::move(g));
      break;
    }
    case Design::Kind::stratified: {
      for (const auto& [label, k] : design.stratum_n1) {
        NaiveGroup g;
        for (const auto& [name, members] : pop.strata()) {
          if (name == label) {
            for (int i : members) g.slots.push_back({i});
          }
        }
        g.treat = k;
        out.push_back(std::move(g));
      }
      break;
    }
    case Design::Kind::matched_pairs: {
      for (const auto& [name, members] : pop.strata()) {
        NaiveGroup g;
        for (int i : members) g.slots.push_back({i});
        g.treat = 1;
        out.push_back(std::move(g));
      }
      break;
    }
    case Design::Kind::cluster: {
      NaiveGroup g;
      for (const auto& [name, members] : pop.clusters()) {
        g.slots.push_back(members);
      }
      g.treat = design.m1;
      out.push_back(std::move(g));
      break;
    }
  }
  return out;
}

Rat naive_tau(const FinitePopulation& pop, const Design& design,
              const std::vector<int>& z) {
  switch (design.kind) {
    case Design::Kind::complete: {
      Rat t = 0, c = 0;
      int nt = 0, nc = 0;
      for (int i = 0; i < pop.n(); ++i) {
        if (z[static_cast<std::size_t>(i)] == 1) {
          t += pop.unit(i).y1;
          ++nt;
        } else {
          c += pop.unit(i).y0;
          ++nc;
        }
      }
      return t / nt - c / nc;
    }
    case Design::Kind::stratified: {
      Rat total = 0;
      for (const auto& [name, members] : pop.strata()) {
        Rat t = 0, c = 0;
        int nt = 0, nc = 0;
        for (int i : members) {
          if (z[static_cast<std::size_t>(i)] == 1) {
            t += pop.unit(i).y1;
            ++nt;
          } else {
            c += pop.unit(i).y0;
            ++nc;
          }
        }
        total += Rat(static_cast<long>(members.size()), pop.n()) *
                 (t / nt - c / nc);
      }
      return total;
    }
    case Design::Kind::matched_pairs: {
      Rat sum = 0;
      long k = 0;
      for (const auto& [name, members] : pop.strata()) {
        for (int i : members) {
          if (z[static_cast<std::size_t>(i)] == 1) {
            sum += pop.unit(i).y1;
          } else {
            sum -= pop.unit(i).y0;
          }
        }
        ++k;
      }
      return sum / Rat(k);
    }
    case Design::Kind::cluster: {
      Rat t = 0, c = 0;
      long mt = 0, mc = 0;
      for (const auto& [name, members] : pop.clusters()) {
        Rat m1 = 0, m0 = 0;
        for (int i : members) {
          m1 += pop.unit(i).y1;
          m0 += pop.unit(i).y0;
        }
        m1 /= Rat(static_cast<long>(members.size()));
        m0 /= Rat(static_cast<long>(members.size()));
        if (z[static_cast<std::size_t>(members[0])] == 1) {
          t += m1;
          ++mt;
        } else {
          c += m0;
          ++mc;
        }
      }
      return t / Rat(mt) - c / Rat(mc);
    }
  }
  return Rat(0);
}

struct NaiveMoments {
  BigInt count = 0;
  Rat mean;
  Rat variance;
};

void naive_recurse(const FinitePopulation& pop, const Design& design,
                   const std::vector<NaiveGroup>& groups, std::size_t gi,
                   std::vector<int>& z, std::vector<Rat>& taus) {
  if (gi == groups.size()) {
    taus.push_back(naive_tau(pop, design, z));
    return;
  }
  const NaiveGroup& g = groups[gi];
  const int m = static_cast<int>(g.slots.size());
  for (unsigned mask = 0; mask < (1u << m); ++mask) {
    if (__builtin_popcount(mask) != g.treat) continue;
    for (int s = 0; s < m; ++s) {
      const int bit = (mask >> s) & 1u;
      for (int i : g.slots[static_cast<std::size_t>(s)]) {
        z[static_cast<std::size_t>(i)] = bit;
      }
    }
    naive_recurse(pop, design, groups, gi + 1, z, taus);
  }
}

NaiveMoments naive_moments(const FinitePopulation& pop, const Design& design) {
  auto groups = naive_groups(pop, design);
  std::vector<int> z(static_cast<std::size_t>(pop.n()), 0);
  std::vector<Rat> taus;
  naive_recurse(pop, design, groups, 0, z, taus);
  NaiveMoments m;
  m.count = static_cast<long>(taus.size());
  m.mean = testutil::ref_mean(taus);
  Rat ss = 0;
  for (const Rat& t : taus) ss += (t - m.mean) * (t - m.mean);
  m.variance = ss / Rat(static_cast<long>(taus.size()));  // divisor N: a pmf
  return m;
}

}  // namespace

TEST_CASE("worked micro-example: variance 5/12, formula matches, gap 5/12") {
  const auto pop = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"});
  const auto rep = randlab::enumerate_moments(pop, Design::complete(2));
  CHECK(rep.support_size == BigInt(6));
  CHECK(rep.exact_mode);
  CHECK(rep.var_tau_hat == Rat(5, 12));
  CHECK(rep.neyman_formula_value == Rat(5, 12));
  CHECK(rep.f_s == Rat(0));
  CHECK(rep.mean_tau_hat == Rat(5, 2));
  REQUIRE(rep.mean_s1sq.has_value());
  CHECK(*rep.mean_s1sq == Rat(5, 3));
  CHECK(*rep.mean_s0sq == Rat(0));
  REQUIRE(rep.mean_vhat_neyman.has_value());
  CHECK(*rep.mean_vhat_neyman == Rat(5, 6));
  REQUIRE(rep.expected_gap.has_value());
  CHECK(*rep.expected_gap == Rat(5, 12));
  CHECK(*rep.mean_vhat_neyman - rep.var_tau_hat == Rat(5, 12));
  CHECK(rep.identities_hold);
  CHECK(rep.failures.empty());
}

TEST_CASE("enumerated moments match an independent reference enumeration") {
  Rng rng(9001);
  for (int trial = 0; trial < 8; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(4));
    const int n1 = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const auto pop = testutil::random_pop(rng, n);
    const auto d = Design::complete(n1);
    CAPTURE(trial);
    const auto rep = randlab::enumerate_moments(pop, d);
    const auto ref = naive_moments(pop, d);
    CHECK(rep.support_size == ref.count);
    CHECK(rep.mean_tau_hat == ref.mean);
    CHECK(rep.var_tau_hat == ref.variance);
    CHECK(rep.identities_hold);
    CHECK(randlab::enumerate_variance(pop, d, BigInt(1000000)) == ref.variance);
  }
}

TEST_CASE("stratified, pair, and cluster enumerations match the reference") {
  Rng rng(424242);
  // Stratified: strata of size 4 and 3.
  {
    std::vector<randlab::Unit> units;
    for (int i = 0; i < 7; ++i) {
      randlab::Unit u;
      u.y1 = testutil::random_rat(rng);
      u.y0 = testutil::random_rat(rng);
      u.stratum = i < 4 ? "a" : "b";
      units.push_back(u);
    }
    const FinitePopulation pop(units);
    const auto d = Design::stratified({{"a", 2}, {"b", 1}});
    const auto rep = randlab::enumerate_moments(pop, d);
    const auto ref = naive_moments(pop, d);
    CHECK(rep.support_size == ref.count);
    CHECK(rep.mean_tau_hat == ref.mean);
    CHECK(rep.var_tau_hat == ref.variance);
    CHECK(rep.identities_hold);
  }
  // Matched pairs.
  {
    std::vector<randlab::Unit> units;
    for (int i = 0; i < 8; ++i) {
      randlab::Unit u;
      u.y1 = testutil::random_rat(rng);
      u.y0 = testutil::random_rat(rng);
      u.stratum = "p" + std::to_string(i / 2);
      units.push_back(u);
    }
    const FinitePopulation pop(units);
    const auto d = Design::matched_pairs();
    const auto rep = randlab::enumerate_moments(pop, d);
    const auto ref = naive_moments(pop, d);
    CHECK(rep.support_size == ref.count);
    CHECK(rep.mean_tau_hat == ref.mean);
    CHECK(rep.var_tau_hat == ref.variance);
    CHECK(rep.identities_hold);
  }
  // Clusters of uneven size; the estimand averages cluster-level effects.
  {
    std::vector<randlab::Unit> units;
    const char* clusters[] = {"u", "v", "v", "w", "w", "w"};
    for (int i = 0; i < 6; ++i) {
      randlab::Unit u;
      u.y1 = testutil::random_rat(rng);
      u.y0 = testutil::random_rat(rng);
      u.cluster = clusters[i];
      units.push_back(u);
    }
    const FinitePopulation pop(units);
    const auto d = Design::cluster(1);
    const auto rep = randlab::enumerate_moments(pop, d);
    const auto ref = naive_moments(pop, d);
    CHECK(rep.support_size == ref.count);
    CHECK(rep.mean_tau_hat == ref.mean);
    CHECK(rep.var_tau_hat == ref.variance);
    CHECK(rep.identities_hold);
    // The estimand is the cluster-mean contrast, not the unit-level one.
    const auto means = randlab::cluster_mean_population(pop);
    CHECK(rep.estimand == randlab::summarize(means).tau_s);
  }
}

TEST_CASE("residual vectors are centered exactly") {
  Rng rng(11);
  const auto pop = testutil::random_pop(rng, 9);
  const auto rv = randlab::residual_vectors(pop);
  Rat su = 0, sw = 0;
  for (const auto& u : rv.u) su += u;
  for (const auto& w : rv.w) sw += w;
  CHECK(su == Rat(0));
  CHECK(sw == Rat(0));
}

TEST_CASE("residual identity holds, and corrupted residuals are caught") {
  Rng rng(77);
  for (int trial = 0; trial < 5; ++trial) {
    const int n = 4 + static_cast<int>(rng.next_below(4));
    const int n1 = 1 + static_cast<int>(rng.next_below(static_cast<std::uint64_t>(n - 1)));
    const auto pop = testutil::random_pop(rng, n);
    const auto d = Design::complete(n1);
    CHECK(randlab::verify_residual_identity(pop, d));
    auto rv = randlab::residual_vectors(pop);
    rv.w[0] += 1;  // break centering; the check must notice
    CHECK(!randlab::verify_residual_identity(pop, d, rv));
  }
}

TEST_CASE("cap refusal names the support size and the cap") {
  const auto m = randlab::SuperPopulationModel::gaussian(0, 0, 1, 1, 0);
  Rng rng(5);
  const auto pop = m.draw(30, rng);
  try {
    randlab::enumerate_moments(pop, Design::complete(15));
    FAIL("expected cap_exceeded");
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::cap_exceeded);
    const std::string msg = e.what();
    CHECK(msg.find("155117520") != std::string::npos);
    CHECK(msg.find("10000000") != std::string::npos);
  }
}

TEST_CASE("enumeration reports are identical at any worker count") {
  // Support 12870 spans several scheduling blocks.
  const auto m = randlab::SuperPopulationModel::two_point(Rat(2), Rat(0),
                                                          Rat(0), Rat(1),
                                                          Rat(1, 2));
  Rng rng(99);
  const auto pop = m.draw(16, rng);
  const auto d = Design::complete(8);

  EnumerateOptions serial;
  serial.cap = BigInt(20000);
  EnumerateOptions parallel = serial;
  parallel.threads = 8;

  const auto a = randlab::enumerate_moments(pop, d, serial);
  const auto b = randlab::enumerate_moments(pop, d, parallel);
  CHECK(a.mean_tau_hat == b.mean_tau_hat);
  CHECK(a.var_tau_hat == b.var_tau_hat);
  CHECK(*a.mean_s1sq == *b.mean_s1sq);
  CHECK(*a.mean_vhat_neyman == *b.mean_vhat_neyman);
  CHECK(a.f_s == b.f_s);
  CHECK(a.identities_hold == b.identities_hold);

  // Approximate mode must also merge deterministically: bit-equal doubles.
  EnumerateOptions approx_serial = serial;
  approx_serial.exact = false;
  EnumerateOptions approx_parallel = parallel;
  approx_parallel.exact = false;
  const auto c = randlab::enumerate_moments(pop, d, approx_serial);
  const auto e = randlab::enumerate_moments(pop, d, approx_parallel);
  CHECK(!c.exact_mode);
  CHECK(randlab::to_double(c.mean_tau_hat) == randlab::to_double(e.mean_tau_hat));
  CHECK(randlab::to_double(c.var_tau_hat) == randlab::to_double(e.var_tau_hat));
  CHECK(c.identities_hold);

  // And the approximate values must sit on top of the exact ones.
  CHECK(std::abs(randlab::to_double(c.var_tau_hat) -
                 randlab::to_double(a.var_tau_hat)) <
        1e-9 * std::max(1.0, std::abs(randlab::to_double(a.var_tau_hat))));
}

TEST_CASE("exact frt on the worked example gives p = 1/3") {
  const auto pop = make_pop({"1", "2", "3", "4"}, {"1", "2", "3", "4"});
  const auto data = randlab::observe(pop, Design::complete(2),
                                     Assignment{{0, 0, 1, 1}});
  const auto r = randlab::frt_exact(data);
  CHECK(r.support_size == BigInt(6));
  CHECK(r.t_observed == Rat(2));
  CHECK(r.n_extreme == BigInt(2));
  CHECK(r.p_value == Rat(1, 3));
}

TEST_CASE("constant outcomes give p = 1") {
  const auto pop = make_pop({"5", "5", "5", "5"}, {"5", "5", "5", "5"});
  const auto data = randlab::observe(pop, Design::complete(2),
                                     Assignment{{1, 1, 0, 0}});
  const auto r = randlab::frt_exact(data);
  CHECK(r.p_value == Rat(1));
}

TEST_CASE("p values are in (0, 1] for every observable assignment") {
  Rng rng(321);
  const auto pop = testutil::random_pop(rng, 6);
  const auto d = Design::complete(3);
  randlab::AssignmentSpace space(d, pop);
  space.scan(0, 20, [&](std::uint64_t, const std::vector<int>& z) {
    const auto data = randlab::observe(pop, d, Assignment{z});
    const auto r = randlab::frt_exact(data);
    CHECK(r.p_value > Rat(0));
    CHECK(r.p_value <= Rat(1));
  });
}

TEST_CASE("monte carlo frt approaches the exact p value") {
  const auto pop = make_pop({"1", "2", "3", "4"}, {"1", "2", "3", "4"});
  const auto data = randlab::observe(pop, Design::complete(2),
                                     Assignment{{0, 0, 1, 1}});
  Rng rng(1000);
  const auto mc = randlab::frt_monte_carlo(data, 20000, rng);
  CHECK(mc.draws == 20000);
  CHECK(mc.p_value > 0.0);
  CHECK(mc.p_value <= 1.0);
  // Within 3 binomial SEs plus the add-one estimator's bias allowance.
  const double exact = 1.0 / 3.0;
  CHECK(std::abs(mc.p_value - exact) < 3 * mc.se + 2.0 / 20000);
  // Determinism in the seed.
  Rng rng2(1000);
  const auto mc2 = randlab::frt_monte_carlo(data, 20000, rng2);
  CHECK(mc.p_value == mc2.p_value);
  CHECK(mc.n_extreme == mc2.n_extreme);
  // Too few draws is a usage error.
  Rng rng3(1);
  CHECK_THROWS_AS(randlab::frt_monte_carlo(data, 99, rng3), Error);
}

TEST_CASE("frt rejects observed data that violates the design margins") {
  randlab::ObservedFile file;
  file.unit_ids = {"a", "b", "c", "d"};
  file.z = {1, 1, 0, 0};
  file.yobs = {Rat(1), Rat(2), Rat(3), Rat(4)};
  auto data = randlab::observed_from_file(file, Design::complete(2));
  data.z = {1, 1, 1, 0};  // corrupt after validation
  CHECK_THROWS_AS(randlab::frt_exact(data), Error);
}

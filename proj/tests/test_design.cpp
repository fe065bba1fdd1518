#include <cmath>
#include <set>
#include <vector>

#include "doctest.h"
#include "randlab/design.hpp"
#include "randlab/error.hpp"
#include "test_support.hpp"

using randlab::Assignment;
using randlab::AssignmentSpace;
using randlab::BigInt;
using randlab::Design;
using randlab::Error;
using randlab::ErrorCode;
using randlab::Rat;
using randlab::Rng;
using testutil::make_pop;

namespace {

std::vector<int> treated_indices(const std::vector<int>& z) {
  std::vector<int> t;
  for (std::size_t i = 0; i < z.size(); ++i) {
    if (z[i] == 1) t.push_back(static_cast<int>(i));
  }
  return t;
}

}  // namespace

TEST_CASE("binomial coefficients are exact") {
  CHECK(randlab::binomial(4, 2) == BigInt(6));
  CHECK(randlab::binomial(30, 15) == BigInt(155117520));
  CHECK(randlab::binomial(5, 0) == BigInt(1));
  CHECK(randlab::binomial(5, 5) == BigInt(1));
  CHECK(randlab::binomial(60, 30) == BigInt("118264581564861424"));
}

TEST_CASE("support sizes per design kind") {
  const auto pop4 = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"});
  CHECK(AssignmentSpace(Design::complete(2), pop4).support_size() == BigInt(6));

  const auto strat7 = make_pop(
      {"1", "2", "3", "4", "5", "6", "7"}, {"0", "0", "0", "0", "0", "0", "0"},
      {"a", "a", "a", "a", "b", "b", "b"});
  const auto d = Design::stratified({{"a", 2}, {"b", 1}});
  CHECK(AssignmentSpace(d, strat7).support_size() == BigInt(18));

  const auto pairs6 = make_pop({"1", "2", "3", "4", "5", "6"},
                               {"0", "0", "0", "0", "0", "0"},
                               {"p", "p", "q", "q", "r", "r"});
  CHECK(AssignmentSpace(Design::matched_pairs(), pairs6).support_size() ==
        BigInt(8));

  const auto clus6 = make_pop({"1", "2", "3", "4", "5", "6"},
                              {"0", "0", "0", "0", "0", "0"}, {},
                              {"c1", "c1", "c2", "c2", "c3", "c3"});
  CHECK(AssignmentSpace(Design::cluster(1), clus6).support_size() == BigInt(3));
}

TEST_CASE("complete enumeration is lexicographic over treated sets") {
  const auto pop = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"});
  AssignmentSpace space(Design::complete(2), pop);
  const std::vector<std::vector<int>> expect = {
      {0, 1}, {0, 2}, {0, 3}, {1, 2}, {1, 3}, {2, 3}};
  for (int r = 0; r < 6; ++r) {
    CHECK(treated_indices(space.at(BigInt(r)).z) == expect[static_cast<std::size_t>(r)]);
  }
  CHECK_THROWS_AS(space.at(BigInt(6)), Error);
  CHECK_THROWS_AS(space.at(BigInt(-1)), Error);
}

TEST_CASE("scan agrees with at() over the whole support") {
  const auto pop = make_pop(
      {"1", "2", "3", "4", "5", "6", "7"}, {"0", "0", "0", "0", "0", "0", "0"},
      {"a", "a", "a", "a", "b", "b", "b"});
  const auto d = Design::stratified({{"a", 2}, {"b", 1}});
  AssignmentSpace space(d, pop);
  const auto total = space.support_size().convert_to<std::uint64_t>();
  std::vector<std::vector<int>> seen;
  space.scan(0, total, [&](std::uint64_t rank, const std::vector<int>& z) {
    CHECK(rank == seen.size());
    seen.push_back(z);
  });
  REQUIRE(seen.size() == total);
  for (std::uint64_t r = 0; r < total; ++r) {
    CHECK(seen[r] == space.at(BigInt(r)).z);
  }
  // A strict subrange streams the same slice.
  std::vector<std::vector<int>> part;
  space.scan(5, 11, [&](std::uint64_t, const std::vector<int>& z) {
    part.push_back(z);
  });
  REQUIRE(part.size() == 6);
  for (std::size_t i = 0; i < part.size(); ++i) CHECK(part[i] == seen[5 + i]);
}

TEST_CASE("pmf is uniform on the support and zero off it") {
  const auto pop = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"});
  AssignmentSpace space(Design::complete(2), pop);
  Rat total = 0;
  space.scan(0, 6, [&](std::uint64_t, const std::vector<int>& z) {
    Assignment a{z};
    CHECK(space.contains(a));
    CHECK(space.pmf(a) == Rat(1, 6));
    total += space.pmf(a);
  });
  CHECK(total == Rat(1));
  CHECK(space.pmf(Assignment{{1, 1, 1, 0}}) == Rat(0));
  CHECK(space.pmf(Assignment{{1, 0, 0, 0}}) == Rat(0));
  CHECK_THROWS_AS(space.pmf(Assignment{{1, 0, 1}}), Error);
}

TEST_CASE("cluster assignments are constant within clusters") {
  const auto pop = make_pop({"1", "2", "3", "4", "5", "6"},
                            {"0", "0", "0", "0", "0", "0"}, {},
                            {"c1", "c1", "c2", "c2", "c3", "c3"});
  AssignmentSpace space(Design::cluster(2), pop);
  CHECK(space.support_size() == BigInt(3));
  space.scan(0, 3, [&](std::uint64_t, const std::vector<int>& z) {
    CHECK(z[0] == z[1]);
    CHECK(z[2] == z[3]);
    CHECK(z[4] == z[5]);
    CHECK(z[0] + z[2] + z[4] == 2);
  });
  // Mixed arms inside one cluster put the assignment off-support.
  CHECK(!space.contains(Assignment{{1, 0, 1, 1, 0, 0}}));
}

TEST_CASE("sampling is uniform over the support") {
  const auto pop = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"});
  AssignmentSpace space(Design::complete(2), pop);
  // Map each sampled assignment back to its rank via the treated pair.
  std::vector<std::vector<int>> table;
  space.scan(0, 6, [&](std::uint64_t, const std::vector<int>& z) {
    table.push_back(z);
  });
  Rng rng(4242);
  const int draws = 60000;
  std::vector<int> counts(6, 0);
  for (int i = 0; i < draws; ++i) {
    const Assignment a = space.sample(rng);
    REQUIRE(space.contains(a));
    for (std::size_t r = 0; r < table.size(); ++r) {
      if (table[r] == a.z) {
        ++counts[r];
        break;
      }
    }
  }
  const double expect = draws / 6.0;
  const double se = std::sqrt(draws * (1.0 / 6.0) * (5.0 / 6.0));
  for (int r = 0; r < 6; ++r) {
    CAPTURE(r);
    CHECK(std::abs(counts[static_cast<std::size_t>(r)] - expect) < 3 * se);
  }
}

TEST_CASE("stratified sampling respects every margin") {
  const auto pop = make_pop(
      {"1", "2", "3", "4", "5", "6", "7"}, {"0", "0", "0", "0", "0", "0", "0"},
      {"a", "a", "a", "a", "b", "b", "b"});
  AssignmentSpace space(Design::stratified({{"a", 2}, {"b", 1}}), pop);
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    const Assignment a = space.sample(rng);
    CHECK(a.z[0] + a.z[1] + a.z[2] + a.z[3] == 2);
    CHECK(a.z[4] + a.z[5] + a.z[6] == 1);
  }
}

TEST_CASE("design validation names the problem") {
  const auto pop4 = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"});
  // Margins must leave both arms nonempty.
  CHECK_THROWS_AS(AssignmentSpace(Design::complete(0), pop4), Error);
  CHECK_THROWS_AS(AssignmentSpace(Design::complete(4), pop4), Error);
  // Stratified design over an unlabeled population.
  CHECK_THROWS_AS(AssignmentSpace(Design::stratified({{"a", 1}}), pop4), Error);
  // Table must cover exactly the population's strata.
  const auto strat = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"},
                              {"a", "a", "b", "b"});
  CHECK_THROWS_AS(AssignmentSpace(Design::stratified({{"a", 1}}), strat), Error);
  CHECK_THROWS_AS(
      AssignmentSpace(Design::stratified({{"a", 1}, {"zz", 1}}), strat), Error);
  // Matched pairs need strata of exactly two units.
  const auto odd = make_pop({"1", "2", "3"}, {"0", "0", "0"}, {"p", "p", "q"});
  CHECK_THROWS_AS(AssignmentSpace(Design::matched_pairs(), odd), Error);
  // Cluster designs need cluster labels.
  CHECK_THROWS_AS(AssignmentSpace(Design::cluster(1), pop4), Error);
  try {
    AssignmentSpace(Design::complete(0), pop4);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::incompatible);
  }
}

TEST_CASE("matched pairs treat exactly one unit per pair") {
  const auto pop = make_pop({"1", "2", "3", "4"}, {"0", "0", "0", "0"},
                            {"p", "p", "q", "q"});
  AssignmentSpace space(Design::matched_pairs(), pop);
  CHECK(space.support_size() == BigInt(4));
  space.scan(0, 4, [&](std::uint64_t, const std::vector<int>& z) {
    CHECK(z[0] + z[1] == 1);
    CHECK(z[2] + z[3] == 1);
  });
}

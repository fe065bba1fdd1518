#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "randlab/population.hpp"
#include "randlab/rational.hpp"
#include "randlab/rng.hpp"

namespace randlab {

// Assignment mechanism. Four kinds, all reducible to independent complete
// randomizations over groups of slots:
//   complete       one group, slots = units, n1 treated.
//   stratified     one group per stratum, n1_h treated in stratum h.
//   matched_pairs  stratified with every stratum of size 2 and n1_h = 1.
//   cluster        one group whose slots are whole clusters, m1 treated;
//                  units inherit their cluster's arm.
struct Design {
  enum class Kind { complete, stratified, matched_pairs, cluster };

  Kind kind = Kind::complete;
  int n1 = 0;                                            // complete
  std::vector<std::pair<std::string, int>> stratum_n1;   // stratified
  int m1 = 0;                                            // cluster

  static Design complete(int n1);
  static Design stratified(std::vector<std::pair<std::string, int>> table);
  static Design matched_pairs();
  static Design cluster(int m1);

  const char* kind_name() const;
};

struct Assignment {
  std::vector<int> z;  // 0/1 per unit
};

// A design resolved against a concrete population: the support becomes
// explicit and enumerable. Assignments are ordered lexicographically by the
// per-group treated-slot subsets, groups in declaration order with the last
// group varying fastest; for complete randomization this is plain
// lexicographic order over treated-index sets.
class AssignmentSpace {
 public:
  AssignmentSpace(const Design& design, const FinitePopulation& pop);

  struct Group {
    std::vector<std::vector<int>> slots;  // unit indices per slot
    int treat = 0;                        // slots assigned to treatment
  };

  int n() const { return n_; }
  const std::vector<Group>& groups() const { return groups_; }
  const BigInt& support_size() const { return support_; }

  Assignment at(const BigInt& rank) const;

  // Streams assignments with rank in [begin, end) in enumeration order; the
  // z vector passed to cb is reused in place. Call only after a cap check
  // keeps end within uint64.
  template <typename Cb>
  void scan(std::uint64_t begin, std::uint64_t end, Cb&& cb) const;

  Assignment sample(Rng& rng) const;

  // Exact probability of z under the design: uniform over the support and
  // zero off it. Throws only on length mismatch.
  Rat pmf(const Assignment& a) const;

  bool contains(const Assignment& a) const;

 private:
  std::vector<int> unrank_group(const Group& g, BigInt rank) const;
  void paint(std::vector<int>& z, const Group& g,
             const std::vector<int>& comb) const;

  int n_ = 0;
  std::vector<Group> groups_;
  std::vector<BigInt> group_counts_;  // C(slots, treat) per group
  BigInt support_;
};

// C(m, k) exactly.
BigInt binomial(int m, int k);

// --- implementation of the templated scanner ---

namespace detail {
// Advances comb to the next k-subset of {0..m-1} in lexicographic order.
// Returns false (and resets to the first subset) on wraparound.
bool next_combination(std::vector<int>& comb, int m);
void first_combination(std::vector<int>& comb, int k);
}  // namespace detail

template <typename Cb>
void AssignmentSpace::scan(std::uint64_t begin, std::uint64_t end,
                           Cb&& cb) const {
  if (begin >= end) return;
  // Seed per-group combinations from the starting rank.
  std::vector<std::vector<int>> combs(groups_.size());
  BigInt rest(begin);
  for (std::size_t g = groups_.size(); g-- > 0;) {
    BigInt digit = rest % group_counts_[g];
    rest /= group_counts_[g];
    combs[g] = unrank_group(groups_[g], digit);
  }
  std::vector<int> z(static_cast<std::size_t>(n_), 0);
  for (std::size_t g = 0; g < groups_.size(); ++g) {
    paint(z, groups_[g], combs[g]);
  }
  for (std::uint64_t rank = begin;;) {
    cb(rank, static_cast<const std::vector<int>&>(z));
    if (++rank >= end) break;
    // Odometer step: last group fastest.
    for (std::size_t g = groups_.size(); g-- > 0;) {
      const int m = static_cast<int>(groups_[g].slots.size());
      bool carried = !detail::next_combination(combs[g], m);
      paint(z, groups_[g], combs[g]);
      if (!carried) break;
    }
  }
}

}  // namespace randlab

#include "randlab/design.hpp"

#include <algorithm>
#include <numeric>

#include "randlab/error.hpp"

namespace randlab {

Design Design::complete(int n1) {
  Design d;
  d.kind = Kind::complete;
  d.n1 = n1;
  return d;
}

Design Design::stratified(std::vector<std::pair<std::string, int>> table) {
  Design d;
  d.kind = Kind::stratified;
  d.stratum_n1 = std::move(table);
  return d;
}

Design Design::matched_pairs() {
  Design d;
  d.kind = Kind::matched_pairs;
  return d;
}

Design Design::cluster(int m1) {
  Design d;
  d.kind = Kind::cluster;
  d.m1 = m1;
  return d;
}

const char* Design::kind_name() const {
  switch (kind) {
    case Kind::complete: return "complete";
    case Kind::stratified: return "stratified";
    case Kind::matched_pairs: return "matched-pairs";
    case Kind::cluster: return "cluster";
  }
  return "?";
}

BigInt binomial(int m, int k) {
  if (k < 0 || k > m) return 0;
  if (k > m - k) k = m - k;
  BigInt r = 1;
  for (int i = 1; i <= k; ++i) {
    r *= m - k + i;
    r /= i;
  }
  return r;
}

namespace detail {

void first_combination(std::vector<int>& comb, int k) {
  comb.resize(static_cast<std::size_t>(k));
  std::iota(comb.begin(), comb.end(), 0);
}

bool next_combination(std::vector<int>& comb, int m) {
  const int k = static_cast<int>(comb.size());
  for (int i = k - 1; i >= 0; --i) {
    if (comb[static_cast<std::size_t>(i)] < m - k + i) {
      int v = ++comb[static_cast<std::size_t>(i)];
      for (int j = i + 1; j < k; ++j) comb[static_cast<std::size_t>(j)] = ++v;
      return true;
    }
  }
  first_combination(comb, k);
  return false;
}

}  // namespace detail

namespace {

void check_group_margin(const std::string& what, int treat, int m) {
  if (treat < 1 || treat > m - 1) {
    fail(ErrorCode::incompatible,
         what + ": treated count " + std::to_string(treat) +
             " must lie in [1, " + std::to_string(m - 1) + "]");
  }
}

}  // namespace

AssignmentSpace::AssignmentSpace(const Design& design,
                                 const FinitePopulation& pop)
    : n_(pop.n()) {
  switch (design.kind) {
    case Design::Kind::complete: {
      check_group_margin("complete design", design.n1, n_);
      Group g;
      g.treat = design.n1;
      for (int i = 0; i < n_; ++i) g.slots.push_back({i});
      groups_.push_back(std::move(g));
      break;
    }
    case Design::Kind::stratified: {
      if (!pop.has_strata()) {
        fail(ErrorCode::incompatible,
             "stratified design requires a stratum column");
      }
      const LabelGroups& strata = pop.strata();
      if (design.stratum_n1.size() != strata.size()) {
        fail(ErrorCode::incompatible,
             "design names " + std::to_string(design.stratum_n1.size()) +
                 " strata, population has " + std::to_string(strata.size()));
      }
      for (const auto& [label, members] : strata) {
        auto it = std::find_if(
            design.stratum_n1.begin(), design.stratum_n1.end(),
            [&](const auto& p) { return p.first == label; });
        if (it == design.stratum_n1.end()) {
          fail(ErrorCode::incompatible,
               "design gives no treated count for stratum '" + label + "'");
        }
        check_group_margin("stratum '" + label + "'", it->second,
                           static_cast<int>(members.size()));
        Group g;
        g.treat = it->second;
        for (int i : members) g.slots.push_back({i});
        groups_.push_back(std::move(g));
      }
      break;
    }
    case Design::Kind::matched_pairs: {
      if (!pop.has_strata()) {
        fail(ErrorCode::incompatible,
             "matched-pairs design requires a stratum column of pair labels");
      }
      for (const auto& [label, members] : pop.strata()) {
        if (members.size() != 2) {
          fail(ErrorCode::incompatible,
               "pair '" + label + "' has " + std::to_string(members.size()) +
                   " units, matched pairs need exactly 2");
        }
        Group g;
        g.treat = 1;
        g.slots = {{members[0]}, {members[1]}};
        groups_.push_back(std::move(g));
      }
      break;
    }
    case Design::Kind::cluster: {
      if (!pop.has_clusters()) {
        fail(ErrorCode::incompatible,
             "cluster design requires a cluster column");
      }
      const LabelGroups& clusters = pop.clusters();
      check_group_margin("cluster design", design.m1,
                         static_cast<int>(clusters.size()));
      Group g;
      g.treat = design.m1;
      for (const auto& [label, members] : clusters) g.slots.push_back(members);
      groups_.push_back(std::move(g));
      break;
    }
  }
  support_ = 1;
  for (const Group& g : groups_) {
    BigInt c = binomial(static_cast<int>(g.slots.size()), g.treat);
    group_counts_.push_back(c);
    support_ *= c;
  }
}

std::vector<int> AssignmentSpace::unrank_group(const Group& g,
                                               BigInt rank) const {
  const int m = static_cast<int>(g.slots.size());
  const int k = g.treat;
  std::vector<int> comb;
  comb.reserve(static_cast<std::size_t>(k));
  int next = 0;
  for (int picked = 0; picked < k; ++picked) {
    for (int candidate = next;; ++candidate) {
      BigInt block = binomial(m - candidate - 1, k - picked - 1);
      if (rank < block) {
        comb.push_back(candidate);
        next = candidate + 1;
        break;
      }
      rank -= block;
    }
  }
  return comb;
}

void AssignmentSpace::paint(std::vector<int>& z, const Group& g,
                            const std::vector<int>& comb) const {
  for (const std::vector<int>& slot : g.slots) {
    for (int i : slot) z[static_cast<std::size_t>(i)] = 0;
  }
  for (int s : comb) {
    for (int i : g.slots[static_cast<std::size_t>(s)]) {
      z[static_cast<std::size_t>(i)] = 1;
    }
  }
}

Assignment AssignmentSpace::at(const BigInt& rank) const {
  if (rank < 0 || rank >= support_) {
    fail(ErrorCode::invalid_argument, "assignment rank out of range");
  }
  std::vector<int> z(static_cast<std::size_t>(n_), 0);
  BigInt rest = rank;
  for (std::size_t g = groups_.size(); g-- > 0;) {
    BigInt digit = rest % group_counts_[g];
    rest /= group_counts_[g];
    paint(z, groups_[g], unrank_group(groups_[g], digit));
  }
  return Assignment{std::move(z)};
}

Assignment AssignmentSpace::sample(Rng& rng) const {
  std::vector<int> z(static_cast<std::size_t>(n_), 0);
  std::vector<int> order;
  for (const Group& g : groups_) {
    const int m = static_cast<int>(g.slots.size());
    order.resize(static_cast<std::size_t>(m));
    std::iota(order.begin(), order.end(), 0);
    // Partial Fisher-Yates: the first `treat` positions become the treated
    // slots.
    for (int i = 0; i < g.treat; ++i) {
      const std::uint64_t span = static_cast<std::uint64_t>(m - i);
      const int j = i + static_cast<int>(rng.next_below(span));
      std::swap(order[static_cast<std::size_t>(i)],
                order[static_cast<std::size_t>(j)]);
      for (int u : g.slots[static_cast<std::size_t>(
               order[static_cast<std::size_t>(i)])]) {
        z[static_cast<std::size_t>(u)] = 1;
      }
    }
  }
  return Assignment{std::move(z)};
}

bool AssignmentSpace::contains(const Assignment& a) const {
  if (static_cast<int>(a.z.size()) != n_) {
    fail(ErrorCode::invalid_argument,
         "assignment length " + std::to_string(a.z.size()) +
             " does not match population size " + std::to_string(n_));
  }
  for (int v : a.z) {
    if (v != 0 && v != 1) return false;
  }
  for (const Group& g : groups_) {
    int treated = 0;
    for (const std::vector<int>& slot : g.slots) {
      const int first = a.z[static_cast<std::size_t>(slot[0])];
      for (int i : slot) {
        if (a.z[static_cast<std::size_t>(i)] != first) return false;
      }
      treated += first;
    }
    if (treated != g.treat) return false;
  }
  return true;
}

Rat AssignmentSpace::pmf(const Assignment& a) const {
  if (!contains(a)) return Rat(0);
  return Rat(1) / Rat(support_);
}

}  // namespace randlab

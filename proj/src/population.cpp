#include "randlab/population.hpp"

#include <algorithm>
#include <cmath>

#include "randlab/error.hpp"

namespace randlab {

namespace {

LabelGroups group_by_label(const std::vector<Unit>& units,
                           std::string Unit::* label, const char* what) {
  LabelGroups groups;
  int labeled = 0;
  for (int i = 0; i < static_cast<int>(units.size()); ++i) {
    const std::string& name = units[static_cast<std::size_t>(i)].*label;
    if (name.empty()) continue;
    ++labeled;
    auto it = std::find_if(groups.begin(), groups.end(),
                           [&](const auto& g) { return g.first == name; });
    if (it == groups.end()) {
      groups.emplace_back(name, std::vector<int>{i});
    } else {
      it->second.push_back(i);
    }
  }
  if (labeled != 0 && labeled != static_cast<int>(units.size())) {
    fail(ErrorCode::invalid_argument,
         std::string("either every unit or no unit may carry a ") + what +
             " label");
  }
  return groups;
}

}  // namespace

FinitePopulation::FinitePopulation(std::vector<Unit> units)
    : units_(std::move(units)) {
  if (units_.size() < 2) {
    fail(ErrorCode::invalid_argument, "population requires n >= 2");
  }
  strata_ = group_by_label(units_, &Unit::stratum, "stratum");
  clusters_ = group_by_label(units_, &Unit::cluster, "cluster");
}

std::vector<double> FinitePopulation::y1_doubles() const {
  std::vector<double> out;
  out.reserve(units_.size());
  for (const Unit& u : units_) out.push_back(to_double(u.y1));
  return out;
}

std::vector<double> FinitePopulation::y0_doubles() const {
  std::vector<double> out;
  out.reserve(units_.size());
  for (const Unit& u : units_) out.push_back(to_double(u.y0));
  return out;
}

Rat rational_mean(const std::vector<Rat>& xs) {
  Rat sum = 0;
  for (const Rat& x : xs) sum += x;
  return sum / Rat(static_cast<int>(xs.size()));
}

Rat rational_variance(const std::vector<Rat>& xs) {
  const int n = static_cast<int>(xs.size());
  if (n < 2) fail(ErrorCode::invalid_argument, "variance requires n >= 2");
  Rat sum = 0;
  Rat sumsq = 0;
  for (const Rat& x : xs) {
    sum += x;
    sumsq += x * x;
  }
  // sum (x - mean)^2 = sum x^2 - (sum x)^2 / n
  return (sumsq - sum * sum / Rat(n)) / Rat(n - 1);
}

PopulationSummary summarize(const FinitePopulation& pop) {
  const int n = pop.n();
  Rat sum1 = 0, sum0 = 0, sq1 = 0, sq0 = 0, cross = 0;
  for (const Unit& u : pop.units()) {
    sum1 += u.y1;
    sum0 += u.y0;
    sq1 += u.y1 * u.y1;
    sq0 += u.y0 * u.y0;
    cross += u.y1 * u.y0;
  }
  const Rat rn(n), rn1(n - 1);
  PopulationSummary s;
  s.n = n;
  s.ybar1 = sum1 / rn;
  s.ybar0 = sum0 / rn;
  s.tau_s = s.ybar1 - s.ybar0;
  s.s1sq = (sq1 - sum1 * sum1 / rn) / rn1;
  s.s0sq = (sq0 - sum0 * sum0 / rn) / rn1;
  s.s10 = (cross - sum1 * sum0 / rn) / rn1;
  s.stausq = s.s1sq + s.s0sq - 2 * s.s10;
  return s;
}

SuperPopulationModel SuperPopulationModel::gaussian(double mean1, double mean0,
                                                    double v1, double v0,
                                                    double rho) {
  if (!std::isfinite(mean1) || !std::isfinite(mean0) || !std::isfinite(v1) ||
      !std::isfinite(v0) || !std::isfinite(rho)) {
    fail(ErrorCode::invalid_argument, "gaussian model parameters must be finite");
  }
  if (v1 < 0.0 || v0 < 0.0) {
    fail(ErrorCode::invalid_argument, "variances must be nonnegative");
  }
  if (rho < -1.0 || rho > 1.0) {
    fail(ErrorCode::invalid_argument, "correlation must lie in [-1, 1]");
  }
  SuperPopulationModel m;
  m.kind_ = Kind::gaussian;
  m.mean1_ = mean1;
  m.mean0_ = mean0;
  m.v1_ = v1;
  m.v0_ = v0;
  m.rho_ = rho;
  return m;
}

SuperPopulationModel SuperPopulationModel::constant_effect(double mean0,
                                                           double v0,
                                                           double tau) {
  if (!std::isfinite(mean0) || !std::isfinite(v0) || !std::isfinite(tau)) {
    fail(ErrorCode::invalid_argument,
         "constant-effect model parameters must be finite");
  }
  if (v0 < 0.0) fail(ErrorCode::invalid_argument, "variance must be nonnegative");
  SuperPopulationModel m;
  m.kind_ = Kind::constant_effect;
  m.mean0_ = mean0;
  m.mean1_ = mean0 + tau;
  m.v0_ = v0;
  m.v1_ = v0;
  m.rho_ = 1.0;
  m.tau_ = tau;
  return m;
}

SuperPopulationModel SuperPopulationModel::two_point(const Rat& y1_a,
                                                     const Rat& y0_a,
                                                     const Rat& y1_b,
                                                     const Rat& y0_b,
                                                     const Rat& prob_a) {
  if (prob_a < 0 || prob_a > 1) {
    fail(ErrorCode::invalid_argument, "two-point masses must be in [0, 1]");
  }
  SuperPopulationModel m;
  m.kind_ = Kind::two_point;
  m.y1_a_ = y1_a;
  m.y0_a_ = y0_a;
  m.y1_b_ = y1_b;
  m.y0_b_ = y0_b;
  m.prob_a_ = prob_a;
  return m;
}

const char* SuperPopulationModel::kind_name() const {
  switch (kind_) {
    case Kind::gaussian: return "gaussian";
    case Kind::constant_effect: return "constant-effect";
    case Kind::two_point: return "two-point";
  }
  return "?";
}

ModelMoments SuperPopulationModel::moments() const {
  ModelMoments mm{};
  switch (kind_) {
    case Kind::gaussian: {
      mm.tau = mean1_ - mean0_;
      mm.v1 = v1_;
      mm.v0 = v0_;
      mm.cov10 = rho_ * std::sqrt(v1_ * v0_);
      mm.vtau = v1_ + v0_ - 2.0 * mm.cov10;
      break;
    }
    case Kind::constant_effect: {
      mm.tau = tau_;
      mm.v1 = v0_;
      mm.v0 = v0_;
      mm.cov10 = v0_;
      mm.vtau = 0.0;
      break;
    }
    case Kind::two_point: {
      // Two-point marginals: Var = p(1-p) (a - b)^2, computed exactly.
      const Rat p = prob_a_;
      const Rat q = 1 - p;
      const Rat pq = p * q;
      const Rat d1 = y1_a_ - y1_b_;
      const Rat d0 = y0_a_ - y0_b_;
      mm.tau = to_double(p * (y1_a_ - y0_a_) + q * (y1_b_ - y0_b_));
      mm.v1 = to_double(pq * d1 * d1);
      mm.v0 = to_double(pq * d0 * d0);
      mm.cov10 = to_double(pq * d1 * d0);
      mm.vtau = to_double(pq * (d1 - d0) * (d1 - d0));
      break;
    }
  }
  return mm;
}

FinitePopulation SuperPopulationModel::draw(int n, Rng& rng) const {
  if (n < 2) fail(ErrorCode::invalid_argument, "draw requires n >= 2");
  std::vector<Unit> units;
  units.reserve(static_cast<std::size_t>(n));
  switch (kind_) {
    case Kind::gaussian: {
      const double s1 = std::sqrt(v1_);
      const double s0 = std::sqrt(v0_);
      const double resid = std::sqrt(std::max(0.0, 1.0 - rho_ * rho_));
      for (int i = 0; i < n; ++i) {
        const double g = rng.next_gaussian();
        const double h = rng.next_gaussian();
        const double y1 = mean1_ + s1 * g;
        const double y0 = mean0_ + s0 * (rho_ * g + resid * h);
        units.push_back({rational_from_double(y1), rational_from_double(y0), "", ""});
      }
      break;
    }
    case Kind::constant_effect: {
      const double s0 = std::sqrt(v0_);
      const Rat tau = rational_from_double(tau_);
      for (int i = 0; i < n; ++i) {
        const Rat y0 = rational_from_double(mean0_ + s0 * rng.next_gaussian());
        units.push_back({y0 + tau, y0, "", ""});
      }
      break;
    }
    case Kind::two_point: {
      for (int i = 0; i < n; ++i) {
        const Rat u = rational_from_double(rng.next_unit());
        if (u < prob_a_) {
          units.push_back({y1_a_, y0_a_, "", ""});
        } else {
          units.push_back({y1_b_, y0_b_, "", ""});
        }
      }
      break;
    }
  }
  return FinitePopulation(std::move(units));
}

std::vector<std::pair<std::string, std::string>>
SuperPopulationModel::parameters() const {
  std::vector<std::pair<std::string, std::string>> out;
  auto num = [](double x) { return roundtrip_string(rational_from_double(x)); };
  switch (kind_) {
    case Kind::gaussian:
      out = {{"mean1", num(mean1_)}, {"mean0", num(mean0_)}, {"v1", num(v1_)},
             {"v0", num(v0_)},       {"rho", num(rho_)}};
      break;
    case Kind::constant_effect:
      out = {{"mean0", num(mean0_)}, {"v0", num(v0_)}, {"tau", num(tau_)}};
      break;
    case Kind::two_point:
      out = {{"y1_a", roundtrip_string(y1_a_)}, {"y0_a", roundtrip_string(y0_a_)},
             {"y1_b", roundtrip_string(y1_b_)}, {"y0_b", roundtrip_string(y0_b_)},
             {"p_a", roundtrip_string(prob_a_)}};
      break;
  }
  return out;
}

FinitePopulation draw_population(const SuperPopulationModel& model, int n,
                                 Rng& rng) {
  return model.draw(n, rng);
}

}  // namespace randlab

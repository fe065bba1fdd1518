#pragma once

#include <string>
#include <utility>
#include <vector>

#include "randlab/rational.hpp"
#include "randlab/rng.hpp"

namespace randlab {

// One experimental unit with both potential outcomes. Only one of y1/y0 is
// ever observed in an experiment; holding both is what makes exhaustive
// verification possible.
struct Unit {
  Rat y1;
  Rat y0;
  std::string stratum;  // empty = unlabeled
  std::string cluster;  // empty = unlabeled
};

using LabelGroups = std::vector<std::pair<std::string, std::vector<int>>>;

// Fixed, ordered set of units. Immutable after construction; summaries and
// enumeration results do not depend on the unit order.
class FinitePopulation {
 public:
  explicit FinitePopulation(std::vector<Unit> units);

  int n() const { return static_cast<int>(units_.size()); }
  const Unit& unit(int i) const { return units_[static_cast<std::size_t>(i)]; }
  const std::vector<Unit>& units() const { return units_; }

  bool has_strata() const { return !strata_.empty(); }
  bool has_clusters() const { return !clusters_.empty(); }

  // label -> member indices, labels in first-appearance order
  const LabelGroups& strata() const { return strata_; }
  const LabelGroups& clusters() const { return clusters_; }

  std::vector<double> y1_doubles() const;
  std::vector<double> y0_doubles() const;

 private:
  std::vector<Unit> units_;
  LabelGroups strata_;
  LabelGroups clusters_;
};

// The seven finite-population functionals, divisor n-1 throughout.
struct PopulationSummary {
  int n = 0;
  Rat ybar1;
  Rat ybar0;
  Rat tau_s;    // ybar1 - ybar0
  Rat s1sq;     // variance of y1
  Rat s0sq;     // variance of y0
  Rat stausq;   // variance of y1 - y0
  Rat s10;      // covariance of (y1, y0)
};

PopulationSummary summarize(const FinitePopulation& pop);

// mean/variance of a sample, divisor n-1; exact.
Rat rational_mean(const std::vector<Rat>& xs);
Rat rational_variance(const std::vector<Rat>& xs);

struct ModelMoments {
  double tau;
  double v1;
  double v0;
  double vtau;
  double cov10;
};

// IID generators with closed-form moments. Three kinds:
//
//   gaussian        (Y(1), Y(0)) bivariate normal with means, variances
//                   v1/v0 and correlation rho. Draw order per unit: g, h
//                   standard normals; y1 = mean1 + sqrt(v1) g and
//                   y0 = mean0 + sqrt(v0) (rho g + sqrt(1-rho^2) h). Two
//                   uniforms are consumed per unit for every rho.
//   constant-effect Y(0) ~ N(mean0, v0), Y(1) = Y(0) + tau computed in
//                   exact arithmetic, so y1 - y0 = tau holds literally.
//                   One uniform per unit.
//   two-point       (y1_a, y0_a) with probability p_a, else (y1_b, y0_b).
//                   One uniform per unit.
class SuperPopulationModel {
 public:
  enum class Kind { gaussian, constant_effect, two_point };

  static SuperPopulationModel gaussian(double mean1, double mean0, double v1,
                                       double v0, double rho);
  static SuperPopulationModel constant_effect(double mean0, double v0,
                                              double tau);
  static SuperPopulationModel two_point(const Rat& y1_a, const Rat& y0_a,
                                        const Rat& y1_b, const Rat& y0_b,
                                        const Rat& prob_a);

  Kind kind() const { return kind_; }
  const char* kind_name() const;

  ModelMoments moments() const;

  FinitePopulation draw(int n, Rng& rng) const;

  // Parameter echo for reports, key -> decimal string.
  std::vector<std::pair<std::string, std::string>> parameters() const;

 private:
  SuperPopulationModel() = default;

  Kind kind_ = Kind::gaussian;
  // gaussian / constant-effect parameters
  double mean1_ = 0.0;
  double mean0_ = 0.0;
  double v1_ = 1.0;
  double v0_ = 1.0;
  double rho_ = 0.0;
  double tau_ = 0.0;
  // two-point parameters
  Rat y1_a_, y0_a_, y1_b_, y0_b_, prob_a_;
};

FinitePopulation draw_population(const SuperPopulationModel& model, int n,
                                 Rng& rng);

}  // namespace randlab

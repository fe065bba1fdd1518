#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "randlab/design.hpp"
#include "randlab/estimator.hpp"
#include "randlab/oracle.hpp"
#include "randlab/population.hpp"
#include "randlab/study.hpp"

namespace randlab {

// Insertion-ordered JSON keeps report layouts stable across runs, which the
// byte-identity guarantees depend on.
using Json = nlohmann::ordered_json;

// Shortest round-trip decimal form; deterministic across worker counts.
std::string double_string(double v);

// Exact value: `key` holds the double approximation, `key_exact` the exact
// decimal-or-fraction string.
void put_rat(Json& j, const std::string& key, const Rat& v);
// As above plus `key_fraction`, the numerator/denominator form; used where
// reports promise both spellings.
void put_rat_full(Json& j, const std::string& key, const Rat& v);
void put_opt_rat_full(Json& j, const std::string& key,
                      const std::optional<Rat>& v);
void put_opt(Json& j, const std::string& key, const std::optional<double>& v);
void put_big(Json& j, const std::string& key, const BigInt& v);

Json design_json(const Design& d);
Json model_json(const SuperPopulationModel& m);

Json summary_json(const PopulationSummary& s);
Json estimate_json(const EstimateReport& r);
Json enumeration_json(const EnumerationReport& r);
Json exact_frt_json(const ExactFrt& r);
Json mc_frt_json(const MonteCarloFrt& r);
Json study_json(const StudyReport& r);

// One header row and one value row from a flat-ish object; nested objects
// become dotted column names, nulls empty cells, arrays are skipped.
std::string flat_csv(const Json& j);

std::string table_csv(const std::vector<std::string>& columns,
                      const std::vector<std::vector<double>>& rows);

}  // namespace randlab

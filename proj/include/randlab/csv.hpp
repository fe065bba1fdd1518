#pragma once

#include <iosfwd>
#include <string>
#include <vector>

#include "randlab/population.hpp"

namespace randlab {

// Population files: header `unit_id,y1,y0` with optional `stratum` and
// `cluster` columns in any order after the first three. Values are decimal
// numerals or "p/q" fractions and are kept exact. Write-then-read returns
// an identical population.
struct PopulationFile {
  std::vector<std::string> unit_ids;  // unique, row order
  FinitePopulation population;
};

PopulationFile read_population_csv(std::istream& in, const std::string& name);
PopulationFile read_population_csv_file(const std::string& path);
std::string write_population_csv(const PopulationFile& pf);

// Observed-experiment files: header `unit_id,z,yobs` with the same optional
// label columns. z must be 0 or 1.
struct ObservedFile {
  std::vector<std::string> unit_ids;
  std::vector<int> z;
  std::vector<Rat> yobs;
  std::vector<std::string> stratum;  // empty when absent
  std::vector<std::string> cluster;
};

ObservedFile read_observed_csv(std::istream& in, const std::string& name);
ObservedFile read_observed_csv_file(const std::string& path);

// Marginal files: header `value`, one numeral per row.
std::vector<Rat> read_marginal_csv(std::istream& in, const std::string& name);
std::vector<Rat> read_marginal_csv_file(const std::string& path);

}  // namespace randlab

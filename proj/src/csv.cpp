#include "randlab/csv.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <sstream>
#include <unordered_set>

#include "randlab/error.hpp"

namespace randlab {

namespace {

[[noreturn]] void fail_at(const std::string& name, int line,
                          const std::string& msg) {
  fail(ErrorCode::parse, name + ":" + std::to_string(line) + ": " + msg);
}

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::vector<std::string> split_row(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::stringstream ss(line);
  while (std::getline(ss, cell, ',')) out.push_back(trim(cell));
  if (!line.empty() && line.back() == ',') out.push_back("");
  return out;
}

Rat parse_cell(const std::string& name, int line, const std::string& col,
               const std::string& cell) {
  try {
    return parse_rational(cell);
  } catch (const Error& e) {
    fail_at(name, line, "column '" + col + "': " + e.what());
  }
}

struct Header {
  // required column -> position; optional columns -1 when absent
  std::vector<int> required;
  int stratum = -1;
  int cluster = -1;
  std::size_t width = 0;
};

Header read_header(std::istream& in, const std::string& name,
                   const std::vector<std::string>& required_names) {
  std::string line;
  if (!std::getline(in, line)) fail_at(name, 1, "empty file");
  std::vector<std::string> cols = split_row(line);
  Header h;
  h.width = cols.size();
  for (const std::string& want : required_names) {
    auto it = std::find(cols.begin(), cols.end(), want);
    if (it == cols.end()) {
      fail_at(name, 1, "missing required column '" + want + "'");
    }
    h.required.push_back(static_cast<int>(it - cols.begin()));
  }
  for (int i = 0; i < static_cast<int>(cols.size()); ++i) {
    const std::string& c = cols[static_cast<std::size_t>(i)];
    bool known = std::find(required_names.begin(), required_names.end(), c) !=
                 required_names.end();
    if (known) continue;
    if (c == "stratum") {
      h.stratum = i;
    } else if (c == "cluster") {
      h.cluster = i;
    } else {
      fail_at(name, 1, "unknown column '" + c + "'");
    }
  }
  return h;
}

// Calls row_cb(line_number, cells) for every non-blank data row.
template <typename Cb>
void read_rows(std::istream& in, const std::string& name, const Header& h,
               Cb row_cb) {
  std::string line;
  int lineno = 1;
  int rows = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    std::vector<std::string> cells = split_row(line);
    if (cells.size() != h.width) {
      fail_at(name, lineno,
              "expected " + std::to_string(h.width) + " cells, found " +
                  std::to_string(cells.size()));
    }
    row_cb(lineno, cells);
    ++rows;
  }
  if (rows == 0) fail_at(name, lineno, "no data rows");
}

void check_unique_ids(const std::vector<std::string>& ids,
                      const std::string& name) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < ids.size(); ++i) {
    if (!seen.insert(ids[i]).second) {
      fail(ErrorCode::parse,
           name + ": duplicate unit_id '" + ids[i] + "'");
    }
  }
}

}  // namespace

PopulationFile read_population_csv(std::istream& in, const std::string& name) {
  Header h = read_header(in, name, {"unit_id", "y1", "y0"});
  std::vector<std::string> ids;
  std::vector<Unit> units;
  read_rows(in, name, h, [&](int lineno, const std::vector<std::string>& c) {
    auto cell = [&](int i) { return c[static_cast<std::size_t>(i)]; };
    const std::string id = cell(h.required[0]);
    if (id.empty()) fail_at(name, lineno, "empty unit_id");
    Unit u;
    u.y1 = parse_cell(name, lineno, "y1", cell(h.required[1]));
    u.y0 = parse_cell(name, lineno, "y0", cell(h.required[2]));
    if (h.stratum >= 0) {
      u.stratum = cell(h.stratum);
      if (u.stratum.empty()) fail_at(name, lineno, "empty stratum label");
    }
    if (h.cluster >= 0) {
      u.cluster = cell(h.cluster);
      if (u.cluster.empty()) fail_at(name, lineno, "empty cluster label");
    }
    ids.push_back(id);
    units.push_back(std::move(u));
  });
  check_unique_ids(ids, name);
  return PopulationFile{std::move(ids), FinitePopulation(std::move(units))};
}

PopulationFile read_population_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse, "cannot open '" + path + "'");
  return read_population_csv(in, path);
}

std::string write_population_csv(const PopulationFile& pf) {
  const FinitePopulation& pop = pf.population;
  const bool strata = pop.has_strata();
  const bool clusters = pop.has_clusters();
  std::string out = "unit_id,y1,y0";
  if (strata) out += ",stratum";
  if (clusters) out += ",cluster";
  out += "\n";
  for (int i = 0; i < pop.n(); ++i) {
    const Unit& u = pop.unit(i);
    out += pf.unit_ids[static_cast<std::size_t>(i)];
    out += "," + roundtrip_string(u.y1);
    out += "," + roundtrip_string(u.y0);
    if (strata) out += "," + u.stratum;
    if (clusters) out += "," + u.cluster;
    out += "\n";
  }
  return out;
}

ObservedFile read_observed_csv(std::istream& in, const std::string& name) {
  Header h = read_header(in, name, {"unit_id", "z", "yobs"});
  ObservedFile f;
  read_rows(in, name, h, [&](int lineno, const std::vector<std::string>& c) {
    auto cell = [&](int i) { return c[static_cast<std::size_t>(i)]; };
    const std::string id = cell(h.required[0]);
    if (id.empty()) fail_at(name, lineno, "empty unit_id");
    const std::string zs = cell(h.required[1]);
    if (zs != "0" && zs != "1") {
      fail_at(name, lineno, "z must be 0 or 1, found '" + zs + "'");
    }
    f.unit_ids.push_back(id);
    f.z.push_back(zs == "1" ? 1 : 0);
    f.yobs.push_back(parse_cell(name, lineno, "yobs", cell(h.required[2])));
    if (h.stratum >= 0) {
      f.stratum.push_back(cell(h.stratum));
      if (f.stratum.back().empty()) fail_at(name, lineno, "empty stratum label");
    }
    if (h.cluster >= 0) {
      f.cluster.push_back(cell(h.cluster));
      if (f.cluster.back().empty()) fail_at(name, lineno, "empty cluster label");
    }
  });
  check_unique_ids(f.unit_ids, name);
  return f;
}

ObservedFile read_observed_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse, "cannot open '" + path + "'");
  return read_observed_csv(in, path);
}

std::vector<Rat> read_marginal_csv(std::istream& in, const std::string& name) {
  Header h = read_header(in, name, {"value"});
  std::vector<Rat> out;
  read_rows(in, name, h, [&](int lineno, const std::vector<std::string>& c) {
    out.push_back(parse_cell(name, lineno, "value",
                             c[static_cast<std::size_t>(h.required[0])]));
  });
  return out;
}

std::vector<Rat> read_marginal_csv_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::parse, "cannot open '" + path + "'");
  return read_marginal_csv(in, path);
}

}  // namespace randlab

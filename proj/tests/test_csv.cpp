#include <sstream>
#include <string>

#include "doctest.h"
#include "randlab/csv.hpp"
#include "randlab/error.hpp"

using randlab::Error;
using randlab::ErrorCode;
using randlab::Rat;

namespace {

randlab::PopulationFile read_pop(const std::string& text) {
  std::istringstream in(text);
  return randlab::read_population_csv(in, "test.csv");
}

randlab::ObservedFile read_obs(const std::string& text) {
  std::istringstream in(text);
  return randlab::read_observed_csv(in, "test.csv");
}

std::string parse_error_message(const std::string& text) {
  try {
    read_pop(text);
  } catch (const Error& e) {
    CHECK(e.code() == ErrorCode::parse);
    return e.what();
  }
  FAIL("expected a parse error");
  return "";
}

}  // namespace

TEST_CASE("population csv reads exact values") {
  const auto pf = read_pop("unit_id,y1,y0\na,1,0\nb,2.5,1/3\n");
  CHECK(pf.unit_ids == std::vector<std::string>{"a", "b"});
  CHECK(pf.population.unit(0).y1 == Rat(1));
  CHECK(pf.population.unit(1).y1 == Rat(5, 2));
  CHECK(pf.population.unit(1).y0 == Rat(1, 3));
  CHECK(!pf.population.has_strata());
}

TEST_CASE("optional label columns are recognized in any order") {
  const auto pf = read_pop(
      "unit_id,cluster,y1,y0,stratum\n"
      "a,c1,1,0,s1\n"
      "b,c1,2,0,s1\n"
      "c,c2,3,0,s2\n"
      "d,c2,4,0,s2\n");
  CHECK(pf.population.has_strata());
  CHECK(pf.population.has_clusters());
  CHECK(pf.population.strata().size() == 2);
  CHECK(pf.population.clusters().size() == 2);
}

TEST_CASE("write then read reproduces the population exactly") {
  const auto pf = read_pop(
      "unit_id,y1,y0,stratum\na,1/3,0.1,g\nb,-2.5,5/7,g\nc,0,4,h\nd,1,1,h\n");
  const std::string text = randlab::write_population_csv(pf);
  std::istringstream in(text);
  const auto back = randlab::read_population_csv(in, "round.csv");
  REQUIRE(back.population.n() == pf.population.n());
  CHECK(back.unit_ids == pf.unit_ids);
  for (int i = 0; i < pf.population.n(); ++i) {
    CHECK(back.population.unit(i).y1 == pf.population.unit(i).y1);
    CHECK(back.population.unit(i).y0 == pf.population.unit(i).y0);
    CHECK(back.population.unit(i).stratum == pf.population.unit(i).stratum);
  }
}

TEST_CASE("parse errors carry the file name and line number") {
  const std::string msg = parse_error_message("unit_id,y1,y0\na,1,0\nb,oops,0\n");
  CHECK(msg.find("test.csv:3") != std::string::npos);
  CHECK(msg.find("oops") != std::string::npos);
}

TEST_CASE("NaN and infinity tokens are rejected, naming the row") {
  const std::string msg = parse_error_message("unit_id,y1,y0\na,nan,0\nb,1,0\n");
  CHECK(msg.find(":2") != std::string::npos);
  CHECK_THROWS_AS(read_pop("unit_id,y1,y0\na,1,inf\nb,1,0\n"), Error);
}

TEST_CASE("structural problems are rejected") {
  // missing required column
  CHECK_THROWS_AS(read_pop("unit_id,y1\na,1\nb,2\n"), Error);
  // unknown column
  CHECK_THROWS_AS(read_pop("unit_id,y1,y0,extra\na,1,0,x\nb,2,0,x\n"), Error);
  // ragged row
  CHECK_THROWS_AS(read_pop("unit_id,y1,y0\na,1\nb,2,0\n"), Error);
  // duplicate ids
  CHECK_THROWS_AS(read_pop("unit_id,y1,y0\na,1,0\na,2,0\n"), Error);
  // empty unit id
  CHECK_THROWS_AS(read_pop("unit_id,y1,y0\n,1,0\nb,2,0\n"), Error);
  // no data rows
  CHECK_THROWS_AS(read_pop("unit_id,y1,y0\n"), Error);
  // empty stratum cell when the column is present
  CHECK_THROWS_AS(read_pop("unit_id,y1,y0,stratum\na,1,0,\nb,2,0,g\n"), Error);
}

TEST_CASE("blank lines are skipped") {
  const auto pf = read_pop("unit_id,y1,y0\n\na,1,0\n\nb,2,0\n\n");
  CHECK(pf.population.n() == 2);
}

TEST_CASE("observed csv reads z and yobs, validating z") {
  const auto of = read_obs("unit_id,z,yobs\na,0,1\nb,1,2.5\n");
  CHECK(of.z == std::vector<int>{0, 1});
  CHECK(of.yobs[1] == Rat(5, 2));
  CHECK_THROWS_AS(read_obs("unit_id,z,yobs\na,2,1\nb,1,2\n"), Error);
  CHECK_THROWS_AS(read_obs("unit_id,z,yobs\na,true,1\nb,1,2\n"), Error);
}

TEST_CASE("observed csv carries optional labels") {
  const auto of = read_obs(
      "unit_id,z,yobs,stratum\na,0,1,g\nb,1,2,g\nc,0,3,h\nd,1,4,h\n");
  CHECK(of.stratum == std::vector<std::string>{"g", "g", "h", "h"});
  CHECK(of.cluster.empty());
}

TEST_CASE("marginal csv reads a single value column") {
  std::istringstream in("value\n0\n10\n1/2\n");
  const auto xs = randlab::read_marginal_csv(in, "m.csv");
  REQUIRE(xs.size() == 3);
  CHECK(xs[2] == Rat(1, 2));
  std::istringstream bad("wrong\n1\n");
  CHECK_THROWS_AS(randlab::read_marginal_csv(bad, "m.csv"), Error);
}

TEST_CASE("missing file errors mention the path") {
  try {
    randlab::read_population_csv_file("/nonexistent/path.csv");
    FAIL("expected an error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("/nonexistent/path.csv") !=
          std::string::npos);
  }
}

// Copyright 2026 The photonic-vqc Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.


#include <catch2/catch_amalgamated.hpp>

#include <filesystem>

#include "photonic/io.hpp"
#include "test_support.hpp"

using namespace photonic;
using io::Json;
using Catch::Approx;

TEST_CASE("strict object reading", "[io]") {
  const Json j = Json::parse(R"({"a": 1, "b": "x", "c": [1.5, 2], "d": null, "u": 3})");
  io::ObjectReader r(j, "cfg");
  CHECK(r.get("a", 0) == 1);
  CHECK(r.get<std::string>("b", "") == "x");
  CHECK(r.get("c", std::vector<double>{}) == std::vector<double>{1.5, 2.0});
  CHECK(std::isnan(r.get("d", 0.0)));
  CHECK(r.get("missing", 7) == 7);
  CHECK_THROWS_AS(r.finish(), ValidationError);  // "u" never read
  CHECK(r.get("u", 0) == 3);
  CHECK_NOTHROW(r.finish());

  io::ObjectReader t(j, "cfg");
  CHECK_THROWS_AS(t.get<std::string>("a", ""), ValidationError);
  CHECK_THROWS_AS(t.get<std::uint64_t>("c", 0), ValidationError);
  CHECK_THROWS_AS(t.require<int>("nope"), ValidationError);
  CHECK_THROWS_AS(io::ObjectReader(Json::array(), "x"), ValidationError);

  const Json neg = Json::parse(R"({"n": -1, "f": 1.5})");
  io::ObjectReader rn(neg, "n");
  CHECK_THROWS_AS(rn.get<std::size_t>("n", 0), ValidationError);
  CHECK_THROWS_AS(rn.get<int>("f", 0), ValidationError);
}

TEST_CASE("schema version is enforced", "[io]") {
  const Json ok = Json::parse(R"({"schema_version": 1})");
  io::ObjectReader r(ok, "x");
  CHECK_NOTHROW(io::check_schema(r));
  const Json bad = Json::parse(R"({"schema_version": 2})");
  io::ObjectReader rb(bad, "x");
  CHECK_THROWS_AS(io::check_schema(rb), ValidationError);
  CHECK_THROWS_AS(io::parse_json("{not json", "t"), ValidationError);
}

TEST_CASE("matrix json round trip", "[io]") {
  CMatrix m(2, 3);
  m << Complex(1, -2), 0.5, Complex(0, 1e-17), -3, Complex(1.0 / 3.0, 2.0 / 7.0), 1e300;
  const Json j = io::matrix_to_json(m, "test");
  CHECK(j["rows"] == 2);
  CHECK(j["cols"] == 3);
  const CMatrix back = io::matrix_from_json(j);
  CHECK(back == m);  // shortest round-trip representation, bit exact
  CHECK(io::matrix_from_json(io::parse_json(io::dump(j), "dump")) == m);

  Json wrong = j;
  wrong["rows"] = 3;
  CHECK_THROWS_AS(io::matrix_from_json(wrong), DimensionError);
  Json extra = j;
  extra["note"] = "x";
  CHECK_THROWS_AS(io::matrix_from_json(extra), ValidationError);
  Json nan = j;
  nan["entries"][0][0] = {nullptr, 0.0};
  CHECK_THROWS_AS(io::matrix_from_json(nan), ValidationError);
  Json bad_pair = j;
  bad_pair["entries"][0][0] = {1.0};
  CHECK_THROWS_AS(io::matrix_from_json(bad_pair), ValidationError);
}

TEST_CASE("fixture matrix loads", "[io]") {
  const CMatrix w = io::load_matrix(testing::fixture_path("trained_cnot_w.json"));
  CHECK((w - testing::trained_cnot_w()).norm() == 0.0);
  CHECK_THROWS_AS(io::load_matrix("/nonexistent/m.json"), io::IoError);
}

TEST_CASE("mesh json round trip uses 1-based pairs", "[io]") {
  const MeshParams mesh = reck_decompose(ModeTransform(testing::cnot_matrix()));
  REQUIRE(!mesh.units.empty());
  const Json j = io::mesh_to_json(mesh);
  CHECK(j["units"][0]["pair"][0].get<int>() == static_cast<int>(mesh.units[0].mode) + 1);
  CHECK(io::mesh_from_json(j, "mesh") == mesh);
  Json bad = j;
  bad["units"][0]["pair"] = {1, 3};
  CHECK_THROWS_AS(io::mesh_from_json(bad, "mesh"), ValidationError);
}

TEST_CASE("csv escaping and numbers", "[io]") {
  io::CsvTable t({"name", "value"});
  io::CsvTable::Row a;
  a << "plain" << 0.1;
  t.add(a);
  io::CsvTable::Row b;
  b << "comma, \"quoted\"\nline" << std::numeric_limits<double>::quiet_NaN();
  t.add(b);
  io::CsvTable::Row c;
  c << "" << -std::numeric_limits<double>::infinity();
  t.add(c);
  const std::string s = t.str();
  CHECK(s.substr(0, 12) == "name,value\r\n");
  CHECK(s.find("\"comma, \"\"quoted\"\"\nline\",nan\r\n") != std::string::npos);
  const auto rows = io::parse_csv(s);
  REQUIRE(rows.size() == 4);
  CHECK(rows[1] == std::vector<std::string>{"plain", "0.1"});
  CHECK(rows[2][0] == "comma, \"quoted\"\nline");
  CHECK(rows[3] == std::vector<std::string>{"", "-inf"});
  CHECK(std::stod(io::format_number(1.0 / 3.0)) == 1.0 / 3.0);

  io::CsvTable::Row short_row;
  short_row << "x";
  CHECK_THROWS_AS(t.add(short_row), DimensionError);
  CHECK_THROWS_AS(io::parse_csv("\"open"), ValidationError);
}

TEST_CASE("search records round trip", "[io]") {
  const CostFunction sphere = [](const Params& x, std::uint64_t) {
    Evaluation e;
    for (double v : x) e.cost += v * v;
    return e;
  };
  SearchConfig c;
  c.ga.population_size = 8;
  c.ga.generations = 3;
  c.polish.max_evaluations = 50;
  c.max_evaluations = 300;
  const auto space = SearchSpace::box(Params(3, -1.0), Params(3, 1.0));
  const SearchResult s = ga_polish_search(sphere, space, c);
  const Json j = io::search_to_json(s);
  const SearchResult back = io::search_from_json(io::parse_json(io::dump(j), "s"), "s");
  CHECK(io::dump(io::search_to_json(back)) == io::dump(j));
  CHECK(back.best_params == s.best_params);
  CHECK(back.rounds.size() == s.rounds.size());
  // Wall time is not part of the record.
  CHECK(io::dump(j).find("wall") == std::string::npos);

  const Json cj = io::search_config_to_json(c);
  const SearchConfig cb = io::search_config_from_json(cj, SearchConfig{}, "c");
  CHECK(io::search_config_to_json(cb) == cj);
  Json bad = cj;
  bad["ga"]["population_size"] = 1;
  CHECK_THROWS_AS(io::search_config_from_json(bad, SearchConfig{}, "c"), ValidationError);

  const auto csv = io::parse_csv(io::history_csv(s.history).str());
  CHECK(csv.size() == s.history.history.size() + 1);
  CHECK(csv[0][0] == "generation");
}

TEST_CASE("write_file creates directories", "[io]") {
  const auto dir = std::filesystem::temp_directory_path() / "photonic_test_io";
  std::filesystem::remove_all(dir);
  io::write_file(dir / "a" / "b.txt", "hello");
  CHECK(io::read_file(dir / "a" / "b.txt") == "hello");
  std::filesystem::remove_all(dir);
}

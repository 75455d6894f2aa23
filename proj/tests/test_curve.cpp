#include <catch2/catch_amalgamated.hpp>

#include <seqsim/curve.hpp>

using namespace seqsim;
using nlohmann::json;

namespace {

json minimal_doc() {
  return json{{"label", "t"},
              {"points", json::array({{0.0, 1.0}, {6.0, 0.8}})},
              {"risk_table", json::array({{0.0, 100}, {6.0, 78}})}};
}

} // namespace

TEST_CASE("minimal valid curve loads", "[curve]") {
  auto c = load_curve(minimal_doc());
  REQUIRE(c.points.size() == 2);
  REQUIRE(c.points[0].time == 0.0);
  REQUIRE(c.points[1].survival == 0.8);
  REQUIRE(c.risk_table.size() == 2);
  REQUIRE(c.risk_table[1].n_at_risk == 78);
  REQUIRE_FALSE(c.total_events.has_value());
}

TEST_CASE("load_curve is pure", "[curve]") {
  auto doc = minimal_doc();
  auto a = load_curve(doc);
  auto b = load_curve(doc);
  REQUIRE(a.points.size() == b.points.size());
  for (std::size_t i = 0; i < a.points.size(); ++i) {
    REQUIRE(a.points[i].time == b.points[i].time);
    REQUIRE(a.points[i].survival == b.points[i].survival);
  }
}

TEST_CASE("survival monotonicity violation names rule and index", "[curve]") {
  auto doc = minimal_doc();
  doc["points"] = json::array({{0.0, 1.0}, {3.0, 0.8}, {6.0, 0.9}});
  REQUIRE_THROWS_MATCHES(load_curve(doc), ValidationError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                             "survival non-increasing violated at index 2")));
}

TEST_CASE("risk table count violation is named", "[curve]") {
  auto doc = minimal_doc();
  doc["risk_table"] = json::array({{0.0, 100}, {6.0, 120}});
  REQUIRE_THROWS_MATCHES(
      load_curve(doc), ValidationError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("n_at_risk non-increasing")));
}

TEST_CASE("schema violations name the field", "[curve]") {
  auto doc = minimal_doc();
  doc.erase("points");
  REQUIRE_THROWS_MATCHES(
      load_curve(doc), ParseError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("'points'")));

  doc = minimal_doc();
  doc["points"] = json::array({json::array({1.0})});
  REQUIRE_THROWS_AS(load_curve(doc), ParseError);

  doc = minimal_doc();
  doc["risk_table"] = json::array({{0.0, 99.5}});
  REQUIRE_THROWS_MATCHES(
      load_curve(doc), ParseError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("'risk_table'")));

  doc = minimal_doc();
  doc["total_events"] = 3.7;
  REQUIRE_THROWS_MATCHES(
      load_curve(doc), ParseError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("'total_events'")));

  REQUIRE_THROWS_AS(load_curve(json::array()), ParseError);
}

TEST_CASE("negative and out-of-range values rejected", "[curve]") {
  auto doc = minimal_doc();
  doc["points"] = json::array({{0.0, 1.0}, {6.0, 1.2}});
  REQUIRE_THROWS_MATCHES(
      load_curve(doc), ValidationError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("survival outside [0,1]")));

  doc = minimal_doc();
  doc["risk_table"] = json::array({{0.0, 100}, {6.0, -1}});
  REQUIRE_THROWS_MATCHES(
      load_curve(doc), ValidationError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("n_at_risk negative")));
}

TEST_CASE("duplicate times collapse when equal, reject when contradictory", "[curve]") {
  auto doc = minimal_doc();
  doc["points"] = json::array({{0.0, 1.0}, {6.0, 0.8}, {6.0, 0.8}, {9.0, 0.7}});
  auto c = load_curve(doc);
  REQUIRE(c.points.size() == 3);

  doc["points"] = json::array({{0.0, 1.0}, {6.0, 0.8}, {6.0, 0.75}});
  REQUIRE_THROWS_MATCHES(
      load_curve(doc), ValidationError,
      Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring("duplicate time")));
}

TEST_CASE("leading unit anchor is prepended when missing", "[curve]") {
  auto doc = minimal_doc();
  doc["points"] = json::array({{2.0, 0.9}, {6.0, 0.8}});
  auto c = load_curve(doc);
  REQUIRE(c.points.size() == 3);
  REQUIRE(c.points[0].time == 0.0);
  REQUIRE(c.points[0].survival == 1.0);

  doc["points"] = json::array({{0.005, 0.97}, {6.0, 0.8}});
  c = load_curve(doc);
  REQUIRE(c.points[0].time == 0.005);
}

TEST_CASE("risk table must not start after the first point", "[curve]") {
  auto doc = minimal_doc();
  doc["points"] = json::array({{0.0, 1.0}, {6.0, 0.8}});
  doc["risk_table"] = json::array({{1.0, 100}, {6.0, 78}});
  REQUIRE_THROWS_MATCHES(load_curve(doc), ValidationError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                             "risk_table starts after the first curve point")));
}

TEST_CASE("curve json round trip", "[curve]") {
  auto doc = minimal_doc();
  doc["total_events"] = 22;
  auto c = load_curve(doc);
  auto c2 = load_curve(curve_to_json(c));
  REQUIRE(c2.points.size() == c.points.size());
  REQUIRE(c2.risk_table.size() == c.risk_table.size());
  REQUIRE(c2.total_events == c.total_events);
}

TEST_CASE("missing curve file is a config error", "[curve]") {
  REQUIRE_THROWS_MATCHES(load_curve_file("/nonexistent/path.json"), ConfigError,
                         Catch::Matchers::MessageMatches(
                             Catch::Matchers::ContainsSubstring("/nonexistent/path.json")));
}

TEST_CASE("death handling strings", "[curve]") {
  REQUIRE(death_handling_from_string("death_is_event") == DeathHandling::event);
  REQUIRE(death_handling_from_string("death_is_censored") == DeathHandling::censored);
  REQUIRE(to_string(DeathHandling::censored) == "death_is_censored");
  REQUIRE_THROWS_AS(death_handling_from_string("nope"), ParseError);
}

TEST_CASE("curve set follow-up check", "[curve]") {
  TrialCurveSet set;
  set.pfs = load_curve(json{{"label", "pfs"},
                            {"points", json::array({{0.0, 1.0}, {30.0, 0.4}})},
                            {"risk_table", json::array({{0.0, 50}, {12.0, 30}})}});
  set.os = load_curve(json{{"label", "os"},
                           {"points", json::array({{0.0, 1.0}, {12.0, 0.8}})},
                           {"risk_table", json::array({{0.0, 50}, {6.0, 45}, {12.0, 40}})}});
  REQUIRE_THROWS_MATCHES(check_curve_set(set), ValidationError,
                         Catch::Matchers::MessageMatches(Catch::Matchers::ContainsSubstring(
                             "progression follow-up exceeds survival follow-up")));
  set.pfs = load_curve(json{{"label", "pfs"},
                            {"points", json::array({{0.0, 1.0}, {14.0, 0.4}})},
                            {"risk_table", json::array({{0.0, 50}, {12.0, 30}})}});
  REQUIRE_NOTHROW(check_curve_set(set));
}

#include <cmath>
#include <stdexcept>
#include <string>

#include "doctest.h"
#include "esplan/network.hpp"

using namespace esplan;

namespace {

const char* kChain = R"({
  "bases": {"s_base_mva": 6, "v_base_kv": 21},
  "buses": [{"id": 1, "slack": true}, {"id": 2}, {"id": 3}],
  "lines": [
    {"down": 2, "up": 1, "r_pu": 0.01, "x_pu": 0.02, "b_pu": 0.001, "i_max_pu2": 4},
    {"down": 3, "up": 2, "r_ohm": 0.735, "x_ohm": 1.47, "b_siemens": 0, "ampacity_a": 330}
  ]
})";

std::string replace(std::string s, const std::string& from, const std::string& to) {
  const auto pos = s.find(from);
  REQUIRE(pos != std::string::npos);
  return s.replace(pos, from.size(), to);
}

}  // namespace

TEST_CASE("three-bus chain parses with adjacency and mixed units") {
  auto net = parse_network(kChain);
  REQUIRE(net.num_lines() == 2);
  CHECK(net.slack_bus() == 1);
  const int l2 = net.line_index(2), l3 = net.line_index(3);
  CHECK(net.children(l2) == std::vector<int>{l3});
  CHECK(net.children(l3).empty());
  CHECK(net.parent(l3) == l2);
  CHECK(net.parent(l2) == -1);
  // 0.735 ohm on a 73.5 ohm base
  CHECK(net.line(3).r == doctest::Approx(0.01).epsilon(1e-12));
  CHECK(net.line(3).x == doctest::Approx(0.02).epsilon(1e-12));
  // 330 A on a 6 MVA / 21 kV base is 330 / 164.957 pu, stored squared
  const double ib = 6e6 / (std::sqrt(3.0) * 21e3);
  CHECK(net.line(3).i_max == doctest::Approx((330 / ib) * (330 / ib)).epsilon(1e-12));
  CHECK(net.bus(2).v_min == doctest::Approx(0.81));
  CHECK(std::isinf(net.line(2).p_max));
}

TEST_CASE("radiality and base errors") {
  SUBCASE("extra line 3->2 closes a cycle") {
    const std::string bad =
        replace(kChain, R"("lines": [)", R"("lines": [{"down": 2, "up": 3, "r_pu": 0.01},)");
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("cycle detected"), NetworkError);
  }
  SUBCASE("bus without an upstream line") {
    const std::string bad = replace(kChain, R"({"id": 3}])", R"({"id": 3}, {"id": 4}])");
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("disconnected bus"), NetworkError);
  }
  SUBCASE("no slack") {
    const std::string bad = replace(kChain, R"("slack": true)", R"("slack": false)");
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("missing slack"), NetworkError);
  }
  SUBCASE("nonpositive base") {
    const std::string bad = replace(kChain, R"("s_base_mva": 6)", R"("s_base_mva": 0)");
    CHECK_THROWS_WITH_AS(parse_network(bad), doctest::Contains("nonpositive base"), NetworkError);
  }
  SUBCASE("malformed text") {
    CHECK_THROWS_WITH_AS(parse_network("{\"bases\": "), doctest::Contains("parse error"),
                         NetworkError);
  }
}

TEST_CASE("per-unit conversion") {
  PerUnitBase base{6.0, 21.0};
  CHECK(to_per_unit(6.0, Quantity::kPower, base) == 1.0);
  CHECK(to_per_unit(21.0, Quantity::kVoltage, base) == 1.0);
  CHECK(to_per_unit(0.0, Quantity::kPower, base) == 0.0);
  CHECK(to_per_unit(73.5, Quantity::kImpedance, base) == doctest::Approx(1.0).epsilon(1e-15));
  for (auto kind : {Quantity::kPower, Quantity::kVoltage, Quantity::kImpedance,
                    Quantity::kAdmittance, Quantity::kCurrent}) {
    for (double v : {1e-6, 0.37, 12.5, 4.2e4}) {
      const double back = from_per_unit(to_per_unit(v, kind, base), kind, base);
      CHECK(std::abs(back - v) <= 1e-12 * v);
    }
  }
  CHECK_THROWS_AS(parse_quantity("energy"), std::invalid_argument);
  CHECK(parse_quantity("impedance") == Quantity::kImpedance);
  CHECK_THROWS_AS(to_per_unit(1.0, Quantity::kPower, PerUnitBase{0.0, 21.0}), std::invalid_argument);
}

TEST_CASE("descendants") {
  auto chain = parse_network(kChain);
  CHECK(descendants(chain, 3).empty());
  CHECK(descendants(chain, 2) == std::set<int>{3});
  CHECK_THROWS_AS(descendants(chain, 9), NetworkError);

  // 1 -> 2 -> {3, 4}; 3 -> {5, 6}; 4 -> {7}: root line 2 has 5 descendants
  const char* tree = R"({
    "bases": {"s_base_mva": 1, "v_base_kv": 1},
    "buses": [{"id": 1, "slack": true}, {"id": 2}, {"id": 3}, {"id": 4}, {"id": 5}, {"id": 6}, {"id": 7}],
    "lines": [{"down": 2, "up": 1}, {"down": 3, "up": 2}, {"down": 4, "up": 2},
              {"down": 5, "up": 3}, {"down": 6, "up": 3}, {"down": 7, "up": 4}]
  })";
  auto net = parse_network(tree);
  CHECK(descendants(net, 2) == std::set<int>{3, 4, 5, 6, 7});
  // siblings are disjoint, and one line per non-slack bus
  for (int i = 0; i < net.num_lines(); ++i) {
    const auto& kids = net.children(i);
    for (std::size_t a = 0; a < kids.size(); ++a) {
      for (std::size_t b = a + 1; b < kids.size(); ++b) {
        auto da = descendants(net, net.lines()[kids[a]].id);
        auto db = descendants(net, net.lines()[kids[b]].id);
        da.insert(net.lines()[kids[a]].id);
        for (int x : db) CHECK(da.count(x) == 0);
      }
    }
  }
  CHECK(net.num_lines() == static_cast<int>(net.buses().size()) - 1);
}

TEST_CASE("55-bus example: candidates in file order, round trip is exact") {
  auto net = load_network("data/feeder55.json");
  CHECK(net.num_lines() == 54);
  REQUIRE(net.candidates.size() == 5);
  const int expect[] = {4, 16, 27, 41, 45};
  for (int i = 0; i < 5; ++i) CHECK(net.candidates[i].bus == expect[i]);
  CHECK(net.candidates[0].r_max == doctest::Approx(0.5));     // 3 MVA / 6 MVA
  CHECK(net.candidates[0].c_max == doctest::Approx(4.0 / 6));  // 4 MWh / 6 MVA
  CHECK(net.costs.w_u == doctest::Approx(1000 * net.costs.w_l));

  auto again = parse_network(write_network(net));
  CHECK(again.base().s_base_mva == net.base().s_base_mva);
  CHECK(again.base().v_base_kv == net.base().v_base_kv);
  CHECK(again.slack_v() == net.slack_v());
  CHECK(again.buses() == net.buses());
  CHECK(again.lines() == net.lines());
  CHECK(again.candidates == net.candidates);
  CHECK(again.costs == net.costs);
  CHECK(write_network(again) == write_network(net));
}

TEST_CASE("candidate on an unknown bus is rejected") {
  const std::string bad =
      replace(kChain, R"("lines": [)", R"("ess_candidates": [{"bus": 9, "r_max_pu": 1}], "lines": [)");
  CHECK_THROWS_AS(parse_network(bad), NetworkError);
}

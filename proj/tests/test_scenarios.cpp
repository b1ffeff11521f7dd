#include <cmath>
#include <limits>
#include <random>
#include <set>

#include "doctest.h"
#include "esplan/scenarios.hpp"

using namespace esplan;

namespace {

DayType small_day(double sigma, int buses = 2, int T = 24) {
  DayType d;
  d.id = 3;
  d.n_days = 10;
  d.delta_t_h = 24.0 / T;
  for (int b = 0; b < buses; ++b) d.bus_ids.push_back(b + 2);
  d.p_forecast.resize(buses, T);
  d.q_forecast.resize(buses, T);
  for (int b = 0; b < buses; ++b) {
    for (int t = 0; t < T; ++t) {
      d.p_forecast(b, t) = 0.1 + 0.05 * std::sin(0.3 * t + b);
      d.q_forecast(b, t) = 0.2 * d.p_forecast(b, t);
    }
  }
  d.sigma = Eigen::VectorXd::Constant(buses, sigma);
  return d;
}

// H = 1 scenario set from scalar values.
ScenarioSet scalar_set(const std::vector<double>& vals, std::vector<double> lambda = {}) {
  ScenarioSet s;
  s.bus_ids = {2};
  s.delta_t_h = 24;
  for (double v : vals) {
    Scenario sc;
    sc.p = Eigen::MatrixXd::Constant(1, 1, v);
    sc.q.resize(0, 1);
    s.scenarios.push_back(sc);
  }
  if (lambda.empty()) lambda.assign(vals.size(), 1.0 / vals.size());
  s.lambda = lambda;
  for (std::size_t i = 0; i < vals.size(); ++i) s.source_index.push_back(static_cast<int>(i));
  return s;
}

double cost_of(const std::vector<Eigen::VectorXd>& pts, const std::vector<int>& med) {
  double c = 0.0;
  for (const auto& p : pts) {
    double best = std::numeric_limits<double>::infinity();
    for (int m : med) best = std::min(best, (p - pts[m]).norm());
    c += best;
  }
  return c;
}

}  // namespace

TEST_CASE("zero sigma reproduces the forecast") {
  auto d = small_day(0.0);
  auto set = generate_scenarios(d, 5, 7);
  REQUIRE(set.size() == 5);
  for (const auto& s : set.scenarios) {
    CHECK(s.p == d.p_forecast);
    CHECK(s.q == d.q_forecast);
  }
}

TEST_CASE("equal probabilities") {
  auto set = generate_scenarios(small_day(0.2), 1000, 1);
  for (double l : set.lambda) CHECK(l == 0.001);
  CHECK_NOTHROW(set.validate());
  auto one = generate_scenarios(small_day(0.2), 1, 1);
  CHECK(one.lambda == std::vector<double>{1.0});
}

TEST_CASE("sample mean is within three standard errors") {
  DayType d;
  d.delta_t_h = 24;
  d.bus_ids = {1};
  d.p_forecast = Eigen::MatrixXd::Constant(1, 1, 1.0);
  d.q_forecast = Eigen::MatrixXd::Constant(1, 1, 1.0);
  d.sigma = Eigen::VectorXd::Constant(1, 0.1);
  auto set = generate_scenarios(d, 10000, 99);
  double mp = 0, mq = 0, var = 0;
  for (const auto& s : set.scenarios) {
    mp += s.p(0, 0) / 10000;
    mq += s.q(0, 0) / 10000;
  }
  for (const auto& s : set.scenarios) var += (s.p(0, 0) - mp) * (s.p(0, 0) - mp) / 9999;
  CHECK(std::abs(mp - 1.0) < 0.004);
  CHECK(std::abs(mq - 1.0) < 0.004);
  CHECK(std::sqrt(var) == doctest::Approx(0.1).epsilon(0.05));
}

TEST_CASE("generation is bit-reproducible") {
  auto d = small_day(0.15);
  d.pv_forecast = Eigen::VectorXd::LinSpaced(24, 0.0, 0.3);
  d.sigma_pv = 0.1;
  auto a = generate_scenarios(d, 20, 42);
  auto b = generate_scenarios(d, 20, 42);
  auto c = generate_scenarios(d, 20, 43);
  for (int k = 0; k < 20; ++k) {
    CHECK(scenario_vector(a.scenarios[k]) == scenario_vector(b.scenarios[k]));
  }
  CHECK(scenario_vector(a.scenarios[0]) != scenario_vector(c.scenarios[0]));
  CHECK(scenario_vector(a.scenarios[0]).size() == 2 * 24 * 2 + 24);
}

TEST_CASE("day-type validation") {
  auto d = small_day(0.1);
  d.delta_t_h = 0.5;
  CHECK_THROWS_AS(d.validate(), std::invalid_argument);
  d = small_day(0.1);
  d.sigma(0) = -0.1;
  CHECK_THROWS_AS(generate_scenarios(d, 3, 1), std::invalid_argument);
  CHECK_THROWS_AS(generate_scenarios(small_day(0.1), 0, 1), std::invalid_argument);
}

TEST_CASE("k-medoids: k = n gives every point its own medoid") {
  std::vector<Eigen::VectorXd> pts;
  std::mt19937_64 rng(5);
  std::normal_distribution<double> N;
  for (int i = 0; i < 9; ++i) pts.push_back(Eigen::Vector3d(N(rng), N(rng), N(rng)));
  auto r = kmedoids(pts, 9, 1);
  CHECK(r.medoids == std::vector<int>{0, 1, 2, 3, 4, 5, 6, 7, 8});
  CHECK(r.cost == 0.0);
  for (int s : r.sizes) CHECK(s == 1);
  CHECK_THROWS_AS(kmedoids(pts, 0, 1), std::invalid_argument);
  CHECK_THROWS_AS(kmedoids(pts, 10, 1), std::invalid_argument);
}

TEST_CASE("k-medoids: two separated pairs") {
  std::vector<Eigen::VectorXd> pts = {Eigen::Vector2d(0, 0), Eigen::Vector2d(50, 50),
                                      Eigen::Vector2d(0, 1), Eigen::Vector2d(50, 51)};
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    auto r = kmedoids(pts, 2, seed);
    std::set<int> groups;
    for (int m : r.medoids) groups.insert(m % 2);
    CHECK(groups.size() == 2);
    CHECK(r.assignment[0] == r.assignment[2]);
    CHECK(r.assignment[1] == r.assignment[3]);
    CHECK(r.cost == doctest::Approx(2.0));
  }
}

TEST_CASE("k-medoids on a line matches exhaustive search") {
  std::vector<Eigen::VectorXd> pts;
  for (int i = 0; i < 10; ++i) pts.push_back(Eigen::VectorXd::Constant(1, i));
  for (int i = 0; i < 10; ++i) pts.push_back(Eigen::VectorXd::Constant(1, 100 + i));
  double best = std::numeric_limits<double>::infinity();
  std::set<std::pair<int, int>> optimal;
  for (int a = 0; a < 20; ++a) {
    for (int b = a + 1; b < 20; ++b) {
      const double c = cost_of(pts, {a, b});
      if (c < best - 1e-12) {
        best = c;
        optimal.clear();
      }
      if (std::abs(c - best) <= 1e-12) optimal.insert({a, b});
    }
  }
  // 4 or 5, and 104 or 105
  CHECK(optimal == std::set<std::pair<int, int>>{{4, 14}, {4, 15}, {5, 14}, {5, 15}});
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    auto r = kmedoids(pts, 2, seed);
    CHECK(optimal.count({r.medoids[0], r.medoids[1]}) == 1);
    CHECK(r.cost == doctest::Approx(best));
    CHECK(r.sizes == std::vector<int>{10, 10});
  }
}

TEST_CASE("k-medoids reaches the exhaustive optimum on small random sets") {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> N;
  int matched = 0;
  for (int trial = 0; trial < 20; ++trial) {
    std::vector<Eigen::VectorXd> pts;
    for (int i = 0; i < 12; ++i) {
      const double cx = (i % 3) * 4.0;
      pts.push_back(Eigen::Vector2d(cx + N(rng), N(rng)));
    }
    double best = std::numeric_limits<double>::infinity();
    for (int a = 0; a < 12; ++a)
      for (int b = a + 1; b < 12; ++b)
        for (int c = b + 1; c < 12; ++c) best = std::min(best, cost_of(pts, {a, b, c}));
    auto r = kmedoids(pts, 3, trial);
    CHECK(r.cost == doctest::Approx(cost_of(pts, r.medoids)));
    CHECK(r.cost >= best - 1e-12);
    matched += r.cost <= best + 1e-9;
    // every point sits with its nearest medoid
    for (int o = 0; o < 12; ++o) {
      const double own = (pts[o] - pts[r.medoids[r.assignment[o]]]).norm();
      for (int m : r.medoids) CHECK(own <= (pts[o] - pts[m]).norm() + 1e-12);
    }
  }
  // swap search is a local method; clear clusters should almost always be solved
  CHECK(matched >= 18);
}

TEST_CASE("empirical CDF inverse") {
  CHECK(empirical_cdf_inverse({1, 2, 3}, {1. / 3, 1. / 3, 1. / 3}, 0.5) == 2);
  CHECK(empirical_cdf_inverse({3, 1, 2}, {1. / 3, 1. / 3, 1. / 3}, 0.0) == 1);
  CHECK(empirical_cdf_inverse({1, 2, 3}, {1. / 3, 1. / 3, 1. / 3}, 1.0) == 3);
  CHECK(empirical_cdf_inverse({1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.4}, 0.35) == 3);
  // exactly on a step: cumulative 0.3 reaches 0.3
  CHECK(empirical_cdf_inverse({1, 2, 3, 4}, {0.1, 0.2, 0.3, 0.4}, 0.3) == 2);
  CHECK_THROWS_AS(empirical_cdf_inverse({1}, {1}, 1.5), std::invalid_argument);
  CHECK_THROWS_AS(empirical_cdf_inverse({1}, {1}, -0.1), std::invalid_argument);
  CHECK_THROWS_AS(empirical_cdf_inverse({}, {}, 0.5), std::invalid_argument);
}

TEST_CASE("CDF distance: hand-evaluated single coordinate") {
  ReductionConfig cfg;  // quantiles .05 .275 .5 .725 .95
  auto full = scalar_set({1, 2, 3, 4, 5});
  auto red = scalar_set({3});
  // full quantiles 1 2 3 4 5 vs 3: |1-3|/1, 1/2, 0, 1/4, 2/5
  const double expect = (2.0 + 0.5 + 0.0 + 0.25 + 0.4) / 5.0;
  CHECK(cdf_distance(full, red, cfg) == doctest::Approx(expect).epsilon(1e-14));
  CHECK(expect == doctest::Approx(0.63));
  CHECK(cdf_distance(full, full, cfg) == 0.0);

  auto full10 = scalar_set({10, 20, 30, 40, 50});
  auto red10 = scalar_set({30});
  CHECK(cdf_distance(full10, red10, cfg) == doctest::Approx(expect).epsilon(1e-14));

  ReductionConfig w = cfg;
  w.weights = {1, 0, 0, 0, 0};
  CHECK(cdf_distance(full, red, w) == doctest::Approx(2.0));
}

TEST_CASE("CDF distance skips zero quantiles, and fails when nothing is left") {
  ReductionConfig cfg;
  auto full = generate_scenarios(small_day(0.1), 30, 4);
  for (auto& s : full.scenarios) s.p.row(0).setZero();
  int skipped = 0;
  const double d = cdf_distance(full, full, cfg, &skipped);
  CHECK(d == 0.0);
  CHECK(skipped == 5 * 24);

  auto zero = scalar_set({0, 0, 0});
  CHECK_THROWS_AS(cdf_distance(zero, zero, cfg), std::domain_error);
}

TEST_CASE("CDF distance is zero on random sets and their copies, scale invariant") {
  ReductionConfig cfg;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    auto a = generate_scenarios(small_day(0.2, 3, 24), 40, seed);
    CHECK(cdf_distance(a, a, cfg) == 0.0);
    auto sub = a;
    sub.scenarios.resize(5);
    sub.lambda.assign(5, 0.2);
    const double d = cdf_distance(a, sub, cfg);
    CHECK(d >= 0.0);
    auto a10 = a, sub10 = sub;
    for (auto& s : a10.scenarios) s.p *= 10, s.q *= 10;
    for (auto& s : sub10.scenarios) s.p *= 10, s.q *= 10;
    CHECK(cdf_distance(a10, sub10, cfg) == doctest::Approx(d).epsilon(1e-12));
  }
}

TEST_CASE("reduction: infinite tolerance keeps one medoid") {
  ReductionConfig cfg;
  cfg.tolerance = std::numeric_limits<double>::infinity();
  auto full = generate_scenarios(small_day(0.1), 25, 2);
  auto r = reduce_scenarios(full, cfg);
  CHECK(r.k == 1);
  CHECK(r.reduced.lambda == std::vector<double>{1.0});
  CHECK(r.trace.size() == 1);
}

TEST_CASE("reduction: identical scenarios collapse to one") {
  ReductionConfig cfg;
  auto full = generate_scenarios(small_day(0.0), 5, 2);
  auto r = reduce_scenarios(full, cfg);
  CHECK(r.k == 1);
  CHECK(r.trace[0] == 0.0);
}

TEST_CASE("reduction properties") {
  ReductionConfig cfg;
  cfg.tolerance = 0.02;
  auto full = generate_scenarios(small_day(0.1, 2, 24), 60, 8);
  auto r = reduce_scenarios(full, cfg);
  CHECK(r.k >= 1);
  CHECK(r.trace.back() < cfg.tolerance);
  for (std::size_t i = 0; i + 1 < r.trace.size(); ++i) CHECK(r.trace[i] >= cfg.tolerance);
  double sum = 0.0;
  for (double l : r.reduced.lambda) sum += l;
  CHECK(sum == doctest::Approx(1.0).epsilon(1e-15));
  CHECK_NOTHROW(r.reduced.validate());

  // cluster-size proportions, members of the full set
  std::vector<Eigen::VectorXd> pts;
  for (const auto& s : full.scenarios) pts.push_back(scenario_vector(s));
  auto km = kmedoids(pts, r.k, cfg.seed);
  for (int m = 0; m < r.k; ++m) {
    CHECK(r.reduced.lambda[m] == doctest::Approx(km.sizes[m] / 60.0).epsilon(1e-14));
    const int src = r.reduced.source_index[m];
    CHECK(scenario_vector(r.reduced.scenarios[m]) == pts[src]);
  }
  CHECK(cdf_distance(full, r.reduced, cfg) == doctest::Approx(r.trace.back()));

  auto again = reduce_scenarios(full, cfg);
  CHECK(again.k == r.k);
  CHECK(again.reduced.source_index == r.reduced.source_index);
}

TEST_CASE("reduction reports the best set when tolerance is unreachable") {
  ReductionConfig cfg;
  cfg.tolerance = 1e-9;
  cfg.max_k = 3;
  auto full = generate_scenarios(small_day(0.3), 30, 3);
  try {
    reduce_scenarios(full, cfg);
    FAIL("expected ReductionError");
  } catch (const ReductionError& e) {
    CHECK(e.best.trace.size() == 3);
    CHECK(e.best.k >= 1);
    CHECK(e.best.k <= 3);
    double lo = *std::min_element(e.best.trace.begin(), e.best.trace.end());
    CHECK(e.best.trace[e.best.k - 1] == lo);
  }
}

TEST_CASE("scenario files round trip") {
  auto d = small_day(0.1, 2, 4);
  d.pv_forecast = Eigen::VectorXd::Constant(4, 0.2);
  auto set = generate_scenarios(d, 3, 5);
  auto back = parse_scenarios(write_scenarios_json(set));
  REQUIRE(back.size() == 3);
  CHECK(back.day_type == 3);
  CHECK(back.bus_ids == set.bus_ids);
  CHECK(back.lambda == set.lambda);
  for (int k = 0; k < 3; ++k) CHECK(scenario_vector(back.scenarios[k]) == scenario_vector(set.scenarios[k]));

  const std::string csv = write_scenarios_csv(set);
  CHECK(csv.rfind("scenario,lambda,kind,bus,t0,t1,t2,t3\n", 0) == 0);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 1 + 3 * 5);

  CHECK_THROWS_AS(parse_scenarios(R"({"day_type":1,"delta_t_h":24,"bus_ids":[1],"lambda":[0.5],
    "scenarios":[{"p":[[1.0]]}]})"), std::invalid_argument);
  CHECK_THROWS_AS(parse_scenarios("{"), std::invalid_argument);
}

TEST_CASE("day-type file parsing with scalar sigma") {
  auto d = parse_day_type(R"({"id":2,"n_days":30,"delta_t_h":12,"bus_ids":[2,3],
    "p_forecast":[[0.1,0.2],[0.3,0.4]],"sigma":0.05})");
  CHECK(d.steps() == 2);
  CHECK(d.sigma.size() == 2);
  CHECK(d.sigma(1) == 0.05);
  CHECK(d.q_forecast.isZero());
  CHECK_THROWS_AS(parse_day_type(R"({"id":2,"delta_t_h":1,"bus_ids":[2],
    "p_forecast":[[0.1,0.2]],"sigma":0.05})"), std::invalid_argument);
}

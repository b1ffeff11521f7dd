#include <cmath>
#include <random>

#include "doctest.h"
#include "esplan/pf.hpp"

using namespace esplan;

namespace {

RadialNetwork two_bus(double r, double x, double b) {
  return RadialNetwork({1.0, 1.0}, {{1, true}, {2, false}}, {{2, 1, r, x, b}});
}

// 1 -> 2 -> {3, 4}; 3 -> 5; 4 -> {6, 7}
RadialNetwork seven_bus(double b) {
  std::vector<Bus> buses;
  for (int i = 1; i <= 7; ++i) buses.push_back({i, i == 1});
  std::vector<Line> lines = {{2, 1, 0.010, 0.020, b}, {3, 2, 0.015, 0.010, b},
                             {4, 2, 0.020, 0.030, b}, {5, 3, 0.010, 0.010, b},
                             {6, 4, 0.030, 0.020, b}, {7, 4, 0.005, 0.015, b}};
  return RadialNetwork({1.0, 1.0}, buses, lines, 1.0);
}

// Phasor current-summation sweep, written independently of the oracle.
struct Phasor {
  std::vector<double> v, f;
  std::vector<Complex> s_top;
};

Phasor phasor_flow(const RadialNetwork& net, const std::vector<Complex>& s) {
  const int n = net.num_lines();
  const Complex j(0, 1);
  std::vector<Complex> V(n, std::sqrt(net.slack_v())), I_ser(n), I_top(n);
  for (int it = 0; it < 2000; ++it) {
    for (int i = n - 1; i >= 0; --i) {
      Complex I = std::conj(s[i] / V[i]) + j * net.lines()[i].b * V[i];
      for (int c : net.children(i)) I += I_top[c];
      I_ser[i] = I;
    }
    for (int i = 0; i < n; ++i) {
      const Complex Vu = net.parent(i) < 0 ? std::sqrt(net.slack_v()) : V[net.parent(i)];
      I_top[i] = I_ser[i] + j * net.lines()[i].b * Vu;
      V[i] = Vu - Complex(net.lines()[i].r, net.lines()[i].x) * I_ser[i];
    }
  }
  Phasor out;
  for (int i = 0; i < n; ++i) {
    const Complex Vu = net.parent(i) < 0 ? std::sqrt(net.slack_v()) : V[net.parent(i)];
    out.v.push_back(std::norm(V[i]));
    out.f.push_back(std::norm(I_ser[i]));
    out.s_top.push_back(Vu * std::conj(I_top[i]));
  }
  return out;
}

}  // namespace

TEST_CASE("no load, no shunt: flat profile") {
  auto net = seven_bus(0.0);
  auto pf = solve_pf(net, std::vector<Complex>(6, 0.0));
  for (int i = 0; i < 6; ++i) {
    CHECK(pf.v[i] == doctest::Approx(1.0).epsilon(1e-14));
    CHECK(pf.f[i] == doctest::Approx(0.0));
  }
  CHECK(std::abs(pf.s_slack) < 1e-14);
}

TEST_CASE("two-bus reference values") {
  auto net = two_bus(0.01, 0.01, 0.0);
  auto pf = solve_pf(net, {Complex(0.1, 0.0)});
  // fixed point of V2 = 1 - z conj(0.1 / V2), iterated to 1e-16
  CHECK(pf.v[0] == doctest::Approx(0.9979979959879599).epsilon(1e-10));
  CHECK(pf.f[0] == doctest::Approx(0.010020060200722731).epsilon(1e-10));
  auto ph = phasor_flow(net, {Complex(0.1, 0.0)});
  CHECK(std::abs(pf.v[0] - ph.v[0]) < 1e-12);
  CHECK(std::abs(pf.f[0] - ph.f[0]) < 1e-12);
}

TEST_CASE("shunt only: slack supplies negative reactive power") {
  auto net = seven_bus(0.002);
  auto pf = solve_pf(net, std::vector<Complex>(6, 0.0));
  CHECK(pf.s_slack.imag() < 0.0);
  // only the charging current flows, so the real part is a small loss
  CHECK(pf.s_slack.real() >= 0.0);
  CHECK(pf.s_slack.real() < 1e-4);
}

TEST_CASE("agrees with the phasor sweep and satisfies the branch equations") {
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> U(-0.15, 0.3);
  auto net = seven_bus(0.001);
  const Complex j(0, 1);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<Complex> s;
    for (int i = 0; i < 6; ++i) s.emplace_back(U(rng), 0.3 * U(rng));
    auto pf = solve_pf(net, s);
    auto ph = phasor_flow(net, s);
    for (int i = 0; i < 6; ++i) {
      CHECK(std::abs(pf.v[i] - ph.v[i]) < 1e-9);
      CHECK(std::abs(pf.f[i] - ph.f[i]) < 1e-9);
      CHECK(std::abs(pf.s_top[i] - ph.s_top[i]) < 1e-9);
      const Line& l = net.lines()[i];
      const double vu = pf.v_up(net, i);
      // conservation at the downstream bus
      Complex sb = s[i];
      for (int c : net.children(i)) sb += pf.s_top[c];
      CHECK(std::abs(pf.s_bot[i] - sb) < 1e-10);
      // series losses and shunt terms
      const Complex loss = Complex(l.r, l.x) * pf.f[i] - j * (vu + pf.v[i]) * l.b;
      CHECK(std::abs(pf.s_top[i] - pf.s_bot[i] - loss) < 1e-10);
      // current definition holds with equality
      CHECK(std::abs(pf.f[i] * vu - std::norm(pf.s_top[i] + j * vu * l.b)) < 1e-10);
    }
  }
}

TEST_CASE("more load at one bus never raises downstream voltages") {
  auto net = seven_bus(0.0005);
  std::vector<Complex> s(6, Complex(0.05, 0.01));
  const int k = net.line_index(4);
  auto base = solve_pf(net, s);
  for (double extra : {0.02, 0.05, 0.1}) {
    auto more = s;
    more[k] += extra;
    auto pf = solve_pf(net, more);
    for (int id : {4, 6, 7}) {
      const int i = net.line_index(id);
      CHECK(pf.v[i] <= base.v[i] + 1e-14);
    }
  }
}

TEST_CASE("oracle verification") {
  auto net = seven_bus(0.001);
  std::vector<Complex> s(6, Complex(0.08, 0.02));
  auto pf = solve_pf(net, s);
  OpfPoint pt{pf.v, pf.f, pf.s_top};
  auto rep = verify_against_oracle(net, pt, s);
  CHECK(rep.pass);
  CHECK(rep.max_dv < 1e-12);

  pt.f[net.line_index(5)] += 0.1;
  rep = verify_against_oracle(net, pt, s);
  CHECK_FALSE(rep.pass);
  CHECK(rep.max_df == doctest::Approx(0.1).epsilon(1e-9));
  CHECK(rep.worst_f_line == 5);
}

TEST_CASE("extreme loading is reported, not returned") {
  auto net = two_bus(0.5, 0.5, 0.0);
  CHECK_THROWS_AS(solve_pf(net, {Complex(5.0, 0.0)}), PfError);
}

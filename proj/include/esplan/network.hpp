#pragma once

// Radial feeder data model in per unit. Lines carry the id of their
// downstream bus; b is the shunt susceptance at each end of the pi model
// (a total line-charging B is entered as b = B/2).

#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "esplan/conic.hpp"

namespace esplan {

struct NetworkError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct PerUnitBase {
  double s_base_mva = 1.0;
  double v_base_kv = 1.0;

  double z_base_ohm() const { return v_base_kv * v_base_kv / s_base_mva; }
  double i_base_a() const;  // three-phase: S / (sqrt(3) V)
};

enum class Quantity { kPower, kVoltage, kImpedance, kAdmittance, kCurrent };

/// Throws std::invalid_argument for a nonpositive base.
double to_per_unit(double value, Quantity kind, const PerUnitBase& base);
double from_per_unit(double value, Quantity kind, const PerUnitBase& base);
/// "power", "voltage", "impedance", "admittance", "current"; throws on anything else.
Quantity parse_quantity(const std::string& name);

struct Bus {
  int id = 0;
  bool is_slack = false;
  double v_min = 0.81;  // squared magnitude, pu^2
  double v_max = 1.21;
};

struct Line {
  int id = 0;  // downstream bus
  int up = 0;
  double r = 0.0, x = 0.0, b = 0.0;
  double i_max = kInf;  // squared ampacity, pu^2
  double p_max = kInf;
  double q_max = kInf;
};

struct EssCandidate {
  int bus = 0;
  double r_min = 0.0, r_max = 0.0;  // pu
  double c_min = 0.0, c_max = 0.0;  // pu*h
  double cr_min = 1.0;              // h
  double e_min_frac = 0.1, e_max_frac = 0.9;
};

struct CostParams {
  double i_c = 0.0;   // $ per site
  double i_p = 0.0;   // $/kVA
  double i_e = 0.0;   // $/kWh
  double w_d = 0.0;   // $/MWh imbalance penalty, default for every day-type
  std::map<int, double> w_d_by_day;  // overrides keyed by day-type id
  double w_l = 0.0;   // $/MWh losses
  double w_u = 0.0;   // $/MWh unserved load
  double horizon_years = 1.0;

  double penalty(int day_type) const {
    auto it = w_d_by_day.find(day_type);
    return it == w_d_by_day.end() ? w_d : it->second;
  }
};

class RadialNetwork {
 public:
  RadialNetwork() = default;
  /// Validates and indexes; throws NetworkError on any invariant violation.
  RadialNetwork(PerUnitBase base, std::vector<Bus> buses, std::vector<Line> lines,
                double slack_v = 1.0);

  const PerUnitBase& base() const { return base_; }
  const std::vector<Bus>& buses() const { return buses_; }
  /// Lines in breadth-first order from the slack bus (parents before children).
  const std::vector<Line>& lines() const { return lines_; }
  int num_lines() const { return static_cast<int>(lines_.size()); }
  int slack_bus() const { return slack_; }
  double slack_v() const { return slack_v_; }
  void set_slack_v(double v);

  const Bus& bus(int id) const;
  bool has_bus(int id) const { return bus_pos_.count(id) > 0; }
  /// Position of line `id` in lines(); throws NetworkError for unknown ids.
  int line_index(int id) const;
  bool has_line(int id) const { return line_pos_.count(id) > 0; }
  const Line& line(int id) const { return lines_[line_index(id)]; }
  /// Child line positions of the line at position i.
  const std::vector<int>& children(int i) const { return children_[i]; }
  /// Position of the parent line, or -1 when the line leaves the slack bus.
  int parent(int i) const { return parent_[i]; }

  std::vector<EssCandidate> candidates;
  CostParams costs;

 private:
  PerUnitBase base_;
  std::vector<Bus> buses_;
  std::vector<Line> lines_;
  std::vector<std::vector<int>> children_;
  std::vector<int> parent_;
  std::map<int, int> bus_pos_, line_pos_;
  int slack_ = 0;
  double slack_v_ = 1.0;
};

/// All lines in the subtree below `line_id`, excluding the line itself.
std::set<int> descendants(const RadialNetwork& net, int line_id);

/// Reads the documented JSON schema (mixed physical / per-unit fields).
RadialNetwork load_network(const std::string& path);
RadialNetwork parse_network(const std::string& json_text);
/// Canonical all-per-unit JSON text; parse_network(write_network(n)) == n.
std::string write_network(const RadialNetwork& net);

bool operator==(const Bus& a, const Bus& b);
bool operator==(const Line& a, const Line& b);
bool operator==(const EssCandidate& a, const EssCandidate& b);
bool operator==(const CostParams& a, const CostParams& b);

}  // namespace esplan

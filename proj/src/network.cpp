#include "esplan/network.hpp"

#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include "json.hpp"

namespace esplan {

using nlohmann::json;

double PerUnitBase::i_base_a() const {
  return s_base_mva * 1e6 / (std::sqrt(3.0) * v_base_kv * 1e3);
}

namespace {

void check_base(const PerUnitBase& base) {
  if (!(base.s_base_mva > 0.0) || !(base.v_base_kv > 0.0)) {
    throw std::invalid_argument("nonpositive base");
  }
}

double scale_of(Quantity kind, const PerUnitBase& base) {
  switch (kind) {
    case Quantity::kPower:
      return base.s_base_mva;
    case Quantity::kVoltage:
      return base.v_base_kv;
    case Quantity::kImpedance:
      return base.z_base_ohm();
    case Quantity::kAdmittance:
      return 1.0 / base.z_base_ohm();
    case Quantity::kCurrent:
      return base.i_base_a();
  }
  throw std::invalid_argument("unknown quantity kind");
}

}  // namespace

double to_per_unit(double value, Quantity kind, const PerUnitBase& base) {
  check_base(base);
  return value / scale_of(kind, base);
}

double from_per_unit(double value, Quantity kind, const PerUnitBase& base) {
  check_base(base);
  return value * scale_of(kind, base);
}

Quantity parse_quantity(const std::string& name) {
  if (name == "power") return Quantity::kPower;
  if (name == "voltage") return Quantity::kVoltage;
  if (name == "impedance") return Quantity::kImpedance;
  if (name == "admittance") return Quantity::kAdmittance;
  if (name == "current") return Quantity::kCurrent;
  throw std::invalid_argument("unknown kind '" + name + "'");
}

RadialNetwork::RadialNetwork(PerUnitBase base, std::vector<Bus> buses, std::vector<Line> lines,
                             double slack_v)
    : base_(base), buses_(std::move(buses)) {
  if (!(base_.s_base_mva > 0.0) || !(base_.v_base_kv > 0.0)) throw NetworkError("nonpositive base");
  int slacks = 0;
  for (std::size_t i = 0; i < buses_.size(); ++i) {
    const Bus& b = buses_[i];
    if (!bus_pos_.emplace(b.id, static_cast<int>(i)).second) {
      throw NetworkError("duplicate bus " + std::to_string(b.id));
    }
    if (b.is_slack) {
      ++slacks;
      slack_ = b.id;
    }
    if (!(b.v_min > 0.0) || !(b.v_min < b.v_max)) {
      throw NetworkError("bus " + std::to_string(b.id) + ": need 0 < v_min < v_max");
    }
  }
  if (slacks == 0) throw NetworkError("missing slack");
  if (slacks > 1) throw NetworkError("more than one slack bus");

  std::map<int, const Line*> incoming;
  for (const Line& l : lines) {
    if (!has_bus(l.id) || !has_bus(l.up)) {
      throw NetworkError("line " + std::to_string(l.up) + "->" + std::to_string(l.id) +
                         " references an unknown bus");
    }
    if (l.id == l.up) throw NetworkError("cycle detected: self-loop at bus " + std::to_string(l.id));
    if (l.id == slack_ || incoming.count(l.id)) {
      throw NetworkError("cycle detected at bus " + std::to_string(l.id));
    }
    if (l.r < 0.0 || l.x < 0.0 || l.b < 0.0 || !(l.i_max > 0.0)) {
      throw NetworkError("line " + std::to_string(l.id) + ": need r, x, b >= 0 and i_max > 0");
    }
    incoming[l.id] = &l;
  }
  for (const Bus& b : buses_) {
    if (!b.is_slack && !incoming.count(b.id)) {
      throw NetworkError("disconnected bus " + std::to_string(b.id));
    }
  }
  // breadth-first from the slack; anything unreached sits on a cycle
  std::map<int, std::vector<const Line*>> out;
  for (const Line& l : lines) out[l.up].push_back(&l);
  std::queue<int> q;
  q.push(slack_);
  while (!q.empty()) {
    const int u = q.front();
    q.pop();
    for (const Line* l : out[u]) {
      line_pos_[l->id] = static_cast<int>(lines_.size());
      lines_.push_back(*l);
      q.push(l->id);
    }
  }
  if (lines_.size() != lines.size()) throw NetworkError("cycle detected (lines unreachable from slack)");
  children_.assign(lines_.size(), {});
  parent_.assign(lines_.size(), -1);
  for (std::size_t i = 0; i < lines_.size(); ++i) {
    if (lines_[i].up != slack_) {
      const int p = line_pos_.at(lines_[i].up);
      parent_[i] = p;
      children_[p].push_back(static_cast<int>(i));
    }
  }
  set_slack_v(slack_v);
}

void RadialNetwork::set_slack_v(double v) {
  if (!(v > 0.0)) throw NetworkError("slack voltage must be positive");
  slack_v_ = v;
}

const Bus& RadialNetwork::bus(int id) const {
  auto it = bus_pos_.find(id);
  if (it == bus_pos_.end()) throw NetworkError("unknown bus " + std::to_string(id));
  return buses_[it->second];
}

int RadialNetwork::line_index(int id) const {
  auto it = line_pos_.find(id);
  if (it == line_pos_.end()) throw NetworkError("unknown line " + std::to_string(id));
  return it->second;
}

std::set<int> descendants(const RadialNetwork& net, int line_id) {
  std::set<int> out;
  std::vector<int> stack{net.line_index(line_id)};
  while (!stack.empty()) {
    const int i = stack.back();
    stack.pop_back();
    for (int c : net.children(i)) {
      out.insert(net.lines()[c].id);
      stack.push_back(c);
    }
  }
  return out;
}

namespace {

double get_or(const json& j, const char* key, double dflt) {
  if (!j.contains(key) || j[key].is_null()) return dflt;
  return j[key].get<double>();
}

double json_number_or_inf(const json& j, const char* key) {
  if (!j.contains(key) || j[key].is_null()) return kInf;
  if (j[key].is_string() && j[key].get<std::string>() == "inf") return kInf;
  return j[key].get<double>();
}

// Reads pu field `pu_key`, else physical field `phys_key` converted, else dflt.
double pu_or_physical(const json& j, const char* pu_key, const char* phys_key, Quantity kind,
                      const PerUnitBase& base, double dflt, double phys_scale = 1.0) {
  if (j.contains(pu_key)) return j[pu_key].get<double>();
  if (j.contains(phys_key)) return to_per_unit(j[phys_key].get<double>() * phys_scale, kind, base);
  return dflt;
}

json inf_or_number(double v) { return std::isinf(v) ? json("inf") : json(v); }

}  // namespace

RadialNetwork parse_network(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::exception& e) {
    throw NetworkError(std::string("parse error: ") + e.what());
  }
  try {
    PerUnitBase base;
    const json& jb = doc.at("bases");
    base.s_base_mva = jb.at("s_base_mva").get<double>();
    base.v_base_kv = jb.at("v_base_kv").get<double>();
    if (!(base.s_base_mva > 0.0) || !(base.v_base_kv > 0.0)) throw NetworkError("nonpositive base");

    std::vector<Bus> buses;
    for (const json& b : doc.at("buses")) {
      Bus bus;
      bus.id = b.at("id").get<int>();
      bus.is_slack = b.value("slack", false);
      if (b.contains("v_min_pu2")) {
        bus.v_min = b["v_min_pu2"].get<double>();
      } else {
        const double m = get_or(b, "v_min_pu", 0.9);
        bus.v_min = m * m;
      }
      if (b.contains("v_max_pu2")) {
        bus.v_max = b["v_max_pu2"].get<double>();
      } else {
        const double m = get_or(b, "v_max_pu", 1.1);
        bus.v_max = m * m;
      }
      buses.push_back(bus);
    }
    std::vector<Line> lines;
    for (const json& l : doc.at("lines")) {
      Line line;
      line.id = l.at("down").get<int>();
      line.up = l.at("up").get<int>();
      line.r = pu_or_physical(l, "r_pu", "r_ohm", Quantity::kImpedance, base, 0.0);
      line.x = pu_or_physical(l, "x_pu", "x_ohm", Quantity::kImpedance, base, 0.0);
      line.b = pu_or_physical(l, "b_pu", "b_siemens", Quantity::kAdmittance, base, 0.0);
      if (l.contains("i_max_pu2")) {
        line.i_max = json_number_or_inf(l, "i_max_pu2");
      } else if (l.contains("ampacity_a")) {
        const double i = to_per_unit(l["ampacity_a"].get<double>(), Quantity::kCurrent, base);
        line.i_max = i * i;
      }
      line.p_max = json_number_or_inf(l, "p_max_pu");
      line.q_max = json_number_or_inf(l, "q_max_pu");
      lines.push_back(line);
    }
    const double slack_v = get_or(doc, "slack_v_pu2", 1.0);
    RadialNetwork net(base, std::move(buses), std::move(lines), slack_v);

    if (doc.contains("ess_candidates")) {
      for (const json& c : doc["ess_candidates"]) {
        EssCandidate e;
        e.bus = c.at("bus").get<int>();
        if (!net.has_bus(e.bus) || e.bus == net.slack_bus()) {
          throw NetworkError("candidate bus " + std::to_string(e.bus) + " is not a non-slack bus");
        }
        e.r_min = pu_or_physical(c, "r_min_pu", "r_min_mva", Quantity::kPower, base, 0.0);
        e.r_max = pu_or_physical(c, "r_max_pu", "r_max_mva", Quantity::kPower, base, 0.0);
        e.c_min = pu_or_physical(c, "c_min_pu_h", "c_min_mwh", Quantity::kPower, base, 0.0);
        e.c_max = pu_or_physical(c, "c_max_pu_h", "c_max_mwh", Quantity::kPower, base, 0.0);
        e.cr_min = get_or(c, "cr_min_h", 1.0);
        e.e_min_frac = get_or(c, "e_min_frac", 0.1);
        e.e_max_frac = get_or(c, "e_max_frac", 0.9);
        if (!(0.0 <= e.r_min && e.r_min <= e.r_max) || !(0.0 <= e.c_min && e.c_min <= e.c_max) ||
            !(0.0 <= e.e_min_frac && e.e_min_frac < e.e_max_frac && e.e_max_frac <= 1.0) ||
            !(e.cr_min > 0.0)) {
          throw NetworkError("candidate at bus " + std::to_string(e.bus) + " has inconsistent bounds");
        }
        net.candidates.push_back(e);
      }
    }
    if (doc.contains("costs")) {
      const json& jc = doc["costs"];
      CostParams& k = net.costs;
      k.i_c = get_or(jc, "i_c", 0.0);
      k.i_p = get_or(jc, "i_p", 0.0);
      k.i_e = get_or(jc, "i_e", 0.0);
      k.w_d = get_or(jc, "w_d", 0.0);
      if (jc.contains("w_d_by_day")) {
        for (const auto& [key, val] : jc["w_d_by_day"].items()) k.w_d_by_day[std::stoi(key)] = val.get<double>();
      }
      k.w_l = get_or(jc, "w_l", 0.0);
      k.w_u = get_or(jc, "w_u", 1000.0 * k.w_l);
      k.horizon_years = get_or(jc, "horizon_years", 1.0);
      bool nonneg = k.i_c >= 0 && k.i_p >= 0 && k.i_e >= 0 && k.w_d >= 0 && k.w_l >= 0 &&
                    k.w_u >= 0 && k.horizon_years >= 0;
      for (const auto& [d, w] : k.w_d_by_day) nonneg = nonneg && w >= 0;
      if (!nonneg) throw NetworkError("costs must be nonnegative");
      if (!(k.w_u > k.w_l)) throw NetworkError("unserved-load weight must exceed the losses weight");
    }
    return net;
  } catch (const json::exception& e) {
    throw NetworkError(std::string("parse error: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw NetworkError(e.what());
  }
}

RadialNetwork load_network(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw NetworkError("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_network(ss.str());
}

std::string write_network(const RadialNetwork& net) {
  json doc;
  doc["bases"] = {{"s_base_mva", net.base().s_base_mva}, {"v_base_kv", net.base().v_base_kv}};
  doc["slack_v_pu2"] = net.slack_v();
  doc["buses"] = json::array();
  for (const Bus& b : net.buses()) {
    json jb = {{"id", b.id}, {"v_min_pu2", b.v_min}, {"v_max_pu2", b.v_max}};
    if (b.is_slack) jb["slack"] = true;
    doc["buses"].push_back(jb);
  }
  doc["lines"] = json::array();
  for (const Line& l : net.lines()) {
    doc["lines"].push_back({{"down", l.id},
                            {"up", l.up},
                            {"r_pu", l.r},
                            {"x_pu", l.x},
                            {"b_pu", l.b},
                            {"i_max_pu2", inf_or_number(l.i_max)},
                            {"p_max_pu", inf_or_number(l.p_max)},
                            {"q_max_pu", inf_or_number(l.q_max)}});
  }
  doc["ess_candidates"] = json::array();
  for (const EssCandidate& c : net.candidates) {
    doc["ess_candidates"].push_back({{"bus", c.bus},
                                     {"r_min_pu", c.r_min},
                                     {"r_max_pu", c.r_max},
                                     {"c_min_pu_h", c.c_min},
                                     {"c_max_pu_h", c.c_max},
                                     {"cr_min_h", c.cr_min},
                                     {"e_min_frac", c.e_min_frac},
                                     {"e_max_frac", c.e_max_frac}});
  }
  const CostParams& k = net.costs;
  json jc = {{"i_c", k.i_c}, {"i_p", k.i_p}, {"i_e", k.i_e}, {"w_d", k.w_d},
             {"w_l", k.w_l}, {"w_u", k.w_u}, {"horizon_years", k.horizon_years}};
  if (!k.w_d_by_day.empty()) {
    json by = json::object();
    for (const auto& [d, w] : k.w_d_by_day) by[std::to_string(d)] = w;
    jc["w_d_by_day"] = by;
  }
  doc["costs"] = jc;
  return doc.dump(2) + "\n";
}

bool operator==(const Bus& a, const Bus& b) {
  return a.id == b.id && a.is_slack == b.is_slack && a.v_min == b.v_min && a.v_max == b.v_max;
}

bool operator==(const Line& a, const Line& b) {
  return a.id == b.id && a.up == b.up && a.r == b.r && a.x == b.x && a.b == b.b &&
         a.i_max == b.i_max && a.p_max == b.p_max && a.q_max == b.q_max;
}

bool operator==(const EssCandidate& a, const EssCandidate& b) {
  return a.bus == b.bus && a.r_min == b.r_min && a.r_max == b.r_max && a.c_min == b.c_min &&
         a.c_max == b.c_max && a.cr_min == b.cr_min && a.e_min_frac == b.e_min_frac &&
         a.e_max_frac == b.e_max_frac;
}

bool operator==(const CostParams& a, const CostParams& b) {
  return a.i_c == b.i_c && a.i_p == b.i_p && a.i_e == b.i_e && a.w_d == b.w_d &&
         a.w_d_by_day == b.w_d_by_day && a.w_l == b.w_l && a.w_u == b.w_u &&
         a.horizon_years == b.horizon_years;
}

}  // namespace esplan

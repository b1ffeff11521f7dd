#include "esplan/scenarios.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <numeric>
#include <random>
#include <sstream>

#include "json.hpp"

namespace esplan {

using nlohmann::json;

void DayType::validate() const {
  const auto nb = static_cast<Eigen::Index>(bus_ids.size());
  if (p_forecast.rows() != nb || q_forecast.rows() != nb || q_forecast.cols() != p_forecast.cols()) {
    throw std::invalid_argument("day-type " + std::to_string(id) + ": forecast shape mismatch");
  }
  if (steps() < 1) throw std::invalid_argument("day-type needs at least one time step");
  if (!(delta_t_h > 0.0) || std::abs(steps() * delta_t_h - 24.0) > 1e-9) {
    throw std::invalid_argument("day-type " + std::to_string(id) + ": T * delta_t must be 24 h");
  }
  if (sigma.size() != nb || (sigma_q.size() != 0 && sigma_q.size() != nb)) {
    throw std::invalid_argument("day-type " + std::to_string(id) + ": sigma size mismatch");
  }
  if ((sigma.array() < 0.0).any() || (sigma_q.size() && (sigma_q.array() < 0.0).any()) ||
      sigma_pv < 0.0) {
    throw std::invalid_argument("sigma must be nonnegative");
  }
  if (pv_forecast.size() != 0 && pv_forecast.size() != steps()) {
    throw std::invalid_argument("PV profile length must equal T");
  }
  if (!(n_days >= 0.0) || n_days > 366.0) throw std::invalid_argument("n_days out of range");
}

void ScenarioSet::validate() const {
  if (scenarios.empty()) throw std::invalid_argument("empty scenario set");
  if (lambda.size() != scenarios.size()) throw std::invalid_argument("lambda size mismatch");
  double sum = 0.0;
  for (double l : lambda) {
    if (!(l > 0.0)) throw std::invalid_argument("probabilities must be positive");
    sum += l;
  }
  if (std::abs(sum - 1.0) > 1e-12) throw std::invalid_argument("probabilities must sum to 1");
  const auto nb = static_cast<Eigen::Index>(bus_ids.size());
  for (const auto& s : scenarios) {
    if (s.p.rows() != nb || s.q.rows() != nb || s.p.cols() != scenarios[0].p.cols() ||
        s.q.cols() != s.p.cols() || s.pv.size() != scenarios[0].pv.size()) {
      throw std::invalid_argument("scenario shape mismatch");
    }
  }
}

ScenarioSet generate_scenarios(const DayType& day, int n, std::uint64_t seed) {
  if (n < 1) throw std::invalid_argument("scenario count must be positive");
  day.validate();
  const Eigen::VectorXd& sq = day.sigma_q.size() ? day.sigma_q : day.sigma;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z(0.0, 1.0);
  ScenarioSet set;
  set.day_type = day.id;
  set.n_days = day.n_days;
  set.delta_t_h = day.delta_t_h;
  set.bus_ids = day.bus_ids;
  const auto nb = day.p_forecast.rows();
  const int T = day.steps();
  for (int k = 0; k < n; ++k) {
    Scenario s;
    s.p.resize(nb, T);
    s.q.resize(nb, T);
    // always draw, so the stream stays aligned when some sigma is zero
    for (Eigen::Index b = 0; b < nb; ++b) {
      for (int t = 0; t < T; ++t) {
        const double m = day.p_forecast(b, t);
        s.p(b, t) = m + z(rng) * day.sigma(b) * std::abs(m);
      }
    }
    for (Eigen::Index b = 0; b < nb; ++b) {
      for (int t = 0; t < T; ++t) {
        const double m = day.q_forecast(b, t);
        s.q(b, t) = m + z(rng) * sq(b) * std::abs(m);
      }
    }
    if (day.pv_forecast.size()) {
      s.pv.resize(T);
      for (int t = 0; t < T; ++t) {
        const double m = day.pv_forecast(t);
        s.pv(t) = m + z(rng) * day.sigma_pv * std::abs(m);
      }
    }
    set.scenarios.push_back(std::move(s));
  }
  set.lambda.assign(n, 1.0 / n);
  set.source_index.resize(n);
  std::iota(set.source_index.begin(), set.source_index.end(), 0);
  return set;
}

Eigen::VectorXd scenario_vector(const Scenario& s) {
  Eigen::VectorXd v(s.p.size() + s.q.size() + s.pv.size());
  Eigen::Index k = 0;
  for (Eigen::Index b = 0; b < s.p.rows(); ++b) {
    for (Eigen::Index t = 0; t < s.p.cols(); ++t) v(k++) = s.p(b, t);
  }
  for (Eigen::Index b = 0; b < s.q.rows(); ++b) {
    for (Eigen::Index t = 0; t < s.q.cols(); ++t) v(k++) = s.q(b, t);
  }
  for (Eigen::Index t = 0; t < s.pv.size(); ++t) v(k++) = s.pv(t);
  return v;
}

namespace {

struct Nearest {
  std::vector<int> near;  // position in medoid list
  std::vector<double> dn, ds;
};

Nearest nearest(const Eigen::MatrixXd& D, const std::vector<int>& med) {
  const int n = static_cast<int>(D.rows());
  Nearest out;
  out.near.assign(n, 0);
  out.dn.assign(n, std::numeric_limits<double>::infinity());
  out.ds.assign(n, std::numeric_limits<double>::infinity());
  for (int o = 0; o < n; ++o) {
    for (std::size_t m = 0; m < med.size(); ++m) {
      const double d = D(o, med[m]);
      if (d < out.dn[o]) {
        out.ds[o] = out.dn[o];
        out.dn[o] = d;
        out.near[o] = static_cast<int>(m);
      } else if (d < out.ds[o]) {
        out.ds[o] = d;
      }
    }
  }
  return out;
}

}  // namespace

KMedoidsResult kmedoids(const std::vector<Eigen::VectorXd>& points, int k, std::uint64_t seed) {
  const int n = static_cast<int>(points.size());
  if (k < 1 || k > n) throw std::invalid_argument("k out of range");
  Eigen::MatrixXd D(n, n);
  for (int i = 0; i < n; ++i) {
    D(i, i) = 0.0;
    for (int j = i + 1; j < n; ++j) D(i, j) = D(j, i) = (points[i] - points[j]).norm();
  }
  // k-medoids++ seeding
  std::mt19937_64 rng(seed);
  std::vector<int> med{std::uniform_int_distribution<int>(0, n - 1)(rng)};
  std::vector<char> is_med(n, 0);
  is_med[med[0]] = 1;
  std::vector<double> dmin(n);
  for (int o = 0; o < n; ++o) dmin[o] = D(o, med[0]);
  while (static_cast<int>(med.size()) < k) {
    double total = 0.0;
    for (int o = 0; o < n; ++o) total += is_med[o] ? 0.0 : dmin[o] * dmin[o];
    int pick = -1;
    if (total > 0.0) {
      double r = std::uniform_real_distribution<double>(0.0, total)(rng);
      for (int o = 0; o < n; ++o) {
        if (is_med[o]) continue;
        r -= dmin[o] * dmin[o];
        if (r <= 0.0 && dmin[o] > 0.0) {
          pick = o;
          break;
        }
      }
    }
    if (pick < 0) {  // duplicates only, or rounding at the tail
      for (int o = n - 1; o >= 0; --o) {
        if (!is_med[o] && (pick < 0 || dmin[o] > dmin[pick])) pick = o;
      }
    }
    med.push_back(pick);
    is_med[pick] = 1;
    for (int o = 0; o < n; ++o) dmin[o] = std::min(dmin[o], D(o, pick));
  }

  // swap phase: best improving swap per pass, O(n^2) per pass
  for (int pass = 0; pass < 100 * n; ++pass) {
    const Nearest nr = nearest(D, med);
    double best_delta = -1e-12;
    int best_m = -1, best_c = -1;
    std::vector<double> delta(k);
    for (int c = 0; c < n; ++c) {
      if (is_med[c]) continue;
      std::fill(delta.begin(), delta.end(), 0.0);
      double shared = 0.0;
      for (int o = 0; o < n; ++o) {
        const double doc = D(o, c);
        const double base = std::min(doc, nr.dn[o]) - nr.dn[o];
        shared += base;
        delta[nr.near[o]] += (std::min(doc, nr.ds[o]) - nr.dn[o]) - base;
      }
      for (int m = 0; m < k; ++m) {
        const double d = shared + delta[m];
        if (d < best_delta) {
          best_delta = d;
          best_m = m;
          best_c = c;
        }
      }
    }
    if (best_m < 0) break;
    is_med[med[best_m]] = 0;
    med[best_m] = best_c;
    is_med[best_c] = 1;
  }

  std::sort(med.begin(), med.end());
  KMedoidsResult res;
  res.medoids = med;
  const Nearest nr = nearest(D, med);
  res.assignment = nr.near;
  res.sizes.assign(k, 0);
  for (int o = 0; o < n; ++o) {
    ++res.sizes[nr.near[o]];
    res.cost += nr.dn[o];
  }
  return res;
}

double empirical_cdf_inverse(const std::vector<double>& values, const std::vector<double>& probs,
                             double y) {
  if (values.empty()) throw std::invalid_argument("empty sample");
  if (values.size() != probs.size()) throw std::invalid_argument("value/probability size mismatch");
  if (!(y >= 0.0 && y <= 1.0)) throw std::invalid_argument("quantile outside [0, 1]");
  std::vector<int> order(values.size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return values[a] < values[b]; });
  double cum = 0.0;
  for (int i : order) {
    cum += probs[i];
    if (cum >= y - 1e-12) return values[i];
  }
  return values[order.back()];
}

std::vector<double> ReductionConfig::quantiles() const {
  std::vector<double> y(n_q);
  for (int q = 0; q < n_q; ++q) {
    y[q] = n_q == 1 ? 0.5 * (quantile_lo + quantile_hi)
                    : quantile_lo + (quantile_hi - quantile_lo) * q / (n_q - 1);
  }
  return y;
}

std::vector<double> ReductionConfig::weight_vector() const {
  if (weights.empty()) return std::vector<double>(n_q, 1.0 / n_q);
  return weights;
}

void ReductionConfig::validate() const {
  if (n_q < 1) throw std::invalid_argument("n_q must be positive");
  if (!(0.0 <= quantile_lo && quantile_lo < quantile_hi && quantile_hi <= 1.0)) {
    throw std::invalid_argument("need 0 <= quantile_lo < quantile_hi <= 1");
  }
  if (!weights.empty()) {
    if (static_cast<int>(weights.size()) != n_q) throw std::invalid_argument("weights need n_q entries");
    const double s = std::accumulate(weights.begin(), weights.end(), 0.0);
    if (std::abs(s - 1.0) > 1e-12) throw std::invalid_argument("weights must sum to 1");
  }
  if (!(tolerance > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (max_k < 0) throw std::invalid_argument("max_k must be nonnegative");
}

namespace {

// Quantile table (check point x coordinate) of a set.
Eigen::MatrixXd quantile_table(const ScenarioSet& set, const std::vector<double>& ys) {
  const int n = set.size();
  std::vector<Eigen::VectorXd> vecs;
  vecs.reserve(n);
  for (const auto& s : set.scenarios) vecs.push_back(scenario_vector(s));
  const auto H = vecs.empty() ? 0 : vecs[0].size();
  Eigen::MatrixXd table(static_cast<Eigen::Index>(ys.size()), H);
  std::vector<int> order(n);
  for (Eigen::Index h = 0; h < H; ++h) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return vecs[a](h) < vecs[b](h); });
    for (std::size_t q = 0; q < ys.size(); ++q) {
      double cum = 0.0;
      double val = vecs[order.back()](h);
      for (int i : order) {
        cum += set.lambda[i];
        if (cum >= ys[q] - 1e-12) {
          val = vecs[i](h);
          break;
        }
      }
      table(static_cast<Eigen::Index>(q), h) = val;
    }
  }
  return table;
}

double distance_from_tables(const Eigen::MatrixXd& full, const Eigen::MatrixXd& red,
                            const std::vector<double>& w, int* skipped) {
  if (full.cols() != red.cols()) throw std::invalid_argument("scenario sets differ in H");
  double delta = 0.0;
  int skip = 0;
  for (Eigen::Index q = 0; q < full.rows(); ++q) {
    double sum = 0.0;
    int used = 0;
    for (Eigen::Index h = 0; h < full.cols(); ++h) {
      const double a = full(q, h);
      if (a == 0.0) {
        ++skip;
        continue;
      }
      const double r = (a - red(q, h)) / a;
      sum += r * r;
      ++used;
    }
    if (used == 0) throw std::domain_error("degenerate coordinate: every check-point quantile is zero");
    delta += w[q] * std::sqrt(sum / used);
  }
  if (skipped) *skipped = skip;
  return delta;
}

ScenarioSet subset(const ScenarioSet& full, const KMedoidsResult& km) {
  ScenarioSet out;
  out.day_type = full.day_type;
  out.n_days = full.n_days;
  out.delta_t_h = full.delta_t_h;
  out.bus_ids = full.bus_ids;
  out.lambda.assign(km.medoids.size(), 0.0);
  for (std::size_t o = 0; o < km.assignment.size(); ++o) out.lambda[km.assignment[o]] += full.lambda[o];
  for (int m : km.medoids) {
    out.scenarios.push_back(full.scenarios[m]);
    out.source_index.push_back(full.source_index.empty() ? m : full.source_index[m]);
  }
  // renormalize so the sum is one to the last bit
  const double s = std::accumulate(out.lambda.begin(), out.lambda.end(), 0.0);
  for (double& l : out.lambda) l /= s;
  return out;
}

}  // namespace

double cdf_distance(const ScenarioSet& full, const ScenarioSet& reduced, const ReductionConfig& cfg,
                    int* skipped) {
  cfg.validate();
  const auto ys = cfg.quantiles();
  return distance_from_tables(quantile_table(full, ys), quantile_table(reduced, ys),
                              cfg.weight_vector(), skipped);
}

ReductionResult reduce_scenarios(const ScenarioSet& full, const ReductionConfig& cfg) {
  full.validate();
  cfg.validate();
  const auto ys = cfg.quantiles();
  const auto w = cfg.weight_vector();
  const Eigen::MatrixXd full_table = quantile_table(full, ys);
  std::vector<Eigen::VectorXd> pts;
  for (const auto& s : full.scenarios) pts.push_back(scenario_vector(s));
  const int kmax = cfg.max_k > 0 ? std::min(cfg.max_k, full.size()) : full.size();

  ReductionResult best;
  double best_delta = std::numeric_limits<double>::infinity();
  std::vector<double> trace;
  for (int k = 1; k <= kmax; ++k) {
    const auto km = kmedoids(pts, k, cfg.seed);
    ScenarioSet red = subset(full, km);
    int skipped = 0;
    const double d = distance_from_tables(full_table, quantile_table(red, ys), w, &skipped);
    trace.push_back(d);
    if (d < best_delta) {
      best_delta = d;
      best.reduced = std::move(red);
      best.k = k;
      best.skipped = skipped;
    }
    if (d < cfg.tolerance) {
      best.trace = trace;
      return best;
    }
  }
  best.trace = trace;
  std::ostringstream msg;
  msg << "tolerance " << cfg.tolerance << " not reached within k = " << kmax << " (best "
      << best_delta << " at k = " << best.k << ")";
  throw ReductionError(msg.str(), std::move(best));
}

// ---- file formats

namespace {

Eigen::MatrixXd matrix_from(const json& j) {
  const auto rows = static_cast<Eigen::Index>(j.size());
  const auto cols = rows ? static_cast<Eigen::Index>(j[0].size()) : 0;
  Eigen::MatrixXd m(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (static_cast<Eigen::Index>(j[r].size()) != cols) throw std::invalid_argument("ragged matrix");
    for (Eigen::Index c = 0; c < cols; ++c) m(r, c) = j[r][c].get<double>();
  }
  return m;
}

json matrix_to(const Eigen::MatrixXd& m) {
  json out = json::array();
  for (Eigen::Index r = 0; r < m.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < m.cols(); ++c) row.push_back(m(r, c));
    out.push_back(row);
  }
  return out;
}

Eigen::VectorXd vector_from(const json& j, Eigen::Index n_if_scalar) {
  if (j.is_number()) return Eigen::VectorXd::Constant(n_if_scalar, j.get<double>());
  Eigen::VectorXd v(static_cast<Eigen::Index>(j.size()));
  for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = j[i].get<double>();
  return v;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

DayType parse_day_type(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    DayType d;
    d.id = j.at("id").get<int>();
    d.n_days = j.value("n_days", 1.0);
    d.delta_t_h = j.at("delta_t_h").get<double>();
    d.bus_ids = j.at("bus_ids").get<std::vector<int>>();
    d.p_forecast = matrix_from(j.at("p_forecast"));
    d.q_forecast = j.contains("q_forecast") ? matrix_from(j["q_forecast"])
                                            : Eigen::MatrixXd::Zero(d.p_forecast.rows(), d.p_forecast.cols());
    const auto nb = static_cast<Eigen::Index>(d.bus_ids.size());
    d.sigma = vector_from(j.at("sigma"), nb);
    if (j.contains("sigma_q")) d.sigma_q = vector_from(j["sigma_q"], nb);
    if (j.contains("pv_forecast")) d.pv_forecast = vector_from(j["pv_forecast"], 0);
    d.sigma_pv = j.value("sigma_pv", 0.0);
    d.validate();
    return d;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("day-type parse error: ") + e.what());
  }
}

DayType read_day_type(const std::string& path) { return parse_day_type(slurp(path)); }

ScenarioSet parse_scenarios(const std::string& json_text) {
  try {
    const json j = json::parse(json_text);
    ScenarioSet set;
    set.day_type = j.at("day_type").get<int>();
    set.n_days = j.value("n_days", 1.0);
    set.delta_t_h = j.at("delta_t_h").get<double>();
    set.bus_ids = j.at("bus_ids").get<std::vector<int>>();
    set.lambda = j.at("lambda").get<std::vector<double>>();
    for (const json& s : j.at("scenarios")) {
      Scenario sc;
      sc.p = matrix_from(s.at("p"));
      sc.q = s.contains("q") ? matrix_from(s["q"]) : Eigen::MatrixXd::Zero(sc.p.rows(), sc.p.cols());
      if (s.contains("pv")) sc.pv = vector_from(s["pv"], 0);
      set.scenarios.push_back(std::move(sc));
    }
    if (j.contains("source_index")) {
      set.source_index = j["source_index"].get<std::vector<int>>();
    } else {
      set.source_index.resize(set.scenarios.size());
      std::iota(set.source_index.begin(), set.source_index.end(), 0);
    }
    set.validate();
    return set;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("scenario parse error: ") + e.what());
  }
}

ScenarioSet read_scenarios(const std::string& path) { return parse_scenarios(slurp(path)); }

std::string write_scenarios_json(const ScenarioSet& set) {
  json j;
  j["day_type"] = set.day_type;
  j["n_days"] = set.n_days;
  j["delta_t_h"] = set.delta_t_h;
  j["bus_ids"] = set.bus_ids;
  j["lambda"] = set.lambda;
  j["source_index"] = set.source_index;
  j["scenarios"] = json::array();
  for (const auto& s : set.scenarios) {
    json js = {{"p", matrix_to(s.p)}, {"q", matrix_to(s.q)}};
    if (s.pv.size()) js["pv"] = std::vector<double>(s.pv.data(), s.pv.data() + s.pv.size());
    j["scenarios"].push_back(js);
  }
  return j.dump() + "\n";
}

std::string write_scenarios_csv(const ScenarioSet& set) {
  std::ostringstream os;
  os.precision(17);
  os << "scenario,lambda,kind,bus";
  for (int t = 0; t < set.steps(); ++t) os << ",t" << t;
  os << '\n';
  for (int k = 0; k < set.size(); ++k) {
    const auto& s = set.scenarios[k];
    auto row = [&](const char* kind, int bus, auto get) {
      os << k << ',' << set.lambda[k] << ',' << kind << ',' << bus;
      for (int t = 0; t < set.steps(); ++t) os << ',' << get(t);
      os << '\n';
    };
    for (std::size_t b = 0; b < set.bus_ids.size(); ++b) {
      row("p", set.bus_ids[b], [&](int t) { return s.p(static_cast<Eigen::Index>(b), t); });
    }
    for (std::size_t b = 0; b < set.bus_ids.size(); ++b) {
      row("q", set.bus_ids[b], [&](int t) { return s.q(static_cast<Eigen::Index>(b), t); });
    }
    if (s.pv.size()) row("pv", 0, [&](int t) { return s.pv(t); });
  }
  return os.str();
}

}  // namespace esplan

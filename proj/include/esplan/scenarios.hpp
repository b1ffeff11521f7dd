#pragma once

// Prosumption scenarios per day-type: Gaussian generation around a
// forecast and K-medoids reduction checked by a quantile CDF distance.

#include <Eigen/Dense>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace esplan {

struct DayType {
  int id = 0;
  double n_days = 1.0;
  double delta_t_h = 1.0;
  std::vector<int> bus_ids;
  Eigen::MatrixXd p_forecast;  // bus x T, pu, load convention
  Eigen::MatrixXd q_forecast;
  Eigen::VectorXd sigma;       // relative std per bus
  Eigen::VectorXd sigma_q;     // defaults to sigma when empty
  Eigen::VectorXd pv_forecast;  // optional shared PV block (T), clustering only
  double sigma_pv = 0.0;

  int steps() const { return static_cast<int>(p_forecast.cols()); }
  /// Throws std::invalid_argument on shape or invariant problems.
  void validate() const;
};

struct Scenario {
  Eigen::MatrixXd p, q;  // bus x T
  Eigen::VectorXd pv;    // empty when the day-type has no PV block
};

struct ScenarioSet {
  int day_type = 0;
  double n_days = 1.0;
  double delta_t_h = 1.0;
  std::vector<int> bus_ids;
  std::vector<Scenario> scenarios;
  std::vector<double> lambda;
  std::vector<int> source_index;  // position in the full set, after reduction

  int size() const { return static_cast<int>(scenarios.size()); }
  int steps() const { return scenarios.empty() ? 0 : static_cast<int>(scenarios[0].p.cols()); }
  /// Probabilities positive and summing to one, consistent shapes.
  void validate() const;
};

ScenarioSet generate_scenarios(const DayType& day, int n, std::uint64_t seed);

/// Flattened clustering coordinates: active rows, reactive rows, then PV.
Eigen::VectorXd scenario_vector(const Scenario& s);

struct KMedoidsResult {
  std::vector<int> medoids;     // indices into the input, ascending
  std::vector<int> assignment;  // position in `medoids` for every point
  std::vector<int> sizes;
  double cost = 0.0;            // sum of distances to assigned medoids
};

KMedoidsResult kmedoids(const std::vector<Eigen::VectorXd>& points, int k, std::uint64_t seed);

/// Smallest value whose cumulative probability reaches y.
double empirical_cdf_inverse(const std::vector<double>& values, const std::vector<double>& probs,
                             double y);

struct ReductionConfig {
  int n_q = 5;
  double quantile_lo = 0.05;
  double quantile_hi = 0.95;
  std::vector<double> weights;  // empty -> uniform
  double tolerance = 0.05;
  int max_k = 0;                // 0 -> size of the full set
  std::uint64_t seed = 1;

  std::vector<double> quantiles() const;
  std::vector<double> weight_vector() const;
  void validate() const;
};

/// Relative quantile distance between the full set's CDFs and the reduced
/// set's. Coordinates whose full-set quantile is zero are skipped for that
/// check point and counted in *skipped; throws std::domain_error
/// ("degenerate coordinate") if a check point has nothing left.
double cdf_distance(const ScenarioSet& full, const ScenarioSet& reduced, const ReductionConfig& cfg,
                    int* skipped = nullptr);

struct ReductionResult {
  ScenarioSet reduced;
  int k = 0;
  std::vector<double> trace;  // distance for k = 1, 2, ...
  int skipped = 0;            // degenerate coordinates seen at the last k
};

struct ReductionError : std::runtime_error {
  ReductionError(const std::string& what, ReductionResult best)
      : std::runtime_error(what), best(std::move(best)) {}
  ReductionResult best;  // lowest distance found
};

ReductionResult reduce_scenarios(const ScenarioSet& full, const ReductionConfig& cfg);

// File formats.
DayType read_day_type(const std::string& path);
DayType parse_day_type(const std::string& json_text);
ScenarioSet read_scenarios(const std::string& path);
ScenarioSet parse_scenarios(const std::string& json_text);
std::string write_scenarios_json(const ScenarioSet& set);
/// One row per (scenario, kind, bus): scenario,lambda,kind,bus,t0..t{T-1}.
std::string write_scenarios_csv(const ScenarioSet& set);

}  // namespace esplan

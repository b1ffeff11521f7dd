// Primal-dual interior-point method for
//   minimize c'x  s.t.  A x = b,  h - G x in K,
// with K a product of nonnegative orthants and second-order cones, solved
// through the homogeneous self-dual embedding with Nesterov-Todd scaling and
// Mehrotra predictor-corrector steps. Rotated cones ||u||^2 <= w t enter as
// (w + t, w - t, 2u) in Q. Variables fixed by their bounds are eliminated
// before the solve; rows left without free variables are checked and dropped.

#include <Eigen/Dense>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "esplan/conic.hpp"

namespace esplan {
namespace {

using Vec = Eigen::VectorXd;
using SpMat = Eigen::SparseMatrix<double, Eigen::ColMajor, int>;
using Triplet = Eigen::Triplet<double, int>;

// Row of the standardized problem: sparse coefficients over free columns.
struct StdRow {
  std::vector<std::pair<int, double>> coef;
  double rhs = 0.0;
};

// Where each user-facing row or cone landed.
struct RowMap {
  enum Kind { kDropped, kEquality, kInequality } kind = kDropped;
  int index = -1;
  double sign = 1.0;  // multiplier = sign * (y or z)
};

struct ConeMap {
  int offset = -1;  // first row of the SOC block inside G, -1 if dropped
  int size = 0;
};

struct StandardForm {
  int n = 0;
  std::vector<int> col_of_var;  // -1 for eliminated
  std::vector<int> var_of_col;
  std::vector<double> fixed_value;
  Vec c;
  double obj_const = 0.0;
  std::vector<StdRow> eq;
  std::vector<StdRow> lp;        // G x <= h rows
  std::vector<StdRow> soc_rows;  // G rows of all cones, block after block
  std::vector<int> soc_sizes;
  std::vector<RowMap> row_map;
  std::vector<ConeMap> cone_map;
  bool trivially_infeasible = false;
};

double expr_fixed_part(const LinExpr& e, const StandardForm& sf,
                       std::vector<std::pair<int, double>>& free_terms) {
  double constant = e.constant();
  free_terms.clear();
  for (const auto& [v, a] : e.terms()) {
    const int col = sf.col_of_var[v];
    if (col < 0) {
      constant += a * sf.fixed_value[v];
    } else {
      free_terms.emplace_back(col, a);
    }
  }
  return constant;
}

StandardForm standardize(const ConicProgram& prog) {
  StandardForm sf;
  const int nv = prog.num_variables();
  sf.col_of_var.assign(nv, -1);
  sf.fixed_value.assign(nv, 0.0);
  for (int i = 0; i < nv; ++i) {
    const auto& var = prog.variables()[i];
    if (var.lb == var.ub) {
      sf.fixed_value[i] = var.lb;
    } else {
      if (var.binary) {
        throw std::invalid_argument("solve_continuous: binary variable '" + var.name +
                                    "' is not fixed");
      }
      sf.col_of_var[i] = sf.n++;
      sf.var_of_col.push_back(i);
    }
  }
  sf.c = Vec::Zero(sf.n);
  sf.obj_const = prog.objective().constant();
  for (const auto& [v, a] : prog.objective().terms()) {
    const int col = sf.col_of_var[v];
    if (col < 0) {
      sf.obj_const += a * sf.fixed_value[v];
    } else {
      sf.c[col] += a;
    }
  }

  std::vector<std::pair<int, double>> terms;
  sf.row_map.resize(prog.num_rows());
  for (int r = 0; r < prog.num_rows(); ++r) {
    const auto& row = prog.rows()[r];
    const double k = expr_fixed_part(row.expr, sf, terms);
    const double rhs = row.rhs - k;
    if (terms.empty()) {
      const double tol = 1e-9 * std::max(1.0, std::abs(row.rhs));
      const bool ok = row.sense == Sense::kEq   ? std::abs(rhs) <= tol
                      : row.sense == Sense::kLe ? rhs >= -tol
                                                : rhs <= tol;
      if (!ok) sf.trivially_infeasible = true;
      continue;
    }
    switch (row.sense) {
      case Sense::kEq:
        sf.row_map[r] = {RowMap::kEquality, static_cast<int>(sf.eq.size()), 1.0};
        sf.eq.push_back({terms, rhs});
        break;
      case Sense::kLe:
        sf.row_map[r] = {RowMap::kInequality, static_cast<int>(sf.lp.size()), 1.0};
        sf.lp.push_back({terms, rhs});
        break;
      case Sense::kGe: {
        for (auto& t : terms) t.second = -t.second;
        sf.row_map[r] = {RowMap::kInequality, static_cast<int>(sf.lp.size()), 1.0};
        sf.lp.push_back({terms, -rhs});
        break;
      }
    }
  }
  for (int col = 0; col < sf.n; ++col) {
    const auto& var = prog.variables()[sf.var_of_col[col]];
    if (std::isfinite(var.lb)) sf.lp.push_back({{{col, -1.0}}, -var.lb});
    if (std::isfinite(var.ub)) sf.lp.push_back({{{col, 1.0}}, var.ub});
  }

  // Cones: s = (w + t, w - t, 2 u) = h - G x.
  sf.cone_map.resize(prog.num_cones());
  int offset = 0;
  for (int k = 0; k < prog.num_cones(); ++k) {
    const auto& cone = prog.cones()[k];
    std::vector<LinExpr> comps;
    comps.reserve(cone.u.size() + 2);
    comps.push_back(cone.w + cone.t);
    comps.push_back(cone.w - cone.t);
    for (const auto& u : cone.u) comps.push_back(2.0 * u);
    std::vector<StdRow> block;
    bool any_free = false;
    std::vector<double> constant_vals;
    for (auto& e : comps) {
      e.compact();
      const double kpart = expr_fixed_part(e, sf, terms);
      any_free = any_free || !terms.empty();
      StdRow row;
      for (const auto& [col, a] : terms) row.coef.emplace_back(col, -a);
      row.rhs = kpart;
      constant_vals.push_back(kpart);
      block.push_back(std::move(row));
    }
    if (!any_free) {
      double tail = 0.0;
      for (std::size_t j = 1; j < constant_vals.size(); ++j) tail += constant_vals[j] * constant_vals[j];
      if (constant_vals[0] < std::sqrt(tail) - 1e-9 * std::max(1.0, constant_vals[0])) {
        sf.trivially_infeasible = true;
      }
      continue;
    }
    sf.cone_map[k] = {offset, static_cast<int>(block.size())};
    offset += static_cast<int>(block.size());
    sf.soc_sizes.push_back(static_cast<int>(block.size()));
    for (auto& row : block) sf.soc_rows.push_back(std::move(row));
  }
  return sf;
}

// ---------------------------------------------------------------------------
// Cone algebra on the product cone: [lp orthant | soc_1 | soc_2 | ...].

struct Cones {
  int lp = 0;
  std::vector<int> soc;      // sizes
  std::vector<int> soc_off;  // offsets into the full slack vector
  int m = 0;
  int degree() const { return lp + static_cast<int>(soc.size()); }
};

// Nesterov-Todd scaling: W z = W^{-1} s = lambda.
struct Scaling {
  Vec lp_w;                          // diagonal
  std::vector<double> eta;           // per SOC
  std::vector<Vec> wbar;             // per SOC, wbar' J wbar = 1
  std::vector<Eigen::MatrixXd> w2;   // per SOC, W^2 (dense)
  Vec lambda;
};

double soc_det(const double* v, int q) {
  double t = 0.0;
  for (int i = 1; i < q; ++i) t += v[i] * v[i];
  return v[0] * v[0] - t;
}

bool compute_scaling(const Cones& cones, const Vec& s, const Vec& z, Scaling& W) {
  W.lp_w.resize(cones.lp);
  W.lambda.resize(cones.m);
  for (int i = 0; i < cones.lp; ++i) {
    if (!(s[i] > 0.0) || !(z[i] > 0.0)) return false;
    W.lp_w[i] = std::sqrt(s[i] / z[i]);
    W.lambda[i] = std::sqrt(s[i] * z[i]);
  }
  const std::size_t ns = cones.soc.size();
  W.eta.resize(ns);
  W.wbar.resize(ns);
  W.w2.resize(ns);
  for (std::size_t k = 0; k < ns; ++k) {
    const int q = cones.soc[k];
    const int o = cones.soc_off[k];
    const double sdet = soc_det(s.data() + o, q);
    const double zdet = soc_det(z.data() + o, q);
    if (!(sdet > 0.0) || !(zdet > 0.0) || s[o] <= 0.0 || z[o] <= 0.0) return false;
    const double sn = std::sqrt(sdet);
    const double zn = std::sqrt(zdet);
    Vec sb = s.segment(o, q) / sn;
    Vec zb = z.segment(o, q) / zn;
    const double dot = sb.dot(zb);
    const double gamma = std::sqrt((1.0 + dot) / 2.0);
    Vec wb(q);
    wb[0] = (sb[0] + zb[0]) / (2.0 * gamma);
    for (int i = 1; i < q; ++i) wb[i] = (sb[i] - zb[i]) / (2.0 * gamma);
    const double eta = std::sqrt(sn / zn);
    W.eta[k] = eta;
    W.wbar[k] = wb;
    Eigen::MatrixXd Wm(q, q);
    Wm(0, 0) = wb[0];
    for (int i = 1; i < q; ++i) {
      Wm(0, i) = Wm(i, 0) = wb[i];
      for (int j = 1; j < q; ++j) {
        Wm(i, j) = (i == j ? 1.0 : 0.0) + wb[i] * wb[j] / (1.0 + wb[0]);
      }
    }
    Wm *= eta;
    W.w2[k] = Wm * Wm;
    W.lambda.segment(o, q) = Wm * z.segment(o, q);
  }
  return true;
}

// out = W v
Vec apply_w(const Cones& cones, const Scaling& W, const Vec& v) {
  Vec out(cones.m);
  for (int i = 0; i < cones.lp; ++i) out[i] = W.lp_w[i] * v[i];
  for (std::size_t k = 0; k < cones.soc.size(); ++k) {
    const int q = cones.soc[k];
    const int o = cones.soc_off[k];
    const Vec& w = W.wbar[k];
    const double w0 = w[0];
    double w1v1 = 0.0;
    for (int i = 1; i < q; ++i) w1v1 += w[i] * v[o + i];
    out[o] = W.eta[k] * (w0 * v[o] + w1v1);
    const double coef = v[o] + w1v1 / (1.0 + w0);
    for (int i = 1; i < q; ++i) out[o + i] = W.eta[k] * (v[o + i] + coef * w[i]);
  }
  return out;
}

// out = W^{-1} v  (W is symmetric, so this is also W^{-T} v)
Vec apply_winv(const Cones& cones, const Scaling& W, const Vec& v) {
  Vec out(cones.m);
  for (int i = 0; i < cones.lp; ++i) out[i] = v[i] / W.lp_w[i];
  for (std::size_t k = 0; k < cones.soc.size(); ++k) {
    const int q = cones.soc[k];
    const int o = cones.soc_off[k];
    const Vec& w = W.wbar[k];
    const double w0 = w[0];
    double w1v1 = 0.0;
    for (int i = 1; i < q; ++i) w1v1 += w[i] * v[o + i];
    // J Wbar J v
    out[o] = (w0 * v[o] - w1v1) / W.eta[k];
    const double coef = -v[o] + w1v1 / (1.0 + w0);
    for (int i = 1; i < q; ++i) out[o + i] = (v[o + i] + coef * w[i]) / W.eta[k];
  }
  return out;
}

// u o v
Vec jordan(const Cones& cones, const Vec& u, const Vec& v) {
  Vec out(cones.m);
  for (int i = 0; i < cones.lp; ++i) out[i] = u[i] * v[i];
  for (std::size_t k = 0; k < cones.soc.size(); ++k) {
    const int q = cones.soc[k];
    const int o = cones.soc_off[k];
    out[o] = u.segment(o, q).dot(v.segment(o, q));
    for (int i = 1; i < q; ++i) out[o + i] = u[o] * v[o + i] + v[o] * u[o + i];
  }
  return out;
}

// x such that lambda o x = r
Vec jordan_solve(const Cones& cones, const Vec& lambda, const Vec& r) {
  Vec out(cones.m);
  for (int i = 0; i < cones.lp; ++i) out[i] = r[i] / lambda[i];
  for (std::size_t k = 0; k < cones.soc.size(); ++k) {
    const int q = cones.soc[k];
    const int o = cones.soc_off[k];
    const double l0 = lambda[o];
    double l1r1 = 0.0;
    for (int i = 1; i < q; ++i) l1r1 += lambda[o + i] * r[o + i];
    const double det = soc_det(lambda.data() + o, q);
    const double x0 = (l0 * r[o] - l1r1) / det;
    out[o] = x0;
    for (int i = 1; i < q; ++i) out[o + i] = (r[o + i] - x0 * lambda[o + i]) / l0;
  }
  return out;
}

Vec identity_element(const Cones& cones) {
  Vec e = Vec::Zero(cones.m);
  for (int i = 0; i < cones.lp; ++i) e[i] = 1.0;
  for (int o : cones.soc_off) e[o] = 1.0;
  return e;
}

// Largest alpha >= 0 with v + alpha d in the (closed) cone.
double max_step(const Cones& cones, const Vec& v, const Vec& d) {
  double amax = kInf;
  for (int i = 0; i < cones.lp; ++i) {
    if (d[i] < 0.0) amax = std::min(amax, -v[i] / d[i]);
  }
  for (std::size_t k = 0; k < cones.soc.size(); ++k) {
    const int q = cones.soc[k];
    const int o = cones.soc_off[k];
    const double v0 = v[o];
    const double d0 = d[o];
    double a = d0 * d0, b = v0 * d0, c = v0 * v0;
    for (int i = 1; i < q; ++i) {
      a -= d[o + i] * d[o + i];
      b -= v[o + i] * d[o + i];
      c -= v[o + i] * v[o + i];
    }
    c = std::max(c, 0.0);
    double root = kInf;
    if (a < 0.0) {
      const double s = std::sqrt(std::max(b * b - a * c, 0.0));
      root = b > 0.0 ? (b + s) / (-a) : c / (s - b);
    } else if (a > 0.0) {
      if (b < 0.0) {
        const double disc = b * b - a * c;
        if (disc >= 0.0) root = c / (-b + std::sqrt(disc));
      }
    } else if (b < 0.0) {
      root = -c / (2.0 * b);
    }
    if (d0 < 0.0) root = std::min(root, -v0 / d0);
    amax = std::min(amax, root);
  }
  return amax;
}

// Shifts v into the interior: v + (1 + alpha) e when v is not strictly inside.
void shift_into_cone(const Cones& cones, Vec& v) {
  double worst = kInf;
  for (int i = 0; i < cones.lp; ++i) worst = std::min(worst, v[i]);
  for (std::size_t k = 0; k < cones.soc.size(); ++k) {
    const int q = cones.soc[k];
    const int o = cones.soc_off[k];
    worst = std::min(worst, v[o] - v.segment(o + 1, q - 1).norm());
  }
  if (cones.m == 0 || worst > 1e-8) return;
  v += (1.0 - worst) * identity_element(cones);
}

// ---------------------------------------------------------------------------

// Iterates within this factor of every tolerance are accepted when the
// solver can make no further progress.
constexpr double kReducedAccuracy = 100.0;

class InteriorPoint {
 public:
  InteriorPoint(SpMat A, Vec b, SpMat G, Vec h, Vec c, Cones cones, const SolverOptions& opt)
      : A_(std::move(A)), b_(std::move(b)), G_(std::move(G)), h_(std::move(h)), c_(std::move(c)),
        cones_(std::move(cones)), opt_(opt) {
    n_ = static_cast<int>(c_.size());
    p_ = static_cast<int>(b_.size());
    m_ = cones_.m;
    At_ = A_.transpose();
    Gt_ = G_.transpose();
  }

  struct Output {
    SolveStatus status = SolveStatus::kNumericalFailure;
    Vec x, y, z, s;
    int iterations = 0;
  };

  Output run();

 private:
  void build_static_pattern();
  bool factor(const Scaling* W);
  bool factor_with(const Scaling* W, double delta);
  void kkt_multiply(const Scaling* W, const Vec& v, Vec& out) const;
  Vec kkt_solve(const Scaling* W, const Vec& rhs) const;
  Vec ldlt_solve(const Vec& b) const;

  SpMat A_;
  Vec b_;
  SpMat G_;
  Vec h_, c_;
  SpMat At_, Gt_;
  Cones cones_;
  SolverOptions opt_;
  int n_ = 0, p_ = 0, m_ = 0;

  std::vector<Triplet> static_trips_;
  Eigen::SimplicialLDLT<SpMat, Eigen::Upper, Eigen::AMDOrdering<int>> ldlt_;
  bool analyzed_ = false;
  double delta_ = 1e-8;
};

void InteriorPoint::build_static_pattern() {
  static_trips_.clear();
  for (int k = 0; k < A_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(A_, k); it; ++it) {
      static_trips_.emplace_back(static_cast<int>(it.col()), n_ + static_cast<int>(it.row()), it.value());
    }
  }
  for (int k = 0; k < G_.outerSize(); ++k) {
    for (SpMat::InnerIterator it(G_, k); it; ++it) {
      static_trips_.emplace_back(static_cast<int>(it.col()), n_ + p_ + static_cast<int>(it.row()),
                                 it.value());
    }
  }
}

bool InteriorPoint::factor(const Scaling* W) {
  // a zero pivot gets a second try with heavier regularization; refinement
  // against the exact operator absorbs the difference
  for (double delta : {delta_, 1e2 * delta_, 1e4 * delta_}) {
    if (factor_with(W, delta)) return true;
  }
  return false;
}

bool InteriorPoint::factor_with(const Scaling* W, double delta) {
  std::vector<Triplet> trips = static_trips_;
  for (int j = 0; j < n_; ++j) trips.emplace_back(j, j, delta);
  for (int i = 0; i < p_; ++i) trips.emplace_back(n_ + i, n_ + i, -delta);
  const int zo = n_ + p_;
  for (int i = 0; i < cones_.lp; ++i) {
    const double w2 = W ? W->lp_w[i] * W->lp_w[i] : 1.0;
    trips.emplace_back(zo + i, zo + i, -w2 - delta);
  }
  for (std::size_t k = 0; k < cones_.soc.size(); ++k) {
    const int q = cones_.soc[k];
    const int o = cones_.soc_off[k];
    for (int i = 0; i < q; ++i) {
      for (int j = i; j < q; ++j) {
        double v = W ? W->w2[k](i, j) : (i == j ? 1.0 : 0.0);
        if (i == j) v += delta;
        trips.emplace_back(zo + o + i, zo + o + j, -v);
      }
    }
  }
  const int N = n_ + p_ + m_;
  SpMat K(N, N);
  K.setFromTriplets(trips.begin(), trips.end());
  if (!analyzed_) {
    ldlt_.analyzePattern(K);
    analyzed_ = true;
  }
  ldlt_.factorize(K);
  return ldlt_.info() == Eigen::Success && ldlt_.vectorD().allFinite();
}

// Unregularized KKT product.
void InteriorPoint::kkt_multiply(const Scaling* W, const Vec& v, Vec& out) const {
  const Vec vx = v.head(n_);
  const Vec vy = v.segment(n_, p_);
  const Vec vz = v.tail(m_);
  out.resize(n_ + p_ + m_);
  out.head(n_) = At_ * vy + Gt_ * vz;
  out.segment(n_, p_) = A_ * vx;
  Vec w2z(m_);
  if (W) {
    w2z = apply_w(cones_, *W, apply_w(cones_, *W, vz));
  } else {
    w2z = vz;
  }
  out.tail(m_) = G_ * vx - w2z;
}

// Same steps as SimplicialLDLT::solve with the permutations done by index;
// the generic permutation product dominated the solve time.
Vec InteriorPoint::ldlt_solve(const Vec& b) const {
  const auto& p = ldlt_.permutationP().indices();
  const auto& pinv = ldlt_.permutationPinv().indices();
  const Eigen::Index N = b.size();
  Vec y(N);
  for (Eigen::Index i = 0; i < N; ++i) y[p[i]] = b[i];
  ldlt_.matrixL().solveInPlace(y);
  y.array() /= ldlt_.vectorD().array();
  ldlt_.matrixU().solveInPlace(y);
  Vec x(N);
  for (Eigen::Index i = 0; i < N; ++i) x[pinv[i]] = y[i];
  return x;
}

Vec InteriorPoint::kkt_solve(const Scaling* W, const Vec& rhs) const {
  Vec sol = ldlt_solve(rhs);
  Vec r;
  const double rn = std::max(1.0, rhs.lpNorm<Eigen::Infinity>());
  double best = kInf;
  Vec best_sol = sol;
  for (int it = 0; it < 10; ++it) {
    kkt_multiply(W, sol, r);
    r = rhs - r;
    const double err = r.lpNorm<Eigen::Infinity>();
    if (!std::isfinite(err) || err >= best) break;  // refinement stopped helping
    const bool slow = err > 0.25 * best;
    best = err;
    best_sol = sol;
    if (err <= 1e-13 * rn || slow) break;
    Vec corr = ldlt_solve(r);
    if (!corr.allFinite()) break;
    sol += corr;
  }
  return best_sol;
}

InteriorPoint::Output InteriorPoint::run() {
  Output out;
  const auto start = std::chrono::steady_clock::now();
  build_static_pattern();
  if (!factor(nullptr)) return out;

  const int N = n_ + p_ + m_;
  Vec x(n_), y(p_), z(m_), s(m_);
  {
    Vec rhs = Vec::Zero(N);
    rhs.segment(n_, p_) = b_;
    rhs.tail(m_) = h_;
    Vec sol = kkt_solve(nullptr, rhs);
    x = sol.head(n_);
    s = -sol.tail(m_);
    rhs.setZero();
    rhs.head(n_) = -c_;
    sol = kkt_solve(nullptr, rhs);
    y = sol.segment(n_, p_);
    z = sol.tail(m_);
  }
  shift_into_cone(cones_, s);
  shift_into_cone(cones_, z);
  double tau = 1.0, kappa = 1.0;

  const double nb = std::max(1.0, b_.norm());
  const double nh = std::max(1.0, h_.norm());
  const double nc = std::max(1.0, c_.norm());
  const int D = cones_.degree();
  const Vec e = identity_element(cones_);

  struct Snapshot {
    Vec x, y, z, s;
    double tau = 1.0, kappa = 1.0;
    double conv = kInf;
    int iter = 0;
  } best;

  Scaling W;
  for (int iter = 0; iter <= opt_.max_iterations; ++iter) {
    out.iterations = iter;
    const Vec Fx = At_ * y + Gt_ * z + c_ * tau;
    const Vec Fy = -(A_ * x) + b_ * tau;
    const Vec Fz = -(G_ * x) + h_ * tau - s;
    const double cx = c_.dot(x), by = b_.dot(y), hz = h_.dot(z);
    const double Ftau = -cx - by - hz - kappa;

    const double pres = std::max(Fy.norm() / nb, Fz.norm() / nh) / tau;
    const double dres = Fx.norm() / nc / tau;
    const double pcost = cx / tau;
    const double dcost = -(by + hz) / tau;
    const double gap = s.dot(z) / (tau * tau);
    double relgap = kInf;
    if (pcost < 0.0) {
      relgap = gap / -pcost;
    } else if (dcost > 0.0) {
      relgap = gap / dcost;
    }
    const double denom_gap = std::max({1.0, std::abs(pcost), std::abs(dcost)});
    const double pd_gap = std::abs(pcost - dcost) / denom_gap;

    if (opt_.verbose) {
      std::fprintf(stderr, "%3d pcost %+.9e dcost %+.9e gap %.2e pres %.2e dres %.2e k/t %.2e\n", iter,
                   pcost, dcost, gap, pres, dres, kappa / tau);
    }

    // conv <= 1 means every stopping test holds
    const double conv = std::max({pres / opt_.feastol, dres / opt_.feastol,
                                  std::min(gap / opt_.abstol, relgap / opt_.reltol),
                                  pd_gap / (10.0 * std::max(opt_.reltol, 1e-12))});
    if (conv <= 1.0) {
      out.status = SolveStatus::kOptimal;
      break;
    }
    if (conv < best.conv) {
      best = {x, y, z, s, tau, kappa, conv, iter};
    } else if (best.conv <= kReducedAccuracy &&
               (conv > 1e3 * best.conv || iter - best.iter >= 5)) {
      // lost accuracy near the end: fall back to the best iterate
      break;
    }
    // infeasibility certificates
    if (by + hz < 0.0) {
      const double ratio = (At_ * y + Gt_ * z).norm() / -(by + hz);
      if (ratio < opt_.feastol) {
        out.status = SolveStatus::kInfeasible;
        break;
      }
    }
    if (cx < 0.0) {
      const double ratio = std::max((A_ * x).norm(), (G_ * x + s).norm()) / -cx;
      if (ratio < opt_.feastol) {
        out.status = SolveStatus::kUnbounded;
        break;
      }
    }
    if (iter == opt_.max_iterations) {
      out.status = SolveStatus::kIterationLimit;
      break;
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (elapsed > opt_.time_limit_s) {
      out.status = SolveStatus::kIterationLimit;
      break;
    }

    if (!compute_scaling(cones_, s, z, W)) {
      out.status = SolveStatus::kNumericalFailure;
      break;
    }
    if (!factor(&W)) {
      out.status = SolveStatus::kNumericalFailure;
      break;
    }

    Vec rhs1(N);
    rhs1.head(n_) = -c_;
    rhs1.segment(n_, p_) = b_;
    rhs1.tail(m_) = h_;
    const Vec sol1 = kkt_solve(&W, rhs1);
    const Vec x1 = sol1.head(n_), y1 = sol1.segment(n_, p_), z1 = sol1.tail(m_);
    const double denom = kappa / tau - c_.dot(x1) - b_.dot(y1) - h_.dot(z1);

    const Vec& lam = W.lambda;
    auto direction = [&](double eta, const Vec& rc, double rkappa, Vec& dx, Vec& dy, Vec& dz,
                         Vec& ds, double& dtau, double& dkappa) {
      const Vec lrc = jordan_solve(cones_, lam, rc);
      const Vec wlrc = apply_w(cones_, W, lrc);  // W' (lambda \ rc)
      Vec rhs(N);
      rhs.head(n_) = -eta * Fx;
      rhs.segment(n_, p_) = eta * Fy;
      rhs.tail(m_) = eta * Fz - wlrc;
      const Vec sol2 = kkt_solve(&W, rhs);
      const Vec x2 = sol2.head(n_), y2 = sol2.segment(n_, p_), z2 = sol2.tail(m_);
      dtau = (-eta * Ftau + c_.dot(x2) + b_.dot(y2) + h_.dot(z2) + rkappa / tau) / denom;
      dx = x2 + dtau * x1;
      dy = y2 + dtau * y1;
      dz = z2 + dtau * z1;
      ds = wlrc - apply_w(cones_, W, apply_w(cones_, W, dz));
      dkappa = (rkappa - kappa * dtau) / tau;
    };

    // predictor
    Vec dxa, dya, dza, dsa;
    double dtaua = 0.0, dkappaa = 0.0;
    const Vec lamlam = jordan(cones_, lam, lam);
    direction(1.0, -lamlam, -tau * kappa, dxa, dya, dza, dsa, dtaua, dkappaa);
    double alpha_a = std::min({1.0, max_step(cones_, s, dsa), max_step(cones_, z, dza)});
    if (dtaua < 0.0) alpha_a = std::min(alpha_a, -tau / dtaua);
    if (dkappaa < 0.0) alpha_a = std::min(alpha_a, -kappa / dkappaa);

    const double mu = (s.dot(z) + tau * kappa) / (D + 1);
    const double sigma = std::clamp(std::pow(1.0 - alpha_a, 3), 0.0, 1.0);

    // corrector
    const Vec ws = apply_winv(cones_, W, dsa);
    const Vec wz = apply_w(cones_, W, dza);
    const Vec rc = -lamlam + sigma * mu * e - jordan(cones_, ws, wz);
    const double rkappa = -tau * kappa + sigma * mu - dtaua * dkappaa;
    Vec dx, dy, dz, ds;
    double dtau = 0.0, dkappa = 0.0;
    direction(1.0 - sigma, rc, rkappa, dx, dy, dz, ds, dtau, dkappa);

    auto step_length = [&]() {
      double a = std::min(max_step(cones_, s, ds), max_step(cones_, z, dz));
      if (dtau < 0.0) a = std::min(a, -tau / dtau);
      if (dkappa < 0.0) a = std::min(a, -kappa / dkappa);
      return std::min(1.0, 0.99 * a);
    };
    double alpha = step_length();
    if (alpha < 0.1) {
      // second-order term blocks the step: plain centering step instead
      const double sc = std::max(sigma, 0.5);
      direction(1.0 - sc, -lamlam + sc * mu * e, -tau * kappa + sc * mu, dx, dy, dz, ds, dtau,
                dkappa);
      alpha = step_length();
    }
    if (!(alpha > 0.0) || !dx.allFinite() || !dz.allFinite()) {
      out.status = SolveStatus::kNumericalFailure;
      break;
    }
    x += alpha * dx;
    y += alpha * dy;
    z += alpha * dz;
    s += alpha * ds;
    tau += alpha * dtau;
    kappa += alpha * dkappa;
    if (!(tau > 0.0) || !(kappa > 0.0)) {
      out.status = SolveStatus::kNumericalFailure;
      break;
    }
  }
  if (out.status != SolveStatus::kOptimal && out.status != SolveStatus::kInfeasible &&
      out.status != SolveStatus::kUnbounded && best.conv <= kReducedAccuracy) {
    x = best.x;
    y = best.y;
    z = best.z;
    s = best.s;
    tau = best.tau;
    kappa = best.kappa;
    out.iterations = best.iter;
    out.status = SolveStatus::kOptimal;
  }
  if (out.status == SolveStatus::kOptimal || out.status == SolveStatus::kIterationLimit ||
      out.status == SolveStatus::kNumericalFailure) {
    out.x = x / tau;
    out.y = y / tau;
    out.z = z / tau;
    out.s = s / tau;
  } else {
    out.x = x;
    out.y = y;
    out.z = z;
    out.s = s;
  }
  return out;
}

SpMat to_sparse(const std::vector<StdRow>& rows, int ncols) {
  std::vector<Triplet> trips;
  for (std::size_t r = 0; r < rows.size(); ++r) {
    for (const auto& [col, a] : rows[r].coef) trips.emplace_back(static_cast<int>(r), col, a);
  }
  SpMat M(static_cast<int>(rows.size()), ncols);
  M.setFromTriplets(trips.begin(), trips.end());
  return M;
}

double row_max_abs(const StdRow& r) {
  double m = 0.0;
  for (const auto& t : r.coef) m = std::max(m, std::abs(t.second));
  return m;
}

}  // namespace

SolveResult solve_continuous(const ConicProgram& program, const SolverOptions& options) {
  const auto start = std::chrono::steady_clock::now();
  StandardForm sf = standardize(program);
  SolveResult result;
  result.x.assign(program.num_variables(), 0.0);
  result.row_duals.assign(program.num_rows(), 0.0);
  result.cone_duals.assign(program.num_cones(), {});
  for (int i = 0; i < program.num_variables(); ++i) {
    if (sf.col_of_var[i] < 0) result.x[i] = sf.fixed_value[i];
  }
  auto finish = [&]() {
    result.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    return result;
  };
  if (sf.trivially_infeasible) {
    result.status = SolveStatus::kInfeasible;
    return finish();
  }

  const int n = sf.n;
  std::vector<StdRow> grows = sf.lp;
  grows.insert(grows.end(), sf.soc_rows.begin(), sf.soc_rows.end());
  Cones cones;
  cones.lp = static_cast<int>(sf.lp.size());
  cones.soc = sf.soc_sizes;
  int off = cones.lp;
  for (int q : cones.soc) {
    cones.soc_off.push_back(off);
    off += q;
  }
  cones.m = off;

  if (n == 0) {
    result.status = SolveStatus::kOptimal;
    result.objective = result.dual_objective = sf.obj_const;
    return finish();
  }

  // Ruiz equilibration of [A; G]; cone blocks share one row factor.
  Vec colscale = Vec::Ones(n);
  Vec eqscale = Vec::Ones(static_cast<Eigen::Index>(sf.eq.size()));
  Vec gscale = Vec::Ones(cones.m);
  std::vector<StdRow> eq = sf.eq;
  for (int pass = 0; pass < 15; ++pass) {
    Vec colmax = Vec::Zero(n);
    for (const auto& r : eq) {
      for (const auto& [j, a] : r.coef) colmax[j] = std::max(colmax[j], std::abs(a));
    }
    for (const auto& r : grows) {
      for (const auto& [j, a] : r.coef) colmax[j] = std::max(colmax[j], std::abs(a));
    }
    Vec rf_eq(static_cast<Eigen::Index>(eq.size()));
    for (std::size_t i = 0; i < eq.size(); ++i) {
      const double mx = row_max_abs(eq[i]);
      rf_eq[i] = mx > 0.0 ? 1.0 / std::sqrt(mx) : 1.0;
    }
    Vec rf_g(cones.m);
    for (int i = 0; i < cones.lp; ++i) {
      const double mx = row_max_abs(grows[i]);
      rf_g[i] = mx > 0.0 ? 1.0 / std::sqrt(mx) : 1.0;
    }
    for (std::size_t k = 0; k < cones.soc.size(); ++k) {
      double mx = 0.0;
      for (int i = 0; i < cones.soc[k]; ++i) mx = std::max(mx, row_max_abs(grows[cones.soc_off[k] + i]));
      const double f = mx > 0.0 ? 1.0 / std::sqrt(mx) : 1.0;
      for (int i = 0; i < cones.soc[k]; ++i) rf_g[cones.soc_off[k] + i] = f;
    }
    Vec cf(n);
    for (int j = 0; j < n; ++j) cf[j] = colmax[j] > 0.0 ? 1.0 / std::sqrt(colmax[j]) : 1.0;
    double worst = 0.0;
    for (int j = 0; j < n; ++j) worst = std::max(worst, std::abs(1.0 - colmax[j]));
    for (std::size_t i = 0; i < eq.size(); ++i) {
      for (auto& [j, a] : eq[i].coef) a *= rf_eq[i] * cf[j];
      eq[i].rhs *= rf_eq[i];
    }
    for (int i = 0; i < cones.m; ++i) {
      for (auto& [j, a] : grows[i].coef) a *= rf_g[i] * cf[j];
      grows[i].rhs *= rf_g[i];
    }
    colscale = colscale.cwiseProduct(cf);
    eqscale = eqscale.cwiseProduct(rf_eq);
    gscale = gscale.cwiseProduct(rf_g);
    if (worst < 1e-3 && pass > 2) break;
  }
  Vec c = sf.c.cwiseProduct(colscale);
  const double cscale = std::max(1.0, c.lpNorm<Eigen::Infinity>());
  c /= cscale;

  Vec b(static_cast<Eigen::Index>(eq.size()));
  for (std::size_t i = 0; i < eq.size(); ++i) b[i] = eq[i].rhs;
  Vec h(cones.m);
  for (int i = 0; i < cones.m; ++i) h[i] = grows[i].rhs;

  InteriorPoint ipm(to_sparse(eq, n), b, to_sparse(grows, n), h, c, cones, options);
  auto out = ipm.run();
  result.status = out.status;
  result.iterations = out.iterations;

  // Unscale.
  const Vec x = out.x.cwiseProduct(colscale);
  const Vec y = cscale * out.y.cwiseProduct(eqscale);
  const Vec z = cscale * out.z.cwiseProduct(gscale);
  for (int j = 0; j < n; ++j) result.x[sf.var_of_col[j]] = x[j];
  for (int r = 0; r < program.num_rows(); ++r) {
    const auto& rm = sf.row_map[r];
    if (rm.kind == RowMap::kEquality) result.row_duals[r] = rm.sign * y[rm.index];
    if (rm.kind == RowMap::kInequality) result.row_duals[r] = rm.sign * z[rm.index];
  }
  for (int k = 0; k < program.num_cones(); ++k) {
    const auto& cm = sf.cone_map[k];
    if (cm.offset < 0) continue;
    const int o = cones.lp + cm.offset;
    result.cone_duals[k].assign(z.data() + o, z.data() + o + cm.size);
  }

  // Objectives and residuals in user units.
  result.objective = sf.c.dot(x) + sf.obj_const;
  double dual = sf.obj_const;
  for (std::size_t i = 0; i < sf.eq.size(); ++i) dual -= sf.eq[i].rhs * y[i];
  std::vector<StdRow> graw = sf.lp;
  graw.insert(graw.end(), sf.soc_rows.begin(), sf.soc_rows.end());
  for (int i = 0; i < cones.m; ++i) dual -= graw[i].rhs * z[i];
  result.dual_objective = dual;

  double pres = 0.0;
  for (const auto& r : sf.eq) {
    double v = -r.rhs;
    for (const auto& [j, a] : r.coef) v += a * x[j];
    pres = std::max(pres, std::abs(v));
  }
  Vec slack(cones.m);
  for (int i = 0; i < cones.m; ++i) {
    double v = graw[i].rhs;
    for (const auto& [j, a] : graw[i].coef) v -= a * x[j];
    slack[i] = v;
  }
  for (int i = 0; i < cones.lp; ++i) pres = std::max(pres, -slack[i]);
  for (std::size_t k = 0; k < cones.soc.size(); ++k) {
    const int o = cones.soc_off[k];
    pres = std::max(pres, slack.segment(o + 1, cones.soc[k] - 1).norm() - slack[o]);
  }
  result.primal_residual = pres;
  Vec dres = sf.c;
  for (std::size_t i = 0; i < sf.eq.size(); ++i) {
    for (const auto& [j, a] : sf.eq[i].coef) dres[j] += a * y[i];
  }
  for (int i = 0; i < cones.m; ++i) {
    for (const auto& [j, a] : graw[i].coef) dres[j] += a * z[i];
  }
  result.dual_residual = dres.lpNorm<Eigen::Infinity>();
  result.complementarity = out.s.cwiseProduct(gscale.cwiseInverse()).dot(z);
  return finish();
}

}  // namespace esplan

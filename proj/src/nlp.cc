#include "ecolane/nlp.h"

#include <Eigen/SparseCholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace ecolane::nlp {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

using SparseMatrix = Eigen::SparseMatrix<double>;

// Algorithm constants.
constexpr double kBoundPush = 1e-2;
constexpr double kBarrierTolFactor = 10.0;
constexpr double kMuLinearDecrease = 0.2;
constexpr double kMuSuperlinearPower = 1.5;
constexpr double kTauMin = 0.99;
constexpr double kArmijo = 1e-4;
constexpr double kPenaltyRho = 0.1;
constexpr double kMultiplierSafeguard = 1e10;
constexpr double kDualRegularization = 1e-8;
constexpr double kMaxPenalty = 1e12;
constexpr int kMaxBacktracks = 40;
constexpr int kStallWindow = 30;
// Degenerate problems (many bounds active at once, as when a plan rests at
// standstill) can creep along just above the tolerance for hundreds of
// iterations. An iterate this close for this long is accepted.
constexpr double kAcceptableFactor = 10.0;
constexpr int kAcceptableIters = 15;
constexpr int kMaxSecondOrderCorrections = 4;
constexpr double kElasticProximity = 1e-6;

bool all_finite(const Vector& v) { return v.allFinite(); }

// Problem callbacks with finite-difference fallbacks for missing derivatives.
class Evaluator {
 public:
  explicit Evaluator(const Problem& p) : p_(p) {}

  const Problem& problem() const { return p_; }

  double objective(const Vector& x) const {
    const double f = p_.objective(x);
    if (!std::isfinite(f)) throw EvaluationError("objective is not finite", x);
    return f;
  }

  void gradient(const Vector& x, Vector& g) const {
    g.resize(p_.num_variables);
    if (p_.gradient) {
      p_.gradient(x, g);
    } else {
      Vector xp = x;
      for (int j = 0; j < p_.num_variables; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        const double fp = p_.objective(xp);
        xp[j] = x[j] - h;
        const double fm = p_.objective(xp);
        xp[j] = x[j];
        g[j] = (fp - fm) / (2.0 * h);
      }
    }
    if (!all_finite(g)) throw EvaluationError("objective gradient is not finite", x);
  }

  void constraints(const Vector& x, Vector& c) const {
    c.resize(p_.num_constraints());
    if (p_.num_constraints() == 0) return;
    p_.constraints(x, c);
    if (!all_finite(c)) throw EvaluationError("constraint value is not finite", x);
  }

  SparseMatrix jacobian(const Vector& x) const {
    const int m = p_.num_constraints();
    const int n = p_.num_variables;
    SparseMatrix jac(m, n);
    if (m == 0) return jac;
    std::vector<Triplet> entries;
    if (p_.jacobian) {
      p_.jacobian(x, entries);
    } else {
      Vector xp = x, cp(m), cm(m);
      for (int j = 0; j < n; ++j) {
        const double h = 1e-6 * std::max(1.0, std::abs(x[j]));
        xp[j] = x[j] + h;
        p_.constraints(xp, cp);
        xp[j] = x[j] - h;
        p_.constraints(xp, cm);
        xp[j] = x[j];
        for (int i = 0; i < m; ++i) {
          const double d = (cp[i] - cm[i]) / (2.0 * h);
          if (d != 0.0) entries.emplace_back(i, j, d);
        }
      }
    }
    for (const Triplet& t : entries) {
      if (!std::isfinite(t.value())) {
        throw EvaluationError("constraint Jacobian is not finite", x);
      }
    }
    jac.setFromTriplets(entries.begin(), entries.end());
    return jac;
  }

  // Lower-triangular Hessian entries of the Lagrangian.
  void hessian(const Vector& x, double objective_factor, const Vector& multipliers,
               std::vector<Triplet>& lower) const {
    lower.clear();
    std::vector<Triplet> raw;
    if (p_.hessian) {
      p_.hessian(x, objective_factor, multipliers, raw);
    } else {
      fd_hessian(x, objective_factor, multipliers, raw);
    }
    lower.reserve(raw.size());
    for (const Triplet& t : raw) {
      if (!std::isfinite(t.value())) throw EvaluationError("Hessian is not finite", x);
      lower.emplace_back(std::max(t.row(), t.col()), std::min(t.row(), t.col()),
                         t.value());
    }
  }

 private:
  Vector lagrangian_gradient(const Vector& x, double objective_factor,
                             const Vector& multipliers) const {
    Vector g;
    gradient(x, g);
    g *= objective_factor;
    if (p_.num_constraints() > 0) g += jacobian(x).transpose() * multipliers;
    return g;
  }

  void fd_hessian(const Vector& x, double objective_factor, const Vector& multipliers,
                  std::vector<Triplet>& out) const {
    const int n = p_.num_variables;
    Eigen::MatrixXd hess(n, n);
    Vector xp = x;
    for (int j = 0; j < n; ++j) {
      const double h = 1e-4 * std::max(1.0, std::abs(x[j]));
      xp[j] = x[j] + h;
      const Vector gp = lagrangian_gradient(xp, objective_factor, multipliers);
      xp[j] = x[j] - h;
      const Vector gm = lagrangian_gradient(xp, objective_factor, multipliers);
      xp[j] = x[j];
      hess.col(j) = (gp - gm) / (2.0 * h);
    }
    for (int j = 0; j < n; ++j) {
      for (int i = j; i < n; ++i) {
        const double v = 0.5 * (hess(i, j) + hess(j, i));
        if (v != 0.0) out.emplace_back(i, j, v);
      }
    }
  }

  const Problem& p_;
};

struct Iterate {
  Vector x, s, ye, yi, zl, zu;
};

// Values and derivatives at the current primal point.
struct Evaluation {
  double f = 0.0;
  Vector grad;
  Vector c;  // [c_E; c_I]
  SparseMatrix jac;
  std::vector<Triplet> hess_lower;
};

struct Measures {
  double stationarity = 0.0;
  double primal = 0.0;
  double complementarity = 0.0;
  double overall() const { return std::max({stationarity, primal, complementarity}); }
};

struct BoundInfo {
  Vector lower, upper;
  std::vector<bool> has_lower, has_upper, fixed;
};

BoundInfo make_bounds(const Problem& p) {
  const int n = p.num_variables;
  BoundInfo b;
  b.lower = p.lower.size() == 0 ? Vector::Constant(n, -kInf) : p.lower;
  b.upper = p.upper.size() == 0 ? Vector::Constant(n, kInf) : p.upper;
  b.has_lower.assign(n, false);
  b.has_upper.assign(n, false);
  b.fixed.assign(n, false);
  for (int j = 0; j < n; ++j) {
    if (b.lower[j] == b.upper[j]) {
      b.fixed[j] = true;
      continue;
    }
    b.has_lower[j] = std::isfinite(b.lower[j]);
    b.has_upper[j] = std::isfinite(b.upper[j]);
  }
  return b;
}

void validate_problem(const Problem& p) {
  const int n = p.num_variables;
  if (n <= 0) throw std::invalid_argument("problem has no variables");
  if (p.num_equalities < 0 || p.num_inequalities < 0) {
    throw std::invalid_argument("negative constraint count");
  }
  if (!p.objective) throw std::invalid_argument("objective callback is missing");
  if (p.num_constraints() > 0 && !p.constraints) {
    throw std::invalid_argument("constraint callback is missing");
  }
  if (p.initial_guess.size() != n) {
    throw std::invalid_argument("initial guess has the wrong dimension");
  }
  if ((p.lower.size() != 0 && p.lower.size() != n) ||
      (p.upper.size() != 0 && p.upper.size() != n)) {
    throw std::invalid_argument("bound vectors have the wrong dimension");
  }
  const BoundInfo b = make_bounds(p);
  for (int j = 0; j < n; ++j) {
    if (!(b.lower[j] <= b.upper[j])) {
      throw std::invalid_argument("lower bound exceeds upper bound for variable " +
                                  std::to_string(j));
    }
  }
}

class InteriorPoint {
 public:
  InteriorPoint(const Problem& p, const Settings& settings)
      : eval_(p),
        settings_(settings),
        n_(p.num_variables),
        me_(p.num_equalities),
        mi_(p.num_inequalities),
        m_(p.num_constraints()),
        bounds_(make_bounds(p)) {}

  Solution run(const Vector& start) {
    initialize(start);
    mu_ = settings_.mu_init;
    const double mu_min = settings_.tol / 10.0;

    Solution out;
    bool converged = false;
    double best_primal = kInf;
    double ref_f = kInf;
    int stall = 0;
    int failed_searches = 0;
    int acceptable = 0;
    int iter = 0;
    for (; iter < settings_.max_iter; ++iter) {
      const Measures orig = original_measures();
      if (orig.overall() <= settings_.tol) {
        converged = true;
        break;
      }
      acceptable = orig.overall() <= kAcceptableFactor * settings_.tol ? acceptable + 1 : 0;
      if (acceptable >= kAcceptableIters) {
        converged = true;
        break;
      }
      // Give up only when infeasibility stops shrinking and the objective
      // stops improving too; small primal plateaus while the objective keeps
      // falling are normal on nonconvex problems.
      if (orig.primal > 10.0 * settings_.tol) {
        const bool progress = orig.primal < 0.99 * best_primal ||
                              ev_.f < ref_f - 1e-6 * std::max(1.0, std::abs(ref_f));
        best_primal = std::min(best_primal, orig.primal);
        if (progress) ref_f = ev_.f;
        if (progress) {
          stall = 0;
        } else if (++stall >= kStallWindow) {
          break;
        }
      }

      while (mu_ > mu_min && barrier_measures(mu_).overall() <= kBarrierTolFactor * mu_) {
        mu_ = std::max(mu_min, std::min(kMuLinearDecrease * mu_,
                                         std::pow(mu_, kMuSuperlinearPower)));
      }

      Direction d;
      if (!compute_direction(d)) break;
      const int outcome = line_search(d);
      if (outcome < 0) break;
      failed_searches = outcome == 0 ? failed_searches + 1 : 0;
      if (failed_searches >= 3 || penalty_ > kMaxPenalty) break;
    }

    out.iterations = iter;
    out.status = converged ? Status::kOptimal : Status::kMaxIter;
    fill_solution(out);
    return out;
  }

 private:
  struct Direction {
    Vector dx, ds, dye, dyi, dzl, dzu;
  };

  void initialize(const Vector& start) {
    it_.x = start;
    for (int j = 0; j < n_; ++j) {
      const double lo = bounds_.lower[j], hi = bounds_.upper[j];
      if (bounds_.fixed[j]) {
        it_.x[j] = lo;
        continue;
      }
      const bool hl = bounds_.has_lower[j], hu = bounds_.has_upper[j];
      double push_lo = hl ? kBoundPush * std::max(1.0, std::abs(lo)) : 0.0;
      double push_hi = hu ? kBoundPush * std::max(1.0, std::abs(hi)) : 0.0;
      if (hl && hu) {
        push_lo = std::min(push_lo, kBoundPush * (hi - lo));
        push_hi = std::min(push_hi, kBoundPush * (hi - lo));
      }
      if (hl) it_.x[j] = std::max(it_.x[j], lo + push_lo);
      if (hu) it_.x[j] = std::min(it_.x[j], hi - push_hi);
    }
    evaluate_all_but_hessian(it_.x);
    it_.s.resize(mi_);
    for (int i = 0; i < mi_; ++i) {
      const double h = ev_.c[me_ + i];
      it_.s[i] = std::max(-h, kBoundPush * std::max(1.0, std::abs(h)));
    }
    it_.ye = Vector::Zero(me_);
    it_.yi = Vector::Ones(mi_);
    it_.zl = Vector::Zero(n_);
    it_.zu = Vector::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j]) it_.zl[j] = 1.0;
      if (bounds_.has_upper[j]) it_.zu[j] = 1.0;
    }
    evaluate_hessian();
  }

  void evaluate_all_but_hessian(const Vector& x) {
    ev_.f = eval_.objective(x);
    eval_.gradient(x, ev_.grad);
    eval_.constraints(x, ev_.c);
    ev_.jac = eval_.jacobian(x);
  }

  void evaluate_hessian() {
    Vector y(m_);
    y << it_.ye, it_.yi;
    eval_.hessian(it_.x, 1.0, y, ev_.hess_lower);
  }

  Vector dual_residual() const {
    Vector r = ev_.grad - it_.zl + it_.zu;
    if (m_ > 0) {
      Vector y(m_);
      y << it_.ye, it_.yi;
      r += ev_.jac.transpose() * y;
    }
    for (int j = 0; j < n_; ++j) {
      if (bounds_.fixed[j]) r[j] = 0.0;
    }
    return r;
  }

  double dual_scale() const {
    const double sum = it_.ye.lpNorm<1>() + it_.yi.lpNorm<1>() + it_.zl.lpNorm<1>() +
                       it_.zu.lpNorm<1>();
    return std::max(100.0, sum / std::max(1, m_ + n_)) / 100.0;
  }

  double compl_scale() const {
    const double sum = it_.yi.lpNorm<1>() + it_.zl.lpNorm<1>() + it_.zu.lpNorm<1>();
    return std::max(100.0, sum / std::max(1, mi_ + n_)) / 100.0;
  }

  Measures barrier_measures(double mu) const {
    Measures m;
    m.stationarity = dual_residual().lpNorm<Eigen::Infinity>() / dual_scale();
    for (int i = 0; i < me_; ++i) m.primal = std::max(m.primal, std::abs(ev_.c[i]));
    double comp = 0.0;
    for (int i = 0; i < mi_; ++i) {
      m.primal = std::max(m.primal, std::abs(ev_.c[me_ + i] + it_.s[i]));
      comp = std::max(comp, std::abs(it_.s[i] * it_.yi[i] - mu));
    }
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j]) {
        comp = std::max(comp, std::abs((it_.x[j] - bounds_.lower[j]) * it_.zl[j] - mu));
      }
      if (bounds_.has_upper[j]) {
        comp = std::max(comp, std::abs((bounds_.upper[j] - it_.x[j]) * it_.zu[j] - mu));
      }
    }
    m.complementarity = comp / compl_scale();
    return m;
  }

  Measures original_measures() const {
    Measures m;
    m.stationarity = dual_residual().lpNorm<Eigen::Infinity>() / dual_scale();
    double comp = 0.0;
    for (int i = 0; i < me_; ++i) m.primal = std::max(m.primal, std::abs(ev_.c[i]));
    for (int i = 0; i < mi_; ++i) {
      const double h = ev_.c[me_ + i];
      m.primal = std::max(m.primal, h);
      comp = std::max(comp, std::abs(it_.yi[i] * h));
    }
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j]) {
        comp = std::max(comp, (it_.x[j] - bounds_.lower[j]) * it_.zl[j]);
      }
      if (bounds_.has_upper[j]) {
        comp = std::max(comp, (bounds_.upper[j] - it_.x[j]) * it_.zu[j]);
      }
    }
    m.complementarity = comp / compl_scale();
    return m;
  }

  // Assembles the lower triangle of the regularized primal-dual system.
  SparseMatrix assemble_kkt(double delta_w, double delta_c) const {
    const int dim = n_ + m_;
    std::vector<Triplet> t;
    t.reserve(ev_.hess_lower.size() + ev_.jac.nonZeros() + dim);
    for (const Triplet& e : ev_.hess_lower) {
      if (bounds_.fixed[e.row()] || bounds_.fixed[e.col()]) continue;
      t.push_back(e);
    }
    for (int j = 0; j < n_; ++j) {
      if (bounds_.fixed[j]) {
        t.emplace_back(j, j, 1.0);
        continue;
      }
      double diag = delta_w;
      if (bounds_.has_lower[j]) diag += it_.zl[j] / (it_.x[j] - bounds_.lower[j]);
      if (bounds_.has_upper[j]) diag += it_.zu[j] / (bounds_.upper[j] - it_.x[j]);
      t.emplace_back(j, j, diag);
    }
    for (int col = 0; col < ev_.jac.outerSize(); ++col) {
      if (bounds_.fixed[col]) continue;
      for (SparseMatrix::InnerIterator e(ev_.jac, col); e; ++e) {
        t.emplace_back(n_ + e.row(), col, e.value());
      }
    }
    for (int i = 0; i < me_; ++i) t.emplace_back(n_ + i, n_ + i, -delta_c);
    for (int i = 0; i < mi_; ++i) {
      t.emplace_back(n_ + me_ + i, n_ + me_ + i, -it_.s[i] / it_.yi[i] - delta_c);
    }
    SparseMatrix kkt(dim, dim);
    kkt.setFromTriplets(t.begin(), t.end());
    return kkt;
  }

  bool compute_direction(Direction& d) {
    const int dim = n_ + m_;
    Vector rhs(dim);
    Vector rx = ev_.grad;
    if (m_ > 0) {
      Vector y(m_);
      y << it_.ye, it_.yi;
      rx += ev_.jac.transpose() * y;
    }
    for (int j = 0; j < n_; ++j) {
      if (bounds_.fixed[j]) {
        rx[j] = 0.0;
        continue;
      }
      if (bounds_.has_lower[j]) rx[j] -= mu_ / (it_.x[j] - bounds_.lower[j]);
      if (bounds_.has_upper[j]) rx[j] += mu_ / (bounds_.upper[j] - it_.x[j]);
    }
    rhs.head(n_) = -rx;
    for (int i = 0; i < me_; ++i) rhs[n_ + i] = -ev_.c[i];
    for (int i = 0; i < mi_; ++i) {
      rhs[n_ + me_ + i] = -(ev_.c[me_ + i] + mu_ / it_.yi[i]);
    }

    // Inertia correction: expect n positive and m negative pivots.
    double delta_w = 0.0;
    bool ok = false;
    for (int attempt = 0; attempt < 60; ++attempt) {
      kkt_ = assemble_kkt(delta_w, kDualRegularization);
      ldlt_.compute(kkt_);
      if (ldlt_.info() == Eigen::Success && inertia_ok(ldlt_.vectorD())) {
        ok = true;
        break;
      }
      if (delta_w == 0.0) {
        delta_w = last_delta_w_ == 0.0 ? 1e-4 : std::max(1e-20, last_delta_w_ / 3.0);
      } else {
        delta_w *= last_delta_w_ == 0.0 ? 100.0 : 8.0;
      }
      if (delta_w > 1e40) break;
    }
    if (!ok) return false;
    last_delta_w_ = delta_w;

    rhs_ = rhs;
    Vector sol;
    if (!solve_kkt(rhs, sol)) return false;
    unpack_direction(sol, d);
    curvature_ = quadratic_term(d, delta_w);
    return true;
  }

  // Solves with the current factorization, refining toward the system
  // without dual regularization.
  bool solve_kkt(const Vector& rhs, Vector& sol) const {
    sol = ldlt_.solve(rhs);
    auto residual = [&](const Vector& v) {
      Vector r = rhs - kkt_.selfadjointView<Eigen::Lower>() * v;
      r.tail(m_) -= kDualRegularization * v.tail(m_);
      return r;
    };
    Vector res = residual(sol);
    for (int k = 0; k < 2 && m_ > 0; ++k) {
      const Vector candidate = sol + ldlt_.solve(res);
      const Vector cand_res = residual(candidate);
      if (!(cand_res.lpNorm<Eigen::Infinity>() < res.lpNorm<Eigen::Infinity>())) break;
      sol = candidate;
      res = cand_res;
    }
    return all_finite(sol);
  }

  void unpack_direction(const Vector& sol, Direction& d) const {
    d.dx = sol.head(n_);
    d.dye = sol.segment(n_, me_);
    d.dyi = sol.tail(mi_);
    d.ds.resize(mi_);
    for (int i = 0; i < mi_; ++i) {
      d.ds[i] = mu_ / it_.yi[i] - it_.s[i] - it_.s[i] / it_.yi[i] * d.dyi[i];
    }
    d.dzl = Vector::Zero(n_);
    d.dzu = Vector::Zero(n_);
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j]) {
        const double gap = it_.x[j] - bounds_.lower[j];
        d.dzl[j] = mu_ / gap - it_.zl[j] - it_.zl[j] / gap * d.dx[j];
      }
      if (bounds_.has_upper[j]) {
        const double gap = bounds_.upper[j] - it_.x[j];
        d.dzu[j] = mu_ / gap - it_.zu[j] + it_.zu[j] / gap * d.dx[j];
      }
    }
  }

  bool inertia_ok(const Vector& diag) const {
    int positive = 0, negative = 0;
    for (int i = 0; i < diag.size(); ++i) {
      if (!std::isfinite(diag[i]) || !(std::abs(diag[i]) > 1e-20)) return false;
      (diag[i] > 0.0 ? positive : negative)++;
    }
    return positive == n_ && negative == m_;
  }

  // d' (W + Sigma + delta_w) d over the primal space, including slacks.
  double quadratic_term(const Direction& d, double delta_w) const {
    double q = 0.0;
    for (const Triplet& e : ev_.hess_lower) {
      const double v = e.value() * d.dx[e.row()] * d.dx[e.col()];
      q += e.row() == e.col() ? v : 2.0 * v;
    }
    for (int j = 0; j < n_; ++j) {
      double sigma = delta_w;
      if (bounds_.has_lower[j]) sigma += it_.zl[j] / (it_.x[j] - bounds_.lower[j]);
      if (bounds_.has_upper[j]) sigma += it_.zu[j] / (bounds_.upper[j] - it_.x[j]);
      q += sigma * d.dx[j] * d.dx[j];
    }
    for (int i = 0; i < mi_; ++i) q += it_.yi[i] / it_.s[i] * d.ds[i] * d.ds[i];
    return q;
  }

  double barrier_value(const Vector& x, const Vector& s, double f) const {
    double phi = f;
    for (int i = 0; i < mi_; ++i) phi -= mu_ * std::log(s[i]);
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j]) phi -= mu_ * std::log(x[j] - bounds_.lower[j]);
      if (bounds_.has_upper[j]) phi -= mu_ * std::log(bounds_.upper[j] - x[j]);
    }
    return phi;
  }

  double infeasibility(const Vector& c, const Vector& s) const {
    double sq = 0.0;
    for (int i = 0; i < me_; ++i) sq += c[i] * c[i];
    for (int i = 0; i < mi_; ++i) {
      const double r = c[me_ + i] + s[i];
      sq += r * r;
    }
    return std::sqrt(sq);
  }

  static double max_step(const Vector& v, const Vector& dv, double tau) {
    double alpha = 1.0;
    for (int i = 0; i < v.size(); ++i) {
      if (dv[i] < 0.0) alpha = std::min(alpha, -tau * v[i] / dv[i]);
    }
    return alpha;
  }

  double max_primal_step(const Direction& d, double tau) const {
    double alpha = max_step(it_.s, d.ds, tau);
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j] && d.dx[j] < 0.0) {
        alpha = std::min(alpha, -tau * (it_.x[j] - bounds_.lower[j]) / d.dx[j]);
      }
      if (bounds_.has_upper[j] && d.dx[j] > 0.0) {
        alpha = std::min(alpha, tau * (bounds_.upper[j] - it_.x[j]) / d.dx[j]);
      }
    }
    return alpha;
  }

  double max_dual_step(const Direction& d, double tau) const {
    double alpha = max_step(it_.yi, d.dyi, tau);
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j] && d.dzl[j] < 0.0) {
        alpha = std::min(alpha, -tau * it_.zl[j] / d.dzl[j]);
      }
      if (bounds_.has_upper[j] && d.dzu[j] < 0.0) {
        alpha = std::min(alpha, -tau * it_.zu[j] / d.dzu[j]);
      }
    }
    return alpha;
  }

  // Returns 1 on an Armijo step, 0 when the smallest trial step was forced,
  // -1 when no finite trial point exists.
  int line_search(const Direction& d) {
    const double tau = std::max(kTauMin, 1.0 - mu_);
    const double alpha_primal = max_primal_step(d, tau);
    const double alpha_dual = max_dual_step(d, tau);

    const double theta = infeasibility(ev_.c, it_.s);
    double barrier_slope = ev_.grad.dot(d.dx);
    for (int i = 0; i < mi_; ++i) barrier_slope -= mu_ * d.ds[i] / it_.s[i];
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j]) barrier_slope -= mu_ * d.dx[j] / (it_.x[j] - bounds_.lower[j]);
      if (bounds_.has_upper[j]) barrier_slope += mu_ * d.dx[j] / (bounds_.upper[j] - it_.x[j]);
    }
    if (theta > 1e-12) {
      const double needed =
          (barrier_slope + 0.5 * std::max(curvature_, 0.0)) / ((1.0 - kPenaltyRho) * theta);
      if (penalty_ < needed) penalty_ = needed + 1.0;
    }
    const double merit0 = barrier_value(it_.x, it_.s, ev_.f) + penalty_ * theta;
    const double slope = barrier_slope - penalty_ * theta;

    Vector x_trial, s_trial, c_trial;
    double alpha = alpha_primal;
    int result = 0;
    bool have_finite = false;
    Vector fallback_x, fallback_s;
    double fallback_alpha = 0.0;
    for (int k = 0; k < kMaxBacktracks; ++k, alpha *= 0.5) {
      x_trial = it_.x + alpha * d.dx;
      s_trial = it_.s + alpha * d.ds;
      double f_trial;
      try {
        f_trial = eval_.objective(x_trial);
        eval_.constraints(x_trial, c_trial);
      } catch (const EvaluationError&) {
        continue;
      }
      have_finite = true;
      fallback_x = x_trial;
      fallback_s = s_trial;
      fallback_alpha = alpha;
      const double merit =
          barrier_value(x_trial, s_trial, f_trial) + penalty_ * infeasibility(c_trial, s_trial);
      if (merit <= merit0 + kArmijo * alpha * std::min(slope, 0.0) ||
          std::abs(merit - merit0) <= 1e-14 * std::max(1.0, std::abs(merit0))) {
        result = 1;
        break;
      }
      if (k == 0 && second_order_correction(alpha, c_trial, s_trial, tau, merit0, slope,
                                            x_trial, s_trial)) {
        result = 1;
        break;
      }
    }
    if (!have_finite) return -1;
    if (result == 0) {
      x_trial = fallback_x;
      s_trial = fallback_s;
      alpha = fallback_alpha;
    }

    it_.x = x_trial;
    it_.s = s_trial;
    it_.ye += alpha * d.dye;
    it_.yi += alpha_dual * d.dyi;
    it_.zl += alpha_dual * d.dzl;
    it_.zu += alpha_dual * d.dzu;
    safeguard_multipliers();
    evaluate_all_but_hessian(it_.x);
    evaluate_hessian();
    return result;
  }

  // Second-order correction for a rejected full step: re-solves the Newton
  // system with the constraint residual accumulated at the trial point, which
  // bends the step back toward the curved constraint manifold.
  bool second_order_correction(double alpha, const Vector& c_trial, const Vector& s_trial,
                               double tau, double merit0, double slope, Vector& x_out,
                               Vector& s_out) {
    if (m_ == 0) return false;
    Vector r_soc(m_);
    for (int i = 0; i < me_; ++i) r_soc[i] = alpha * ev_.c[i] + c_trial[i];
    for (int i = 0; i < mi_; ++i) {
      r_soc[me_ + i] = alpha * (ev_.c[me_ + i] + it_.s[i]) + c_trial[me_ + i] + s_trial[i];
    }
    const double theta_trial = infeasibility(c_trial, s_trial);
    double theta_prev = theta_trial;
    for (int p = 0; p < kMaxSecondOrderCorrections; ++p) {
      Vector rhs = rhs_;
      for (int i = 0; i < me_; ++i) rhs[n_ + i] = -r_soc[i];
      for (int i = 0; i < mi_; ++i) {
        rhs[n_ + me_ + i] = -(r_soc[me_ + i] - it_.s[i] + mu_ / it_.yi[i]);
      }
      Vector sol;
      if (!solve_kkt(rhs, sol)) return false;
      Direction d;
      unpack_direction(sol, d);
      const double alpha_soc = max_primal_step(d, tau);
      const Vector x = it_.x + alpha_soc * d.dx;
      const Vector sl = it_.s + alpha_soc * d.ds;
      Vector c;
      double f;
      try {
        f = eval_.objective(x);
        eval_.constraints(x, c);
      } catch (const EvaluationError&) {
        return false;
      }
      const double theta = infeasibility(c, sl);
      const double merit = barrier_value(x, sl, f) + penalty_ * theta;
      if (merit <= merit0 + kArmijo * alpha * std::min(slope, 0.0)) {
        x_out = x;
        s_out = sl;
        return true;
      }
      if (theta > 0.99 * theta_prev) return false;
      theta_prev = theta;
      for (int i = 0; i < me_; ++i) r_soc[i] = alpha_soc * r_soc[i] + c[i];
      for (int i = 0; i < mi_; ++i) {
        r_soc[me_ + i] = alpha_soc * r_soc[me_ + i] + c[me_ + i] + sl[i];
      }
    }
    return false;
  }

  void safeguard_multipliers() {
    auto clamp = [&](double z, double gap) {
      return std::clamp(z, mu_ / (kMultiplierSafeguard * gap), kMultiplierSafeguard * mu_ / gap);
    };
    for (int i = 0; i < mi_; ++i) it_.yi[i] = clamp(it_.yi[i], it_.s[i]);
    for (int j = 0; j < n_; ++j) {
      if (bounds_.has_lower[j]) it_.zl[j] = clamp(it_.zl[j], it_.x[j] - bounds_.lower[j]);
      if (bounds_.has_upper[j]) it_.zu[j] = clamp(it_.zu[j], bounds_.upper[j] - it_.x[j]);
    }
  }

  void fill_solution(Solution& out) const {
    out.x = it_.x;
    out.eq_multipliers = it_.ye;
    out.ineq_multipliers = it_.yi;
    out.lower_multipliers = it_.zl;
    out.upper_multipliers = it_.zu;
    // Fixed variables absorb whatever remains of the dual residual.
    Vector r = ev_.grad;
    if (m_ > 0) {
      Vector y(m_);
      y << it_.ye, it_.yi;
      r += ev_.jac.transpose() * y;
    }
    for (int j = 0; j < n_; ++j) {
      if (!bounds_.fixed[j]) continue;
      out.lower_multipliers[j] = std::max(r[j], 0.0);
      out.upper_multipliers[j] = std::max(-r[j], 0.0);
    }
    out.objective = ev_.f;
    const Measures m = original_measures();
    out.residuals = {m.stationarity, m.primal, m.complementarity};
  }

  Evaluator eval_;
  Settings settings_;
  int n_, me_, mi_, m_;
  BoundInfo bounds_;
  Iterate it_;
  Evaluation ev_;
  double mu_ = 0.1;
  double penalty_ = 1.0;
  double last_delta_w_ = 0.0;
  double curvature_ = 0.0;
  SparseMatrix kkt_;
  Eigen::SimplicialLDLT<SparseMatrix, Eigen::Lower, Eigen::AMDOrdering<int>> ldlt_;
  Vector rhs_;  // right-hand side of the last Newton system
};

// min sum(p) + sum(q) + sum(t) + (rho/2)|x - x0|^2
// s.t. c_E(x) - p + q = 0,  c_I(x) - t <= 0,  p, q, t >= 0
Problem make_elastic(const Problem& p, const Evaluator& eval, const Vector& x0) {
  const int n = p.num_variables, me = p.num_equalities, mi = p.num_inequalities;
  const int m = me + mi;
  Problem e;
  e.num_variables = n + 2 * me + mi;
  e.num_equalities = me;
  e.num_inequalities = mi;
  e.objective = [=](const Vector& z) {
    return z.tail(2 * me + mi).sum() + 0.5 * kElasticProximity * (z.head(n) - x0).squaredNorm();
  };
  e.gradient = [=](const Vector& z, Vector& g) {
    g.resize(z.size());
    g.head(n) = kElasticProximity * (z.head(n) - x0);
    g.tail(2 * me + mi).setOnes();
  };
  e.constraints = [=, &eval](const Vector& z, Vector& c) {
    Vector cx;
    eval.constraints(z.head(n), cx);
    c.resize(m);
    for (int i = 0; i < me; ++i) c[i] = cx[i] - z[n + i] + z[n + me + i];
    for (int i = 0; i < mi; ++i) c[me + i] = cx[me + i] - z[n + 2 * me + i];
  };
  e.jacobian = [=, &eval](const Vector& z, std::vector<Triplet>& t) {
    const SparseMatrix jac = eval.jacobian(z.head(n));
    for (int col = 0; col < jac.outerSize(); ++col) {
      for (SparseMatrix::InnerIterator it(jac, col); it; ++it) {
        t.emplace_back(it.row(), col, it.value());
      }
    }
    for (int i = 0; i < me; ++i) {
      t.emplace_back(i, n + i, -1.0);
      t.emplace_back(i, n + me + i, 1.0);
    }
    for (int i = 0; i < mi; ++i) t.emplace_back(me + i, n + 2 * me + i, -1.0);
  };
  e.hessian = [=, &eval](const Vector& z, double factor, const Vector& y,
                         std::vector<Triplet>& t) {
    eval.hessian(z.head(n), 0.0, y, t);
    for (int j = 0; j < n; ++j) t.emplace_back(j, j, factor * kElasticProximity);
  };

  const BoundInfo b = make_bounds(p);
  e.lower = Vector::Zero(e.num_variables);
  e.upper = Vector::Constant(e.num_variables, kInf);
  e.lower.head(n) = b.lower;
  e.upper.head(n) = b.upper;

  Vector cx;
  eval.constraints(x0, cx);
  e.initial_guess = Vector::Zero(e.num_variables);
  e.initial_guess.head(n) = x0;
  for (int i = 0; i < me; ++i) {
    e.initial_guess[n + i] = std::max(cx[i], 0.0);
    e.initial_guess[n + me + i] = std::max(-cx[i], 0.0);
  }
  for (int i = 0; i < mi; ++i) e.initial_guess[n + 2 * me + i] = std::max(cx[me + i], 0.0);
  return e;
}

}  // namespace

std::string_view to_string(Status status) {
  switch (status) {
    case Status::kOptimal: return "Optimal";
    case Status::kMaxIter: return "MaxIter";
    case Status::kInfeasible: return "Infeasible";
  }
  return "?";
}

Solution solve(const Problem& problem, const Settings& settings) {
  validate_problem(problem);
  Solution main = InteriorPoint(problem, settings).run(problem.initial_guess);
  if (main.status == Status::kOptimal || !settings.elastic_phase ||
      problem.num_constraints() == 0 || main.residuals.primal <= settings.tol) {
    return main;
  }

  const Evaluator eval(problem);
  Settings elastic_settings = settings;
  elastic_settings.elastic_phase = false;
  const Problem elastic = make_elastic(problem, eval, main.x);
  const Solution relaxed = InteriorPoint(elastic, elastic_settings).run(elastic.initial_guess);
  const int n = problem.num_variables;
  const double relaxation = relaxed.x.tail(elastic.num_variables - n).sum();

  if (relaxation > settings.infeasibility_threshold) {
    Solution out = main;
    out.status = Status::kInfeasible;
    out.x = relaxed.x.head(n);
    out.objective = eval.objective(out.x);
    out.relaxation = relaxation;
    out.iterations = main.iterations + relaxed.iterations;
    return out;
  }

  Solution restarted = InteriorPoint(problem, elastic_settings).run(relaxed.x.head(n));
  restarted.iterations += main.iterations + relaxed.iterations;
  restarted.relaxation = relaxation;
  return restarted;
}

KktResiduals kkt_residuals(const Problem& problem, const Solution& point) {
  validate_problem(problem);
  const Evaluator eval(problem);
  const BoundInfo b = make_bounds(problem);
  const int n = problem.num_variables, me = problem.num_equalities;
  const int mi = problem.num_inequalities, m = me + mi;

  Vector grad, c;
  eval.gradient(point.x, grad);
  eval.constraints(point.x, c);
  Vector r = grad - point.lower_multipliers + point.upper_multipliers;
  if (m > 0) {
    Vector y(m);
    y << point.eq_multipliers, point.ineq_multipliers;
    r += eval.jacobian(point.x).transpose() * y;
  }

  KktResiduals out;
  double comp = 0.0;
  for (int i = 0; i < me; ++i) out.primal = std::max(out.primal, std::abs(c[i]));
  for (int i = 0; i < mi; ++i) {
    out.primal = std::max(out.primal, c[me + i]);
    comp = std::max(comp, std::abs(point.ineq_multipliers[i] * c[me + i]));
  }
  for (int j = 0; j < n; ++j) {
    out.primal = std::max({out.primal, b.lower[j] - point.x[j], point.x[j] - b.upper[j]});
    if (std::isfinite(b.lower[j])) {
      comp = std::max(comp, std::abs((point.x[j] - b.lower[j]) * point.lower_multipliers[j]));
    }
    if (std::isfinite(b.upper[j])) {
      comp = std::max(comp, std::abs((b.upper[j] - point.x[j]) * point.upper_multipliers[j]));
    }
  }
  const double ysum = point.eq_multipliers.lpNorm<1>() + point.ineq_multipliers.lpNorm<1>();
  const double zsum = point.lower_multipliers.lpNorm<1>() + point.upper_multipliers.lpNorm<1>();
  const double sd = std::max(100.0, (ysum + zsum) / std::max(1, m + n)) / 100.0;
  const double sc = std::max(100.0, (point.ineq_multipliers.lpNorm<1>() + zsum) /
                                        std::max(1, mi + n)) / 100.0;
  out.stationarity = r.lpNorm<Eigen::Infinity>() / sd;
  out.complementarity = comp / sc;
  return out;
}

}  // namespace ecolane::nlp

// Smooth constrained nonlinear programming.
//
//   minimize    f(x)
//   subject to  c_E(x) = 0
//               c_I(x) <= 0
//               lower <= x <= upper
//
// The reference solver is a primal-dual interior-point method: inequality
// constraints receive slacks, bounds and slacks are handled by a logarithmic
// barrier, and each Newton step solves the sparse symmetric indefinite KKT
// system with an LDL^T factorization whose inertia is corrected by a primal
// diagonal shift. A merit-function line search with fraction-to-the-boundary
// safeguards globalizes the iteration. When the main loop stalls or runs out
// of iterations while infeasible, an elastic phase minimizes the l1 norm of
// the constraint violation; a residual relaxation above a threshold declares
// the problem infeasible.
//
// Lagrangian convention: L = f + y_E' c_E + y_I' c_I - z_L' (x - lower)
//                            + z_U' (x - upper), with y_I, z_L, z_U >= 0.

#ifndef ECOLANE_NLP_H_
#define ECOLANE_NLP_H_

#include <Eigen/Core>
#include <Eigen/SparseCore>
#include <functional>
#include <stdexcept>
#include <string_view>
#include <vector>

namespace ecolane::nlp {

using Vector = Eigen::VectorXd;
using Triplet = Eigen::Triplet<double>;

struct Problem {
  int num_variables = 0;
  int num_equalities = 0;
  int num_inequalities = 0;

  std::function<double(const Vector& x)> objective;
  /// Optional; central finite differences of `objective` otherwise.
  std::function<void(const Vector& x, Vector& grad)> gradient;
  /// Stacked [c_E(x); c_I(x)]. Required when there are constraints.
  std::function<void(const Vector& x, Vector& values)> constraints;
  /// Optional sparse Jacobian of the stacked constraints (row, col, value);
  /// duplicate entries are summed. Finite differences otherwise.
  std::function<void(const Vector& x, std::vector<Triplet>& entries)> jacobian;
  /// Optional Hessian of  objective_factor * f + sum_j multipliers_j c_j.
  /// Each off-diagonal pair is listed once, in either triangle; duplicates
  /// are summed. Finite differences of the Lagrangian gradient otherwise.
  std::function<void(const Vector& x, double objective_factor,
                     const Vector& multipliers, std::vector<Triplet>& entries)>
      hessian;

  /// Empty means unbounded. Use +-infinity for one-sided bounds. Entries with
  /// lower == upper fix the variable at that value.
  Vector lower;
  Vector upper;
  Vector initial_guess;

  int num_constraints() const { return num_equalities + num_inequalities; }
};

enum class Status { kOptimal, kMaxIter, kInfeasible };

std::string_view to_string(Status status);

/// First-order optimality measures of the original problem. Stationarity and
/// complementarity are divided by max(1, mean |multiplier| / 100), so they are
/// absolute whenever the multipliers are of moderate size.
struct KktResiduals {
  double stationarity = 0.0;
  double primal = 0.0;  // max violation of equalities, inequalities, bounds
  double complementarity = 0.0;
};

struct Solution {
  Status status = Status::kMaxIter;
  Vector x;
  Vector eq_multipliers;
  Vector ineq_multipliers;
  Vector lower_multipliers;
  Vector upper_multipliers;
  double objective = 0.0;
  KktResiduals residuals;
  int iterations = 0;
  /// l1 norm of the constraint relaxation found by the elastic phase, or 0
  /// if that phase never ran.
  double relaxation = 0.0;
};

struct Settings {
  double tol = 1e-6;
  int max_iter = 500;
  double mu_init = 0.1;
  /// Elastic relaxation above which the problem is declared infeasible.
  double infeasibility_threshold = 1e-5;
  bool elastic_phase = true;
};

/// Raised when the objective or a constraint evaluates to NaN or infinity.
class EvaluationError : public std::runtime_error {
 public:
  EvaluationError(const std::string& what, Vector iterate)
      : std::runtime_error(what), iterate_(std::move(iterate)) {}
  const Vector& iterate() const { return iterate_; }

 private:
  Vector iterate_;
};

/// Throws std::invalid_argument for malformed problems (dimension mismatch,
/// missing callbacks, crossed bounds) and EvaluationError for non-finite
/// evaluations. Deterministic: identical inputs give identical iterates.
Solution solve(const Problem& problem, const Settings& settings = {});

/// Residuals of a candidate primal-dual point, computed with the problem's
/// own derivative callbacks (or their finite-difference fallbacks).
KktResiduals kkt_residuals(const Problem& problem, const Solution& point);

}  // namespace ecolane::nlp

#endif  // ECOLANE_NLP_H_

// Wheel-power consumption model and energy bookkeeping.
//
// Stage power is modeled as  P = c1 * T_whl * v + c2 * v  and clamped at
// zero when used as a planning cost or for metering, so regenerative braking
// never earns energy back.

#ifndef ECOLANE_ENERGY_H_
#define ECOLANE_ENERGY_H_

#include <iosfwd>
#include <span>
#include <stdexcept>
#include <vector>

namespace ecolane {

struct EnergyModelParams {
  double c1 = 4.47;     // dimensionless
  double c2 = 1522.23;  // W per (m/s)
};

struct PowerSample {
  double wheel_torque = 0.0;  // N m
  double speed = 0.0;         // m/s
  double power = 0.0;         // W, measured total
};

class DegenerateRegressorError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Signed stage power in watts.
double stage_cost(const EnergyModelParams& params, double wheel_torque, double speed);

/// max(stage_cost, 0).
double clamped_stage_cost(const EnergyModelParams& params, double wheel_torque,
                          double speed);

/// Nonnegative least-squares identification of (c1, c2).
///
/// Minimizes sum_i (c1 T_i v_i + c2 v_i - P_i)^2 over c1, c2 >= 0. With two
/// unknowns the global minimizer is found exactly: the unconstrained solution
/// of the normal equations if it is feasible, otherwise the best of the
/// one-dimensional boundary solutions. Throws DegenerateRegressorError when
/// the regressors (T v, v) are collinear or fewer than two samples are given.
EnergyModelParams fit_params(std::span<const PowerSample> samples);

/// Sum of squared residuals of the model over a sample set.
double fit_residual(const EnergyModelParams& params,
                    std::span<const PowerSample> samples);

/// Integrates the clamped stage power along an executed run, in joules.
/// Throws std::invalid_argument if the sequences differ in length.
double meter_trajectory(const EnergyModelParams& params,
                        std::span<const double> wheel_torques,
                        std::span<const double> speeds, double dt);

inline constexpr double kKwhPerGallonEquivalent = 33.7;
inline constexpr double kMetersPerMile = 1609.34;

/// Miles per gallon-equivalent. Throws std::invalid_argument unless both
/// inputs are positive.
double mpge(double energy_joules, double distance_m,
            double kwh_per_gallon = kKwhPerGallonEquivalent);

/// Reads a delimited table with columns T_whl, v, P_tot (comma, semicolon,
/// tab or space separated). A non-numeric first line is treated as a header;
/// blank lines and lines starting with '#' are skipped.
std::vector<PowerSample> read_power_samples(std::istream& in);

}  // namespace ecolane

#endif  // ECOLANE_ENERGY_H_

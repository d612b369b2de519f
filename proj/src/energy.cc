#include "ecolane/energy.h"

#include <algorithm>
#include <array>
#include <cmath>
#include <istream>
#include <sstream>
#include <string>

namespace ecolane {

double stage_cost(const EnergyModelParams& params, double wheel_torque, double speed) {
  return params.c1 * wheel_torque * speed + params.c2 * speed;
}

double clamped_stage_cost(const EnergyModelParams& params, double wheel_torque,
                          double speed) {
  return std::max(stage_cost(params, wheel_torque, speed), 0.0);
}

double fit_residual(const EnergyModelParams& params,
                    std::span<const PowerSample> samples) {
  double sum = 0.0;
  for (const PowerSample& p : samples) {
    const double r = stage_cost(params, p.wheel_torque, p.speed) - p.power;
    sum += r * r;
  }
  return sum;
}

EnergyModelParams fit_params(std::span<const PowerSample> samples) {
  if (samples.size() < 2) {
    throw DegenerateRegressorError("at least two samples are required");
  }
  // Normal equations for regressors a = T v and b = v.
  double aa = 0.0, ab = 0.0, bb = 0.0, ap = 0.0, bp = 0.0;
  for (const PowerSample& p : samples) {
    const double a = p.wheel_torque * p.speed;
    const double b = p.speed;
    aa += a * a;
    ab += a * b;
    bb += b * b;
    ap += a * p.power;
    bp += b * p.power;
  }
  const double det = aa * bb - ab * ab;
  if (!(aa > 0.0 && bb > 0.0) || !(det > 1e-10 * aa * bb)) {
    throw DegenerateRegressorError("regressors (T*v, v) are linearly dependent");
  }

  const double c1 = (bb * ap - ab * bp) / det;
  const double c2 = (aa * bp - ab * ap) / det;
  if (c1 >= 0.0 && c2 >= 0.0) return {c1, c2};

  // Quadratic objective up to a constant: c'Gc - 2 c'r.
  auto objective = [&](double x1, double x2) {
    return aa * x1 * x1 + 2.0 * ab * x1 * x2 + bb * x2 * x2 - 2.0 * (x1 * ap + x2 * bp);
  };
  const std::array<EnergyModelParams, 3> candidates{{
      {std::max(ap / aa, 0.0), 0.0},
      {0.0, std::max(bp / bb, 0.0)},
      {0.0, 0.0},
  }};
  EnergyModelParams best = candidates[2];
  double best_value = objective(best.c1, best.c2);
  for (const EnergyModelParams& c : candidates) {
    const double value = objective(c.c1, c.c2);
    if (value < best_value) {
      best = c;
      best_value = value;
    }
  }
  return best;
}

double meter_trajectory(const EnergyModelParams& params,
                        std::span<const double> wheel_torques,
                        std::span<const double> speeds, double dt) {
  if (wheel_torques.size() != speeds.size()) {
    throw std::invalid_argument("torque and speed sequences differ in length");
  }
  double energy = 0.0;
  for (std::size_t i = 0; i < speeds.size(); ++i) {
    energy += clamped_stage_cost(params, wheel_torques[i], speeds[i]) * dt;
  }
  return energy;
}

double mpge(double energy_joules, double distance_m, double kwh_per_gallon) {
  if (!(energy_joules > 0.0) || !(distance_m > 0.0) || !(kwh_per_gallon > 0.0)) {
    throw std::invalid_argument("mpge requires positive energy and distance");
  }
  const double miles = distance_m / kMetersPerMile;
  const double gallons = energy_joules / 3.6e6 / kwh_per_gallon;
  return miles / gallons;
}

std::vector<PowerSample> read_power_samples(std::istream& in) {
  std::vector<PowerSample> samples;
  std::string line;
  int line_no = 0;
  bool first_content_line = true;
  while (std::getline(in, line)) {
    ++line_no;
    std::replace_if(line.begin(), line.end(),
                    [](char c) { return c == ',' || c == ';' || c == '\t' || c == '\r'; },
                    ' ');
    const auto first = line.find_first_not_of(' ');
    if (first == std::string::npos || line[first] == '#') continue;

    std::istringstream fields(line);
    PowerSample sample;
    const bool parsed = static_cast<bool>(fields >> sample.wheel_torque >> sample.speed >>
                                          sample.power);
    if (!parsed) {
      if (first_content_line) {
        first_content_line = false;
        continue;  // header
      }
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": expected three numeric columns T_whl, v, P_tot");
    }
    first_content_line = false;
    if (!std::isfinite(sample.wheel_torque) || !std::isfinite(sample.speed) ||
        !std::isfinite(sample.power) || sample.speed < 0.0) {
      throw std::invalid_argument("line " + std::to_string(line_no) +
                                  ": values must be finite with v >= 0");
    }
    samples.push_back(sample);
  }
  return samples;
}

}  // namespace ecolane

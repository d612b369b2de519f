#include "ecolane/planner_lc.h"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>

namespace ecolane {
namespace {

constexpr double kTorqueUnit = 1000.0;    // torque variables in kN m
constexpr double kCurvatureUnit = 100.0;  // curvature variables in 1/(100 m)
constexpr double kInf = std::numeric_limits<double>::infinity();

// Decision vector: states [s v e_y e_psi] for steps 0..N (s relative to the
// start), inputs [tau kappa] for steps 0..N-1, then one dual 4-vector per SV
// per step 1..N.
struct Layout {
  int n = 0;
  int svs = 0;

  int st(int i, int k) const { return 4 * i + k; }
  int in(int i, int k) const { return 4 * (n + 1) + 2 * i + k; }
  int lam(int m, int i, int j) const { return 4 * (n + 1) + 2 * n + 4 * (n * m + i - 1) + j; }
  int size() const { return 4 * (n + 1) + 2 * n + 4 * n * svs; }

  int dyn(int i, int k) const { return 4 * i + k; }
  int lat(int i, int sign) const { return 4 * n + 2 * (i - 1) + sign; }
  int obca(int m, int i, int r) const { return 4 * n + 2 * (n - 1) + 2 * (n * m + i - 1) + r; }
  int num_eq() const { return 4 * n; }
  int num_ineq() const { return 2 * (n - 1) + 2 * n * svs; }
};

// weight * (sum_k coef_k x[idx_k] - offset)^2
struct QuadTerm {
  double weight;
  std::vector<int> idx;
  std::vector<double> coef;
  double offset = 0.0;

  double residual(const nlp::Vector& x) const {
    double r = -offset;
    for (std::size_t k = 0; k < idx.size(); ++k) r += coef[k] * x[idx[k]];
    return r;
  }
};

void add_differences(std::vector<QuadTerm>& terms, double weight, int count,
                     const std::function<int(int)>& index, int order) {
  if (weight <= 0.0) return;
  for (int i = 0; i + order < count; ++i) {
    if (order == 1) {
      terms.push_back({weight, {index(i), index(i + 1)}, {-1.0, 1.0}});
    } else {
      terms.push_back({weight, {index(i), index(i + 1), index(i + 2)}, {1.0, -2.0, 1.0}});
    }
  }
}

double distance_under_accel(double v0, double accel, double horizon, double v_max) {
  if (accel >= 0.0) {
    const double t1 = accel > 0.0 ? std::min(horizon, std::max(v_max - v0, 0.0) / accel)
                                  : horizon;
    return v0 * t1 + 0.5 * accel * t1 * t1 + std::max(v0 + accel * t1, 0.0) * (horizon - t1);
  }
  const double t1 = std::min(horizon, v0 / -accel);
  return v0 * t1 + 0.5 * accel * t1 * t1;
}

// Dual point of the distance from p to the rectangle: lambda >= 0 with
// |A' lambda| = 1 and (A p - b)' lambda = dist when p is outside. Inside, the
// face of least penetration.
Eigen::Vector4d nearest_face_dual(const SvPolytope& poly, int step, double s, double e_y) {
  const Eigen::Vector4d r = SvPolytope::a() * Eigen::Vector2d(s, e_y) - poly.b_at(step);
  Eigen::Vector4d lam = Eigen::Vector4d::Zero();
  const double ds = std::max(r[0], r[1]);
  const double de = std::max(r[2], r[3]);
  if (ds > 0.0 || de > 0.0) {
    const double px = std::max(ds, 0.0), py = std::max(de, 0.0);
    const double d = std::hypot(px, py);
    lam[r[0] > r[1] ? 0 : 1] = px / d;
    lam[r[2] > r[3] ? 2 : 3] = py / d;
  } else {
    int best = 0;
    for (int j = 1; j < 4; ++j)
      if (r[j] > r[best]) best = j;
    lam[best] = 1.0;
  }
  return lam;
}

struct Prepared {
  double y_target = 0.0;
  double u0_torque = 0.0;
  double u0_curvature = 0.0;
  double e_y_min = 0.0, e_y_max = 0.0;
  std::vector<double> road_curvature;  // per step along the nominal rollout
};

Prepared prepare(const LcRequest& req, const LcConfig& config, const VehicleParams& vehicle) {
  Prepared p;
  p.y_target = lane_center_offset(*req.road, req.target_lane);
  const double v0 = req.ego.v;
  const double dt = kPlanningStep;
  const double t_lo = std::max(vehicle.brake_torque, vehicle.torque_from_accel(-v0 / dt));
  const double t_hi = std::min(vehicle.motor_torque,
                               vehicle.torque_from_accel((vehicle.max_speed - v0) / dt));
  p.u0_torque = std::clamp(req.u0.wheel_torque, t_lo, std::max(t_lo, t_hi));
  double k_max = config.bounds.kappa_bnd;
  if (v0 > 0.0) k_max = std::min(k_max, config.bounds.a_y_bnd / (v0 * v0));
  p.u0_curvature = std::clamp(req.u0.curvature, -k_max, k_max);
  p.e_y_min = std::max(config.bounds.e_y_min, req.road->min_lateral());
  p.e_y_max = std::min(config.bounds.e_y_max, req.road->max_lateral());
  p.road_curvature.resize(req.steps);
  for (int i = 0; i < req.steps; ++i) {
    p.road_curvature[i] = req.road->curvature_at(req.ego.s + v0 * i * dt);
  }
  return p;
}

nlp::Problem build_program(const LcRequest& req, const LcConfig& config,
                           const VehicleParams& vehicle, const FreeSpaceGap& gap,
                           std::span<const SvPolytope> svs_span, const Prepared& prep) {
  const int n = req.steps;
  Layout l{n, static_cast<int>(svs_span.size())};
  const double dt = kPlanningStep;
  const double s0 = req.ego.s;
  const double k_acc = kTorqueUnit / (vehicle.mass * vehicle.wheel_radius);
  const double kc = kCurvatureUnit;
  const double d_min = config.d_min;
  const double a_y = config.bounds.a_y_bnd;
  const std::vector<double> kr = prep.road_curvature;
  // SV rectangles in coordinates relative to s0, per step.
  std::vector<std::vector<Eigen::Vector4d>> b(l.svs, std::vector<Eigen::Vector4d>(n + 1));
  for (int m = 0; m < l.svs; ++m) {
    for (int i = 0; i <= n; ++i) {
      b[m][i] = svs_span[m].b_at(i);
      b[m][i][0] -= s0;
      b[m][i][1] += s0;
    }
  }

  const LcWeights& w = config.weights;
  std::vector<QuadTerm> terms;
  add_differences(terms, 1.0, n + 1, [&](int i) { return l.st(i, kV); }, 1);
  add_differences(terms, 1.0, n + 1, [&](int i) { return l.st(i, kV); }, 2);
  add_differences(terms, w.rho_k1 / (kc * kc), n, [&](int i) { return l.in(i, 1); }, 1);
  add_differences(terms, w.rho_k2 / (kc * kc), n, [&](int i) { return l.in(i, 1); }, 2);
  if (w.rho_y > 0.0) terms.push_back({w.rho_y, {l.st(n, kEy)}, {1.0}, prep.y_target});
  if (w.rho_psi > 0.0) terms.push_back({w.rho_psi, {l.st(n, kEpsi)}, {1.0}});

  nlp::Problem p;
  p.num_variables = l.size();
  p.num_equalities = l.num_eq();
  p.num_inequalities = l.num_ineq();

  p.objective = [terms](const nlp::Vector& x) {
    double f = 0.0;
    for (const QuadTerm& t : terms) {
      const double r = t.residual(x);
      f += t.weight * r * r;
    }
    return f;
  };
  p.gradient = [terms](const nlp::Vector& x, nlp::Vector& g) {
    g.setZero(x.size());
    for (const QuadTerm& t : terms) {
      const double r = 2.0 * t.weight * t.residual(x);
      for (std::size_t k = 0; k < t.idx.size(); ++k) g[t.idx[k]] += r * t.coef[k];
    }
  };
  p.constraints = [=](const nlp::Vector& x, nlp::Vector& c) {
    c.resize(l.num_eq() + l.num_ineq());
    for (int i = 0; i < n; ++i) {
      const double v = x[l.st(i, kV)], psi = x[l.st(i, kEpsi)];
      const double kappa = x[l.in(i, 1)] / kc;
      const double cs = std::cos(psi), sn = std::sin(psi);
      c[l.dyn(i, 0)] = x[l.st(i + 1, kS)] - x[l.st(i, kS)] - dt * v * cs;
      c[l.dyn(i, 1)] = x[l.st(i + 1, kV)] - v - dt * k_acc * x[l.in(i, 0)];
      c[l.dyn(i, 2)] = x[l.st(i + 1, kEy)] - x[l.st(i, kEy)] - dt * v * sn;
      c[l.dyn(i, 3)] = x[l.st(i + 1, kEpsi)] - psi - dt * (kappa - kr[i]) * v * cs;
    }
    for (int i = 1; i < n; ++i) {
      const double v = x[l.st(i, kV)];
      const double ay = v * v * x[l.in(i, 1)] / kc;
      c[l.lat(i, 0)] = ay - a_y;
      c[l.lat(i, 1)] = -ay - a_y;
    }
    for (int m = 0; m < l.svs; ++m) {
      for (int i = 1; i <= n; ++i) {
        const double s = x[l.st(i, kS)], e = x[l.st(i, kEy)];
        const double* lam = &x[l.lam(m, i, 0)];
        const Eigen::Vector4d& bb = b[m][i];
        const double sep = lam[0] * (s - bb[0]) + lam[1] * (-s - bb[1]) +
                           lam[2] * (e - bb[2]) + lam[3] * (-e - bb[3]);
        c[l.obca(m, i, 0)] = d_min - sep;
        const double gs = lam[0] - lam[1], ge = lam[2] - lam[3];
        c[l.obca(m, i, 1)] = gs * gs + ge * ge - 1.0;
      }
    }
  };
  p.jacobian = [=](const nlp::Vector& x, std::vector<nlp::Triplet>& t) {
    for (int i = 0; i < n; ++i) {
      const double v = x[l.st(i, kV)], psi = x[l.st(i, kEpsi)];
      const double kappa = x[l.in(i, 1)] / kc;
      const double cs = std::cos(psi), sn = std::sin(psi);
      const double q = kappa - kr[i];
      int r = l.dyn(i, 0);
      t.emplace_back(r, l.st(i + 1, kS), 1.0);
      t.emplace_back(r, l.st(i, kS), -1.0);
      t.emplace_back(r, l.st(i, kV), -dt * cs);
      t.emplace_back(r, l.st(i, kEpsi), dt * v * sn);
      r = l.dyn(i, 1);
      t.emplace_back(r, l.st(i + 1, kV), 1.0);
      t.emplace_back(r, l.st(i, kV), -1.0);
      t.emplace_back(r, l.in(i, 0), -dt * k_acc);
      r = l.dyn(i, 2);
      t.emplace_back(r, l.st(i + 1, kEy), 1.0);
      t.emplace_back(r, l.st(i, kEy), -1.0);
      t.emplace_back(r, l.st(i, kV), -dt * sn);
      t.emplace_back(r, l.st(i, kEpsi), -dt * v * cs);
      r = l.dyn(i, 3);
      t.emplace_back(r, l.st(i + 1, kEpsi), 1.0);
      t.emplace_back(r, l.st(i, kEpsi), -1.0 + dt * q * v * sn);
      t.emplace_back(r, l.st(i, kV), -dt * q * cs);
      t.emplace_back(r, l.in(i, 1), -dt * v * cs / kc);
    }
    for (int i = 1; i < n; ++i) {
      const double v = x[l.st(i, kV)], kt = x[l.in(i, 1)];
      for (int sign = 0; sign < 2; ++sign) {
        const double sg = sign == 0 ? 1.0 : -1.0;
        t.emplace_back(l.lat(i, sign), l.st(i, kV), sg * 2.0 * v * kt / kc);
        t.emplace_back(l.lat(i, sign), l.in(i, 1), sg * v * v / kc);
      }
    }
    for (int m = 0; m < l.svs; ++m) {
      for (int i = 1; i <= n; ++i) {
        const double s = x[l.st(i, kS)], e = x[l.st(i, kEy)];
        const double* lam = &x[l.lam(m, i, 0)];
        const Eigen::Vector4d& bb = b[m][i];
        const int r0 = l.obca(m, i, 0), r1 = l.obca(m, i, 1);
        t.emplace_back(r0, l.st(i, kS), -(lam[0] - lam[1]));
        t.emplace_back(r0, l.st(i, kEy), -(lam[2] - lam[3]));
        t.emplace_back(r0, l.lam(m, i, 0), -(s - bb[0]));
        t.emplace_back(r0, l.lam(m, i, 1), s + bb[1]);
        t.emplace_back(r0, l.lam(m, i, 2), -(e - bb[2]));
        t.emplace_back(r0, l.lam(m, i, 3), e + bb[3]);
        const double gs = 2.0 * (lam[0] - lam[1]), ge = 2.0 * (lam[2] - lam[3]);
        t.emplace_back(r1, l.lam(m, i, 0), gs);
        t.emplace_back(r1, l.lam(m, i, 1), -gs);
        t.emplace_back(r1, l.lam(m, i, 2), ge);
        t.emplace_back(r1, l.lam(m, i, 3), -ge);
      }
    }
  };
  p.hessian = [=](const nlp::Vector& x, double factor, const nlp::Vector& y,
                  std::vector<nlp::Triplet>& t) {
    for (const QuadTerm& term : terms) {
      for (std::size_t a = 0; a < term.idx.size(); ++a)
        for (std::size_t c = a; c < term.idx.size(); ++c)
          t.emplace_back(term.idx[c], term.idx[a],
                         factor * 2.0 * term.weight * term.coef[a] * term.coef[c]);
    }
    for (int i = 0; i < n; ++i) {
      const double v = x[l.st(i, kV)], psi = x[l.st(i, kEpsi)];
      const double kappa = x[l.in(i, 1)] / kc;
      const double cs = std::cos(psi), sn = std::sin(psi);
      const double q = kappa - kr[i];
      const int iv = l.st(i, kV), ip = l.st(i, kEpsi), ik = l.in(i, 1);
      const double ys = y[l.dyn(i, 0)], ye = y[l.dyn(i, 2)], yp = y[l.dyn(i, 3)];
      // -dt v cos(psi), -dt v sin(psi), -dt q v cos(psi)
      t.emplace_back(ip, iv, ys * dt * sn - ye * dt * cs + yp * dt * q * sn);
      t.emplace_back(ip, ip, ys * dt * v * cs + ye * dt * v * sn + yp * dt * q * v * cs);
      t.emplace_back(ik, iv, -yp * dt * cs / kc);
      t.emplace_back(ik, ip, yp * dt * v * sn / kc);
    }
    for (int i = 1; i < n; ++i) {
      const double v = x[l.st(i, kV)], kt = x[l.in(i, 1)];
      const double yy = y[l.lat(i, 0)] - y[l.lat(i, 1)];
      t.emplace_back(l.st(i, kV), l.st(i, kV), yy * 2.0 * kt / kc);
      t.emplace_back(l.in(i, 1), l.st(i, kV), yy * 2.0 * v / kc);
    }
    for (int m = 0; m < l.svs; ++m) {
      for (int i = 1; i <= n; ++i) {
        const double y0 = y[l.obca(m, i, 0)], y1 = y[l.obca(m, i, 1)];
        const int is = l.st(i, kS), ie = l.st(i, kEy);
        t.emplace_back(l.lam(m, i, 0), is, -y0);
        t.emplace_back(l.lam(m, i, 1), is, y0);
        t.emplace_back(l.lam(m, i, 2), ie, -y0);
        t.emplace_back(l.lam(m, i, 3), ie, y0);
        for (int j = 0; j < 4; j += 2) {
          t.emplace_back(l.lam(m, i, j), l.lam(m, i, j), 2.0 * y1);
          t.emplace_back(l.lam(m, i, j + 1), l.lam(m, i, j + 1), 2.0 * y1);
          t.emplace_back(l.lam(m, i, j + 1), l.lam(m, i, j), -2.0 * y1);
        }
      }
    }
  };

  p.lower = nlp::Vector::Constant(l.size(), -kInf);
  p.upper = nlp::Vector::Constant(l.size(), kInf);
  const LcBounds& bd = config.bounds;
  for (int i = 1; i <= n; ++i) {
    p.lower[l.st(i, kV)] = 0.0;
    p.upper[l.st(i, kV)] = vehicle.max_speed;
    p.lower[l.st(i, kEy)] = prep.e_y_min;
    p.upper[l.st(i, kEy)] = prep.e_y_max;
    p.lower[l.st(i, kEpsi)] = -bd.e_psi_bnd;
    p.upper[l.st(i, kEpsi)] = bd.e_psi_bnd;
  }
  p.lower[l.st(n, kEy)] = std::max(prep.e_y_min, prep.y_target - bd.terminal_e_y);
  p.upper[l.st(n, kEy)] = std::min(prep.e_y_max, prep.y_target + bd.terminal_e_y);
  p.lower[l.st(n, kEpsi)] = -bd.terminal_e_psi;
  p.upper[l.st(n, kEpsi)] = bd.terminal_e_psi;
  p.lower[l.st(n, kS)] = gap.s_min_free - s0;
  p.upper[l.st(n, kS)] = gap.s_max_free - s0;
  for (int i = 0; i < n; ++i) {
    p.lower[l.in(i, 0)] = vehicle.brake_torque / kTorqueUnit;
    p.upper[l.in(i, 0)] = vehicle.motor_torque / kTorqueUnit;
    p.lower[l.in(i, 1)] = -bd.kappa_bnd * kc;
    p.upper[l.in(i, 1)] = bd.kappa_bnd * kc;
  }
  for (int m = 0; m < l.svs; ++m)
    for (int i = 1; i <= n; ++i)
      for (int j = 0; j < 4; ++j) p.lower[l.lam(m, i, j)] = 0.0;
  // Initial state and first input are pinned.
  const double x0[4] = {0.0, req.ego.v, req.ego.e_y, req.ego.e_psi};
  for (int k = 0; k < 4; ++k) p.lower[l.st(0, k)] = p.upper[l.st(0, k)] = x0[k];
  p.lower[l.in(0, 0)] = p.upper[l.in(0, 0)] = prep.u0_torque / kTorqueUnit;
  p.lower[l.in(0, 1)] = p.upper[l.in(0, 1)] = prep.u0_curvature * kc;

  // Initial guess: constant acceleration into the middle of the gap and a
  // smoothstep lateral blend, with the heading and curvature it implies.
  nlp::Vector& g = p.initial_guess;
  g = nlp::Vector::Zero(l.size());
  const double horizon = n * dt;
  const double target_s = std::clamp(s0 + req.ego.v * horizon,
                                     0.75 * gap.s_min_free + 0.25 * gap.s_max_free,
                                     0.25 * gap.s_min_free + 0.75 * gap.s_max_free);
  const double v_end = std::clamp(2.0 * (target_s - s0) / horizon - req.ego.v, 0.0,
                                  vehicle.max_speed);
  const double accel = (v_end - req.ego.v) / horizon;
  std::vector<double> ey(n + 1), vv(n + 1), ss(n + 1), psi(n + 1);
  for (int i = 0; i <= n; ++i) {
    const double tau = static_cast<double>(i) / n;
    const double h = tau * tau * (3.0 - 2.0 * tau);
    ey[i] = req.ego.e_y + (prep.y_target - req.ego.e_y) * h;
    vv[i] = std::max(req.ego.v + accel * i * dt, 0.0);
    ss[i] = req.ego.v * i * dt + 0.5 * accel * (i * dt) * (i * dt);
  }
  for (int i = 0; i <= n; ++i) {
    const int a = std::min(i, n - 1);
    psi[i] = std::atan2(ey[a + 1] - ey[a], std::max(vv[i] * dt, 1e-3));
  }
  psi[0] = req.ego.e_psi;
  psi[n] = 0.0;
  for (int i = 0; i <= n; ++i) {
    g[l.st(i, kS)] = ss[i];
    g[l.st(i, kV)] = vv[i];
    g[l.st(i, kEy)] = std::clamp(ey[i], prep.e_y_min, prep.e_y_max);
    g[l.st(i, kEpsi)] = psi[i];
  }
  for (int i = 0; i < n; ++i) {
    g[l.in(i, 0)] = vehicle.torque_from_accel(accel) / kTorqueUnit;
    const double rate = (psi[i + 1] - psi[i]) / dt;
    double kappa = kr[i] + (vv[i] > 0.5 ? rate / vv[i] : 0.0);
    double k_max = bd.kappa_bnd;
    if (vv[i] > 0.0) k_max = std::min(k_max, 0.9 * a_y / (vv[i] * vv[i]));
    g[l.in(i, 1)] = std::clamp(kappa, -k_max, k_max) * kc;
  }
  g[l.in(0, 0)] = prep.u0_torque / kTorqueUnit;
  g[l.in(0, 1)] = prep.u0_curvature * kc;
  for (int m = 0; m < l.svs; ++m) {
    for (int i = 1; i <= n; ++i) {
      const Eigen::Vector4d lam = nearest_face_dual(svs_span[m], i, s0 + ss[i], ey[i]);
      for (int j = 0; j < 4; ++j) g[l.lam(m, i, j)] = 0.9 * lam[j] + 0.01;
    }
  }
  return p;
}

}  // namespace

LcBounds LcBounds::for_road(const RoadNetwork& road) {
  LcBounds b;
  b.e_y_min = road.min_lateral();
  b.e_y_max = road.max_lateral();
  return b;
}

Eigen::Matrix<double, 4, 2> SvPolytope::a() {
  Eigen::Matrix<double, 4, 2> a;
  a << 1.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0, -1.0;
  return a;
}

Eigen::Vector4d SvPolytope::b_at(int step, double dt) const {
  const double c = center_s_at(step, dt);
  return Eigen::Vector4d(c + half_length, -(c - half_length), e_y + half_width,
                         -(e_y - half_width));
}

SvPolytope enlarge_sv(const AgentState& sv, double ego_length, double ego_width) {
  if (!(sv.length > 0.0 && sv.width > 0.0 && ego_length >= 0.0 && ego_width >= 0.0)) {
    throw std::invalid_argument("enlarge_sv: dimensions must be positive");
  }
  SvPolytope p;
  p.s = sv.s;
  p.e_y = sv.e_y;
  p.v = sv.v;
  p.half_length = 0.5 * (sv.length + ego_length);
  p.half_width = 0.5 * (sv.width + ego_width);
  return p;
}

double point_to_rectangle_distance(const SvPolytope& poly, int step, double s, double e_y) {
  const double ds = std::max(std::abs(s - poly.center_s_at(step)) - poly.half_length, 0.0);
  const double de = std::max(std::abs(e_y - poly.e_y) - poly.half_width, 0.0);
  return std::hypot(ds, de);
}

FreeSpaceGap FreeSpacePolicy::select(std::span<const AgentState> svs, const AgentState& ego,
                                     int target_lane, const VehicleParams& vehicle) const {
  const double a_max = vehicle.accel_from_torque(vehicle.motor_torque);
  const double a_min = vehicle.accel_from_torque(vehicle.brake_torque);
  const double reach_lo = ego.s + distance_under_accel(ego.v, a_min, horizon,
                                                       vehicle.max_speed);
  const double reach_hi = ego.s + distance_under_accel(ego.v, a_max, horizon,
                                                       vehicle.max_speed);
  const double projection = ego.s + ego.v * horizon;
  const double min_length = std::max(2.0 * d_safe, ego.length + 2.0 * d_min);

  struct Bound {
    double s, clearance;
  };
  std::vector<Bound> terminal;
  for (const AgentState& sv : svs) {
    terminal.push_back({sv.s + sv.v * horizon,
                        std::max(d_safe, 0.5 * (sv.length + ego.length) + d_min)});
  }
  std::sort(terminal.begin(), terminal.end(),
            [](const Bound& a, const Bound& b) { return a.s < b.s; });

  std::vector<std::pair<double, double>> gaps;
  double lo = -kInf;
  for (const Bound& b : terminal) {
    gaps.emplace_back(lo, b.s - b.clearance);
    lo = std::max(lo, b.s + b.clearance);
  }
  gaps.emplace_back(lo, kInf);

  const std::pair<double, double>* preferred = nullptr;
  const std::pair<double, double>* best = nullptr;
  double best_len = 0.0, best_change = 0.0;
  std::vector<std::pair<double, double>> clipped;
  clipped.reserve(gaps.size());
  for (const auto& [glo, ghi] : gaps) {
    const double clo = std::max(glo, reach_lo), chi = std::min(ghi, reach_hi);
    if (!(chi > clo)) continue;
    clipped.emplace_back(clo, chi);
  }
  for (const auto& gap : clipped) {
    const double len = gap.second - gap.first;
    if (projection >= gap.first && projection <= gap.second) preferred = &gap;
    const double change = std::abs(0.5 * (gap.first + gap.second) - projection);
    if (best == nullptr || len > best_len + 1e-9 ||
        (std::abs(len - best_len) <= 1e-9 && change < best_change)) {
      best = &gap;
      best_len = len;
      best_change = change;
    }
  }
  const std::pair<double, double>* chosen = nullptr;
  if (preferred && preferred->second - preferred->first >= min_length) {
    chosen = preferred;
  } else if (best && best_len >= min_length) {
    chosen = best;
  }
  if (chosen == nullptr) {
    throw NoFreeSpaceError("no gap of at least " + std::to_string(min_length) +
                           " m is reachable in lane " + std::to_string(target_lane));
  }
  return {chosen->first, chosen->second, target_lane};
}

ClearanceReport verify_clearance(const PlannedTrajectory& plan,
                                 std::span<const SvPolytope> svs, double d_min) {
  ClearanceReport report;
  report.min_distance = kInf;
  for (const SvPolytope& poly : svs) {
    std::vector<double> row;
    for (int i = 0; i < static_cast<int>(plan.waypoints.size()); ++i) {
      const Waypoint& w = plan.waypoints[i];
      const double d = point_to_rectangle_distance(poly, i, w.s, w.e_y);
      row.push_back(d);
      report.min_distance = std::min(report.min_distance, d);
      if (d < d_min - 1e-4) report.ok = false;
    }
    report.distances.push_back(std::move(row));
  }
  return report;
}

void validate(const LcConfig& config, std::string_view path) {
  const std::string p(path);
  const LcWeights& w = config.weights;
  if (!(w.rho_k1 >= 0.0)) throw ConfigError(p + ".rho_k1", "must be >= 0");
  if (!(w.rho_k2 >= 0.0)) throw ConfigError(p + ".rho_k2", "must be >= 0");
  if (!(w.rho_y >= 0.0)) throw ConfigError(p + ".rho_y", "must be >= 0");
  if (!(w.rho_psi >= 0.0)) throw ConfigError(p + ".rho_psi", "must be >= 0");
  const LcBounds& b = config.bounds;
  if (!(b.e_y_max > b.e_y_min)) throw ConfigError(p + ".e_y_max", "must exceed e_y_min");
  if (!(b.e_psi_bnd > 0.0)) throw ConfigError(p + ".e_psi_bnd", "must be > 0");
  if (!(b.kappa_bnd > 0.0)) throw ConfigError(p + ".kappa_bnd", "must be > 0");
  if (!(b.a_y_bnd > 0.0)) throw ConfigError(p + ".a_y_bnd", "must be > 0");
  if (!(config.d_min > 0.0)) throw ConfigError(p + ".d_min", "must be > 0");
  if (!(config.sv_range > 0.0)) throw ConfigError(p + ".sv_range", "must be > 0");
}

nlp::Problem lc_program(const LcRequest& request, const LcConfig& config,
                        const VehicleParams& vehicle, const FreeSpaceGap& gap,
                        std::span<const SvPolytope> svs) {
  if (request.road == nullptr) throw std::invalid_argument("plan_lc: road is required");
  return build_program(request, config, vehicle, gap, svs,
                       prepare(request, config, vehicle));
}

double lc_bound_violation(const PlannedTrajectory& plan, const LcBounds& bounds,
                          double y_target, const VehicleParams& vehicle) {
  double worst = 0.0;
  for (int i = 0; i < plan.steps(); ++i) {
    const ControlInput& u = plan.inputs[i];
    const double v = plan.waypoints[i].v;
    worst = std::max({worst, std::abs(u.curvature) - bounds.kappa_bnd,
                      std::abs(v * v * u.curvature) - bounds.a_y_bnd,
                      vehicle.brake_torque - u.wheel_torque,
                      u.wheel_torque - vehicle.motor_torque});
  }
  for (const Waypoint& w : plan.waypoints) {
    worst = std::max({worst, -w.v, w.v - vehicle.max_speed, bounds.e_y_min - w.e_y,
                      w.e_y - bounds.e_y_max, std::abs(w.e_psi) - bounds.e_psi_bnd});
  }
  const Waypoint& last = plan.waypoints.back();
  worst = std::max({worst, std::abs(last.e_y - y_target) - bounds.terminal_e_y,
                    std::abs(last.e_psi) - bounds.terminal_e_psi});
  return std::max(worst, 0.0);
}

LcResult plan_lc(const LcRequest& req, const LcConfig& config, const VehicleParams& vehicle) {
  const auto started = std::chrono::steady_clock::now();
  if (req.road == nullptr) throw std::invalid_argument("plan_lc: road is required");
  if (req.steps < 3) throw std::invalid_argument("plan_lc: horizon must have at least 3 steps");
  lane_center_offset(*req.road, req.target_lane);  // throws for a bad lane

  LcResult result;
  auto finish = [&](LcStatus status, std::string reason) {
    result.status = status;
    result.reason = std::move(reason);
    result.solve_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    return result;
  };

  std::vector<AgentState> in_target;
  for (const AgentState& sv : req.svs) {
    if (sv.lane == req.target_lane) in_target.push_back(sv);
  }
  try {
    result.gap = config.free_space.select(in_target, req.ego, req.target_lane, vehicle);
  } catch (const NoFreeSpaceError& e) {
    return finish(LcStatus::kFallback, e.what());
  }

  const double horizon = req.steps * kPlanningStep;
  for (const AgentState& sv : req.svs) {
    const double near = std::abs(sv.s - req.ego.s);
    const double far = std::abs(sv.s + sv.v * horizon - (req.ego.s + req.ego.v * horizon));
    if (std::min(near, far) <= config.sv_range) {
      result.polytopes.push_back(enlarge_sv(sv, req.ego.length, req.ego.width));
    }
  }
  for (const SvPolytope& poly : result.polytopes) {
    if (point_to_rectangle_distance(poly, 0, req.ego.s, req.ego.e_y) < config.d_min) {
      return finish(LcStatus::kFallback, "initial state closer than d_min to a vehicle");
    }
  }

  const Prepared prep = prepare(req, config, vehicle);
  const nlp::Problem problem =
      build_program(req, config, vehicle, result.gap, result.polytopes, prep);
  nlp::Solution sol;
  try {
    sol = nlp::solve(problem, config.solver);
  } catch (const nlp::EvaluationError& e) {
    return finish(LcStatus::kFallback, std::string("solver evaluation error: ") + e.what());
  }
  result.solver_status = sol.status;
  result.iterations = sol.iterations;

  const int n = req.steps;
  const Layout l{n, static_cast<int>(result.polytopes.size())};
  // Waypoints are rolled out from the optimal inputs with the same road
  // curvature sequence the program used.
  PlannedTrajectory& plan = result.plan;
  plan.kind = PlanKind::kLaneChange;
  State4 x = to_state(req.ego);
  for (int i = 0; i <= n; ++i) {
    Waypoint w;
    w.t = i * kPlanningStep;
    w.s = x[kS];
    w.v = x[kV];
    w.e_y = x[kEy];
    w.e_psi = x[kEpsi];
    plan.waypoints.push_back(w);
    if (i == n) break;
    const ControlInput u{sol.x[l.in(i, 0)] * kTorqueUnit, sol.x[l.in(i, 1)] / kCurvatureUnit};
    plan.inputs.push_back(u);
    x = step_discrete(x, u, prep.road_curvature[i], vehicle);
  }
  plan.inputs[0] = {prep.u0_torque, prep.u0_curvature};
  annotate_waypoints(plan, req.road, vehicle);
  result.lambdas.assign(l.svs, std::vector<Eigen::Vector4d>(n));
  for (int m = 0; m < l.svs; ++m) {
    for (int i = 1; i <= n; ++i) {
      for (int j = 0; j < 4; ++j) result.lambdas[m][i - 1][j] = sol.x[l.lam(m, i, j)];
    }
  }
  result.clearance = verify_clearance(plan, result.polytopes, config.d_min);

  if (sol.status != nlp::Status::kOptimal) {
    return finish(LcStatus::kFallback,
                  std::string("solver status ") + std::string(nlp::to_string(sol.status)));
  }
  LcBounds bounds = config.bounds;
  bounds.e_y_min = prep.e_y_min;
  bounds.e_y_max = prep.e_y_max;
  const double violation = lc_bound_violation(plan, bounds, prep.y_target, vehicle);
  if (violation > 1e-6) {
    return finish(LcStatus::kFallback,
                  "plan violates bounds by " + std::to_string(violation));
  }
  const double s_n = plan.waypoints.back().s;
  if (s_n < result.gap.s_min_free - 1e-6 || s_n > result.gap.s_max_free + 1e-6) {
    return finish(LcStatus::kFallback, "terminal position outside the free gap");
  }
  if (!result.clearance.ok) {
    return finish(LcStatus::kFallback, "clearance check failed");
  }
  return finish(LcStatus::kAccepted, "");
}

}  // namespace ecolane

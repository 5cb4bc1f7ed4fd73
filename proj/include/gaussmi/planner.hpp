#pragma once

// Viewpoint primitive library and next-best-view selection.
//
// Each candidate action (lateral speed, vertical speed, yaw rate) is forward-propagated
// for a fixed duration to a hover viewpoint; a closed-form minimum-snap primitive joins
// the current flat-output state to it. Candidates are scored by R = w_I * I - w_J * J.

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <span>
#include <vector>

#include "gaussmi/gauss_mi.hpp"
#include "gaussmi/types.hpp"

namespace gaussmi {

struct Action {
  double v_xy = 0.0;
  double v_z = 0.0;
  double omega_z = 0.0;
};

/// Position and its first three derivatives along one axis.
struct AxisState {
  double p = 0.0, v = 0.0, a = 0.0, j = 0.0;
};

/// Closed-form minimum-snap polynomial along one axis:
/// p(t) = alpha t^7/1680 + beta t^6/240 + gamma t^5/40 + delta t^4/8 + j0 t^3/6 + a0 t^2/2 + v0 t + p0.
struct AxisPrimitive {
  double alpha = 0.0, beta = 0.0, gamma = 0.0, delta = 0.0;
  AxisState start;

  AxisState eval(double t) const {
    const double t2 = t * t, t3 = t2 * t, t4 = t3 * t, t5 = t4 * t, t6 = t5 * t, t7 = t6 * t;
    const auto& s = start;
    AxisState o;
    o.p = alpha * t7 / 1680.0 + beta * t6 / 240.0 + gamma * t5 / 40.0 + delta * t4 / 8.0 + s.j * t3 / 6.0 +
          s.a * t2 / 2.0 + s.v * t + s.p;
    o.v = alpha * t6 / 240.0 + beta * t5 / 40.0 + gamma * t4 / 8.0 + delta * t3 / 2.0 + s.j * t2 / 2.0 + s.a * t + s.v;
    o.a = alpha * t5 / 40.0 + beta * t4 / 8.0 + gamma * t3 / 2.0 + 1.5 * delta * t2 + s.j * t + s.a;
    o.j = alpha * t4 / 8.0 + beta * t3 / 2.0 + 1.5 * gamma * t2 + 3.0 * delta * t + s.j;
    return o;
  }

  double snap(double t) const { return 0.5 * alpha * t * t * t + 1.5 * beta * t * t + 3.0 * gamma * t + 3.0 * delta; }

  /// Mean squared snap over [0, T] in closed form.
  double cost(double T) const {
    const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T;
    return alpha * alpha * T6 / 28.0 + alpha * beta * T5 / 4.0 + (0.45 * beta * beta + 0.6 * alpha * gamma) * T4 +
           (0.75 * alpha * delta + 2.25 * beta * gamma) * T3 + (3.0 * gamma * gamma + 3.0 * beta * delta) * T2 +
           9.0 * gamma * delta * T + 9.0 * delta * delta;
  }
};

inline AxisPrimitive solve_axis(const AxisState& x0, const AxisState& xf, double T) {
  const double T2 = T * T, T3 = T2 * T, T4 = T3 * T, T5 = T4 * T, T6 = T5 * T, T7 = T6 * T;
  const double dp = xf.p - x0.p - x0.v * T - 0.5 * x0.a * T2 - x0.j * T3 / 6.0;
  const double dv = xf.v - x0.v - x0.a * T - 0.5 * x0.j * T2;
  const double da = xf.a - x0.a - x0.j * T;
  const double dj = xf.j - x0.j;
  AxisPrimitive p;
  p.start = x0;
  p.alpha = (-33600.0 * dp + 16800.0 * T * dv - 3360.0 * T2 * da + 280.0 * T3 * dj) / T7;
  p.beta = (16800.0 * T * dp - 8160.0 * T2 * dv + 1560.0 * T3 * da - 120.0 * T4 * dj) / T7;
  p.gamma = (-3360.0 * T2 * dp + 1560.0 * T3 * dv - 280.0 * T4 * da + 20.0 * T5 * dj) / T7;
  p.delta = (280.0 * T3 * dp - 120.0 * T4 * dv + 20.0 * T5 * da - (4.0 / 3.0) * T6 * dj) / T7;
  return p;
}

/// Flat-output trajectory: x, y, z and yaw (index 3) polynomials over `duration`.
struct MotionPrimitive {
  std::array<AxisPrimitive, 4> axes;
  double duration = 0.0;
  double snap_cost = 0.0;
};

/// Sum of the per-axis closed-form costs over x, y, z (yaw excluded).
/// With `integral` set, returns the raw integral of squared snap instead of its mean.
inline double primitive_cost(const MotionPrimitive& prim, bool integral = false) {
  double j = 0.0;
  for (int a = 0; a < 3; ++a) j += prim.axes[static_cast<std::size_t>(a)].cost(prim.duration);
  return integral ? j * prim.duration : j;
}

inline MotionPrimitive min_snap_primitive(const std::array<AxisState, 4>& start, const std::array<AxisState, 4>& goal,
                                          double T, bool integral_cost = false) {
  if (!(T > 0.0) || !std::isfinite(T)) throw Error("min_snap_primitive: duration must be positive and finite");
  for (const auto* s : {&start, &goal})
    for (const auto& ax : *s)
      if (!std::isfinite(ax.p) || !std::isfinite(ax.v) || !std::isfinite(ax.a) || !std::isfinite(ax.j))
        throw Error("min_snap_primitive: non-finite endpoint");
  MotionPrimitive prim;
  prim.duration = T;
  for (std::size_t a = 0; a < 4; ++a) prim.axes[a] = solve_axis(start[a], goal[a], T);
  prim.snap_cost = primitive_cost(prim, integral_cost);
  return prim;
}

inline std::array<AxisState, 4> flat_state(const Viewpoint& v) {
  std::array<AxisState, 4> s;
  for (int a = 0; a < 3; ++a) s[static_cast<std::size_t>(a)] = {v.position[a], v.velocity[a], v.acceleration[a], v.jerk[a]};
  s[3] = {v.yaw, v.yaw_rate, 0.0, 0.0};
  return s;
}

/// Primitive between two viewpoints, with the goal yaw replaced by its unwrapped value.
inline MotionPrimitive primitive_between(const Viewpoint& from, const Viewpoint& to, double T, bool integral_cost,
                                         double goal_yaw_unwrapped) {
  auto goal = flat_state(to);
  goal[3].p = goal_yaw_unwrapped;
  return min_snap_primitive(flat_state(from), goal, T, integral_cost);
}

inline Viewpoint primitive_sample(const MotionPrimitive& prim, double t) {
  constexpr double kSlack = 1e-12;
  if (!(t >= -kSlack && t <= prim.duration + kSlack)) throw Error("primitive_sample: t outside [0, T]");
  t = std::clamp(t, 0.0, prim.duration);
  Viewpoint v;
  for (int a = 0; a < 3; ++a) {
    const auto s = prim.axes[static_cast<std::size_t>(a)].eval(t);
    v.position[a] = s.p;
    v.velocity[a] = s.v;
    v.acceleration[a] = s.a;
    v.jerk[a] = s.j;
  }
  const auto yaw = prim.axes[3].eval(t);
  v.yaw = wrap_angle(yaw.p);
  v.yaw_rate = yaw.v;
  return v;
}

inline std::vector<Action> action_space(const SystemConfig& cfg) {
  if (cfg.V_xy.empty() || cfg.V_z.empty() || cfg.Omega_z.empty()) throw Error("action_space: empty sample set");
  std::vector<Action> out;
  out.reserve(cfg.V_xy.size() * cfg.V_z.size() * cfg.Omega_z.size());
  for (double vxy : cfg.V_xy)
    for (double vz : cfg.V_z)
      for (double w : cfg.Omega_z) out.push_back({vxy, vz, w});
  return out;
}

/// Hover viewpoint reached by holding `a` for duration T (lateral motion along body y).
inline Viewpoint propagate(const Viewpoint& s0, const Action& a, double T) {
  if (!(T > 0.0)) throw Error("propagate: duration must be positive");
  const double heading = s0.yaw + a.omega_z * T;
  Viewpoint f;
  f.position = s0.position + Vec3(-a.v_xy * T * std::sin(heading), a.v_xy * T * std::cos(heading), a.v_z * T);
  f.yaw = wrap_angle(heading);
  return f;
}

/// Primitive realizing `a` from `s0`; yaw follows the unwrapped rotation omega_z * T.
inline MotionPrimitive action_primitive(const Viewpoint& s0, const Action& a, const SystemConfig& cfg) {
  const Viewpoint goal = propagate(s0, a, cfg.T);
  return primitive_between(s0, goal, cfg.T, cfg.snap_cost_integral, s0.yaw + a.omega_z * cfg.T);
}

constexpr int kSafetySamples = 20;

/// True iff every sample (dt = T/20) stays inside the workspace box and at least
/// clearance_radius away from every Gaussian with opacity > 0.5.
inline bool safety_check(const MotionPrimitive& prim, const GaussianMap& map, const SystemConfig& cfg) {
  const double r2 = cfg.clearance_radius * cfg.clearance_radius;
  for (int s = 0; s <= kSafetySamples; ++s) {
    const Vec3 p = primitive_sample(prim, prim.duration * s / kSafetySamples).position;
    if ((p.array() < cfg.workspace_min.array()).any() || (p.array() > cfg.workspace_max.array()).any()) return false;
    for (const auto& g : map)
      if (g.opacity > 0.5 && (g.position - p).squaredNorm() < r2) return false;
  }
  return true;
}

struct Candidate {
  std::size_t action_index = 0;
  Action action;
  Viewpoint goal;
  MotionPrimitive primitive;
  bool safe = false;
  double mi = 0.0;
  double cost = 0.0;
  double reward = -std::numeric_limits<double>::infinity();
};

class PlannerDeadlock : public Error {
 public:
  PlannerDeadlock() : Error("planner deadlock: no safe motion primitive") {}
};

/// Highest-reward safe candidate; ties go to the lowest action index regardless of
/// the order of `candidates`.
inline const Candidate& best_candidate(std::span<const Candidate> candidates) {
  const Candidate* best = nullptr;
  for (const auto& c : candidates) {
    if (!c.safe) continue;
    if (!best || c.reward > best->reward || (c.reward == best->reward && c.action_index < best->action_index))
      best = &c;
  }
  if (!best) throw PlannerDeadlock();
  return *best;
}

/// Builds the primitive library from `state`. MI is evaluated only for safe candidates
/// when `with_mi` is set.
inline std::vector<Candidate> evaluate_candidates(const GaussianMap& map, const Viewpoint& state,
                                                  const SystemConfig& cfg, bool with_mi = true) {
  const auto actions = action_space(cfg);
  std::vector<Candidate> out(actions.size());
  for (std::size_t a = 0; a < actions.size(); ++a) {
    Candidate& c = out[a];
    c.action_index = a;
    c.action = actions[a];
    c.goal = propagate(state, actions[a], cfg.T);
    c.primitive = action_primitive(state, actions[a], cfg);
    c.cost = c.primitive.snap_cost;
    c.safe = safety_check(c.primitive, map, cfg);
    if (c.safe && with_mi) c.mi = evaluate_gauss_mi(map, c.goal, cfg.camera, cfg.noise).total_mi;
    c.reward = cfg.w_I * c.mi - cfg.w_J * c.cost;
  }
  return out;
}

struct NbvResult {
  Candidate chosen;
  MIResult chosen_mi;
  std::vector<Candidate> candidates;
};

inline NbvResult select_nbv(const GaussianMap& map, const Viewpoint& state, const SystemConfig& cfg) {
  NbvResult res;
  res.candidates = evaluate_candidates(map, state, cfg);
  res.chosen = best_candidate(res.candidates);
  res.chosen_mi = evaluate_gauss_mi(map, res.chosen.goal, cfg.camera, cfg.noise);
  return res;
}

}  // namespace gaussmi

#include "curricula/env.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

namespace curricula {

namespace {
double dist2(const std::array<double, 2>& a, const std::array<double, 2>& b) {
  const double dx = a[0] - b[0], dy = a[1] - b[1];
  return dx * dx + dy * dy;
}
}  // namespace

std::string family_name(EnvFamily family) {
  return family == EnvFamily::kSimpleSpread ? "simple_spread" : "push_ball";
}

EnvFamily family_from_string(const std::string& name) {
  if (name == "simple_spread") return EnvFamily::kSimpleSpread;
  if (name == "push_ball") return EnvFamily::kPushBall;
  throw std::invalid_argument("unknown env family: " + name);
}

int ParticleEnv::observation_dim(EnvFamily family, int entity_slots) {
  const int types = family == EnvFamily::kPushBall ? 3 : 2;  // landmarks, agents(, balls)
  return 4 + types * entity_slots * 3;
}

ParticleEnv::ParticleEnv(TaskSpec spec, PhysicsConfig physics,
                         const std::vector<int>& allowed_populations)
    : spec_(spec), physics_(physics) {
  if (std::find(allowed_populations.begin(), allowed_populations.end(), spec.population) ==
      allowed_populations.end())
    throw std::invalid_argument("make_task: population " + std::to_string(spec.population) +
                                " is outside the configured task space");
  if (spec.max_steps <= 0) throw std::invalid_argument("make_task: max_steps must be positive");
}

ParticleEnv make_task(const TaskSpec& spec, const PhysicsConfig& physics,
                      const std::vector<int>& allowed_populations) {
  return ParticleEnv(spec, physics, allowed_populations);
}

int ParticleEnv::obs_dim() const { return observation_dim(spec_.family, physics_.entity_slots); }

Matrix ParticleEnv::reset(uint64_t seed) {
  Rng rng(seed);
  const int n = spec_.population;
  const bool balls = spec_.family == EnvFamily::kPushBall;
  const int total = balls ? 3 * n : 2 * n;
  const double min_sep = 2.0 * physics_.collision_radius;

  std::vector<std::array<double, 2>> placed;
  placed.reserve(total);
  for (int e = 0; e < total; ++e) {
    bool ok = false;
    for (int attempt = 0; attempt < 100000 && !ok; ++attempt) {
      std::array<double, 2> p = {rng.uniform(-physics_.spawn_extent, physics_.spawn_extent),
                                 rng.uniform(-physics_.spawn_extent, physics_.spawn_extent)};
      ok = true;
      for (const auto& q : placed)
        if (dist2(p, q) < min_sep * min_sep) {
          ok = false;
          break;
        }
      if (ok) placed.push_back(p);
    }
    if (!ok) throw std::runtime_error("ParticleEnv::reset: could not place entities");
  }

  state_ = WorldState{};
  state_.agent_pos.assign(placed.begin(), placed.begin() + n);
  state_.agent_vel.assign(n, {0.0, 0.0});
  state_.landmark_pos.assign(placed.begin() + n, placed.begin() + 2 * n);
  if (balls) {
    state_.ball_pos.assign(placed.begin() + 2 * n, placed.begin() + 3 * n);
    state_.ball_vel.assign(n, {0.0, 0.0});
  }
  return observations();
}

int ParticleEnv::collision_pairs() const {
  const double r = 2.0 * physics_.collision_radius;
  int pairs = 0;
  for (size_t i = 0; i < state_.agent_pos.size(); ++i)
    for (size_t j = i + 1; j < state_.agent_pos.size(); ++j)
      if (dist2(state_.agent_pos[i], state_.agent_pos[j]) < r * r) ++pairs;
  return pairs;
}

double ParticleEnv::coverage_rate() const {
  const auto& coverers =
      spec_.family == EnvFamily::kPushBall ? state_.ball_pos : state_.agent_pos;
  const double rr = physics_.cover_radius * physics_.cover_radius;
  int covered = 0;
  for (const auto& lm : state_.landmark_pos) {
    for (const auto& c : coverers)
      if (dist2(lm, c) <= rr) {
        ++covered;
        break;
      }
  }
  return static_cast<double>(covered) / static_cast<double>(state_.landmark_pos.size());
}

StepOutcome ParticleEnv::step(const std::vector<int>& actions) {
  const int n = spec_.population;
  if (static_cast<int>(actions.size()) != n)
    throw std::invalid_argument("ParticleEnv::step: expected one action per agent");

  for (int j = 0; j < n; ++j) {
    if (actions[j] < 0 || actions[j] > 4)
      throw std::invalid_argument("ParticleEnv::step: action out of range");
    double fx = 0.0, fy = 0.0;
    switch (actions[j]) {
      case 1: fx = physics_.force_strength; break;
      case 2: fx = -physics_.force_strength; break;
      case 3: fy = physics_.force_strength; break;
      case 4: fy = -physics_.force_strength; break;
      default: break;
    }
    auto& v = state_.agent_vel[j];
    v[0] = (1.0 - physics_.damping) * v[0] + fx * physics_.dt;
    v[1] = (1.0 - physics_.damping) * v[1] + fy * physics_.dt;
    const double speed = std::sqrt(v[0] * v[0] + v[1] * v[1]);
    if (speed > physics_.max_speed) {
      v[0] *= physics_.max_speed / speed;
      v[1] *= physics_.max_speed / speed;
    }
    auto& p = state_.agent_pos[j];
    p[0] = std::clamp(p[0] + v[0] * physics_.dt, -1.0, 1.0);
    p[1] = std::clamp(p[1] + v[1] * physics_.dt, -1.0, 1.0);
  }

  if (spec_.family == EnvFamily::kPushBall) {
    const double contact = 2.0 * physics_.collision_radius;
    for (size_t b = 0; b < state_.ball_pos.size(); ++b) {
      auto& bv = state_.ball_vel[b];
      bv[0] *= (1.0 - physics_.damping);
      bv[1] *= (1.0 - physics_.damping);
      for (int j = 0; j < n; ++j) {
        const double dx = state_.ball_pos[b][0] - state_.agent_pos[j][0];
        const double dy = state_.ball_pos[b][1] - state_.agent_pos[j][1];
        const double d = std::sqrt(dx * dx + dy * dy);
        if (d > contact || d < 1e-12) continue;
        // Inelastic push: the ball picks up the agent's approach speed along
        // the center line.
        const double ux = dx / d, uy = dy / d;
        const double va = state_.agent_vel[j][0] * ux + state_.agent_vel[j][1] * uy;
        const double vb = bv[0] * ux + bv[1] * uy;
        if (va > vb) {
          bv[0] += (va - vb) * ux;
          bv[1] += (va - vb) * uy;
        }
      }
      const double speed = std::sqrt(bv[0] * bv[0] + bv[1] * bv[1]);
      if (speed > physics_.max_speed) {
        bv[0] *= physics_.max_speed / speed;
        bv[1] *= physics_.max_speed / speed;
      }
      auto& bp = state_.ball_pos[b];
      bp[0] = std::clamp(bp[0] + bv[0] * physics_.dt, -1.0, 1.0);
      bp[1] = std::clamp(bp[1] + bv[1] * physics_.dt, -1.0, 1.0);
    }
  }

  ++state_.step_counter;

  StepOutcome out;
  out.coverage = coverage_rate();
  const bool all_covered = out.coverage >= 1.0;
  out.shared_reward = -physics_.collision_penalty * collision_pairs();
  if (all_covered && !state_.completed) {
    out.shared_reward += physics_.success_bonus;
    state_.completed = true;
  }
  out.done = all_covered || state_.step_counter >= spec_.max_steps;
  out.observations = observations();
  return out;
}

void ParticleEnv::observe_entities(int agent, const std::vector<std::array<double, 2>>& entities,
                                   bool skip_self, double* out) const {
  const auto& self = state_.agent_pos[agent];
  std::vector<std::pair<double, int>> order;
  order.reserve(entities.size());
  for (size_t i = 0; i < entities.size(); ++i) {
    if (skip_self && static_cast<int>(i) == agent) continue;
    order.emplace_back(dist2(self, entities[i]), static_cast<int>(i));
  }
  std::sort(order.begin(), order.end());
  const int slots = physics_.entity_slots;
  for (int s = 0; s < slots; ++s) {
    if (s < static_cast<int>(order.size())) {
      const auto& e = entities[order[s].second];
      out[3 * s + 0] = e[0] - self[0];
      out[3 * s + 1] = e[1] - self[1];
      out[3 * s + 2] = 1.0;
    } else {
      out[3 * s + 0] = 0.0;
      out[3 * s + 1] = 0.0;
      out[3 * s + 2] = 0.0;
    }
  }
}

Matrix ParticleEnv::observations() const {
  const int n = spec_.population;
  const int slots = physics_.entity_slots;
  Matrix obs(n, obs_dim());
  for (int j = 0; j < n; ++j) {
    double* row = &obs.data[static_cast<size_t>(j) * obs.cols];
    row[0] = state_.agent_pos[j][0];
    row[1] = state_.agent_pos[j][1];
    row[2] = state_.agent_vel[j][0];
    row[3] = state_.agent_vel[j][1];
    double* cursor = row + 4;
    observe_entities(j, state_.landmark_pos, false, cursor);
    cursor += 3 * slots;
    observe_entities(j, state_.agent_pos, true, cursor);
    cursor += 3 * slots;
    if (spec_.family == EnvFamily::kPushBall) observe_entities(j, state_.ball_pos, false, cursor);
  }
  return obs;
}

}  // namespace curricula

#pragma once

#include <algorithm>
#include <cmath>
#include <string>

#include "vsg/env.hpp"
#include "vsg/random.hpp"

namespace vsg {

struct Vec2 {
  double x = 0, y = 0;
  Vec2 operator+(Vec2 o) const { return {x + o.x, y + o.y}; }
  Vec2 operator-(Vec2 o) const { return {x - o.x, y - o.y}; }
  Vec2 operator*(double s) const { return {x * s, y * s}; }
  double dot(Vec2 o) const { return x * o.x + y * o.y; }
  double norm() const { return std::sqrt(x * x + y * y); }
};

enum class ArenaSize { kBasic, kSmall, kMedium, kLarge };

inline ArenaSize arena_size_from_string(const std::string& s) {
  if (s == "basic") return ArenaSize::kBasic;
  if (s == "small") return ArenaSize::kSmall;
  if (s == "medium") return ArenaSize::kMedium;
  if (s == "large") return ArenaSize::kLarge;
  fail<ConfigError>("unknown arena size: ", s, " (expected basic|small|medium|large)");
}

inline double arena_scale(ArenaSize s) {
  switch (s) {
    case ArenaSize::kBasic: return 1.0;
    case ArenaSize::kSmall: return 1.25;
    case ArenaSize::kMedium: return 1.5;
    case ArenaSize::kLarge: return 2.0;
  }
  return 1.0;
}

struct PhysicsParams {
  double elasticity_body = 1.0;
  double elasticity_wall = 0.7;
  double damping = 0.3;  // per simulated second: v <- v * (1-damping)^dt
  double dt = 1.0 / 60.0;
  double max_accel = 0.6;  // full-throttle acceleration, world units / s^2
};

struct ArenaConfig {
  ArenaSize size = ArenaSize::kBasic;
  int n_objects = 5;
  int n_distractors = 0;
  int resolution = 32;
  int max_steps = 3000;
  int action_repeat = 4;
  uint64_t seed = 0;
  double arena_base = 16.0;      // Basic side length; a full-throttle crossing
                                 // takes about 150 env steps
  double view_size = 9.0;        // egocentric window side, fixed in world units
  double goal_fraction = 0.12;   // goal strip depth as a fraction of the side
  double distractor_kick = 0.25; // Brownian velocity increment per sub-step
  PhysicsParams physics;

  double side() const { return arena_base * arena_scale(size); }
  double view_fraction() const { return view_size / side(); }
};

enum class BodyKind { kAgent, kObject, kDistractor };

struct Body {
  Vec2 pos, vel;
  double radius = 0.5;
  double mass = 1.0;
  BodyKind kind = BodyKind::kObject;
  int shape_tag = 0;  // 0 circle, 1 square, 2 triangle, 3 diamond, 4 cross
  int color_tag = 0;
  bool scored = false;
  bool visited = false;
  int first_visit_step = -1;
  int scored_step = -1;

  bool active() const { return !scored; }
};

struct ArenaState {
  std::vector<Body> bodies;  // [0] agent, then objects, then distractors
  int step_count = 0;
  bool done = false;
  Rng rng{0};

  Body& agent() { return bodies[0]; }
  const Body& agent() const { return bodies[0]; }
};

// Impulse resolution for two circles; restitution is the minimum of the two
// elasticities. Positional correction separates overlap without touching
// velocities, so kinetic energy is exactly preserved when e = 1.
inline void resolve_circle_pair(Body& a, Body& b, double elasticity) {
  Vec2 delta = b.pos - a.pos;
  double dist = delta.norm();
  const double overlap = a.radius + b.radius - dist;
  if (overlap <= 0) return;
  Vec2 n = dist > 1e-12 ? delta * (1.0 / dist) : Vec2{1, 0};
  const double inv_ma = 1.0 / a.mass, inv_mb = 1.0 / b.mass;
  const double rel_n = (b.vel - a.vel).dot(n);
  if (rel_n < 0) {
    const double j = -(1.0 + elasticity) * rel_n / (inv_ma + inv_mb);
    a.vel = a.vel - n * (j * inv_ma);
    b.vel = b.vel + n * (j * inv_mb);
  }
  const double corr = overlap / (inv_ma + inv_mb);
  a.pos = a.pos - n * (corr * inv_ma);
  b.pos = b.pos + n * (corr * inv_mb);
}

// Walls clamp position and reflect the inbound normal velocity with
// restitution min(body, wall).
inline void resolve_walls(Body& b, double side, double elasticity) {
  if (b.pos.x - b.radius < 0) {
    b.pos.x = b.radius;
    if (b.vel.x < 0) b.vel.x = -elasticity * b.vel.x;
  }
  if (b.pos.x + b.radius > side) {
    b.pos.x = side - b.radius;
    if (b.vel.x > 0) b.vel.x = -elasticity * b.vel.x;
  }
  if (b.pos.y - b.radius < 0) {
    b.pos.y = b.radius;
    if (b.vel.y < 0) b.vel.y = -elasticity * b.vel.y;
  }
  if (b.pos.y + b.radius > side) {
    b.pos.y = side - b.radius;
    if (b.vel.y > 0) b.vel.y = -elasticity * b.vel.y;
  }
}

// One semi-implicit Euler sub-step: apply forces and Brownian kicks, damp,
// integrate, then resolve collisions.
inline void physics_substep(ArenaState& st, Vec2 agent_accel, double side,
                            const PhysicsParams& p, double distractor_kick) {
  const double damp = std::pow(1.0 - p.damping, p.dt);
  for (auto& b : st.bodies) {
    if (!b.active()) continue;
    if (b.kind == BodyKind::kAgent) b.vel = b.vel + agent_accel * p.dt;
    if (b.kind == BodyKind::kDistractor) {
      b.vel.x += st.rng.normal() * distractor_kick;
      b.vel.y += st.rng.normal() * distractor_kick;
    }
    b.vel = b.vel * damp;
    b.pos = b.pos + b.vel * p.dt;
  }
  const size_t n = st.bodies.size();
  for (size_t i = 0; i < n; ++i) {
    if (!st.bodies[i].active()) continue;
    for (size_t j = i + 1; j < n; ++j) {
      if (!st.bodies[j].active()) continue;
      resolve_circle_pair(st.bodies[i], st.bodies[j], p.elasticity_body);
    }
  }
  const double wall_e = std::min(p.elasticity_body, p.elasticity_wall);
  for (auto& b : st.bodies)
    if (b.active()) resolve_walls(b, side, wall_e);
}

// ---------------------------------------------------------------------------
// Rendering. Software-rasterized point sampling: every pixel is classified
// against background, goal, walls and bodies (agent last, on top).

namespace palette {
inline constexpr uint8_t kObjectColors[5][3] = {
    {205, 65, 65},    // red
    {222, 205, 64},   // yellow
    {150, 72, 205},   // purple
    {230, 140, 48},   // orange
    {226, 106, 170},  // pink
};
inline constexpr uint8_t kAgent[3] = {38, 158, 181};      // teal blue
inline constexpr uint8_t kDistractor[3] = {236, 236, 221};  // whitish
inline constexpr uint8_t kGoal[3] = {58, 178, 82};
inline constexpr uint8_t kBackground[3] = {32, 32, 38};
inline constexpr uint8_t kWall[3] = {92, 82, 72};
}  // namespace palette

inline bool point_in_shape(double dx, double dy, double r, int shape_tag) {
  switch (shape_tag) {
    case 0: return dx * dx + dy * dy <= r * r;
    case 1: return std::fabs(dx) <= 0.85 * r && std::fabs(dy) <= 0.85 * r;
    case 2: {  // triangle, apex up
      if (dy < -0.8 * r || dy > r) return false;
      const double half_width = 0.9 * r * (r - dy) / (1.8 * r);
      return std::fabs(dx) <= half_width;
    }
    case 3: return std::fabs(dx) + std::fabs(dy) <= r;
    case 4:
      return (std::fabs(dx) <= 0.35 * r && std::fabs(dy) <= r) ||
             (std::fabs(dy) <= 0.35 * r && std::fabs(dx) <= r);
    default: return false;
  }
}

// Window of world-units `window` centered at `center`, rendered to res x res
// RGB. Row 0 is the top of the window (+y).
inline std::vector<uint8_t> render_window(const ArenaState& st, const ArenaConfig& cfg,
                                          Vec2 center, double window, int res) {
  std::vector<uint8_t> img(static_cast<size_t>(res) * res * 3);
  const double side = cfg.side();
  const double goal_x = side * (1.0 - cfg.goal_fraction);
  const double px_size = window / res;
  for (int py = 0; py < res; ++py) {
    const double wy = center.y + window / 2 - (py + 0.5) * px_size;
    for (int px = 0; px < res; ++px) {
      const double wx = center.x - window / 2 + (px + 0.5) * px_size;
      const uint8_t* color = palette::kBackground;
      if (wx < 0 || wx > side || wy < 0 || wy > side) {
        color = palette::kWall;
      } else {
        if (wx >= goal_x) color = palette::kGoal;
        for (const auto& b : st.bodies) {
          if (!b.active() || b.kind == BodyKind::kAgent) continue;
          if (point_in_shape(wx - b.pos.x, wy - b.pos.y, b.radius,
                             b.kind == BodyKind::kDistractor ? 2 : b.shape_tag)) {
            color = b.kind == BodyKind::kDistractor
                        ? palette::kDistractor
                        : palette::kObjectColors[b.color_tag];
          }
        }
        const Body& agent = st.agent();
        if (point_in_shape(wx - agent.pos.x, wy - agent.pos.y, agent.radius, 0))
          color = palette::kAgent;
      }
      uint8_t* dst = img.data() + (static_cast<size_t>(py) * res + px) * 3;
      dst[0] = color[0];
      dst[1] = color[1];
      dst[2] = color[2];
    }
  }
  return img;
}

inline std::vector<uint8_t> render_partial(const ArenaState& st, const ArenaConfig& cfg,
                                           int res) {
  return render_window(st, cfg, st.agent().pos, cfg.view_size, res);
}

inline std::vector<uint8_t> render_full(const ArenaState& st, const ArenaConfig& cfg,
                                        int res) {
  const double side = cfg.side();
  return render_window(st, cfg, {side / 2, side / 2}, side * 1.05, res);
}

// ---------------------------------------------------------------------------

class BbsEnv : public Env {
 public:
  explicit BbsEnv(const ArenaConfig& cfg) : cfg_(cfg) {}

  int action_dim() const override { return 2; }
  int resolution() const override { return cfg_.resolution; }
  const ArenaConfig& config() const { return cfg_; }
  const ArenaState& state() const { return state_; }
  ArenaState& mutable_state() { return state_; }

  std::vector<uint8_t> reset(uint64_t seed) override {
    for (uint64_t sub = 0;; ++sub) {
      if (try_place(seed + sub)) break;
      VSG_CHECK(sub < 64, "bbs reset: placement failed across 64 sub-seeds");
    }
    state_.step_count = 0;
    state_.done = false;
    check_visit_and_score();  // initial visibility flags, nothing can score yet
    return render_partial(state_, cfg_, cfg_.resolution);
  }

  EnvStep step(const std::vector<float>& action) override {
    VSG_CHECK(!state_.done, "bbs step: episode is done, call reset");
    VSG_CHECK(action.size() == 2, "bbs step: expected 2-dim action, got ", action.size());
    const double a0 = std::clamp(static_cast<double>(action[0]), -1.0, 1.0);
    const double a1 = std::clamp(static_cast<double>(action[1]), -1.0, 1.0);
    const double angle = M_PI * a0;
    const double mag = (a1 + 1.0) / 2.0 * cfg_.physics.max_accel;
    const Vec2 accel{mag * std::cos(angle), mag * std::sin(angle)};

    for (int k = 0; k < cfg_.action_repeat; ++k)
      physics_substep(state_, accel, cfg_.side(), cfg_.physics, cfg_.distractor_kick);
    ++state_.step_count;

    EnvStep out;
    out.reward = static_cast<float>(check_visit_and_score());
    scored_total_ += static_cast<int>(out.reward);
    if (scored_total_ >= cfg_.n_objects || state_.step_count >= cfg_.max_steps)
      state_.done = true;
    out.done = state_.done;
    out.obs = render_partial(state_, cfg_, cfg_.resolution);
    return out;
  }

  int scored_total() const { return scored_total_; }

  // Objects become visited the first step their full extent lies inside the
  // view window; they score (and leave play) when their center enters the
  // goal strip. Returns the number of newly scored objects.
  int check_visit_and_score() {
    const double side = cfg_.side();
    const double goal_x = side * (1.0 - cfg_.goal_fraction);
    const double half = cfg_.view_size / 2;
    const Vec2 apos = state_.agent().pos;
    int newly_scored = 0;
    for (auto& b : state_.bodies) {
      if (b.kind != BodyKind::kObject || !b.active()) continue;
      if (!b.visited && std::fabs(b.pos.x - apos.x) + b.radius <= half &&
          std::fabs(b.pos.y - apos.y) + b.radius <= half) {
        b.visited = true;
        b.first_visit_step = state_.step_count;
      }
      if (b.pos.x >= goal_x) {
        b.scored = true;
        b.scored_step = state_.step_count;
        ++newly_scored;
      }
    }
    return newly_scored;
  }

 private:
  bool try_place(uint64_t seed) {
    state_ = ArenaState{};
    state_.rng = Rng(seed ^ 0xbb5000000000000full);
    const double side = cfg_.side();
    const double goal_x = side * (1.0 - cfg_.goal_fraction);

    auto place = [&](Body proto) -> bool {
      for (int attempt = 0; attempt < 200; ++attempt) {
        const double margin = proto.radius + 0.05;
        proto.pos.x = state_.rng.uniform(margin, side - margin);
        proto.pos.y = state_.rng.uniform(margin, side - margin);
        if (proto.pos.x + proto.radius >= goal_x) continue;  // outside the goal
        bool clear = true;
        for (const auto& other : state_.bodies)
          if ((proto.pos - other.pos).norm() < proto.radius + other.radius + 0.1) {
            clear = false;
            break;
          }
        if (clear) {
          state_.bodies.push_back(proto);
          return true;
        }
      }
      return false;
    };

    Body agent;
    agent.kind = BodyKind::kAgent;
    agent.radius = 0.55;
    agent.mass = 1.0;
    if (!place(agent)) return false;
    for (int i = 0; i < cfg_.n_objects; ++i) {
      Body obj;
      obj.kind = BodyKind::kObject;
      obj.radius = 0.45;
      obj.mass = 0.6;
      obj.shape_tag = static_cast<int>(state_.rng.next_below(5));
      obj.color_tag = static_cast<int>(state_.rng.next_below(5));
      if (!place(obj)) return false;
    }
    for (int i = 0; i < cfg_.n_distractors; ++i) {
      Body d;
      d.kind = BodyKind::kDistractor;
      d.radius = 0.4;
      d.mass = 0.5;
      if (!place(d)) return false;
    }
    scored_total_ = 0;
    return true;
  }

  ArenaConfig cfg_;
  ArenaState state_;
  int scored_total_ = 0;
};

}  // namespace vsg

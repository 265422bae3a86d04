#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "dnrl/errors.hpp"
#include "dnrl/rng.hpp"
#include "dnrl/sim.hpp"
#include "dnrl/world.hpp"

namespace dnrl {

enum class Task : std::uint8_t { Avoid = 0, Goal = 1 };
enum class RewardKind : std::uint8_t { Simple = 0, Behaviour = 1, NegativeGoal = 2, PositiveGoal = 3 };
enum class Terminal : std::uint8_t { None = 0, Collision = 1, GoalReached = 2, StepLimit = 3 };

/// Ten discrete (v, w) pairs: the cross product of two linear speeds and
/// five angular speeds. Index i maps to v = speeds[i / 5], w = turns[i % 5],
/// so 0..4 are the slow row and 5..9 the fast row, turns ordered from
/// -pi/6 (full right) to +pi/6 (full left).
struct ActionSpace {
    static constexpr int size = 10;
    static constexpr std::array<double, 2> speeds{0.2, 0.4};
    static constexpr std::array<double, 5> turns{-kPi / 6.0, -kPi / 12.0, 0.0, kPi / 12.0, kPi / 6.0};

    static double linear(int index) { return speeds[static_cast<std::size_t>(index / 5)]; }
    static double angular(int index) { return turns[static_cast<std::size_t>(index % 5)]; }
};

// ---- Reward functions -------------------------------------------------

/// Constant survival bonus, heavy collision penalty.
inline double reward_simple(bool collided) { return collided ? -10.0 : 0.1; }

/// Shapes toward fast, straight motion: v - |w| per surviving step.
inline double reward_behaviour(double v, double w, bool collided) {
    return collided ? -10.0 : v - std::abs(w);
}

/// Goal seeking with a constant penalty offset keeping the per-step value
/// in [-0.8, 0]: (v - c|w|) cos(theta_rel) - v_max.
inline double reward_negative_goal(double v, double w, double theta_rel, bool collided,
                                   bool reached, double c, double v_max) {
    if (collided) return -10.0;
    if (reached) return 10.0;
    return (v - c * std::abs(w)) * std::cos(theta_rel) - v_max;
}

/// Same shaping without the offset, so facing the goal earns positive reward.
inline double reward_positive_goal(double v, double w, double theta_rel, bool collided,
                                   bool reached, double c) {
    if (collided) return -10.0;
    if (reached) return 10.0;
    return (v - c * std::abs(w)) * std::cos(theta_rel);
}

/// Goal position expressed in the robot frame: straight-line distance and
/// bearing relative to the robot heading, in (-pi, pi].
inline std::pair<double, double> goal_polar(const Pose& p, Vec2 goal) {
    const double d = std::hypot(goal.x - p.x, goal.y - p.y);
    const double bearing = std::atan2(goal.y - p.y, goal.x - p.x);
    return {d, normalize_angle(bearing - p.theta)};
}

/// Scale beam depths into [0, 1]; non-finite readings read as max range.
inline std::vector<float> normalize_scan(const DepthScan& s) {
    std::vector<float> out(s.beams.size());
    for (std::size_t i = 0; i < s.beams.size(); ++i) {
        const double b = s.beams[i];
        out[i] = std::isfinite(b) ? static_cast<float>(b / s.max_range) : 1.0f;
    }
    return out;
}

// ---- Environment -------------------------------------------------------

inline constexpr int kStackFrames = 4;

/// Agent-visible state: the last four normalized scans (oldest first) plus,
/// for the goal task, the goal in robot-frame polar form (raw units).
struct Observation {
    int beams = 0;
    std::vector<float> scan_stack; // kStackFrames * beams, row-major, newest last
    bool has_goal = false;
    float goal_distance = 0.0f;
    float goal_heading = 0.0f;
};

struct SensorConfig {
    int beams = 80;
    double fov = 1.0123;
    double max_range = 3.5;
};

struct EpisodeConfig {
    int max_steps = 400;
    double collision_distance = 0.3;
    double goal_radius = 0.8;
    RewardKind reward = RewardKind::Simple;
    double c = 0.3;    // angular penalty coefficient, <= 0.2/(pi/6)
    double v_max = 0.4;
    bool terminate_on_collision = true;

    static EpisodeConfig obstacle_training() { return {}; }
    static EpisodeConfig obstacle_evaluation() {
        EpisodeConfig e;
        e.max_steps = 100;
        e.collision_distance = 0.2;
        return e;
    }
    static EpisodeConfig goal_training() {
        EpisodeConfig e;
        e.max_steps = 350;
        e.reward = RewardKind::NegativeGoal;
        return e;
    }
    static EpisodeConfig goal_evaluation() {
        EpisodeConfig e;
        e.max_steps = 250;
        e.collision_distance = 0.2;
        e.reward = RewardKind::NegativeGoal;
        e.terminate_on_collision = false;
        return e;
    }
};

struct StepOutcome {
    Observation obs;
    double reward = 0.0;
    Terminal terminal = Terminal::None;
};

class Environment {
public:
    Environment(WorldModel world, Task task, SensorConfig sensor, EpisodeConfig episode,
                double dt = 0.1)
        : world_(std::move(world)), task_(task), sensor_(sensor), episode_(episode), dt_(dt) {
        if (task_ == Task::Goal && world_.goals.empty())
            throw ConfigError("goal task requires a world with goals");
        if (task_ == Task::Avoid &&
            (episode_.reward == RewardKind::NegativeGoal || episode_.reward == RewardKind::PositiveGoal))
            throw ConfigError("goal-seeking reward on the obstacle task");
        if (task_ == Task::Goal &&
            (episode_.reward == RewardKind::Simple || episode_.reward == RewardKind::Behaviour))
            throw ConfigError("obstacle-task reward on the goal task");
    }

    /// Draw a start pose (and goal, on the goal task) uniformly and return
    /// the initial observation, whose four frames are copies of one scan.
    Observation reset(Rng& rng) {
        const int si = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(world_.starts.size())));
        int gi = -1;
        if (task_ == Task::Goal)
            gi = static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(world_.goals.size())));
        return reset_at(si, gi);
    }

    Observation reset_at(int start_index, int goal_index) {
        if (start_index < 0 || start_index >= static_cast<int>(world_.starts.size()))
            throw UsageError("start index out of range");
        const auto& s = world_.starts[static_cast<std::size_t>(start_index)];
        pose_ = {s.x, s.y, s.theta};
        if (task_ == Task::Goal) {
            if (goal_index < 0 || goal_index >= static_cast<int>(world_.goals.size()))
                throw UsageError("goal index out of range");
            goal_ = world_.goals[static_cast<std::size_t>(goal_index)];
        }
        start_index_ = start_index;
        goal_index_ = goal_index;
        steps_ = 0;
        done_ = false;
        const auto frame = normalize_scan(render_scan(world_, pose_, sensor_.beams, sensor_.fov, sensor_.max_range));
        obs_.beams = sensor_.beams;
        obs_.scan_stack.assign(static_cast<std::size_t>(kStackFrames) * frame.size(), 0.0f);
        for (int k = 0; k < kStackFrames; ++k)
            std::copy(frame.begin(), frame.end(),
                      obs_.scan_stack.begin() + static_cast<std::ptrdiff_t>(k * frame.size()));
        obs_.has_goal = (task_ == Task::Goal);
        if (obs_.has_goal) {
            auto [d, th] = goal_polar(pose_, goal_);
            obs_.goal_distance = static_cast<float>(d);
            obs_.goal_heading = static_cast<float>(th);
        }
        return obs_;
    }

    /// Advance one control period. Deterministic given (state, action).
    StepOutcome step(int action_index) {
        if (done_) throw UsageError("step on a finished episode");
        if (action_index < 0 || action_index >= ActionSpace::size)
            throw UsageError("action index out of range");

        const double v = ActionSpace::linear(action_index);
        const double w = ActionSpace::angular(action_index);
        Pose next = step_kinematics(pose_, v, w, dt_);

        const bool contact = min_clearance(world_, {next.x, next.y}) <= episode_.collision_distance;
        bool collided = false;
        if (contact) {
            if (episode_.terminate_on_collision) {
                collided = true;
                pose_ = next;
            } else {
                collided = true; // penalized, but the robot stalls in place
                next = pose_;
            }
        } else {
            pose_ = next;
        }
        ++steps_;

        bool reached = false;
        if (task_ == Task::Goal && !collided) {
            const double d = std::hypot(goal_.x - pose_.x, goal_.y - pose_.y);
            reached = d <= episode_.goal_radius;
        }

        // Refresh the frame stack (a stalled step re-renders the same pose).
        const auto frame = normalize_scan(render_scan(world_, pose_, sensor_.beams, sensor_.fov, sensor_.max_range));
        const std::size_t n = frame.size();
        std::copy(obs_.scan_stack.begin() + static_cast<std::ptrdiff_t>(n), obs_.scan_stack.end(),
                  obs_.scan_stack.begin());
        std::copy(frame.begin(), frame.end(), obs_.scan_stack.end() - static_cast<std::ptrdiff_t>(n));

        double theta_rel = 0.0;
        if (task_ == Task::Goal) {
            auto [d, th] = goal_polar(pose_, goal_);
            obs_.goal_distance = static_cast<float>(d);
            obs_.goal_heading = static_cast<float>(th);
            theta_rel = th;
        }

        StepOutcome out;
        switch (episode_.reward) {
        case RewardKind::Simple: out.reward = reward_simple(collided); break;
        case RewardKind::Behaviour: out.reward = reward_behaviour(v, w, collided); break;
        case RewardKind::NegativeGoal:
            out.reward = reward_negative_goal(v, w, theta_rel, collided, reached, episode_.c, episode_.v_max);
            break;
        case RewardKind::PositiveGoal:
            out.reward = reward_positive_goal(v, w, theta_rel, collided, reached, episode_.c);
            break;
        }

        // Terminal precedence: Collision > GoalReached > StepLimit.
        if (collided && episode_.terminate_on_collision)
            out.terminal = Terminal::Collision;
        else if (reached)
            out.terminal = Terminal::GoalReached;
        else if (steps_ >= episode_.max_steps)
            out.terminal = Terminal::StepLimit;
        done_ = out.terminal != Terminal::None;
        out.obs = obs_;
        return out;
    }

    const Pose& pose() const { return pose_; }
    const WorldModel& world() const { return world_; }
    Task task() const { return task_; }
    const SensorConfig& sensor() const { return sensor_; }
    const EpisodeConfig& episode_config() const { return episode_; }
    int start_index() const { return start_index_; }
    int goal_index() const { return goal_index_; }
    int steps() const { return steps_; }
    double world_diagonal() const { return world_.diagonal(); }

private:
    WorldModel world_;
    Task task_;
    SensorConfig sensor_;
    EpisodeConfig episode_;
    double dt_;

    Pose pose_;
    Vec2 goal_;
    Observation obs_;
    int start_index_ = -1;
    int goal_index_ = -1;
    int steps_ = 0;
    bool done_ = true;
};

} // namespace dnrl

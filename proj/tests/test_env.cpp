#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <set>

#include "dnrl/env.hpp"
#include "dnrl/rng.hpp"

using namespace dnrl;
using Catch::Matchers::WithinAbs;

TEST_CASE("action space is the documented cross product") {
    REQUIRE(ActionSpace::size == 10);
    std::set<std::pair<double, double>> seen;
    for (int i = 0; i < 10; ++i) seen.insert({ActionSpace::linear(i), ActionSpace::angular(i)});
    CHECK(seen.size() == 10);
    CHECK_THAT(ActionSpace::linear(0), WithinAbs(0.2, 1e-15));
    CHECK_THAT(ActionSpace::angular(0), WithinAbs(-kPi / 6.0, 1e-15));
    CHECK_THAT(ActionSpace::linear(7), WithinAbs(0.4, 1e-15)); // fast straight
    CHECK_THAT(ActionSpace::angular(7), WithinAbs(0.0, 1e-15));
    CHECK_THAT(ActionSpace::angular(9), WithinAbs(kPi / 6.0, 1e-15));
    CHECK_THAT(ActionSpace::angular(4), WithinAbs(kPi / 6.0, 1e-15));
    CHECK_THAT(ActionSpace::linear(4), WithinAbs(0.2, 1e-15));
}

TEST_CASE("reward pins") {
    CHECK(reward_simple(false) == 0.1);
    CHECK(reward_simple(true) == -10.0);

    CHECK_THAT(reward_behaviour(0.4, 0.0, false), WithinAbs(0.4, 1e-15));
    CHECK_THAT(reward_behaviour(0.2, kPi / 6.0, false), WithinAbs(0.2 - kPi / 6.0, 1e-15));
    CHECK_THAT(reward_behaviour(0.4, -kPi / 12.0, false), WithinAbs(0.4 - kPi / 12.0, 1e-15));
    CHECK(reward_behaviour(0.4, 0.0, true) == -10.0);

    CHECK(reward_negative_goal(0.2, 0, 0, true, false, 0.3, 0.4) == -10.0);
    CHECK(reward_negative_goal(0.2, 0, 0, false, true, 0.3, 0.4) == 10.0);
    CHECK_THAT(reward_negative_goal(0.4, 0.0, 0.0, false, false, 0.3, 0.4), WithinAbs(0.0, 1e-15));
    CHECK_THAT(reward_negative_goal(0.4, 0.0, kPi, false, false, 0.3, 0.4), WithinAbs(-0.8, 1e-12));

    CHECK(reward_positive_goal(0.2, 0, 0, true, false, 0.3) == -10.0);
    CHECK(reward_positive_goal(0.2, 0, 0, false, true, 0.3) == 10.0);
    CHECK_THAT(reward_positive_goal(0.4, 0.0, 0.0, false, false, 0.3), WithinAbs(0.4, 1e-15));
}

TEST_CASE("behaviour reward spans the action table") {
    double lo = 1e9, hi = -1e9;
    for (int i = 0; i < 10; ++i) {
        const double r = reward_behaviour(ActionSpace::linear(i), ActionSpace::angular(i), false);
        lo = std::min(lo, r);
        hi = std::max(hi, r);
    }
    CHECK_THAT(hi, WithinAbs(0.4, 1e-15));                 // fast straight
    CHECK_THAT(lo, WithinAbs(0.2 - kPi / 6.0, 1e-15));     // slow full turn
}

TEST_CASE("negative-goal reward is confined to [-0.8, 0] away from terminal events") {
    for (int a = 0; a < 10; ++a) {
        const double v = ActionSpace::linear(a);
        const double w = ActionSpace::angular(a);
        for (int k = 0; k <= 720; ++k) {
            const double th = -kPi + 2.0 * kPi * k / 720.0;
            const double r = reward_negative_goal(v, w, th, false, false, 0.3, 0.4);
            REQUIRE(r <= 0.0);
            REQUIRE(r >= -0.8);
        }
    }
}

TEST_CASE("positive-goal reward is the negative-goal reward plus v_max") {
    Rng rng(5);
    for (int i = 0; i < 500; ++i) {
        const int a = static_cast<int>(rng.uniform_int(10));
        const double v = ActionSpace::linear(a), w = ActionSpace::angular(a);
        const double th = rng.uniform(-kPi, kPi);
        const double neg = reward_negative_goal(v, w, th, false, false, 0.3, 0.4);
        const double pos = reward_positive_goal(v, w, th, false, false, 0.3);
        REQUIRE_THAT(pos, WithinAbs(neg + 0.4, 1e-15));
    }
}

TEST_CASE("goal_polar hand cases and frame equivariance") {
    auto [d, th] = goal_polar({0, 0, 0}, {1, 1});
    CHECK_THAT(d, WithinAbs(std::sqrt(2.0), 1e-15));
    CHECK_THAT(th, WithinAbs(kPi / 4.0, 1e-15));

    auto [d2, th2] = goal_polar({0, 0, kPi}, {1, 1});
    CHECK_THAT(d2, WithinAbs(std::sqrt(2.0), 1e-15));
    CHECK_THAT(th2, WithinAbs(-3.0 * kPi / 4.0, 1e-12));

    auto [d3, th3] = goal_polar({2, -1, 0.7}, {2, -1});
    CHECK_THAT(d3, WithinAbs(0.0, 1e-15));
    (void)th3; // bearing undefined at zero distance; only d matters

    // rigid transforms of robot and goal together leave (d, theta_rel) fixed
    Rng rng(9);
    for (int i = 0; i < 200; ++i) {
        const Pose p{rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-kPi, kPi)};
        const Vec2 g{rng.uniform(-2, 2), rng.uniform(-2, 2)};
        const double rot = rng.uniform(-kPi, kPi);
        const Vec2 shift{rng.uniform(-3, 3), rng.uniform(-3, 3)};
        auto rotp = [&](Vec2 q) {
            return Vec2{q.x * std::cos(rot) - q.y * std::sin(rot) + shift.x,
                        q.x * std::sin(rot) + q.y * std::cos(rot) + shift.y};
        };
        const Vec2 rp = rotp({p.x, p.y});
        const Pose p2{rp.x, rp.y, normalize_angle(p.theta + rot)};
        auto [da, ta] = goal_polar(p, g);
        auto [db, tb] = goal_polar(p2, rotp(g));
        REQUIRE_THAT(db, WithinAbs(da, 1e-9));
        REQUIRE_THAT(tb, WithinAbs(ta, 1e-9));
    }
}

TEST_CASE("normalize_scan scales and sanitizes") {
    DepthScan s;
    s.max_range = 3.5;
    s.beams = {3.5, 0.0, 1.75, std::numeric_limits<double>::quiet_NaN()};
    const auto n = normalize_scan(s);
    CHECK_THAT(n[0], WithinAbs(1.0, 1e-7));
    CHECK_THAT(n[1], WithinAbs(0.0, 1e-7));
    CHECK_THAT(n[2], WithinAbs(0.5, 1e-7));
    CHECK_THAT(n[3], WithinAbs(1.0, 1e-7));
}

// ---- environment --------------------------------------------------------

static WorldModel square_world(double half) {
    WorldModel w;
    w.bounds = {-half, -half, half, half};
    w.starts.push_back({0, 0, 0});
    return w;
}

TEST_CASE("reset stacks four copies of the initial scan") {
    WorldModel w = square_world(2.5);
    w.starts = {{0.3, -0.2, 0.5}};
    Environment env(w, Task::Avoid, {}, EpisodeConfig::obstacle_training());
    Rng rng(3);
    const auto obs = env.reset(rng);
    REQUIRE(obs.beams == 80);
    REQUIRE(obs.scan_stack.size() == 4 * 80);
    for (int k = 1; k < 4; ++k)
        for (int i = 0; i < 80; ++i)
            REQUIRE(obs.scan_stack[k * 80 + i] == obs.scan_stack[i]);
    CHECK_FALSE(obs.has_goal);
    for (float x : obs.scan_stack) {
        REQUIRE(x >= 0.0f);
        REQUIRE(x <= 1.0f);
    }
}

TEST_CASE("reset draws start and goal uniformly from the world lists") {
    WorldModel w = square_world(3.0);
    w.starts = {{-1, -1, 0}, {1, 1, 1}, {0, -1.5, 2}};
    w.goals = {{2, 2}, {-2, 2}};
    EpisodeConfig cfg = EpisodeConfig::goal_training();
    Environment env(w, Task::Goal, {}, cfg);
    Rng rng(17);
    std::set<std::pair<int, int>> seen;
    for (int i = 0; i < 200; ++i) {
        env.reset(rng);
        REQUIRE(env.start_index() >= 0);
        REQUIRE(env.start_index() < 3);
        REQUIRE(env.goal_index() >= 0);
        REQUIRE(env.goal_index() < 2);
        seen.insert({env.start_index(), env.goal_index()});
    }
    CHECK(seen.size() == 6); // every pair shows up

    // identical seeds give identical draw sequences
    Rng r1(99), r2(99);
    Environment e1(w, Task::Goal, {}, cfg), e2(w, Task::Goal, {}, cfg);
    for (int i = 0; i < 50; ++i) {
        e1.reset(r1);
        e2.reset(r2);
        REQUIRE(e1.start_index() == e2.start_index());
        REQUIRE(e1.goal_index() == e2.goal_index());
    }
}

TEST_CASE("driving into a wall collides at the predicted step") {
    // Wall at x = 2.5, threshold 0.3: clearance 2.5 - 0.04k <= 0.3 first at k = 55.
    WorldModel w = square_world(2.5);
    Environment env(w, Task::Avoid, {}, EpisodeConfig::obstacle_training());
    env.reset_at(0, -1);
    int k = 0;
    Terminal t = Terminal::None;
    while (t == Terminal::None) {
        const auto out = env.step(7); // v = 0.4, straight
        t = out.terminal;
        ++k;
        if (t == Terminal::Collision) CHECK(out.reward == -10.0);
        else CHECK(out.reward == 0.1);
        REQUIRE(k < 100);
    }
    CHECK(t == Terminal::Collision);
    CHECK(k == 55);
    CHECK_THROWS_AS(env.step(7), UsageError);
}

TEST_CASE("a full-length surviving episode collects the survival bonus") {
    WorldModel w = square_world(2.5);
    Environment env(w, Task::Avoid, {}, EpisodeConfig::obstacle_training());
    env.reset_at(0, -1);
    double ret = 0.0;
    Terminal t = Terminal::None;
    int k = 0;
    while (t == Terminal::None) {
        const auto out = env.step(9); // tight left circle, radius 0.76 m
        ret += out.reward;
        t = out.terminal;
        ++k;
    }
    CHECK(t == Terminal::StepLimit);
    CHECK(k == 400);
    CHECK_THAT(ret, WithinAbs(40.0, 1e-9));
}

TEST_CASE("goal task terminates on arrival with +10") {
    WorldModel w = square_world(5.0);
    w.starts = {{0, 0, 0}};
    w.goals = {{1.2, 0.0}};
    Environment env(w, Task::Goal, {}, EpisodeConfig::goal_training());
    env.reset_at(0, 0);
    Terminal t = Terminal::None;
    int k = 0;
    double last = 0.0;
    while (t == Terminal::None) {
        const auto out = env.step(7);
        t = out.terminal;
        last = out.reward;
        ++k;
    }
    CHECK(t == Terminal::GoalReached);
    CHECK(k == 10); // 0.04 m per step, reached at distance <= 0.8
    CHECK(last == 10.0);
}

TEST_CASE("goal observations carry polar coordinates that shrink en route") {
    WorldModel w = square_world(5.0);
    w.starts = {{0, 0, 0}};
    w.goals = {{2.0, 0.0}};
    Environment env(w, Task::Goal, {}, EpisodeConfig::goal_training());
    auto obs = env.reset_at(0, 0);
    REQUIRE(obs.has_goal);
    CHECK_THAT(obs.goal_distance, WithinAbs(2.0, 1e-6));
    CHECK_THAT(obs.goal_heading, WithinAbs(0.0, 1e-6));
    const auto out = env.step(7);
    CHECK_THAT(out.obs.goal_distance, WithinAbs(1.96, 1e-6));
}

TEST_CASE("collision outranks goal arrival when both fire") {
    // Thin wall at x = 1.5, goal at x = 2.0 behind it: at x = 1.2 the robot
    // first satisfies both clearance <= 0.3 and d <= 0.8 on the same step.
    WorldModel w = square_world(5.0);
    w.obstacles.emplace_back(Segment{{1.5, -1.0}, {1.5, 1.0}});
    w.starts = {{0, 0, 0}};
    w.goals = {{2.0, 0.0}};
    EpisodeConfig cfg = EpisodeConfig::goal_training();
    Environment env(w, Task::Goal, {}, cfg);
    env.reset_at(0, 0);
    Terminal t = Terminal::None;
    double last = 0.0;
    int k = 0;
    while (t == Terminal::None) {
        const auto out = env.step(7);
        t = out.terminal;
        last = out.reward;
        ++k;
    }
    CHECK(t == Terminal::Collision);
    CHECK(last == -10.0);
    CHECK(k == 30);
}

TEST_CASE("non-terminating collisions stall the robot in place") {
    WorldModel w = square_world(2.5);
    w.starts = {{1.9, 0, 0}};
    w.goals = {{-2.0, 0.0}};
    EpisodeConfig cfg = EpisodeConfig::goal_evaluation();
    REQUIRE_FALSE(cfg.terminate_on_collision);
    Environment env(w, Task::Goal, {}, cfg);
    env.reset_at(0, 0);
    // First step moves to x = 1.94 (clearance 0.56 > 0.2). Keep driving: the
    // pose freezes once the next step would enter the 0.2 m band.
    Terminal t = Terminal::None;
    int stalled = 0, k = 0;
    double frozen_x = 0.0;
    while (t == Terminal::None && k < 250) {
        const auto before = env.pose().x;
        const auto out = env.step(7);
        t = out.terminal;
        ++k;
        if (out.reward == -10.0) {
            ++stalled;
            REQUIRE(env.pose().x == before);
            frozen_x = env.pose().x;
        }
    }
    CHECK(t == Terminal::StepLimit); // never terminates by collision
    CHECK(k == 250);
    CHECK(stalled > 200);
    CHECK(frozen_x < 2.3);
    CHECK(env.pose().x == frozen_x);
}

TEST_CASE("incompatible task and reward are rejected") {
    WorldModel w = square_world(2.5);
    EpisodeConfig bad = EpisodeConfig::obstacle_training();
    bad.reward = RewardKind::NegativeGoal;
    CHECK_THROWS_AS(Environment(w, Task::Avoid, {}, bad), ConfigError);
    CHECK_THROWS_AS(Environment(w, Task::Goal, {}, EpisodeConfig::goal_training()), ConfigError); // no goals
    WorldModel wg = w;
    wg.goals = {{1, 1}};
    EpisodeConfig badg = EpisodeConfig::goal_training();
    badg.reward = RewardKind::Simple;
    CHECK_THROWS_AS(Environment(wg, Task::Goal, {}, badg), ConfigError);
}

TEST_CASE("frame stack shifts by one frame per step") {
    WorldModel w = square_world(2.5);
    Environment env(w, Task::Avoid, {}, EpisodeConfig::obstacle_training());
    const auto o0 = env.reset_at(0, -1);
    const auto o1 = env.step(7).obs;
    const int B = o0.beams;
    // rows 0..2 of the new stack are rows 1..3 of the old one
    for (int k = 0; k < 3; ++k)
        for (int i = 0; i < B; ++i)
            REQUIRE(o1.scan_stack[k * B + i] == o0.scan_stack[(k + 1) * B + i]);
    // newest row differs from the previous newest (the robot moved)
    bool changed = false;
    for (int i = 0; i < B; ++i)
        changed |= o1.scan_stack[3 * B + i] != o0.scan_stack[3 * B + i];
    CHECK(changed);
}

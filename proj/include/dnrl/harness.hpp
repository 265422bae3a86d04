#pragma once

#include <array>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <optional>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include <json.hpp>

#include "dnrl/agent.hpp"
#include "dnrl/env.hpp"
#include "dnrl/errors.hpp"
#include "dnrl/rng.hpp"
#include "dnrl/world.hpp"

namespace dnrl {

inline constexpr const char* kCodeVersion = "0.1.0";

/// One training or evaluation episode, as logged to the metrics CSV.
struct EpisodeRecord {
    std::uint64_t episode = 0;
    int steps = 0;
    double episode_return = 0.0;
    bool collided = false;
    bool reached_goal = false;
    std::optional<double> mean_loss; // empty when the episode saw no gradient steps
    std::string explore;             // epsilon at episode start, "noisy", "greedy", or "random"
    double wall_ms = 0.0;
};

/// Floats are logged with 9 significant digits.
inline std::string format_float(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.9g", v);
    return buf;
}

inline const char* task_name(Task t) { return t == Task::Avoid ? "avoid" : "goal"; }

inline Task task_from_name(const std::string& s) {
    if (s == "avoid") return Task::Avoid;
    if (s == "goal") return Task::Goal;
    throw ConfigError("unknown task \"" + s + "\" (expected avoid or goal)");
}

inline Algorithm algorithm_from_name(const std::string& s) {
    if (s == "d3qn") return Algorithm::D3qn;
    if (s == "rainbow") return Algorithm::Rainbow;
    throw ConfigError("unknown algorithm \"" + s + "\" (expected d3qn or rainbow)");
}

inline const char* reward_name(RewardKind r) {
    switch (r) {
        case RewardKind::Simple: return "simple";
        case RewardKind::Behaviour: return "behaviour";
        case RewardKind::NegativeGoal: return "negative";
        default: return "positive";
    }
}

inline RewardKind reward_from_name(const std::string& s) {
    if (s == "simple") return RewardKind::Simple;
    if (s == "behaviour") return RewardKind::Behaviour;
    if (s == "negative") return RewardKind::NegativeGoal;
    if (s == "positive") return RewardKind::PositiveGoal;
    throw ConfigError("unknown reward \"" + s + "\" (expected simple, behaviour, negative or positive)");
}

/// Everything needed to reproduce a training run with the same binary.
struct RunManifest {
    Task task = Task::Avoid;
    Algorithm algorithm = Algorithm::Rainbow;
    std::string world = "obstacle_train"; // bundled name or path
    std::uint64_t seed = 1;
    std::uint64_t episodes = 1500;
    AgentConfig agent = default_agent_config(Algorithm::Rainbow, Task::Avoid);
    EpisodeConfig episode = EpisodeConfig::obstacle_training();
    SensorConfig sensor{};
    bool record_wall_ms = false; // off by default so logs are hardware-independent
    std::string code_version = kCodeVersion;
};

/// Defaults for a fresh run: episode shape, reward, episode count and world
/// all follow the task, n-step follows the algorithm.
inline RunManifest default_manifest(Algorithm alg, Task task, RewardKind reward) {
    RunManifest m;
    m.task = task;
    m.algorithm = alg;
    m.agent = default_agent_config(alg, task);
    m.episode = task == Task::Avoid ? EpisodeConfig::obstacle_training() : EpisodeConfig::goal_training();
    m.episode.reward = reward;
    m.episodes = task == Task::Avoid ? 1500 : 25000;
    m.world = task == Task::Avoid ? "obstacle_train" : "goal_train";
    return m;
}

inline nlohmann::json manifest_to_json(const RunManifest& m) {
    nlohmann::json j;
    j["task"] = task_name(m.task);
    j["algorithm"] = algorithm_name(m.algorithm);
    j["reward"] = reward_name(m.episode.reward);
    j["world"] = m.world;
    j["seed"] = m.seed;
    j["episodes"] = m.episodes;
    j["train"] = {{"gamma", m.agent.gamma},
                  {"lr", m.agent.lr},
                  {"batch", m.agent.batch},
                  {"hidden", m.agent.hidden},
                  {"buffer", m.agent.buffer},
                  {"warmup_random_steps", m.agent.warmup_random_steps},
                  {"tau", m.agent.tau},
                  {"n_step", m.agent.n_step},
                  {"eps_min", m.agent.eps_min},
                  {"atoms", m.agent.atoms},
                  {"v_min", m.agent.v_min},
                  {"v_max", m.agent.v_max},
                  {"alpha", m.agent.per.alpha},
                  {"beta0", m.agent.per.beta0},
                  {"priority_eps", m.agent.per.eps_p}};
    j["episode"] = {{"max_steps", m.episode.max_steps},
                    {"collision_distance", m.episode.collision_distance},
                    {"goal_radius", m.episode.goal_radius},
                    {"c", m.episode.c},
                    {"v_max", m.episode.v_max},
                    {"terminate_on_collision", m.episode.terminate_on_collision}};
    j["sensor"] = {{"beams", m.sensor.beams}, {"fov", m.sensor.fov}, {"max_range", m.sensor.max_range}};
    j["record_wall_ms"] = m.record_wall_ms;
    j["code_version"] = m.code_version;
    return j;
}

/// Overlay a (possibly partial) JSON document onto a base manifest. Omitted
/// fields keep the base's values; unknown keys are rejected.
inline RunManifest manifest_from_json(const nlohmann::json& j, RunManifest base, const std::string& origin) {
    if (!j.is_object()) throw ParseError(origin + ": run config must be a JSON object");
    detail::reject_unknown_keys(j,
                                {"task", "algorithm", "reward", "world", "seed", "episodes", "train", "episode",
                                 "sensor", "record_wall_ms", "code_version"},
                                origin);
    try {
        if (j.contains("task")) base.task = task_from_name(j["task"].get<std::string>());
        if (j.contains("algorithm")) base.algorithm = algorithm_from_name(j["algorithm"].get<std::string>());
        if (j.contains("reward")) base.episode.reward = reward_from_name(j["reward"].get<std::string>());
        if (j.contains("world")) base.world = j["world"].get<std::string>();
        if (j.contains("seed")) base.seed = j["seed"].get<std::uint64_t>();
        if (j.contains("episodes")) base.episodes = j["episodes"].get<std::uint64_t>();
        if (j.contains("train")) {
            const auto& t = j["train"];
            detail::reject_unknown_keys(t,
                                        {"gamma", "lr", "batch", "hidden", "buffer", "warmup_random_steps", "tau",
                                         "n_step", "eps_min", "atoms", "v_min", "v_max", "alpha", "beta0",
                                         "priority_eps"},
                                        origin + ": train");
            auto& a = base.agent;
            if (t.contains("gamma")) a.gamma = t["gamma"].get<double>();
            if (t.contains("lr")) a.lr = t["lr"].get<double>();
            if (t.contains("batch")) a.batch = t["batch"].get<int>();
            if (t.contains("hidden")) a.hidden = t["hidden"].get<int>();
            if (t.contains("buffer")) a.buffer = t["buffer"].get<std::size_t>();
            if (t.contains("warmup_random_steps")) a.warmup_random_steps = t["warmup_random_steps"].get<std::uint64_t>();
            if (t.contains("tau")) a.tau = t["tau"].get<double>();
            if (t.contains("n_step")) a.n_step = t["n_step"].get<int>();
            if (t.contains("eps_min")) a.eps_min = t["eps_min"].get<double>();
            if (t.contains("atoms")) a.atoms = t["atoms"].get<int>();
            if (t.contains("v_min")) a.v_min = t["v_min"].get<double>();
            if (t.contains("v_max")) a.v_max = t["v_max"].get<double>();
            if (t.contains("alpha")) a.per.alpha = t["alpha"].get<double>();
            if (t.contains("beta0")) a.per.beta0 = t["beta0"].get<double>();
            if (t.contains("priority_eps")) a.per.eps_p = t["priority_eps"].get<double>();
        }
        if (j.contains("episode")) {
            const auto& e = j["episode"];
            detail::reject_unknown_keys(
                e, {"max_steps", "collision_distance", "goal_radius", "c", "v_max", "terminate_on_collision"},
                origin + ": episode");
            auto& c = base.episode;
            if (e.contains("max_steps")) c.max_steps = e["max_steps"].get<int>();
            if (e.contains("collision_distance")) c.collision_distance = e["collision_distance"].get<double>();
            if (e.contains("goal_radius")) c.goal_radius = e["goal_radius"].get<double>();
            if (e.contains("c")) c.c = e["c"].get<double>();
            if (e.contains("v_max")) c.v_max = e["v_max"].get<double>();
            if (e.contains("terminate_on_collision")) c.terminate_on_collision = e["terminate_on_collision"].get<bool>();
        }
        if (j.contains("sensor")) {
            const auto& s = j["sensor"];
            detail::reject_unknown_keys(s, {"beams", "fov", "max_range"}, origin + ": sensor");
            if (s.contains("beams")) base.sensor.beams = s["beams"].get<int>();
            if (s.contains("fov")) base.sensor.fov = s["fov"].get<double>();
            if (s.contains("max_range")) base.sensor.max_range = s["max_range"].get<double>();
        }
        if (j.contains("record_wall_ms")) base.record_wall_ms = j["record_wall_ms"].get<bool>();
        if (j.contains("code_version")) base.code_version = j["code_version"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(origin + ": " + e.what());
    }
    return base;
}

inline void write_manifest(const std::string& path, const RunManifest& m) {
    std::ofstream out(path);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    out << manifest_to_json(m).dump(2) << '\n';
}

inline RunManifest read_run_config(const std::string& path, const RunManifest& base) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open run config");
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(path + ": invalid JSON: " + std::string(e.what()));
    }
    return manifest_from_json(j, base, path);
}

// ---------------------------------------------------------------------------
// Metrics CSV

inline constexpr const char* kMetricsHeader = "episode,steps,return,collided,reached_goal,mean_loss,explore,wall_ms";

inline void append_metrics_row(std::ostream& out, const EpisodeRecord& r) {
    out << r.episode << ',' << r.steps << ',' << format_float(r.episode_return) << ',' << (r.collided ? 1 : 0) << ','
        << (r.reached_goal ? 1 : 0) << ',' << (r.mean_loss ? format_float(*r.mean_loss) : "") << ',' << r.explore
        << ',' << format_float(r.wall_ms) << '\n';
}

inline void write_metrics_csv(const std::string& path, const std::vector<EpisodeRecord>& records) {
    std::ofstream out(path);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    out << kMetricsHeader << '\n';
    for (const auto& r : records) append_metrics_row(out, r);
}

namespace detail {

inline std::vector<std::string> split_csv_row(const std::string& line) {
    std::vector<std::string> out;
    std::size_t from = 0;
    while (true) {
        const std::size_t comma = line.find(',', from);
        if (comma == std::string::npos) {
            out.push_back(line.substr(from));
            return out;
        }
        out.push_back(line.substr(from, comma - from));
        from = comma + 1;
    }
}

} // namespace detail

inline std::vector<EpisodeRecord> load_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path + ": cannot open metrics file");
    std::string line;
    if (!std::getline(in, line) || line != kMetricsHeader)
        throw ParseError(path + ": missing or unexpected metrics header");
    std::vector<EpisodeRecord> records;
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty()) continue;
        const auto f = detail::split_csv_row(line);
        if (f.size() != 8) throw ParseError(path + ": row " + std::to_string(row) + ": expected 8 fields");
        try {
            EpisodeRecord r;
            r.episode = std::stoull(f[0]);
            r.steps = std::stoi(f[1]);
            r.episode_return = std::stod(f[2]);
            r.collided = f[3] == "1";
            r.reached_goal = f[4] == "1";
            if (!f[5].empty()) r.mean_loss = std::stod(f[5]);
            r.explore = f[6];
            r.wall_ms = std::stod(f[7]);
            records.push_back(std::move(r));
        } catch (const std::exception&) {
            throw ParseError(path + ": row " + std::to_string(row) + ": malformed field");
        }
    }
    return records;
}

// ---------------------------------------------------------------------------
// Series helpers

/// Element k is the mean of the last min(k+1, window) entries: the window
/// grows over the series prefix, then slides.
inline std::vector<double> moving_average(const std::vector<double>& xs, int window = 100) {
    if (window < 1) throw UsageError("moving average window must be >= 1");
    std::vector<double> out(xs.size());
    double acc = 0.0;
    for (std::size_t k = 0; k < xs.size(); ++k) {
        acc += xs[k];
        if (k >= static_cast<std::size_t>(window)) acc -= xs[k - static_cast<std::size_t>(window)];
        const auto denom = std::min<std::size_t>(k + 1, static_cast<std::size_t>(window));
        out[k] = acc / static_cast<double>(denom);
    }
    return out;
}

struct Summary {
    std::uint64_t episodes = 0;
    double collision_pct = 0.0;
    double goal_pct = 0.0;
    double mean_steps = 0.0;
    double mean_return = 0.0;
    std::optional<double> mean_steps_to_collision; // over collided episodes only
    std::optional<double> mean_steps_to_goal;      // over goal-reaching episodes only
};

inline Summary summarize(const std::vector<EpisodeRecord>& records) {
    if (records.empty()) throw UsageError("summarize needs at least one episode");
    Summary s;
    s.episodes = records.size();
    double steps = 0.0, ret = 0.0, csteps = 0.0, gsteps = 0.0;
    std::uint64_t collided = 0, reached = 0;
    for (const auto& r : records) {
        steps += r.steps;
        ret += r.episode_return;
        if (r.collided) {
            ++collided;
            csteps += r.steps;
        }
        if (r.reached_goal) {
            ++reached;
            gsteps += r.steps;
        }
    }
    const auto n = static_cast<double>(records.size());
    s.collision_pct = 100.0 * static_cast<double>(collided) / n;
    s.goal_pct = 100.0 * static_cast<double>(reached) / n;
    s.mean_steps = steps / n;
    s.mean_return = ret / n;
    if (collided > 0) s.mean_steps_to_collision = csteps / static_cast<double>(collided);
    if (reached > 0) s.mean_steps_to_goal = gsteps / static_cast<double>(reached);
    return s;
}

inline std::string format_summary(const Summary& s) {
    std::string out;
    char buf[96];
    std::snprintf(buf, sizeof buf, "episodes                %llu\n", static_cast<unsigned long long>(s.episodes));
    out += buf;
    std::snprintf(buf, sizeof buf, "collision %%             %.2f\n", s.collision_pct);
    out += buf;
    std::snprintf(buf, sizeof buf, "goal %%                  %.2f\n", s.goal_pct);
    out += buf;
    std::snprintf(buf, sizeof buf, "mean steps              %.2f\n", s.mean_steps);
    out += buf;
    std::snprintf(buf, sizeof buf, "mean return             %.4f\n", s.mean_return);
    out += buf;
    if (s.mean_steps_to_collision) {
        std::snprintf(buf, sizeof buf, "mean steps to collision %.2f\n", *s.mean_steps_to_collision);
        out += buf;
    }
    if (s.mean_steps_to_goal) {
        std::snprintf(buf, sizeof buf, "mean steps to goal      %.2f\n", *s.mean_steps_to_goal);
        out += buf;
    }
    return out;
}

// ---------------------------------------------------------------------------
// Training loop

struct TrainResult {
    std::vector<EpisodeRecord> records;
    std::string final_checkpoint;
};

namespace detail {

inline std::string checkpoint_name(std::uint64_t episodes_done) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "ckpt_%06llu.ckpt", static_cast<unsigned long long>(episodes_done));
    return buf;
}

} // namespace detail

/// Full training protocol: warmup with uniform-random actions (no learning)
/// followed by act / store / learn / soft-update, one CSV row per episode,
/// a checkpoint every 100 episodes and a final one. The metrics CSV is
/// flushed after every row so an aborted run keeps its partial log.
inline TrainResult train(const RunManifest& manifest, const std::string& out_dir) {
    namespace fs = std::filesystem;
    fs::create_directories(out_dir);
    const WorldModel world = load_world(resolve_world_path(manifest.world));
    Environment env(world, manifest.task, manifest.sensor, manifest.episode);

    AgentConfig acfg = manifest.agent;
    acfg.algorithm = manifest.algorithm;
    acfg.task = manifest.task;
    acfg.beams = manifest.sensor.beams;
    acfg.seed = manifest.seed;
    acfg.horizon = manifest.episodes * static_cast<std::uint64_t>(manifest.episode.max_steps);
    Agent agent(acfg);

    write_manifest((fs::path(out_dir) / "manifest.json").string(), manifest);
    std::ofstream csv(fs::path(out_dir) / "metrics.csv");
    if (!csv) throw ConfigError(out_dir + ": cannot open metrics.csv for writing");
    csv << kMetricsHeader << '\n';
    csv.flush();

    Rng env_rng(manifest.seed ^ 0x9e3779b97f4a7c15ULL);
    TrainResult result;
    for (std::uint64_t ep = 0; ep < manifest.episodes; ++ep) {
        const auto t0 = std::chrono::steady_clock::now();
        EpisodeRecord rec;
        rec.episode = ep;
        rec.explore = manifest.algorithm == Algorithm::D3qn ? format_float(agent.epsilon()) : "noisy";
        Observation obs = env.reset(env_rng);
        double loss_sum = 0.0;
        std::uint64_t loss_n = 0;
        Terminal terminal = Terminal::None;
        while (terminal == Terminal::None) {
            const int a = agent.select_action(obs, true);
            const StepOutcome out = env.step(a);
            const bool done = out.terminal != Terminal::None;
            agent.record(obs, a, static_cast<float>(out.reward), out.obs, done);
            if (const auto loss = agent.learn()) {
                if (!std::isfinite(*loss)) {
                    std::ofstream diag(fs::path(out_dir) / "abort_diagnostic.txt");
                    diag << "non-finite loss\nepisode " << ep << "\nepisode step " << env.steps() << "\nenv steps "
                         << agent.env_steps() << "\nlearn steps " << agent.learn_steps() << '\n';
                    agent.save((fs::path(out_dir) / "abort.ckpt").string());
                    throw TrainingError("non-finite loss at episode " + std::to_string(ep));
                }
                loss_sum += *loss;
                ++loss_n;
            }
            rec.episode_return += out.reward;
            obs = out.obs;
            terminal = out.terminal;
        }
        rec.steps = env.steps();
        rec.collided = terminal == Terminal::Collision;
        rec.reached_goal = terminal == Terminal::GoalReached;
        if (loss_n > 0) rec.mean_loss = loss_sum / static_cast<double>(loss_n);
        if (manifest.record_wall_ms)
            rec.wall_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
        append_metrics_row(csv, rec);
        csv.flush();
        if (!csv) throw ConfigError(out_dir + ": metrics.csv write failure");
        result.records.push_back(std::move(rec));
        if ((ep + 1) % 100 == 0) agent.save((fs::path(out_dir) / detail::checkpoint_name(ep + 1)).string());
    }
    result.final_checkpoint = (fs::path(out_dir) / "final.ckpt").string();
    agent.save(result.final_checkpoint);
    return result;
}

// ---------------------------------------------------------------------------
// Evaluation loop

enum class EvalPolicy : std::uint8_t { Greedy = 0, UniformRandom = 1 };

struct EvalProtocol {
    std::uint64_t episodes = 600;
    std::uint64_t seed = 1;
    EpisodeConfig episode = EpisodeConfig::obstacle_evaluation();
    int workers = 1;
    bool record_trajectories = false;
    bool record_wall_ms = false;
    EvalPolicy policy = EvalPolicy::Greedy;
};

inline EvalProtocol default_eval_protocol(Task task) {
    EvalProtocol p;
    if (task == Task::Goal) {
        p.episodes = 1000;
        p.episode = EpisodeConfig::goal_evaluation();
    }
    return p;
}

struct EvalResult {
    std::vector<EpisodeRecord> records;
    std::array<std::uint64_t, 10> histogram{};          // greedy action counts
    std::vector<std::vector<Pose>> trajectories;        // per episode, length steps+1; empty unless recorded
    std::vector<std::pair<int, int>> episode_setups;    // (start index, goal index) per episode
};

/// Deterministic evaluation: episode e draws its start (and goal) from an
/// independent substream seeded with seed ^ e, so results are identical for
/// any worker count. Workers each run a private environment and parameter
/// snapshot; outputs are merged in episode order. `agent` may be null only
/// for the uniform-random baseline policy.
inline EvalResult evaluate(const Agent* agent, const WorldModel& world, const SensorConfig& sensor,
                           const EvalProtocol& proto) {
    if (proto.policy == EvalPolicy::Greedy && agent == nullptr)
        throw UsageError("greedy evaluation needs an agent");
    const Task task = agent != nullptr ? agent->config().task : (world.goals.empty() ? Task::Avoid : Task::Goal);
    if (agent != nullptr && agent->config().beams != sensor.beams)
        throw ConfigError("agent expects " + std::to_string(agent->config().beams) + " beams, sensor has " +
                          std::to_string(sensor.beams));

    EvalResult result;
    result.records.resize(proto.episodes);
    result.episode_setups.resize(proto.episodes);
    if (proto.record_trajectories) result.trajectories.resize(proto.episodes);

    const int workers =
        std::max(1, std::min<int>(proto.workers, static_cast<int>(std::min<std::uint64_t>(proto.episodes, 64))));
    std::vector<std::array<std::uint64_t, 10>> histograms(static_cast<std::size_t>(workers));
    for (auto& h : histograms) h.fill(0);

    auto run_slice = [&](int widx) {
        Environment env(world, task, sensor, proto.episode);
        std::optional<Agent> local;
        if (proto.policy == EvalPolicy::Greedy) local.emplace(*agent);
        auto& hist = histograms[static_cast<std::size_t>(widx)];
        for (std::uint64_t e = static_cast<std::uint64_t>(widx); e < proto.episodes;
             e += static_cast<std::uint64_t>(workers)) {
            const auto t0 = std::chrono::steady_clock::now();
            Rng rng(proto.seed ^ e);
            EpisodeRecord rec;
            rec.episode = e;
            rec.explore = proto.policy == EvalPolicy::Greedy ? "greedy" : "random";
            Observation obs = env.reset(rng);
            result.episode_setups[e] = {env.start_index(), env.goal_index()};
            std::vector<Pose> traj;
            if (proto.record_trajectories) traj.push_back(env.pose());
            Terminal terminal = Terminal::None;
            while (terminal == Terminal::None) {
                const int a = proto.policy == EvalPolicy::Greedy
                                  ? local->select_action(obs, false)
                                  : static_cast<int>(rng.uniform_int(static_cast<std::uint32_t>(ActionSpace::size)));
                ++hist[static_cast<std::size_t>(a)];
                const StepOutcome out = env.step(a);
                rec.episode_return += out.reward;
                obs = out.obs;
                if (proto.record_trajectories) traj.push_back(env.pose());
                terminal = out.terminal;
            }
            rec.steps = env.steps();
            rec.collided = terminal == Terminal::Collision;
            rec.reached_goal = terminal == Terminal::GoalReached;
            if (proto.record_wall_ms)
                rec.wall_ms =
                    std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
            result.records[e] = std::move(rec);
            if (proto.record_trajectories) result.trajectories[e] = std::move(traj);
        }
    };

    if (workers == 1) {
        run_slice(0);
    } else {
        std::vector<std::thread> pool;
        pool.reserve(static_cast<std::size_t>(workers));
        for (int w = 0; w < workers; ++w) pool.emplace_back(run_slice, w);
        for (auto& t : pool) t.join();
    }
    for (const auto& h : histograms)
        for (std::size_t i = 0; i < h.size(); ++i) result.histogram[i] += h[i];
    return result;
}

inline void write_histogram_csv(const std::string& path, const std::array<std::uint64_t, 10>& hist) {
    std::ofstream out(path);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    out << "action_index,v,w,count\n";
    for (int i = 0; i < 10; ++i)
        out << i << ',' << format_float(ActionSpace::linear(i)) << ',' << format_float(ActionSpace::angular(i)) << ','
            << hist[static_cast<std::size_t>(i)] << '\n';
}

inline void write_trajectories_csv(const std::string& path, const std::vector<std::vector<Pose>>& trajectories) {
    std::ofstream out(path);
    if (!out) throw ConfigError(path + ": cannot open for writing");
    out << "episode,step,x,y,theta\n";
    for (std::size_t e = 0; e < trajectories.size(); ++e)
        for (std::size_t k = 0; k < trajectories[e].size(); ++k) {
            const Pose& p = trajectories[e][k];
            out << e << ',' << k << ',' << format_float(p.x) << ',' << format_float(p.y) << ','
                << format_float(p.theta) << '\n';
        }
}

} // namespace dnrl

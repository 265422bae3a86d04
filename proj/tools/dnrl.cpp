#include <cstdint>
#include <filesystem>
#include <iostream>
#include <string>

#include <CLI11.hpp>
#include <json.hpp>

#include "dnrl/harness.hpp"

namespace {

using namespace dnrl;
namespace fs = std::filesystem;

void ensure_output_dir(const std::string& out, bool force) {
    if (out.empty()) throw ConfigError("--out is required");
    if (fs::exists(out)) {
        if (!fs::is_directory(out)) throw ConfigError(out + ": exists and is not a directory");
        if (!fs::is_empty(out) && !force)
            throw ConfigError(out + ": output directory is not empty (pass --force to reuse it)");
    }
    fs::create_directories(out);
}

struct TrainFlags {
    std::string task = "avoid";
    std::string algo = "rainbow";
    std::string reward;
    std::string world;
    std::string config;
    std::string out;
    std::uint64_t episodes = 0;
    std::uint64_t seed = 1;
    int scan_beams = 80;
    bool force = false;
    bool record_wall_ms = false;
    bool dry_run = false;
    // option handles, for flag-vs-config precedence
    CLI::Option* o_task = nullptr;
    CLI::Option* o_algo = nullptr;
    CLI::Option* o_reward = nullptr;
    CLI::Option* o_world = nullptr;
    CLI::Option* o_episodes = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_beams = nullptr;
};

struct EvalFlags {
    std::string checkpoint;
    std::string world;
    std::string out;
    std::uint64_t episodes = 0;
    std::uint64_t seed = 1;
    double collision_distance = 0.0;
    int workers = 1;
    bool record_trajectories = false;
    bool force = false;
    bool dry_run = false;
    CLI::Option* o_episodes = nullptr;
    CLI::Option* o_seed = nullptr;
    CLI::Option* o_distance = nullptr;
};

struct ReplayFlags {
    std::string checkpoint;
    std::string world;
    int start_index = 0;
    int goal_index = -1;
};

void check_reward_compatibility(Task task, RewardKind reward) {
    const bool obstacle_reward = reward == RewardKind::Simple || reward == RewardKind::Behaviour;
    if ((task == Task::Avoid) != obstacle_reward)
        throw ConfigError(std::string("reward \"") + reward_name(reward) + "\" is not valid for task \"" +
                          task_name(task) + "\"");
}

/// Three-layer precedence: explicit flags beat the config file, which beats
/// the built-in defaults. Task, algorithm and reward are resolved first so
/// the defaults for everything else can follow them.
RunManifest resolve_train_manifest(const TrainFlags& f) {
    nlohmann::json cfg = nlohmann::json::object();
    if (!f.config.empty()) {
        std::ifstream in(f.config);
        if (!in) throw ConfigError(f.config + ": cannot open run config");
        try {
            in >> cfg;
        } catch (const nlohmann::json::exception& e) {
            throw ParseError(f.config + ": invalid JSON: " + std::string(e.what()));
        }
        if (!cfg.is_object()) throw ParseError(f.config + ": run config must be a JSON object");
    }
    auto pick = [&](const CLI::Option* opt, const std::string& flag_value, const char* key,
                    const std::string& fallback) {
        if (opt->count() > 0) return flag_value;
        if (cfg.contains(key)) {
            if (!cfg[key].is_string()) throw ParseError(f.config + ": " + key + ": expected a string");
            return cfg[key].get<std::string>();
        }
        return fallback;
    };
    const Task task = task_from_name(pick(f.o_task, f.task, "task", "avoid"));
    const Algorithm algo = algorithm_from_name(pick(f.o_algo, f.algo, "algorithm", "rainbow"));
    const RewardKind reward =
        reward_from_name(pick(f.o_reward, f.reward, "reward", task == Task::Avoid ? "simple" : "negative"));

    RunManifest m = default_manifest(algo, task, reward);
    if (!f.config.empty()) m = manifest_from_json(cfg, m, f.config);
    if (f.o_task->count() > 0) m.task = task;
    if (f.o_algo->count() > 0) m.algorithm = algo;
    if (f.o_reward->count() > 0) m.episode.reward = reward;
    if (f.o_world->count() > 0) m.world = f.world;
    if (f.o_episodes->count() > 0) m.episodes = f.episodes;
    if (f.o_seed->count() > 0) m.seed = f.seed;
    if (f.o_beams->count() > 0) m.sensor.beams = f.scan_beams;
    if (f.record_wall_ms) m.record_wall_ms = true;
    check_reward_compatibility(m.task, m.episode.reward);
    return m;
}

int run_train(const TrainFlags& f) {
    const RunManifest m = resolve_train_manifest(f);
    if (f.dry_run) {
        std::cout << manifest_to_json(m).dump(2) << '\n';
        return 0;
    }
    ensure_output_dir(f.out, f.force);
    const TrainResult result = train(m, f.out);
    std::cout << "wrote " << result.records.size() << " episodes under " << f.out << '\n'
              << "final checkpoint: " << result.final_checkpoint << '\n'
              << format_summary(summarize(result.records));
    return 0;
}

int run_eval(const EvalFlags& f) {
    const AgentConfig acfg = agent_config_from_checkpoint(f.checkpoint);
    EvalProtocol proto = default_eval_protocol(acfg.task);
    if (f.o_episodes->count() > 0) proto.episodes = f.episodes;
    if (f.o_seed->count() > 0) proto.seed = f.seed;
    if (f.o_distance->count() > 0) proto.episode.collision_distance = f.collision_distance;
    proto.workers = f.workers;
    proto.record_trajectories = f.record_trajectories;
    if (f.dry_run) {
        nlohmann::json j{{"task", task_name(acfg.task)},
                         {"algorithm", algorithm_name(acfg.algorithm)},
                         {"episodes", proto.episodes},
                         {"seed", proto.seed},
                         {"max_steps", proto.episode.max_steps},
                         {"collision_distance", proto.episode.collision_distance},
                         {"terminate_on_collision", proto.episode.terminate_on_collision},
                         {"workers", proto.workers},
                         {"record_trajectories", proto.record_trajectories}};
        std::cout << j.dump(2) << '\n';
        return 0;
    }
    Agent agent(acfg);
    agent.load(f.checkpoint);
    const WorldModel world = load_world(resolve_world_path(f.world));
    ensure_output_dir(f.out, f.force);
    SensorConfig sensor;
    sensor.beams = acfg.beams;
    const EvalResult result = evaluate(&agent, world, sensor, proto);
    write_metrics_csv((fs::path(f.out) / "metrics.csv").string(), result.records);
    write_histogram_csv((fs::path(f.out) / "histogram.csv").string(), result.histogram);
    if (proto.record_trajectories)
        write_trajectories_csv((fs::path(f.out) / "trajectories.csv").string(), result.trajectories);
    const std::string summary = format_summary(summarize(result.records));
    std::ofstream sf(fs::path(f.out) / "summary.txt");
    sf << summary;
    std::cout << summary;
    return 0;
}

int run_replay(const ReplayFlags& f) {
    const AgentConfig acfg = agent_config_from_checkpoint(f.checkpoint);
    Agent agent(acfg);
    agent.load(f.checkpoint);
    const WorldModel world = load_world(resolve_world_path(f.world));
    SensorConfig sensor;
    sensor.beams = acfg.beams;
    const EpisodeConfig episode =
        acfg.task == Task::Goal ? EpisodeConfig::goal_evaluation() : EpisodeConfig::obstacle_evaluation();
    Environment env(world, acfg.task, sensor, episode);
    Observation obs = env.reset_at(f.start_index, f.goal_index);
    std::cout << "step,x,y,theta,action,reward\n";
    std::cout << "0," << format_float(env.pose().x) << ',' << format_float(env.pose().y) << ','
              << format_float(env.pose().theta) << ",,\n";
    double total = 0.0;
    Terminal terminal = Terminal::None;
    while (terminal == Terminal::None) {
        const int a = agent.select_action(obs, false);
        const StepOutcome out = env.step(a);
        total += out.reward;
        std::cout << env.steps() << ',' << format_float(env.pose().x) << ',' << format_float(env.pose().y) << ','
                  << format_float(env.pose().theta) << ',' << a << ',' << format_float(out.reward) << '\n';
        obs = out.obs;
        terminal = out.terminal;
    }
    std::cout << "return," << format_float(total) << '\n';
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"deep-RL navigation lab: train, evaluate and replay scan-driven agents"};
    app.require_subcommand(1);

    TrainFlags tf;
    CLI::App* t = app.add_subcommand("train", "train an agent and log per-episode metrics");
    tf.o_task = t->add_option("--task", tf.task, "avoid or goal")->check(CLI::IsMember({"avoid", "goal"}));
    tf.o_algo = t->add_option("--algo", tf.algo, "d3qn or rainbow")->check(CLI::IsMember({"d3qn", "rainbow"}));
    tf.o_reward = t->add_option("--reward", tf.reward, "simple, behaviour, negative or positive")
                      ->check(CLI::IsMember({"simple", "behaviour", "negative", "positive"}));
    tf.o_world = t->add_option("--world", tf.world, "world file path or bundled world name");
    tf.o_episodes = t->add_option("--episodes", tf.episodes, "episode count (default 1500 avoid / 25000 goal)");
    tf.o_seed = t->add_option("--seed", tf.seed, "run seed");
    t->add_option("--out", tf.out, "output directory");
    t->add_option("--config", tf.config, "run config JSON; flags override it")->check(CLI::ExistingFile);
    tf.o_beams = t->add_option("--scan-beams", tf.scan_beams, "depth beams per scan")->check(CLI::IsMember({80, 160}));
    t->add_flag("--force", tf.force, "reuse a nonempty output directory");
    t->add_flag("--record-wall-ms", tf.record_wall_ms, "log wall-clock per episode (breaks byte-reproducibility)");
    t->add_flag("--dry-run", tf.dry_run, "print the resolved manifest and exit");

    EvalFlags ef;
    CLI::App* e = app.add_subcommand("eval", "evaluate a checkpoint with the greedy policy");
    e->add_option("--checkpoint", ef.checkpoint, "agent checkpoint")->required()->check(CLI::ExistingFile);
    e->add_option("--world", ef.world, "world file path or bundled world name");
    ef.o_episodes = e->add_option("--episodes", ef.episodes, "episode count (default 600 avoid / 1000 goal)");
    ef.o_seed = e->add_option("--seed", ef.seed, "evaluation seed");
    e->add_option("--out", ef.out, "output directory");
    ef.o_distance = e->add_option("--collision-distance", ef.collision_distance, "contact threshold in meters");
    e->add_option("--eval-workers", ef.workers, "worker threads")->check(CLI::PositiveNumber);
    e->add_flag("--record-trajectories", ef.record_trajectories, "write per-episode pose sequences");
    e->add_flag("--force", ef.force, "reuse a nonempty output directory");
    e->add_flag("--dry-run", ef.dry_run, "print the resolved protocol and exit");

    ReplayFlags rf;
    CLI::App* r = app.add_subcommand("replay", "print one deterministic greedy episode");
    r->add_option("--checkpoint", rf.checkpoint, "agent checkpoint")->required()->check(CLI::ExistingFile);
    r->add_option("--world", rf.world, "world file path or bundled world name")->required();
    r->add_option("--start-index", rf.start_index, "start pose index")->required();
    r->add_option("--goal-index", rf.goal_index, "goal index (goal task only)");

    try {
        app.parse(argc, argv);
        if (t->parsed()) return run_train(tf);
        if (e->parsed()) return run_eval(ef);
        if (r->parsed()) return run_replay(rf);
        return 2;
    } catch (const CLI::ParseError& err) {
        const int rc = app.exit(err);
        return rc == 0 ? 0 : 2;
    } catch (const ParseError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const ConfigError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const UsageError& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 2;
    } catch (const std::exception& err) {
        std::cerr << "error: " << err.what() << '\n';
        return 1;
    }
}

#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <string>

#include <json.hpp>

#include "dnrl/harness.hpp"

using namespace dnrl;

namespace {

namespace fs = std::filesystem;

std::string worlds_dir() { return DNRL_WORLDS_DIR; }

std::string scratch_dir(const std::string& name) {
    const auto dir = fs::temp_directory_path() / ("dnrl_cli_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir.string();
}

std::string slurp(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(is), std::istreambuf_iterator<char>()};
}

struct CmdResult {
    int code = -1;
    std::string out;
    std::string err;
};

/// Runs the CLI through the shell, capturing exit code and both streams.
CmdResult run_cli(const std::string& args) {
    static int counter = 0;
    const auto base = fs::temp_directory_path() / ("dnrl_cli_io_" + std::to_string(counter++));
    const std::string out = base.string() + ".out", err = base.string() + ".err";
    const std::string cmd = std::string(DNRL_CLI_BIN) + " " + args + " >" + out + " 2>" + err;
    const int rc = std::system(cmd.c_str());
    CmdResult r;
    r.code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out);
    r.err = slurp(err);
    fs::remove(out);
    fs::remove(err);
    return r;
}

/// Config file shrinking the network so smoke runs stay fast.
std::string small_net_config(const std::string& dir) {
    const std::string path = dir + "/small.json";
    std::ofstream out(path);
    out << R"({"train": {"hidden": 32, "atoms": 11, "batch": 8, "buffer": 4096}})";
    return path;
}

double parse_replay_return(const std::string& stdout_text) {
    const auto pos = stdout_text.rfind("return,");
    REQUIRE(pos != std::string::npos);
    return std::stod(stdout_text.substr(pos + 7));
}

} // namespace

TEST_CASE("cli train smoke run") {
    const std::string dir = scratch_dir("train_smoke");
    const std::string cfg = small_net_config(dir);
    const auto r = run_cli("train --task avoid --algo rainbow --reward simple --world " + worlds_dir() +
                           "/obstacle_train.json --episodes 10 --seed 7 --out " + dir + "/run --config " + cfg);
    INFO(r.err);
    REQUIRE(r.code == 0);
    REQUIRE(fs::exists(dir + "/run/manifest.json"));
    REQUIRE(fs::exists(dir + "/run/final.ckpt"));
    const auto records = load_metrics_csv(dir + "/run/metrics.csv");
    REQUIRE(records.size() == 10);

    SECTION("refuses to reuse the directory without --force") {
        const auto again = run_cli("train --task avoid --world " + worlds_dir() +
                                   "/obstacle_train.json --episodes 1 --out " + dir + "/run --config " + cfg);
        REQUIRE(again.code == 2);
        const auto forced = run_cli("train --task avoid --world " + worlds_dir() +
                                    "/obstacle_train.json --episodes 1 --seed 1 --out " + dir + "/run --config " +
                                    cfg + " --force");
        INFO(forced.err);
        REQUIRE(forced.code == 0);
    }
}

TEST_CASE("cli rejects incompatible reward and task") {
    REQUIRE(run_cli("train --task goal --reward simple --out /tmp/never").code == 2);
    REQUIRE(run_cli("train --task avoid --reward negative --out /tmp/never").code == 2);
}

TEST_CASE("cli episode-count defaults follow the task") {
    const auto avoid = run_cli("train --task avoid --dry-run");
    REQUIRE(avoid.code == 0);
    const auto ja = nlohmann::json::parse(avoid.out);
    REQUIRE(ja["episodes"].get<std::uint64_t>() == 1500);
    REQUIRE(ja["reward"] == "simple");

    const auto goal = run_cli("train --task goal --dry-run");
    REQUIRE(goal.code == 0);
    const auto jg = nlohmann::json::parse(goal.out);
    REQUIRE(jg["episodes"].get<std::uint64_t>() == 25000);
    REQUIRE(jg["reward"] == "negative");
    REQUIRE(jg["episode"]["max_steps"].get<int>() == 350);
}

TEST_CASE("cli precedence: flags beat config beats defaults") {
    const std::string dir = scratch_dir("precedence");
    {
        std::ofstream out(dir + "/cfg.json");
        out << R"({"task": "goal", "episodes": 42, "seed": 500, "train": {"lr": 0.001}})";
    }
    const auto r = run_cli("train --config " + dir + "/cfg.json --episodes 7 --dry-run");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["task"] == "goal");                            // from config
    REQUIRE(j["episodes"].get<std::uint64_t>() == 7);        // flag wins over config
    REQUIRE(j["seed"].get<std::uint64_t>() == 500);          // config wins over default
    REQUIRE(j["train"]["lr"].get<double>() == 0.001);        // config wins over default
    REQUIRE(j["train"]["n_step"].get<int>() == 3);           // untouched default
    REQUIRE(j["episode"]["max_steps"].get<int>() == 350);    // derived from config's task

    SECTION("unknown config keys are rejected") {
        std::ofstream out(dir + "/typo.json");
        out << R"({"sede": 5})";
        out.close();
        REQUIRE(run_cli("train --config " + dir + "/typo.json --dry-run").code == 2);
    }
}

TEST_CASE("cli eval defaults and outputs") {
    const std::string dir = scratch_dir("eval");
    const std::string cfg = small_net_config(dir);
    const auto tr = run_cli("train --task avoid --world " + worlds_dir() +
                            "/obstacle_train.json --episodes 2 --seed 3 --out " + dir + "/run --config " + cfg);
    INFO(tr.err);
    REQUIRE(tr.code == 0);
    const std::string ckpt = dir + "/run/final.ckpt";

    SECTION("obstacle eval defaults to 600 episodes of 100 steps") {
        const auto r = run_cli("eval --checkpoint " + ckpt + " --dry-run");
        REQUIRE(r.code == 0);
        const auto j = nlohmann::json::parse(r.out);
        REQUIRE(j["episodes"].get<std::uint64_t>() == 600);
        REQUIRE(j["max_steps"].get<int>() == 100);
        REQUIRE(j["collision_distance"].get<double>() == 0.2);
        REQUIRE(j["terminate_on_collision"].get<bool>());
    }
    SECTION("full eval writes metrics, histogram, summary and trajectories") {
        const auto r = run_cli("eval --checkpoint " + ckpt + " --world " + worlds_dir() +
                               "/obstacle_eval.json --episodes 5 --seed 3 --out " + dir +
                               "/ev --record-trajectories");
        INFO(r.err);
        REQUIRE(r.code == 0);
        REQUIRE(load_metrics_csv(dir + "/ev/metrics.csv").size() == 5);
        REQUIRE(fs::exists(dir + "/ev/histogram.csv"));
        REQUIRE(fs::exists(dir + "/ev/summary.txt"));
        REQUIRE(fs::exists(dir + "/ev/trajectories.csv"));
    }
    SECTION("worker count leaves results unchanged") {
        const auto one = run_cli("eval --checkpoint " + ckpt + " --world " + worlds_dir() +
                                 "/obstacle_eval.json --episodes 6 --seed 5 --out " + dir + "/w1 --eval-workers 1");
        const auto three = run_cli("eval --checkpoint " + ckpt + " --world " + worlds_dir() +
                                   "/obstacle_eval.json --episodes 6 --seed 5 --out " + dir + "/w3 --eval-workers 3");
        REQUIRE(one.code == 0);
        REQUIRE(three.code == 0);
        REQUIRE(slurp(dir + "/w1/metrics.csv") == slurp(dir + "/w3/metrics.csv"));
        REQUIRE(slurp(dir + "/w1/histogram.csv") == slurp(dir + "/w3/histogram.csv"));
    }
    SECTION("invalid world exits 2") {
        REQUIRE(run_cli("eval --checkpoint " + ckpt + " --world nowhere_land --out " + dir + "/x").code == 2);
    }
}

TEST_CASE("cli goal eval defaults to 1000 non-terminating episodes") {
    const std::string dir = scratch_dir("eval_goal");
    const std::string cfg = small_net_config(dir);
    const auto tr = run_cli("train --task goal --world " + worlds_dir() + "/goal_train.json --episodes 2 --seed 3 --out " +
                            dir + "/run --config " + cfg);
    INFO(tr.err);
    REQUIRE(tr.code == 0);
    const auto r = run_cli("eval --checkpoint " + dir + "/run/final.ckpt --dry-run");
    REQUIRE(r.code == 0);
    const auto j = nlohmann::json::parse(r.out);
    REQUIRE(j["task"] == "goal");
    REQUIRE(j["episodes"].get<std::uint64_t>() == 1000);
    REQUIRE(j["max_steps"].get<int>() == 250);
    REQUIRE_FALSE(j["terminate_on_collision"].get<bool>());
}

TEST_CASE("cli replay") {
    const std::string dir = scratch_dir("replay");
    const std::string cfg = small_net_config(dir);
    // Single-start world, so evaluation episode 0 and the replayed episode
    // share their start pose deterministically.
    const std::string world = dir + "/one_start.json";
    {
        std::ofstream out(world);
        out << R"({"bounds": [-2.5, -2.5, 2.5, 2.5],
                   "obstacles": [{"type": "circle", "c": [1.5, 1.5], "r": 0.3}],
                   "starts": [[0.0, -1.2, 1.5707963267948966]]})";
    }
    const auto tr = run_cli("train --task avoid --world " + world + " --episodes 2 --seed 9 --out " + dir +
                            "/run --config " + cfg);
    INFO(tr.err);
    REQUIRE(tr.code == 0);
    const std::string ckpt = dir + "/run/final.ckpt";

    const auto first = run_cli("replay --checkpoint " + ckpt + " --world " + world + " --start-index 0");
    REQUIRE(first.code == 0);
    REQUIRE(first.out.rfind("step,x,y,theta,action,reward", 0) == 0);

    SECTION("replay is deterministic") {
        const auto second = run_cli("replay --checkpoint " + ckpt + " --world " + world + " --start-index 0");
        REQUIRE(second.code == 0);
        REQUIRE(first.out == second.out);
    }
    SECTION("replayed return matches the evaluation log") {
        const auto ev = run_cli("eval --checkpoint " + ckpt + " --world " + world + " --episodes 1 --seed 4 --out " +
                                dir + "/ev");
        REQUIRE(ev.code == 0);
        const auto records = load_metrics_csv(dir + "/ev/metrics.csv");
        REQUIRE(records.size() == 1);
        const double replayed = parse_replay_return(first.out);
        REQUIRE_THAT(replayed, Catch::Matchers::WithinRel(records[0].episode_return, 1e-8));
    }
    SECTION("out-of-range start index exits 2") {
        REQUIRE(run_cli("replay --checkpoint " + ckpt + " --world " + world + " --start-index 5").code == 2);
    }
}

TEST_CASE("cli resolves bundled world names") {
    const std::string dir = scratch_dir("bundled");
    const std::string cfg = small_net_config(dir);
    const std::string cmd = "DNRL_WORLD_DIR=" + worlds_dir() + " " + std::string(DNRL_CLI_BIN) +
                            " train --task avoid --world obstacle_train --episodes 1 --seed 1 --out " + dir +
                            "/run --config " + cfg + " >/dev/null 2>&1";
    const int rc = std::system(cmd.c_str());
    REQUIRE(WIFEXITED(rc));
    REQUIRE(WEXITSTATUS(rc) == 0);
    REQUIRE(fs::exists(dir + "/run/final.ckpt"));
}

TEST_CASE("cli usage errors") {
    REQUIRE(run_cli("").code == 2);                 // missing subcommand
    REQUIRE(run_cli("trian --task avoid").code == 2);
    REQUIRE(run_cli("train --task swim --dry-run").code == 2);
    REQUIRE(run_cli("train --task avoid --scan-beams 81 --dry-run").code == 2);
    REQUIRE(run_cli("train --task avoid --world /no/such/world.json --episodes 1 --out /tmp/nowhere_run").code == 2);
    REQUIRE(run_cli("eval --checkpoint /no/such.ckpt --out /tmp/x").code == 2);
}

#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "dnrl/adam.hpp"
#include "dnrl/checkpoint.hpp"
#include "dnrl/env.hpp"
#include "dnrl/errors.hpp"
#include "dnrl/nn.hpp"
#include "dnrl/replay.hpp"
#include "dnrl/rng.hpp"

namespace dnrl {

enum class Algorithm : std::uint8_t { D3qn = 0, Rainbow = 1 };

inline const char* algorithm_name(Algorithm a) { return a == Algorithm::D3qn ? "d3qn" : "rainbow"; }

struct AgentConfig {
    Algorithm algorithm = Algorithm::Rainbow;
    Task task = Task::Avoid;
    int beams = 80;
    int actions = 10;
    int hidden = 512;
    double gamma = 0.99;
    double lr = 2.5e-4;
    int batch = 32;
    std::size_t buffer = 100000;
    std::uint64_t warmup_random_steps = 20000;
    double tau = 0.001;
    int n_step = 3;          // 1 for D3QN, 3 for Rainbow
    double eps_min = 0.01;   // D3QN only
    int atoms = 51;          // Rainbow only
    double v_min = -10.0;
    double v_max = 10.0;
    PerConfig per{};
    std::uint64_t horizon = 100000; // total configured training steps: episodes * max_steps
    std::uint64_t seed = 1;
};

inline AgentConfig default_agent_config(Algorithm alg, Task task) {
    AgentConfig cfg;
    cfg.algorithm = alg;
    cfg.task = task;
    cfg.n_step = alg == Algorithm::Rainbow ? 3 : 1;
    return cfg;
}

/// Categorical projection of a shifted-and-scaled support onto itself.
/// Each target atom Tz_j = clamp(R + gamma_n z_j, v_min, v_max) splits its
/// mass linearly between the two neighboring support atoms; gamma_n is
/// treated as 0 for terminal transitions.
inline std::vector<double> project_distribution(const std::vector<double>& probs, double n_step_return,
                                                double gamma_n, bool done, const AtomSupport& sup) {
    if (static_cast<int>(probs.size()) != sup.n) throw UsageError("distribution size does not match the support");
    std::vector<double> out(probs.size(), 0.0);
    const double dz = (sup.v_max - sup.v_min) / (sup.n - 1);
    const double g = done ? 0.0 : gamma_n;
    for (int j = 0; j < sup.n; ++j) {
        const double tz = std::clamp(n_step_return + g * sup.z[static_cast<std::size_t>(j)], sup.v_min, sup.v_max);
        const double b = std::clamp((tz - sup.v_min) / dz, 0.0, static_cast<double>(sup.n - 1));
        const auto lo = static_cast<int>(std::floor(b));
        const auto hi = static_cast<int>(std::ceil(b));
        if (lo == hi) {
            out[static_cast<std::size_t>(lo)] += probs[static_cast<std::size_t>(j)];
        } else {
            out[static_cast<std::size_t>(lo)] += probs[static_cast<std::size_t>(j)] * (hi - b);
            out[static_cast<std::size_t>(hi)] += probs[static_cast<std::size_t>(j)] * (b - lo);
        }
    }
    return out;
}

/// Double-DQN target: the online network picks the next action, the target
/// network evaluates it. Bootstrap is suppressed on terminal windows.
inline double d3qn_target(double n_step_return, int effective_n, bool done, double gamma,
                          const std::vector<double>& q_online_next, const std::vector<double>& q_target_next) {
    if (done) return n_step_return;
    std::size_t best = 0;
    for (std::size_t a = 1; a < q_online_next.size(); ++a)
        if (q_online_next[a] > q_online_next[best]) best = a;
    double g = 1.0;
    for (int k = 0; k < effective_n; ++k) g *= gamma;
    return n_step_return + g * q_target_next[best];
}

/// Expected value of one action's atom distribution under the support.
inline double expected_value(const float* probs, const AtomSupport& sup) {
    double acc = 0.0;
    for (int i = 0; i < sup.n; ++i) acc += static_cast<double>(probs[i]) * sup.z[static_cast<std::size_t>(i)];
    return acc;
}

/// One learning agent: networks, optimizer, replay, exploration state.
class Agent {
public:
    explicit Agent(const AgentConfig& cfg)
        : cfg_(cfg),
          rng_(cfg.seed),
          online_(network_config(cfg), rng_),
          target_(network_config(cfg), rng_),
          opt_(cfg.lr),
          buffer_(cfg.buffer, cfg.per),
          nstep_(cfg.n_step, cfg.gamma),
          support_(make_support(cfg.algorithm == Algorithm::Rainbow ? cfg.atoms : 2, cfg.v_min, cfg.v_max)) {
        copy_params(online_, target_);
    }

    const AgentConfig& config() const { return cfg_; }
    std::uint64_t env_steps() const { return env_steps_; }
    std::uint64_t learn_steps() const { return learn_steps_; }
    std::size_t buffer_size() const { return buffer_.size(); }
    bool in_warmup() const { return env_steps_ < cfg_.warmup_random_steps; }

    /// Exponential decay over completed training steps, pinned to 0.05 at 60%
    /// of the configured horizon; evaluation uses 0.
    double epsilon() const {
        const double k = static_cast<double>(env_steps_);
        const double K = 0.6 * static_cast<double>(cfg_.horizon) / std::log(20.0);
        return std::max(cfg_.eps_min, std::exp(-k / K));
    }

    /// Importance-sampling exponent, annealed linearly to 1 over the horizon.
    double beta() const {
        const double frac = static_cast<double>(env_steps_) / static_cast<double>(cfg_.horizon);
        return std::min(1.0, cfg_.per.beta0 + (1.0 - cfg_.per.beta0) * frac);
    }

    int select_action(const Observation& obs, bool training) {
        if (training && env_steps_ < cfg_.warmup_random_steps)
            return static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(cfg_.actions)));
        if (cfg_.algorithm == Algorithm::D3qn) {
            if (training && rng_.uniform() < epsilon())
                return static_cast<int>(rng_.uniform_int(static_cast<std::uint64_t>(cfg_.actions)));
            return greedy_action(obs, false);
        }
        if (training) online_.sample_noise(rng_);
        return greedy_action(obs, training);
    }

    /// Deterministic action values for one observation: Q-values (D3QN) or
    /// per-action expected returns (Rainbow), noise disabled.
    std::vector<double> action_values(const Observation& obs) {
        fill_input(obs);
        const Mat<float>& out = online_.forward(scans1_, cfg_.task == Task::Goal ? &goal1_ : nullptr, false);
        std::vector<double> q(static_cast<std::size_t>(cfg_.actions));
        if (cfg_.algorithm == Algorithm::D3qn) {
            for (int a = 0; a < cfg_.actions; ++a) q[static_cast<std::size_t>(a)] = out(a, 0);
        } else {
            for (int a = 0; a < cfg_.actions; ++a)
                q[static_cast<std::size_t>(a)] = expected_value(out.col(0).data() + a * cfg_.atoms, support_);
        }
        return q;
    }

    /// Feeds one completed environment step into the n-step pipeline and the
    /// replay buffer, and advances the step counters.
    void record(const Observation& state, int action, float reward, const Observation& next_state, bool done) {
        for (auto& t : nstep_.push({state, action, reward, next_state, done})) buffer_.push(std::move(t));
        ++env_steps_;
    }

    /// One gradient step on a prioritized batch. Inactive until the warmup
    /// step budget has elapsed and the buffer can fill a batch.
    std::optional<float> learn() {
        if (env_steps_ < cfg_.warmup_random_steps) return std::nullopt;
        if (buffer_.size() < static_cast<std::size_t>(cfg_.batch)) return std::nullopt;
        const auto batch = buffer_.sample(static_cast<std::size_t>(cfg_.batch), beta(), rng_);
        fill_batch(batch.indices);
        const float loss = cfg_.algorithm == Algorithm::D3qn ? learn_d3qn(batch) : learn_rainbow(batch);
        opt_.step(online_);
        soft_update(target_, online_, static_cast<float>(cfg_.tau));
        ++learn_steps_;
        return loss;
    }

    void save(const std::string& path) {
        std::vector<CheckpointEntry> entries;
        auto dump = [&](const std::string& prefix, QNetwork<float>& net) {
            net.visit_params([&](const std::string& name, Mat<float>& v, Mat<float>&) {
                entries.push_back(tensor_entry(prefix + name, v));
            });
        };
        dump("online.", online_);
        dump("target.", target_);
        std::size_t i = 0;
        online_.visit_params([&](const std::string& name, Mat<float>&, Mat<float>&) {
            if (i < opt_.first_moments().size()) {
                entries.push_back(tensor_entry("adam.m." + name, opt_.first_moments()[i]));
                entries.push_back(tensor_entry("adam.v." + name, opt_.second_moments()[i]));
            }
            ++i;
        });
        const auto st = rng_.state();
        entries.push_back(entry_from_u64s("state.rng", {st[0], st[1], st[2], st[3]}));
        entries.push_back(entry_from_u64s("state.counters", {env_steps_, learn_steps_, opt_.step_count()}));
        std::uint64_t vmin_bits = 0, vmax_bits = 0;
        std::memcpy(&vmin_bits, &cfg_.v_min, sizeof vmin_bits);
        std::memcpy(&vmax_bits, &cfg_.v_max, sizeof vmax_bits);
        entries.push_back(entry_from_u64s("state.arch",
                                          {static_cast<std::uint64_t>(cfg_.algorithm),
                                           static_cast<std::uint64_t>(cfg_.task),
                                           static_cast<std::uint64_t>(cfg_.beams),
                                           static_cast<std::uint64_t>(cfg_.actions),
                                           static_cast<std::uint64_t>(cfg_.hidden),
                                           static_cast<std::uint64_t>(cfg_.atoms),
                                           static_cast<std::uint64_t>(cfg_.n_step),
                                           vmin_bits, vmax_bits}));
        write_checkpoint(path, entries);
    }

    void load(const std::string& path) {
        const auto index = checkpoint_index(read_checkpoint(path));
        auto restore = [&](const std::string& prefix, QNetwork<float>& net) {
            net.visit_params([&](const std::string& name, Mat<float>& v, Mat<float>&) {
                assign_tensor(index, prefix + name, v);
            });
        };
        restore("online.", online_);
        restore("target.", target_);
        const bool has_moments = index.count("adam.m.conv1.w") > 0;
        if (has_moments) {
            auto& m = opt_.first_moments();
            auto& v2 = opt_.second_moments();
            m.clear();
            v2.clear();
            online_.visit_params([&](const std::string& name, Mat<float>& v, Mat<float>&) {
                Mat<float> mm(v.rows(), v.cols()), vv(v.rows(), v.cols());
                assign_tensor(index, "adam.m." + name, mm);
                assign_tensor(index, "adam.v." + name, vv);
                m.push_back(std::move(mm));
                v2.push_back(std::move(vv));
            });
        }
        const auto rng_words = u64s_from_entry(index.at("state.rng"));
        if (rng_words.size() != 4) throw ParseError("checkpoint rng state has wrong size");
        rng_.set_state({rng_words[0], rng_words[1], rng_words[2], rng_words[3]});
        const auto counters = u64s_from_entry(index.at("state.counters"));
        if (counters.size() != 3) throw ParseError("checkpoint counters have wrong size");
        env_steps_ = counters[0];
        learn_steps_ = counters[1];
        opt_.set_step_count(counters[2]);
        nstep_.clear();
    }

private:
    static QNetworkConfig network_config(const AgentConfig& cfg) {
        QNetworkConfig net;
        net.beams = cfg.beams;
        net.frames = kStackFrames;
        net.goal = cfg.task == Task::Goal;
        net.actions = cfg.actions;
        net.atoms = cfg.algorithm == Algorithm::Rainbow ? cfg.atoms : 1;
        net.hidden = cfg.hidden;
        net.noisy = cfg.algorithm == Algorithm::Rainbow;
        return net;
    }

    static CheckpointEntry tensor_entry(const std::string& name, const Mat<float>& v) {
        return {name,
                {static_cast<std::uint64_t>(v.rows()), static_cast<std::uint64_t>(v.cols())},
                std::vector<float>(v.data(), v.data() + v.size())};
    }

    static void assign_tensor(const std::map<std::string, CheckpointEntry>& index, const std::string& name,
                              Mat<float>& v) {
        const auto it = index.find(name);
        if (it == index.end()) throw ParseError("checkpoint is missing entry: " + name);
        const auto& e = it->second;
        if (e.dims.size() != 2 || e.dims[0] != static_cast<std::uint64_t>(v.rows()) ||
            e.dims[1] != static_cast<std::uint64_t>(v.cols()))
            throw ParseError("checkpoint entry has wrong shape: " + name);
        std::copy(e.data.begin(), e.data.end(), v.data());
    }

    void check_observation(const Observation& o) const {
        if (o.beams != cfg_.beams || static_cast<int>(o.scan_stack.size()) != kStackFrames * cfg_.beams)
            throw UsageError("observation does not match the agent's sensor size");
        if (o.has_goal != (cfg_.task == Task::Goal)) throw UsageError("observation task does not match the agent");
    }

    void fill_input(const Observation& o) {
        check_observation(o);
        scans1_.resize(kStackFrames * cfg_.beams, 1);
        for (int i = 0; i < kStackFrames * cfg_.beams; ++i) scans1_(i, 0) = o.scan_stack[static_cast<std::size_t>(i)];
        if (cfg_.task == Task::Goal) {
            goal1_.resize(2, 1);
            goal1_(0, 0) = o.goal_distance;
            goal1_(1, 0) = o.goal_heading;
        }
    }

    int greedy_action(const Observation& obs, bool use_noise) {
        fill_input(obs);
        const Mat<float>& out = online_.forward(scans1_, cfg_.task == Task::Goal ? &goal1_ : nullptr, use_noise);
        if (cfg_.algorithm == Algorithm::D3qn) {
            Eigen::Index best;
            out.col(0).maxCoeff(&best);
            return static_cast<int>(best);
        }
        int best = 0;
        double best_q = -std::numeric_limits<double>::infinity();
        for (int a = 0; a < cfg_.actions; ++a) {
            const double q = expected_value(out.col(0).data() + a * cfg_.atoms, support_);
            if (q > best_q) {
                best_q = q;
                best = a;
            }
        }
        return best;
    }

    void fill_batch(const std::vector<std::size_t>& indices) {
        const int n = static_cast<int>(indices.size());
        const int rows = kStackFrames * cfg_.beams;
        bs_.resize(rows, n);
        bs2_.resize(rows, n);
        if (cfg_.task == Task::Goal) {
            bg_.resize(2, n);
            bg2_.resize(2, n);
        }
        for (int k = 0; k < n; ++k) {
            const Transition& t = buffer_.at(indices[static_cast<std::size_t>(k)]);
            for (int i = 0; i < rows; ++i) {
                bs_(i, k) = t.state.scan_stack[static_cast<std::size_t>(i)];
                bs2_(i, k) = t.next_state.scan_stack[static_cast<std::size_t>(i)];
            }
            if (cfg_.task == Task::Goal) {
                bg_(0, k) = t.state.goal_distance;
                bg_(1, k) = t.state.goal_heading;
                bg2_(0, k) = t.next_state.goal_distance;
                bg2_(1, k) = t.next_state.goal_heading;
            }
        }
    }

    float learn_d3qn(const PrioritizedReplay::Batch& batch) {
        const int n = static_cast<int>(batch.indices.size());
        const Mat<float>* g2 = cfg_.task == Task::Goal ? &bg2_ : nullptr;
        const Mat<float>* g1 = cfg_.task == Task::Goal ? &bg_ : nullptr;
        const Mat<float> q_online_next = online_.forward(bs2_, g2, false);
        const Mat<float> q_target_next = target_.forward(bs2_, g2, false);
        std::vector<double> y(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            const Transition& t = buffer_.at(batch.indices[static_cast<std::size_t>(k)]);
            std::vector<double> qo(static_cast<std::size_t>(cfg_.actions)), qt(static_cast<std::size_t>(cfg_.actions));
            for (int a = 0; a < cfg_.actions; ++a) {
                qo[static_cast<std::size_t>(a)] = q_online_next(a, k);
                qt[static_cast<std::size_t>(a)] = q_target_next(a, k);
            }
            y[static_cast<std::size_t>(k)] = d3qn_target(t.n_step_return, t.effective_n, t.done, cfg_.gamma, qo, qt);
        }
        const Mat<float>& q = online_.forward(bs_, g1, false);
        Mat<float> grad = Mat<float>::Zero(cfg_.actions, n);
        double loss = 0.0;
        for (int k = 0; k < n; ++k) {
            const Transition& t = buffer_.at(batch.indices[static_cast<std::size_t>(k)]);
            const double w = batch.weights[static_cast<std::size_t>(k)];
            const double delta = y[static_cast<std::size_t>(k)] - q(t.action, k);
            loss += w * delta * delta;
            grad(t.action, k) = static_cast<float>(-2.0 * w * delta / n);
            buffer_.update_priority(batch.indices[static_cast<std::size_t>(k)], std::abs(delta));
        }
        online_.backward(grad);
        return static_cast<float>(loss / n);
    }

    float learn_rainbow(const PrioritizedReplay::Batch& batch) {
        const int n = static_cast<int>(batch.indices.size());
        const Mat<float>* g2 = cfg_.task == Task::Goal ? &bg2_ : nullptr;
        const Mat<float>* g1 = cfg_.task == Task::Goal ? &bg_ : nullptr;
        online_.sample_noise(rng_);
        const Mat<float> p_online_next = online_.forward(bs2_, g2, true);
        target_.sample_noise(rng_);
        const Mat<float> p_target_next = target_.forward(bs2_, g2, true);

        std::vector<std::vector<double>> m(static_cast<std::size_t>(n));
        for (int k = 0; k < n; ++k) {
            int best = 0;
            double best_q = -std::numeric_limits<double>::infinity();
            for (int a = 0; a < cfg_.actions; ++a) {
                const double q = expected_value(p_online_next.col(k).data() + a * cfg_.atoms, support_);
                if (q > best_q) {
                    best_q = q;
                    best = a;
                }
            }
            const Transition& t = buffer_.at(batch.indices[static_cast<std::size_t>(k)]);
            std::vector<double> pt(static_cast<std::size_t>(cfg_.atoms));
            for (int i = 0; i < cfg_.atoms; ++i) pt[static_cast<std::size_t>(i)] = p_target_next(best * cfg_.atoms + i, k);
            double gn = 1.0;
            for (int j = 0; j < t.effective_n; ++j) gn *= cfg_.gamma;
            m[static_cast<std::size_t>(k)] = project_distribution(pt, t.n_step_return, gn, t.done, support_);
        }

        online_.sample_noise(rng_);
        const Mat<float>& p = online_.forward(bs_, g1, true);
        Mat<float> grad = Mat<float>::Zero(cfg_.actions * cfg_.atoms, n);
        double loss = 0.0;
        for (int k = 0; k < n; ++k) {
            const Transition& t = buffer_.at(batch.indices[static_cast<std::size_t>(k)]);
            const double w = batch.weights[static_cast<std::size_t>(k)];
            double ce = 0.0;
            for (int i = 0; i < cfg_.atoms; ++i) {
                const double pi = std::max(static_cast<double>(p(t.action * cfg_.atoms + i, k)), 1e-30);
                const double mi = m[static_cast<std::size_t>(k)][static_cast<std::size_t>(i)];
                ce -= mi * std::log(pi);
                grad(t.action * cfg_.atoms + i, k) =
                    static_cast<float>(w * (static_cast<double>(p(t.action * cfg_.atoms + i, k)) - mi) / n);
            }
            loss += w * ce;
            buffer_.update_priority(batch.indices[static_cast<std::size_t>(k)], ce);
        }
        online_.backward(grad);
        return static_cast<float>(loss / n);
    }

    AgentConfig cfg_;
    Rng rng_;
    QNetwork<float> online_, target_;
    Adam<float> opt_;
    PrioritizedReplay buffer_;
    NStepAccumulator nstep_;
    AtomSupport support_;
    std::uint64_t env_steps_ = 0, learn_steps_ = 0;
    Mat<float> scans1_, goal1_, bs_, bs2_, bg_, bg2_;
};

/// Reconstruct the architecture half of an AgentConfig from a checkpoint, so
/// a saved agent can be rebuilt without the original run configuration.
inline AgentConfig agent_config_from_checkpoint(const std::string& path) {
    const auto index = checkpoint_index(read_checkpoint(path));
    const auto it = index.find("state.arch");
    if (it == index.end()) throw ParseError("checkpoint is missing entry: state.arch");
    const auto words = u64s_from_entry(it->second);
    if (words.size() != 9) throw ParseError("checkpoint architecture entry has wrong size");
    if (words[0] > 1) throw ParseError("checkpoint names an unknown algorithm");
    if (words[1] > 1) throw ParseError("checkpoint names an unknown task");
    AgentConfig cfg = default_agent_config(static_cast<Algorithm>(words[0]), static_cast<Task>(words[1]));
    cfg.beams = static_cast<int>(words[2]);
    cfg.actions = static_cast<int>(words[3]);
    cfg.hidden = static_cast<int>(words[4]);
    cfg.atoms = static_cast<int>(words[5]);
    cfg.n_step = static_cast<int>(words[6]);
    std::memcpy(&cfg.v_min, &words[7], sizeof cfg.v_min);
    std::memcpy(&cfg.v_max, &words[8], sizeof cfg.v_max);
    return cfg;
}

} // namespace dnrl

#pragma once

#include <cmath>
#include <cstddef>
#include <deque>
#include <limits>
#include <vector>

#include "dnrl/env.hpp"
#include "dnrl/errors.hpp"
#include "dnrl/rng.hpp"

namespace dnrl {

/// Replay record over an n-step window starting at time t.
struct Transition {
    Observation state;
    int action = 0;
    float n_step_return = 0.0f;
    Observation next_state; // state at t + effective_n
    bool done = false;
    int effective_n = 1;
};

/// Segment tree over leaf priorities. Every node keeps sum, min and max of its
/// subtree so sampling (sum), the buffer-wide importance-weight bound (min)
/// and maximal-priority inserts (max) are all O(log n). Unoccupied leaves hold
/// (0, +inf, -inf) and so never perturb any of the three.
class SumTree {
public:
    explicit SumTree(std::size_t capacity) {
        cap_ = 1;
        while (cap_ < capacity) cap_ <<= 1;
        sum_.assign(2 * cap_, 0.0);
        min_.assign(2 * cap_, std::numeric_limits<double>::infinity());
        max_.assign(2 * cap_, -std::numeric_limits<double>::infinity());
    }

    std::size_t capacity() const { return cap_; }

    void set(std::size_t i, double p) {
        if (i >= cap_) throw UsageError("sum tree index out of range");
        std::size_t node = cap_ + i;
        sum_[node] = p;
        min_[node] = p;
        max_[node] = p;
        for (node >>= 1; node >= 1; node >>= 1) {
            sum_[node] = sum_[2 * node] + sum_[2 * node + 1];
            min_[node] = std::min(min_[2 * node], min_[2 * node + 1]);
            max_[node] = std::max(max_[2 * node], max_[2 * node + 1]);
        }
    }

    double get(std::size_t i) const {
        if (i >= cap_) throw UsageError("sum tree index out of range");
        return sum_[cap_ + i];
    }

    double total() const { return sum_[1]; }
    double min_leaf() const { return min_[1]; }
    double max_leaf() const { return max_[1]; }

    /// Leaf whose cumulative-sum interval contains mass.
    std::size_t find_prefix(double mass) const {
        std::size_t node = 1;
        while (node < cap_) {
            if (mass < sum_[2 * node]) {
                node = 2 * node;
            } else {
                mass -= sum_[2 * node];
                node = 2 * node + 1;
            }
        }
        return node - cap_;
    }

    // heap-indexed read access (root = 1), for consistency checks
    double node_sum(std::size_t node) const { return sum_.at(node); }

private:
    std::size_t cap_ = 1;
    std::vector<double> sum_, min_, max_;
};

struct PerConfig {
    double alpha = 0.6;
    double beta0 = 0.4;
    double eps_p = 0.01;
};

/// Ring buffer with proportional prioritized sampling. Priorities are stored
/// already exponentiated: leaf_i = (|value| + eps_p)^alpha, so a draw is a
/// plain prefix search over the stored mass.
class PrioritizedReplay {
public:
    PrioritizedReplay(std::size_t capacity, PerConfig cfg)
        : cap_(capacity), cfg_(cfg), tree_(capacity) {
        if (capacity == 0) throw ConfigError("replay capacity must be positive");
        if (cfg.alpha < 0.0) throw ConfigError("alpha must be nonnegative");
        if (!(cfg.beta0 > 0.0 && cfg.beta0 <= 1.0)) throw ConfigError("beta0 must be in (0, 1]");
        data_.resize(capacity);
    }

    std::size_t size() const { return size_; }
    std::size_t capacity() const { return cap_; }
    const Transition& at(std::size_t i) const { return data_[i]; }
    const SumTree& tree() const { return tree_; }

    /// New entries take the maximal current stored priority (1 into an empty
    /// buffer) so each one is sampled at least once before decaying.
    std::size_t push(Transition t) {
        const std::size_t slot = next_;
        data_[slot] = std::move(t);
        const double p = size_ == 0 ? 1.0 : tree_.max_leaf();
        tree_.set(slot, p);
        next_ = (next_ + 1) % cap_;
        size_ = std::min(size_ + 1, cap_);
        return slot;
    }

    /// value is |delta| (D3QN) or the per-sample KL loss (Rainbow).
    void update_priority(std::size_t i, double value) {
        if (i >= size_) throw UsageError("priority index out of occupied range");
        tree_.set(i, std::pow(std::abs(value) + cfg_.eps_p, cfg_.alpha));
    }

    struct Batch {
        std::vector<std::size_t> indices;
        std::vector<double> weights; // (N * P(i))^-beta, renormalized to max 1
    };

    /// Stratified draw: the stored mass is split into `batch` equal strata and
    /// one sample is taken uniformly inside each.
    Batch sample(std::size_t batch, double beta, Rng& rng) const {
        if (batch == 0 || batch > size_) throw UsageError("cannot sample more transitions than stored");
        Batch out;
        out.indices.resize(batch);
        out.weights.resize(batch);
        const double total = tree_.total();
        const double n = static_cast<double>(size_);
        // smallest occupied priority gives the largest weight in the buffer
        const double w_max = std::pow(n * tree_.min_leaf() / total, -beta);
        for (std::size_t k = 0; k < batch; ++k) {
            const double mass = (static_cast<double>(k) + rng.uniform()) * total / static_cast<double>(batch);
            std::size_t idx = tree_.find_prefix(mass);
            if (idx >= size_) idx = size_ - 1; // floating-point edge of the last stratum
            out.indices[k] = idx;
            const double w = std::pow(n * tree_.get(idx) / total, -beta);
            out.weights[k] = w / w_max;
        }
        return out;
    }

private:
    std::size_t cap_, size_ = 0, next_ = 0;
    PerConfig cfg_;
    std::vector<Transition> data_;
    SumTree tree_;
};

/// Builds truncated n-step transitions from a stream of environment steps.
/// Emits the front entry once n steps are buffered; a terminal flushes every
/// pending entry with sums truncated at the terminal state.
class NStepAccumulator {
public:
    NStepAccumulator(int n, double gamma) : n_(n), gamma_(gamma) {
        if (n < 1) throw ConfigError("n-step horizon must be at least 1");
    }

    struct Step {
        Observation state;
        int action;
        float reward;
        Observation next_state;
        bool done;
    };

    std::vector<Transition> push(Step s) {
        window_.push_back(std::move(s));
        std::vector<Transition> out;
        if (window_.back().done) {
            while (!window_.empty()) {
                out.push_back(make_front(window_.size()));
                window_.pop_front();
            }
        } else if (static_cast<int>(window_.size()) == n_) {
            out.push_back(make_front(window_.size()));
            window_.pop_front();
        }
        return out;
    }

    void clear() { window_.clear(); }
    std::size_t pending() const { return window_.size(); }

private:
    Transition make_front(std::size_t m) const {
        Transition t;
        t.state = window_.front().state;
        t.action = window_.front().action;
        double acc = 0.0, g = 1.0;
        for (std::size_t k = 0; k < m; ++k) {
            acc += g * static_cast<double>(window_[k].reward);
            g *= gamma_;
        }
        t.n_step_return = static_cast<float>(acc);
        t.next_state = window_[m - 1].next_state;
        t.done = window_[m - 1].done;
        t.effective_n = static_cast<int>(m);
        return t;
    }

    int n_;
    double gamma_;
    std::deque<Step> window_;
};

} // namespace dnrl

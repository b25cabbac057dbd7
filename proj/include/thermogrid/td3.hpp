#pragma once

// Twin Delayed DDPG: deterministic tanh actor, twin critics with a pessimistic
// (min) bootstrap, target policy smoothing, delayed actor/target updates,
// uniform replay, and Ornstein-Uhlenbeck exploration noise.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermogrid/environment.hpp"
#include "thermogrid/errors.hpp"
#include "thermogrid/mlp.hpp"

namespace thermogrid {

struct Td3Config {
    double actor_lr = 1e-4;
    double critic_lr = 1e-3;
    double gamma = 0.99;
    double tau = 0.01;
    std::size_t policy_delay = 3;
    std::size_t buffer_capacity = 4000;
    std::size_t batch_size = 64;
    std::size_t episodes = 200;
    double ou_mu = 0.0;
    double ou_theta = 0.15;
    // Exploration scale decays linearly from start to end over the episodes.
    double ou_sigma_start = 0.2;
    double ou_sigma_end = 0.05;
    double smoothing_sigma = 0.2;
    double smoothing_clip = 0.5;
    std::size_t warmup_steps = 500;
    std::vector<std::size_t> hidden_layers{128, 128};
    double actor_final_scale = 1e-3;
    // Multiplies environment rewards before they enter the replay buffer.
    double reward_scale = 1e-3;

    friend bool operator==(const Td3Config&, const Td3Config&) = default;
};

inline void validate(const Td3Config& c, std::string_view path = "td3") {
    const std::string base(path);
    using detail::require;
    require(std::isfinite(c.actor_lr) && c.actor_lr > 0, base + ".actor_lr", "must be > 0");
    require(std::isfinite(c.critic_lr) && c.critic_lr > 0, base + ".critic_lr", "must be > 0");
    require(c.gamma > 0.0 && c.gamma <= 1.0, base + ".gamma", "must be in (0, 1]");
    require(c.tau > 0.0 && c.tau <= 1.0, base + ".tau", "must be in (0, 1]");
    require(c.policy_delay >= 1, base + ".policy_delay", "must be >= 1");
    require(c.batch_size >= 1, base + ".batch_size", "must be >= 1");
    require(c.buffer_capacity >= c.batch_size, base + ".buffer_capacity", "must be >= batch_size");
    require(std::isfinite(c.ou_mu), base + ".ou_mu", "must be finite");
    require(std::isfinite(c.ou_theta) && c.ou_theta >= 0, base + ".ou_theta", "must be >= 0");
    require(std::isfinite(c.ou_sigma_start) && c.ou_sigma_start >= 0, base + ".ou_sigma_start",
            "must be >= 0");
    require(std::isfinite(c.ou_sigma_end) && c.ou_sigma_end >= 0, base + ".ou_sigma_end",
            "must be >= 0");
    require(std::isfinite(c.smoothing_sigma) && c.smoothing_sigma >= 0, base + ".smoothing_sigma",
            "must be >= 0");
    require(std::isfinite(c.smoothing_clip) && c.smoothing_clip >= 0, base + ".smoothing_clip",
            "must be >= 0");
    require(!c.hidden_layers.empty(), base + ".hidden_layers", "must list at least one width");
    for (std::size_t w : c.hidden_layers) {
        require(w >= 1, base + ".hidden_layers", "widths must be >= 1");
    }
    require(std::isfinite(c.actor_final_scale) && c.actor_final_scale > 0,
            base + ".actor_final_scale", "must be > 0");
    require(std::isfinite(c.reward_scale) && c.reward_scale > 0, base + ".reward_scale",
            "must be > 0");
}

/// Replay record. `reward` is the learning signal (environment reward times reward_scale).
struct Transition {
    StateFeatures state{};
    NormalizedAction action{};
    double reward = 0.0;
    StateFeatures next_state{};
    bool done = false;
};

class ReplayBuffer {
public:
    explicit ReplayBuffer(std::size_t capacity) : capacity_(capacity) {
        if (capacity == 0) throw ContractViolation("ReplayBuffer: capacity must be >= 1");
        records_.reserve(capacity);
    }

    void store(const Transition& t) {
        if (records_.size() < capacity_) {
            records_.push_back(t);
        } else {
            records_[cursor_] = t;
        }
        cursor_ = (cursor_ + 1) % capacity_;
    }

    /// Uniform with replacement.
    std::vector<Transition> sample(std::size_t batch_size, std::mt19937_64& rng) const {
        if (records_.size() < batch_size || batch_size == 0) {
            throw ContractViolation("ReplayBuffer::sample: buffer holds " +
                                    std::to_string(records_.size()) + " records, need " +
                                    std::to_string(batch_size));
        }
        std::uniform_int_distribution<std::size_t> pick(0, records_.size() - 1);
        std::vector<Transition> out;
        out.reserve(batch_size);
        for (std::size_t i = 0; i < batch_size; ++i) out.push_back(records_[pick(rng)]);
        return out;
    }

    std::size_t size() const { return records_.size(); }
    std::size_t capacity() const { return capacity_; }
    /// Oldest record first.
    const Transition& at(std::size_t i) const {
        const std::size_t start = records_.size() < capacity_ ? 0 : cursor_;
        return records_.at((start + i) % records_.size());
    }

private:
    std::size_t capacity_;
    std::size_t cursor_ = 0;
    std::vector<Transition> records_;
};

/// x <- x + theta * (mu - x) + sigma * xi, unit time step.
struct OuNoiseState {
    NormalizedAction x{};
    double mu = 0.0;
    double theta = 0.15;
    double sigma = 0.2;

    void reset() { x.fill(mu); }
};

inline NormalizedAction ou_step(OuNoiseState& s, std::mt19937_64& rng) {
    std::normal_distribution<double> xi(0.0, 1.0);
    for (double& v : s.x) {
        v = v + s.theta * (s.mu - v) + s.sigma * xi(rng);
    }
    return s.x;
}

namespace detail {

inline Eigen::MatrixXd stack_states(std::span<const Transition> batch, bool next) {
    Eigen::MatrixXd m(kStateDim, static_cast<Eigen::Index>(batch.size()));
    for (std::size_t j = 0; j < batch.size(); ++j) {
        const auto& s = next ? batch[j].next_state : batch[j].state;
        for (std::size_t i = 0; i < kStateDim; ++i) m(i, j) = s[i];
    }
    return m;
}

inline Eigen::MatrixXd join(const Eigen::MatrixXd& states, const Eigen::MatrixXd& actions) {
    Eigen::MatrixXd m(states.rows() + actions.rows(), states.cols());
    m << states, actions;
    return m;
}

}  // namespace detail

struct UpdateStats {
    double critic1_loss = 0.0;
    double critic2_loss = 0.0;
    std::optional<double> actor_loss;  // set when the delayed policy step ran
};

class Td3Agent {
public:
    Td3Agent(const Td3Config& config, std::uint64_t seed) : config_(config), rng_(seed) {
        std::vector<std::size_t> actor_sizes{kStateDim};
        std::vector<std::size_t> critic_sizes{kStateDim + kActionDim};
        for (std::size_t w : config.hidden_layers) {
            actor_sizes.push_back(w);
            critic_sizes.push_back(w);
        }
        actor_sizes.push_back(kActionDim);
        critic_sizes.push_back(1);

        actor_ = Mlp(actor_sizes, Activation::relu, Activation::tanh);
        critic1_ = Mlp(critic_sizes, Activation::relu, Activation::identity);
        critic2_ = Mlp(critic_sizes, Activation::relu, Activation::identity);
        actor_.initialize(rng_, config.actor_final_scale);
        critic1_.initialize(rng_);
        critic2_.initialize(rng_);
        actor_target_ = actor_;
        critic1_target_ = critic1_;
        critic2_target_ = critic2_;
        actor_opt_ = AdamState(actor_, config.actor_lr);
        critic1_opt_ = AdamState(critic1_, config.critic_lr);
        critic2_opt_ = AdamState(critic2_, config.critic_lr);
    }

    /// Restores a trained agent from its six networks.
    Td3Agent(const Td3Config& config, Mlp actor, Mlp critic1, Mlp critic2, Mlp actor_target,
             Mlp critic1_target, Mlp critic2_target, std::uint64_t seed = 0)
        : config_(config),
          rng_(seed),
          actor_(std::move(actor)),
          critic1_(std::move(critic1)),
          critic2_(std::move(critic2)),
          actor_target_(std::move(actor_target)),
          critic1_target_(std::move(critic1_target)),
          critic2_target_(std::move(critic2_target)) {
        check_shapes();
        actor_opt_ = AdamState(actor_, config.actor_lr);
        critic1_opt_ = AdamState(critic1_, config.critic_lr);
        critic2_opt_ = AdamState(critic2_, config.critic_lr);
    }

    /// Deterministic actor output, plus the current OU value when `noise` is set.
    NormalizedAction select_action(const StateFeatures& features, const OuNoiseState* noise) const {
        return select_action(actor_, features, noise);
    }

    static NormalizedAction select_action(const Mlp& actor, const StateFeatures& features,
                                          const OuNoiseState* noise) {
        const auto y = actor.forward(std::span<const double>(features));
        NormalizedAction a{};
        for (std::size_t i = 0; i < kActionDim; ++i) {
            a[i] = noise ? std::clamp(y[i] + noise->x[i], -1.0, 1.0) : y[i];
        }
        return a;
    }

    /// y = r + gamma * (1 - done) * min(Q1', Q2') at the smoothed target action.
    Eigen::VectorXd critic_targets(std::span<const Transition> batch) {
        if (batch.empty()) throw ContractViolation("critic_targets: empty batch");
        const Eigen::MatrixXd next = detail::stack_states(batch, true);
        Eigen::MatrixXd next_action = actor_target_.forward(next);
        if (config_.smoothing_sigma > 0.0) {
            std::normal_distribution<double> eps(0.0, config_.smoothing_sigma);
            for (Eigen::Index i = 0; i < next_action.size(); ++i) {
                const double e = std::clamp(eps(rng_), -config_.smoothing_clip, config_.smoothing_clip);
                next_action.data()[i] = std::clamp(next_action.data()[i] + e, -1.0, 1.0);
            }
        }
        const Eigen::MatrixXd joined = detail::join(next, next_action);
        const Eigen::MatrixXd q1 = critic1_target_.forward(joined);
        const Eigen::MatrixXd q2 = critic2_target_.forward(joined);
        Eigen::VectorXd y(static_cast<Eigen::Index>(batch.size()));
        for (std::size_t j = 0; j < batch.size(); ++j) {
            const auto jj = static_cast<Eigen::Index>(j);
            const double bootstrap = std::min(q1(0, jj), q2(0, jj));
            y(jj) = batch[j].done ? batch[j].reward
                                  : batch[j].reward + config_.gamma * bootstrap;
        }
        return y;
    }

    /// One TD3 step on `batch`. Critics always regress; the actor and all
    /// targets move only on every `policy_delay`-th call.
    UpdateStats update(std::span<const Transition> batch) {
        ++update_count_;
        const Eigen::VectorXd y = critic_targets(batch);
        const Eigen::MatrixXd states = detail::stack_states(batch, false);
        Eigen::MatrixXd actions(kActionDim, static_cast<Eigen::Index>(batch.size()));
        for (std::size_t j = 0; j < batch.size(); ++j)
            for (std::size_t i = 0; i < kActionDim; ++i)
                actions(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = batch[j].action[i];
        const Eigen::MatrixXd joined = detail::join(states, actions);
        const double n = static_cast<double>(batch.size());

        UpdateStats stats;
        const auto fit_critic = [&](Mlp& critic, AdamState& opt) {
            Mlp::Tape tape;
            const Eigen::MatrixXd q = critic.forward(joined, tape);
            const Eigen::RowVectorXd err = q.row(0) - y.transpose();
            const double loss = err.squaredNorm() / n;
            const Eigen::MatrixXd upstream = (2.0 / n) * err;
            adam_step(critic, critic.backward(tape, upstream), opt);
            return loss;
        };
        stats.critic1_loss = fit_critic(critic1_, critic1_opt_);
        stats.critic2_loss = fit_critic(critic2_, critic2_opt_);
        if (!std::isfinite(stats.critic1_loss) || !std::isfinite(stats.critic2_loss)) {
            throw NumericalError("critic loss is not finite at update " + std::to_string(update_count_));
        }

        if (update_count_ % config_.policy_delay == 0) {
            Mlp::Tape actor_tape;
            const Eigen::MatrixXd pi = actor_.forward(states, actor_tape);
            Mlp::Tape critic_tape;
            const Eigen::MatrixXd q = critic1_.forward(detail::join(states, pi), critic_tape);
            const double loss = -q.sum() / n;
            const Eigen::MatrixXd upstream = Eigen::MatrixXd::Constant(1, q.cols(), -1.0 / n);
            const MlpGradients cg = critic1_.backward(critic_tape, upstream);
            const Eigen::MatrixXd action_grad = cg.input.bottomRows(kActionDim);
            adam_step(actor_, actor_.backward(actor_tape, action_grad), actor_opt_);
            if (!std::isfinite(loss)) {
                throw NumericalError("actor loss is not finite at update " + std::to_string(update_count_));
            }
            stats.actor_loss = loss;
            soft_update(actor_target_, actor_, config_.tau);
            soft_update(critic1_target_, critic1_, config_.tau);
            soft_update(critic2_target_, critic2_, config_.tau);
        }
        return stats;
    }

    /// Samples and updates, or returns nullopt while the buffer holds fewer
    /// than batch_size records.
    std::optional<UpdateStats> train_step(const ReplayBuffer& buffer) {
        if (buffer.size() < config_.batch_size) return std::nullopt;
        const auto batch = buffer.sample(config_.batch_size, rng_);
        return update(batch);
    }

    const Td3Config& config() const { return config_; }
    const Mlp& actor() const { return actor_; }
    const Mlp& critic1() const { return critic1_; }
    const Mlp& critic2() const { return critic2_; }
    const Mlp& actor_target() const { return actor_target_; }
    const Mlp& critic1_target() const { return critic1_target_; }
    const Mlp& critic2_target() const { return critic2_target_; }
    Mlp& mutable_actor() { return actor_; }
    Mlp& mutable_critic1() { return critic1_; }
    Mlp& mutable_critic2() { return critic2_; }
    std::size_t update_count() const { return update_count_; }

private:
    void check_shapes() const {
        const auto fail = [](const std::string& what) {
            throw InputMismatch("agent checkpoint: " + what);
        };
        if (actor_.input_dim() != kStateDim || actor_.output_dim() != kActionDim)
            fail("actor must map 7 state features to 3 actions");
        for (const Mlp* c : {&critic1_, &critic2_, &critic1_target_, &critic2_target_}) {
            if (c->input_dim() != kStateDim + kActionDim || c->output_dim() != 1)
                fail("critics must map 10 inputs to 1 value");
        }
        if (actor_target_.sizes() != actor_.sizes()) fail("actor target shape differs from actor");
        if (critic1_target_.sizes() != critic1_.sizes() || critic2_target_.sizes() != critic2_.sizes())
            fail("critic target shape differs from critic");
    }

    Td3Config config_;
    std::mt19937_64 rng_;
    Mlp actor_, critic1_, critic2_;
    Mlp actor_target_, critic1_target_, critic2_target_;
    AdamState actor_opt_, critic1_opt_, critic2_opt_;
    std::size_t update_count_ = 0;
};

}  // namespace thermogrid

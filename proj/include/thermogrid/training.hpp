#pragma once

// Episode loop: a fresh disturbed scenario per episode, OU exploration,
// one TD3 update per environment step after a random-action warm-up.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <functional>
#include <ostream>
#include <random>
#include <sstream>
#include <vector>

#include "thermogrid/config.hpp"
#include "thermogrid/csv.hpp"
#include "thermogrid/environment.hpp"
#include "thermogrid/td3.hpp"

namespace thermogrid {

struct EpisodeLog {
    std::size_t episode = 0;  // 1-based
    double cum_reward = 0.0;
    double mean5 = 0.0;  // trailing mean over up to 5 episodes
    double c_s = 0.0;
    double delta_p = 0.0;
    double seconds = 0.0;
};

struct TrainLog {
    std::vector<EpisodeLog> episodes;
};

/// Independent RNG stream `stream` derived from the master seed.
inline std::mt19937_64 derive_rng(std::uint64_t master_seed, std::uint64_t stream) {
    std::seed_seq seq{static_cast<std::uint32_t>(master_seed), static_cast<std::uint32_t>(master_seed >> 32),
                      static_cast<std::uint32_t>(stream), 0x7468676du};
    return std::mt19937_64(seq);
}

using Policy = std::function<NormalizedAction(const EnvState&, const StateFeatures&)>;
using StepHook = std::function<void(const StepRecord&)>;

/// Runs one full episode of `policy` on `scenario`.
inline Trajectory run_episode(const Policy& policy, const Scenario& scenario, const PlantConfig& plant,
                              const RewardWeights& weights, const StepHook& on_step = {}) {
    Environment env(plant, weights);
    env.reset(scenario);
    Trajectory traj;
    traj.reserve(plant.horizon);
    while (!env.done()) {
        StepRecord rec;
        rec.state = env.state();
        rec.normalized_action = policy(rec.state, normalize_state(rec.state, plant));
        rec.raw_action = to_box(rec.normalized_action, plant);
        rec.outcome = env.step(rec.raw_action);
        if (on_step) on_step(rec);
        traj.push_back(rec);
    }
    return traj;
}

/// Actor rollout; with `noise` the OU process advances once per step.
inline Trajectory rollout(const Mlp& actor, const Scenario& scenario, const PlantConfig& plant,
                          const RewardWeights& weights, OuNoiseState* noise = nullptr,
                          std::mt19937_64* noise_rng = nullptr) {
    if (noise && !noise_rng) throw ContractViolation("rollout: noise requires an RNG");
    const Policy policy = [&](const EnvState&, const StateFeatures& f) {
        if (noise) ou_step(*noise, *noise_rng);
        return Td3Agent::select_action(actor, f, noise);
    };
    return run_episode(policy, scenario, plant, weights);
}

inline double trailing_mean(const std::vector<EpisodeLog>& log, std::size_t window) {
    const std::size_t n = std::min(window, log.size());
    double s = 0.0;
    for (std::size_t i = log.size() - n; i < log.size(); ++i) s += log[i].cum_reward;
    return n ? s / static_cast<double>(n) : 0.0;
}

inline Transition make_transition(const StepRecord& rec, const PlantConfig& plant, double reward_scale) {
    Transition tr;
    tr.state = normalize_state(rec.state, plant);
    tr.action = rec.normalized_action;
    tr.reward = reward_scale * rec.outcome.reward;
    tr.next_state = normalize_state(rec.outcome.next_state, plant);
    tr.done = rec.outcome.done;
    return tr;
}

struct TrainResult {
    Td3Agent agent;
    TrainLog log;
};

using CheckpointSink = std::function<void(std::size_t episode, const Td3Agent&)>;
using EpisodeObserver = std::function<void(const EpisodeLog&, const Trajectory&)>;

/// Deterministic for a given (config, master_seed). Calls `sink` every
/// `training.checkpoint_every` episodes; the final agent is returned.
inline TrainResult train(const SystemConfig& config, std::uint64_t master_seed,
                         const CheckpointSink& sink = {}, const EpisodeObserver& observe = {}) {
    validate(config);
    const PlantConfig& plant = config.plant;
    const Td3Config& td3 = config.td3;
    const UncertaintyTier tier = config.training_tier();

    TrainResult result{Td3Agent(td3, derive_rng(master_seed, 1)()), {}};
    Td3Agent& agent = result.agent;
    ReplayBuffer buffer(td3.buffer_capacity);
    std::mt19937_64 noise_rng = derive_rng(master_seed, 2);
    std::mt19937_64 scenario_rng = derive_rng(master_seed, 3);
    std::mt19937_64 warmup_rng = derive_rng(master_seed, 4);

    const auto check_finite = [&](const StepRecord& rec, std::size_t episode) {
        if (!std::isfinite(rec.outcome.reward)) {
            std::ostringstream msg;
            const auto& s = rec.state;
            msg << "non-finite reward in episode " << episode << " at step " << s.t
                << " (state: e_load=" << s.e_load_kw << " h_load=" << s.h_load_kw
                << " pv=" << s.pv_kw << " wind=" << s.wind_kw << " hsd_l=" << s.hsd_l_kwh
                << " hsd_h=" << s.hsd_h_kwh << "; action=" << rec.raw_action.p_hp_l_kw << ","
                << rec.raw_action.p_hp_h_kw << "," << rec.raw_action.p_cp_kw << ")";
            throw NumericalError(msg.str());
        }
    };

    // Warm-up: whole episodes of uniform random actions, no updates.
    if (td3.episodes > 0) {
        std::uniform_real_distribution<double> u(-1.0, 1.0);
        std::size_t steps = 0;
        while (steps < td3.warmup_steps) {
            const Scenario sc = perturb(config.profile, tier, scenario_rng());
            const Policy random_policy = [&](const EnvState&, const StateFeatures&) {
                return NormalizedAction{u(warmup_rng), u(warmup_rng), u(warmup_rng)};
            };
            run_episode(random_policy, sc, plant, config.reward, [&](const StepRecord& rec) {
                check_finite(rec, 0);
                buffer.store(make_transition(rec, plant, td3.reward_scale));
            });
            steps += plant.horizon;
        }
    }

    OuNoiseState noise{{}, td3.ou_mu, td3.ou_theta, td3.ou_sigma_start};
    for (std::size_t e = 0; e < td3.episodes; ++e) {
        const auto started = std::chrono::steady_clock::now();
        const double frac = td3.episodes > 1 ? static_cast<double>(e) / static_cast<double>(td3.episodes - 1) : 0.0;
        noise.sigma = td3.ou_sigma_start + (td3.ou_sigma_end - td3.ou_sigma_start) * frac;
        noise.reset();

        const Scenario sc = perturb(config.profile, tier, scenario_rng());
        const Policy policy = [&](const EnvState&, const StateFeatures& f) {
            ou_step(noise, noise_rng);
            return agent.select_action(f, &noise);
        };
        const Trajectory traj = run_episode(policy, sc, plant, config.reward, [&](const StepRecord& rec) {
            check_finite(rec, e + 1);
            buffer.store(make_transition(rec, plant, td3.reward_scale));
            agent.train_step(buffer);
        });

        const EpisodeCost cost = episode_cost(traj, plant.horizon);
        EpisodeLog row;
        row.episode = e + 1;
        row.cum_reward = cost.cum_reward;
        row.c_s = cost.c_s;
        row.delta_p = cost.delta_p_total;
        result.log.episodes.push_back(row);
        result.log.episodes.back().mean5 = trailing_mean(result.log.episodes, 5);
        result.log.episodes.back().seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

        if (observe) observe(result.log.episodes.back(), traj);
        if (sink && (e + 1) % config.training.checkpoint_every == 0) {
            sink(e + 1, agent);
        }
    }
    return result;
}

/// Deterministic columns only; wall-clock times go to write_timing_csv.
inline void write_train_log_csv(std::ostream& os, const TrainLog& log) {
    os << "episode,cum_reward,mean5,c_s,delta_p\n";
    for (const auto& e : log.episodes) {
        csv::Row(os) << e.episode << e.cum_reward << e.mean5 << e.c_s << e.delta_p;
    }
}

inline void write_timing_csv(std::ostream& os, const TrainLog& log) {
    os << "episode,seconds\n";
    for (const auto& e : log.episodes) {
        csv::Row(os) << e.episode << e.seconds;
    }
}

}  // namespace thermogrid

#include <cmath>
#include <sstream>

#include <gtest/gtest.h>

#include "thermogrid/checkpoint.hpp"
#include "thermogrid/training.hpp"

using namespace thermogrid;

namespace {

SystemConfig quick_config(std::size_t episodes) {
    SystemConfig c = SystemConfig::defaults();
    c.td3.hidden_layers = {16, 16};
    c.td3.batch_size = 16;
    c.td3.buffer_capacity = 400;
    c.td3.warmup_steps = 48;
    c.td3.episodes = episodes;
    c.training.checkpoint_every = 2;
    return c;
}

}  // namespace

TEST(DeriveRng, StreamsDifferAndRepeat) {
    EXPECT_EQ(derive_rng(1, 2)(), derive_rng(1, 2)());
    EXPECT_NE(derive_rng(1, 2)(), derive_rng(1, 3)());
    EXPECT_NE(derive_rng(1, 2)(), derive_rng(2, 2)());
    EXPECT_NE(derive_rng(1ull << 32, 2)(), derive_rng(0, 2)());
}

TEST(Train, ZeroEpisodesGivesUntrainedAgentAndEmptyLog) {
    const auto c = quick_config(0);
    const auto r = train(c, 3);
    EXPECT_TRUE(r.log.episodes.empty());
    EXPECT_EQ(r.agent.update_count(), 0u);
    const Td3Agent fresh(c.td3, derive_rng(3, 1)());
    EXPECT_TRUE(r.agent.actor() == fresh.actor());
}

TEST(Train, LogShapeAndTrailingMean) {
    const auto r = train(quick_config(7), 4);
    ASSERT_EQ(r.log.episodes.size(), 7u);
    for (std::size_t i = 0; i < 7; ++i) EXPECT_EQ(r.log.episodes[i].episode, i + 1);
    const auto& e = r.log.episodes;
    const double mean5 = (e[0].cum_reward + e[1].cum_reward + e[2].cum_reward + e[3].cum_reward +
                          e[4].cum_reward) / 5.0;
    EXPECT_NEAR(e[4].mean5, mean5, 1e-9 * std::fabs(mean5));
    EXPECT_NEAR(e[1].mean5, (e[0].cum_reward + e[1].cum_reward) / 2.0, 1e-9 * std::fabs(e[1].mean5));
    // One update per learning step once the buffer is seeded.
    EXPECT_EQ(r.agent.update_count(), 7u * 24u);
}

TEST(Train, DeterministicPerSeed) {
    const auto c = quick_config(4);
    const auto a = train(c, 11);
    const auto b = train(c, 11);
    std::ostringstream la, lb;
    write_train_log_csv(la, a.log);
    write_train_log_csv(lb, b.log);
    EXPECT_EQ(la.str(), lb.str());
    EXPECT_TRUE(a.agent.actor() == b.agent.actor());
    EXPECT_TRUE(a.agent.critic2_target() == b.agent.critic2_target());
    const auto d = train(c, 12);
    EXPECT_FALSE(a.agent.actor() == d.agent.actor());
}

TEST(Train, CheckpointSinkCadence) {
    std::vector<std::size_t> seen;
    train(quick_config(5), 1, [&](std::size_t ep, const Td3Agent&) { seen.push_back(ep); });
    EXPECT_EQ(seen, (std::vector<std::size_t>{2, 4}));
}

TEST(Train, LoggedRewardEqualsTrajectoryResummation) {
    std::size_t checked = 0;
    train(quick_config(4), 2, {}, [&](const EpisodeLog& log, const Trajectory& traj) {
        double sum = 0.0, c_s = 0.0;
        for (const auto& r : traj) {
            const auto& b = r.outcome.breakdown;
            sum += -b.c1_step - b.c2_terminal - b.pen_e_ex - b.pen_e_loss - b.pen_h_ex - b.pen_h_loss -
                   b.pen_delta_p;
            c_s += b.c1_step + b.c2_terminal;
        }
        EXPECT_EQ(traj.size(), 24u);
        EXPECT_NEAR(log.cum_reward, sum, 1e-9 * std::fabs(sum));
        EXPECT_NEAR(log.c_s, c_s, 1e-9 * std::max(1.0, std::fabs(c_s)));
        ++checked;
    });
    EXPECT_EQ(checked, 4u);
}

TEST(Rollout, NoiselessIsDeterministicAndFullLength) {
    const auto c = quick_config(0);
    const Td3Agent agent(c.td3, 6);
    const auto sc = perturb(c.profile, c.training_tier(), 1);
    const auto a = rollout(agent.actor(), sc, c.plant, c.reward);
    const auto b = rollout(agent.actor(), sc, c.plant, c.reward);
    ASSERT_EQ(a.size(), 24u);
    for (std::size_t t = 0; t < a.size(); ++t) {
        EXPECT_EQ(a[t].outcome.breakdown, b[t].outcome.breakdown);
        EXPECT_EQ(a[t].normalized_action, b[t].normalized_action);
        // Normalized action recorded equals the actor output exactly.
        EXPECT_EQ(a[t].normalized_action,
                  Td3Agent::select_action(agent.actor(), normalize_state(a[t].state, c.plant), nullptr));
    }
    EXPECT_TRUE(a.back().outcome.done);
}

TEST(Rollout, NoiseNeedsRng) {
    const auto c = quick_config(0);
    const Td3Agent agent(c.td3, 6);
    OuNoiseState n;
    EXPECT_THROW(rollout(agent.actor(), base_scenario(c.profile), c.plant, c.reward, &n), ContractViolation);
}

TEST(MakeTransition, ScalesRewardAndNormalizes) {
    const auto c = quick_config(0);
    Environment env(c.plant, c.reward);
    env.reset(base_scenario(c.profile));
    StepRecord rec;
    rec.state = env.state();
    rec.normalized_action = {0.1, -0.2, 0.3};
    rec.raw_action = to_box(rec.normalized_action, c.plant);
    rec.outcome = env.step(rec.raw_action);
    const auto t = make_transition(rec, c.plant, 1e-3);
    EXPECT_EQ(t.reward, 1e-3 * rec.outcome.reward);
    EXPECT_EQ(t.state, normalize_state(rec.state, c.plant));
    EXPECT_EQ(t.next_state, normalize_state(rec.outcome.next_state, c.plant));
    EXPECT_FALSE(t.done);
}

TEST(TrainLogCsv, Format) {
    TrainLog log;
    log.episodes.push_back({1, -10.5, -10.5, 3.25, 7.0, 0.1});
    std::ostringstream os, ts;
    write_train_log_csv(os, log);
    write_timing_csv(ts, log);
    EXPECT_EQ(os.str(), "episode,cum_reward,mean5,c_s,delta_p\n1,-10.5,-10.5,3.25,7\n");
    EXPECT_EQ(ts.str(), "episode,seconds\n1,0.1\n");
}

TEST(AgentCheckpoint, RoundTripAndManifest) {
    auto c = quick_config(2);
    c.reward.l5 = 0.0;
    const auto r = train(c, 8);
    const auto dir = std::filesystem::temp_directory_path() / "thermogrid_test_ckpt";
    std::filesystem::remove_all(dir);
    save_agent_checkpoint(dir, r.agent, {8, 2, c});
    const auto loaded = load_agent_checkpoint(dir);
    EXPECT_EQ(loaded.manifest.master_seed, 8u);
    EXPECT_EQ(loaded.manifest.episodes, 2u);
    EXPECT_EQ(loaded.manifest.config.reward.l5, 0.0);
    EXPECT_TRUE(loaded.agent.actor() == r.agent.actor());
    EXPECT_TRUE(loaded.agent.critic1() == r.agent.critic1());
    EXPECT_TRUE(loaded.agent.critic2_target() == r.agent.critic2_target());
    std::filesystem::remove(dir / "critic2.mlp");
    EXPECT_THROW(load_agent_checkpoint(dir), InputMismatch);
    std::filesystem::remove_all(dir);
    EXPECT_THROW(load_agent_checkpoint(dir), InputMismatch);
}

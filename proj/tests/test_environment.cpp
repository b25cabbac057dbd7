#include <cmath>
#include <random>
#include <sstream>

#include <gtest/gtest.h>

#include "oracle.hpp"
#include "thermogrid/environment.hpp"

using namespace thermogrid;

namespace {

// Inverse of normalize_state; lives here only.
EnvState denormalize(const StateFeatures& f, const PlantConfig& c) {
    EnvState s;
    s.t = static_cast<std::size_t>(std::lround(f[0] * static_cast<double>(c.horizon)));
    s.e_load_kw = f[1] * c.e_load_max_kw;
    s.h_load_kw = f[2] * c.h_load_max_kw;
    s.pv_kw = f[3] * c.pv_max_kw;
    s.wind_kw = f[4] * c.wind_max_kw;
    s.hsd_l_kwh = c.water_tank.hsd_min_kwh + f[5] * (c.water_tank.hsd_max_kwh - c.water_tank.hsd_min_kwh);
    s.hsd_h_kwh = c.steam_accumulator.hsd_min_kwh +
                  f[6] * (c.steam_accumulator.hsd_max_kwh - c.steam_accumulator.hsd_min_kwh);
    return s;
}

Scenario zero_scenario(std::size_t horizon = 24) {
    TypicalDayProfile p;
    p.electric_load_kw.assign(horizon, 0.0);
    p.heat_load_kw.assign(horizon, 0.0);
    p.irradiance_w_m2.assign(horizon, 0.0);
    p.wind_speed_ms.assign(horizon, 0.0);
    p.buy_price_per_kwh.assign(horizon, 0.5);
    p.sell_price_per_kwh.assign(horizon, 0.4);
    return base_scenario(p);
}

}  // namespace

TEST(Reset, InitialisesFromConfigAndScenario) {
    PlantConfig c;
    Environment env(c, {});
    const auto sc = perturb(default_profile(), UncertaintyTier(0.0, 0.3), 3);
    const EnvState s = env.reset(sc);
    EXPECT_EQ(s.t, 0u);
    EXPECT_FALSE(env.done());
    EXPECT_EQ(s.hsd_l_kwh, c.water_tank.hsd_init_kwh);
    EXPECT_EQ(s.hsd_h_kwh, c.steam_accumulator.hsd_init_kwh);
    EXPECT_EQ(s.e_load_kw, sc.data.electric_load_kw[0]);
    EXPECT_FALSE(env.previous_grid_kw().has_value());
    Environment env2(c, {});
    EXPECT_EQ(env2.reset(sc), s);
}

TEST(Reset, HorizonMismatch) {
    Environment env(PlantConfig{}, {});
    EXPECT_THROW(env.reset(zero_scenario(12)), InputMismatch);
}

TEST(Step, AfterDoneIsContractViolation) {
    PlantConfig c;
    c.horizon = 2;
    Environment env(c, {});
    EXPECT_THROW(env.step({}), ContractViolation);
    env.reset(zero_scenario(2));
    env.step({});
    const auto out = env.step({});
    EXPECT_TRUE(out.done);
    EXPECT_THROW(env.step({}), ContractViolation);
}

TEST(ApplyAction, NullStep) {
    PlantConfig c;
    const auto sc = zero_scenario();
    EnvState s;
    s.hsd_l_kwh = c.water_tank.hsd_init_kwh;
    s.hsd_h_kwh = c.steam_accumulator.hsd_init_kwh;
    const auto out = apply_action(s, {0, 0, 0}, sc, c, {}, std::nullopt);
    EXPECT_EQ(out.grid_kw, 0.0);
    EXPECT_EQ(out.reward, 0.0);
    EXPECT_EQ(out.breakdown, RewardBreakdown{});
    EXPECT_FALSE(out.done);
}

TEST(ApplyAction, HandEvaluatedGrid) {
    PlantConfig c;
    c.hp_low.cop = 3.0;
    c.hp_high.cop = 3.5;
    c.compressor.eta_cp = 0.9;
    const auto sc = zero_scenario();
    EnvState s;
    s.t = 4;
    s.e_load_kw = 200;
    s.pv_kw = 30;
    s.wind_kw = 70;
    s.h_load_kw = 45 + 280;
    s.hsd_l_kwh = 2000;
    s.hsd_h_kwh = 1500;
    const RewardWeights w;
    const auto out = apply_action(s, {100, 80, 50}, sc, c, w, 300.0);
    EXPECT_NEAR(out.grid_kw, 330.0, 1e-12);
    // Tank: +300 from the low pump, -200 lifted by the high pump.
    EXPECT_NEAR(out.next_state.hsd_l_kwh, 2100.0, 1e-9);
    // Accumulator: +280 from the high pump, -280 steam draw (325 - 45 added).
    EXPECT_NEAR(out.next_state.hsd_h_kwh, 1500.0, 1e-9);
    EXPECT_NEAR(out.breakdown.c1_step, 0.1 * 330 * 0.5, 1e-12);
    EXPECT_NEAR(out.breakdown.pen_delta_p, 1.5 * 30, 1e-12);
    EXPECT_EQ(out.breakdown.pen_h_loss, 0.0);
    EXPECT_EQ(out.breakdown.pen_h_ex, 0.0);
    const auto x = oracle::step(s, 100, 80, 50, sc, c, w, true, 300.0);
    EXPECT_NEAR(out.reward, x.total, 1e-12);
}

TEST(ApplyAction, TerminalRestoredStorageHasNoTerminalCost) {
    PlantConfig c;
    const auto sc = zero_scenario();
    EnvState s;
    s.t = 23;
    s.hsd_l_kwh = c.water_tank.hsd_init_kwh;
    s.hsd_h_kwh = c.steam_accumulator.hsd_init_kwh;
    const auto out = apply_action(s, {0, 0, 0}, sc, c, {}, 0.0);
    EXPECT_TRUE(out.done);
    EXPECT_EQ(out.breakdown.c2_terminal, 0.0);
    EXPECT_EQ(out.next_state.t, 24u);
}

TEST(ApplyAction, TerminalCostUsesAbsoluteDeviation) {
    PlantConfig c;
    const auto sc = zero_scenario();
    EnvState s;
    s.t = 23;
    s.hsd_l_kwh = c.water_tank.hsd_init_kwh - 100;
    s.hsd_h_kwh = c.steam_accumulator.hsd_init_kwh + 40;
    const auto out = apply_action(s, {0, 0, 0}, sc, c, {}, 0.0);
    EXPECT_NEAR(out.breakdown.c2_terminal, 0.055 * 100 + 0.1 * 40, 1e-12);
}

TEST(ApplyAction, DeratesHighPumpToTankAvailability) {
    PlantConfig c;
    const auto sc = zero_scenario();
    EnvState s;
    s.hsd_l_kwh = 100;  // plus 0 in; high pump at 500 kW wants 1250
    s.hsd_h_kwh = 0;
    const auto out = apply_action(s, {0, 500, 0}, sc, c, {}, std::nullopt);
    EXPECT_NEAR(out.flows.p_hp_h_effective_kw, 500.0 * 100.0 / 1250.0, 1e-12);
    EXPECT_NEAR(out.next_state.hsd_l_kwh, 0.0, 1e-12);
    EXPECT_LE(out.flows.p_hp_h_effective_kw, out.flows.applied.p_hp_h_kw);
}

TEST(ApplyAction, ClampsActionsAndNaN) {
    PlantConfig c;
    const auto sc = zero_scenario();
    EnvState s;
    s.hsd_l_kwh = 2000;
    s.hsd_h_kwh = 1500;
    const auto out = apply_action(s, {1e9, -5, std::nan("")}, sc, c, {}, std::nullopt);
    EXPECT_EQ(out.flows.applied.p_hp_l_kw, c.hp_low.p_max_kw);
    EXPECT_EQ(out.flows.applied.p_hp_h_kw, c.hp_high.p_min_kw);
    EXPECT_EQ(out.flows.applied.p_cp_kw, c.compressor.p_min_kw);
}

TEST(ApplyAction, GridCapTurnsExcessIntoLoss) {
    PlantConfig c;
    c.grid_cap_kw = 100;
    const auto sc = zero_scenario();
    EnvState s;
    s.e_load_kw = 250;
    s.hsd_l_kwh = 2000;
    s.hsd_h_kwh = 1500;
    const auto out = apply_action(s, {0, 0, 0}, sc, c, {}, std::nullopt);
    EXPECT_EQ(out.grid_kw, 100.0);
    EXPECT_EQ(out.flows.e_loss_kw, 150.0);
    EXPECT_EQ(out.breakdown.pen_e_loss, 150.0);
}

TEST(ApplyAction, ExportUsesSellPrice) {
    PlantConfig c;
    const auto sc = zero_scenario();
    EnvState s;
    s.pv_kw = 100;
    s.hsd_l_kwh = 2000;
    s.hsd_h_kwh = 1500;
    const auto out = apply_action(s, {0, 0, 0}, sc, c, {}, std::nullopt);
    EXPECT_EQ(out.grid_kw, -100.0);
    EXPECT_NEAR(out.breakdown.c1_step, 0.1 * -100 * 0.4, 1e-12);
    EXPECT_NEAR(out.breakdown.pen_e_ex, 110.0, 1e-12);
}

TEST(ApplyAction, MatchesOracleOnRandomSteps) {
    PlantConfig c;
    const RewardWeights w;
    std::mt19937_64 rng(5);
    const auto profile = default_profile();
    for (int i = 0; i < 2000; ++i) {
        const auto sc = perturb(profile, UncertaintyTier(0.0, 0.3), rng());
        const EnvState s = oracle::random_state(rng, sc, c);
        const Action a = oracle::random_action(rng, c);
        const bool has_prev = s.t > 0;
        const double prev = has_prev ? 500.0 * std::uniform_real_distribution<double>(-1, 2)(rng) : 0.0;
        const auto out = apply_action(s, a, sc, c, w, has_prev ? std::optional(prev) : std::nullopt);
        const auto x = oracle::step(s, a.p_hp_l_kw, a.p_hp_h_kw, a.p_cp_kw, sc, c, w, has_prev, prev);
        EXPECT_LE(oracle::rel(out.grid_kw, x.grid), 1e-9);
        EXPECT_LE(oracle::rel(out.next_state.hsd_l_kwh, x.hsd_l), 1e-9);
        EXPECT_LE(oracle::rel(out.next_state.hsd_h_kwh, x.hsd_h), 1e-9);
        EXPECT_LE(oracle::rel(out.breakdown.pen_h_ex, x.ph_ex), 1e-9);
        EXPECT_LE(oracle::rel(out.breakdown.pen_h_loss, x.ph_loss), 1e-9);
        EXPECT_LE(oracle::rel(out.reward, x.total), 1e-9);
    }
}

TEST(ApplyAction, BreakdownTotalIsExactSum) {
    PlantConfig c;
    std::mt19937_64 rng(8);
    const auto sc = perturb(default_profile(), UncertaintyTier(0.0, 0.3), 1);
    for (int i = 0; i < 500; ++i) {
        const auto s = oracle::random_state(rng, sc, c);
        const auto out = apply_action(s, oracle::random_action(rng, c), sc, c, {}, 10.0);
        const auto& b = out.breakdown;
        EXPECT_EQ(b.total, -b.c1_step - b.c2_terminal - b.pen_e_ex - b.pen_e_loss - b.pen_h_ex -
                               b.pen_h_loss - b.pen_delta_p);
        EXPECT_EQ(out.reward, b.total);
    }
}

TEST(ApplyAction, Determinism) {
    PlantConfig c;
    const auto sc = perturb(default_profile(), UncertaintyTier(0.0, 0.3), 2);
    std::mt19937_64 rng(3);
    const auto s = oracle::random_state(rng, sc, c);
    const auto a = oracle::random_action(rng, c);
    const auto o1 = apply_action(s, a, sc, c, {}, 42.0);
    const auto o2 = apply_action(s, a, sc, c, {}, 42.0);
    EXPECT_EQ(o1.breakdown, o2.breakdown);
    EXPECT_EQ(o1.next_state, o2.next_state);
}

TEST(NormalizeState, EdgesAndRoundTrip) {
    PlantConfig c;
    EnvState s;
    s.hsd_l_kwh = c.water_tank.hsd_min_kwh;
    s.hsd_h_kwh = c.steam_accumulator.hsd_min_kwh;
    auto f = normalize_state(s, c);
    EXPECT_EQ(f[0], 0.0);
    EXPECT_EQ(f[5], 0.0);
    EXPECT_EQ(f[6], 0.0);
    s.t = 23;
    EXPECT_DOUBLE_EQ(normalize_state(s, c)[0], 23.0 / 24.0);

    std::mt19937_64 rng(4);
    const auto sc = perturb(default_profile(), UncertaintyTier(0.0, 0.3), 9);
    for (int i = 0; i < 1000; ++i) {
        const auto r = oracle::random_state(rng, sc, c);
        const auto back = denormalize(normalize_state(r, c), c);
        EXPECT_EQ(back.t, r.t);
        EXPECT_NEAR(back.e_load_kw, r.e_load_kw, 1e-9);
        EXPECT_NEAR(back.h_load_kw, r.h_load_kw, 1e-9);
        EXPECT_NEAR(back.pv_kw, r.pv_kw, 1e-9);
        EXPECT_NEAR(back.wind_kw, r.wind_kw, 1e-9);
        EXPECT_NEAR(back.hsd_l_kwh, r.hsd_l_kwh, 1e-9);
        EXPECT_NEAR(back.hsd_h_kwh, r.hsd_h_kwh, 1e-9);
    }
}

TEST(ActionBoxes, RoundTrip) {
    PlantConfig c;
    for (double x : {-1.0, -0.3, 0.0, 0.7, 1.0}) {
        const NormalizedAction a{x, -x, x / 2};
        const auto back = from_box(to_box(a, c), c);
        for (int i = 0; i < 3; ++i) EXPECT_NEAR(back[i], a[i], 1e-12);
    }
    EXPECT_EQ(to_box({-1, -1, -1}, c), (Action{0, 0, 0}));
    EXPECT_EQ(to_box({1, 1, 1}, c), (Action{600, 500, 300}));
}

namespace {

Trajectory constant_grid_trajectory(double first_jump) {
    // Fixed action on a flat scenario: grid equals the load; `first_jump` changes step 5.
    PlantConfig c;
    TypicalDayProfile p = zero_scenario().data;
    p.electric_load_kw.assign(24, 300.0);
    p.electric_load_kw[5] += first_jump;
    for (std::size_t t = 6; t < 24; ++t) p.electric_load_kw[t] += first_jump;
    Environment env(c, {});
    env.reset(base_scenario(p));
    Trajectory traj;
    while (!env.done()) {
        StepRecord r;
        r.state = env.state();
        r.outcome = env.step({0, 0, 0});
        traj.push_back(r);
    }
    return traj;
}

}  // namespace

TEST(EpisodeCost, ConstantGridHasNoFluctuation) {
    EXPECT_EQ(episode_cost(constant_grid_trajectory(0.0), 24).delta_p_total, 0.0);
}

TEST(EpisodeCost, SingleStepChange) {
    EXPECT_EQ(episode_cost(constant_grid_trajectory(10.0), 24).delta_p_total, 10.0);
}

TEST(EpisodeCost, IncompleteTrajectoryRejected) {
    auto traj = constant_grid_trajectory(0.0);
    traj.pop_back();
    EXPECT_THROW(episode_cost(traj, 24), InputMismatch);
}

TEST(EpisodeCost, MatchesOracleResummation) {
    PlantConfig c;
    const RewardWeights w;
    std::mt19937_64 rng(12);
    for (int ep = 0; ep < 20; ++ep) {
        const auto sc = perturb(default_profile(), UncertaintyTier(0.0, 0.3), rng());
        Environment env(c, w);
        env.reset(sc);
        Trajectory traj;
        double c_s = 0.0, dp = 0.0, prev = 0.0;
        bool has_prev = false;
        while (!env.done()) {
            StepRecord r;
            r.state = env.state();
            r.raw_action = oracle::random_action(rng, c);
            const auto x = oracle::step(r.state, r.raw_action.p_hp_l_kw, r.raw_action.p_hp_h_kw,
                                        r.raw_action.p_cp_kw, sc, c, w, has_prev, prev);
            c_s += x.c1 + x.c2;
            if (has_prev) dp += std::fabs(x.grid - prev);
            prev = x.grid;
            has_prev = true;
            r.outcome = env.step(r.raw_action);
            traj.push_back(r);
        }
        const auto e = episode_cost(traj, 24);
        EXPECT_NEAR(e.c_s, c_s, 1e-9 * std::max(1.0, std::fabs(c_s)));
        EXPECT_NEAR(e.delta_p_total, dp, 1e-9 * std::max(1.0, dp));
        EXPECT_EQ(e.hsd_l_T, traj.back().outcome.next_state.hsd_l_kwh);
        EXPECT_EQ(e.dev_h, std::fabs(e.hsd_h_T - c.steam_accumulator.hsd_init_kwh));
    }
}

TEST(TrajectoryCsv, Columns) {
    std::ostringstream os;
    write_trajectory_csv(os, constant_grid_trajectory(0.0));
    const std::string text = os.str();
    EXPECT_EQ(text.substr(0, text.find('\n')),
              "step,e_load_kw,h_load_kw,pv_kw,wind_kw,p_hp_l_kw,p_hp_h_kw,p_cp_kw,p_hp_h_eff_kw,"
              "grid_kw,hsd_l_kwh,hsd_h_kwh,reward,c1_step,c2_terminal,pen_e_ex,pen_e_loss,"
              "pen_h_ex,pen_h_loss,pen_delta_p");
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 25);
}

TEST(PlantValidation, Rejects) {
    PlantConfig c;
    c.horizon = 0;
    EXPECT_THROW(validate(c), ConfigError);
    c = PlantConfig{};
    c.e_load_max_kw = 0;
    EXPECT_THROW(validate(c), ConfigError);
    RewardWeights w;
    w.l5 = -1;
    EXPECT_THROW(validate(w), ConfigError);
}

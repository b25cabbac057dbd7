#pragma once

// Hourly dispatch MDP for the electricity-heat plant.
//
// Heat chain: the low-temperature heat pump charges the water tank; the
// high-temperature heat pump lifts (COP_H - 1) * P from the tank and delivers
// COP_H * P into the steam accumulator; the compressor draws steam and adds
// eta_CP * P_CP on its way to the heat load. The grid closes the electrical
// balance. Reward = -(grid cost) - (terminal storage cost) - weighted penalties.

#include <algorithm>
#include <array>
#include <cmath>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "thermogrid/csv.hpp"
#include "thermogrid/devices.hpp"
#include "thermogrid/errors.hpp"
#include "thermogrid/scenario.hpp"

namespace thermogrid {

inline constexpr std::size_t kStateDim = 7;
inline constexpr std::size_t kActionDim = 3;

using StateFeatures = std::array<double, kStateDim>;
using NormalizedAction = std::array<double, kActionDim>;

struct PlantConfig {
    PvParams pv{};
    WindParams wind{};
    HeatPumpParams hp_low{3.0, 0.0, 600.0};
    HeatPumpParams hp_high{3.5, 0.0, 500.0};
    CompressorParams compressor{0.9, 0.0, 300.0};
    StorageParams water_tank{0.0, 4000.0, 2000.0};
    StorageParams steam_accumulator{0.0, 3000.0, 1500.0};
    double grid_cap_kw = 1.0e6;
    std::size_t horizon = 24;

    // Feature scaling maxima; about 1.3x the default profile peaks.
    double e_load_max_kw = 1040.0;
    double h_load_max_kw = 1300.0;
    double pv_max_kw = 450.0;
    double wind_max_kw = 500.0;
};

inline void validate(const PlantConfig& c, std::string_view path = "plant") {
    const std::string base(path);
    validate(c.pv, base + ".pv");
    validate(c.wind, base + ".wind");
    validate(c.hp_low, base + ".heat_pump_low");
    validate(c.hp_high, base + ".heat_pump_high");
    validate(c.compressor, base + ".compressor");
    validate(c.water_tank, base + ".water_tank");
    validate(c.steam_accumulator, base + ".steam_accumulator");
    detail::require(std::isfinite(c.grid_cap_kw) && c.grid_cap_kw >= 0.0,
                    base + ".grid_cap_kw", "must be finite and >= 0");
    detail::require(c.horizon >= 1, base + ".horizon", "must be >= 1");
    for (auto [v, name] : {std::pair{c.e_load_max_kw, "e_load_max_kw"},
                           std::pair{c.h_load_max_kw, "h_load_max_kw"},
                           std::pair{c.pv_max_kw, "pv_max_kw"},
                           std::pair{c.wind_max_kw, "wind_max_kw"}}) {
        detail::require(std::isfinite(v) && v > 0.0, base + ".normalization." + name,
                        "must be finite and > 0");
    }
}

/// Cost factors k1..k3 and penalty factors l1..l5. l5 > 0 is the peak-shaving variant.
struct RewardWeights {
    double k1 = 0.1;
    double k2 = 0.055;
    double k3 = 0.1;
    double l1 = 1.1;
    double l2 = 1.0;
    double l3 = 1.2;
    double l4 = 1.0;
    double l5 = 1.5;

    bool peak_shaving() const { return l5 > 0.0; }

    friend bool operator==(const RewardWeights&, const RewardWeights&) = default;
};

inline void validate(const RewardWeights& w, std::string_view path = "reward") {
    const std::string base(path);
    for (auto [v, name] : {std::pair{w.k1, "k1"}, std::pair{w.k2, "k2"}, std::pair{w.k3, "k3"},
                           std::pair{w.l1, "l1"}, std::pair{w.l2, "l2"}, std::pair{w.l3, "l3"},
                           std::pair{w.l4, "l4"}, std::pair{w.l5, "l5"}}) {
        detail::require(std::isfinite(v) && v >= 0.0, base + "." + name,
                        "must be finite and >= 0");
    }
}

struct EnvState {
    std::size_t t = 0;
    double e_load_kw = 0.0;
    double h_load_kw = 0.0;
    double pv_kw = 0.0;
    double wind_kw = 0.0;
    double hsd_l_kwh = 0.0;
    double hsd_h_kwh = 0.0;

    friend bool operator==(const EnvState&, const EnvState&) = default;
};

struct Action {
    double p_hp_l_kw = 0.0;
    double p_hp_h_kw = 0.0;
    double p_cp_kw = 0.0;

    friend bool operator==(const Action&, const Action&) = default;
};

struct RewardBreakdown {
    double c1_step = 0.0;
    double c2_terminal = 0.0;
    double pen_e_ex = 0.0;
    double pen_e_loss = 0.0;
    double pen_h_ex = 0.0;
    double pen_h_loss = 0.0;
    double pen_delta_p = 0.0;
    double total = 0.0;

    /// The reward from its components, always summed in this order.
    double sum() const {
        return -c1_step - c2_terminal - pen_e_ex - pen_e_loss - pen_h_ex - pen_h_loss -
               pen_delta_p;
    }

    friend bool operator==(const RewardBreakdown&, const RewardBreakdown&) = default;
};

/// Physical quantities of one step, in kW (== kWh per step).
struct StepFlows {
    Action applied;                  // clamped to the device boxes
    double p_hp_h_effective_kw = 0;  // after derating for tank availability
    double q_l_in = 0;
    double q_l_out = 0;
    double q_h_in = 0;
    double q_h_out = 0;
    double compressor_heat = 0;
    double heat_delivered = 0;
    StorageStep tank;
    StorageStep accumulator;
    double e_excess_kw = 0;  // exported power
    double e_loss_kw = 0;    // purchase demand above the grid cap
    double h_excess_kw = 0;  // surplus delivery plus storage overflow
    double h_loss_kw = 0;    // unmet heat load
    double delta_p_kw = 0;
};

struct StepOutcome {
    EnvState next_state;
    double reward = 0.0;
    RewardBreakdown breakdown;
    double grid_kw = 0.0;  // positive = purchase
    bool done = false;
    StepFlows flows;
};

/// Exogenous state fields (loads and renewable output) at step `t`.
inline void fill_exogenous(EnvState& s, const Scenario& sc, const PlantConfig& c, std::size_t t) {
    const auto& d = sc.data;
    s.e_load_kw = d.electric_load_kw[t];
    s.h_load_kw = d.heat_load_kw[t];
    s.pv_kw = pv_output(c.pv, d.irradiance_w_m2[t]);
    s.wind_kw = wind_output(c.wind, d.wind_speed_ms[t]);
}

inline Action clamp_to_boxes(const Action& a, const PlantConfig& c) {
    const auto box = [](double v, double lo, double hi) {
        return std::isnan(v) ? lo : std::clamp(v, lo, hi);
    };
    return {box(a.p_hp_l_kw, c.hp_low.p_min_kw, c.hp_low.p_max_kw),
            box(a.p_hp_h_kw, c.hp_high.p_min_kw, c.hp_high.p_max_kw),
            box(a.p_cp_kw, c.compressor.p_min_kw, c.compressor.p_max_kw)};
}

/// Maps an action in [-1, 1]^3 affinely onto the device boxes.
inline Action to_box(const NormalizedAction& a, const PlantConfig& c) {
    const auto map = [](double x, double lo, double hi) { return lo + (x + 1.0) * 0.5 * (hi - lo); };
    return {map(a[0], c.hp_low.p_min_kw, c.hp_low.p_max_kw),
            map(a[1], c.hp_high.p_min_kw, c.hp_high.p_max_kw),
            map(a[2], c.compressor.p_min_kw, c.compressor.p_max_kw)};
}

inline NormalizedAction from_box(const Action& a, const PlantConfig& c) {
    const auto unmap = [](double v, double lo, double hi) {
        return hi > lo ? 2.0 * (v - lo) / (hi - lo) - 1.0 : 0.0;
    };
    return {unmap(a.p_hp_l_kw, c.hp_low.p_min_kw, c.hp_low.p_max_kw),
            unmap(a.p_hp_h_kw, c.hp_high.p_min_kw, c.hp_high.p_max_kw),
            unmap(a.p_cp_kw, c.compressor.p_min_kw, c.compressor.p_max_kw)};
}

/// One dispatch step. Pure: the previous grid exchange is passed explicitly
/// (nullopt at t = 0, where the fluctuation term is zero).
inline StepOutcome apply_action(const EnvState& state, const Action& raw_action,
                                const Scenario& scenario, const PlantConfig& c,
                                const RewardWeights& w, std::optional<double> previous_grid_kw) {
    const std::size_t horizon = c.horizon;
    if (state.t >= horizon) {
        throw ContractViolation("apply_action: episode already finished");
    }
    StepOutcome out;
    StepFlows& f = out.flows;

    f.applied = clamp_to_boxes(raw_action, c);
    const double p_l = f.applied.p_hp_l_kw;
    const double p_h = f.applied.p_hp_h_kw;
    const double p_cp = f.applied.p_cp_kw;

    // Water tank side.
    f.q_l_in = heat_pump_heat(c.hp_low, p_l);
    const double lift = c.hp_high.cop - 1.0;
    const double q_l_out_req = lift * p_h;
    const double tank_available = std::max(0.0, state.hsd_l_kwh + f.q_l_in - c.water_tank.hsd_min_kwh);
    if (q_l_out_req > tank_available) {
        f.p_hp_h_effective_kw = p_h * (tank_available / q_l_out_req);
        f.q_l_out = tank_available;
    } else {
        f.p_hp_h_effective_kw = p_h;
        f.q_l_out = q_l_out_req;
    }
    f.q_h_in = c.hp_high.cop * f.p_hp_h_effective_kw;

    // Accumulator and compressor serve the heat load.
    f.compressor_heat = compressor_added_heat(c.compressor, p_cp);
    const double steam_demand = std::max(0.0, state.h_load_kw - f.compressor_heat);
    const double acc_available =
        std::max(0.0, state.hsd_h_kwh + f.q_h_in - c.steam_accumulator.hsd_min_kwh);
    f.q_h_out = std::min(steam_demand, acc_available);
    f.heat_delivered = f.compressor_heat + f.q_h_out;
    const double heat_short = std::max(0.0, state.h_load_kw - f.heat_delivered);
    const double heat_surplus = std::max(0.0, f.heat_delivered - state.h_load_kw);

    f.tank = storage_step(c.water_tank, state.hsd_l_kwh, f.q_l_in, f.q_l_out);
    f.accumulator = storage_step(c.steam_accumulator, state.hsd_h_kwh, f.q_h_in, f.q_h_out);
    f.h_excess_kw = heat_surplus + f.tank.overflow_kwh + f.accumulator.overflow_kwh;
    f.h_loss_kw = heat_short + f.tank.shortfall_kwh + f.accumulator.shortfall_kwh;

    // Grid closes the electrical balance.
    const double demand = p_l + f.p_hp_h_effective_kw + p_cp + state.e_load_kw;
    const double raw_grid = demand - state.pv_kw - state.wind_kw;
    f.e_loss_kw = std::max(0.0, raw_grid - c.grid_cap_kw);
    const double grid = raw_grid - f.e_loss_kw;
    f.e_excess_kw = std::max(0.0, -grid);
    f.delta_p_kw = previous_grid_kw ? std::abs(grid - *previous_grid_kw) : 0.0;

    const auto& d = scenario.data;
    const double price = grid >= 0.0 ? d.buy_price_per_kwh[state.t] : d.sell_price_per_kwh[state.t];

    RewardBreakdown& r = out.breakdown;
    r.c1_step = w.k1 * grid * price;
    r.pen_e_ex = w.l1 * f.e_excess_kw;
    r.pen_e_loss = w.l2 * f.e_loss_kw;
    r.pen_h_ex = w.l3 * f.h_excess_kw;
    r.pen_h_loss = w.l4 * f.h_loss_kw;
    r.pen_delta_p = w.l5 * f.delta_p_kw;

    const std::size_t t_next = state.t + 1;
    out.done = t_next == horizon;
    if (out.done) {
        r.c2_terminal = w.k2 * std::abs(f.tank.hsd_next_kwh - c.water_tank.hsd_init_kwh) +
                        w.k3 * std::abs(f.accumulator.hsd_next_kwh - c.steam_accumulator.hsd_init_kwh);
    }
    r.total = r.sum();
    out.reward = r.total;
    out.grid_kw = grid;

    EnvState& n = out.next_state;
    n.t = t_next;
    // The terminal state repeats the last step's exogenous values.
    fill_exogenous(n, scenario, c, out.done ? horizon - 1 : t_next);
    n.hsd_l_kwh = f.tank.hsd_next_kwh;
    n.hsd_h_kwh = f.accumulator.hsd_next_kwh;
    return out;
}

/// Features in [0, 1] (loads may exceed 1 under heavy perturbation).
inline StateFeatures normalize_state(const EnvState& s, const PlantConfig& c) {
    const auto span01 = [](double v, const StorageParams& p) {
        const double width = p.hsd_max_kwh - p.hsd_min_kwh;
        return width > 0.0 ? (v - p.hsd_min_kwh) / width : 0.0;
    };
    return {static_cast<double>(s.t) / static_cast<double>(c.horizon),
            s.e_load_kw / c.e_load_max_kw,
            s.h_load_kw / c.h_load_max_kw,
            s.pv_kw / c.pv_max_kw,
            s.wind_kw / c.wind_max_kw,
            span01(s.hsd_l_kwh, c.water_tank),
            span01(s.hsd_h_kwh, c.steam_accumulator)};
}

/// Single-caller episode cursor over `apply_action`.
class Environment {
public:
    Environment(PlantConfig config, RewardWeights weights)
        : config_(std::move(config)), weights_(weights) {}

    const EnvState& reset(const Scenario& scenario) {
        if (scenario.horizon() != config_.horizon) {
            throw InputMismatch("reset: scenario horizon " + std::to_string(scenario.horizon()) +
                                " != configured horizon " + std::to_string(config_.horizon));
        }
        scenario_ = scenario;
        state_ = EnvState{};
        fill_exogenous(state_, scenario_, config_, 0);
        state_.hsd_l_kwh = config_.water_tank.hsd_init_kwh;
        state_.hsd_h_kwh = config_.steam_accumulator.hsd_init_kwh;
        previous_grid_.reset();
        started_ = true;
        return state_;
    }

    StepOutcome step(const Action& raw_action) {
        if (!started_ || done()) {
            throw ContractViolation("Environment::step called before reset or after done");
        }
        StepOutcome out = apply_action(state_, raw_action, scenario_, config_, weights_, previous_grid_);
        previous_grid_ = out.grid_kw;
        state_ = out.next_state;
        return out;
    }

    const EnvState& state() const { return state_; }
    bool done() const { return state_.t >= config_.horizon; }
    const PlantConfig& config() const { return config_; }
    const RewardWeights& weights() const { return weights_; }
    const Scenario& scenario() const { return scenario_; }
    std::optional<double> previous_grid_kw() const { return previous_grid_; }

private:
    PlantConfig config_;
    RewardWeights weights_;
    Scenario scenario_;
    EnvState state_;
    std::optional<double> previous_grid_;
    bool started_ = false;
};

struct StepRecord {
    EnvState state;
    NormalizedAction normalized_action{};
    Action raw_action;
    StepOutcome outcome;
};

using Trajectory = std::vector<StepRecord>;

struct EpisodeCost {
    double c_s = 0.0;
    double delta_p_total = 0.0;
    double hsd_l_T = 0.0;
    double hsd_h_T = 0.0;
    double dev_l = 0.0;  // |HSD_L_T - HSD_L_0|
    double dev_h = 0.0;
    double cum_reward = 0.0;
};

/// Cycle metrics: C_s = sum of grid costs + terminal storage cost (no penalty
/// weights), and the summed absolute step-to-step change of grid exchange.
inline EpisodeCost episode_cost(const Trajectory& traj, std::size_t horizon) {
    if (traj.size() != horizon || horizon == 0 || !traj.back().outcome.done) {
        throw InputMismatch("episode_cost: trajectory has " + std::to_string(traj.size()) +
                            " steps, expected a complete " + std::to_string(horizon) + "-step episode");
    }
    EpisodeCost e;
    for (std::size_t t = 0; t < traj.size(); ++t) {
        const auto& o = traj[t].outcome;
        e.c_s += o.breakdown.c1_step;
        e.cum_reward += o.reward;
        if (t > 0) {
            e.delta_p_total += std::abs(o.grid_kw - traj[t - 1].outcome.grid_kw);
        }
    }
    e.c_s += traj.back().outcome.breakdown.c2_terminal;
    const auto& first = traj.front().state;
    const auto& last = traj.back().outcome.next_state;
    e.hsd_l_T = last.hsd_l_kwh;
    e.hsd_h_T = last.hsd_h_kwh;
    e.dev_l = std::abs(e.hsd_l_T - first.hsd_l_kwh);
    e.dev_h = std::abs(e.hsd_h_T - first.hsd_h_kwh);
    return e;
}

inline void write_trajectory_csv(std::ostream& os, const Trajectory& traj) {
    os << "step,e_load_kw,h_load_kw,pv_kw,wind_kw,p_hp_l_kw,p_hp_h_kw,p_cp_kw,p_hp_h_eff_kw,"
          "grid_kw,hsd_l_kwh,hsd_h_kwh,reward,c1_step,c2_terminal,pen_e_ex,pen_e_loss,"
          "pen_h_ex,pen_h_loss,pen_delta_p\n";
    for (const auto& rec : traj) {
        const auto& o = rec.outcome;
        const auto& b = o.breakdown;
        csv::Row row(os);
        row << rec.state.t << rec.state.e_load_kw << rec.state.h_load_kw << rec.state.pv_kw
            << rec.state.wind_kw << o.flows.applied.p_hp_l_kw << o.flows.applied.p_hp_h_kw
            << o.flows.applied.p_cp_kw << o.flows.p_hp_h_effective_kw << o.grid_kw
            << o.next_state.hsd_l_kwh << o.next_state.hsd_h_kwh << o.reward << b.c1_step
            << b.c2_terminal << b.pen_e_ex << b.pen_e_loss << b.pen_h_ex << b.pen_h_loss
            << b.pen_delta_p;
    }
}

}  // namespace thermogrid

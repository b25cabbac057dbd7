#pragma once

// SystemConfig and its JSON representation. Every object is read strictly:
// unknown keys are errors, missing keys keep their built-in defaults, and
// every diagnostic names the offending field path.

#include <filesystem>
#include <fstream>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "thermogrid/environment.hpp"
#include "thermogrid/scenario.hpp"
#include "thermogrid/td3.hpp"

namespace thermogrid {

inline constexpr int kConfigSchemaVersion = 1;

struct TrainingConfig {
    std::size_t checkpoint_every = 25;
    // Disturbance band sampled for every training episode.
    double tier_lo = 0.0;
    double tier_hi = 0.30;

    friend bool operator==(const TrainingConfig&, const TrainingConfig&) = default;
};

struct SystemConfig {
    PlantConfig plant;
    RewardWeights reward;
    Td3Config td3;
    TrainingConfig training;
    double sell_price_ratio = 0.8;
    // Sell prices are derived from buy prices and sell_price_ratio.
    TypicalDayProfile profile = default_profile(0.8);

    static SystemConfig defaults() { return SystemConfig{}; }

    UncertaintyTier training_tier() const {
        return UncertaintyTier(training.tier_lo, training.tier_hi);
    }
};

inline void validate(const SystemConfig& c) {
    validate(c.plant, "plant");
    validate(c.reward, "reward");
    validate(c.td3, "td3");
    validate(c.profile, "profile");
    detail::require(std::isfinite(c.sell_price_ratio) && c.sell_price_ratio >= 0.0 &&
                        c.sell_price_ratio <= 1.0,
                    "sell_price_ratio", "must be in [0, 1]");
    detail::require(c.profile.horizon() == c.plant.horizon, "profile",
                    "length " + std::to_string(c.profile.horizon()) +
                        " does not match plant.horizon " + std::to_string(c.plant.horizon));
    detail::require(c.training.checkpoint_every >= 1, "training.checkpoint_every", "must be >= 1");
    try {
        (void)c.training_tier();
    } catch (const ConfigError& e) {
        throw ConfigError(std::string("training.tier_lo/tier_hi: ") + e.what());
    }
}

namespace detail {

using nlohmann::json;

class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(display() + ": expected an object");
    }

    void number(const char* key, double& out) {
        if (const json* v = take(key)) {
            if (!v->is_number()) throw ConfigError(field(key) + ": expected a number");
            out = v->get<double>();
        }
    }

    void count(const char* key, std::size_t& out) {
        if (const json* v = take(key)) {
            if (!v->is_number_integer() || v->get<long long>() < 0)
                throw ConfigError(field(key) + ": expected a non-negative integer");
            out = v->get<std::size_t>();
        }
    }

    void numbers(const char* key, std::vector<double>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of numbers");
            std::vector<double> tmp;
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number())
                    throw ConfigError(field(key) + "[" + std::to_string(i) + "]: expected a number");
                tmp.push_back((*v)[i].get<double>());
            }
            out = std::move(tmp);
        }
    }

    void counts(const char* key, std::vector<std::size_t>& out) {
        if (const json* v = take(key)) {
            if (!v->is_array()) throw ConfigError(field(key) + ": expected an array of integers");
            std::vector<std::size_t> tmp;
            for (std::size_t i = 0; i < v->size(); ++i) {
                if (!(*v)[i].is_number_integer() || (*v)[i].get<long long>() < 0)
                    throw ConfigError(field(key) + "[" + std::to_string(i) +
                                      "]: expected a non-negative integer");
                tmp.push_back((*v)[i].get<std::size_t>());
            }
            out = std::move(tmp);
        }
    }

    template <typename Fn>
    void object(const char* key, Fn&& fn) {
        if (const json* v = take(key)) {
            ObjectReader child(*v, field(key));
            fn(child);
            child.finish();
        }
    }

    const json* take(const char* key) {
        seen_.insert(key);
        auto it = j_.find(key);
        return it == j_.end() ? nullptr : &*it;
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.count(it.key())) throw ConfigError(field(it.key()) + ": unknown key");
        }
    }

    std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

private:
    std::string display() const { return path_.empty() ? "<root>" : path_; }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

inline void read_heat_pump(ObjectReader& r, HeatPumpParams& p) {
    r.number("cop", p.cop);
    r.number("p_min_kw", p.p_min_kw);
    r.number("p_max_kw", p.p_max_kw);
}

inline void read_storage(ObjectReader& r, StorageParams& p) {
    r.number("hsd_min_kwh", p.hsd_min_kwh);
    r.number("hsd_max_kwh", p.hsd_max_kwh);
    r.number("hsd_init_kwh", p.hsd_init_kwh);
}

}  // namespace detail

inline SystemConfig config_from_json(const nlohmann::json& j) {
    using detail::ObjectReader;
    SystemConfig c;
    ObjectReader root(j, "");
    const nlohmann::json* version = root.take("schema_version");
    if (!version) throw ConfigError("schema_version: missing");
    if (!version->is_number_integer() || version->get<int>() != kConfigSchemaVersion) {
        throw ConfigError("schema_version: unsupported (expected " +
                          std::to_string(kConfigSchemaVersion) + ")");
    }
    root.object("plant", [&](ObjectReader& p) {
        p.object("pv", [&](ObjectReader& r) {
            r.number("eta_pv", c.plant.pv.eta_pv);
            r.number("eta_inv", c.plant.pv.eta_inv);
            r.number("area_m2", c.plant.pv.area_m2);
        });
        p.object("wind", [&](ObjectReader& r) {
            r.number("v_in", c.plant.wind.v_in);
            r.number("v_r", c.plant.wind.v_r);
            r.number("v_out", c.plant.wind.v_out);
            r.number("cap_kw", c.plant.wind.cap_kw);
        });
        p.object("heat_pump_low", [&](ObjectReader& r) { detail::read_heat_pump(r, c.plant.hp_low); });
        p.object("heat_pump_high", [&](ObjectReader& r) { detail::read_heat_pump(r, c.plant.hp_high); });
        p.object("compressor", [&](ObjectReader& r) {
            r.number("eta_cp", c.plant.compressor.eta_cp);
            r.number("p_min_kw", c.plant.compressor.p_min_kw);
            r.number("p_max_kw", c.plant.compressor.p_max_kw);
        });
        p.object("water_tank", [&](ObjectReader& r) { detail::read_storage(r, c.plant.water_tank); });
        p.object("steam_accumulator",
                 [&](ObjectReader& r) { detail::read_storage(r, c.plant.steam_accumulator); });
        p.number("grid_cap_kw", c.plant.grid_cap_kw);
        p.count("horizon", c.plant.horizon);
        p.object("normalization", [&](ObjectReader& r) {
            r.number("e_load_max_kw", c.plant.e_load_max_kw);
            r.number("h_load_max_kw", c.plant.h_load_max_kw);
            r.number("pv_max_kw", c.plant.pv_max_kw);
            r.number("wind_max_kw", c.plant.wind_max_kw);
        });
    });
    root.object("reward", [&](ObjectReader& r) {
        r.number("k1", c.reward.k1);
        r.number("k2", c.reward.k2);
        r.number("k3", c.reward.k3);
        r.number("l1", c.reward.l1);
        r.number("l2", c.reward.l2);
        r.number("l3", c.reward.l3);
        r.number("l4", c.reward.l4);
        r.number("l5", c.reward.l5);
    });
    root.object("td3", [&](ObjectReader& r) {
        auto& t = c.td3;
        r.number("actor_lr", t.actor_lr);
        r.number("critic_lr", t.critic_lr);
        r.number("gamma", t.gamma);
        r.number("tau", t.tau);
        r.count("policy_delay", t.policy_delay);
        r.count("buffer_capacity", t.buffer_capacity);
        r.count("batch_size", t.batch_size);
        r.count("episodes", t.episodes);
        r.number("ou_mu", t.ou_mu);
        r.number("ou_theta", t.ou_theta);
        r.number("ou_sigma_start", t.ou_sigma_start);
        r.number("ou_sigma_end", t.ou_sigma_end);
        r.number("smoothing_sigma", t.smoothing_sigma);
        r.number("smoothing_clip", t.smoothing_clip);
        r.count("warmup_steps", t.warmup_steps);
        r.counts("hidden_layers", t.hidden_layers);
        r.number("actor_final_scale", t.actor_final_scale);
        r.number("reward_scale", t.reward_scale);
    });
    root.object("training", [&](ObjectReader& r) {
        r.count("checkpoint_every", c.training.checkpoint_every);
        r.number("tier_lo", c.training.tier_lo);
        r.number("tier_hi", c.training.tier_hi);
    });
    root.number("sell_price_ratio", c.sell_price_ratio);
    root.object("profile", [&](ObjectReader& r) {
        r.numbers("electric_load_kw", c.profile.electric_load_kw);
        r.numbers("heat_load_kw", c.profile.heat_load_kw);
        r.numbers("irradiance_w_m2", c.profile.irradiance_w_m2);
        r.numbers("wind_speed_ms", c.profile.wind_speed_ms);
        r.numbers("buy_price_per_kwh", c.profile.buy_price_per_kwh);
    });
    root.finish();

    c.profile.sell_price_per_kwh.resize(c.profile.buy_price_per_kwh.size());
    for (std::size_t i = 0; i < c.profile.buy_price_per_kwh.size(); ++i) {
        c.profile.sell_price_per_kwh[i] = c.sell_price_ratio * c.profile.buy_price_per_kwh[i];
    }
    validate(c);
    return c;
}

inline nlohmann::ordered_json config_to_json(const SystemConfig& c) {
    nlohmann::ordered_json j;
    const auto hp = [](const HeatPumpParams& p) {
        return nlohmann::ordered_json{{"cop", p.cop}, {"p_min_kw", p.p_min_kw}, {"p_max_kw", p.p_max_kw}};
    };
    const auto st = [](const StorageParams& p) {
        return nlohmann::ordered_json{
            {"hsd_min_kwh", p.hsd_min_kwh}, {"hsd_max_kwh", p.hsd_max_kwh}, {"hsd_init_kwh", p.hsd_init_kwh}};
    };
    j["schema_version"] = kConfigSchemaVersion;
    auto& p = j["plant"];
    p["pv"] = {{"eta_pv", c.plant.pv.eta_pv}, {"eta_inv", c.plant.pv.eta_inv}, {"area_m2", c.plant.pv.area_m2}};
    p["wind"] = {{"v_in", c.plant.wind.v_in},
                 {"v_r", c.plant.wind.v_r},
                 {"v_out", c.plant.wind.v_out},
                 {"cap_kw", c.plant.wind.cap_kw}};
    p["heat_pump_low"] = hp(c.plant.hp_low);
    p["heat_pump_high"] = hp(c.plant.hp_high);
    p["compressor"] = {{"eta_cp", c.plant.compressor.eta_cp},
                       {"p_min_kw", c.plant.compressor.p_min_kw},
                       {"p_max_kw", c.plant.compressor.p_max_kw}};
    p["water_tank"] = st(c.plant.water_tank);
    p["steam_accumulator"] = st(c.plant.steam_accumulator);
    p["grid_cap_kw"] = c.plant.grid_cap_kw;
    p["horizon"] = c.plant.horizon;
    p["normalization"] = {{"e_load_max_kw", c.plant.e_load_max_kw},
                          {"h_load_max_kw", c.plant.h_load_max_kw},
                          {"pv_max_kw", c.plant.pv_max_kw},
                          {"wind_max_kw", c.plant.wind_max_kw}};
    const auto& w = c.reward;
    j["reward"] = {{"k1", w.k1}, {"k2", w.k2}, {"k3", w.k3}, {"l1", w.l1},
                   {"l2", w.l2}, {"l3", w.l3}, {"l4", w.l4}, {"l5", w.l5}};
    const auto& t = c.td3;
    j["td3"] = {{"actor_lr", t.actor_lr},
                {"critic_lr", t.critic_lr},
                {"gamma", t.gamma},
                {"tau", t.tau},
                {"policy_delay", t.policy_delay},
                {"buffer_capacity", t.buffer_capacity},
                {"batch_size", t.batch_size},
                {"episodes", t.episodes},
                {"ou_mu", t.ou_mu},
                {"ou_theta", t.ou_theta},
                {"ou_sigma_start", t.ou_sigma_start},
                {"ou_sigma_end", t.ou_sigma_end},
                {"smoothing_sigma", t.smoothing_sigma},
                {"smoothing_clip", t.smoothing_clip},
                {"warmup_steps", t.warmup_steps},
                {"hidden_layers", t.hidden_layers},
                {"actor_final_scale", t.actor_final_scale},
                {"reward_scale", t.reward_scale}};
    j["training"] = {{"checkpoint_every", c.training.checkpoint_every},
                     {"tier_lo", c.training.tier_lo},
                     {"tier_hi", c.training.tier_hi}};
    j["sell_price_ratio"] = c.sell_price_ratio;
    j["profile"] = {{"electric_load_kw", c.profile.electric_load_kw},
                    {"heat_load_kw", c.profile.heat_load_kw},
                    {"irradiance_w_m2", c.profile.irradiance_w_m2},
                    {"wind_speed_ms", c.profile.wind_speed_ms},
                    {"buy_price_per_kwh", c.profile.buy_price_per_kwh}};
    return j;
}

inline SystemConfig load_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError(path.string() + ": cannot open config file");
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(in);
    } catch (const nlohmann::json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return config_from_json(j);
}

}  // namespace thermogrid

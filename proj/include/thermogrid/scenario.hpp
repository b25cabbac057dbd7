#pragma once

// Typical-day profiles, time-of-use tariff, and seeded perturbation of the
// four physical series (loads, irradiance, wind speed) into uncertainty scenarios.

#include <cmath>
#include <cstdint>
#include <ostream>
#include <random>
#include <string>
#include <string_view>
#include <vector>

#include "thermogrid/csv.hpp"
#include "thermogrid/errors.hpp"

namespace thermogrid {

struct TypicalDayProfile {
    std::vector<double> electric_load_kw;
    std::vector<double> heat_load_kw;
    std::vector<double> irradiance_w_m2;
    std::vector<double> wind_speed_ms;
    std::vector<double> buy_price_per_kwh;
    std::vector<double> sell_price_per_kwh;

    std::size_t horizon() const { return electric_load_kw.size(); }

    friend bool operator==(const TypicalDayProfile&, const TypicalDayProfile&) = default;
};

inline void validate(const TypicalDayProfile& p, std::string_view path = "profile") {
    const std::string base(path);
    const std::size_t n = p.horizon();
    if (n == 0) {
        throw ConfigError(base + ".electric_load_kw: horizon must be >= 1");
    }
    const auto check = [&](const std::vector<double>& v, const char* name) {
        if (v.size() != n) {
            throw ConfigError(base + "." + name + ": length " + std::to_string(v.size()) +
                              " does not match horizon " + std::to_string(n));
        }
        for (std::size_t i = 0; i < n; ++i) {
            if (!std::isfinite(v[i]) || v[i] < 0.0) {
                throw ConfigError(base + "." + name + "[" + std::to_string(i) +
                                  "]: must be finite and >= 0");
            }
        }
    };
    check(p.electric_load_kw, "electric_load_kw");
    check(p.heat_load_kw, "heat_load_kw");
    check(p.irradiance_w_m2, "irradiance_w_m2");
    check(p.wind_speed_ms, "wind_speed_ms");
    check(p.buy_price_per_kwh, "buy_price_per_kwh");
    check(p.sell_price_per_kwh, "sell_price_per_kwh");
    for (std::size_t i = 0; i < n; ++i) {
        if (p.sell_price_per_kwh[i] > p.buy_price_per_kwh[i]) {
            throw ConfigError(base + ".sell_price_per_kwh[" + std::to_string(i) +
                              "]: exceeds buy price");
        }
    }
}

/// Band of relative disturbance amplitudes, 0 <= lo < hi <= 0.30.
class UncertaintyTier {
public:
    static constexpr double kMaxAmplitude = 0.30;

    UncertaintyTier(double lo, double hi) : lo_(lo), hi_(hi) {
        if (!(lo >= 0.0 && lo < hi && hi <= kMaxAmplitude)) {
            throw ConfigError("tier: require 0 <= lo < hi <= 0.30, got [" + std::to_string(lo) +
                              ", " + std::to_string(hi) + "]");
        }
    }

    double lo() const { return lo_; }
    double hi() const { return hi_; }

    /// "0-10%" style label used in reports.
    std::string label() const {
        return std::to_string(static_cast<int>(std::lround(lo_ * 100))) + "-" +
               std::to_string(static_cast<int>(std::lround(hi_ * 100))) + "%";
    }

    friend bool operator==(const UncertaintyTier&, const UncertaintyTier&) = default;

private:
    double lo_;
    double hi_;
};

/// The evaluation tiers 0-10%, 10-20%, 20-30%.
inline std::vector<UncertaintyTier> standard_tiers() {
    return {UncertaintyTier(0.0, 0.10), UncertaintyTier(0.10, 0.20),
            UncertaintyTier(0.20, 0.30)};
}

struct Scenario {
    TypicalDayProfile data;
    std::uint64_t seed = 0;
    UncertaintyTier tier{0.0, UncertaintyTier::kMaxAmplitude};

    std::size_t horizon() const { return data.horizon(); }

    friend bool operator==(const Scenario&, const Scenario&) = default;
};

/// Builds buy/sell arrays for the three-tier tariff. Valley 00-07, flat 07-10 and
/// 15-18, peak 10-15 and 18-21, flat 21-24. Hour h covers [h, h+1).
inline std::vector<double> three_tier_tariff(double valley, double flat, double peak) {
    std::vector<double> price(24, flat);
    for (int h = 0; h < 7; ++h) price[h] = valley;
    for (int h = 10; h < 15; ++h) price[h] = peak;
    for (int h = 18; h < 21; ++h) price[h] = peak;
    return price;
}

/// Synthetic 24-hour typical day. Peak electric load 800 kW (morning and evening),
/// peak heat load 1000 kW (overnight into early morning), irradiance a half-sine
/// between 06:00 and 18:00, wind strongest at night.
inline TypicalDayProfile default_profile(double sell_ratio = 0.8) {
    TypicalDayProfile p;
    p.electric_load_kw = {420, 400, 390, 385, 390, 430, 520, 640, 740, 800, 780, 720,
                          680, 660, 670, 700, 740, 790, 800, 770, 690, 600, 520, 460};
    p.heat_load_kw = {880, 900, 920, 940, 960, 1000, 980, 920, 820, 700, 600, 520,
                      480, 460, 470, 500, 560, 640, 720, 780, 820, 850, 860, 870};
    p.irradiance_w_m2.assign(24, 0.0);
    for (int h = 7; h < 18; ++h) {
        p.irradiance_w_m2[h] = 1000.0 * std::sin(std::acos(-1.0) * (h - 6) / 12.0);
    }
    p.wind_speed_ms = {11.5, 12.0, 12.5, 12.5, 12.0, 11.5, 10.5, 9.0, 8.0, 7.0, 6.5, 6.0,
                       6.0,  6.0,  6.5,  7.0,  8.0,  9.0,  10.0, 10.5, 11.0, 11.0, 11.5, 11.5};
    p.buy_price_per_kwh = three_tier_tariff(0.35, 0.70, 1.10);
    p.sell_price_per_kwh.resize(24);
    for (int h = 0; h < 24; ++h) {
        p.sell_price_per_kwh[h] = sell_ratio * p.buy_price_per_kwh[h];
    }
    return p;
}

/// Per-step, per-series multiplicative disturbance base * (1 + s * a) with
/// a ~ U[lo, hi] and s = +-1. Tariffs are copied. Pure in (profile, tier, seed).
inline Scenario perturb(const TypicalDayProfile& profile, const UncertaintyTier& tier,
                        std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> amplitude(tier.lo(), tier.hi());
    std::bernoulli_distribution positive(0.5);

    Scenario s;
    s.data = profile;
    s.seed = seed;
    s.tier = tier;
    for (auto* series : {&s.data.electric_load_kw, &s.data.heat_load_kw, &s.data.irradiance_w_m2,
                         &s.data.wind_speed_ms}) {
        for (double& v : *series) {
            const double a = amplitude(rng);
            const double sign = positive(rng) ? 1.0 : -1.0;
            v = v * (1.0 + sign * a);
        }
    }
    return s;
}

/// `n` scenarios with seeds base_seed .. base_seed + n - 1.
inline std::vector<Scenario> scenario_batch(const TypicalDayProfile& profile,
                                            const UncertaintyTier& tier, std::size_t n,
                                            std::uint64_t base_seed) {
    if (n == 0) {
        throw ContractViolation("scenario_batch: n must be >= 1");
    }
    std::vector<Scenario> out;
    out.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        out.push_back(perturb(profile, tier, base_seed + i));
    }
    return out;
}

/// An unperturbed scenario, for reference trajectories on the base day.
inline Scenario base_scenario(const TypicalDayProfile& profile) {
    Scenario s;
    s.data = profile;
    return s;
}

inline void write_scenario_csv(std::ostream& os, const Scenario& s) {
    os << "step,e_load_kw,h_load_kw,irradiance_w_m2,wind_ms,buy_price,sell_price\n";
    const auto& d = s.data;
    for (std::size_t t = 0; t < s.horizon(); ++t) {
        csv::Row row(os);
        row << t << d.electric_load_kw[t] << d.heat_load_kw[t] << d.irradiance_w_m2[t]
            << d.wind_speed_ms[t] << d.buy_price_per_kwh[t] << d.sell_price_per_kwh[t];
    }
}

}  // namespace thermogrid

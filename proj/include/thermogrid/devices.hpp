#pragma once

// Steady-state device equations for the electricity-heat plant.
// Powers are in kW, energies in kWh, and one step is one hour, so a power
// held for a step and the energy it moves are the same number.

#include <algorithm>
#include <cmath>
#include <string>
#include <string_view>

#include "thermogrid/errors.hpp"

namespace thermogrid {

struct PvParams {
    double eta_pv = 0.18;
    double eta_inv = 0.95;
    double area_m2 = 2000.0;
};

struct WindParams {
    double v_in = 3.0;
    double v_r = 12.0;
    double v_out = 25.0;
    double cap_kw = 500.0;
};

struct HeatPumpParams {
    double cop = 3.0;
    double p_min_kw = 0.0;
    double p_max_kw = 600.0;
};

struct CompressorParams {
    double eta_cp = 0.9;
    double p_min_kw = 0.0;
    double p_max_kw = 300.0;
};

struct StorageParams {
    double hsd_min_kwh = 0.0;
    double hsd_max_kwh = 4000.0;
    double hsd_init_kwh = 2000.0;
};

struct StorageStep {
    double hsd_next_kwh = 0.0;
    double overflow_kwh = 0.0;
    double shortfall_kwh = 0.0;
};

namespace detail {

inline void require(bool ok, std::string_view path, std::string_view what) {
    if (!ok) {
        throw ConfigError(std::string(path) + ": " + std::string(what));
    }
}

inline bool finite(double v) { return std::isfinite(v); }

}  // namespace detail

inline void validate(const PvParams& p, std::string_view path = "pv") {
    using detail::require;
    require(detail::finite(p.eta_pv) && p.eta_pv > 0.0 && p.eta_pv <= 1.0,
            std::string(path) + ".eta_pv", "must be in (0, 1]");
    require(detail::finite(p.eta_inv) && p.eta_inv > 0.0 && p.eta_inv <= 1.0,
            std::string(path) + ".eta_inv", "must be in (0, 1]");
    require(detail::finite(p.area_m2) && p.area_m2 >= 0.0, std::string(path) + ".area_m2",
            "must be finite and >= 0");
}

inline void validate(const WindParams& p, std::string_view path = "wind") {
    using detail::require;
    const std::string base(path);
    require(detail::finite(p.v_in) && detail::finite(p.v_r) && detail::finite(p.v_out) &&
                detail::finite(p.cap_kw),
            base, "all fields must be finite");
    require(p.v_in >= 0.0, base + ".v_in", "must be >= 0");
    require(p.v_in < p.v_r, base + ".v_r", "must exceed v_in");
    require(p.v_r <= p.v_out, base + ".v_out", "must be >= v_r");
    require(p.cap_kw >= 0.0, base + ".cap_kw", "must be >= 0");
}

inline void validate(const HeatPumpParams& p, std::string_view path = "heat_pump") {
    using detail::require;
    const std::string base(path);
    require(detail::finite(p.cop) && p.cop >= 1.0, base + ".cop", "must be finite and >= 1");
    require(detail::finite(p.p_min_kw) && p.p_min_kw >= 0.0, base + ".p_min_kw", "must be >= 0");
    require(detail::finite(p.p_max_kw) && p.p_max_kw >= p.p_min_kw, base + ".p_max_kw",
            "must be >= p_min_kw");
}

inline void validate(const CompressorParams& p, std::string_view path = "compressor") {
    using detail::require;
    const std::string base(path);
    require(detail::finite(p.eta_cp) && p.eta_cp > 0.0, base + ".eta_cp", "must be finite and > 0");
    require(detail::finite(p.p_min_kw) && p.p_min_kw >= 0.0, base + ".p_min_kw", "must be >= 0");
    require(detail::finite(p.p_max_kw) && p.p_max_kw >= p.p_min_kw, base + ".p_max_kw",
            "must be >= p_min_kw");
}

inline void validate(const StorageParams& p, std::string_view path = "storage") {
    using detail::require;
    const std::string base(path);
    require(detail::finite(p.hsd_min_kwh) && detail::finite(p.hsd_max_kwh) &&
                detail::finite(p.hsd_init_kwh),
            base, "all fields must be finite");
    require(p.hsd_min_kwh <= p.hsd_max_kwh, base + ".hsd_max_kwh", "must be >= hsd_min_kwh");
    require(p.hsd_init_kwh >= p.hsd_min_kwh && p.hsd_init_kwh <= p.hsd_max_kwh,
            base + ".hsd_init_kwh", "must lie within [hsd_min_kwh, hsd_max_kwh]");
}

/// PV array output in kW for a plane-of-array irradiance in W/m^2.
inline double pv_output(const PvParams& p, double irradiance_w_m2) {
    if (!std::isfinite(irradiance_w_m2) || irradiance_w_m2 < 0.0) {
        throw InputDomainError("pv_output: irradiance must be finite and >= 0");
    }
    return p.eta_pv * p.eta_inv * p.area_m2 * irradiance_w_m2 / 1000.0;
}

/// Piecewise-linear turbine curve. Speeds at exactly v_r take the rated branch.
inline double wind_output(const WindParams& p, double v_ms) {
    if (!std::isfinite(v_ms) || v_ms < 0.0) {
        throw InputDomainError("wind_output: wind speed must be finite and >= 0");
    }
    if (v_ms < p.v_in || v_ms > p.v_out) {
        return 0.0;
    }
    if (v_ms < p.v_r) {
        return (v_ms - p.v_in) / (p.v_r - p.v_in) * p.cap_kw;
    }
    return p.cap_kw;
}

/// Thermal output of a compression heat pump. `p_e_kw` must already be inside the box.
inline double heat_pump_heat(const HeatPumpParams& p, double p_e_kw) {
    if (!(p_e_kw >= p.p_min_kw && p_e_kw <= p.p_max_kw)) {
        throw ContractViolation("heat_pump_heat: electrical power outside [p_min_kw, p_max_kw]");
    }
    return p.cop * p_e_kw;
}

/// Heat the compressor itself adds to the steam it draws from the accumulator.
inline double compressor_added_heat(const CompressorParams& p, double p_e_kw) {
    if (!(p_e_kw >= p.p_min_kw && p_e_kw <= p.p_max_kw)) {
        throw ContractViolation(
            "compressor_added_heat: electrical power outside [p_min_kw, p_max_kw]");
    }
    return p.eta_cp * p_e_kw;
}

/// One-hour storage balance. Out-of-bound results are clamped and the excess is
/// reported as overflow (above max) or shortfall (below min).
inline StorageStep storage_step(const StorageParams& p, double hsd_kwh, double q_in_kwh,
                                double q_out_kwh) {
    if (!(q_in_kwh >= 0.0) || !(q_out_kwh >= 0.0)) {
        throw ContractViolation("storage_step: flows must be >= 0");
    }
    const double raw = hsd_kwh + q_in_kwh - q_out_kwh;
    StorageStep s;
    s.hsd_next_kwh = std::clamp(raw, p.hsd_min_kwh, p.hsd_max_kwh);
    s.overflow_kwh = std::max(0.0, raw - p.hsd_max_kwh);
    s.shortfall_kwh = std::max(0.0, p.hsd_min_kwh - raw);
    return s;
}

}  // namespace thermogrid

#pragma once

// Noiseless multi-scenario evaluation and paired policy comparison.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <istream>
#include <map>
#include <ostream>
#include <string>
#include <tuple>
#include <vector>

#include "thermogrid/config.hpp"
#include "thermogrid/csv.hpp"
#include "thermogrid/environment.hpp"
#include "thermogrid/scenario.hpp"
#include "thermogrid/training.hpp"

namespace thermogrid {

struct EvalRow {
    double tier_lo = 0.0;
    double tier_hi = 0.0;
    std::uint64_t seed = 0;
    double c_s = 0.0;
    double delta_p = 0.0;
    double hsd_l_T = 0.0;
    double hsd_h_T = 0.0;
    double dev_l = 0.0;
    double dev_h = 0.0;

    std::string tier_label() const { return UncertaintyTier(tier_lo, tier_hi).label(); }
};

/// Per-tier arithmetic means of the scenario rows.
struct TierSummary {
    double tier_lo = 0.0;
    double tier_hi = 0.0;
    std::size_t scenarios = 0;
    double c_s = 0.0;
    double delta_p = 0.0;
    double hsd_l_T = 0.0;
    double hsd_h_T = 0.0;
    double dev_l = 0.0;
    double dev_h = 0.0;

    std::string label() const { return UncertaintyTier(tier_lo, tier_hi).label(); }
};

struct EvalReport {
    std::vector<EvalRow> rows;  // sorted by (tier_lo, tier_hi, seed)

    std::vector<TierSummary> tiers() const {
        std::vector<TierSummary> out;
        for (const auto& r : rows) {
            if (out.empty() || out.back().tier_lo != r.tier_lo || out.back().tier_hi != r.tier_hi) {
                out.push_back({r.tier_lo, r.tier_hi});
            }
            auto& s = out.back();
            ++s.scenarios;
            s.c_s += r.c_s;
            s.delta_p += r.delta_p;
            s.hsd_l_T += r.hsd_l_T;
            s.hsd_h_T += r.hsd_h_T;
            s.dev_l += r.dev_l;
            s.dev_h += r.dev_h;
        }
        for (auto& s : out) {
            const double n = static_cast<double>(s.scenarios);
            s.c_s /= n;
            s.delta_p /= n;
            s.hsd_l_T /= n;
            s.hsd_h_T /= n;
            s.dev_l /= n;
            s.dev_h /= n;
        }
        return out;
    }

    void sort() {
        std::sort(rows.begin(), rows.end(), [](const EvalRow& a, const EvalRow& b) {
            return std::tie(a.tier_lo, a.tier_hi, a.seed) < std::tie(b.tier_lo, b.tier_hi, b.seed);
        });
    }
};

/// Tier i evaluates seeds base_seed + i * n_per_tier ... + n_per_tier - 1.
inline std::vector<Scenario> evaluation_scenarios(const TypicalDayProfile& profile,
                                                  const std::vector<UncertaintyTier>& tiers,
                                                  std::size_t n_per_tier, std::uint64_t base_seed) {
    std::vector<Scenario> out;
    for (std::size_t i = 0; i < tiers.size(); ++i) {
        auto batch = scenario_batch(profile, tiers[i], n_per_tier, base_seed + i * n_per_tier);
        out.insert(out.end(), std::make_move_iterator(batch.begin()), std::make_move_iterator(batch.end()));
    }
    return out;
}

inline EvalRow make_eval_row(const Scenario& sc, const EpisodeCost& cost) {
    return {sc.tier.lo(), sc.tier.hi(), sc.seed, cost.c_s, cost.delta_p_total,
            cost.hsd_l_T, cost.hsd_h_T, cost.dev_l, cost.dev_h};
}

inline EvalReport evaluate(const Mlp& actor, const SystemConfig& config,
                           const std::vector<UncertaintyTier>& tiers, std::size_t n_per_tier,
                           std::uint64_t base_seed) {
    if (actor.input_dim() != kStateDim || actor.output_dim() != kActionDim) {
        throw InputMismatch("evaluate: actor dimensions do not match the plant (7 -> 3)");
    }
    EvalReport report;
    for (const Scenario& sc : evaluation_scenarios(config.profile, tiers, n_per_tier, base_seed)) {
        const Trajectory traj = rollout(actor, sc, config.plant, config.reward);
        report.rows.push_back(make_eval_row(sc, episode_cost(traj, config.plant.horizon)));
    }
    report.sort();
    return report;
}

inline void write_eval_csv(std::ostream& os, const EvalReport& r) {
    os << "tier,tier_lo,tier_hi,seed,c_s,delta_p,hsd_l_T,hsd_h_T,dev_l,dev_h\n";
    for (const auto& e : r.rows) {
        csv::Row(os) << e.tier_label() << e.tier_lo << e.tier_hi << e.seed << e.c_s << e.delta_p
                     << e.hsd_l_T << e.hsd_h_T << e.dev_l << e.dev_h;
    }
}

inline void write_tier_summary_csv(std::ostream& os, const EvalReport& r) {
    os << "tier,scenarios,c_s,delta_p,hsd_l_T,hsd_h_T,dev_l,dev_h\n";
    for (const auto& s : r.tiers()) {
        csv::Row(os) << s.label() << s.scenarios << s.c_s << s.delta_p << s.hsd_l_T << s.hsd_h_T
                     << s.dev_l << s.dev_h;
    }
}

inline EvalReport read_eval_csv(std::istream& is) {
    const csv::Table t = csv::read(is);
    const std::size_t lo = t.column("tier_lo"), hi = t.column("tier_hi"), seed = t.column("seed"),
                      cs = t.column("c_s"), dp = t.column("delta_p"), hl = t.column("hsd_l_T"),
                      hh = t.column("hsd_h_T"), dl = t.column("dev_l"), dh = t.column("dev_h");
    EvalReport r;
    for (const auto& row : t.rows) {
        EvalRow e;
        e.tier_lo = csv::parse_double(row[lo]);
        e.tier_hi = csv::parse_double(row[hi]);
        e.seed = csv::parse_u64(row[seed]);
        e.c_s = csv::parse_double(row[cs]);
        e.delta_p = csv::parse_double(row[dp]);
        e.hsd_l_T = csv::parse_double(row[hl]);
        e.hsd_h_T = csv::parse_double(row[hh]);
        e.dev_l = csv::parse_double(row[dl]);
        e.dev_h = csv::parse_double(row[dh]);
        r.rows.push_back(e);
    }
    r.sort();
    return r;
}

/// Percent reduction of b relative to a: 100 * (a - b) / a. Zero when both are zero.
inline double percent_reduction(double a, double b) {
    if (a == 0.0 && b == 0.0) return 0.0;
    return 100.0 * (a - b) / a;
}

struct MetricReduction {
    double c_s = 0.0;
    double delta_p = 0.0;
    double hsd_l_T = 0.0;
    double hsd_h_T = 0.0;
    double dev_l = 0.0;
    double dev_h = 0.0;
};

struct TierComparison {
    TierSummary a;
    TierSummary b;
    MetricReduction reduction_pct;
};

struct Comparison {
    std::vector<TierComparison> tiers;
    MetricReduction mean_reduction_pct;  // arithmetic mean over tiers
};

/// Paired comparison; the two reports must cover the same (tier, seed) set.
inline Comparison compare(const EvalReport& a, const EvalReport& b) {
    if (a.rows.size() != b.rows.size()) {
        throw InputMismatch("compare: reports have " + std::to_string(a.rows.size()) + " and " +
                            std::to_string(b.rows.size()) + " scenarios");
    }
    for (std::size_t i = 0; i < a.rows.size(); ++i) {
        const auto& x = a.rows[i];
        const auto& y = b.rows[i];
        if (x.tier_lo != y.tier_lo || x.tier_hi != y.tier_hi || x.seed != y.seed) {
            throw InputMismatch("compare: scenario sets differ (row " + std::to_string(i) + ": " +
                                x.tier_label() + "/" + std::to_string(x.seed) + " vs " +
                                y.tier_label() + "/" + std::to_string(y.seed) + ")");
        }
    }
    Comparison c;
    const auto ta = a.tiers();
    const auto tb = b.tiers();
    for (std::size_t i = 0; i < ta.size(); ++i) {
        TierComparison tc{ta[i], tb[i], {}};
        auto& r = tc.reduction_pct;
        r.c_s = percent_reduction(ta[i].c_s, tb[i].c_s);
        r.delta_p = percent_reduction(ta[i].delta_p, tb[i].delta_p);
        r.hsd_l_T = percent_reduction(ta[i].hsd_l_T, tb[i].hsd_l_T);
        r.hsd_h_T = percent_reduction(ta[i].hsd_h_T, tb[i].hsd_h_T);
        r.dev_l = percent_reduction(ta[i].dev_l, tb[i].dev_l);
        r.dev_h = percent_reduction(ta[i].dev_h, tb[i].dev_h);
        c.tiers.push_back(tc);
    }
    if (!c.tiers.empty()) {
        auto& m = c.mean_reduction_pct;
        for (const auto& t : c.tiers) {
            m.c_s += t.reduction_pct.c_s;
            m.delta_p += t.reduction_pct.delta_p;
            m.hsd_l_T += t.reduction_pct.hsd_l_T;
            m.hsd_h_T += t.reduction_pct.hsd_h_T;
            m.dev_l += t.reduction_pct.dev_l;
            m.dev_h += t.reduction_pct.dev_h;
        }
        const double n = static_cast<double>(c.tiers.size());
        m.c_s /= n;
        m.delta_p /= n;
        m.hsd_l_T /= n;
        m.hsd_h_T /= n;
        m.dev_l /= n;
        m.dev_h /= n;
    }
    return c;
}

/// Published tier means (tiers 10%, 20%, 30%) for the baseline (a) and the
/// peak-shaving variant (b). Printed as context under every comparison.
struct ReferenceTable {
    static constexpr std::array<double, 3> hsd_l_T_a{80.78, 79.66, 83.26};
    static constexpr std::array<double, 3> hsd_l_T_b{73.05, 70.07, 65.59};
    static constexpr std::array<double, 3> hsd_h_T_a{4.76, 7.06, 7.49};
    static constexpr std::array<double, 3> hsd_h_T_b{4.24, 4.25, 3.59};
    static constexpr std::array<double, 3> c_s_a{1014.1, 1052.1, 1151.1};
    static constexpr std::array<double, 3> c_s_b{943.81, 918.69, 994.85};
    static constexpr std::array<double, 3> delta_p_a{303.68, 306.67, 297.70};
    static constexpr std::array<double, 3> delta_p_b{264.82, 268.57, 255.40};
};

namespace detail {

template <typename Get>
void comparison_row(std::ostream& os, const std::string& name, const Comparison& c, Get get,
                    double MetricReduction::*red) {
    csv::Row row(os);
    row << name;
    for (const auto& t : c.tiers) row << get(t.a);
    for (const auto& t : c.tiers) row << get(t.b);
    for (const auto& t : c.tiers) row << t.reduction_pct.*red;
    row << c.mean_reduction_pct.*red;
}

inline void reference_row(std::ostream& os, const std::string& name, const std::array<double, 3>& a,
                          const std::array<double, 3>& b) {
    csv::Row row(os);
    row << name;
    double mean = 0.0;
    for (double v : a) row << v;
    for (double v : b) row << v;
    for (std::size_t i = 0; i < 3; ++i) {
        const double r = percent_reduction(a[i], b[i]);
        mean += r / 3.0;
        row << r;
    }
    row << mean;
}

}  // namespace detail

/// Table-shaped comparison: one row per metric, columns a-tiers, b-tiers,
/// per-tier percent reduction, mean reduction.
inline void write_comparison_csv(std::ostream& os, const Comparison& c, bool with_reference = true) {
    os << "metric";
    for (const auto& t : c.tiers) os << ",a_" << t.a.label();
    for (const auto& t : c.tiers) os << ",b_" << t.b.label();
    for (const auto& t : c.tiers) os << ",reduction_pct_" << t.a.label();
    os << ",reduction_pct_mean\n";
    detail::comparison_row(os, "HSD_L_T", c, [](const TierSummary& s) { return s.hsd_l_T; },
                           &MetricReduction::hsd_l_T);
    detail::comparison_row(os, "HSD_H_T", c, [](const TierSummary& s) { return s.hsd_h_T; },
                           &MetricReduction::hsd_h_T);
    detail::comparison_row(os, "C_s", c, [](const TierSummary& s) { return s.c_s; },
                           &MetricReduction::c_s);
    detail::comparison_row(os, "delta_P", c, [](const TierSummary& s) { return s.delta_p; },
                           &MetricReduction::delta_p);
    detail::comparison_row(os, "dev_L", c, [](const TierSummary& s) { return s.dev_l; },
                           &MetricReduction::dev_l);
    detail::comparison_row(os, "dev_H", c, [](const TierSummary& s) { return s.dev_h; },
                           &MetricReduction::dev_h);
    if (with_reference && c.tiers.size() == 3) {
        using R = ReferenceTable;
        detail::reference_row(os, "reference_HSD_L_T", R::hsd_l_T_a, R::hsd_l_T_b);
        detail::reference_row(os, "reference_HSD_H_T", R::hsd_h_T_a, R::hsd_h_T_b);
        detail::reference_row(os, "reference_C_s", R::c_s_a, R::c_s_b);
        detail::reference_row(os, "reference_delta_P", R::delta_p_a, R::delta_p_b);
    }
}

}  // namespace thermogrid

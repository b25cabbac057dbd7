#pragma once

// Central finite-difference verification of Mlp::backward.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <random>
#include <string>

#include "thermogrid/mlp.hpp"

namespace thermogrid {

struct GradCheckOptions {
    std::size_t nets = 100;
    std::size_t max_hidden_layers = 2;  // up to 3 weight layers
    std::size_t max_width = 8;
    std::size_t batch = 3;
    double step = 1e-5;
    // Relative errors use max(|analytic|, |numeric|, floor) as denominator.
    double denominator_floor = 1e-6;
    double tolerance = 1e-4;
    bool inject_fault = false;  // corrupt one analytic gradient
};

struct GradCheckResult {
    double max_relative_error = 0.0;
    std::size_t nets = 0;
    std::size_t parameters_checked = 0;
    std::string worst;  // location of the largest error

    bool passed(double tolerance) const { return max_relative_error < tolerance; }
};

inline double relative_error(double analytic, double numeric, double floor) {
    const double denom = std::max({std::abs(analytic), std::abs(numeric), floor});
    return std::abs(analytic - numeric) / denom;
}

namespace detail {

inline double weighted_output(const Mlp& net, const Eigen::MatrixXd& x, const Eigen::MatrixXd& up) {
    return net.forward(x).cwiseProduct(up).sum();
}

// True when some rectifier pre-activation sits within `margin` of its kink,
// where central differences are not meaningful.
inline bool near_kink(const Mlp& net, const Eigen::MatrixXd& x, double margin) {
    Eigen::MatrixXd a = x;
    const auto& layers = net.layers();
    for (std::size_t l = 0; l < layers.size(); ++l) {
        Eigen::MatrixXd z = layers[l].weight * a;
        z.colwise() += layers[l].bias;
        const Activation act = l + 1 == layers.size() ? net.output_activation() : net.hidden_activation();
        if (act == Activation::relu && (z.array().abs() < margin).any()) return true;
        a = act == Activation::relu ? Eigen::MatrixXd(z.cwiseMax(0.0))
            : act == Activation::tanh ? Eigen::MatrixXd(z.array().tanh().matrix())
                                      : z;
    }
    return false;
}

}  // namespace detail

/// Checks every parameter and input gradient of `opts.nets` random networks.
inline GradCheckResult run_gradient_check(std::uint64_t seed, const GradCheckOptions& opts = {}) {
    std::mt19937_64 rng(seed);
    std::uniform_int_distribution<std::size_t> depth(0, opts.max_hidden_layers);
    std::uniform_int_distribution<std::size_t> width(1, opts.max_width);
    std::uniform_int_distribution<int> out_kind(0, 1);
    std::normal_distribution<double> normal(0.0, 1.0);

    GradCheckResult result;
    const double h = opts.step;
    for (std::size_t n = 0; n < opts.nets; ++n) {
        std::vector<std::size_t> sizes{width(rng)};
        const std::size_t hidden = depth(rng);
        for (std::size_t i = 0; i < hidden; ++i) sizes.push_back(width(rng));
        sizes.push_back(width(rng));
        Mlp net(sizes, Activation::relu, out_kind(rng) ? Activation::tanh : Activation::identity);
        net.initialize(rng);

        Eigen::MatrixXd x(sizes.front(), opts.batch);
        do {
            for (Eigen::Index i = 0; i < x.size(); ++i) x.data()[i] = normal(rng);
        } while (detail::near_kink(net, x, 1e-3));
        Eigen::MatrixXd up(sizes.back(), opts.batch);
        for (Eigen::Index i = 0; i < up.size(); ++i) up.data()[i] = normal(rng);

        Mlp::Tape tape;
        net.forward(x, tape);
        MlpGradients g = net.backward(tape, up);
        if (opts.inject_fault && n == 0) {
            g.layers[0].weight(0, 0) += 1.0;
        }

        const auto record = [&](double analytic, double numeric, const std::string& where) {
            const double err = relative_error(analytic, numeric, opts.denominator_floor);
            ++result.parameters_checked;
            if (err > result.max_relative_error || std::isnan(err)) {
                result.max_relative_error = std::isnan(err) ? HUGE_VAL : err;
                result.worst = "net " + std::to_string(n) + " " + where;
            }
        };

        for (std::size_t l = 0; l < net.layers().size(); ++l) {
            auto& L = net.layers()[l];
            const auto probe = [&](double& p) {
                const double saved = p;
                p = saved + h;
                const double fp = detail::weighted_output(net, x, up);
                p = saved - h;
                const double fm = detail::weighted_output(net, x, up);
                p = saved;
                return (fp - fm) / (2.0 * h);
            };
            for (Eigen::Index i = 0; i < L.weight.rows(); ++i)
                for (Eigen::Index j = 0; j < L.weight.cols(); ++j)
                    record(g.layers[l].weight(i, j), probe(L.weight(i, j)),
                           "layer " + std::to_string(l) + " W(" + std::to_string(i) + "," +
                               std::to_string(j) + ")");
            for (Eigen::Index i = 0; i < L.bias.size(); ++i)
                record(g.layers[l].bias(i), probe(L.bias(i)),
                       "layer " + std::to_string(l) + " b(" + std::to_string(i) + ")");
        }
        for (Eigen::Index i = 0; i < x.size(); ++i) {
            const double saved = x.data()[i];
            x.data()[i] = saved + h;
            const double fp = detail::weighted_output(net, x, up);
            x.data()[i] = saved - h;
            const double fm = detail::weighted_output(net, x, up);
            x.data()[i] = saved;
            record(g.input.data()[i], (fp - fm) / (2.0 * h), "input[" + std::to_string(i) + "]");
        }
        ++result.nets;
    }
    return result;
}

}  // namespace thermogrid

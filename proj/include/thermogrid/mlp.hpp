#pragma once

// Dense feed-forward networks with hand-written backpropagation, Adam, and
// Polyak averaging. Samples are stored column-wise: an input batch is a
// (input_dim x batch) matrix.

#include <cmath>
#include <cstdint>
#include <istream>
#include <ostream>
#include <random>
#include <span>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "thermogrid/csv.hpp"
#include "thermogrid/errors.hpp"

namespace thermogrid {

enum class Activation { identity, relu, tanh };

inline const char* to_string(Activation a) {
    switch (a) {
        case Activation::identity: return "identity";
        case Activation::relu: return "relu";
        case Activation::tanh: return "tanh";
    }
    return "?";
}

inline Activation activation_from_string(const std::string& s) {
    if (s == "identity") return Activation::identity;
    if (s == "relu") return Activation::relu;
    if (s == "tanh") return Activation::tanh;
    throw InputMismatch("unknown activation tag '" + s + "'");
}

struct DenseLayer {
    Eigen::MatrixXd weight;  // out x in
    Eigen::VectorXd bias;    // out
};

/// Parameter-shaped gradient (or moment) storage plus the input gradient.
struct MlpGradients {
    std::vector<DenseLayer> layers;
    Eigen::MatrixXd input;
};

class Mlp {
public:
    /// Post-activation values of every layer; values[0] is the input.
    struct Tape {
        std::vector<Eigen::MatrixXd> values;
    };

    Mlp() = default;

    Mlp(std::vector<std::size_t> sizes, Activation hidden, Activation output)
        : sizes_(std::move(sizes)), hidden_(hidden), output_(output) {
        if (sizes_.size() < 2) {
            throw ContractViolation("Mlp: need at least input and output widths");
        }
        for (std::size_t w : sizes_) {
            if (w == 0) throw ContractViolation("Mlp: zero-width layer");
        }
        layers_.resize(sizes_.size() - 1);
        for (std::size_t l = 0; l + 1 < sizes_.size(); ++l) {
            layers_[l].weight = Eigen::MatrixXd::Zero(sizes_[l + 1], sizes_[l]);
            layers_[l].bias = Eigen::VectorXd::Zero(sizes_[l + 1]);
        }
    }

    /// Uniform(+-1/sqrt(fan_in)) for weights and biases; the last layer is
    /// additionally multiplied by `final_scale`.
    void initialize(std::mt19937_64& rng, double final_scale = 1.0) {
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            const double bound = 1.0 / std::sqrt(static_cast<double>(sizes_[l]));
            const double scale = (l + 1 == layers_.size()) ? final_scale : 1.0;
            std::uniform_real_distribution<double> u(-bound, bound);
            auto& L = layers_[l];
            for (Eigen::Index j = 0; j < L.weight.cols(); ++j)
                for (Eigen::Index i = 0; i < L.weight.rows(); ++i) L.weight(i, j) = scale * u(rng);
            for (Eigen::Index i = 0; i < L.bias.size(); ++i) L.bias(i) = scale * u(rng);
        }
    }

    std::size_t input_dim() const { return sizes_.front(); }
    std::size_t output_dim() const { return sizes_.back(); }
    const std::vector<std::size_t>& sizes() const { return sizes_; }
    Activation hidden_activation() const { return hidden_; }
    Activation output_activation() const { return output_; }
    std::vector<DenseLayer>& layers() { return layers_; }
    const std::vector<DenseLayer>& layers() const { return layers_; }

    std::size_t parameter_count() const {
        std::size_t n = 0;
        for (const auto& L : layers_) n += L.weight.size() + L.bias.size();
        return n;
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x) const {
        check_input(x);
        Eigen::MatrixXd a = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Eigen::MatrixXd z = layers_[l].weight * a;
            z.colwise() += layers_[l].bias;
            activate(z, activation_of(l));
            a = std::move(z);
        }
        return a;
    }

    Eigen::MatrixXd forward(const Eigen::MatrixXd& x, Tape& tape) const {
        check_input(x);
        tape.values.resize(layers_.size() + 1);
        tape.values[0] = x;
        for (std::size_t l = 0; l < layers_.size(); ++l) {
            Eigen::MatrixXd z = layers_[l].weight * tape.values[l];
            z.colwise() += layers_[l].bias;
            activate(z, activation_of(l));
            tape.values[l + 1] = std::move(z);
        }
        return tape.values.back();
    }

    std::vector<double> forward(std::span<const double> x) const {
        Eigen::MatrixXd in = Eigen::Map<const Eigen::VectorXd>(x.data(), static_cast<Eigen::Index>(x.size()));
        Eigen::MatrixXd y = forward(in);
        return std::vector<double>(y.data(), y.data() + y.size());
    }

    /// Gradients of sum(output .* upstream) with respect to every parameter and
    /// the input, summed over the batch columns.
    MlpGradients backward(const Tape& tape, const Eigen::MatrixXd& upstream) const {
        if (tape.values.size() != layers_.size() + 1) {
            throw ContractViolation("Mlp::backward: tape does not belong to this network");
        }
        const Eigen::MatrixXd& out = tape.values.back();
        if (upstream.rows() != out.rows() || upstream.cols() != out.cols()) {
            throw InputMismatch("Mlp::backward: upstream gradient shape mismatch");
        }
        MlpGradients g;
        g.layers.resize(layers_.size());
        Eigen::MatrixXd delta = upstream;
        apply_derivative(delta, out, output_);
        for (std::size_t l = layers_.size(); l-- > 0;) {
            g.layers[l].weight = delta * tape.values[l].transpose();
            g.layers[l].bias = delta.rowwise().sum();
            Eigen::MatrixXd back = layers_[l].weight.transpose() * delta;
            if (l > 0) {
                apply_derivative(back, tape.values[l], hidden_);
                delta = std::move(back);
            } else {
                g.input = std::move(back);
            }
        }
        return g;
    }

    friend bool operator==(const Mlp& a, const Mlp& b) {
        if (a.sizes_ != b.sizes_ || a.hidden_ != b.hidden_ || a.output_ != b.output_) return false;
        for (std::size_t l = 0; l < a.layers_.size(); ++l) {
            if (!(a.layers_[l].weight.array() == b.layers_[l].weight.array()).all()) return false;
            if (!(a.layers_[l].bias.array() == b.layers_[l].bias.array()).all()) return false;
        }
        return true;
    }

private:
    Activation activation_of(std::size_t layer) const {
        return layer + 1 == layers_.size() ? output_ : hidden_;
    }

    void check_input(const Eigen::MatrixXd& x) const {
        if (layers_.empty()) throw ContractViolation("Mlp: empty network");
        if (static_cast<std::size_t>(x.rows()) != sizes_.front()) {
            throw InputMismatch("Mlp::forward: input has " + std::to_string(x.rows()) +
                                " rows, network expects " + std::to_string(sizes_.front()));
        }
    }

    static void activate(Eigen::MatrixXd& z, Activation a) {
        switch (a) {
            case Activation::identity: break;
            case Activation::relu: z = z.cwiseMax(0.0); break;
            case Activation::tanh: z = z.array().tanh().matrix(); break;
        }
    }

    // Derivative expressed through the post-activation value y.
    static void apply_derivative(Eigen::MatrixXd& grad, const Eigen::MatrixXd& y, Activation a) {
        switch (a) {
            case Activation::identity: break;
            case Activation::relu: grad = (y.array() > 0.0).select(grad, 0.0); break;
            case Activation::tanh: grad.array() *= (1.0 - y.array().square()); break;
        }
    }

    std::vector<std::size_t> sizes_;
    Activation hidden_ = Activation::relu;
    Activation output_ = Activation::identity;
    std::vector<DenseLayer> layers_;
};

struct AdamState {
    double learning_rate = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::int64_t step = 0;
    std::vector<DenseLayer> m;
    std::vector<DenseLayer> v;

    AdamState() = default;

    AdamState(const Mlp& net, double lr) : learning_rate(lr) {
        for (const auto& L : net.layers()) {
            m.push_back({Eigen::MatrixXd::Zero(L.weight.rows(), L.weight.cols()),
                         Eigen::VectorXd::Zero(L.bias.size())});
        }
        v = m;
    }
};

/// Bias-corrected Adam update of every parameter of `net`.
inline void adam_step(Mlp& net, const MlpGradients& grads, AdamState& s) {
    auto& layers = net.layers();
    if (grads.layers.size() != layers.size() || s.m.size() != layers.size()) {
        throw InputMismatch("adam_step: layer count mismatch");
    }
    ++s.step;
    const double c1 = 1.0 - std::pow(s.beta1, static_cast<double>(s.step));
    const double c2 = 1.0 - std::pow(s.beta2, static_cast<double>(s.step));
    const auto update = [&](auto& param, const auto& g, auto& m, auto& v) {
        m = s.beta1 * m + (1.0 - s.beta1) * g;
        v = s.beta2 * v + (1.0 - s.beta2) * g.cwiseProduct(g);
        param.array() -= s.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + s.epsilon);
    };
    for (std::size_t l = 0; l < layers.size(); ++l) {
        update(layers[l].weight, grads.layers[l].weight, s.m[l].weight, s.v[l].weight);
        update(layers[l].bias, grads.layers[l].bias, s.m[l].bias, s.v[l].bias);
    }
}

/// target <- tau * online + (1 - tau) * target
inline void soft_update(Mlp& target, const Mlp& online, double tau) {
    if (target.sizes() != online.sizes()) {
        throw InputMismatch("soft_update: network shapes differ");
    }
    auto& t = target.layers();
    const auto& o = online.layers();
    for (std::size_t l = 0; l < t.size(); ++l) {
        t[l].weight = tau * o[l].weight + (1.0 - tau) * t[l].weight;
        t[l].bias = tau * o[l].bias + (1.0 - tau) * t[l].bias;
    }
}

// Checkpoint text format, version 1:
//
//   thermogrid-mlp 1
//   layers <count> <w0> <w1> ...
//   activations <hidden> <output>
//   parameters <n>
//   <one value per line, 17 significant digits>
//
// Values are layer-major; within a layer the weight matrix row-major, then the bias.
inline constexpr int kMlpFormatVersion = 1;

inline void save_mlp(std::ostream& os, const Mlp& net) {
    os << "thermogrid-mlp " << kMlpFormatVersion << '\n';
    os << "layers " << net.sizes().size();
    for (std::size_t w : net.sizes()) os << ' ' << w;
    os << '\n';
    os << "activations " << to_string(net.hidden_activation()) << ' '
       << to_string(net.output_activation()) << '\n';
    os << "parameters " << net.parameter_count() << '\n';
    for (const auto& L : net.layers()) {
        for (Eigen::Index i = 0; i < L.weight.rows(); ++i)
            for (Eigen::Index j = 0; j < L.weight.cols(); ++j)
                os << csv::format_double17(L.weight(i, j)) << '\n';
        for (Eigen::Index i = 0; i < L.bias.size(); ++i) os << csv::format_double17(L.bias(i)) << '\n';
    }
}

inline Mlp load_mlp(std::istream& is) {
    const auto expect = [&](const std::string& keyword) {
        std::string word;
        if (!(is >> word) || word != keyword) {
            throw InputMismatch("mlp checkpoint: expected '" + keyword + "', got '" + word + "'");
        }
    };
    expect("thermogrid-mlp");
    int version = 0;
    if (!(is >> version) || version != kMlpFormatVersion) {
        throw InputMismatch("mlp checkpoint: unsupported format version " + std::to_string(version));
    }
    expect("layers");
    std::size_t count = 0;
    if (!(is >> count) || count < 2 || count > 64) {
        throw InputMismatch("mlp checkpoint: bad layer count");
    }
    std::vector<std::size_t> sizes(count);
    for (auto& w : sizes) {
        if (!(is >> w) || w == 0) throw InputMismatch("mlp checkpoint: bad layer width");
    }
    expect("activations");
    std::string hidden, output;
    is >> hidden >> output;
    Mlp net(sizes, activation_from_string(hidden), activation_from_string(output));
    expect("parameters");
    std::size_t n = 0;
    if (!(is >> n) || n != net.parameter_count()) {
        throw InputMismatch("mlp checkpoint: parameter count does not match layer sizes");
    }
    std::string token;
    const auto next = [&]() {
        if (!(is >> token)) throw InputMismatch("mlp checkpoint: truncated parameter list");
        return csv::parse_double(token);
    };
    for (auto& L : net.layers()) {
        for (Eigen::Index i = 0; i < L.weight.rows(); ++i)
            for (Eigen::Index j = 0; j < L.weight.cols(); ++j) L.weight(i, j) = next();
        for (Eigen::Index i = 0; i < L.bias.size(); ++i) L.bias(i) = next();
    }
    if (is >> token) {
        throw InputMismatch("mlp checkpoint: trailing data after parameters");
    }
    return net;
}

inline std::string to_checkpoint_string(const Mlp& net) {
    std::ostringstream os;
    save_mlp(os, net);
    return os.str();
}

}  // namespace thermogrid

#pragma once

// Central finite-difference oracle for Network::backward. It only ever calls
// forward(), so it stays independent of the analytic backward rules.

#include <algorithm>
#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "fgsm/nn.hpp"

namespace testing_support {

struct GradientCheckReport {
    double max_rel_error = 0.0;
    std::size_t evaluated = 0;
    std::size_t checked = 0;
    // Components whose stencil crossed a ReLU or max-pool switch; the loss is
    // not differentiable across such a kink, so the difference quotient is not
    // an estimate of the gradient there.
    std::size_t skipped_kinks = 0;
    std::string worst;
};

/// Which ReLU units are active and which max-pool inputs were selected.
inline std::vector<std::uint32_t> activation_pattern(const fgsm::Network& net, const fgsm::ForwardTrace& trace) {
    std::vector<std::uint32_t> pattern;
    for (std::size_t i = 0; i < net.layers().size(); ++i) {
        const auto& layer = net.layers()[i];
        bool relu = std::holds_alternative<fgsm::ReLUSpec>(layer);
        if (auto* c = std::get_if<fgsm::Conv2DSpec>(&layer)) relu = c->activation == fgsm::Activation::relu;
        if (auto* d = std::get_if<fgsm::DenseSpec>(&layer)) relu = d->activation == fgsm::Activation::relu;
        if (relu)
            for (float v : trace.activations[i + 1].values()) pattern.push_back(v > 0.0f);
        pattern.insert(pattern.end(), trace.pool_argmax[i].begin(), trace.pool_argmax[i].end());
    }
    return pattern;
}

inline double relative_error(double analytic, double numeric) {
    const double scale = std::max(std::fabs(analytic), std::fabs(numeric));
    return scale == 0.0 ? 0.0 : std::fabs(analytic - numeric) / scale;
}

/// Compares every input and parameter gradient with central differences of
/// step `step`, on components whose magnitude exceeds `min_magnitude`. Dropout
/// masks are held fixed by reseeding the forward stream with `mask_seed`.
/// Components whose +/- step evaluations change the activation pattern are
/// counted in `skipped_kinks` instead of compared.
inline GradientCheckReport check_gradients(fgsm::Network& net, const fgsm::Tensor& input, std::size_t label,
                                           fgsm::Mode mode, std::uint64_t mask_seed, float step = 1e-2f,
                                           double min_magnitude = 1e-3) {
    fgsm::Rng rng(mask_seed);
    auto fr = net.forward(input, mode, rng);
    const fgsm::Gradients grads = net.backward(fr.trace, label);
    const auto base_pattern = activation_pattern(net, fr.trace);

    bool kink = false;
    auto loss_at = [&](const fgsm::Tensor& x) {
        fgsm::Rng stream(mask_seed);
        auto r = net.forward(x, mode, stream);
        if (activation_pattern(net, r.trace) != base_pattern) kink = true;
        return static_cast<double>(fgsm::cross_entropy(r.probs, label));
    };

    GradientCheckReport report;
    auto record = [&](double analytic, double numeric, const std::string& where) {
        ++report.evaluated;
        if (kink) {
            ++report.skipped_kinks;
            kink = false;
            return;
        }
        if (std::max(std::fabs(analytic), std::fabs(numeric)) <= min_magnitude) return;
        ++report.checked;
        const double err = relative_error(analytic, numeric);
        if (err > report.max_rel_error) {
            report.max_rel_error = err;
            report.worst = where + " analytic=" + std::to_string(analytic) + " numeric=" + std::to_string(numeric);
        }
    };

    fgsm::Tensor x = input;
    for (std::size_t i = 0; i < x.size(); ++i) {
        const float orig = x[i];
        x[i] = orig + step;
        const double up = loss_at(x);
        x[i] = orig - step;
        const double down = loss_at(x);
        x[i] = orig;
        record(grads.input[i], (up - down) / (2.0 * step), "input[" + std::to_string(i) + "]");
    }

    for (std::size_t layer = 0; layer < net.layers().size(); ++layer) {
        for (int which = 0; which < 2; ++which) {
            const std::size_t n = which == 0 ? net.params()[layer].weights.size() : net.params()[layer].bias.size();
            for (std::size_t i = 0; i < n; ++i) {
                auto value = [&]() -> float& {
                    auto& p = net.mutable_params()[layer];
                    return which == 0 ? p.weights[i] : p.bias[i];
                };
                const float orig = value();
                value() = orig + step;
                const double up = loss_at(input);
                value() = orig - step;
                const double down = loss_at(input);
                value() = orig;
                const float analytic = which == 0 ? grads.params[layer].weights[i] : grads.params[layer].bias[i];
                record(analytic, (up - down) / (2.0 * step),
                       "layer " + std::to_string(layer) + (which == 0 ? " weight[" : " bias[") +
                           std::to_string(i) + "]");
            }
        }
    }
    return report;
}

} // namespace testing_support

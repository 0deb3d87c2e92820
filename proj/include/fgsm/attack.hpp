#pragma once

#include <optional>
#include <string>

#include "fgsm/nn.hpp"

namespace fgsm {

enum class AttackMode { targeted, untargeted };

std::string to_string(AttackMode mode);
AttackMode attack_mode_from_string(const std::string& name);

struct AttackConfig {
    AttackMode mode = AttackMode::untargeted;
    float epsilon = 0.0f;
    std::optional<std::size_t> target_label;  // targeted only; defaults to default_target()

    void validate(std::size_t classes) const;
};

struct AttackResult {
    AttackMode mode = AttackMode::untargeted;
    float epsilon = 0.0f;
    std::size_t label = 0;  // target (targeted) or true label (untargeted)
    Tensor adversarial_image;
    // Signed step actually added before clipping: -eps*sign(grad) when
    // targeted, +eps*sign(grad) when untargeted.
    Tensor perturbation;
    std::size_t clean_label = 0;
    float clean_confidence = 0.0f;
    std::size_t adv_label = 0;
    float adv_confidence = 0.0f;
    bool success = false;
};

/// Gradient of cross_entropy(predict(image), label) with respect to the image (eval mode).
Tensor input_gradient(const Network& net, const Tensor& image, std::size_t label);

/// sign(input_gradient), elements in {-1, 0, 1}.
Tensor fgsm_gradient_sign(const Network& net, const Tensor& image, std::size_t label);

/// clip(image - eps * sign(grad J(image, target)), 0, 1); success when the prediction becomes `target`.
AttackResult fgsm_targeted(const Network& net, const Tensor& image, std::size_t target, float epsilon);

/// clip(image + eps * sign(grad J(image, true_label)), 0, 1); success when the prediction leaves `true_label`.
AttackResult fgsm_untargeted(const Network& net, const Tensor& image, std::size_t true_label, float epsilon);

/// (true_label + 1) mod classes.
std::size_t default_target(std::size_t true_label, std::size_t classes);

/// Dispatches on cfg.mode; targeted attacks without a target use default_target(true_label).
AttackResult run_attack(const Network& net, const Tensor& image, std::size_t true_label, const AttackConfig& cfg);

/// Whether a result counts toward failure accounting: the clean prediction was
/// correct (untargeted) or not already the target (targeted).
bool attack_eligible(const AttackResult& result, std::size_t true_label);

/// Largest w.eta over |eta|_inf <= eps, which is eps * sum |w_i|.
double linear_shift(const Tensor& w, double epsilon);

/// Maps a perturbation of budget eps > 0 to [0, 1] as eta / (2 eps) + 0.5 for viewing.
Tensor perturbation_image(const Tensor& eta, float epsilon);

} // namespace fgsm

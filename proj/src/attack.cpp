#include "fgsm/attack.hpp"

#include <algorithm>
#include <cmath>

#include "fgsm/error.hpp"

namespace fgsm {

namespace {

void check_image(const Network& net, const Tensor& image) {
    if (image.shape() != net.input_shape())
        throw ShapeError("image shape " + image.shape().to_string() + " does not match network input " +
                         net.input_shape().to_string());
}

void check_label(const Network& net, std::size_t label, const char* what) {
    if (label >= net.num_classes())
        throw ArgumentError(std::string(what) + " " + std::to_string(label) + " out of range for " +
                            std::to_string(net.num_classes()) + " classes");
}

void check_epsilon(float epsilon) {
    if (!(epsilon >= 0.0f) || !std::isfinite(epsilon)) throw ArgumentError("epsilon must be a finite value >= 0");
}

AttackResult perturb(const Network& net, const Tensor& image, std::size_t label, float epsilon, float direction,
                     AttackMode mode) {
    check_epsilon(epsilon);
    check_image(net, image);
    check_label(net, label, mode == AttackMode::targeted ? "target" : "label");

    AttackResult r;
    r.mode = mode;
    r.epsilon = epsilon;
    r.label = label;
    const Tensor clean_probs = net.predict(image);
    r.clean_label = argmax(clean_probs);
    r.clean_confidence = clean_probs[r.clean_label];

    r.perturbation = fgsm_gradient_sign(net, image, label);
    for (auto& v : r.perturbation.values()) v *= direction * epsilon;
    r.adversarial_image = image;
    for (std::size_t i = 0; i < image.size(); ++i)
        r.adversarial_image[i] = std::clamp(image[i] + r.perturbation[i], 0.0f, 1.0f);

    const Tensor adv_probs = net.predict(r.adversarial_image);
    r.adv_label = argmax(adv_probs);
    r.adv_confidence = adv_probs[r.adv_label];
    r.success = mode == AttackMode::targeted ? r.adv_label == label : r.adv_label != label;
    return r;
}

} // namespace

std::string to_string(AttackMode mode) { return mode == AttackMode::targeted ? "targeted" : "untargeted"; }

AttackMode attack_mode_from_string(const std::string& name) {
    if (name == "targeted") return AttackMode::targeted;
    if (name == "untargeted") return AttackMode::untargeted;
    throw ArgumentError("unknown attack mode \"" + name + "\" (expected targeted or untargeted)");
}

void AttackConfig::validate(std::size_t classes) const {
    check_epsilon(epsilon);
    if (target_label && mode != AttackMode::targeted) throw ArgumentError("a target label needs targeted mode");
    if (target_label && *target_label >= classes)
        throw ArgumentError("target " + std::to_string(*target_label) + " out of range for " +
                            std::to_string(classes) + " classes");
}

Tensor input_gradient(const Network& net, const Tensor& image, std::size_t label) {
    check_image(net, image);
    check_label(net, label, "label");
    Rng unused(0);  // eval mode draws nothing
    const ForwardResult fr = net.forward(image, Mode::eval, unused);
    return net.backward(fr.trace, label).input;
}

Tensor fgsm_gradient_sign(const Network& net, const Tensor& image, std::size_t label) {
    return sign(input_gradient(net, image, label));
}

AttackResult fgsm_targeted(const Network& net, const Tensor& image, std::size_t target, float epsilon) {
    return perturb(net, image, target, epsilon, -1.0f, AttackMode::targeted);
}

AttackResult fgsm_untargeted(const Network& net, const Tensor& image, std::size_t true_label, float epsilon) {
    return perturb(net, image, true_label, epsilon, 1.0f, AttackMode::untargeted);
}

std::size_t default_target(std::size_t true_label, std::size_t classes) {
    if (classes < 2) throw ArgumentError("targeted attacks need at least 2 classes");
    return (true_label + 1) % classes;
}

AttackResult run_attack(const Network& net, const Tensor& image, std::size_t true_label, const AttackConfig& cfg) {
    cfg.validate(net.num_classes());
    check_label(net, true_label, "label");
    if (cfg.mode == AttackMode::untargeted) return fgsm_untargeted(net, image, true_label, cfg.epsilon);
    const std::size_t target = cfg.target_label.value_or(default_target(true_label, net.num_classes()));
    return fgsm_targeted(net, image, target, cfg.epsilon);
}

bool attack_eligible(const AttackResult& result, std::size_t true_label) {
    return result.mode == AttackMode::untargeted ? result.clean_label == true_label
                                                 : result.clean_label != result.label;
}

double linear_shift(const Tensor& w, double epsilon) {
    if (!(epsilon >= 0.0)) throw ArgumentError("epsilon must be >= 0");
    double sum = 0.0;
    for (float v : w.values()) sum += std::fabs(static_cast<double>(v));
    return epsilon * sum;
}

Tensor perturbation_image(const Tensor& eta, float epsilon) {
    if (!(epsilon > 0.0f)) throw ArgumentError("perturbation image needs epsilon > 0");
    Tensor out = eta;
    for (auto& v : out.values()) v = std::clamp(v / (2.0f * epsilon) + 0.5f, 0.0f, 1.0f);
    return out;
}

} // namespace fgsm

#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <span>
#include <vector>

#include "polytrace/error.hpp"

namespace polytrace {

struct LossGrad {
    double loss = 0.0;
    std::vector<double> grad;
};

// Smooth L1 over all components, with the analytic gradient w.r.t. pred:
// 0.5 d^2 for |d| < 1, |d| - 0.5 otherwise.
inline LossGrad loss_smooth_l1(std::span<const double> pred, std::span<const double> target) {
    if (pred.size() != target.size())
        throw Error("size-mismatch", "smooth-l1 inputs differ in length");
    LossGrad out;
    out.grad.resize(pred.size());
    for (std::size_t i = 0; i < pred.size(); ++i) {
        const double d = pred[i] - target[i];
        if (std::abs(d) < 1.0) {
            out.loss += 0.5 * d * d;
            out.grad[i] = d;
        } else {
            out.loss += std::abs(d) - 0.5;
            out.grad[i] = d > 0.0 ? 1.0 : -1.0;
        }
    }
    return out;
}

// Summed binary cross-entropy; probabilities are clamped to
// [1e-7, 1 - 1e-7] before the logs, and the gradient is zero where the
// clamp is active.
inline LossGrad loss_bce(std::span<const double> probs, std::span<const std::uint8_t> labels) {
    if (probs.size() != labels.size())
        throw Error("size-mismatch", "bce inputs differ in length");
    constexpr double kClamp = 1e-7;
    LossGrad out;
    out.grad.resize(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::clamp(probs[i], kClamp, 1.0 - kClamp);
        const double c = labels[i] ? 1.0 : 0.0;
        out.loss -= c * std::log(p) + (1.0 - c) * std::log(1.0 - p);
        const bool clamped = probs[i] < kClamp || probs[i] > 1.0 - kClamp;
        out.grad[i] = clamped ? 0.0 : (p - c) / (p * (1.0 - p));
    }
    return out;
}

// Hinge penalty pushing labeled vertices below the angle threshold and
// non-vertices above it; the subgradient is zero at the hinge.
inline LossGrad loss_angle_penalty(std::span<const double> thetas,
                                   std::span<const std::uint8_t> labels, double theta_threshold) {
    if (thetas.size() != labels.size())
        throw Error("size-mismatch", "angle penalty inputs differ in length");
    LossGrad out;
    out.grad.resize(thetas.size());
    for (std::size_t i = 0; i < thetas.size(); ++i) {
        if (labels[i]) {
            out.loss += std::max(0.0, thetas[i] - theta_threshold);
            out.grad[i] = thetas[i] > theta_threshold ? 1.0 : 0.0;
        } else {
            out.loss += std::max(0.0, theta_threshold - thetas[i]);
            out.grad[i] = thetas[i] < theta_threshold ? -1.0 : 0.0;
        }
    }
    return out;
}

// Weighted sum of the three loss terms.
inline double loss_total(double offset_loss, double vertex_loss, double angle_loss,
                         const std::array<double, 3>& lambdas = {1.0, 1.0, 1.0}) {
    return lambdas[0] * offset_loss + lambdas[1] * vertex_loss + lambdas[2] * angle_loss;
}

// Mean pixelwise cross-entropy over one-hot labels. Rows must be
// distributions over num_classes summing to 1 within 1e-6.
inline double loss_cross_entropy(const std::vector<std::vector<double>>& pixel_probs,
                                 std::span<const int> labels, int num_classes) {
    if (pixel_probs.size() != labels.size())
        throw Error("size-mismatch", "cross-entropy inputs differ in length");
    double total = 0.0;
    for (std::size_t i = 0; i < pixel_probs.size(); ++i) {
        const std::vector<double>& row = pixel_probs[i];
        if (static_cast<int>(row.size()) != num_classes)
            throw Error("invalid-distribution", "row " + std::to_string(i) + " has wrong arity");
        double sum = 0.0;
        for (double p : row) sum += p;
        if (std::abs(sum - 1.0) > 1e-6)
            throw Error("invalid-distribution",
                        "row " + std::to_string(i) + " sums to " + std::to_string(sum));
        if (labels[i] < 0 || labels[i] >= num_classes)
            throw Error("invalid-distribution", "label out of range at row " + std::to_string(i));
        total -= std::log(row[static_cast<std::size_t>(labels[i])]);
    }
    return pixel_probs.empty() ? 0.0 : total / static_cast<double>(pixel_probs.size());
}

}  // namespace polytrace

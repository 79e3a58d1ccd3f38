#pragma once

#include <cmath>

#include "sonalyzer/common.hpp"

namespace sonalyzer {

template <class S>
S stable_sigmoid(S x) {
    if (x >= S(0)) {
        const S e = std::exp(-x);
        return S(1) / (S(1) + e);
    }
    const S e = std::exp(x);
    return e / (S(1) + e);
}

template <class S>
S softplus(S x) {  // log(1 + exp(x)) without overflow
    return std::log1p(std::exp(-std::abs(x))) + std::max(x, S(0));
}

/// Mean weighted binary cross-entropy from logits. The positive class is
/// weighted by pos_weight:
///   loss_i = -pos_weight * t_i * log(sigmoid(z_i)) - (1 - t_i) * log(1 - sigmoid(z_i))
/// evaluated in the numerically stable form
///   loss_i = (1 - t_i) * z_i + (pos_weight * t_i + 1 - t_i) * softplus(-z_i).
template <class S>
S bce_with_logits(const Vec<S>& logits, const Vec<S>& targets, S pos_weight) {
    if (logits.size() != targets.size())
        throw ContractError("bce: logits and targets must have equal length");
    if (logits.size() == 0) throw ContractError("bce: empty input");
    S acc = 0;
    for (Index i = 0; i < logits.size(); ++i) {
        const S z = logits(i), t = targets(i);
        if (!std::isfinite(z) || !std::isfinite(t))
            throw ContractError("bce: non-finite input");
        acc += (S(1) - t) * z + (pos_weight * t + S(1) - t) * softplus(-z);
    }
    return acc / static_cast<S>(logits.size());
}

/// d(mean loss)/d(logits) for bce_with_logits.
template <class S>
Vec<S> bce_with_logits_grad(const Vec<S>& logits, const Vec<S>& targets, S pos_weight) {
    const auto n = logits.size();
    Vec<S> grad(n);
    for (Index i = 0; i < n; ++i) {
        const S z = logits(i), t = targets(i);
        const S sig_neg = stable_sigmoid(-z);  // 1 - sigmoid(z)
        grad(i) = ((S(1) - t) - (pos_weight * t + S(1) - t) * sig_neg) / static_cast<S>(n);
    }
    return grad;
}

}  // namespace sonalyzer

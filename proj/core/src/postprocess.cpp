#include "sonalyzer/postprocess.hpp"

#include <cmath>

#include "sonalyzer/loss.hpp"

namespace sonalyzer {

std::vector<double> probabilities(const std::vector<float>& logits) {
    std::vector<double> probs(logits.size());
    for (std::size_t i = 0; i < logits.size(); ++i) {
        if (!std::isfinite(logits[i])) throw ContractError("non-finite logit");
        probs[i] = stable_sigmoid(static_cast<double>(logits[i]));
    }
    return probs;
}

std::vector<Index> pick_peaks(const std::vector<double>& probs,
                              const PostConfig& config) {
    config.validate();
    if (probs.empty()) throw ContractError("pick_peaks needs a nonempty sequence");
    const auto n = static_cast<Index>(probs.size());
    std::vector<Index> peaks;
    for (Index i = 0; i < n; ++i) {
        const double p = probs[static_cast<std::size_t>(i)];
        if (!(p > config.threshold)) continue;
        // leftmost element of a plateau only
        if (i > 0 && probs[static_cast<std::size_t>(i - 1)] == p) continue;
        bool is_max = true;
        const Index lo = std::max<Index>(0, i - config.half_window);
        const Index hi = std::min<Index>(n - 1, i + config.half_window);
        for (Index j = lo; j <= hi && is_max; ++j)
            if (probs[static_cast<std::size_t>(j)] > p) is_max = false;
        if (is_max) peaks.push_back(i);
    }
    return peaks;
}

std::vector<Index> filter_windows(const std::vector<Index>& indices,
                                  const std::vector<double>& probs, int min_gap) {
    std::vector<Index> kept;
    for (Index idx : indices) {
        if (kept.empty() || idx - kept.back() >= min_gap) {
            kept.push_back(idx);
        } else if (probs[static_cast<std::size_t>(idx)] >
                   probs[static_cast<std::size_t>(kept.back())]) {
            // Replacing is always gap-safe: idx lies beyond the previous kept
            // peak by more than min_gap since kept.back() already did.
            kept.back() = idx;
        }
    }
    return kept;
}

BoundarySet to_timestamps(const std::vector<Index>& indices, int gamma,
                          const DspConfig& dsp) {
    const double frame_s =
        static_cast<double>(gamma) * dsp.hop / static_cast<double>(dsp.sr);
    BoundarySet bs;
    bs.times_s.reserve(indices.size());
    for (Index i : indices)
        bs.times_s.push_back((static_cast<double>(i) + 0.5) * frame_s);
    return bs;
}

PostResult postprocess(const std::vector<float>& logits, int gamma,
                       const PostConfig& config, const DspConfig& dsp) {
    PostResult r;
    r.probs = probabilities(logits);
    r.frames = filter_windows(pick_peaks(r.probs, config), r.probs, config.min_gap);
    r.boundaries = to_timestamps(r.frames, gamma, dsp);
    return r;
}

}  // namespace sonalyzer

#pragma once

#include <vector>

#include "sonalyzer/annotations.hpp"
#include "sonalyzer/dsp.hpp"

namespace sonalyzer {

struct PostConfig {
    double threshold = 0.5;  // sigmoid probability threshold
    int half_window = 3;     // local-maxima half window, in aggregated frames
    int min_gap = 3;         // minimum distance between kept peaks, in frames

    /// Settings used when feature aggregation is disabled: the frame grid is
    /// ~43x denser, so the windows scale up and the threshold tightens.
    PostConfig no_agg_variant(int gamma) const {
        PostConfig p = *this;
        p.threshold = 0.8;
        p.half_window = gamma;
        p.min_gap = gamma;
        return p;
    }

    void validate() const {
        if (!(threshold > 0.0 && threshold < 1.0))
            throw ContractError("threshold must lie in (0, 1)");
        if (half_window < 1) throw ContractError("half_window must be >= 1");
        if (min_gap < 1) throw ContractError("min_gap must be >= 1");
    }
};

/// Elementwise logistic function.
std::vector<double> probabilities(const std::vector<float>& logits);

/// Local maxima above the threshold within +/- half_window (truncated at the
/// edges). Of a contiguous plateau of equal values only the leftmost index
/// survives.
std::vector<Index> pick_peaks(const std::vector<double>& probs, const PostConfig& config);

/// Greedy left-to-right minimum-gap filter; when two peaks are closer than
/// min_gap the higher-probability one survives (ties keep the earlier peak).
std::vector<Index> filter_windows(const std::vector<Index>& indices,
                                  const std::vector<double>& probs, int min_gap);

/// Frame-center timestamps: t_i = (i + 0.5) * gamma * hop / sr.
BoundarySet to_timestamps(const std::vector<Index>& indices, int gamma,
                          const DspConfig& dsp);

/// The full chain: sigmoid, peak picking, window filtering, timestamps.
struct PostResult {
    std::vector<double> probs;
    std::vector<Index> frames;
    BoundarySet boundaries;
};
PostResult postprocess(const std::vector<float>& logits, int gamma,
                       const PostConfig& config, const DspConfig& dsp);

}  // namespace sonalyzer

#pragma once

#include <cmath>
#include <numbers>

#include "sonalyzer/common.hpp"

namespace sonalyzer {

/// Rows of σ with L2 norm below this are treated as zero vectors: their
/// cosine similarity is defined as 0 instead of NaN.
inline constexpr double kCosineNormFloor = 1e-12;

/// Slice per-frame embeddings (l_f x C) into windows of gamma frames and
/// flatten each window frame-major, giving sigma with N = floor(l_f / gamma)
/// rows of width gamma*C. Trailing frames beyond N*gamma are dropped.
template <class S>
Mat<S> aggregate(const Mat<S>& frames, Index gamma) {
    if (gamma < 1) throw ContractError("gamma must be >= 1");
    const Index l_f = frames.rows();
    const Index channels = frames.cols();
    if (l_f < gamma)
        throw ContractError("need at least gamma frames to aggregate (l_f=" +
                            std::to_string(l_f) + ", gamma=" + std::to_string(gamma) + ")");
    const Index n = l_f / gamma;
    Mat<S> sigma(n, gamma * channels);
    for (Index i = 0; i < n; ++i)
        for (Index f = 0; f < gamma; ++f)
            for (Index c = 0; c < channels; ++c)
                sigma(i, f * channels + c) = frames(i * gamma + f, c);
    return sigma;
}

/// Inverse of the aggregate flattening: recovers the first n*gamma embedding
/// rows from sigma.
template <class S>
Mat<S> unaggregate(const Mat<S>& sigma, Index gamma) {
    const Index n = sigma.rows();
    const Index channels = sigma.cols() / gamma;
    Mat<S> frames(n * gamma, channels);
    for (Index i = 0; i < n; ++i)
        for (Index f = 0; f < gamma; ++f)
            for (Index c = 0; c < channels; ++c)
                frames(i * gamma + f, c) = sigma(i, f * channels + c);
    return frames;
}

/// Single-cycle positional encoding: pos_i = 2*pi*i/(N-1) sweeps one full
/// period across the piece. Column 0 is sin(pos), column 1 is cos(pos).
/// For N = 1 the single position is 0.
template <class S>
Mat<S> single_cycle_pe(Index n) {
    if (n < 1) throw ContractError("positional encoding needs N >= 1");
    Mat<S> pe(n, 2);
    for (Index i = 0; i < n; ++i) {
        const double pos =
            n == 1 ? 0.0 : 2.0 * std::numbers::pi * static_cast<double>(i) / (n - 1);
        pe(i, 0) = static_cast<S>(std::sin(pos));
        pe(i, 1) = static_cast<S>(std::cos(pos));
    }
    return pe;
}

/// Pairwise cosine similarity between rows of sigma. Any pair involving a
/// zero row (norm below kCosineNormFloor) gets similarity 0, including that
/// row's diagonal entry.
template <class S>
Mat<S> dssm(const Mat<S>& sigma) {
    const Index n = sigma.rows();
    if (n < 1) throw ContractError("dssm needs at least one row");
    Vec<S> norms(n);
    for (Index i = 0; i < n; ++i) norms(i) = sigma.row(i).norm();
    Mat<S> d = sigma * sigma.transpose();
    for (Index i = 0; i < n; ++i)
        for (Index j = 0; j < n; ++j) {
            if (norms(i) < kCosineNormFloor || norms(j) < kCosineNormFloor)
                d(i, j) = S(0);
            else
                d(i, j) /= norms(i) * norms(j);
        }
    return d;
}

/// Per-row sum and mean of 1 - DSSM, each min-max normalized to [0, 1] over
/// rows. A column with max == min collapses to all zeros.
template <class S>
Mat<S> dssm_stats(const Mat<S>& d) {
    const Index n = d.rows();
    Mat<S> stats(n, 2);
    Vec<S> sum(n);
    for (Index i = 0; i < n; ++i)
        sum(i) = static_cast<S>(n) - d.row(i).sum();
    for (int col = 0; col < 2; ++col) {
        const S scale = col == 0 ? S(1) : S(1) / static_cast<S>(n);
        const S lo = sum.minCoeff() * scale;
        const S hi = sum.maxCoeff() * scale;
        for (Index i = 0; i < n; ++i)
            stats(i, col) = hi > lo ? (sum(i) * scale - lo) / (hi - lo) : S(0);
    }
    return stats;
}

struct FeatureToggles {
    bool use_pe = true;
    bool use_dssm_sum = true;
    bool use_dssm_mean = true;

    Index extra_width() const {
        return (use_pe ? 2 : 0) + (use_dssm_sum ? 1 : 0) + (use_dssm_mean ? 1 : 0);
    }
};

/// Column layout of sigma': [sigma | sin | cos | sum | mean], with disabled
/// blocks removed. pe and stats may be empty when their toggles are off.
template <class S>
Mat<S> concat_features(const Mat<S>& sigma, const Mat<S>& pe, const Mat<S>& stats,
                       const FeatureToggles& toggles) {
    const Index n = sigma.rows();
    if (toggles.use_pe && pe.rows() != n)
        throw ContractError("positional encoding row count mismatch");
    if ((toggles.use_dssm_sum || toggles.use_dssm_mean) && stats.rows() != n)
        throw ContractError("dssm stats row count mismatch");

    Mat<S> out(n, sigma.cols() + toggles.extra_width());
    Index col = sigma.cols();
    out.leftCols(col) = sigma;
    if (toggles.use_pe) {
        out.col(col++) = pe.col(0);
        out.col(col++) = pe.col(1);
    }
    if (toggles.use_dssm_sum) out.col(col++) = stats.col(0);
    if (toggles.use_dssm_mean) out.col(col++) = stats.col(1);
    return out;
}

}  // namespace sonalyzer

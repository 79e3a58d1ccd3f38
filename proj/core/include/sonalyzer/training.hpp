#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "sonalyzer/annotations.hpp"
#include "sonalyzer/checkpoint.hpp"
#include "sonalyzer/dsp.hpp"
#include "sonalyzer/loss.hpp"
#include "sonalyzer/metrics.hpp"
#include "sonalyzer/network.hpp"
#include "sonalyzer/postprocess.hpp"

namespace sonalyzer {

struct TrainConfig {
    std::uint64_t seed = 42;
    double learning_rate = 1e-4;
    int max_epochs = 200;
    int patience = 20;    // epochs without validation HR3F improvement
    double smear = 0.5;   // target value at +/-1 frame around a boundary

    void validate() const {
        if (learning_rate < 0.0) throw ContractError("learning_rate must be >= 0");
        if (max_epochs < 1) throw ContractError("max_epochs must be >= 1");
        if (patience < 1) throw ContractError("patience must be >= 1");
        if (smear < 0.0 || smear > 1.0) throw ContractError("smear must lie in [0, 1]");
    }
};

/// Per-piece positive-class weight bounds for the BCE loss.
inline constexpr double kPosWeightMin = 1.0;
inline constexpr double kPosWeightMax = 50.0;

/// Boundary targets on the aggregated frame grid: a boundary at b seconds
/// lands on index floor(b / (gamma*hop/sr)) clamped to [0, N-1]; the two
/// neighbors get max(existing, smear).
template <class S>
Vec<S> frame_targets(const BoundarySet& boundaries, Index n, int gamma,
                     const DspConfig& dsp, double smear) {
    if (n < 1) throw ContractError("frame_targets needs N >= 1");
    const double frame_s =
        static_cast<double>(gamma) * dsp.hop / static_cast<double>(dsp.sr);
    Vec<S> t = Vec<S>::Zero(n);
    for (double b : boundaries.times_s) {
        Index i = static_cast<Index>(std::floor(b / frame_s));
        i = std::clamp<Index>(i, 0, n - 1);
        t(i) = S(1);
        if (i > 0) t(i - 1) = std::max(t(i - 1), static_cast<S>(smear));
        if (i + 1 < n) t(i + 1) = std::max(t(i + 1), static_cast<S>(smear));
    }
    return t;
}

/// clamp(N_neg / N_pos, 1, 50); frames with target >= 0.5 count as positive.
template <class S>
double pos_weight_for(const Vec<S>& targets) {
    Index n_pos = 0;
    for (Index i = 0; i < targets.size(); ++i)
        if (targets(i) >= S(0.5)) ++n_pos;
    if (n_pos == 0) return kPosWeightMin;
    const double w =
        static_cast<double>(targets.size() - n_pos) / static_cast<double>(n_pos);
    return std::clamp(w, kPosWeightMin, kPosWeightMax);
}

/// Adaptive moment estimation over the flat parameter vector.
class Adam {
public:
    Adam(std::size_t n, double lr, double beta1 = 0.9, double beta2 = 0.999,
         double eps = 1e-8)
        : lr_(lr), beta1_(beta1), beta2_(beta2), eps_(eps),
          m_(n, 0.0f), v_(n, 0.0f) {}

    void step(std::vector<float>& theta, const std::vector<float>& grad);

    std::vector<float>& m() { return m_; }
    std::vector<float>& v() { return v_; }
    std::int64_t& t() { return t_; }

private:
    double lr_, beta1_, beta2_, eps_;
    std::int64_t t_ = 0;
    std::vector<float> m_, v_;
};

/// One prepared recording: cached features plus reference boundaries.
struct DatasetItem {
    std::string piece_id;
    std::string version_id;
    Matf mel;
    BoundarySet ref;
};

struct PreparedData {
    std::vector<DatasetItem> train, val, test;
};

/// Mel features for one manifest entry, via the binary feature cache when a
/// cache directory is given.
Matf features_for(const ManifestEntry& entry, const DspConfig& dsp,
                  const std::string& cache_dir);

/// Loads features and boundaries for every record, grouped by split subset.
/// Re-asserts the leakage contract: every piece must be assigned to exactly
/// one subset covering the whole manifest.
PreparedData prepare_dataset(const Manifest& manifest, const SplitAssignment& split,
                             const DspConfig& dsp, const std::string& cache_dir);

struct EpochLog {
    int epoch = 0;
    double train_loss = 0.0;
    double val_p = 0.0, val_r = 0.0, val_f = 0.0;
    double seconds = 0.0;
};

std::string format_epoch_log(const EpochLog& log);

struct DivergenceError : std::runtime_error {
    DivergenceError(int epoch_, std::string piece_, const std::string& what_)
        : std::runtime_error(what_), epoch(epoch_), piece(std::move(piece_)) {}
    int epoch;
    std::string piece;
};

struct TrainResult {
    ModelConfig model;
    std::vector<float> best_params;
    double best_val_hr3f = 0.0;
    int best_epoch = 0;
    int epochs_run = 0;
    std::vector<EpochLog> logs;
};

/// Full-sequence steps, one piece per update, Adam, early stopping on
/// validation HR3F. Deterministic for a fixed seed. `resume` continues from
/// a state checkpoint written by save_train_state.
TrainResult train(const PreparedData& data, const ModelConfig& model_cfg,
                  const TrainConfig& train_cfg, const PostConfig& post_cfg,
                  const DspConfig& dsp_cfg, std::ostream* log_stream = nullptr,
                  const LoadedCheckpoint* resume = nullptr);

/// Writes a resumable state checkpoint (current params + optimizer moments +
/// best-so-far parameters) alongside the plain best-parameter checkpoint.
void save_train_state(const std::string& path, const Network<float>& net,
                      const Adam& adam, const TrainResult& progress,
                      const TrainConfig& tc, const DspConfig& dsp);

/// Evaluate a model over a set of items (forward, postprocess, hit rate).
EvalReport evaluate_items(const Network<float>& net, const std::vector<DatasetItem>& items,
                          const PostConfig& post_cfg, const DspConfig& dsp_cfg,
                          double tol_s);

struct GridCell {
    ModelConfig config;
    bool failed = false;
    std::string error;
    double p = 0.0, r = 0.0, f = 0.0;
    int best_epoch = 0;
};

struct GridSpec {
    std::vector<int> channels;
    std::vector<int> hidden;
    std::vector<int> layers;
};

/// Trains every configuration in the grid and returns cells sorted by
/// validation HR3F (failed cells last, marked with their error).
std::vector<GridCell> grid_search(const PreparedData& data, const ModelConfig& base,
                                  const TrainConfig& train_cfg, const PostConfig& post_cfg,
                                  const DspConfig& dsp_cfg, const GridSpec& grid,
                                  std::ostream* progress = nullptr);

}  // namespace sonalyzer

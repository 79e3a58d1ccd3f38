#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "sonalyzer/common.hpp"
#include "sonalyzer/features.hpp"
#include "sonalyzer/loss.hpp"
#include "sonalyzer/rng.hpp"

namespace sonalyzer {

struct ModelConfig {
    int channels = 10;  // C, output width of the embedding
    int h_lstm = 1024;
    int l_lstm = 5;
    int gamma = 43;  // frames per aggregation window, ~one second
    int n_mels = 128;
    int mlp_hidden = 0;  // 0 -> h_lstm / 4

    bool use_agg = true;
    bool use_pe = true;
    bool use_dssm_sum = true;
    bool use_dssm_mean = true;
    bool use_lstm = true;

    int mlp_hidden_size() const {
        return mlp_hidden > 0 ? mlp_hidden : std::max(1, h_lstm / 4);
    }
    FeatureToggles toggles() const { return {use_pe, use_dssm_sum, use_dssm_mean}; }
    Index sigma_width() const {
        return use_agg ? static_cast<Index>(gamma) * channels : channels;
    }
    Index augmented_width() const { return sigma_width() + toggles().extra_width(); }
    Index mlp_input_width() const { return use_lstm ? h_lstm : augmented_width(); }

    void validate() const {
        if (channels < 1) throw ContractError("channels must be >= 1");
        if (h_lstm < 1) throw ContractError("h_lstm must be >= 1");
        if (l_lstm < 1) throw ContractError("l_lstm must be >= 1");
        if (gamma < 1) throw ContractError("gamma must be >= 1");
        if (n_mels < 4 || n_mels % 4 != 0)
            throw ContractError("n_mels must be a positive multiple of 4");
        if (mlp_hidden < 0) throw ContractError("mlp_hidden must be >= 0");
    }
};

/// Flat parameter storage with a named-tensor registry. Tensors are
/// column-major contiguous slices of one buffer, so the optimizer and the
/// finite-difference checker can treat the whole model as a single vector.
template <class S>
class ParamStore {
public:
    struct Entry {
        std::string name;
        Index offset, rows, cols;
        Index size() const { return rows * cols; }
    };

    Index add(std::string name, Index rows, Index cols) {
        entries_.push_back({std::move(name), total_, rows, cols});
        total_ += rows * cols;
        return static_cast<Index>(entries_.size()) - 1;
    }

    void allocate() {
        data_.assign(static_cast<std::size_t>(total_), S(0));
        grad_.assign(static_cast<std::size_t>(total_), S(0));
    }

    Index size() const { return total_; }
    const std::vector<Entry>& entries() const { return entries_; }

    Eigen::Map<Mat<S>> tensor(Index idx) {
        const Entry& e = entries_[static_cast<std::size_t>(idx)];
        return {data_.data() + e.offset, e.rows, e.cols};
    }
    Eigen::Map<const Mat<S>> tensor(Index idx) const {
        const Entry& e = entries_[static_cast<std::size_t>(idx)];
        return {data_.data() + e.offset, e.rows, e.cols};
    }
    Eigen::Map<Mat<S>> grad(Index idx) {
        const Entry& e = entries_[static_cast<std::size_t>(idx)];
        return {grad_.data() + e.offset, e.rows, e.cols};
    }
    Eigen::Map<const Mat<S>> grad(Index idx) const {
        const Entry& e = entries_[static_cast<std::size_t>(idx)];
        return {grad_.data() + e.offset, e.rows, e.cols};
    }

    std::vector<S>& data() { return data_; }
    const std::vector<S>& data() const { return data_; }
    std::vector<S>& grad_data() { return grad_; }
    const std::vector<S>& grad_data() const { return grad_; }

    void zero_grad() { std::fill(grad_.begin(), grad_.end(), S(0)); }

    /// Name of the tensor owning flat position i.
    const std::string& name_at(Index i) const {
        for (const auto& e : entries_)
            if (i >= e.offset && i < e.offset + e.size()) return e.name;
        throw ContractError("parameter index out of range");
    }

    /// Throws on any non-finite gradient, naming the offending tensor.
    void assert_finite_grads() const {
        for (const auto& e : entries_)
            for (Index i = e.offset; i < e.offset + e.size(); ++i)
                if (!std::isfinite(grad_[static_cast<std::size_t>(i)]))
                    throw std::runtime_error("non-finite gradient in " + e.name);
    }

private:
    std::vector<Entry> entries_;
    Index total_ = 0;
    std::vector<S> data_;
    std::vector<S> grad_;
};

template <class S>
struct ForwardCache {
    using ChannelStack = std::vector<Mat<S>>;
    using MaskMat = Eigen::Matrix<std::int8_t, Eigen::Dynamic, Eigen::Dynamic>;

    std::vector<ChannelStack> conv_in;   // input stack of each conv layer
    std::vector<ChannelStack> conv_act;  // post-ReLU output of each conv layer
    std::vector<std::vector<MaskMat>> pool_sel;  // argmax row of each 2x1 pool
    Mat<S> embedded;                             // l_f x C

    Mat<S> sigma;  // N x sigma_width
    Vec<S> norms;  // row norms of sigma
    Mat<S> dssm;
    Vec<S> usum;   // N - rowsum(dssm)
    Index arg_lo = 0, arg_hi = 0;
    Mat<S> stats;      // normalized [sum, mean]
    Mat<S> augmented;  // sigma'

    struct LstmLayer {
        Mat<S> x;                        // input sequence, N x in_dim
        Mat<S> i, f, g, o, c, tanh_c, h; // N x h each
    };
    std::vector<LstmLayer> lstm;

    Mat<S> mlp_in;
    Mat<S> mlp_h;  // post-ReLU hidden
    Vec<S> logits;
};

/// The trainable model: 3-layer conv embedding over the mel-spectrogram,
/// optional per-second aggregation with positional and self-similarity
/// context, an LSTM stack, and a per-frame boundary logit head.
template <class S>
class Network {
public:
    explicit Network(ModelConfig cfg) : cfg_(cfg) {
        cfg_.validate();
        const int c = cfg_.channels;
        conv_w_[0] = params_.add("conv1.w", 1 * 9, c);
        conv_b_[0] = params_.add("conv1.b", c, 1);
        conv_w_[1] = params_.add("conv2.w", static_cast<Index>(c) * 9, c);
        conv_b_[1] = params_.add("conv2.b", c, 1);
        conv_w_[2] = params_.add("conv3.w", static_cast<Index>(c) * 9, c);
        conv_b_[2] = params_.add("conv3.b", c, 1);
        if (cfg_.use_lstm) {
            Index in_dim = cfg_.augmented_width();
            for (int l = 0; l < cfg_.l_lstm; ++l) {
                const std::string p = "lstm" + std::to_string(l);
                lstm_wx_.push_back(params_.add(p + ".w_x", 4 * cfg_.h_lstm, in_dim));
                lstm_wh_.push_back(params_.add(p + ".w_h", 4 * cfg_.h_lstm, cfg_.h_lstm));
                lstm_b_.push_back(params_.add(p + ".b", 4 * cfg_.h_lstm, 1));
                in_dim = cfg_.h_lstm;
            }
        }
        const Index mh = cfg_.mlp_hidden_size();
        mlp_w1_ = params_.add("mlp.w1", mh, cfg_.mlp_input_width());
        mlp_b1_ = params_.add("mlp.b1", mh, 1);
        mlp_w2_ = params_.add("mlp.w2", 1, mh);
        mlp_b2_ = params_.add("mlp.b2", 1, 1);
        params_.allocate();
    }

    const ModelConfig& config() const { return cfg_; }
    ParamStore<S>& params() { return params_; }
    const ParamStore<S>& params() const { return params_; }

    static std::int64_t parameter_count(const ModelConfig& cfg) {
        cfg.validate();
        const std::int64_t c = cfg.channels, h = cfg.h_lstm;
        std::int64_t total = (1 + c + c) * c * 9 + 3 * c;  // conv weights + biases
        if (cfg.use_lstm) {
            std::int64_t in_dim = cfg.augmented_width();
            for (int l = 0; l < cfg.l_lstm; ++l) {
                total += 4 * h * (in_dim + h) + 4 * h;
                in_dim = h;
            }
        }
        const std::int64_t mh = cfg.mlp_hidden_size();
        total += mh * cfg.mlp_input_width() + mh + mh + 1;
        return total;
    }

    /// Uniform fan-in scaled init; biases zero except the LSTM forget gate.
    void init(std::uint64_t seed) {
        Rng rng(seed);
        auto fill_uniform = [&](Index idx, Index fan_in) {
            auto t = params_.tensor(idx);
            const double bound = 1.0 / std::sqrt(static_cast<double>(fan_in));
            for (Index j = 0; j < t.cols(); ++j)
                for (Index i = 0; i < t.rows(); ++i)
                    t(i, j) = static_cast<S>(rng.uniform(-bound, bound));
        };
        fill_uniform(conv_w_[0], 9);
        fill_uniform(conv_w_[1], static_cast<Index>(cfg_.channels) * 9);
        fill_uniform(conv_w_[2], static_cast<Index>(cfg_.channels) * 9);
        for (int k = 0; k < 3; ++k) params_.tensor(conv_b_[k]).setZero();
        if (cfg_.use_lstm) {
            Index in_dim = cfg_.augmented_width();
            for (int l = 0; l < cfg_.l_lstm; ++l) {
                fill_uniform(lstm_wx_[static_cast<std::size_t>(l)], in_dim);
                fill_uniform(lstm_wh_[static_cast<std::size_t>(l)], cfg_.h_lstm);
                auto b = params_.tensor(lstm_b_[static_cast<std::size_t>(l)]);
                b.setZero();
                b.block(cfg_.h_lstm, 0, cfg_.h_lstm, 1).setConstant(S(1));
                in_dim = cfg_.h_lstm;
            }
        }
        fill_uniform(mlp_w1_, cfg_.mlp_input_width());
        params_.tensor(mlp_b1_).setZero();
        fill_uniform(mlp_w2_, cfg_.mlp_hidden_size());
        params_.tensor(mlp_b2_).setZero();
    }

    /// Conv embedding only: n_mels x l_f in, l_f x C out.
    Mat<S> embed(const Mat<S>& mel) const {
        ForwardCache<S> cache;
        run_conv(mel, cache);
        return std::move(cache.embedded);
    }

    Vec<S> forward(const Mat<S>& mel) const {
        ForwardCache<S> cache;
        return forward(mel, cache);
    }

    Vec<S> forward(const Mat<S>& mel, ForwardCache<S>& cache) const {
        run_conv(mel, cache);

        if (cfg_.use_agg) {
            if (cache.embedded.rows() < cfg_.gamma)
                throw ContractError("l_f < gamma: too few frames to aggregate");
            cache.sigma = aggregate(cache.embedded, cfg_.gamma);
        } else {
            cache.sigma = cache.embedded;
        }
        const Index n = cache.sigma.rows();

        Mat<S> pe, stats;
        if (cfg_.use_pe) pe = single_cycle_pe<S>(n);
        if (cfg_.use_dssm_sum || cfg_.use_dssm_mean) {
            cache.norms.resize(n);
            for (Index i = 0; i < n; ++i) cache.norms(i) = cache.sigma.row(i).norm();
            cache.dssm = dssm(cache.sigma);
            cache.usum.resize(n);
            for (Index i = 0; i < n; ++i)
                cache.usum(i) = static_cast<S>(n) - cache.dssm.row(i).sum();
            cache.usum.minCoeff(&cache.arg_lo);
            cache.usum.maxCoeff(&cache.arg_hi);
            stats = dssm_stats(cache.dssm);
            cache.stats = stats;
        }
        cache.augmented = concat_features(cache.sigma, pe, stats, cfg_.toggles());

        if (cfg_.use_lstm) {
            cache.lstm.clear();
            Mat<S> x = cache.augmented;
            for (int l = 0; l < cfg_.l_lstm; ++l) {
                cache.lstm.push_back(run_lstm_layer(l, x));
                x = cache.lstm.back().h;
            }
            cache.mlp_in = x;
        } else {
            cache.mlp_in = cache.augmented;
        }

        run_mlp(cache);
        return cache.logits;
    }

    /// Accumulates dLoss/dParams into params().grad given dLoss/dLogits.
    void backward(const ForwardCache<S>& cache, const Vec<S>& dlogits) {
        Mat<S> d_mlp_in = backward_mlp(cache, dlogits);

        Mat<S> d_augmented;
        if (cfg_.use_lstm) {
            Mat<S> dh = d_mlp_in;
            for (int l = cfg_.l_lstm - 1; l >= 0; --l)
                dh = backward_lstm_layer(l, cache.lstm[static_cast<std::size_t>(l)], dh);
            d_augmented = dh;
        } else {
            d_augmented = d_mlp_in;
        }

        // split sigma' gradient by column layout [sigma | sin cos | sum | mean]
        const Index n = cache.sigma.rows();
        const Index w0 = cache.sigma.cols();
        Mat<S> d_sigma = d_augmented.leftCols(w0);
        Index col = w0 + (cfg_.use_pe ? 2 : 0);  // PE columns carry no gradient
        Vec<S> d_stat_sum = Vec<S>::Zero(n), d_stat_mean = Vec<S>::Zero(n);
        if (cfg_.use_dssm_sum) d_stat_sum = d_augmented.col(col++);
        if (cfg_.use_dssm_mean) d_stat_mean = d_augmented.col(col++);

        if (cfg_.use_dssm_sum || cfg_.use_dssm_mean)
            backward_dssm(cache, d_stat_sum, d_stat_mean, d_sigma);

        Mat<S> d_embedded;
        if (cfg_.use_agg) {
            d_embedded = Mat<S>::Zero(cache.embedded.rows(), cache.embedded.cols());
            d_embedded.topRows(n * cfg_.gamma) = unaggregate(d_sigma, cfg_.gamma);
        } else {
            d_embedded = d_sigma;
        }

        backward_conv(cache, d_embedded);
    }

private:
    // ---- conv stage ----------------------------------------------------

    static void conv3x3(const std::vector<Mat<S>>& in,
                        Eigen::Map<const Mat<S>> w, Eigen::Map<const Mat<S>> b,
                        std::vector<Mat<S>>& out) {
        const Index rows = in[0].rows(), cols = in[0].cols();
        const auto out_ch = static_cast<std::size_t>(w.cols());
        out.assign(out_ch, Mat<S>());
        for (std::size_t oc = 0; oc < out_ch; ++oc) {
            Mat<S>& o = out[oc];
            o.setConstant(rows, cols, b(static_cast<Index>(oc), 0));
            for (std::size_t ic = 0; ic < in.size(); ++ic)
                for (int dy = -1; dy <= 1; ++dy)
                    for (int dx = -1; dx <= 1; ++dx) {
                        const Index nr = rows - std::abs(dy), nc = cols - std::abs(dx);
                        if (nr <= 0 || nc <= 0) continue;
                        const Index r0 = std::max(0, -dy), c0 = std::max(0, -dx);
                        const S wk = w(static_cast<Index>(ic) * 9 + (dy + 1) * 3 + (dx + 1),
                                       static_cast<Index>(oc));
                        o.block(r0, c0, nr, nc) +=
                            wk * in[ic].block(r0 + dy, c0 + dx, nr, nc);
                    }
        }
    }

    void run_conv(const Mat<S>& mel, ForwardCache<S>& cache) const {
        if (mel.rows() != cfg_.n_mels)
            throw ContractError("mel-spectrogram must have n_mels rows");
        if (mel.cols() < 1) throw ContractError("mel-spectrogram has no frames");

        cache.conv_in.assign(3, {});
        cache.conv_act.assign(3, {});
        cache.pool_sel.assign(2, {});
        cache.conv_in[0] = {mel};
        for (int layer = 0; layer < 3; ++layer) {
            conv3x3(cache.conv_in[static_cast<std::size_t>(layer)],
                    params_.tensor(conv_w_[layer]), params_.tensor(conv_b_[layer]),
                    cache.conv_act[static_cast<std::size_t>(layer)]);
            for (auto& ch : cache.conv_act[static_cast<std::size_t>(layer)])
                ch = ch.cwiseMax(S(0));
            if (layer < 2) {
                auto& next = cache.conv_in[static_cast<std::size_t>(layer) + 1];
                auto& sel = cache.pool_sel[static_cast<std::size_t>(layer)];
                for (const auto& ch : cache.conv_act[static_cast<std::size_t>(layer)]) {
                    const Index half = ch.rows() / 2, cols = ch.cols();
                    Mat<S> pooled(half, cols);
                    typename ForwardCache<S>::MaskMat mask(half, cols);
                    for (Index y = 0; y < half; ++y)
                        for (Index x = 0; x < cols; ++x) {
                            const S a = ch(2 * y, x), bb = ch(2 * y + 1, x);
                            mask(y, x) = bb > a ? 1 : 0;
                            pooled(y, x) = bb > a ? bb : a;
                        }
                    next.push_back(std::move(pooled));
                    sel.push_back(std::move(mask));
                }
            }
        }
        // adaptive average pooling collapses the frequency axis to 1
        const auto& last = cache.conv_act[2];
        const Index t_len = last[0].cols(), freq = last[0].rows();
        cache.embedded.resize(t_len, cfg_.channels);
        for (int c = 0; c < cfg_.channels; ++c)
            cache.embedded.col(c) =
                last[static_cast<std::size_t>(c)].colwise().sum().transpose() /
                static_cast<S>(freq);
    }

    void backward_conv(const ForwardCache<S>& cache, const Mat<S>& d_embedded) {
        const auto& last = cache.conv_act[2];
        const Index freq = last[0].rows();
        std::vector<Mat<S>> d_act(static_cast<std::size_t>(cfg_.channels));
        for (int c = 0; c < cfg_.channels; ++c)
            d_act[static_cast<std::size_t>(c)] =
                Vec<S>::Constant(freq, S(1) / static_cast<S>(freq)) *
                d_embedded.col(c).transpose();

        for (int layer = 2; layer >= 0; --layer) {
            const auto& act = cache.conv_act[static_cast<std::size_t>(layer)];
            const auto& in = cache.conv_in[static_cast<std::size_t>(layer)];
            // ReLU mask
            for (std::size_t ch = 0; ch < d_act.size(); ++ch)
                d_act[ch] = d_act[ch].cwiseProduct(
                    (act[ch].array() > S(0)).template cast<S>().matrix());

            auto w = params_.tensor(conv_w_[layer]);
            auto dw = params_.grad(conv_w_[layer]);
            auto db = params_.grad(conv_b_[layer]);
            const Index rows = in[0].rows(), cols = in[0].cols();
            std::vector<Mat<S>> d_in(in.size(), Mat<S>::Zero(rows, cols));
            for (std::size_t oc = 0; oc < d_act.size(); ++oc) {
                db(static_cast<Index>(oc), 0) += d_act[oc].sum();
                for (std::size_t ic = 0; ic < in.size(); ++ic)
                    for (int dy = -1; dy <= 1; ++dy)
                        for (int dx = -1; dx <= 1; ++dx) {
                            const Index nr = rows - std::abs(dy), nc = cols - std::abs(dx);
                            if (nr <= 0 || nc <= 0) continue;
                            const Index r0 = std::max(0, -dy), c0 = std::max(0, -dx);
                            const Index widx =
                                static_cast<Index>(ic) * 9 + (dy + 1) * 3 + (dx + 1);
                            d_in[ic].block(r0 + dy, c0 + dx, nr, nc) +=
                                w(widx, static_cast<Index>(oc)) *
                                d_act[oc].block(r0, c0, nr, nc);
                            dw(widx, static_cast<Index>(oc)) +=
                                in[ic]
                                    .block(r0 + dy, c0 + dx, nr, nc)
                                    .cwiseProduct(d_act[oc].block(r0, c0, nr, nc))
                                    .sum();
                        }
            }
            if (layer > 0) {
                // route through the 2x1 max pool of the previous layer
                const auto& sel = cache.pool_sel[static_cast<std::size_t>(layer) - 1];
                const auto& prev_act = cache.conv_act[static_cast<std::size_t>(layer) - 1];
                std::vector<Mat<S>> routed(prev_act.size());
                for (std::size_t ch = 0; ch < prev_act.size(); ++ch) {
                    routed[ch] = Mat<S>::Zero(prev_act[ch].rows(), prev_act[ch].cols());
                    const auto& mask = sel[ch];
                    for (Index y = 0; y < mask.rows(); ++y)
                        for (Index x = 0; x < mask.cols(); ++x)
                            routed[ch](2 * y + mask(y, x), x) = d_in[ch](y, x);
                }
                d_act = std::move(routed);
            }
        }
    }

    // ---- dssm statistics -------------------------------------------------

    void backward_dssm(const ForwardCache<S>& cache, const Vec<S>& d_sum_col,
                       const Vec<S>& d_mean_col, Mat<S>& d_sigma) const {
        const Index n = cache.sigma.rows();
        // Both stat columns are min-max normalizations of u (the mean's 1/N
        // scaling cancels), so their upstream gradients combine.
        Vec<S> g = d_sum_col + d_mean_col;
        const S range = cache.usum(cache.arg_hi) - cache.usum(cache.arg_lo);
        if (!(range > S(0))) return;  // degenerate column is constant zero

        Vec<S> normalized(n);
        for (Index i = 0; i < n; ++i)
            normalized(i) = (cache.usum(i) - cache.usum(cache.arg_lo)) / range;
        const S g_total = g.sum();
        const S g_dot = g.dot(normalized);
        Vec<S> du = g / range;
        du(cache.arg_lo) -= (g_total - g_dot) / range;
        du(cache.arg_hi) -= g_dot / range;

        // u_i = N - sum_j D_ij, so dL/dD_ij = -du_i for every j.
        for (Index i = 0; i < n; ++i) {
            const S dui = -du(i);
            if (dui == S(0)) continue;
            if (cache.norms(i) < S(kCosineNormFloor)) continue;
            for (Index j = 0; j < n; ++j) {
                if (cache.norms(j) < S(kCosineNormFloor)) continue;
                const S inv = S(1) / (cache.norms(i) * cache.norms(j));
                const S dij = cache.dssm(i, j);
                d_sigma.row(i) +=
                    dui * (cache.sigma.row(j) * inv -
                           dij * cache.sigma.row(i) / (cache.norms(i) * cache.norms(i)));
                d_sigma.row(j) +=
                    dui * (cache.sigma.row(i) * inv -
                           dij * cache.sigma.row(j) / (cache.norms(j) * cache.norms(j)));
            }
        }
    }

    // ---- lstm --------------------------------------------------------------

    typename ForwardCache<S>::LstmLayer run_lstm_layer(int layer, const Mat<S>& x) const {
        const Index n = x.rows(), h = cfg_.h_lstm;
        auto wx = params_.tensor(lstm_wx_[static_cast<std::size_t>(layer)]);
        auto wh = params_.tensor(lstm_wh_[static_cast<std::size_t>(layer)]);
        auto b = params_.tensor(lstm_b_[static_cast<std::size_t>(layer)]);

        typename ForwardCache<S>::LstmLayer st;
        st.x = x;
        st.i.resize(n, h); st.f.resize(n, h); st.g.resize(n, h); st.o.resize(n, h);
        st.c.resize(n, h); st.tanh_c.resize(n, h); st.h.resize(n, h);

        Vec<S> h_prev = Vec<S>::Zero(h), c_prev = Vec<S>::Zero(h);
        for (Index t = 0; t < n; ++t) {
            Vec<S> z = wx * x.row(t).transpose() + wh * h_prev + b.col(0);
            for (Index k = 0; k < h; ++k) {
                const S vi = stable_sigmoid(z(k));
                const S vf = stable_sigmoid(z(h + k));
                const S vg = std::tanh(z(2 * h + k));
                const S vo = stable_sigmoid(z(3 * h + k));
                const S vc = vf * c_prev(k) + vi * vg;
                st.i(t, k) = vi; st.f(t, k) = vf; st.g(t, k) = vg; st.o(t, k) = vo;
                st.c(t, k) = vc;
                st.tanh_c(t, k) = std::tanh(vc);
                st.h(t, k) = vo * st.tanh_c(t, k);
            }
            h_prev = st.h.row(t).transpose();
            c_prev = st.c.row(t).transpose();
        }
        return st;
    }

    Mat<S> backward_lstm_layer(int layer, const typename ForwardCache<S>::LstmLayer& st,
                               const Mat<S>& dh_seq) {
        const Index n = st.x.rows(), h = cfg_.h_lstm;
        auto wx = params_.tensor(lstm_wx_[static_cast<std::size_t>(layer)]);
        auto wh = params_.tensor(lstm_wh_[static_cast<std::size_t>(layer)]);
        auto dwx = params_.grad(lstm_wx_[static_cast<std::size_t>(layer)]);
        auto dwh = params_.grad(lstm_wh_[static_cast<std::size_t>(layer)]);
        auto db = params_.grad(lstm_b_[static_cast<std::size_t>(layer)]);

        Mat<S> dx = Mat<S>::Zero(n, st.x.cols());
        Vec<S> dh_next = Vec<S>::Zero(h), dc_next = Vec<S>::Zero(h);
        Vec<S> dz(4 * h);
        for (Index t = n - 1; t >= 0; --t) {
            for (Index k = 0; k < h; ++k) {
                const S dht = dh_seq(t, k) + dh_next(k);
                const S tc = st.tanh_c(t, k);
                const S dot = dht * tc;
                S dc = dht * st.o(t, k) * (S(1) - tc * tc) + dc_next(k);
                const S c_prev = t > 0 ? st.c(t - 1, k) : S(0);
                const S di = dc * st.g(t, k);
                const S df = dc * c_prev;
                const S dg = dc * st.i(t, k);
                dz(k) = di * st.i(t, k) * (S(1) - st.i(t, k));
                dz(h + k) = df * st.f(t, k) * (S(1) - st.f(t, k));
                dz(2 * h + k) = dg * (S(1) - st.g(t, k) * st.g(t, k));
                dz(3 * h + k) = dot * st.o(t, k) * (S(1) - st.o(t, k));
                dc_next(k) = dc * st.f(t, k);
            }
            dwx.noalias() += dz * st.x.row(t);
            if (t > 0) dwh.noalias() += dz * st.h.row(t - 1);
            db.col(0) += dz;
            dx.row(t) = (wx.transpose() * dz).transpose();
            dh_next = wh.transpose() * dz;
        }
        return dx;
    }

    // ---- mlp ----------------------------------------------------------------

    void run_mlp(ForwardCache<S>& cache) const {
        auto w1 = params_.tensor(mlp_w1_);
        auto b1 = params_.tensor(mlp_b1_);
        auto w2 = params_.tensor(mlp_w2_);
        auto b2 = params_.tensor(mlp_b2_);
        Mat<S> hidden = cache.mlp_in * w1.transpose();
        hidden.rowwise() += b1.col(0).transpose();
        cache.mlp_h = hidden.cwiseMax(S(0));
        cache.logits = cache.mlp_h * w2.row(0).transpose();
        cache.logits.array() += b2(0, 0);
    }

    Mat<S> backward_mlp(const ForwardCache<S>& cache, const Vec<S>& dlogits) {
        auto w1 = params_.tensor(mlp_w1_);
        auto w2 = params_.tensor(mlp_w2_);
        params_.grad(mlp_w2_).row(0).noalias() +=
            (dlogits.transpose() * cache.mlp_h);
        params_.grad(mlp_b2_)(0, 0) += dlogits.sum();
        Mat<S> dh = dlogits * w2.row(0);
        dh = dh.cwiseProduct((cache.mlp_h.array() > S(0)).template cast<S>().matrix());
        params_.grad(mlp_w1_).noalias() += dh.transpose() * cache.mlp_in;
        params_.grad(mlp_b1_).col(0).noalias() += dh.colwise().sum().transpose();
        return dh * w1;
    }

    ModelConfig cfg_;
    ParamStore<S> params_;
    Index conv_w_[3] = {0, 0, 0}, conv_b_[3] = {0, 0, 0};
    std::vector<Index> lstm_wx_, lstm_wh_, lstm_b_;
    Index mlp_w1_ = 0, mlp_b1_ = 0, mlp_w2_ = 0, mlp_b2_ = 0;
};

struct GradCheckReport {
    double max_rel_error = 0.0;
    std::string worst_param;
    bool pass = false;
    std::int64_t n_params = 0;
};

/// Central finite differences against the analytic gradients on a full
/// forward/backward pass with weighted BCE loss. Meant for tiny configs in
/// 64-bit arithmetic.
GradCheckReport check_gradients(const ModelConfig& cfg, std::uint64_t seed,
                                double tolerance, double fd_step = 1e-5);

}  // namespace sonalyzer

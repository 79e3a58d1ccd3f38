#include <cmath>

#include "sonalyzer/network.hpp"

namespace sonalyzer {

namespace {

// Deterministic gradcheck problem: a random nonnegative mel patch and a
// sparse boundary target with smeared neighbors.
struct Problem {
    Matd mel;
    Vecd targets;
    double pos_weight = 3.0;
};

Problem make_problem(const ModelConfig& cfg, std::uint64_t seed) {
    Rng rng(Rng::mix(seed, 0xC0FFEE));
    const Index n_agg = 6;
    const Index l_f = cfg.use_agg ? n_agg * cfg.gamma : n_agg;
    Problem p;
    p.mel.resize(cfg.n_mels, l_f);
    for (Index j = 0; j < l_f; ++j)
        for (Index i = 0; i < cfg.n_mels; ++i)
            p.mel(i, j) = rng.uniform(0.0, 1.0);
    const Index n = cfg.use_agg ? l_f / cfg.gamma : l_f;
    p.targets = Vecd::Zero(n);
    p.targets(n / 3) = 1.0;
    if (n / 3 > 0) p.targets(n / 3 - 1) = 0.5;
    if (n / 3 + 1 < n) p.targets(n / 3 + 1) = 0.5;
    return p;
}

double loss_of(const Network<double>& net, const Problem& p) {
    const Vecd logits = net.forward(p.mel);
    return bce_with_logits(logits, p.targets, p.pos_weight);
}

}  // namespace

GradCheckReport check_gradients(const ModelConfig& cfg, std::uint64_t seed,
                                double tolerance, double fd_step) {
    Network<double> net(cfg);
    net.init(seed);
    const Problem p = make_problem(cfg, seed);

    net.params().zero_grad();
    ForwardCache<double> cache;
    const Vecd logits = net.forward(p.mel, cache);
    const Vecd dlogits = bce_with_logits_grad(logits, p.targets, p.pos_weight);
    net.backward(cache, dlogits);
    const std::vector<double> analytic = net.params().grad_data();

    GradCheckReport report;
    report.n_params = static_cast<std::int64_t>(analytic.size());
    auto& theta = net.params().data();
    for (std::size_t i = 0; i < theta.size(); ++i) {
        const double orig = theta[i];
        theta[i] = orig + fd_step;
        const double lp = loss_of(net, p);
        theta[i] = orig - fd_step;
        const double lm = loss_of(net, p);
        theta[i] = orig;
        const double numeric = (lp - lm) / (2.0 * fd_step);
        const double denom = std::max(1e-6, std::abs(analytic[i]) + std::abs(numeric));
        const double rel = std::abs(analytic[i] - numeric) / denom;
        if (rel > report.max_rel_error) {
            report.max_rel_error = rel;
            report.worst_param = net.params().name_at(static_cast<Index>(i));
        }
    }
    report.pass = report.max_rel_error < tolerance;
    return report;
}

}  // namespace sonalyzer

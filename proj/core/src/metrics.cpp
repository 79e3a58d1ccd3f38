#include "sonalyzer/metrics.hpp"

#include <cmath>
#include <cstdio>

#include <json.hpp>

namespace sonalyzer {

namespace {

// Kuhn's augmenting-path maximum bipartite matching on the tolerance graph.
// Boundary counts per piece are small, so O(V*E) is plenty.
struct Matcher {
    const std::vector<std::vector<int>>& adj;  // ref -> admissible est indices
    std::vector<int> est_match;                // est -> ref or -1
    std::vector<char> visited;

    bool try_augment(int r) {
        for (int e : adj[static_cast<std::size_t>(r)]) {
            if (visited[static_cast<std::size_t>(e)]) continue;
            visited[static_cast<std::size_t>(e)] = 1;
            if (est_match[static_cast<std::size_t>(e)] < 0 ||
                try_augment(est_match[static_cast<std::size_t>(e)])) {
                est_match[static_cast<std::size_t>(e)] = r;
                return true;
            }
        }
        return false;
    }
};

}  // namespace

std::size_t match_boundaries(const BoundarySet& ref, const BoundarySet& est,
                             double tol_s) {
    if (tol_s <= 0.0) throw ContractError("tolerance must be positive");
    const auto nr = ref.times_s.size(), ne = est.times_s.size();
    std::vector<std::vector<int>> adj(nr);
    for (std::size_t r = 0; r < nr; ++r)
        for (std::size_t e = 0; e < ne; ++e)
            if (std::abs(ref.times_s[r] - est.times_s[e]) <= tol_s)
                adj[r].push_back(static_cast<int>(e));

    Matcher m{adj, std::vector<int>(ne, -1), {}};
    std::size_t matched = 0;
    for (std::size_t r = 0; r < nr; ++r) {
        m.visited.assign(ne, 0);
        if (m.try_augment(static_cast<int>(r))) ++matched;
    }
    return matched;
}

HitRate hit_rate(const BoundarySet& ref, const BoundarySet& est, double tol_s) {
    HitRate hr;
    hr.n_ref = ref.times_s.size();
    hr.n_est = est.times_s.size();
    if (hr.n_ref == 0 && hr.n_est == 0) {
        hr.precision = hr.recall = hr.f1 = 1.0;
        return hr;
    }
    hr.tp = match_boundaries(ref, est, tol_s);
    hr.precision = hr.n_est > 0 ? static_cast<double>(hr.tp) / hr.n_est : 0.0;
    hr.recall = hr.n_ref > 0 ? static_cast<double>(hr.tp) / hr.n_ref : 0.0;
    const double pr = hr.precision + hr.recall;
    hr.f1 = pr > 0.0 ? 2.0 * hr.precision * hr.recall / pr : 0.0;
    return hr;
}

EvalReport aggregate_report(std::vector<PieceResult> pieces, double tol_s) {
    if (pieces.empty()) throw ContractError("aggregate_report needs at least one piece");
    EvalReport report;
    report.tolerance_s = tol_s;
    report.per_piece = std::move(pieces);

    std::size_t tp = 0, n_ref = 0, n_est = 0;
    for (const auto& p : report.per_piece) {
        report.macro.precision += p.hr.precision;
        report.macro.recall += p.hr.recall;
        report.macro.f1 += p.hr.f1;
        tp += p.hr.tp;
        n_ref += p.hr.n_ref;
        n_est += p.hr.n_est;
    }
    const auto n = static_cast<double>(report.per_piece.size());
    report.macro.precision /= n;
    report.macro.recall /= n;
    report.macro.f1 /= n;

    report.micro.tp = tp;
    report.micro.n_ref = n_ref;
    report.micro.n_est = n_est;
    if (n_ref == 0 && n_est == 0) {
        report.micro.precision = report.micro.recall = report.micro.f1 = 1.0;
    } else {
        report.micro.precision = n_est > 0 ? static_cast<double>(tp) / n_est : 0.0;
        report.micro.recall = n_ref > 0 ? static_cast<double>(tp) / n_ref : 0.0;
        const double pr = report.micro.precision + report.micro.recall;
        report.micro.f1 = pr > 0.0 ? 2.0 * report.micro.precision * report.micro.recall / pr : 0.0;
    }
    return report;
}

namespace {

nlohmann::json hr_to_json(const HitRate& hr) {
    return nlohmann::json{{"precision", hr.precision}, {"recall", hr.recall},
                          {"f1", hr.f1},               {"tp", hr.tp},
                          {"n_ref", hr.n_ref},         {"n_est", hr.n_est}};
}

}  // namespace

std::string report_to_json(const EvalReport& report) {
    nlohmann::json per_piece = nlohmann::json::array();
    for (const auto& p : report.per_piece) {
        auto j = hr_to_json(p.hr);
        j["piece_id"] = p.piece_id;
        j["version_id"] = p.version_id;
        per_piece.push_back(std::move(j));
    }
    nlohmann::json j{{"tolerance_s", report.tolerance_s},
                     {"per_piece", per_piece},
                     {"macro", hr_to_json(report.macro)},
                     {"micro", hr_to_json(report.micro)}};
    return j.dump(2) + "\n";
}

std::string report_to_table(const EvalReport& report) {
    auto row = [](const std::string& name, const HitRate& hr) {
        char buf[160];
        std::snprintf(buf, sizeof buf, "%s\t%.2f\t%.2f\t%.2f\n", name.c_str(),
                      100.0 * hr.precision, 100.0 * hr.recall, 100.0 * hr.f1);
        return std::string(buf);
    };
    std::string out = "piece\tHR3P\tHR3R\tHR3F\n";
    for (const auto& p : report.per_piece)
        out += row(p.piece_id + "/" + p.version_id, p.hr);
    out += row("macro", report.macro);
    out += row("micro", report.micro);
    return out;
}

}  // namespace sonalyzer

#pragma once

#include <string>
#include <vector>

#include "sonalyzer/annotations.hpp"

namespace sonalyzer {

struct HitRate {
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    std::size_t tp = 0;
    std::size_t n_ref = 0;
    std::size_t n_est = 0;
};

struct PieceResult {
    std::string piece_id;
    std::string version_id;
    HitRate hr;
};

struct EvalReport {
    double tolerance_s = 3.0;
    std::vector<PieceResult> per_piece;
    HitRate macro;  // unweighted mean over pieces (headline number)
    HitRate micro;  // pooled counts
};

/// Maximum-cardinality one-to-one matching between reference and estimated
/// boundaries where a pair may match only if |r - e| <= tol_s. Returns the
/// number of matched pairs.
std::size_t match_boundaries(const BoundarySet& ref, const BoundarySet& est,
                             double tol_s);

/// Precision/recall/F1 of the hit rate. Both sets empty scores perfect;
/// one empty side scores zero on the corresponding axis.
HitRate hit_rate(const BoundarySet& ref, const BoundarySet& est, double tol_s);

/// Macro (mean over pieces) and micro (pooled counts) summaries.
EvalReport aggregate_report(std::vector<PieceResult> pieces, double tol_s);

std::string report_to_json(const EvalReport& report);

/// Tab-separated table with HR3P/HR3R/HR3F columns as percentages
/// (two decimals), one row per piece plus macro and micro rows.
std::string report_to_table(const EvalReport& report);

}  // namespace sonalyzer

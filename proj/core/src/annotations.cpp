#include "sonalyzer/annotations.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "sonalyzer/rng.hpp"

namespace sonalyzer {

using nlohmann::json;

const char* to_string(Level level) {
    return level == Level::structure ? "structure" : "thematic";
}

std::optional<Level> level_from_string(const std::string& s) {
    if (s == "structure") return Level::structure;
    if (s == "thematic") return Level::thematic;
    return std::nullopt;
}

bool label_in_vocabulary(Level level, const std::string& label) {
    static const std::set<std::string> structure{"E", "D", "R"};
    static const std::set<std::string> thematic{"S1", "TR", "S2", "C", "DEV"};
    return level == Level::structure ? structure.count(label) > 0
                                     : thematic.count(label) > 0;
}

const char* to_string(Subset s) {
    switch (s) {
        case Subset::train: return "train";
        case Subset::val: return "val";
        default: return "test";
    }
}

std::optional<Subset> subset_from_string(const std::string& s) {
    if (s == "train") return Subset::train;
    if (s == "val") return Subset::val;
    if (s == "test") return Subset::test;
    return std::nullopt;
}

std::vector<Segment> AnnotationRecord::segments_at(Level level) const {
    std::vector<Segment> out;
    for (const auto& seg : segments)
        if (seg.level == level) out.push_back(seg);
    std::sort(out.begin(), out.end(),
              [](const Segment& a, const Segment& b) { return a.start_s < b.start_s; });
    return out;
}

namespace {

json segment_to_json(const Segment& seg) {
    json j{{"level", to_string(seg.level)},
           {"label", seg.label},
           {"start_s", seg.start_s},
           {"end_s", seg.end_s}};
    if (seg.aux) j["aux"] = *seg.aux;
    return j;
}

AnnotationRecord record_from_json(const json& j) {
    AnnotationRecord rec;
    rec.piece_id = j.at("piece_id").get<std::string>();
    rec.version_id = j.at("version_id").get<std::string>();
    rec.duration_s = j.at("duration_s").get<double>();
    for (const auto& js : j.at("segments")) {
        Segment seg;
        const auto level_str = js.at("level").get<std::string>();
        auto level = level_from_string(level_str);
        if (!level)
            throw AnnotationError("unknown segment level '" + level_str + "'");
        seg.level = *level;
        seg.label = js.at("label").get<std::string>();
        seg.start_s = js.at("start_s").get<double>();
        seg.end_s = js.at("end_s").get<double>();
        if (js.contains("aux")) seg.aux = js.at("aux").get<std::string>();
        rec.segments.push_back(std::move(seg));
    }
    return rec;
}

void check_level(const AnnotationRecord& rec, Level level,
                 std::vector<Finding>& out) {
    const auto segs = rec.segments_at(level);
    const std::string key = rec.key();
    for (const auto& seg : segs) {
        if (!label_in_vocabulary(level, seg.label))
            out.push_back({key, "label_vocabulary",
                           std::string("label '") + seg.label + "' not in " +
                               to_string(level) + "-level vocabulary"});
        if (!(seg.end_s > seg.start_s))
            out.push_back({key, "segment_order",
                           "segment end " + std::to_string(seg.end_s) +
                               " not after start " + std::to_string(seg.start_s)});
        if (seg.start_s < 0.0)
            out.push_back({key, "range", "segment start before 0"});
        if (seg.end_s > rec.duration_s + kContiguityTolS)
            out.push_back({key, "range",
                           "segment end " + std::to_string(seg.end_s) +
                               " beyond duration " + std::to_string(rec.duration_s)});
    }
    if (segs.empty()) return;
    if (std::abs(segs.front().start_s) > kContiguityTolS)
        out.push_back({key, "endpoint",
                       to_string(level) + std::string(" level does not start at 0")});
    if (std::abs(segs.back().end_s - rec.duration_s) > kContiguityTolS)
        out.push_back({key, "endpoint",
                       to_string(level) + std::string(" level does not end at piece duration")});
    for (std::size_t i = 1; i < segs.size(); ++i) {
        const double delta = segs[i].start_s - segs[i - 1].end_s;
        if (delta > kContiguityTolS)
            out.push_back({key, "gap",
                           "gap of " + std::to_string(delta) + " s before segment " +
                               std::to_string(i) + " at " + to_string(level) + " level"});
        else if (delta < -kContiguityTolS)
            out.push_back({key, "overlap",
                           "overlap of " + std::to_string(-delta) + " s before segment " +
                               std::to_string(i) + " at " + to_string(level) + " level"});
    }
}

}  // namespace

std::vector<Finding> check_record(const AnnotationRecord& record) {
    std::vector<Finding> out;
    if (!(record.duration_s > 0.0))
        out.push_back({record.key(), "duration", "duration_s must be positive"});
    check_level(record, Level::structure, out);
    check_level(record, Level::thematic, out);
    return out;
}

AnnotationRecord parse_annotation_lenient(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw AnnotationError(std::string("malformed annotation JSON: ") + e.what());
    }
    try {
        return record_from_json(j);
    } catch (const json::exception& e) {
        throw AnnotationError(std::string("annotation schema violation: ") + e.what());
    }
}

AnnotationRecord parse_annotation(const std::string& json_text) {
    AnnotationRecord rec = parse_annotation_lenient(json_text);
    auto findings = check_record(rec);
    if (!findings.empty())
        throw AnnotationError(findings.front().kind + ": " + findings.front().message);
    return rec;
}

std::string serialize_annotation(const AnnotationRecord& record) {
    json segs = json::array();
    for (const auto& seg : record.segments) segs.push_back(segment_to_json(seg));
    json j{{"piece_id", record.piece_id},
           {"version_id", record.version_id},
           {"duration_s", record.duration_s},
           {"segments", segs}};
    return j.dump(2) + "\n";
}

BoundarySet boundaries_of(const AnnotationRecord& record, Level level,
                          bool include_edges) {
    const auto segs = record.segments_at(level);
    if (segs.empty())
        throw ContractError("record " + record.key() + " has no segments at " +
                            to_string(level) + " level");
    BoundarySet bs;
    if (include_edges) bs.times_s.push_back(0.0);
    for (std::size_t i = 1; i < segs.size(); ++i)
        bs.times_s.push_back(segs[i].start_s);
    if (include_edges) bs.times_s.push_back(record.duration_s);
    return bs;
}

Manifest load_manifest(const std::string& manifest_path) {
    namespace fs = std::filesystem;
    std::ifstream in(manifest_path);
    if (!in) throw IoError("cannot open manifest: " + manifest_path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed manifest JSON: ") + e.what());
    }
    if (!j.is_array()) throw IoError("manifest must be a JSON array");

    const fs::path base = fs::path(manifest_path).parent_path();
    auto resolve = [&](const std::string& p) {
        fs::path q(p);
        return q.is_absolute() ? q.string() : (base / q).string();
    };

    Manifest m;
    for (const auto& je : j) {
        ManifestEntry entry;
        const auto ann_path = resolve(je.at("annotation").get<std::string>());
        entry.audio_path = resolve(je.at("audio").get<std::string>());
        std::ifstream ann(ann_path);
        if (!ann) throw IoError("cannot open annotation: " + ann_path);
        std::stringstream ss;
        ss << ann.rdbuf();
        entry.record = parse_annotation_lenient(ss.str());
        m.entries.push_back(std::move(entry));
    }
    return m;
}

std::vector<Finding> validate_manifest(const Manifest& manifest) {
    std::vector<Finding> out;
    std::set<std::string> seen;
    for (const auto& entry : manifest.entries) {
        const auto key = entry.record.key();
        if (!seen.insert(key).second)
            out.push_back({key, "duplicate_key", "duplicated (piece_id, version_id)"});
        auto rec_findings = check_record(entry.record);
        out.insert(out.end(), rec_findings.begin(), rec_findings.end());
    }
    return out;
}

SplitAssignment split_dataset(const Manifest& manifest,
                              std::array<int, 3> ratios, std::uint64_t seed) {
    for (int r : ratios)
        if (r <= 0) throw ContractError("split ratios must be positive");

    std::set<std::string> unique;
    for (const auto& entry : manifest.entries) unique.insert(entry.record.piece_id);
    if (unique.size() < 3)
        throw ContractError("split requires at least 3 unique pieces, got " +
                            std::to_string(unique.size()));

    std::vector<std::string> pieces(unique.begin(), unique.end());
    Rng rng(seed);
    rng.shuffle(pieces);

    const double total = static_cast<double>(ratios[0] + ratios[1] + ratios[2]);
    const auto n = static_cast<double>(pieces.size());
    std::array<std::size_t, 3> counts{};
    std::array<double, 3> frac{};
    std::size_t assigned = 0;
    for (int k = 0; k < 3; ++k) {
        const double target = n * ratios[k] / total;
        counts[k] = static_cast<std::size_t>(std::floor(target));
        frac[k] = target - std::floor(target);
        assigned += counts[k];
    }
    // Largest fractional remainder first; ties go train, val, test.
    std::array<int, 3> order{0, 1, 2};
    std::stable_sort(order.begin(), order.end(),
                     [&](int a, int b) { return frac[a] > frac[b]; });
    for (std::size_t left = pieces.size() - assigned, k = 0; left > 0; --left, ++k)
        counts[order[k % 3]] += 1;

    SplitAssignment split;
    std::size_t i = 0;
    for (int k = 0; k < 3; ++k) {
        const auto subset = static_cast<Subset>(k);
        for (std::size_t c = 0; c < counts[k]; ++c, ++i)
            split.by_piece[pieces[i]] = subset;
    }
    return split;
}

std::string serialize_split(const SplitAssignment& split) {
    json j = json::object();
    for (const auto& [piece, subset] : split.by_piece) j[piece] = to_string(subset);
    return j.dump(2) + "\n";
}

SplitAssignment parse_split(const std::string& json_text) {
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::exception& e) {
        throw IoError(std::string("malformed split JSON: ") + e.what());
    }
    SplitAssignment split;
    for (auto it = j.begin(); it != j.end(); ++it) {
        auto subset = subset_from_string(it.value().get<std::string>());
        if (!subset)
            throw IoError("unknown subset name '" + it.value().get<std::string>() + "'");
        split.by_piece[it.key()] = *subset;
    }
    return split;
}

}  // namespace sonalyzer

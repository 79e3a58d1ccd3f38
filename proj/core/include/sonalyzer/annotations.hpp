#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "sonalyzer/common.hpp"

namespace sonalyzer {

enum class Level { structure, thematic };

enum class StructureLabel { E, D, R };
enum class ThematicLabel { S1, TR, S2, C, DEV };

/// Endpoint slack allowed between adjacent segments and at piece edges.
inline constexpr double kContiguityTolS = 0.05;

const char* to_string(Level level);
std::optional<Level> level_from_string(const std::string& s);

/// True when `label` belongs to the vocabulary of `level`
/// (structure: E/D/R, thematic: S1/TR/S2/C/DEV).
bool label_in_vocabulary(Level level, const std::string& label);

struct Segment {
    Level level = Level::structure;
    std::string label;
    double start_s = 0.0;
    double end_s = 0.0;
    // Auxiliary free-text annotations (onset noise, instrumentation, ...)
    // are carried through but take no part in analysis.
    std::optional<std::string> aux;
};

struct AnnotationRecord {
    std::string piece_id;
    std::string version_id;
    double duration_s = 0.0;
    std::vector<Segment> segments;

    std::string key() const { return piece_id + "/" + version_id; }
    std::vector<Segment> segments_at(Level level) const;
};

struct ManifestEntry {
    AnnotationRecord record;
    std::string audio_path;
};

struct Manifest {
    std::vector<ManifestEntry> entries;
};

enum class Subset { train, val, test };
const char* to_string(Subset s);
std::optional<Subset> subset_from_string(const std::string& s);

struct SplitAssignment {
    std::map<std::string, Subset> by_piece;
};

/// Internal transition times of a piece, strictly increasing, in seconds.
struct BoundarySet {
    std::vector<double> times_s;

    bool empty() const { return times_s.empty(); }
    std::size_t size() const { return times_s.size(); }
};

struct Finding {
    std::string record_key;  // "piece/version", or "" for manifest-level findings
    std::string kind;        // e.g. "gap", "overlap", "duplicate_key", "range"
    std::string message;
};

struct AnnotationError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Strict parse of one serialized record; throws AnnotationError on malformed
/// syntax or on any violated record invariant.
AnnotationRecord parse_annotation(const std::string& json_text);

std::string serialize_annotation(const AnnotationRecord& record);

/// Lenient parse: syntax errors throw, invariant violations do not.
AnnotationRecord parse_annotation_lenient(const std::string& json_text);

/// All invariant violations of a single record; empty iff the record is valid.
std::vector<Finding> check_record(const AnnotationRecord& record);

/// Internal boundaries at a level: segment starts excluding time zero.
/// With include_edges the piece start and end are appended as well.
/// Throws ContractError when the record has no segments at the level.
BoundarySet boundaries_of(const AnnotationRecord& record, Level level,
                          bool include_edges = false);

/// Loads a manifest file (JSON array of {"annotation": path, "audio": path});
/// relative paths are resolved against the manifest's directory. Annotation
/// files are parsed leniently so that validate_manifest can report on them.
Manifest load_manifest(const std::string& manifest_path);

/// Every invariant violation across the manifest, with record identity.
std::vector<Finding> validate_manifest(const Manifest& manifest);

/// Piece-grouped shuffled split. Counts follow largest-remainder rounding of
/// the ratio targets (ties resolved train, val, test). Deterministic in seed.
/// Throws ContractError for fewer than 3 unique pieces or non-positive ratios.
SplitAssignment split_dataset(const Manifest& manifest,
                              std::array<int, 3> ratios, std::uint64_t seed);

std::string serialize_split(const SplitAssignment& split);
SplitAssignment parse_split(const std::string& json_text);

}  // namespace sonalyzer

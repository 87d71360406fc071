#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <filesystem>
#include <set>
#include <string>
#include <vector>

#include "jitvp/errors.hpp"
#include "jitvp/features.hpp"
#include "jitvp/jsonl.hpp"

namespace jitvp {

enum class Role { VIC, VFC, VNC };

inline const char* role_name(Role role) {
    switch (role) {
        case Role::VIC: return "VIC";
        case Role::VFC: return "VFC";
        case Role::VNC: return "VNC";
    }
    return "?";
}

struct AnnotatedCommit {
    std::string commit_id;
    std::int64_t date = 0;
    Role role = Role::VNC;
    int label = 0;  // 1 iff role == VIC
    FeatureRecord features;
};

struct SplitSet {
    std::vector<AnnotatedCommit> train, valid, test;
    std::array<double, 3> ratios{0.75, 0.05, 0.20};
};

// Role precedence VIC > VFC > VNC; only VIC records are positive.
inline std::vector<AnnotatedCommit> annotate(const std::vector<FeatureRecord>& commits,
                                             const std::set<std::string>& vics,
                                             const std::set<std::string>& vfcs) {
    std::set<std::string> known;
    for (const auto& record : commits) known.insert(record.commit_id);
    for (const auto& id : vics)
        if (!known.count(id)) throw UnknownId(id);
    for (const auto& id : vfcs)
        if (!known.count(id)) throw UnknownId(id);

    std::vector<AnnotatedCommit> annotated;
    annotated.reserve(commits.size());
    for (const auto& record : commits) {
        AnnotatedCommit a;
        a.commit_id = record.commit_id;
        a.date = record.date;
        a.features = record;
        if (vics.count(record.commit_id)) a.role = Role::VIC;
        else if (vfcs.count(record.commit_id)) a.role = Role::VFC;
        else a.role = Role::VNC;
        a.label = a.role == Role::VIC ? 1 : 0;
        annotated.push_back(std::move(a));
    }
    return annotated;
}

// Chronological holdout split. Records are ordered by date (input order breaks
// ties, matching enumeration order); boundaries fall at floor(n*r1) and
// floor(n*(r1+r2)), with the train side guaranteed at least one record.
inline SplitSet chronological_split(std::vector<AnnotatedCommit> records,
                                    std::array<double, 3> ratios = {0.75, 0.05, 0.20}) {
    if (records.empty()) throw EmptyDataset();
    double sum = ratios[0] + ratios[1] + ratios[2];
    if (!(ratios[0] > 0 && ratios[1] > 0 && ratios[2] > 0) || std::abs(sum - 1.0) > 1e-9)
        throw Error("split ratios must be positive and sum to 1");

    std::stable_sort(records.begin(), records.end(),
                     [](const AnnotatedCommit& a, const AnnotatedCommit& b) { return a.date < b.date; });

    const std::size_t n = records.size();
    std::size_t cut1 = static_cast<std::size_t>(std::floor(static_cast<double>(n) * ratios[0]));
    std::size_t cut2 =
        static_cast<std::size_t>(std::floor(static_cast<double>(n) * (ratios[0] + ratios[1])));
    if (cut1 == 0) cut1 = 1;  // minimum occupancy: train is never empty
    if (cut2 < cut1) cut2 = cut1;
    if (cut2 > n) cut2 = n;

    SplitSet split;
    split.ratios = ratios;
    split.train.assign(records.begin(), records.begin() + static_cast<std::ptrdiff_t>(cut1));
    split.valid.assign(records.begin() + static_cast<std::ptrdiff_t>(cut1),
                       records.begin() + static_cast<std::ptrdiff_t>(cut2));
    split.test.assign(records.begin() + static_cast<std::ptrdiff_t>(cut2), records.end());
    return split;
}

// --- split files ---------------------------------------------------------------

inline OrderedJson annotated_json(const AnnotatedCommit& a) {
    OrderedJson j = feature_json(a.features);
    j["label"] = a.label;
    return j;
}

inline AnnotatedCommit parse_annotated(const Json& j, std::size_t line_no) {
    AnnotatedCommit a;
    a.features = parse_feature_record(j, line_no, {"label"});
    if (!j.contains("label") || !j["label"].is_number_integer())
        throw SchemaViolation(line_no, "missing or non-integer \"label\"");
    int label = j["label"].get<int>();
    if (label != 0 && label != 1) throw SchemaViolation(line_no, "\"label\" must be 0 or 1");
    a.label = label;
    a.commit_id = a.features.commit_id;
    a.date = a.features.date;
    // Roles are not serialized; only the positive class is recoverable.
    a.role = label == 1 ? Role::VIC : Role::VNC;
    return a;
}

inline void write_annotated_file(const std::vector<AnnotatedCommit>& records,
                                 const std::filesystem::path& path) {
    std::vector<OrderedJson> lines;
    lines.reserve(records.size());
    for (const auto& a : records) lines.push_back(annotated_json(a));
    write_jsonl(path, lines);
}

inline std::vector<AnnotatedCommit> read_annotated_file(const std::filesystem::path& path) {
    std::vector<AnnotatedCommit> records;
    for_each_jsonl_line(path, [&](std::size_t line_no, const Json& j) {
        records.push_back(parse_annotated(j, line_no));
    });
    return records;
}

inline void write_split(const SplitSet& split, const std::filesystem::path& folder) {
    std::filesystem::create_directories(folder);
    write_annotated_file(split.train, folder / "train.jsonl");
    write_annotated_file(split.valid, folder / "valid.jsonl");
    write_annotated_file(split.test, folder / "test.jsonl");
}

inline SplitSet read_split(const std::filesystem::path& folder) {
    SplitSet split;
    split.train = read_annotated_file(folder / "train.jsonl");
    split.valid = read_annotated_file(folder / "valid.jsonl");
    split.test = read_annotated_file(folder / "test.jsonl");
    return split;
}

}  // namespace jitvp

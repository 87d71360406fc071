#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <map>
#include <set>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "jitvp/errors.hpp"
#include "jitvp/filter.hpp"
#include "jitvp/git/parallel.hpp"
#include "jitvp/git/repo.hpp"
#include "jitvp/jsonl.hpp"
#include "jitvp/vfc.hpp"

namespace jitvp {

// The 14 change-level metrics plus the fix-keyword flag.
struct ExpertFeatureVector {
    std::size_t ns = 0;   // touched subsystems (first path component)
    std::size_t nd = 0;   // touched directories (full parent path)
    std::size_t nf = 0;   // touched files
    double entropy = 0;   // spread of the change across files, in bits
    std::size_t la = 0;   // lines added
    std::size_t ld = 0;   // lines deleted
    double lt = 0;        // mean pre-change size of touched files, in lines
    int fix = 0;          // message matches the vulnerability keyword rules
    std::size_t ndev = 0; // distinct prior authors of the touched files
    double age = 0;       // mean days since each touched file's last change
    std::size_t nuc = 0;  // distinct prior commits touching the files
    std::size_t exp = 0;  // author's prior commit count
    double rexp = 0;      // recency-weighted author experience
    std::size_t sexp = 0; // author's prior commits in the touched subsystems

    bool operator==(const ExpertFeatureVector&) const = default;
};

inline constexpr std::int64_t kSecondsPerDay = 86400;
inline constexpr std::int64_t kSecondsPerYear = 365 * kSecondsPerDay;

// H = -sum p_i * log2(p_i); zero-line files are excluded.
inline double compute_entropy(const std::vector<std::size_t>& changed_lines_per_file) {
    std::size_t total = 0;
    for (std::size_t c : changed_lines_per_file) total += c;
    if (total == 0) return 0.0;
    double entropy = 0.0;
    for (std::size_t c : changed_lines_per_file) {
        if (c == 0) continue;
        double p = static_cast<double>(c) / static_cast<double>(total);
        entropy -= p * std::log2(p);
    }
    return entropy < 0 ? 0.0 : entropy;
}

// Path decomposition: subsystem is the first component, directory the full
// parent path. Files at the repository root map to the "" subsystem/directory.
inline std::string subsystem_of(const std::string& path) {
    std::size_t slash = path.find('/');
    return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

inline std::string directory_of(const std::string& path) {
    std::size_t slash = path.rfind('/');
    return slash == std::string::npos ? std::string() : path.substr(0, slash);
}

// Accumulates per-file and per-author history in chronological fold order.
// Single writer; reads are const. Commit identity inside the index is the
// global fold ordinal, which keeps the per-commit union queries on small
// sorted integer vectors instead of string sets.
class HistoryIndex {
public:
    struct FileHistory {
        std::int64_t last_change_time = 0;
        std::set<std::string> authors;
        std::vector<std::uint32_t> commit_ordinals;  // ascending
    };
    struct AuthorHistory {
        std::size_t commit_count = 0;
        std::vector<std::int64_t> commit_times;  // author_time, fold order
        std::map<std::string, std::vector<std::uint32_t>> subsystem_ordinals;  // ascending
    };

    const FileHistory* file(const std::string& path) const {
        auto it = files_.find(path);
        return it == files_.end() ? nullptr : &it->second;
    }
    const AuthorHistory* author(const std::string& author_id) const {
        auto it = authors_.find(author_id);
        return it == authors_.end() ? nullptr : &it->second;
    }
    bool contains(const std::string& commit_id) const { return folded_ids_.count(commit_id) > 0; }
    std::int64_t last_fold_time() const { return last_fold_time_; }
    std::size_t size() const { return folded_ids_.size(); }

    // Folds a commit into history. Commits must arrive in nondecreasing
    // commit_time order and at most once.
    void fold_commit(const CommitRecord& commit, const std::set<std::string>& extensions) {
        if (folded_ids_.count(commit.id)) throw OutOfOrderCommit(commit.id);
        if (!folded_ids_.empty() && commit.commit_time < last_fold_time_)
            throw OutOfOrderCommit(commit.id);

        const auto ordinal = static_cast<std::uint32_t>(folded_ids_.size());
        std::set<std::string> touched_subsystems;
        for (const auto& diff : commit.files) {
            if (!touches_language(diff, extensions)) continue;
            const std::string& path = diff.path();
            FileHistory& fh = files_[path];
            fh.last_change_time = commit.author_time;
            fh.authors.insert(commit.author_id);
            if (fh.commit_ordinals.empty() || fh.commit_ordinals.back() != ordinal)
                fh.commit_ordinals.push_back(ordinal);
            touched_subsystems.insert(subsystem_of(path));
        }
        AuthorHistory& ah = authors_[commit.author_id];
        ah.commit_count += 1;
        ah.commit_times.push_back(commit.author_time);
        for (const auto& subsystem : touched_subsystems)
            ah.subsystem_ordinals[subsystem].push_back(ordinal);

        folded_ids_.insert(commit.id);
        last_fold_time_ = commit.commit_time;
    }

private:
    std::unordered_map<std::string, FileHistory> files_;
    std::unordered_map<std::string, AuthorHistory> authors_;
    std::unordered_set<std::string> folded_ids_;
    std::int64_t last_fold_time_ = std::numeric_limits<std::int64_t>::min();
};

namespace detail {

// Distinct values across ascending integer lists (k is tiny in practice).
inline std::size_t count_distinct_union(
    const std::vector<const std::vector<std::uint32_t>*>& lists) {
    if (lists.empty()) return 0;
    if (lists.size() == 1) return lists[0]->size();
    std::vector<std::size_t> at(lists.size(), 0);
    std::size_t distinct = 0;
    while (true) {
        bool any = false;
        std::uint32_t lowest = 0;
        for (std::size_t k = 0; k < lists.size(); ++k) {
            if (at[k] >= lists[k]->size()) continue;
            const std::uint32_t value = (*lists[k])[at[k]];
            if (!any || value < lowest) lowest = value;
            any = true;
        }
        if (!any) return distinct;
        ++distinct;
        for (std::size_t k = 0; k < lists.size(); ++k)
            while (at[k] < lists[k]->size() && (*lists[k])[at[k]] == lowest) ++at[k];
    }
}

}  // namespace detail

namespace detail {

// Diff-derived measurements that need no history: computable in parallel
// ahead of the sequential fold.
struct StaticMeasures {
    std::vector<std::string> touched_paths;  // language files, diff order, deduplicated
    std::size_t la = 0, ld = 0;
    double entropy = 0;
    double lt = 0;
    int fix = 0;
};

inline StaticMeasures static_measures(const RepoHandle& handle, const CommitRecord& commit,
                                      const std::set<std::string>& extensions,
                                      const RuleSet& rules) {
    StaticMeasures m;
    std::set<std::string> seen;
    std::vector<std::size_t> changed_per_file;
    double lt_sum = 0;
    for (const auto& diff : commit.files) {
        if (!touches_language(diff, extensions)) continue;
        const std::string& path = diff.path();
        if (!seen.insert(path).second) continue;
        m.touched_paths.push_back(path);

        std::size_t added = 0, removed = 0;
        for (const auto& hunk : diff.hunks) {
            added += hunk.added_lines.size();
            removed += hunk.removed_lines.size();
        }
        m.la += added;
        m.ld += removed;
        changed_per_file.push_back(added + removed);

        // Pre-change size: absent for added files and for root commits.
        if (diff.change_kind != ChangeKind::Add && !commit.parent_ids.empty()) {
            const std::string& old_path = diff.old_path ? *diff.old_path : path;
            lt_sum += static_cast<double>(
                count_lines_at(handle, commit.parent_ids.front(), old_path));
        }
    }
    m.entropy = compute_entropy(changed_per_file);
    m.lt = m.touched_paths.empty() ? 0.0
                                   : lt_sum / static_cast<double>(m.touched_paths.size());
    m.fix = matches_fix_keyword(commit.message, rules) ? 1 : 0;
    return m;
}

inline ExpertFeatureVector combine_with_history(const CommitRecord& commit,
                                                const StaticMeasures& m,
                                                const HistoryIndex& index) {
    ExpertFeatureVector v;
    std::set<std::string> directories, subsystems;
    for (const auto& path : m.touched_paths) {
        directories.insert(directory_of(path));
        subsystems.insert(subsystem_of(path));
    }
    v.nf = m.touched_paths.size();
    v.nd = directories.size();
    v.ns = subsystems.size();
    v.entropy = m.entropy;
    v.la = m.la;
    v.ld = m.ld;
    v.lt = m.lt;
    v.fix = m.fix;

    std::set<std::string> prior_authors;
    std::vector<const std::vector<std::uint32_t>*> prior_commit_lists;
    double age_sum = 0;
    for (const auto& path : m.touched_paths) {
        const auto* fh = index.file(path);
        if (!fh) continue;  // never seen: contributes 0 days
        prior_authors.insert(fh->authors.begin(), fh->authors.end());
        prior_commit_lists.push_back(&fh->commit_ordinals);
        std::int64_t delta = commit.author_time - fh->last_change_time;
        if (delta > 0) age_sum += static_cast<double>(delta) / kSecondsPerDay;
    }
    v.ndev = prior_authors.size();
    v.nuc = count_distinct_union(prior_commit_lists);
    v.age = m.touched_paths.empty() ? 0.0 : age_sum / static_cast<double>(m.touched_paths.size());

    if (const auto* ah = index.author(commit.author_id)) {
        v.exp = ah->commit_count;
        // rexp = sum of 1/(1 + whole years since each prior commit). Counted
        // per year bucket so the weight division happens once per bucket.
        std::vector<std::size_t> year_counts;
        for (std::int64_t t : ah->commit_times) {
            std::int64_t delta = commit.author_time - t;
            std::size_t years = 0;
            if (delta >= kSecondsPerYear) {
                std::int64_t boundary = kSecondsPerYear;
                while (boundary <= delta) {
                    boundary += kSecondsPerYear;
                    ++years;
                }
            }
            if (year_counts.size() <= years) year_counts.resize(years + 1, 0);
            ++year_counts[years];
        }
        for (std::size_t years = 0; years < year_counts.size(); ++years)
            v.rexp += static_cast<double>(year_counts[years]) /
                      (1.0 + static_cast<double>(years));

        std::vector<const std::vector<std::uint32_t>*> own_lists;
        for (const auto& subsystem : subsystems) {
            auto it = ah->subsystem_ordinals.find(subsystem);
            if (it != ah->subsystem_ordinals.end()) own_lists.push_back(&it->second);
        }
        v.sexp = count_distinct_union(own_lists);
    }
    return v;
}

}  // namespace detail

// Feature vector for one commit against the history folded so far. The index
// must hold exactly the kept commits strictly older than this one.
inline ExpertFeatureVector extract_features(const RepoHandle& handle, const CommitRecord& commit,
                                            const HistoryIndex& index, const RuleSet& rules,
                                            const std::set<std::string>* extension_override = nullptr) {
    if (index.contains(commit.id)) throw OutOfOrderCommit(commit.id);
    if (index.size() > 0 && commit.commit_time < index.last_fold_time())
        throw OutOfOrderCommit(commit.id);
    const std::set<std::string> extensions =
        extension_override ? *extension_override : language_extensions(handle.primary_language());
    return detail::combine_with_history(commit, detail::static_measures(handle, commit, extensions, rules),
                                        index);
}

struct FeatureRecord {
    std::string commit_id;
    std::int64_t date = 0;  // author_time, the dataset's chronological key
    ExpertFeatureVector features;
    std::map<std::string, double> extras;  // additional numeric keys pass through

    bool operator==(const FeatureRecord&) const = default;
};

// Extracts vectors for an already-filtered, chronologically ordered commit
// stream. Diff and line-count reads fan out across workers; the history fold
// itself is sequential, so output is independent of the worker count.
inline std::vector<FeatureRecord> extract_all_features(
    const RepoHandle& handle, const std::vector<CommitRecord>& kept, const RuleSet& rules,
    unsigned workers, const std::set<std::string>* extension_override = nullptr) {
    const std::set<std::string> extensions =
        extension_override ? *extension_override : language_extensions(handle.primary_language());

    // Warm the pre-change size cache in batches before fanning out.
    std::vector<std::pair<std::string, std::string>> size_requests;
    for (const auto& commit : kept) {
        if (commit.parent_ids.empty()) continue;
        for (const auto& diff : commit.files) {
            if (!touches_language(diff, extensions) || diff.change_kind == ChangeKind::Add)
                continue;
            size_requests.emplace_back(commit.parent_ids.front(),
                                       diff.old_path ? *diff.old_path : diff.path());
        }
    }
    prefetch_line_counts(handle, size_requests, workers);

    std::vector<detail::StaticMeasures> measures =
        map_ordered(kept,
                    [&](const CommitRecord& commit) {
                        return detail::static_measures(handle, commit, extensions, rules);
                    },
                    workers);

    HistoryIndex index;
    std::vector<FeatureRecord> records;
    records.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i) {
        FeatureRecord record;
        record.commit_id = kept[i].id;
        record.date = kept[i].author_time;
        record.features = detail::combine_with_history(kept[i], measures[i], index);
        records.push_back(std::move(record));
        index.fold_commit(kept[i], extensions);
    }
    return records;
}

// --- feature JSONL -----------------------------------------------------------

inline const std::vector<std::string>& expert_feature_names() {
    static const std::vector<std::string> names = {"ns",  "nd",   "nf",  "entropy", "la",
                                                   "ld",  "lt",   "fix", "ndev",    "age",
                                                   "nuc", "exp",  "rexp", "sexp"};
    return names;
}

inline OrderedJson feature_json(const FeatureRecord& r) {
    OrderedJson j;
    j["commit_id"] = r.commit_id;
    j["date"] = r.date;
    j["ns"] = r.features.ns;
    j["nd"] = r.features.nd;
    j["nf"] = r.features.nf;
    j["entropy"] = r.features.entropy;
    j["la"] = r.features.la;
    j["ld"] = r.features.ld;
    j["lt"] = r.features.lt;
    j["fix"] = r.features.fix;
    j["ndev"] = r.features.ndev;
    j["age"] = r.features.age;
    j["nuc"] = r.features.nuc;
    j["exp"] = r.features.exp;
    j["rexp"] = r.features.rexp;
    j["sexp"] = r.features.sexp;
    for (const auto& [key, value] : r.extras) j[key] = value;
    return j;
}

namespace detail {

inline double require_number(const Json& j, const char* key, std::size_t line_no) {
    if (!j.contains(key) || !j[key].is_number())
        throw SchemaViolation(line_no, std::string("missing or non-numeric \"") + key + "\"");
    return j[key].get<double>();
}

}  // namespace detail

// Parses one feature-schema object. Keys in `skip_keys` are left to the
// caller (e.g. "label" in split files); all other unknown keys must be
// numeric and land in extras.
inline FeatureRecord parse_feature_record(const Json& j, std::size_t line_no,
                                          const std::set<std::string>& skip_keys = {}) {
    if (!j.is_object()) throw SchemaViolation(line_no, "expected an object");
    if (!j.contains("commit_id") || !j["commit_id"].is_string())
        throw SchemaViolation(line_no, "missing or non-string \"commit_id\"");
    FeatureRecord r;
    r.commit_id = j["commit_id"].get<std::string>();
    r.date = static_cast<std::int64_t>(detail::require_number(j, "date", line_no));
    auto& v = r.features;
    v.ns = static_cast<std::size_t>(detail::require_number(j, "ns", line_no));
    v.nd = static_cast<std::size_t>(detail::require_number(j, "nd", line_no));
    v.nf = static_cast<std::size_t>(detail::require_number(j, "nf", line_no));
    v.entropy = detail::require_number(j, "entropy", line_no);
    v.la = static_cast<std::size_t>(detail::require_number(j, "la", line_no));
    v.ld = static_cast<std::size_t>(detail::require_number(j, "ld", line_no));
    v.lt = detail::require_number(j, "lt", line_no);
    double fix = detail::require_number(j, "fix", line_no);
    if (fix != 0.0 && fix != 1.0) throw SchemaViolation(line_no, "\"fix\" must be 0 or 1");
    v.fix = static_cast<int>(fix);
    v.ndev = static_cast<std::size_t>(detail::require_number(j, "ndev", line_no));
    v.age = detail::require_number(j, "age", line_no);
    v.nuc = static_cast<std::size_t>(detail::require_number(j, "nuc", line_no));
    v.exp = static_cast<std::size_t>(detail::require_number(j, "exp", line_no));
    v.rexp = detail::require_number(j, "rexp", line_no);
    v.sexp = static_cast<std::size_t>(detail::require_number(j, "sexp", line_no));

    std::set<std::string> fixed = {"commit_id", "date"};
    for (const auto& name : expert_feature_names()) fixed.insert(name);
    for (const auto& [key, value] : j.items()) {
        if (fixed.count(key) || skip_keys.count(key)) continue;
        if (!value.is_number())
            throw SchemaViolation(line_no, "extra key \"" + key + "\" must be numeric");
        r.extras[key] = value.get<double>();
    }
    return r;
}

inline void write_feature_file(const std::vector<FeatureRecord>& records,
                               const std::filesystem::path& path) {
    std::vector<OrderedJson> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(feature_json(r));
    write_jsonl(path, lines);
}

inline std::vector<FeatureRecord> read_feature_file(const std::filesystem::path& path) {
    std::vector<FeatureRecord> records;
    for_each_jsonl_line(path, [&](std::size_t line_no, const Json& j) {
        records.push_back(parse_feature_record(j, line_no));
    });
    return records;
}

// Flattens a record to named numeric features, the form models consume.
inline std::map<std::string, double> to_feature_map(const FeatureRecord& r) {
    std::map<std::string, double> m;
    const auto& v = r.features;
    m["ns"] = static_cast<double>(v.ns);
    m["nd"] = static_cast<double>(v.nd);
    m["nf"] = static_cast<double>(v.nf);
    m["entropy"] = v.entropy;
    m["la"] = static_cast<double>(v.la);
    m["ld"] = static_cast<double>(v.ld);
    m["lt"] = v.lt;
    m["fix"] = static_cast<double>(v.fix);
    m["ndev"] = static_cast<double>(v.ndev);
    m["age"] = v.age;
    m["nuc"] = static_cast<double>(v.nuc);
    m["exp"] = static_cast<double>(v.exp);
    m["rexp"] = v.rexp;
    m["sexp"] = static_cast<double>(v.sexp);
    for (const auto& [key, value] : r.extras) m[key] = value;
    return m;
}

}  // namespace jitvp

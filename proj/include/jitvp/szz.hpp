#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jitvp/filter.hpp"
#include "jitvp/git/parallel.hpp"
#include "jitvp/git/repo.hpp"
#include "jitvp/jsonl.hpp"
#include "jitvp/lexer.hpp"

namespace jitvp {

enum class SzzAlgorithm { B, Ag, Ma, V };

inline const char* szz_name(SzzAlgorithm algorithm) {
    switch (algorithm) {
        case SzzAlgorithm::B: return "b";
        case SzzAlgorithm::Ag: return "ag";
        case SzzAlgorithm::Ma: return "ma";
        case SzzAlgorithm::V: return "v";
    }
    return "?";
}

inline SzzAlgorithm parse_szz(const std::string& name) {
    if (name == "b") return SzzAlgorithm::B;
    if (name == "ag") return SzzAlgorithm::Ag;
    if (name == "ma") return SzzAlgorithm::Ma;
    if (name == "v") return SzzAlgorithm::V;
    throw Error("unknown szz algorithm: " + name + " (expected b, ag, ma, or v)");
}

// One line removed by a fixing commit, addressed in the pre-fix revision.
struct DeletedLine {
    std::string file;        // old path
    std::size_t line_no = 0; // 1-based in the pre-fix revision
    std::string content;

    bool operator==(const DeletedLine&) const = default;
};

struct TraceResult {
    std::string vfc_id;
    SzzAlgorithm algorithm = SzzAlgorithm::B;
    std::set<std::string> vic_ids;
    std::map<std::string, std::vector<DeletedLine>> line_evidence;
    bool root_commit_fix = false;  // fix had no parent: nothing to blame
    bool truncated = false;        // per-line hop bound was hit
    std::vector<std::string> notes;
};

// Deleted lines of the fix's language-file hunks. With `exclude_cosmetic`,
// blank and comment-only lines (hunk-local residue empty) are dropped; B-SZZ
// keeps them.
inline std::vector<DeletedLine> candidate_lines(const CommitRecord& vfc, Language language,
                                                bool exclude_cosmetic,
                                                const std::set<std::string>* extension_override = nullptr) {
    const std::set<std::string> extensions =
        extension_override ? *extension_override : language_extensions(language);
    std::vector<DeletedLine> lines;
    for (const auto& diff : vfc.files) {
        if (!touches_language(diff, extensions) || diff.binary || !diff.old_path) continue;
        for (const auto& hunk : diff.hunks) {
            std::vector<std::string> residues;
            if (exclude_cosmetic)
                residues = comment_stripped_residues(hunk.removed_lines, language);
            for (std::size_t i = 0; i < hunk.removed_lines.size(); ++i) {
                if (exclude_cosmetic && residues[i].empty()) continue;
                lines.push_back(DeletedLine{*diff.old_path, hunk.old_start + i,
                                            hunk.removed_lines[i]});
            }
        }
    }
    return lines;
}

namespace detail {

constexpr std::size_t kMaxHopsPerLine = 128;

struct LinePos {
    std::string revision;
    std::string file;
    std::size_t line_no;
};

struct Attribution {
    std::optional<std::string> vic;  // empty: the line could not be attributed
    bool truncated = false;
    std::vector<std::string> notes;
};

inline const FileDiff* find_file_diff(const CommitRecord& commit, const std::string& new_path) {
    for (const auto& diff : commit.files)
        if (diff.new_path && *diff.new_path == new_path) return &diff;
    return nullptr;
}

inline const DiffHunk* covering_hunk(const FileDiff& diff, std::size_t new_line) {
    for (const auto& hunk : diff.hunks)
        if (new_line >= hunk.new_start && new_line < hunk.new_start + hunk.added_lines.size())
            return &hunk;
    return nullptr;
}

// Chooses among equally matching predecessor line numbers: minimal distance
// to the expected position, then the lower line number.
inline std::size_t resolve_ambiguity(const std::vector<std::size_t>& options,
                                     std::size_t expected) {
    std::size_t best = options.front();
    for (std::size_t option : options) {
        auto dist = [&](std::size_t x) {
            return x > expected ? x - expected : expected - x;
        };
        if (dist(option) < dist(best) || (dist(option) == dist(best) && option < best))
            best = option;
    }
    return best;
}

// Finds the line's pre-image within a merge's parents by normalized content.
// Parents are tried in order; within one file the closest line number wins.
inline std::optional<LinePos> find_in_parents(const RepoHandle& handle,
                                              const CommitRecord& merge,
                                              const std::string& file, std::size_t line_no,
                                              const std::string& content) {
    const std::string wanted = normalize_whitespace(content);
    for (const auto& parent : merge.parent_ids) {
        auto exists = handle.git({"cat-file", "-e", parent + ":" + file});
        if (exists.exit_code != 0) continue;
        auto blob = handle.git_checked({"cat-file", "blob", parent + ":" + file});
        std::vector<std::string> lines = split_lines(blob.out);
        std::vector<std::size_t> matches;
        for (std::size_t i = 0; i < lines.size(); ++i)
            if (normalize_whitespace(lines[i]) == wanted) matches.push_back(i + 1);
        if (!matches.empty())
            return LinePos{parent, file, resolve_ambiguity(matches, line_no)};
    }
    return std::nullopt;
}

// Core per-line backward walk shared by AG/MA/V; B returns the first blame
// hit unconditionally.
inline Attribution attribute_line(const RepoHandle& handle, SzzAlgorithm algorithm,
                                  Language language, const LinePos& start) {
    Attribution result;
    LinePos pos = start;
    std::string last_attribution;

    for (std::size_t hop = 0;; ++hop) {
        if (hop >= kMaxHopsPerLine) {
            result.truncated = true;
            result.vic = last_attribution;
            return result;
        }

        BlameEntry entry;
        try {
            entry = blame_at(handle, pos.revision, pos.file, {pos.line_no}).front();
        } catch (const Error&) {
            // Hop target vanished (e.g. file absent in a parent); keep the
            // last well-defined attribution if any.
            if (!last_attribution.empty()) result.vic = last_attribution;
            else result.notes.push_back("unattributable:" + start.file + ":" +
                                        std::to_string(start.line_no));
            return result;
        }

        if (algorithm == SzzAlgorithm::B) {
            result.vic = entry.origin_commit;
            return result;
        }

        last_attribution = entry.origin_commit;
        CommitRecord origin = load_commit(handle, entry.origin_commit);
        const std::string origin_file = entry.origin_file.empty() ? pos.file : entry.origin_file;

        if (origin.parent_ids.empty()) {  // root commit created the line
            result.vic = entry.origin_commit;
            return result;
        }

        // MA: never attribute to meta-changes; hop past them.
        if (algorithm == SzzAlgorithm::Ma && origin.is_merge()) {
            auto mapped = find_in_parents(handle, origin, origin_file, entry.origin_line_no,
                                          entry.content);
            if (!mapped) {
                result.notes.push_back("merge_unmapped:" + origin.id.substr(0, 12));
                return result;  // no prior content-bearing commit holds the line
            }
            pos = *mapped;
            continue;
        }

        const FileDiff* diff = find_file_diff(origin, origin_file);
        if (!diff || diff->binary) {
            result.vic = entry.origin_commit;
            return result;
        }

        // Rename-only / mode-only changes carry no hunks. MA hops through to
        // the pre-image; AG and V attribute here (blame rarely lands on such
        // commits because git follows whole-file renames on its own).
        if (diff->hunks.empty()) {
            if (algorithm == SzzAlgorithm::Ma) {
                pos = LinePos{origin.parent_ids.front(),
                              diff->old_path ? *diff->old_path : origin_file,
                              entry.origin_line_no};
                continue;
            }
            result.vic = entry.origin_commit;
            return result;
        }

        const DiffHunk* hunk = covering_hunk(*diff, entry.origin_line_no);
        if (!hunk || hunk->removed_lines.empty()) {
            // Pure addition (or outside any hunk): this commit created the line.
            result.vic = entry.origin_commit;
            return result;
        }

        const std::size_t added_index = entry.origin_line_no - hunk->new_start;
        const std::string old_file = diff->old_path ? *diff->old_path : origin_file;

        if (algorithm == SzzAlgorithm::Ag || algorithm == SzzAlgorithm::Ma) {
            // Hop only when this commit's change to the line was cosmetic:
            // equal comment-and-whitespace residue on both hunk sides.
            std::vector<std::string> added_res =
                comment_stripped_residues(hunk->added_lines, language);
            std::vector<std::string> removed_res =
                comment_stripped_residues(hunk->removed_lines, language);
            const std::string& wanted = added_res[added_index];
            if (wanted.empty()) {
                result.vic = entry.origin_commit;
                return result;
            }
            std::vector<std::size_t> matches;
            for (std::size_t i = 0; i < removed_res.size(); ++i)
                if (removed_res[i] == wanted) matches.push_back(hunk->old_start + i);
            if (matches.empty()) {  // substantive edit: attribute it
                result.vic = entry.origin_commit;
                return result;
            }
            const std::size_t expected = hunk->old_start + added_index;
            pos = LinePos{origin.parent_ids.front(), old_file,
                          resolve_ambiguity(matches, expected)};
            continue;
        }

        // V: the commit modified (did not create) the line, so map it to the
        // predecessor in the parent. Exact whitespace-normalized matches over
        // the file's removed lines are preferred (they survive reformatting
        // and moves); otherwise the positional counterpart inside the hunk.
        const std::string wanted = normalize_whitespace(entry.content);
        std::vector<std::size_t> matches;
        for (const auto& h : diff->hunks)
            for (std::size_t i = 0; i < h.removed_lines.size(); ++i)
                if (normalize_whitespace(h.removed_lines[i]) == wanted)
                    matches.push_back(h.old_start + i);
        std::size_t predecessor;
        const std::size_t expected =
            hunk->old_start + std::min(added_index, hunk->removed_lines.size() - 1);
        if (!matches.empty()) {
            if (matches.size() > 1)
                result.notes.push_back("mapping_ambiguous:" + origin.id.substr(0, 12) + ":" +
                                       old_file + ":" + std::to_string(entry.origin_line_no));
            predecessor = resolve_ambiguity(matches, expected);
        } else {
            predecessor = expected;
        }
        pos = LinePos{origin.parent_ids.front(), old_file, predecessor};
    }
}

inline TraceResult trace(const RepoHandle& handle, const CommitRecord& vfc,
                         SzzAlgorithm algorithm,
                         const std::set<std::string>* extension_override = nullptr) {
    TraceResult result;
    result.vfc_id = vfc.id;
    result.algorithm = algorithm;
    if (vfc.parent_ids.empty()) {
        result.root_commit_fix = true;
        return result;
    }
    const std::string& parent = vfc.parent_ids.front();
    const bool exclude_cosmetic = algorithm != SzzAlgorithm::B;
    for (const auto& line : candidate_lines(vfc, handle.primary_language(), exclude_cosmetic,
                                            extension_override)) {
        Attribution a = attribute_line(handle, algorithm, handle.primary_language(),
                                       LinePos{parent, line.file, line.line_no});
        result.truncated |= a.truncated;
        for (auto& note : a.notes) result.notes.push_back(std::move(note));
        if (a.vic && *a.vic != vfc.id) {  // a fix never induces itself
            result.vic_ids.insert(*a.vic);
            result.line_evidence[*a.vic].push_back(line);
        }
    }
    return result;
}

}  // namespace detail

inline TraceResult b_szz(const RepoHandle& handle, const CommitRecord& vfc,
                         const std::set<std::string>* ext = nullptr) {
    return detail::trace(handle, vfc, SzzAlgorithm::B, ext);
}
inline TraceResult ag_szz(const RepoHandle& handle, const CommitRecord& vfc,
                          const std::set<std::string>* ext = nullptr) {
    return detail::trace(handle, vfc, SzzAlgorithm::Ag, ext);
}
inline TraceResult ma_szz(const RepoHandle& handle, const CommitRecord& vfc,
                          const std::set<std::string>* ext = nullptr) {
    return detail::trace(handle, vfc, SzzAlgorithm::Ma, ext);
}
inline TraceResult v_szz(const RepoHandle& handle, const CommitRecord& vfc,
                         const std::set<std::string>* ext = nullptr) {
    return detail::trace(handle, vfc, SzzAlgorithm::V, ext);
}

inline TraceResult run_szz_one(const RepoHandle& handle, const CommitRecord& vfc,
                               SzzAlgorithm algorithm,
                               const std::set<std::string>* ext = nullptr) {
    return detail::trace(handle, vfc, algorithm, ext);
}

// Per-VFC traces in input order. Individual failures become notes on the
// affected result instead of aborting the batch.
inline std::vector<TraceResult> run_szz(const RepoHandle& handle,
                                        const std::vector<CommitRecord>& vfcs,
                                        SzzAlgorithm algorithm, unsigned workers,
                                        const std::set<std::string>* ext = nullptr) {
    return map_ordered(vfcs,
                       [&](const CommitRecord& vfc) {
                           try {
                               return detail::trace(handle, vfc, algorithm, ext);
                           } catch (const std::exception& e) {
                               TraceResult failed;
                               failed.vfc_id = vfc.id;
                               failed.algorithm = algorithm;
                               failed.notes.push_back(std::string("error: ") + e.what());
                               return failed;
                           }
                       },
                       workers);
}

inline OrderedJson trace_json(const TraceResult& result) {
    OrderedJson j;
    j["vfc"] = result.vfc_id;
    j["algorithm"] = szz_name(result.algorithm);
    j["vics"] = std::vector<std::string>(result.vic_ids.begin(), result.vic_ids.end());
    return j;
}

inline void write_trace_file(const std::vector<TraceResult>& results,
                             const std::filesystem::path& path) {
    std::vector<OrderedJson> lines;
    lines.reserve(results.size());
    for (const auto& r : results) lines.push_back(trace_json(r));
    write_jsonl(path, lines);
}

}  // namespace jitvp

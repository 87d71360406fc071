#pragma once

#include <set>
#include <string>
#include <utility>
#include <vector>

#include "jitvp/git/repo.hpp"
#include "jitvp/lexer.hpp"

namespace jitvp {

enum class FilterReason { merge, whitespace_only, comment_only, no_language_files, kept };

inline const char* filter_reason_name(FilterReason reason) {
    switch (reason) {
        case FilterReason::merge: return "merge";
        case FilterReason::whitespace_only: return "whitespace_only";
        case FilterReason::comment_only: return "comment_only";
        case FilterReason::no_language_files: return "no_language_files";
        case FilterReason::kept: return "kept";
    }
    return "?";
}

struct FilterVerdict {
    bool keep = false;
    FilterReason reason = FilterReason::kept;
};

// Source-file extensions considered per primary language.
inline std::set<std::string> language_extensions(Language language) {
    switch (language) {
        case Language::C: return {".c", ".h"};
        case Language::Cpp: return {".cpp"};
        case Language::Java: return {".java"};
        case Language::JavaScript: return {".js"};
        case Language::Python: return {".py"};
    }
    return {};
}

inline bool has_language_extension(const std::string& path, const std::set<std::string>& extensions) {
    std::size_t dot = path.rfind('.');
    if (dot == std::string::npos) return false;
    return extensions.count(path.substr(dot)) > 0;
}

// A diff touches the language iff either endpoint path carries a considered
// extension (a deleted .c file is still a source change).
inline bool touches_language(const FileDiff& file, const std::set<std::string>& extensions) {
    if (file.old_path && has_language_extension(*file.old_path, extensions)) return true;
    if (file.new_path && has_language_extension(*file.new_path, extensions)) return true;
    return false;
}

namespace detail {

enum class ResidueMode { WhitespaceOnly, CommentAndWhitespace };

// True iff every language-file hunk has equal removed/added residue sequences
// (empty residues dropped). Binary language files defeat the check: their
// content change is invisible at line level, so they are never "cosmetic".
inline bool all_hunks_residue_equal(const CommitRecord& commit,
                                    const std::set<std::string>& extensions, Language lang,
                                    ResidueMode mode) {
    for (const auto& file : commit.files) {
        if (!touches_language(file, extensions)) continue;
        if (file.binary) return false;
        for (const auto& hunk : file.hunks) {
            std::vector<std::string> removed, added;
            if (mode == ResidueMode::WhitespaceOnly) {
                removed = whitespace_stripped_residues(hunk.removed_lines);
                added = whitespace_stripped_residues(hunk.added_lines);
            } else {
                removed = comment_stripped_residues(hunk.removed_lines, lang);
                added = comment_stripped_residues(hunk.added_lines, lang);
            }
            if (nonempty(removed) != nonempty(added)) return false;
        }
    }
    return true;
}

}  // namespace detail

// Rule order: merge, then language-file presence, then whitespace-only, then
// comment-only. The first failing rule names the drop reason.
inline FilterVerdict classify_commit(const CommitRecord& commit, Language language,
                                     const std::set<std::string>* extension_override = nullptr) {
    const std::set<std::string> extensions =
        extension_override ? *extension_override : language_extensions(language);

    if (commit.parent_ids.size() > 1) return {false, FilterReason::merge};

    bool any_language_file = false;
    for (const auto& file : commit.files)
        if (touches_language(file, extensions)) {
            any_language_file = true;
            break;
        }
    if (!any_language_file) return {false, FilterReason::no_language_files};

    if (detail::all_hunks_residue_equal(commit, extensions, language,
                                        detail::ResidueMode::WhitespaceOnly))
        return {false, FilterReason::whitespace_only};
    if (detail::all_hunks_residue_equal(commit, extensions, language,
                                        detail::ResidueMode::CommentAndWhitespace))
        return {false, FilterReason::comment_only};

    return {true, FilterReason::kept};
}

// Partitions a commit stream into kept commits (input order preserved) and
// dropped (id, reason) pairs.
inline std::pair<std::vector<CommitRecord>, std::vector<std::pair<std::string, FilterReason>>>
filter_stream(const std::vector<CommitRecord>& commits, Language language,
              const std::set<std::string>* extension_override = nullptr) {
    std::vector<CommitRecord> kept;
    std::vector<std::pair<std::string, FilterReason>> dropped;
    for (const auto& commit : commits) {
        FilterVerdict verdict = classify_commit(commit, language, extension_override);
        if (verdict.keep) kept.push_back(commit);
        else dropped.emplace_back(commit.id, verdict.reason);
    }
    return {std::move(kept), std::move(dropped)};
}

}  // namespace jitvp

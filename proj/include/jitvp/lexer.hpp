#pragma once

#include <cctype>
#include <string>
#include <vector>

#include "jitvp/git/repo.hpp"

namespace jitvp {

// Removes every whitespace character.
inline std::string strip_all_whitespace(const std::string& line) {
    std::string out;
    out.reserve(line.size());
    for (char c : line)
        if (!std::isspace(static_cast<unsigned char>(c))) out.push_back(c);
    return out;
}

// Trims the ends and collapses internal whitespace runs to one space.
// Used for line-content matching that must survive reformatting commits.
inline std::string normalize_whitespace(const std::string& line) {
    std::string out;
    out.reserve(line.size());
    bool pending_space = false;
    for (char c : line) {
        if (std::isspace(static_cast<unsigned char>(c))) {
            if (!out.empty()) pending_space = true;
        } else {
            if (pending_space) out.push_back(' ');
            pending_space = false;
            out.push_back(c);
        }
    }
    return out;
}

// Strips comments from one line. Lexing is deliberately line/hunk-local:
// block-comment state is carried between consecutive lines of one hunk side
// via `in_block_comment`, never across a whole file. Comment markers inside
// quotes balanced on the same line are kept (single-line heuristic).
inline std::string strip_comments_line(const std::string& line, Language lang,
                                       bool& in_block_comment) {
    const bool c_family = lang != Language::Python;
    std::string out;
    out.reserve(line.size());
    char in_string = 0;
    std::size_t i = 0;
    while (i < line.size()) {
        char c = line[i];
        if (in_block_comment) {
            if (c_family && c == '*' && i + 1 < line.size() && line[i + 1] == '/') {
                in_block_comment = false;
                i += 2;
                continue;
            }
            ++i;
            continue;
        }
        if (in_string) {
            out.push_back(c);
            if (c == '\\' && i + 1 < line.size()) {
                out.push_back(line[i + 1]);
                i += 2;
                continue;
            }
            if (c == in_string) in_string = 0;
            ++i;
            continue;
        }
        if (c == '"' || c == '\'') {
            in_string = c;
            out.push_back(c);
            ++i;
            continue;
        }
        if (c_family && c == '/' && i + 1 < line.size()) {
            if (line[i + 1] == '/') break;  // rest of line is a comment
            if (line[i + 1] == '*') {
                in_block_comment = true;
                i += 2;
                continue;
            }
        }
        if (!c_family && c == '#') break;
        out.push_back(c);
        ++i;
    }
    return out;
}

// Residue of one hunk side: per line, comments stripped (block state tracked
// across the sequence) and then all whitespace removed. Empty residues mark
// blank or comment-only lines.
inline std::vector<std::string> comment_stripped_residues(const std::vector<std::string>& lines,
                                                          Language lang) {
    std::vector<std::string> residues;
    residues.reserve(lines.size());
    bool in_block = false;
    for (const auto& line : lines)
        residues.push_back(strip_all_whitespace(strip_comments_line(line, lang, in_block)));
    return residues;
}

inline std::vector<std::string> whitespace_stripped_residues(const std::vector<std::string>& lines) {
    std::vector<std::string> residues;
    residues.reserve(lines.size());
    for (const auto& line : lines) residues.push_back(strip_all_whitespace(line));
    return residues;
}

// Drops empty residues so that blank-line-only (or comment-line-only) edits
// compare equal on both sides of a hunk.
inline std::vector<std::string> nonempty(const std::vector<std::string>& residues) {
    std::vector<std::string> out;
    out.reserve(residues.size());
    for (const auto& r : residues)
        if (!r.empty()) out.push_back(r);
    return out;
}

}  // namespace jitvp

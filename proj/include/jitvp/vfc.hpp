#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "jitvp/errors.hpp"
#include "jitvp/git/repo.hpp"
#include "jitvp/jsonl.hpp"

namespace jitvp {

// Patch-identification keyword rules after Zhou et al.'s two-tier pattern set,
// transcribed for ECMAScript regex. The published "(?i)" prefix becomes the
// engine's icase flag. The medium rule as published has an unbalanced
// parenthesis around its secur/serializ fragment; it is repaired minimally to
// "\b((in)?secur(e|ity)|(de)?serializ)". Everything else, including the
// "bopen.redirect" and "privelege" spellings, is kept verbatim.
inline const char* kStrongRuleSource =
    R"((denial.of.service|\bXXE\b|remote.code.execution|bopen.redirect|OSVDB|\bvuln\b|\bCVE\b|\bXSS\b|\bReDoS\b|\bNVD\b|malicious|x-frame-options|attack|cross.site|exploit|directory.traversal|\bRCE\b|\bdos\b|\bXSRF\b|clickjack|session.fixation|hijack|advisory|insecure|security|\bcross--origin\b|unauthori[z|s]ed|infinite.loop))";

inline const char* kMediumRuleSource =
    R"((authenticat(e|ion)|brute.force|bypass|constant.time|crack|credential|\bDoS\b|expos(e|ing)|hack|harden|injection|lockout|overflow|password|\bPoC\b|proof.of.concept|poison|privelege|\b((in)?secur(e|ity)|(de)?serializ)|spoof|timing|traversal))";

struct RuleSet {
    std::regex strong;
    std::regex medium;
};

enum class RegexLevel { StrongOnly, StrongOrMedium };

enum class VfcSource { StrongRegex, MediumRegex, Manual };

inline const char* vfc_source_name(VfcSource source) {
    switch (source) {
        case VfcSource::StrongRegex: return "strong_regex";
        case VfcSource::MediumRegex: return "medium_regex";
        case VfcSource::Manual: return "manual";
    }
    return "?";
}

struct VfcRecord {
    std::string commit_id;
    VfcSource source = VfcSource::Manual;
    std::string matched_fragment;  // empty iff source is manual
};

inline RuleSet compile_rules() {
    return RuleSet{
        std::regex(kStrongRuleSource, std::regex::ECMAScript | std::regex::icase),
        std::regex(kMediumRuleSource, std::regex::ECMAScript | std::regex::icase),
    };
}

struct MatchResult {
    bool matched = false;
    VfcSource source = VfcSource::StrongRegex;
    std::string fragment;
};

// Strong is tested before medium; first match wins.
inline MatchResult match_message(const std::string& message, const RuleSet& rules,
                                 RegexLevel level) {
    std::smatch m;
    if (std::regex_search(message, m, rules.strong))
        return {true, VfcSource::StrongRegex, m.str(0)};
    if (level == RegexLevel::StrongOrMedium && std::regex_search(message, m, rules.medium))
        return {true, VfcSource::MediumRegex, m.str(0)};
    return {};
}

// The fix-keyword feature flag: any tier matching, regardless of level.
inline bool matches_fix_keyword(const std::string& message, const RuleSet& rules) {
    return match_message(message, rules, RegexLevel::StrongOrMedium).matched;
}

// Manual patch list: JSONL, each line exactly
//   {"commit_id": <id>, "Repository": <name>}
// Unknown or missing keys reject the line.
inline std::vector<std::pair<std::string, std::string>> load_manual_patches(
    const std::filesystem::path& path) {
    std::vector<std::pair<std::string, std::string>> entries;
    for_each_jsonl_line(path, [&](std::size_t line_no, const Json& j) {
        if (!j.is_object()) throw MalformedLine(line_no, "expected an object");
        if (j.size() != 2 || !j.contains("commit_id") || !j.contains("Repository"))
            throw MalformedLine(line_no, R"(expected exactly {"commit_id", "Repository"})");
        if (!j["commit_id"].is_string() || !j["Repository"].is_string())
            throw MalformedLine(line_no, "both fields must be strings");
        entries.emplace_back(j["commit_id"].get<std::string>(),
                             j["Repository"].get<std::string>());
    });
    return entries;
}

// Identifies vulnerability-fixing commits. Manual entries (restricted to known
// commit ids) are authoritative; regex matches at the requested level are
// merged in. Deduplicated by id with source preference
// manual > strong_regex > medium_regex. Manual ids absent from `commits` are
// reported through `unknown_manual`, not fatal.
inline std::vector<VfcRecord> identify_vfcs(
    const std::vector<CommitRecord>& commits, const RuleSet& rules, RegexLevel level,
    const std::optional<std::vector<std::pair<std::string, std::string>>>& manual = std::nullopt,
    std::vector<std::string>* unknown_manual = nullptr) {
    std::set<std::string> known;
    for (const auto& commit : commits) known.insert(commit.id);

    std::map<std::string, VfcRecord> by_id;
    if (manual) {
        for (const auto& [id, repo] : *manual) {
            if (!known.count(id)) {
                if (unknown_manual) unknown_manual->push_back(id);
                continue;
            }
            by_id[id] = VfcRecord{id, VfcSource::Manual, ""};
        }
    }
    for (const auto& commit : commits) {
        if (by_id.count(commit.id)) continue;  // manual wins
        MatchResult m = match_message(commit.message, rules, level);
        if (m.matched) by_id[commit.id] = VfcRecord{commit.id, m.source, m.fragment};
    }

    // Emit in commit order for stable output.
    std::vector<VfcRecord> records;
    records.reserve(by_id.size());
    for (const auto& commit : commits) {
        auto it = by_id.find(commit.id);
        if (it != by_id.end()) records.push_back(it->second);
    }
    return records;
}

}  // namespace jitvp

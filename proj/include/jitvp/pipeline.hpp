#pragma once

#include <array>
#include <chrono>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <set>
#include <string>
#include <vector>

#include "jitvp/dataset.hpp"
#include "jitvp/features.hpp"
#include "jitvp/filter.hpp"
#include "jitvp/git/repo.hpp"
#include "jitvp/jsonl.hpp"
#include "jitvp/szz.hpp"
#include "jitvp/version.hpp"
#include "jitvp/vfc.hpp"

namespace jitvp {

struct MiningConfig {
    std::filesystem::path repo_path;
    Language language = Language::C;
    std::string repo_name;
    std::filesystem::path save_folder;
    unsigned workers = 50;
    SzzAlgorithm szz_variant = SzzAlgorithm::V;
    RegexLevel regex_level = RegexLevel::StrongOnly;
    std::optional<std::filesystem::path> manual_patch_file;
    std::array<double, 3> split_ratios{0.75, 0.05, 0.20};
    bool ideal_setting = false;  // keep only VIC and VFC records
    std::optional<std::int64_t> until;
    std::optional<std::set<std::string>> extensions_override;
};

struct MiningStats {
    std::size_t enumerated = 0;
    std::size_t kept = 0;
    std::map<std::string, std::size_t> dropped_by_reason;
    std::size_t vfcs = 0;
    std::size_t vics_total = 0;    // distinct VICs reported by SZZ
    std::size_t vics_labeled = 0;  // VICs present in the kept dataset
    std::size_t unknown_manual = 0;
    std::array<std::size_t, 3> split_sizes{0, 0, 0};
};

inline std::filesystem::path mining_output_dir(const MiningConfig& config) {
    return config.save_folder / config.repo_name;
}

namespace detail {

inline OrderedJson commit_summary_json(const CommitRecord& commit) {
    OrderedJson j;
    j["commit_id"] = commit.id;
    j["parents"] = commit.parent_ids;
    j["author"] = commit.author_id;
    j["author_time"] = commit.author_time;
    j["commit_time"] = commit.commit_time;
    j["message"] = commit.message;
    OrderedJson files = OrderedJson::array();
    for (const auto& diff : commit.files) {
        OrderedJson f;
        if (diff.old_path) f["old_path"] = *diff.old_path;
        else f["old_path"] = nullptr;
        if (diff.new_path) f["new_path"] = *diff.new_path;
        else f["new_path"] = nullptr;
        switch (diff.change_kind) {
            case ChangeKind::Add: f["change_kind"] = "add"; break;
            case ChangeKind::Delete: f["change_kind"] = "delete"; break;
            case ChangeKind::Modify: f["change_kind"] = "modify"; break;
            case ChangeKind::Rename: f["change_kind"] = "rename"; break;
        }
        std::size_t added = 0, removed = 0;
        for (const auto& hunk : diff.hunks) {
            added += hunk.added_lines.size();
            removed += hunk.removed_lines.size();
        }
        f["added"] = added;
        f["removed"] = removed;
        if (diff.binary) f["binary"] = true;
        files.push_back(std::move(f));
    }
    j["files"] = std::move(files);
    return j;
}

inline OrderedJson vfc_json(const VfcRecord& record) {
    OrderedJson j;
    j["commit_id"] = record.commit_id;
    j["source"] = vfc_source_name(record.source);
    j["matched_fragment"] = record.matched_fragment;
    return j;
}

}  // namespace detail

// End-to-end mining: enumerate, filter, extract, identify fixes, trace
// inducers, annotate, split, and write every artifact atomically under
// save_folder/repo_name/. Output bytes are independent of the worker count.
inline MiningStats run_mining(const MiningConfig& config, std::ostream& log) {
    namespace fs = std::filesystem;
    MiningStats stats;

    auto phase_start = std::chrono::steady_clock::now();
    auto lap = [&phase_start] {
        auto now = std::chrono::steady_clock::now();
        double s = std::chrono::duration<double>(now - phase_start).count();
        phase_start = now;
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.1fs", s);
        return std::string(buf);
    };

    RepoHandle handle = open_repo(config.repo_path, config.language);
    const std::set<std::string>* ext =
        config.extensions_override ? &*config.extensions_override : nullptr;

    std::vector<CommitRecord> commits = enumerate_commits(handle, config.until, config.workers);
    stats.enumerated = commits.size();
    log << "enumerated " << commits.size() << " commits from " << config.repo_path.string()
        << " [" << lap() << "]\n";

    auto [kept, dropped] = filter_stream(commits, config.language, ext);
    stats.kept = kept.size();
    for (const auto& [id, reason] : dropped) stats.dropped_by_reason[filter_reason_name(reason)]++;
    log << "kept " << kept.size() << " commits after filtering (" << dropped.size()
        << " dropped) [" << lap() << "]\n";

    RuleSet rules = compile_rules();
    std::vector<FeatureRecord> features =
        extract_all_features(handle, kept, rules, config.workers, ext);
    log << "extracted " << features.size() << " feature vectors [" << lap() << "]\n";

    std::optional<std::vector<std::pair<std::string, std::string>>> manual;
    if (config.manual_patch_file) manual = load_manual_patches(*config.manual_patch_file);

    std::vector<std::string> unknown_manual;
    std::vector<VfcRecord> vfc_records =
        identify_vfcs(kept, rules, config.regex_level, manual, &unknown_manual);
    stats.vfcs = vfc_records.size();
    stats.unknown_manual = unknown_manual.size();
    for (const auto& id : unknown_manual)
        log << "warning: manual patch commit not in mined set: " << id << "\n";

    std::map<std::string, const CommitRecord*> kept_index;
    for (const auto& commit : kept) kept_index[commit.id] = &commit;

    std::vector<CommitRecord> vfc_commits;
    vfc_commits.reserve(vfc_records.size());
    for (const auto& record : vfc_records) vfc_commits.push_back(*kept_index.at(record.commit_id));

    log << "identified " << vfc_records.size() << " fixing commits [" << lap() << "]\n";

    std::vector<TraceResult> traces =
        run_szz(handle, vfc_commits, config.szz_variant, config.workers, ext);
    log << "traced inducers with " << szz_name(config.szz_variant) << "-szz [" << lap() << "]\n";

    std::set<std::string> vics_all, vfc_ids;
    for (const auto& trace : traces) vics_all.insert(trace.vic_ids.begin(), trace.vic_ids.end());
    for (const auto& record : vfc_records) vfc_ids.insert(record.commit_id);
    stats.vics_total = vics_all.size();

    // Only commits that survived filtering can carry labels; inducers outside
    // the dataset (e.g. merges) are reported but not annotated.
    std::set<std::string> vics_labeled;
    for (const auto& id : vics_all)
        if (kept_index.count(id)) vics_labeled.insert(id);
    stats.vics_labeled = vics_labeled.size();
    if (vics_labeled.size() != vics_all.size())
        log << "note: " << (vics_all.size() - vics_labeled.size())
            << " traced inducer(s) fall outside the filtered dataset\n";

    std::vector<AnnotatedCommit> annotated = annotate(features, vics_labeled, vfc_ids);
    if (config.ideal_setting) {
        std::vector<AnnotatedCommit> reduced;
        for (auto& record : annotated)
            if (record.role != Role::VNC) reduced.push_back(std::move(record));
        annotated = std::move(reduced);
        log << "ideal setting: " << annotated.size() << " VIC/VFC records retained\n";
    }

    SplitSet split = chronological_split(annotated, config.split_ratios);
    stats.split_sizes = {split.train.size(), split.valid.size(), split.test.size()};

    const fs::path out = mining_output_dir(config);
    fs::create_directories(out);

    {
        std::vector<OrderedJson> lines;
        lines.reserve(kept.size());
        for (const auto& commit : kept) lines.push_back(detail::commit_summary_json(commit));
        write_jsonl(out / "commits.jsonl", lines);
    }
    write_feature_file(features, out / "features.jsonl");
    {
        std::vector<OrderedJson> lines;
        lines.reserve(vfc_records.size());
        for (const auto& record : vfc_records) lines.push_back(detail::vfc_json(record));
        write_jsonl(out / "vfcs.jsonl", lines);
    }
    write_trace_file(traces, out / "traces.jsonl");
    write_split(split, out);

    // Run manifest: the output-determining configuration plus input and
    // output digests. Execution details like the worker count do not shape
    // the dataset and are deliberately absent.
    OrderedJson manifest;
    manifest["tool"] = kToolName;
    manifest["tool_version"] = kToolVersion;
    manifest["command"] = "mining";
    OrderedJson cfg;
    cfg["repo_name"] = config.repo_name;
    cfg["repo_language"] = language_name(config.language);
    cfg["szz_variant"] = szz_name(config.szz_variant);
    cfg["regex_level"] =
        config.regex_level == RegexLevel::StrongOnly ? "strong_only" : "strong_or_medium";
    cfg["split_ratios"] = config.split_ratios;
    cfg["ideal_setting"] = config.ideal_setting;
    if (config.until) cfg["until"] = *config.until;
    if (config.extensions_override)
        cfg["extensions"] = std::vector<std::string>(config.extensions_override->begin(),
                                                     config.extensions_override->end());
    cfg["manual_patch_file"] = config.manual_patch_file.has_value();
    manifest["config"] = std::move(cfg);
    OrderedJson inputs;
    auto head = handle.git({"rev-parse", "HEAD"});
    inputs["head"] = head.exit_code == 0 ? detail::trim_newline(head.out) : std::string();
    manifest["inputs"] = std::move(inputs);
    OrderedJson digests;
    for (const char* name : {"commits.jsonl", "features.jsonl", "vfcs.jsonl", "traces.jsonl",
                             "train.jsonl", "valid.jsonl", "test.jsonl"})
        digests[name] = hex64(fnv1a64(read_file(out / name)));
    manifest["output_digests"] = std::move(digests);
    write_file_atomic(out / "manifest.json", manifest.dump(2) + "\n");

    log << "split sizes: train=" << stats.split_sizes[0] << " valid=" << stats.split_sizes[1]
        << " test=" << stats.split_sizes[2] << " [written in " << lap() << "]\n";
    return stats;
}

// commit_id -> message map from a mined commits.jsonl (vcc_linear token input).
inline std::map<std::string, std::string> load_commit_messages(
    const std::filesystem::path& commits_file) {
    std::map<std::string, std::string> messages;
    for_each_jsonl_line(commits_file, [&](std::size_t line_no, const Json& j) {
        if (!j.is_object() || !j.contains("commit_id") || !j.contains("message"))
            throw SchemaViolation(line_no, "expected commit summary records");
        messages[j["commit_id"].get<std::string>()] = j["message"].get<std::string>();
    });
    return messages;
}

}  // namespace jitvp

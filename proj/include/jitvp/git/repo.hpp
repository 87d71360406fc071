#pragma once

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <cstdlib>
#include <deque>
#include <filesystem>
#include <memory>
#include <mutex>
#include <optional>
#include <queue>
#include <set>
#include <string>
#include <unordered_map>
#include <vector>

#include "jitvp/errors.hpp"
#include "jitvp/git/parallel.hpp"
#include "jitvp/subprocess.hpp"

namespace jitvp {

enum class Language { C, Cpp, Java, JavaScript, Python };

inline Language parse_language(const std::string& name) {
    std::string lower;
    lower.reserve(name.size());
    for (char c : name) lower.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    if (lower == "c") return Language::C;
    if (lower == "c++" || lower == "cpp" || lower == "cxx") return Language::Cpp;
    if (lower == "java") return Language::Java;
    if (lower == "javascript" || lower == "js") return Language::JavaScript;
    if (lower == "python" || lower == "py") return Language::Python;
    throw UnsupportedLanguage(name);
}

inline const char* language_name(Language lang) {
    switch (lang) {
        case Language::C: return "C";
        case Language::Cpp: return "C++";
        case Language::Java: return "Java";
        case Language::JavaScript: return "JavaScript";
        case Language::Python: return "Python";
    }
    return "?";
}

// One contiguous change region of a unified diff (context width 0).
struct DiffHunk {
    std::size_t old_start = 0;  // 1-based first affected line in the pre-image
    std::size_t old_count = 0;
    std::size_t new_start = 0;
    std::size_t new_count = 0;
    std::vector<std::string> removed_lines;
    std::vector<std::string> added_lines;
};

enum class ChangeKind { Add, Delete, Modify, Rename };

struct FileDiff {
    std::optional<std::string> old_path;  // absent for added files
    std::optional<std::string> new_path;  // absent for deleted files
    ChangeKind change_kind = ChangeKind::Modify;
    bool binary = false;  // binary files carry no hunks
    std::vector<DiffHunk> hunks;

    const std::string& path() const { return new_path ? *new_path : *old_path; }
};

struct CommitRecord {
    std::string id;
    std::vector<std::string> parent_ids;
    std::string author_id;  // lowercased e-mail, or lowercased name when e-mail is empty
    std::int64_t author_time = 0;
    std::int64_t commit_time = 0;
    std::string message;
    std::vector<FileDiff> files;

    bool is_merge() const { return parent_ids.size() > 1; }
};

struct BlameEntry {
    std::string file;       // path as requested, at the blamed revision
    std::size_t line_no = 0;  // 1-based at the blamed revision
    std::string content;
    std::string origin_commit;
    std::size_t origin_line_no = 0;  // 1-based in the origin commit
    std::string origin_file;         // path at the origin commit (tracks renames)
};

namespace detail {

inline std::string to_lower(const std::string& s) {
    std::string out;
    out.reserve(s.size());
    for (char c : s) out.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
    return out;
}

inline std::string trim_newline(std::string s) {
    while (!s.empty() && (s.back() == '\n' || s.back() == '\r')) s.pop_back();
    return s;
}

inline std::string normalize_author(const std::string& name, const std::string& email) {
    return email.empty() ? to_lower(name) : to_lower(email);
}

// Undoes git's C-style path quoting ("a\tb" etc.). Unquoted paths pass through.
inline std::string unquote_git_path(const std::string& raw) {
    if (raw.size() < 2 || raw.front() != '"') return raw;
    std::string out;
    out.reserve(raw.size());
    for (std::size_t i = 1; i + 1 < raw.size(); ++i) {
        char c = raw[i];
        if (c != '\\') {
            out.push_back(c);
            continue;
        }
        ++i;
        if (i + 1 > raw.size()) break;
        char e = raw[i];
        switch (e) {
            case 'n': out.push_back('\n'); break;
            case 't': out.push_back('\t'); break;
            case 'r': out.push_back('\r'); break;
            case 'a': out.push_back('\a'); break;
            case 'b': out.push_back('\b'); break;
            case 'f': out.push_back('\f'); break;
            case 'v': out.push_back('\v'); break;
            case '\\': out.push_back('\\'); break;
            case '"': out.push_back('"'); break;
            default:
                if (e >= '0' && e <= '7') {
                    int value = 0;
                    std::size_t digits = 0;
                    while (digits < 3 && i + 1 <= raw.size() - 1 && raw[i] >= '0' && raw[i] <= '7') {
                        value = value * 8 + (raw[i] - '0');
                        ++i;
                        ++digits;
                    }
                    --i;
                    out.push_back(static_cast<char>(value));
                } else {
                    out.push_back(e);
                }
        }
    }
    return out;
}

inline std::vector<std::string> split_lines(const std::string& text) {
    std::vector<std::string> lines;
    std::size_t start = 0;
    while (start <= text.size()) {
        std::size_t end = text.find('\n', start);
        if (end == std::string::npos) {
            if (start < text.size()) lines.push_back(text.substr(start));
            break;
        }
        lines.push_back(text.substr(start, end - start));
        start = end + 1;
    }
    return lines;
}

}  // namespace detail

// Bounded read-through caches for commit objects and whole-file blames. SZZ
// tracing revisits the same commits and blame targets heavily.
class RepoCache {
public:
    explicit RepoCache(std::size_t commit_cap = 8192, std::size_t blame_cap = 1024)
        : commit_cap_(commit_cap), blame_cap_(blame_cap) {}

    template <typename Fn>
    CommitRecord commit(const std::string& id, Fn load) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = commits_.find(id);
            if (it != commits_.end()) return it->second;
        }
        CommitRecord record = load();
        std::lock_guard<std::mutex> lock(mutex_);
        if (commits_.size() >= commit_cap_) evict(commits_, commit_order_);
        if (commits_.emplace(id, record).second) commit_order_.push_back(id);
        return record;
    }

    template <typename Fn>
    std::vector<BlameEntry> blame(const std::string& key, Fn load) {
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = blames_.find(key);
            if (it != blames_.end()) return it->second;
        }
        std::vector<BlameEntry> lines = load();
        std::lock_guard<std::mutex> lock(mutex_);
        if (blames_.size() >= blame_cap_) evict(blames_, blame_order_);
        if (blames_.emplace(key, lines).second) blame_order_.push_back(key);
        return lines;
    }

    std::optional<std::size_t> lookup_line_count(const std::string& key) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto it = line_counts_.find(key);
        if (it == line_counts_.end()) return std::nullopt;
        return it->second;
    }

    void store_line_count(const std::string& key, std::size_t count) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (line_counts_.size() >= kLineCountCap) {
            std::size_t drop = line_count_order_.size() / 2 + 1;
            while (drop-- && !line_count_order_.empty()) {
                line_counts_.erase(line_count_order_.front());
                line_count_order_.pop_front();
            }
        }
        if (line_counts_.emplace(key, count).second) line_count_order_.push_back(key);
    }

private:
    template <typename Map>
    static void evict(Map& map, std::deque<std::string>& order) {
        // Drop the oldest half; simple and adequate for batch mining.
        std::size_t drop = order.size() / 2 + 1;
        while (drop-- && !order.empty()) {
            map.erase(order.front());
            order.pop_front();
        }
    }

    static constexpr std::size_t kLineCountCap = 1u << 20;

    std::mutex mutex_;
    std::size_t commit_cap_, blame_cap_;
    std::unordered_map<std::string, CommitRecord> commits_;
    std::deque<std::string> commit_order_;
    std::unordered_map<std::string, std::vector<BlameEntry>> blames_;
    std::deque<std::string> blame_order_;
    std::unordered_map<std::string, std::size_t> line_counts_;
    std::deque<std::string> line_count_order_;
};

// Read-only adapter over a local git repository. Shareable across threads;
// every operation shells out to git plumbing and never mutates the store.
// Copies share one cache.
class RepoHandle {
public:
    RepoHandle(std::filesystem::path root, Language language)
        : root_(std::move(root)), language_(language), cache_(std::make_shared<RepoCache>()) {
        auto probe = git({"rev-parse", "--git-dir"});
        if (probe.exit_code != 0) throw NotARepository(root_.string());
        auto head = git({"symbolic-ref", "--short", "-q", "HEAD"});
        head_ref_ = head.exit_code == 0 ? detail::trim_newline(head.out) : std::string("HEAD");
    }

    const std::filesystem::path& root_path() const { return root_; }
    Language primary_language() const { return language_; }
    const std::string& head_ref() const { return head_ref_; }
    RepoCache& cache() const { return *cache_; }

    CommandResult git(const std::vector<std::string>& args) const {
        std::vector<std::string> argv = {"git", "-C", root_.string(), "-c", "core.quotePath=false"};
        argv.insert(argv.end(), args.begin(), args.end());
        return run_command(argv);
    }

    CommandResult git_checked(const std::vector<std::string>& args) const {
        auto result = git(args);
        if (result.exit_code != 0) {
            std::string cmd = "git";
            for (const auto& a : args) cmd += " " + a;
            throw GitCommandFailed(cmd, result.exit_code, result.err);
        }
        return result;
    }

    CommandResult git_stdin(const std::vector<std::string>& args,
                            const std::string& stdin_data) const {
        std::vector<std::string> argv = {"git", "-C", root_.string(), "-c", "core.quotePath=false"};
        argv.insert(argv.end(), args.begin(), args.end());
        auto result = run_command(argv, {}, stdin_data);
        if (result.exit_code != 0) {
            std::string cmd = "git";
            for (const auto& a : args) cmd += " " + a;
            throw GitCommandFailed(cmd + " (batched)", result.exit_code, result.err);
        }
        return result;
    }

private:
    std::filesystem::path root_;
    Language language_;
    std::string head_ref_;
    std::shared_ptr<RepoCache> cache_;
};

namespace detail {

// --- raw commit object parsing (git cat-file commit <id>) -------------------

struct RawIdentity {
    std::string name;
    std::string email;
    std::int64_t time = 0;
};

inline RawIdentity parse_identity(const std::string& line) {
    // "Name Possibly Spaced <email@host> 1700000000 +0200"
    RawIdentity ident;
    std::size_t lt = line.find('<');
    std::size_t gt = line.find('>', lt == std::string::npos ? 0 : lt);
    if (lt == std::string::npos || gt == std::string::npos) return ident;
    ident.name = line.substr(0, lt);
    while (!ident.name.empty() && ident.name.back() == ' ') ident.name.pop_back();
    ident.email = line.substr(lt + 1, gt - lt - 1);
    std::size_t pos = gt + 1;
    while (pos < line.size() && line[pos] == ' ') ++pos;
    std::size_t sp = line.find(' ', pos);
    ident.time = std::strtoll(line.substr(pos, sp - pos).c_str(), nullptr, 10);
    return ident;
}

inline CommitRecord parse_raw_commit(const std::string& id, const std::string& raw) {
    CommitRecord record;
    record.id = id;
    std::size_t pos = 0;
    bool in_headers = true;
    std::string author_name, author_email;
    while (in_headers && pos < raw.size()) {
        std::size_t end = raw.find('\n', pos);
        if (end == std::string::npos) end = raw.size();
        std::string line = raw.substr(pos, end - pos);
        pos = end + 1;
        if (line.empty()) {
            in_headers = false;
            break;
        }
        if (line[0] == ' ') continue;  // continuation (gpgsig etc.)
        if (line.rfind("parent ", 0) == 0) {
            record.parent_ids.push_back(line.substr(7));
        } else if (line.rfind("author ", 0) == 0) {
            RawIdentity ident = parse_identity(line.substr(7));
            author_name = ident.name;
            author_email = ident.email;
            record.author_time = ident.time;
        } else if (line.rfind("committer ", 0) == 0) {
            record.commit_time = parse_identity(line.substr(10)).time;
        }
    }
    record.author_id = normalize_author(author_name, author_email);
    record.message = raw.substr(std::min(pos, raw.size()));
    while (!record.message.empty() && record.message.back() == '\n') record.message.pop_back();
    return record;
}

// --- unified diff parsing (-U0 patches) --------------------------------------

inline bool parse_hunk_header(const std::string& line, DiffHunk& hunk) {
    // "@@ -12,3 +14,2 @@ optional heading"
    if (line.rfind("@@ -", 0) != 0) return false;
    const char* p = line.c_str() + 4;
    char* end = nullptr;
    hunk.old_start = std::strtoull(p, &end, 10);
    hunk.old_count = 1;
    if (*end == ',') hunk.old_count = std::strtoull(end + 1, &end, 10);
    while (*end == ' ') ++end;
    if (*end != '+') return false;
    hunk.new_start = std::strtoull(end + 1, &end, 10);
    hunk.new_count = 1;
    if (*end == ',') hunk.new_count = std::strtoull(end + 1, &end, 10);
    return true;
}

// Splits the payload of a "diff --git a/X b/Y" line into the two paths.
// Only used as a fallback when no ---/+++/rename headers follow (mode-only
// changes), where both sides name the same path.
inline void parse_diff_git_paths(const std::string& payload, FileDiff& file) {
    for (std::size_t pos = payload.find(" b/"); pos != std::string::npos;
         pos = payload.find(" b/", pos + 1)) {
        std::string left = payload.substr(0, pos);
        std::string right = payload.substr(pos + 3);
        if (left.rfind("a/", 0) == 0 && left.substr(2) == right) {
            file.old_path = right;
            file.new_path = right;
            return;
        }
    }
    std::size_t pos = payload.rfind(" b/");
    if (pos != std::string::npos && payload.rfind("a/", 0) == 0) {
        file.old_path = payload.substr(2, pos - 2);
        file.new_path = payload.substr(pos + 3);
    }
}

inline std::string strip_diff_prefix(const std::string& path) {
    std::string unquoted = unquote_git_path(path);
    if (unquoted == "/dev/null") return {};
    if (unquoted.size() > 2 && (unquoted[0] == 'a' || unquoted[0] == 'b') && unquoted[1] == '/')
        return unquoted.substr(2);
    return unquoted;
}

inline std::vector<FileDiff> parse_patch(const std::string& patch) {
    std::vector<FileDiff> files;
    FileDiff* current = nullptr;
    DiffHunk* hunk = nullptr;
    bool saw_old_header = false, saw_new_header = false;
    bool is_new_file = false, is_deleted_file = false, is_rename = false;

    auto finalize_kind = [&](FileDiff& f) {
        if (is_new_file) f.change_kind = ChangeKind::Add;
        else if (is_deleted_file) f.change_kind = ChangeKind::Delete;
        else if (is_rename) f.change_kind = ChangeKind::Rename;
        else f.change_kind = ChangeKind::Modify;
        if (f.change_kind == ChangeKind::Add) f.old_path.reset();
        if (f.change_kind == ChangeKind::Delete) f.new_path.reset();
    };

    for (const std::string& line : split_lines(patch)) {
        if (line.rfind("diff --git ", 0) == 0) {
            if (current) finalize_kind(*current);
            files.emplace_back();
            current = &files.back();
            hunk = nullptr;
            saw_old_header = saw_new_header = false;
            is_new_file = is_deleted_file = is_rename = false;
            parse_diff_git_paths(line.substr(11), *current);
            continue;
        }
        if (!current) continue;
        if (hunk == nullptr || line.empty() ||
            (line[0] != '-' && line[0] != '+' && line[0] != '\\')) {
            if (line.rfind("new file mode", 0) == 0) { is_new_file = true; continue; }
            if (line.rfind("deleted file mode", 0) == 0) { is_deleted_file = true; continue; }
            if (line.rfind("rename from ", 0) == 0) {
                is_rename = true;
                current->old_path = unquote_git_path(line.substr(12));
                continue;
            }
            if (line.rfind("rename to ", 0) == 0) {
                is_rename = true;
                current->new_path = unquote_git_path(line.substr(10));
                continue;
            }
            if (line.rfind("--- ", 0) == 0 && !saw_old_header) {
                saw_old_header = true;
                std::string path = strip_diff_prefix(line.substr(4));
                if (path.empty()) current->old_path.reset();
                else current->old_path = path;
                continue;
            }
            if (line.rfind("+++ ", 0) == 0 && !saw_new_header) {
                saw_new_header = true;
                std::string path = strip_diff_prefix(line.substr(4));
                if (path.empty()) current->new_path.reset();
                else current->new_path = path;
                continue;
            }
            if (line.rfind("Binary files ", 0) == 0 || line.rfind("GIT binary patch", 0) == 0) {
                current->binary = true;
                continue;
            }
            DiffHunk header;
            if (parse_hunk_header(line, header)) {
                current->hunks.push_back(header);
                hunk = &current->hunks.back();
            }
            continue;
        }
        // Inside a hunk body; -U0 patches carry no context lines.
        if (line[0] == '-') hunk->removed_lines.push_back(line.substr(1));
        else if (line[0] == '+') hunk->added_lines.push_back(line.substr(1));
        // "\ No newline at end of file" markers are ignored.
    }
    if (current) finalize_kind(*current);
    return files;
}

}  // namespace detail

// --- operations ----------------------------------------------------------------

inline RepoHandle open_repo(const std::filesystem::path& path, Language language) {
    return RepoHandle(path, language);
}

// Loads one commit's metadata and its first-parent patch (rename detection at
// 50% similarity, zero context). Root commits diff against the empty tree.
inline CommitRecord load_commit(const RepoHandle& handle, const std::string& id) {
    return handle.cache().commit(id, [&] {
        auto raw = handle.git_checked({"cat-file", "commit", id});
        CommitRecord record = detail::parse_raw_commit(id, raw.out);

        std::vector<std::string> args = {"diff-tree", "-p", "-U0", "-M50%",
                                         "--full-index", "--no-color"};
        if (record.parent_ids.empty()) {
            args.push_back("--root");
            args.push_back(id);
        } else {
            args.push_back(record.parent_ids.front());
            args.push_back(id);
        }
        auto patch = handle.git_checked(args);
        record.files = detail::parse_patch(patch.out);
        return record;
    });
}

// Applies a read-only task per commit id with the given worker count.
// Results come back in input order and match a serial run byte-for-byte.
template <typename Fn>
auto map_commits_parallel(const RepoHandle& handle, const std::vector<std::string>& ids,
                          Fn task, unsigned workers)
    -> std::vector<decltype(task(handle, ids[0]))> {
    return map_ordered(ids, [&](const std::string& id) { return task(handle, id); }, workers);
}

namespace detail {

// One parsed entry of a `git cat-file --batch` stream; nullopt for "missing".
inline std::vector<std::optional<std::string>> parse_cat_file_batch(const std::string& output,
                                                                    std::size_t expected) {
    std::vector<std::optional<std::string>> contents;
    contents.reserve(expected);
    std::size_t pos = 0;
    while (contents.size() < expected && pos < output.size()) {
        std::size_t eol = output.find('\n', pos);
        if (eol == std::string::npos) break;
        const std::string header = output.substr(pos, eol - pos);
        pos = eol + 1;
        if (header.size() >= 8 && header.compare(header.size() - 8, 8, " missing") == 0) {
            contents.push_back(std::nullopt);
            continue;
        }
        // "<sha> <type> <size>"
        std::size_t size_at = header.rfind(' ');
        if (size_at == std::string::npos) throw Error("unparsable cat-file batch header: " + header);
        const std::size_t size = std::strtoull(header.c_str() + size_at + 1, nullptr, 10);
        if (pos + size > output.size()) throw Error("truncated cat-file batch stream");
        contents.emplace_back(output.substr(pos, size));
        pos += size + 1;  // object bytes plus the trailing newline
    }
    if (contents.size() != expected) throw Error("short cat-file batch stream");
    return contents;
}

// Splits `git diff-tree --stdin` output into per-commit patches. Each
// response begins with the echoed commit id on a line of its own; patch
// bodies never contain a bare 40-hex line (zero-context hunks prefix every
// content line).
inline std::vector<std::string> split_diff_tree_stream(const std::string& output,
                                                       const std::vector<std::string>& ids) {
    std::vector<std::string> patches;
    patches.reserve(ids.size());
    std::size_t pos = 0;
    for (std::size_t k = 0; k < ids.size(); ++k) {
        if (output.compare(pos, ids[k].size(), ids[k]) != 0 ||
            pos + ids[k].size() >= output.size() || output[pos + ids[k].size()] != '\n')
            throw Error("diff-tree stream out of sync at entry " + std::to_string(k));
        pos += ids[k].size() + 1;
        std::size_t end;
        if (k + 1 < ids.size()) {
            const std::string needle = "\n" + ids[k + 1] + "\n";
            std::size_t found = pos == 0 ? std::string::npos : output.find(needle, pos - 1);
            if (found == std::string::npos)
                throw Error("diff-tree stream missing echo for entry " + std::to_string(k + 1));
            end = found + 1;
        } else {
            end = output.size();
        }
        patches.push_back(output.substr(pos, end - pos));
        pos = end;
    }
    return patches;
}

}  // namespace detail

// Loads many commits with two batched plumbing calls per chunk (metadata via
// `cat-file --batch`, first-parent patches via `diff-tree --stdin`). This is
// the bulk path: per-process spawn cost stays constant in the commit count.
inline std::vector<CommitRecord> load_commits_batch(const RepoHandle& handle,
                                                    const std::vector<std::string>& ids,
                                                    unsigned workers) {
    if (ids.empty()) return {};
    if (workers == 0) workers = 1;
    const std::size_t chunk_size =
        std::max<std::size_t>(1, std::min<std::size_t>((ids.size() + workers - 1) / workers, 2000));
    std::vector<std::vector<std::string>> chunks;
    for (std::size_t at = 0; at < ids.size(); at += chunk_size)
        chunks.emplace_back(ids.begin() + static_cast<std::ptrdiff_t>(at),
                            ids.begin() + static_cast<std::ptrdiff_t>(
                                              std::min(at + chunk_size, ids.size())));

    auto load_chunk = [&](const std::vector<std::string>& chunk) {
        std::string request;
        for (const auto& id : chunk) request += id + "\n";
        auto meta = handle.git_stdin({"cat-file", "--batch"}, request);
        auto raw_commits = detail::parse_cat_file_batch(meta.out, chunk.size());

        std::vector<CommitRecord> records;
        records.reserve(chunk.size());
        std::string diff_request;
        for (std::size_t i = 0; i < chunk.size(); ++i) {
            if (!raw_commits[i]) throw Error("commit object missing: " + chunk[i]);
            records.push_back(detail::parse_raw_commit(chunk[i], *raw_commits[i]));
            diff_request += chunk[i];
            if (!records.back().parent_ids.empty())
                diff_request += " " + records.back().parent_ids.front();
            diff_request += "\n";
        }
        auto patches = handle.git_stdin({"diff-tree", "--stdin", "-p", "-U0", "-M50%",
                                         "--full-index", "--no-color", "--root", "-r"},
                                        diff_request);
        auto split = detail::split_diff_tree_stream(patches.out, chunk);
        for (std::size_t i = 0; i < chunk.size(); ++i)
            records[i].files = detail::parse_patch(split[i]);
        return records;
    };

    auto chunk_results = map_ordered(chunks, load_chunk, workers);
    std::vector<CommitRecord> records;
    records.reserve(ids.size());
    for (auto& chunk : chunk_results)
        for (auto& record : chunk) records.push_back(std::move(record));
    return records;
}

// Warms the line-count cache for (revision, path) pairs with one batched
// cat-file call per chunk.
inline void prefetch_line_counts(const RepoHandle& handle,
                                 const std::vector<std::pair<std::string, std::string>>& wanted,
                                 unsigned workers) {
    std::vector<std::string> keys;
    {
        std::set<std::string> seen;
        for (const auto& [revision, file] : wanted) {
            std::string key = revision + ":" + file;
            if (seen.insert(key).second && !handle.cache().lookup_line_count(key))
                keys.push_back(std::move(key));
        }
    }
    if (keys.empty()) return;
    if (workers == 0) workers = 1;
    const std::size_t chunk_size =
        std::max<std::size_t>(1, std::min<std::size_t>((keys.size() + workers - 1) / workers, 4000));
    std::vector<std::vector<std::string>> chunks;
    for (std::size_t at = 0; at < keys.size(); at += chunk_size)
        chunks.emplace_back(keys.begin() + static_cast<std::ptrdiff_t>(at),
                            keys.begin() + static_cast<std::ptrdiff_t>(
                                               std::min(at + chunk_size, keys.size())));

    map_ordered(chunks,
                [&](const std::vector<std::string>& chunk) {
                    std::string request;
                    for (const auto& key : chunk) request += key + "\n";
                    auto result = handle.git_stdin({"cat-file", "--batch"}, request);
                    auto contents = detail::parse_cat_file_batch(result.out, chunk.size());
                    for (std::size_t i = 0; i < chunk.size(); ++i) {
                        std::size_t count = 0;
                        if (contents[i] && !contents[i]->empty()) {
                            count = static_cast<std::size_t>(
                                std::count(contents[i]->begin(), contents[i]->end(), '\n'));
                            if (contents[i]->back() != '\n') ++count;
                        }
                        handle.cache().store_line_count(chunk[i], count);
                    }
                    return 0;
                },
                workers);
}

// Ancestors of HEAD ordered by commit time ascending; ties resolved
// parent-before-child, then by lexicographic hash.
inline std::vector<CommitRecord> enumerate_commits(
    const RepoHandle& handle, std::optional<std::int64_t> until = std::nullopt,
    unsigned workers = 1) {
    auto head = handle.git({"rev-parse", "--verify", "-q", "HEAD^{commit}"});
    if (head.exit_code != 0) return {};  // repository without commits

    auto listed = handle.git_checked({"rev-list", "HEAD"});
    std::vector<std::string> ids = detail::split_lines(listed.out);

    std::vector<CommitRecord> loaded = load_commits_batch(handle, ids, workers);

    std::unordered_map<std::string, std::size_t> index;
    index.reserve(loaded.size());
    std::vector<bool> included(loaded.size(), true);
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        if (until && loaded[i].commit_time > *until) included[i] = false;
        else index.emplace(loaded[i].id, i);
    }

    // Kahn's algorithm with a (commit_time, id) priority queue: output is a
    // topological order that is time-sorted whenever the DAG allows.
    using Key = std::pair<std::int64_t, std::string>;
    std::priority_queue<Key, std::vector<Key>, std::greater<Key>> ready;
    std::unordered_map<std::string, std::size_t> pending_parents;
    std::unordered_map<std::string, std::vector<std::string>> children;
    for (std::size_t i = 0; i < loaded.size(); ++i) {
        if (!included[i]) continue;
        const auto& record = loaded[i];
        std::size_t in_set = 0;
        for (const auto& parent : record.parent_ids) {
            if (index.count(parent)) {
                ++in_set;
                children[parent].push_back(record.id);
            }
        }
        pending_parents[record.id] = in_set;
        if (in_set == 0) ready.emplace(record.commit_time, record.id);
    }

    std::vector<CommitRecord> ordered;
    ordered.reserve(index.size());
    while (!ready.empty()) {
        auto [time, id] = ready.top();
        ready.pop();
        ordered.push_back(loaded[index.at(id)]);
        auto kids = children.find(id);
        if (kids == children.end()) continue;
        for (const auto& child : kids->second) {
            if (--pending_parents[child] == 0)
                ready.emplace(loaded[index.at(child)].commit_time, child);
        }
    }
    return ordered;
}

// Whole-file blame at a revision, parsed from --line-porcelain output.
inline std::vector<BlameEntry> blame_file(const RepoHandle& handle, const std::string& revision,
                                          const std::string& file) {
    return handle.cache().blame(revision + "\x01" + file, [&] {
        auto exists = handle.git({"cat-file", "-e", revision + ":" + file});
        if (exists.exit_code != 0) throw FileAbsentAtRevision(file, revision);

        auto result = handle.git({"blame", "--line-porcelain", revision, "--", file});
        if (result.exit_code != 0) throw GitCommandFailed("blame " + revision + " -- " + file,
                                                          result.exit_code, result.err);
        std::vector<BlameEntry> lines;
        BlameEntry entry;
        bool in_group = false;
        for (const std::string& line : detail::split_lines(result.out)) {
            if (!line.empty() && line[0] == '\t') {
                entry.content = line.substr(1);
                entry.file = file;
                lines.push_back(entry);
                in_group = false;
                continue;
            }
            if (!in_group && line.size() > 41 && line[40] == ' ') {
                entry = BlameEntry{};
                entry.origin_commit = line.substr(0, 40);
                const char* p = line.c_str() + 41;
                char* end = nullptr;
                entry.origin_line_no = std::strtoull(p, &end, 10);
                entry.line_no = std::strtoull(end, &end, 10);
                in_group = true;
                continue;
            }
            if (line.rfind("filename ", 0) == 0) entry.origin_file = detail::unquote_git_path(line.substr(9));
        }
        return lines;
    });
}

// BlameEntry per requested line, in request order.
inline std::vector<BlameEntry> blame_at(const RepoHandle& handle, const std::string& revision,
                                        const std::string& file,
                                        const std::vector<std::size_t>& lines) {
    std::vector<BlameEntry> all = blame_file(handle, revision, file);
    std::vector<BlameEntry> out;
    out.reserve(lines.size());
    for (std::size_t line_no : lines) {
        if (line_no == 0 || line_no > all.size()) throw LineOutOfRange(file, line_no, all.size());
        out.push_back(all[line_no - 1]);
    }
    return out;
}

// Newline-delimited line count of a file at a revision; 0 when absent.
// Served from the prefetch cache when warm.
inline std::size_t count_lines_at(const RepoHandle& handle, const std::string& revision,
                                  const std::string& file) {
    const std::string key = revision + ":" + file;
    if (auto cached = handle.cache().lookup_line_count(key)) return *cached;
    auto exists = handle.git({"cat-file", "-e", key});
    std::size_t count = 0;
    if (exists.exit_code == 0) {
        auto blob = handle.git_checked({"cat-file", "blob", key});
        const std::string& content = blob.out;
        if (!content.empty()) {
            count = static_cast<std::size_t>(std::count(content.begin(), content.end(), '\n'));
            if (content.back() != '\n') ++count;
        }
    }
    handle.cache().store_line_count(key, count);
    return count;
}

inline bool is_ancestor(const RepoHandle& handle, const std::string& maybe_ancestor,
                        const std::string& descendant) {
    auto result = handle.git({"merge-base", "--is-ancestor", maybe_ancestor, descendant});
    return result.exit_code == 0;
}

}  // namespace jitvp

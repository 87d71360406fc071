#pragma once

#include <filesystem>
#include <fstream>
#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "jitvp/errors.hpp"

namespace jitvp {

using Json = nlohmann::json;
// Preserves insertion order; used by writers so emitted key order is stable.
using OrderedJson = nlohmann::ordered_json;

// Writes content to path atomically (temp file in the same directory, then rename).
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    fs::create_directories(path.parent_path().empty() ? fs::path(".") : path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error("cannot open for writing: " + tmp.string());
        out.write(content.data(), static_cast<std::streamsize>(content.size()));
        if (!out) throw Error("write failed: " + tmp.string());
    }
    fs::rename(tmp, path);
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path.string());
    return std::string(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

// Parses a JSONL file; calls fn(line_no, parsed) per nonempty line (1-based).
inline void for_each_jsonl_line(const std::filesystem::path& path,
                                const std::function<void(std::size_t, const Json&)>& fn) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open for reading: " + path.string());
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        Json parsed = Json::parse(line, nullptr, false);
        if (parsed.is_discarded()) throw MalformedLine(line_no, "invalid JSON");
        fn(line_no, parsed);
    }
}

inline std::vector<Json> read_jsonl(const std::filesystem::path& path) {
    std::vector<Json> records;
    for_each_jsonl_line(path, [&](std::size_t, const Json& j) { records.push_back(j); });
    return records;
}

// Serializes one object per line and writes the file atomically.
template <typename Range>
void write_jsonl(const std::filesystem::path& path, const Range& objects) {
    std::string buffer;
    for (const auto& obj : objects) {
        buffer += obj.dump();
        buffer += '\n';
    }
    write_file_atomic(path, buffer);
}

// FNV-1a 64-bit, used for dataset fingerprints and token hashing.
inline std::uint64_t fnv1a64(const void* data, std::size_t size, std::uint64_t seed = 0xcbf29ce484222325ULL) {
    const auto* bytes = static_cast<const unsigned char*>(data);
    std::uint64_t h = seed;
    for (std::size_t i = 0; i < size; ++i) {
        h ^= bytes[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t fnv1a64(const std::string& s) { return fnv1a64(s.data(), s.size()); }

inline std::string hex64(std::uint64_t v) {
    static const char* digits = "0123456789abcdef";
    std::string out(16, '0');
    for (int i = 15; i >= 0; --i) {
        out[static_cast<std::size_t>(i)] = digits[v & 0xf];
        v >>= 4;
    }
    return out;
}

}  // namespace jitvp

#pragma once

#include <stdexcept>
#include <string>

namespace jitvp {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct NotARepository : Error {
    explicit NotARepository(const std::string& path)
        : Error("not a git repository: " + path) {}
};

struct UnsupportedLanguage : Error {
    explicit UnsupportedLanguage(const std::string& name)
        : Error("unsupported language: " + name) {}
};

// A git plumbing invocation exited nonzero.
struct GitCommandFailed : Error {
    GitCommandFailed(const std::string& cmd, int code, const std::string& stderr_text)
        : Error("git command failed (" + std::to_string(code) + "): " + cmd +
                (stderr_text.empty() ? "" : "\n" + stderr_text)) {}
};

struct FileAbsentAtRevision : Error {
    FileAbsentAtRevision(const std::string& file, const std::string& revision)
        : Error("file absent at revision: " + file + " @ " + revision) {}
};

struct LineOutOfRange : Error {
    LineOutOfRange(const std::string& file, std::size_t line, std::size_t file_lines)
        : Error("line " + std::to_string(line) + " out of range for " + file +
                " (" + std::to_string(file_lines) + " lines)") {}
};

struct OutOfOrderCommit : Error {
    explicit OutOfOrderCommit(const std::string& id)
        : Error("commit folded or extracted out of chronological order: " + id) {}
};

struct MalformedLine : Error {
    MalformedLine(std::size_t line_no, const std::string& why)
        : Error("malformed line " + std::to_string(line_no) + ": " + why), line(line_no) {}
    std::size_t line;
};

struct SchemaViolation : Error {
    SchemaViolation(std::size_t line_no, const std::string& why)
        : Error("schema violation at line " + std::to_string(line_no) + ": " + why), line(line_no) {}
    std::size_t line;
};

struct ScoreOutOfRange : Error {
    ScoreOutOfRange(std::size_t line_no, double score)
        : Error("score out of [0,1] at line " + std::to_string(line_no) + ": " +
                std::to_string(score)) {}
};

struct SchemaMismatch : Error {
    explicit SchemaMismatch(const std::string& why) : Error("schema mismatch: " + why) {}
};

struct SingleClassTrainingSet : Error {
    SingleClassTrainingSet() : Error("training set contains a single class") {}
};

struct SingleClassEvalSet : Error {
    SingleClassEvalSet() : Error("evaluation set contains a single class") {}
};

struct VersionMismatch : Error {
    explicit VersionMismatch(const std::string& why) : Error("artifact version mismatch: " + why) {}
};

struct EmptyDataset : Error {
    EmptyDataset() : Error("dataset is empty") {}
};

struct UnknownId : Error {
    explicit UnknownId(const std::string& id) : Error("unknown commit id: " + id) {}
};

}  // namespace jitvp

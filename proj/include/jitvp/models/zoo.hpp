#pragma once

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "jitvp/dataset.hpp"
#include "jitvp/errors.hpp"
#include "jitvp/jsonl.hpp"
#include "jitvp/metrics.hpp"
#include "jitvp/models/linear.hpp"
#include "jitvp/models/tree.hpp"

namespace jitvp {

enum class ModelKind { Lr, La, Tlel, VccLinear, External };

inline const char* model_kind_name(ModelKind kind) {
    switch (kind) {
        case ModelKind::Lr: return "lr";
        case ModelKind::La: return "la";
        case ModelKind::Tlel: return "tlel";
        case ModelKind::VccLinear: return "vcc_linear";
        case ModelKind::External: return "external";
    }
    return "?";
}

inline ModelKind parse_model_kind(const std::string& name) {
    if (name == "lr") return ModelKind::Lr;
    if (name == "la" || name == "lapredict") return ModelKind::La;
    if (name == "tlel") return ModelKind::Tlel;
    if (name == "vcc_linear" || name == "vccfinder" || name == "vcc") return ModelKind::VccLinear;
    if (name == "external") return ModelKind::External;
    throw Error("unknown model: " + name + " (supported: lr, la, tlel, vcc_linear, external)");
}

struct Hyperparameters {
    std::uint64_t seed = 42;
    int epochs = 200;  // gradient-descent iterations; tree kinds ignore it
    double l2 = 1e-4;
    bool class_weights = true;  // inverse-class-frequency example weights
    std::size_t outer_bags = 10;
    std::size_t inner_trees = 10;
};

struct ModelArtifact {
    ModelKind kind = ModelKind::Lr;
    std::vector<std::string> feature_names;
    std::vector<double> norm_mean;
    std::vector<double> norm_std;  // 0 marks a constant feature (normalizes to 0)
    std::string trained_on;        // dataset fingerprint
    Json parameters;
};

inline constexpr std::uint32_t kVccTokenBuckets = 1u << 18;

// Lowercased alphanumeric tokens, hashed into 2^18 buckets with sign hashing,
// concatenated with the (already normalized) expert features by the caller.
inline SparseRow tokenize_for_vcc(const std::string& message, const std::string& code_change) {
    std::map<std::uint32_t, double> buckets;
    auto consume = [&](const std::string& text) {
        std::string token;
        auto flush = [&] {
            if (token.empty()) return;
            const std::uint64_t h = fnv1a64(token);
            const std::uint32_t bucket = static_cast<std::uint32_t>(h & (kVccTokenBuckets - 1));
            const double sign = ((h >> 18) & 1) ? 1.0 : -1.0;
            buckets[bucket] += sign;
            token.clear();
        };
        for (char c : text) {
            if (std::isalnum(static_cast<unsigned char>(c)))
                token.push_back(static_cast<char>(std::tolower(static_cast<unsigned char>(c))));
            else
                flush();
        }
        flush();
    };
    consume(message);
    consume(code_change);

    SparseRow row;
    row.reserve(buckets.size());
    for (const auto& [index, value] : buckets)
        if (value != 0.0) row.emplace_back(index, value);
    return row;
}

namespace detail {

struct FeatureMatrix {
    std::vector<std::string> names;
    std::vector<std::vector<double>> rows;
    std::vector<int> labels;
};

inline FeatureMatrix build_matrix(const std::vector<AnnotatedCommit>& records) {
    FeatureMatrix m;
    if (records.empty()) return m;
    for (const auto& [key, value] : to_feature_map(records.front().features)) m.names.push_back(key);
    m.rows.reserve(records.size());
    m.labels.reserve(records.size());
    for (const auto& record : records) {
        auto features = to_feature_map(record.features);
        std::vector<double> row;
        row.reserve(m.names.size());
        for (const auto& name : m.names) {
            auto it = features.find(name);
            if (it == features.end())
                throw SchemaMismatch("record " + record.commit_id + " lacks feature \"" + name + "\"");
            row.push_back(it->second);
        }
        m.rows.push_back(std::move(row));
        m.labels.push_back(record.label);
    }
    return m;
}

inline void fit_normalization(const FeatureMatrix& m, std::vector<double>& mean,
                              std::vector<double>& stddev) {
    const std::size_t dim = m.names.size(), n = m.rows.size();
    mean.assign(dim, 0.0);
    stddev.assign(dim, 0.0);
    if (n == 0) return;
    for (const auto& row : m.rows)
        for (std::size_t k = 0; k < dim; ++k) mean[k] += row[k];
    for (std::size_t k = 0; k < dim; ++k) mean[k] /= static_cast<double>(n);
    for (const auto& row : m.rows)
        for (std::size_t k = 0; k < dim; ++k) {
            const double d = row[k] - mean[k];
            stddev[k] += d * d;
        }
    for (std::size_t k = 0; k < dim; ++k)
        stddev[k] = std::sqrt(stddev[k] / static_cast<double>(n));
}

inline std::vector<double> normalize_row(const std::vector<double>& row,
                                         const std::vector<double>& mean,
                                         const std::vector<double>& stddev) {
    std::vector<double> out(row.size());
    for (std::size_t k = 0; k < row.size(); ++k)
        out[k] = stddev[k] > 0 ? (row[k] - mean[k]) / stddev[k] : 0.0;
    return out;
}

inline void require_both_classes_train(const std::vector<int>& labels) {
    bool pos = false, neg = false;
    for (int label : labels) (label == 1 ? pos : neg) = true;
    if (!pos || !neg) throw SingleClassTrainingSet();
}

inline std::vector<double> class_weights_for(const std::vector<int>& labels) {
    double pos = 0, neg = 0;
    for (int label : labels) (label == 1 ? pos : neg) += 1;
    const double total = pos + neg;
    std::vector<double> weights(labels.size());
    for (std::size_t i = 0; i < labels.size(); ++i)
        weights[i] = labels[i] == 1 ? total / (2.0 * pos) : total / (2.0 * neg);
    return weights;
}

inline std::string dataset_fingerprint(const std::vector<AnnotatedCommit>& records) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (const auto& record : records) {
        h = fnv1a64(record.commit_id.data(), record.commit_id.size(), h);
        const char label = record.label ? '1' : '0';
        h = fnv1a64(&label, 1, h);
    }
    return hex64(h);
}

inline SparseRow dense_to_sparse(const std::vector<double>& row, std::uint32_t offset = 0) {
    SparseRow sparse;
    sparse.reserve(row.size());
    for (std::size_t k = 0; k < row.size(); ++k)
        if (row[k] != 0.0) sparse.emplace_back(offset + static_cast<std::uint32_t>(k), row[k]);
    return sparse;
}

inline Json sparse_weights_json(const std::vector<double>& weights) {
    Json out = Json::array();
    for (std::size_t k = 0; k < weights.size(); ++k)
        if (weights[k] != 0.0) out.push_back({static_cast<std::uint32_t>(k), weights[k]});
    return out;
}

}  // namespace detail

// Trains a model. `messages` supplies commit messages for the vcc_linear kind
// (token features); other kinds ignore it. Deterministic for a fixed seed.
inline ModelArtifact train(ModelKind kind, const std::vector<AnnotatedCommit>& train_set,
                           const std::vector<AnnotatedCommit>& /*valid_set*/,
                           const Hyperparameters& hp = {},
                           const std::map<std::string, std::string>& messages = {}) {
    if (train_set.empty()) throw EmptyDataset();
    if (kind == ModelKind::External)
        throw Error("the external kind is import-only; nothing to train");

    detail::FeatureMatrix matrix = detail::build_matrix(train_set);

    ModelArtifact artifact;
    artifact.kind = kind;
    artifact.feature_names = matrix.names;
    artifact.trained_on = detail::dataset_fingerprint(train_set);

    switch (kind) {
        case ModelKind::Lr: {
            detail::require_both_classes_train(matrix.labels);
            detail::fit_normalization(matrix, artifact.norm_mean, artifact.norm_std);
            std::vector<SparseRow> rows;
            rows.reserve(matrix.rows.size());
            for (const auto& row : matrix.rows)
                rows.push_back(detail::dense_to_sparse(
                    detail::normalize_row(row, artifact.norm_mean, artifact.norm_std)));
            std::vector<double> weights;
            if (hp.class_weights) weights = detail::class_weights_for(matrix.labels);
            LogisticProblem problem{&rows, &matrix.labels,
                                    hp.class_weights ? &weights : nullptr, matrix.names.size(),
                                    hp.l2};
            LinearModel model = train_logistic_gd(problem, hp.epochs);
            artifact.parameters = {{"weights", model.weights}, {"bias", model.bias}};
            break;
        }
        case ModelKind::La: {
            // LAPredict scores by the lines-added feature alone; no fitting.
            auto it = std::find(matrix.names.begin(), matrix.names.end(), "la");
            if (it == matrix.names.end()) throw SchemaMismatch("LAPredict needs the \"la\" feature");
            artifact.norm_mean.assign(matrix.names.size(), 0.0);
            artifact.norm_std.assign(matrix.names.size(), 1.0);
            artifact.parameters = {{"feature", "la"}};
            break;
        }
        case ModelKind::Tlel: {
            detail::require_both_classes_train(matrix.labels);
            // Trees split on order statistics; features stay raw.
            artifact.norm_mean.assign(matrix.names.size(), 0.0);
            artifact.norm_std.assign(matrix.names.size(), 1.0);
            TlelModel model = fit_tlel(matrix.rows, matrix.labels, hp.outer_bags, hp.inner_trees,
                                       hp.seed);
            Json forests = Json::array();
            for (const auto& forest : model.forests) forests.push_back(forest_to_json(forest));
            artifact.parameters = {{"forests", forests},
                                   {"outer_bags", hp.outer_bags},
                                   {"inner_trees", hp.inner_trees}};
            break;
        }
        case ModelKind::VccLinear: {
            detail::require_both_classes_train(matrix.labels);
            detail::fit_normalization(matrix, artifact.norm_mean, artifact.norm_std);
            std::vector<SparseRow> rows;
            rows.reserve(train_set.size());
            for (std::size_t i = 0; i < train_set.size(); ++i) {
                auto message_it = messages.find(train_set[i].commit_id);
                SparseRow row = tokenize_for_vcc(
                    message_it == messages.end() ? std::string() : message_it->second, "");
                SparseRow dense = detail::dense_to_sparse(
                    detail::normalize_row(matrix.rows[i], artifact.norm_mean, artifact.norm_std),
                    kVccTokenBuckets);
                row.insert(row.end(), dense.begin(), dense.end());
                rows.push_back(std::move(row));
            }
            std::vector<double> weights;
            if (hp.class_weights) weights = detail::class_weights_for(matrix.labels);
            LogisticProblem problem{&rows, &matrix.labels,
                                    hp.class_weights ? &weights : nullptr,
                                    kVccTokenBuckets + matrix.names.size(), hp.l2};
            LinearModel model = train_logistic_gd(problem, hp.epochs);
            std::vector<double> dense_weights(model.weights.begin() +
                                                  static_cast<std::ptrdiff_t>(kVccTokenBuckets),
                                              model.weights.end());
            model.weights.resize(kVccTokenBuckets);
            artifact.parameters = {{"token_weights", detail::sparse_weights_json(model.weights)},
                                   {"dense_weights", dense_weights},
                                   {"bias", model.bias},
                                   {"buckets", kVccTokenBuckets}};
            break;
        }
        case ModelKind::External:
            break;  // unreachable
    }
    return artifact;
}

// Scores records with a trained artifact. Every kind emits scores in [0,1].
inline std::vector<PredictionRecord> predict(const ModelArtifact& artifact,
                                             const std::vector<AnnotatedCommit>& records,
                                             const std::map<std::string, std::string>& messages = {}) {
    std::vector<PredictionRecord> predictions;
    predictions.reserve(records.size());

    auto effort_of = [](const AnnotatedCommit& record) -> std::uint64_t {
        auto features = to_feature_map(record.features);
        double churn = 0;
        if (auto it = features.find("la"); it != features.end()) churn += it->second;
        if (auto it = features.find("ld"); it != features.end()) churn += it->second;
        return churn > 0 ? static_cast<std::uint64_t>(churn) : 0;
    };

    auto row_of = [&](const AnnotatedCommit& record) {
        auto features = to_feature_map(record.features);
        std::vector<double> row;
        row.reserve(artifact.feature_names.size());
        for (const auto& name : artifact.feature_names) {
            auto it = features.find(name);
            if (it == features.end())
                throw SchemaMismatch("record " + record.commit_id + " lacks feature \"" + name +
                                     "\"");
            row.push_back(it->second);
        }
        return row;
    };

    switch (artifact.kind) {
        case ModelKind::Lr: {
            LinearModel model;
            model.weights = artifact.parameters.at("weights").get<std::vector<double>>();
            model.bias = artifact.parameters.at("bias").get<double>();
            for (const auto& record : records) {
                auto z = detail::normalize_row(row_of(record), artifact.norm_mean,
                                               artifact.norm_std);
                double score = predict_logistic(model, detail::dense_to_sparse(z));
                predictions.push_back({record.commit_id, score, record.label, effort_of(record)});
            }
            break;
        }
        case ModelKind::La: {
            const std::string feature = artifact.parameters.at("feature").get<std::string>();
            std::vector<double> raw;
            raw.reserve(records.size());
            for (const auto& record : records) {
                auto features = to_feature_map(record.features);
                auto it = features.find(feature);
                if (it == features.end())
                    throw SchemaMismatch("record " + record.commit_id + " lacks feature \"" +
                                         feature + "\"");
                raw.push_back(it->second);
            }
            // Rank-preserving min-max over the batch; a constant batch is 0.5.
            double lo = 0, hi = 0;
            if (!raw.empty()) {
                lo = *std::min_element(raw.begin(), raw.end());
                hi = *std::max_element(raw.begin(), raw.end());
            }
            for (std::size_t i = 0; i < records.size(); ++i) {
                const double score = hi > lo ? (raw[i] - lo) / (hi - lo) : 0.5;
                predictions.push_back(
                    {records[i].commit_id, score, records[i].label, effort_of(records[i])});
            }
            break;
        }
        case ModelKind::Tlel: {
            TlelModel model;
            for (const auto& forest : artifact.parameters.at("forests"))
                model.forests.push_back(forest_from_json(forest));
            for (const auto& record : records) {
                double score = model.predict(row_of(record));
                predictions.push_back({record.commit_id, score, record.label, effort_of(record)});
            }
            break;
        }
        case ModelKind::VccLinear: {
            LinearModel model;
            model.weights.assign(kVccTokenBuckets, 0.0);
            for (const auto& entry : artifact.parameters.at("token_weights"))
                model.weights[entry.at(0).get<std::uint32_t>()] = entry.at(1).get<double>();
            const auto dense = artifact.parameters.at("dense_weights").get<std::vector<double>>();
            model.weights.insert(model.weights.end(), dense.begin(), dense.end());
            model.bias = artifact.parameters.at("bias").get<double>();
            for (const auto& record : records) {
                auto message_it = messages.find(record.commit_id);
                SparseRow row = tokenize_for_vcc(
                    message_it == messages.end() ? std::string() : message_it->second, "");
                SparseRow dense_part = detail::dense_to_sparse(
                    detail::normalize_row(row_of(record), artifact.norm_mean, artifact.norm_std),
                    kVccTokenBuckets);
                row.insert(row.end(), dense_part.begin(), dense_part.end());
                double score = predict_logistic(model, row);
                predictions.push_back({record.commit_id, score, record.label, effort_of(record)});
            }
            break;
        }
        case ModelKind::External:
            throw Error("external scores are imported, not predicted");
    }
    return predictions;
}

// --- artifact files ------------------------------------------------------------

inline constexpr const char* kArtifactMagic = "jitvp-model";
inline constexpr int kArtifactVersion = 1;

inline void save_artifact(const ModelArtifact& artifact, const std::filesystem::path& path) {
    Json j;
    j["magic"] = kArtifactMagic;
    j["version"] = kArtifactVersion;
    j["kind"] = model_kind_name(artifact.kind);
    j["feature_names"] = artifact.feature_names;
    j["norm_mean"] = artifact.norm_mean;
    j["norm_std"] = artifact.norm_std;
    j["trained_on"] = artifact.trained_on;
    j["parameters"] = artifact.parameters;
    write_file_atomic(path, j.dump());
}

inline ModelArtifact load_artifact(const std::filesystem::path& path) {
    Json j = Json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("magic") ||
        j["magic"] != kArtifactMagic)
        throw VersionMismatch("not a model artifact: " + path.string());
    if (!j.contains("version") || j["version"].get<int>() != kArtifactVersion)
        throw VersionMismatch("unsupported artifact version in " + path.string());
    ModelArtifact artifact;
    artifact.kind = parse_model_kind(j.at("kind").get<std::string>());
    artifact.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    artifact.norm_mean = j.at("norm_mean").get<std::vector<double>>();
    artifact.norm_std = j.at("norm_std").get<std::vector<double>>();
    artifact.trained_on = j.at("trained_on").get<std::string>();
    artifact.parameters = j.at("parameters");
    return artifact;
}

// External prediction import: JSONL records in the prediction schema, with
// range validation. Deep-model scores enter the metric suite through here.
inline std::vector<PredictionRecord> import_external_scores(const std::filesystem::path& path) {
    return read_prediction_file(path);
}

}  // namespace jitvp

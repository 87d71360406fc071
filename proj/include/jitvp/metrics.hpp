#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <string>
#include <vector>

#include "jitvp/errors.hpp"
#include "jitvp/jsonl.hpp"

namespace jitvp {

struct PredictionRecord {
    std::string commit_id;
    double score = 0.0;  // in [0,1]
    int label = 0;
    std::uint64_t effort = 0;  // inspection cost proxy: la + ld

    bool operator==(const PredictionRecord&) const = default;
};

struct ConfusionCounts {
    std::size_t tp = 0, fp = 0, tn = 0, fn = 0;
    std::size_t total() const { return tp + fp + tn + fn; }
};

struct ClassificationMetrics {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, mcc = 0;
};

// How effort-aware metrics rank records. Density (score per unit effort) is
// the default; raw score ranking is available behind a flag.
enum class EffortRanking { Density, RawScore };

struct MetricsReport {
    double accuracy = 0, precision = 0, recall = 0, f1 = 0, mcc = 0;
    double roc_auc = 0, pr_auc = 0;
    double recall_at_20_effort = 0, effort_at_20_recall = 0, p_opt = 0;
    double threshold = 0.5;
    std::vector<std::string> flags;  // degenerate-input conventions that fired
};

// Positive prediction iff score >= threshold.
inline ConfusionCounts confusion(const std::vector<PredictionRecord>& records,
                                 double threshold = 0.5) {
    ConfusionCounts counts;
    for (const auto& r : records) {
        const bool predicted = r.score >= threshold;
        if (predicted && r.label == 1) ++counts.tp;
        else if (predicted && r.label == 0) ++counts.fp;
        else if (!predicted && r.label == 1) ++counts.fn;
        else ++counts.tn;
    }
    return counts;
}

// Standard definitions; every zero-denominator case yields 0.
inline ClassificationMetrics classification_metrics(const ConfusionCounts& c) {
    ClassificationMetrics m;
    const double tp = static_cast<double>(c.tp), fp = static_cast<double>(c.fp);
    const double tn = static_cast<double>(c.tn), fn = static_cast<double>(c.fn);
    const double total = tp + fp + tn + fn;
    m.accuracy = total > 0 ? (tp + tn) / total : 0.0;
    m.precision = (tp + fp) > 0 ? tp / (tp + fp) : 0.0;
    m.recall = (tp + fn) > 0 ? tp / (tp + fn) : 0.0;
    m.f1 = (m.precision + m.recall) > 0 ? 2 * m.precision * m.recall / (m.precision + m.recall)
                                        : 0.0;
    const double denom = (tp + fp) * (tp + fn) * (tn + fp) * (tn + fn);
    m.mcc = denom > 0 ? (tp * tn - fp * fn) / std::sqrt(denom) : 0.0;
    return m;
}

namespace detail {

inline void require_both_classes(const std::vector<PredictionRecord>& records) {
    bool has_pos = false, has_neg = false;
    for (const auto& r : records) (r.label == 1 ? has_pos : has_neg) = true;
    if (!has_pos || !has_neg) throw SingleClassEvalSet();
}

}  // namespace detail

// Mann-Whitney statistic: (#concordant + 0.5 * #tied) / (P * N), computed via
// average ranks of tied score groups.
inline double roc_auc(const std::vector<PredictionRecord>& records) {
    detail::require_both_classes(records);
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].score < records[b].score;
    });

    double positives = 0, negatives = 0, rank_sum_pos = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && records[order[j]].score == records[order[i]].score) ++j;
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) {
            if (records[order[k]].label == 1) {
                positives += 1;
                rank_sum_pos += avg_rank;
            } else {
                negatives += 1;
            }
        }
        i = j;
    }
    return (rank_sum_pos - positives * (positives + 1) / 2.0) / (positives * negatives);
}

// Step integration over recall: at each distinct score cut where recall
// advances, add (delta recall) * precision at that cut.
inline double pr_auc(const std::vector<PredictionRecord>& records) {
    detail::require_both_classes(records);
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return records[a].score > records[b].score;
    });
    double total_pos = 0;
    for (const auto& r : records) total_pos += r.label == 1 ? 1 : 0;

    double auc = 0, tp = 0, fp = 0, prev_recall = 0;
    std::size_t i = 0;
    while (i < order.size()) {
        std::size_t j = i;
        while (j < order.size() && records[order[j]].score == records[order[i]].score) ++j;
        for (std::size_t k = i; k < j; ++k) {
            if (records[order[k]].label == 1) tp += 1;
            else fp += 1;
        }
        const double recall = tp / total_pos;
        if (recall > prev_recall) {
            auc += (recall - prev_recall) * (tp / (tp + fp));
            prev_recall = recall;
        }
        i = j;
    }
    return auc;
}

namespace detail {

// Inspection order for effort-aware metrics: defect density score/(effort+1)
// descending, ties by higher score, then lexicographic commit id.
inline std::vector<std::size_t> effort_ranking(const std::vector<PredictionRecord>& records,
                                               EffortRanking ranking) {
    std::vector<std::size_t> order(records.size());
    std::iota(order.begin(), order.end(), 0);
    auto key = [&](std::size_t i) {
        const auto& r = records[i];
        return ranking == EffortRanking::Density
                   ? r.score / (static_cast<double>(r.effort) + 1.0)
                   : r.score;
    };
    std::sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        const double ka = key(a), kb = key(b);
        if (ka != kb) return ka > kb;
        if (records[a].score != records[b].score) return records[a].score > records[b].score;
        return records[a].commit_id < records[b].commit_id;
    });
    return order;
}

inline double total_effort(const std::vector<PredictionRecord>& records) {
    double sum = 0;
    for (const auto& r : records) sum += static_cast<double>(r.effort);
    return sum;
}

inline double total_positives(const std::vector<PredictionRecord>& records) {
    double sum = 0;
    for (const auto& r : records) sum += r.label == 1 ? 1 : 0;
    return sum;
}

// Area under the cumulative (effort fraction, recall fraction) curve for a
// given inspection order, by the trapezoid rule.
inline double alberg_area(const std::vector<PredictionRecord>& records,
                          const std::vector<std::size_t>& order, double effort_sum,
                          double positive_sum) {
    double area = 0, y = 0;
    for (std::size_t idx : order) {
        const auto& r = records[idx];
        const double dx = static_cast<double>(r.effort) / effort_sum;
        const double y_next = y + (r.label == 1 ? 1.0 / positive_sum : 0.0);
        area += dx * (y + y_next) / 2.0;
        y = y_next;
    }
    return area;
}

}  // namespace detail

// Fraction of positives captured inspecting ranked records until the effort
// budget is exhausted: a record is inspected while the effort spent so far is
// within budget * total effort; once spending has crossed the budget, the
// walk stops.
inline double recall_at_effort(const std::vector<PredictionRecord>& records, double budget = 0.20,
                               EffortRanking ranking = EffortRanking::Density) {
    const double positives = detail::total_positives(records);
    if (positives == 0) return 0.0;
    const double allowance = budget * detail::total_effort(records);
    double spent = 0, captured = 0;
    for (std::size_t idx : detail::effort_ranking(records, ranking)) {
        const auto& r = records[idx];
        if (spent > allowance) break;
        spent += static_cast<double>(r.effort);
        if (r.label == 1) captured += 1;
    }
    return captured / positives;
}

// Fraction of total effort spent when the walk first captures
// ceil(target * P) positives.
inline double effort_at_recall(const std::vector<PredictionRecord>& records, double target = 0.20,
                               EffortRanking ranking = EffortRanking::Density) {
    const double positives = detail::total_positives(records);
    const double needed = std::ceil(target * positives);
    if (needed <= 0) return 0.0;
    const double effort_sum = detail::total_effort(records);
    if (effort_sum <= 0) return 0.0;
    double spent = 0, captured = 0;
    for (std::size_t idx : detail::effort_ranking(records, ranking)) {
        const auto& r = records[idx];
        spent += static_cast<double>(r.effort);
        if (r.label == 1) captured += 1;
        if (captured >= needed) return spent / effort_sum;
    }
    return 1.0;
}

// Popt = 1 - (area(optimal) - area(model)) / (area(optimal) - area(worst)).
// Optimal inspects true positives first by ascending effort; worst is the
// exact reverse; the model curve follows the effort ranking.
inline double p_opt(const std::vector<PredictionRecord>& records,
                    EffortRanking ranking = EffortRanking::Density) {
    const double positives = detail::total_positives(records);
    const double effort_sum = detail::total_effort(records);
    if (positives == 0 || effort_sum <= 0) return 0.0;

    std::vector<std::size_t> optimal(records.size());
    std::iota(optimal.begin(), optimal.end(), 0);
    std::sort(optimal.begin(), optimal.end(), [&](std::size_t a, std::size_t b) {
        if (records[a].label != records[b].label) return records[a].label > records[b].label;
        if (records[a].effort != records[b].effort) return records[a].effort < records[b].effort;
        return records[a].commit_id < records[b].commit_id;
    });
    std::vector<std::size_t> worst(optimal.rbegin(), optimal.rend());

    const double area_opt = detail::alberg_area(records, optimal, effort_sum, positives);
    const double area_worst = detail::alberg_area(records, worst, effort_sum, positives);
    const double area_model = detail::alberg_area(
        records, detail::effort_ranking(records, ranking), effort_sum, positives);

    const double spread = area_opt - area_worst;
    if (spread <= 0) return 1.0;  // optimal and worst coincide: nothing to rank
    return 1.0 - (area_opt - area_model) / spread;
}

// Aggregates every supported metric. Degenerate inputs downgrade to the
// documented conventions and set a flag instead of failing the whole report.
inline MetricsReport report(const std::vector<PredictionRecord>& records, double threshold = 0.5,
                            EffortRanking ranking = EffortRanking::Density) {
    MetricsReport rep;
    rep.threshold = threshold;

    const ConfusionCounts counts = confusion(records, threshold);
    const ClassificationMetrics cls = classification_metrics(counts);
    rep.accuracy = cls.accuracy;
    rep.precision = cls.precision;
    rep.recall = cls.recall;
    rep.f1 = cls.f1;
    rep.mcc = cls.mcc;
    if (counts.tp + counts.fp == 0) rep.flags.push_back("no_predicted_positives");
    if (counts.tp + counts.fn == 0) rep.flags.push_back("no_actual_positives");

    try {
        rep.roc_auc = roc_auc(records);
        rep.pr_auc = pr_auc(records);
    } catch (const SingleClassEvalSet&) {
        rep.flags.push_back("single_class_eval");
    }

    if (detail::total_effort(records) <= 0) rep.flags.push_back("zero_total_effort");
    rep.recall_at_20_effort = recall_at_effort(records, 0.20, ranking);
    rep.effort_at_20_recall = effort_at_recall(records, 0.20, ranking);
    rep.p_opt = p_opt(records, ranking);
    return rep;
}

inline OrderedJson report_json(const MetricsReport& rep) {
    OrderedJson j;
    j["accuracy"] = rep.accuracy;
    j["precision"] = rep.precision;
    j["recall"] = rep.recall;
    j["f1"] = rep.f1;
    j["mcc"] = rep.mcc;
    j["roc_auc"] = rep.roc_auc;
    j["pr_auc"] = rep.pr_auc;
    j["recall_at_20_effort"] = rep.recall_at_20_effort;
    j["effort_at_20_recall"] = rep.effort_at_20_recall;
    j["p_opt"] = rep.p_opt;
    j["threshold"] = rep.threshold;
    j["flags"] = rep.flags;
    return j;
}

inline std::string metrics_csv_header() {
    return "model,dataset,accuracy,precision,recall,f1,mcc,roc_auc,pr_auc,"
           "recall_at_20_effort,effort_at_20_recall,p_opt";
}

inline std::string metrics_csv_row(const std::string& model, const std::string& dataset,
                                   const MetricsReport& rep) {
    auto fmt = [](double v) {
        char buf[32];
        std::snprintf(buf, sizeof buf, "%.6f", v);
        return std::string(buf);
    };
    return model + "," + dataset + "," + fmt(rep.accuracy) + "," + fmt(rep.precision) + "," +
           fmt(rep.recall) + "," + fmt(rep.f1) + "," + fmt(rep.mcc) + "," + fmt(rep.roc_auc) +
           "," + fmt(rep.pr_auc) + "," + fmt(rep.recall_at_20_effort) + "," +
           fmt(rep.effort_at_20_recall) + "," + fmt(rep.p_opt);
}

// --- prediction JSONL ----------------------------------------------------------

inline OrderedJson prediction_json(const PredictionRecord& r) {
    OrderedJson j;
    j["commit_id"] = r.commit_id;
    j["score"] = r.score;
    j["label"] = r.label;
    j["effort"] = r.effort;
    return j;
}

inline PredictionRecord parse_prediction(const Json& j, std::size_t line_no) {
    if (!j.is_object() || j.size() != 4 || !j.contains("commit_id") || !j.contains("score") ||
        !j.contains("label") || !j.contains("effort"))
        throw SchemaViolation(line_no,
                              R"(expected exactly {"commit_id", "score", "label", "effort"})");
    if (!j["commit_id"].is_string()) throw SchemaViolation(line_no, "non-string commit_id");
    if (!j["score"].is_number()) throw SchemaViolation(line_no, "non-numeric score");
    if (!j["label"].is_number_integer()) throw SchemaViolation(line_no, "non-integer label");
    if (!j["effort"].is_number_integer() || j["effort"].get<std::int64_t>() < 0)
        throw SchemaViolation(line_no, "effort must be a nonnegative integer");
    PredictionRecord r;
    r.commit_id = j["commit_id"].get<std::string>();
    r.score = j["score"].get<double>();
    if (!std::isfinite(r.score) || r.score < 0.0 || r.score > 1.0)
        throw ScoreOutOfRange(line_no, r.score);
    const int label = j["label"].get<int>();
    if (label != 0 && label != 1) throw SchemaViolation(line_no, "label must be 0 or 1");
    r.label = label;
    r.effort = j["effort"].get<std::uint64_t>();
    return r;
}

inline void write_prediction_file(const std::vector<PredictionRecord>& records,
                                  const std::filesystem::path& path) {
    std::vector<OrderedJson> lines;
    lines.reserve(records.size());
    for (const auto& r : records) lines.push_back(prediction_json(r));
    write_jsonl(path, lines);
}

inline std::vector<PredictionRecord> read_prediction_file(const std::filesystem::path& path) {
    std::vector<PredictionRecord> records;
    for_each_jsonl_line(path, [&](std::size_t line_no, const Json& j) {
        records.push_back(parse_prediction(j, line_no));
    });
    return records;
}

}  // namespace jitvp

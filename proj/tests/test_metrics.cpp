#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <string>
#include <vector>

#include "jitvp/metrics.hpp"
#include "jitvp/rng.hpp"
#include "support/oracles.hpp"

using namespace jitvp;
using jitvp::testing::popt_oracle;
using jitvp::testing::random_predictions;
using jitvp::testing::recall_at_effort_sim;
using jitvp::testing::effort_at_recall_sim;
using jitvp::testing::roc_auc_pairwise;

namespace {

std::vector<PredictionRecord> make_records(
    const std::vector<std::tuple<double, int, std::uint64_t>>& rows) {
    std::vector<PredictionRecord> records;
    int i = 0;
    for (const auto& [score, label, effort] : rows)
        records.push_back({"r" + std::to_string(i++), score, label, effort});
    return records;
}

}  // namespace

TEST_CASE("confusion counts", "[metrics]") {
    SECTION("all positive scores and labels") {
        auto records = make_records({{1.0, 1, 1}, {1.0, 1, 1}, {1.0, 1, 1}});
        auto c = confusion(records);
        CHECK(c.tp == 3);
        CHECK(c.fp + c.tn + c.fn == 0);
    }
    SECTION("score exactly at the threshold counts positive") {
        auto records = make_records({{0.5, 1, 1}});
        auto c = confusion(records, 0.5);
        CHECK(c.tp == 1);
    }
    SECTION("hand-counted seven-record example") {
        auto records = make_records({{0.9, 1, 1},
                                     {0.8, 0, 1},
                                     {0.4, 1, 1},
                                     {0.2, 0, 1},
                                     {0.7, 1, 1},
                                     {0.6, 0, 1},
                                     {0.1, 0, 1}});
        auto c = confusion(records, 0.5);
        CHECK(c.tp == 2);
        CHECK(c.fp == 2);
        CHECK(c.fn == 1);
        CHECK(c.tn == 2);
        CHECK(c.total() == records.size());
    }
}

TEST_CASE("classification metrics", "[metrics]") {
    SECTION("perfect predictor scores 1 across the board") {
        auto m = classification_metrics({5, 0, 7, 0});
        CHECK(m.accuracy == 1.0);
        CHECK(m.precision == 1.0);
        CHECK(m.recall == 1.0);
        CHECK(m.f1 == 1.0);
        CHECK(m.mcc == 1.0);
    }
    SECTION("mcc hand value 5/12") {
        auto m = classification_metrics({2, 1, 3, 1});
        CHECK(m.mcc == Catch::Approx(5.0 / 12.0).margin(1e-12));
    }
    SECTION("zero-denominator conventions") {
        auto m = classification_metrics({0, 0, 5, 0});
        CHECK(m.precision == 0.0);
        CHECK(m.recall == 0.0);
        CHECK(m.f1 == 0.0);
        CHECK(m.mcc == 0.0);
        CHECK(m.accuracy == 1.0);
    }
    SECTION("label and prediction flip leaves mcc unchanged") {
        Rng rng(3);
        for (int round = 0; round < 200; ++round) {
            ConfusionCounts c{rng.next_below(30), rng.next_below(30), rng.next_below(30),
                              rng.next_below(30)};
            ConfusionCounts flipped{c.tn, c.fn, c.tp, c.fp};
            CHECK(classification_metrics(c).mcc ==
                  Catch::Approx(classification_metrics(flipped).mcc).margin(1e-12));
            CHECK(classification_metrics(c).mcc >= -1.0);
            CHECK(classification_metrics(c).mcc <= 1.0);
        }
    }
}

TEST_CASE("roc_auc", "[metrics]") {
    SECTION("scores identical to labels give 1.0") {
        auto records = make_records({{1, 1, 1}, {0, 0, 1}, {1, 1, 1}, {0, 0, 1}});
        CHECK(roc_auc(records) == 1.0);
        CHECK(pr_auc(records) == 1.0);
    }
    SECTION("all scores equal gives 0.5") {
        auto records = make_records({{0.3, 1, 1}, {0.3, 0, 1}, {0.3, 1, 1}});
        CHECK(roc_auc(records) == 0.5);
    }
    SECTION("single-class sets are rejected") {
        CHECK_THROWS_AS(roc_auc(make_records({{0.3, 1, 1}, {0.6, 1, 1}})), SingleClassEvalSet);
        CHECK_THROWS_AS(pr_auc(make_records({{0.3, 0, 1}})), SingleClassEvalSet);
    }
    SECTION("matches the pairwise statistic on random batches") {
        Rng rng(17);
        for (int round = 0; round < 150; ++round) {
            auto records = random_predictions(rng, 2 + rng.next_below(199));
            CHECK(roc_auc(records) == Catch::Approx(roc_auc_pairwise(records)).margin(1e-9));
        }
    }
    SECTION("invariant under strictly monotone score transforms") {
        Rng rng(19);
        auto records = random_predictions(rng, 150);
        const double base = roc_auc(records);
        auto halved = records;
        for (auto& r : halved) r.score /= 2.0;
        CHECK(roc_auc(halved) == Catch::Approx(base).margin(1e-12));
        auto squared = records;
        for (auto& r : squared) r.score *= r.score;
        CHECK(roc_auc(squared) == Catch::Approx(base).margin(1e-9));
    }
}

TEST_CASE("pr_auc step integration", "[metrics]") {
    auto records = make_records({{0.9, 1, 1}, {0.8, 0, 1}, {0.7, 1, 1}});
    CHECK(pr_auc(records) == Catch::Approx(0.5 * 1.0 + 0.5 * (2.0 / 3.0)).margin(1e-12));
    SECTION("bounded on random batches") {
        Rng rng(29);
        for (int round = 0; round < 100; ++round) {
            auto batch = random_predictions(rng, 2 + rng.next_below(150));
            const double v = pr_auc(batch);
            CHECK(v >= 0.0);
            CHECK(v <= 1.0);
        }
    }
}

TEST_CASE("recall_at_effort", "[metrics]") {
    SECTION("single positive with effort among zero-effort negatives") {
        auto records = make_records({{0.9, 1, 1}, {0.2, 0, 0}, {0.1, 0, 0}});
        CHECK(recall_at_effort(records, 0.20) == 1.0);
    }
    SECTION("full budget equals predict-everything recall") {
        Rng rng(31);
        auto records = random_predictions(rng, 60);
        CHECK(recall_at_effort(records, 1.0) == 1.0);
    }
    SECTION("matches the straight-line simulation on seeded fixtures") {
        Rng rng(37);
        for (int round = 0; round < 200; ++round) {
            auto records = random_predictions(rng, 20);
            const double budget = double(rng.next_below(11)) / 10.0;
            CHECK(recall_at_effort(records, budget) ==
                  Catch::Approx(recall_at_effort_sim(records, budget)).margin(1e-12));
        }
    }
    SECTION("nondecreasing in the budget") {
        Rng rng(41);
        for (int round = 0; round < 50; ++round) {
            auto records = random_predictions(rng, 40);
            double previous = -1;
            for (double budget : {0.0, 0.1, 0.2, 0.4, 0.6, 0.8, 1.0}) {
                const double value = recall_at_effort(records, budget);
                CHECK(value >= previous);
                CHECK(value >= 0.0);
                CHECK(value <= 1.0);
                previous = value;
            }
        }
    }
}

TEST_CASE("effort_at_recall", "[metrics]") {
    SECTION("positives first holding 10% of effort, full recall target") {
        // two positives with effort 5 each, negatives hold the remaining 90
        auto records = make_records({{0.9, 1, 5}, {0.8, 1, 5}, {0.2, 0, 45}, {0.1, 0, 45}});
        CHECK(effort_at_recall(records, 1.0) == Catch::Approx(0.10).margin(1e-12));
    }
    SECTION("target zero costs nothing") {
        auto records = make_records({{0.9, 1, 5}, {0.1, 0, 5}});
        CHECK(effort_at_recall(records, 0.0) == 0.0);
    }
    SECTION("matches the simulation oracle") {
        Rng rng(43);
        for (int round = 0; round < 200; ++round) {
            auto records = random_predictions(rng, 20);
            const double target = double(rng.next_below(11)) / 10.0;
            CHECK(effort_at_recall(records, target) ==
                  Catch::Approx(effort_at_recall_sim(records, target)).margin(1e-12));
        }
    }
    SECTION("nondecreasing in the target") {
        Rng rng(47);
        for (int round = 0; round < 50; ++round) {
            auto records = random_predictions(rng, 40);
            double previous = -1;
            for (double target : {0.0, 0.2, 0.4, 0.6, 0.8, 1.0}) {
                const double value = effort_at_recall(records, target);
                CHECK(value >= previous);
                previous = value;
            }
        }
    }
}

TEST_CASE("p_opt", "[metrics]") {
    SECTION("model ranking identical to optimal gives 1.0") {
        // positives first by ascending effort, scores arranged to match
        auto records = make_records({{1.0, 1, 1}, {0.9, 1, 2}, {0.2, 0, 1}, {0.1, 0, 2}});
        CHECK(p_opt(records) == Catch::Approx(1.0).margin(1e-12));
    }
    SECTION("model ranking identical to worst gives 0.0") {
        auto records = make_records({{1.0, 0, 2}, {0.9, 0, 1}, {0.2, 1, 2}, {0.1, 1, 1}});
        // model order: negatives by descending effort first, positives last
        // ascending: exactly the reverse of the optimal order built above
        CHECK(p_opt(records) == Catch::Approx(0.0).margin(1e-12));
    }
    SECTION("degenerate curve returns 1.0") {
        auto records = make_records({{0.5, 1, 3}, {0.5, 1, 3}, {0.5, 1, 3}});
        CHECK(p_opt(records) == 1.0);
    }
    SECTION("matches the independent curve construction on seeded fixtures") {
        Rng rng(53);
        for (int round = 0; round < 300; ++round) {
            auto records = random_predictions(rng, 15);
            CHECK(p_opt(records) == Catch::Approx(popt_oracle(records)).margin(1e-9));
        }
    }
}

TEST_CASE("report aggregates the whole metric set", "[metrics]") {
    SECTION("perfect records score 1 on every applicable metric") {
        auto records = make_records({{1, 1, 1}, {1, 1, 2}, {0, 0, 3}, {0, 0, 4}});
        auto rep = report(records);
        CHECK(rep.accuracy == 1.0);
        CHECK(rep.precision == 1.0);
        CHECK(rep.recall == 1.0);
        CHECK(rep.f1 == 1.0);
        CHECK(rep.mcc == 1.0);
        CHECK(rep.roc_auc == 1.0);
        CHECK(rep.pr_auc == 1.0);
        CHECK(rep.p_opt == 1.0);
        CHECK(rep.flags.empty());
    }
    SECTION("report is pure and composes individual operations") {
        Rng rng(59);
        auto records = random_predictions(rng, 80);
        auto rep1 = report(records, 0.4);
        auto rep2 = report(records, 0.4);
        CHECK(report_json(rep1).dump() == report_json(rep2).dump());

        auto cls = classification_metrics(confusion(records, 0.4));
        CHECK(rep1.accuracy == cls.accuracy);
        CHECK(rep1.mcc == cls.mcc);
        CHECK(rep1.roc_auc == roc_auc(records));
        CHECK(rep1.pr_auc == pr_auc(records));
        CHECK(rep1.recall_at_20_effort == recall_at_effort(records, 0.20));
        CHECK(rep1.effort_at_20_recall == effort_at_recall(records, 0.20));
        CHECK(rep1.p_opt == p_opt(records));
        CHECK(rep1.threshold == 0.4);
    }
    SECTION("single-class input degrades with a flag") {
        auto records = make_records({{0.9, 1, 1}, {0.8, 1, 2}});
        auto rep = report(records);
        CHECK(std::find(rep.flags.begin(), rep.flags.end(), "single_class_eval") !=
              rep.flags.end());
        CHECK(rep.roc_auc == 0.0);
    }
    SECTION("json serialization carries all ten metrics") {
        auto records = make_records({{1, 1, 1}, {0, 0, 1}});
        auto j = report_json(report(records));
        for (const char* key : {"accuracy", "precision", "recall", "f1", "mcc", "roc_auc",
                                "pr_auc", "recall_at_20_effort", "effort_at_20_recall", "p_opt"})
            CHECK(j.contains(key));
    }
}

TEST_CASE("prediction files round-trip and validate", "[metrics]") {
    namespace fs = std::filesystem;
    const fs::path path = fs::temp_directory_path() / "jitvp_predictions.jsonl";

    SECTION("round-trip") {
        Rng rng(61);
        auto records = random_predictions(rng, 50);
        write_prediction_file(records, path);
        auto back = read_prediction_file(path);
        REQUIRE(back.size() == records.size());
        for (std::size_t i = 0; i < records.size(); ++i) CHECK(back[i] == records[i]);
    }
    SECTION("score out of range is rejected") {
        write_file_atomic(path, R"({"commit_id": "a", "score": 1.2, "label": 1, "effort": 3})"
                                "\n");
        CHECK_THROWS_AS(read_prediction_file(path), ScoreOutOfRange);
    }
    SECTION("well-formed three-line file parses") {
        write_file_atomic(path,
                          R"({"commit_id": "a", "score": 0.25, "label": 1, "effort": 3})"
                          "\n"
                          R"({"commit_id": "b", "score": 0.5, "label": 0, "effort": 0})"
                          "\n"
                          R"({"commit_id": "c", "score": 1.0, "label": 1, "effort": 9})"
                          "\n");
        CHECK(read_prediction_file(path).size() == 3);
    }
    SECTION("unknown keys are rejected") {
        write_file_atomic(path,
                          R"({"commit_id": "a", "score": 0.5, "label": 1, "effort": 3, "x": 1})"
                          "\n");
        CHECK_THROWS_AS(read_prediction_file(path), SchemaViolation);
    }
}

TEST_CASE("csv row emission", "[metrics]") {
    auto records = make_records({{1, 1, 1}, {0, 0, 1}});
    auto rep = report(records);
    CHECK(metrics_csv_header().rfind("model,dataset,accuracy", 0) == 0);
    auto row = metrics_csv_row("lr", "demo", rep);
    CHECK(row.rfind("lr,demo,1.000000", 0) == 0);
}

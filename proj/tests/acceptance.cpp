// Acceptance suite: one pass/fail line per criterion, nonzero exit on any
// failure. Criteria marked SKIP (the optional scale rehearsal without a
// target repository) do not fail the run.

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "jitvp/dataset.hpp"
#include "jitvp/features.hpp"
#include "jitvp/jsonl.hpp"
#include "jitvp/metrics.hpp"
#include "jitvp/models/linear.hpp"
#include "jitvp/models/tree.hpp"
#include "jitvp/models/zoo.hpp"
#include "jitvp/pipeline.hpp"
#include "jitvp/rng.hpp"
#include "jitvp/subprocess.hpp"
#include "jitvp/szz.hpp"
#include "jitvp/vfc.hpp"
#include "support/e2e_fixture.hpp"
#include "support/feature_fixture.hpp"
#include "support/oracles.hpp"
#include "support/szz_fixtures.hpp"

using namespace jitvp;
using namespace jitvp::testing;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    bool ok = true;
    bool skipped = false;
    std::string detail;
};

class Checker {
public:
    void require(bool condition, const std::string& what) {
        if (!condition && outcome.ok) {
            outcome.ok = false;
            outcome.detail = what;
        }
    }
    void near(double actual, double expected, double tolerance, const std::string& what) {
        require(std::abs(actual - expected) <= tolerance,
                what + " (got " + std::to_string(actual) + ", want " + std::to_string(expected) +
                    ")");
    }
    Outcome outcome;
};

CommandResult run_cli(const std::vector<std::string>& args) {
    std::vector<std::string> argv = {JITVP_CLI_PATH};
    argv.insert(argv.end(), args.begin(), args.end());
    return run_command(argv);
}

double seconds_since(std::chrono::steady_clock::time_point start) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
}

// --- criterion 1: SZZ oracle suite ------------------------------------------

Outcome szz_oracle_suite() {
    Checker check;
    const auto start = std::chrono::steady_clock::now();

    auto cases = build_szz_cases();
    check.require(cases.size() >= 12, "expected at least 12 fixture repositories");
    std::string modifier_case_seen;
    for (const auto& c : cases) {
        RepoHandle handle = open_repo(c.repo->dir(), Language::C);
        CommitRecord vfc = load_commit(handle, c.vfc_id);
        for (const auto& [algorithm, expected] : c.expected) {
            TraceResult result = run_szz_one(handle, vfc, algorithm);
            if (result.vic_ids != expected) {
                std::ostringstream detail;
                detail << c.name << "/" << szz_name(algorithm) << ": got {";
                for (const auto& id : result.vic_ids) detail << id.substr(0, 8) << " ";
                detail << "} want {";
                for (const auto& id : expected) detail << id.substr(0, 8) << " ";
                detail << "}";
                check.require(false, detail.str());
            }
            check.require(result.root_commit_fix == c.expect_root_flag,
                          c.name + ": root-fix flag mismatch");
        }
        if (c.name == "intermediate_modification") {
            TraceResult b = run_szz_one(handle, vfc, SzzAlgorithm::B);
            TraceResult v = run_szz_one(handle, vfc, SzzAlgorithm::V);
            check.require(b.vic_ids != v.vic_ids,
                          "v_szz must differ from b_szz on the modification chain");
            modifier_case_seen = c.name;
        }
    }
    check.require(!modifier_case_seen.empty(), "missing the intermediate-modification fixture");

    const double elapsed = seconds_since(start);
    check.require(elapsed < 30.0, "suite took " + std::to_string(elapsed) + "s (budget 30s)");
    return check.outcome;
}

// --- criterion 2: regex conformance ------------------------------------------

Outcome regex_conformance() {
    Checker check;
    RuleSet rules = compile_rules();
    std::size_t count = 0;
    for_each_jsonl_line(fs::path(JITVP_TEST_DATA) / "regex_conformance.jsonl",
                        [&](std::size_t line_no, const Json& j) {
                            const std::string text = j.at("text").get<std::string>();
                            const std::string expect = j.at("expect").get<std::string>();
                            auto strong = match_message(text, rules, RegexLevel::StrongOnly);
                            auto both = match_message(text, rules, RegexLevel::StrongOrMedium);
                            bool ok = false;
                            if (expect == "strong")
                                ok = strong.matched && strong.source == VfcSource::StrongRegex;
                            else if (expect == "medium")
                                ok = !strong.matched && both.matched &&
                                     both.source == VfcSource::MediumRegex;
                            else
                                ok = !both.matched;
                            check.require(ok, "line " + std::to_string(line_no) + " (\"" + text +
                                                  "\") misclassified");
                            ++count;
                        });
    check.require(count >= 40, "conformance vector holds fewer than 40 strings");
    return check.outcome;
}

// --- criterion 3: metric oracles ----------------------------------------------

Outcome metric_oracles() {
    Checker check;

    auto mcc = classification_metrics({2, 1, 3, 1}).mcc;
    check.near(mcc, 5.0 / 12.0, 1e-12, "mcc(2,3,1,1)");

    Rng rng(20240901);
    for (int round = 0; round < 1000; ++round) {
        auto records = random_predictions(rng, 2 + rng.next_below(199));
        check.near(roc_auc(records), roc_auc_pairwise(records), 1e-9, "roc_auc vs pairwise");
        check.near(p_opt(records), popt_oracle(records), 1e-9, "p_opt vs curve oracle");

        auto rep = report(records);
        for (double value : {rep.accuracy, rep.precision, rep.recall, rep.f1, rep.roc_auc,
                             rep.pr_auc, rep.recall_at_20_effort, rep.effort_at_20_recall,
                             rep.p_opt})
            check.require(value >= 0.0 && value <= 1.0, "metric out of [0,1]");
        check.require(rep.mcc >= -1.0 && rep.mcc <= 1.0, "mcc out of [-1,1]");

        double previous_recall = -1, previous_effort = -1;
        for (double level : {0.0, 0.25, 0.5, 0.75, 1.0}) {
            const double r = recall_at_effort(records, level);
            const double e = effort_at_recall(records, level);
            check.require(r >= previous_recall, "recall_at_effort not monotone");
            check.require(e >= previous_effort, "effort_at_recall not monotone");
            previous_recall = r;
            previous_effort = e;
        }
        if (!check.outcome.ok) break;
    }
    return check.outcome;
}

// --- criterion 4: split soundness ---------------------------------------------

Outcome split_soundness() {
    Checker check;

    std::vector<FeatureRecord> hundred;
    for (int i = 0; i < 100; ++i) {
        FeatureRecord r;
        r.commit_id = "c" + std::to_string(i);
        r.date = i;
        hundred.push_back(std::move(r));
    }
    auto default_split = chronological_split(annotate(hundred, {}, {}));
    check.require(default_split.train.size() == 75 && default_split.valid.size() == 5 &&
                      default_split.test.size() == 20,
                  "n=100 default ratios must split 75/5/20");

    Rng rng(424242);
    for (int round = 0; round < 400; ++round) {
        const std::size_t n = 1 + rng.next_below(10000);
        std::vector<FeatureRecord> base;
        base.reserve(n);
        for (std::size_t i = 0; i < n; ++i) {
            FeatureRecord r;
            r.commit_id = "r" + std::to_string(i);
            r.date = static_cast<std::int64_t>(rng.next_below(1000000));
            base.push_back(std::move(r));
        }
        double a = 0.02 + 0.95 * rng.next_double();
        double b = (1.0 - a) * rng.next_double();
        double c = 1.0 - a - b;
        if (b <= 1e-9 || c <= 1e-9) continue;
        auto split = chronological_split(annotate(base, {}, {}), {a, b, c});

        check.require(split.train.size() + split.valid.size() + split.test.size() == n,
                      "split must partition the input");
        check.require(split.train.size() >= 1, "train side must never be empty");

        std::int64_t train_max = std::numeric_limits<std::int64_t>::min();
        for (const auto& r : split.train) train_max = std::max(train_max, r.date);
        for (const auto& r : split.valid)
            check.require(r.date >= train_max, "valid record predates train boundary");
        std::int64_t valid_max = train_max;
        for (const auto& r : split.valid) valid_max = std::max(valid_max, r.date);
        for (const auto& r : split.test)
            check.require(r.date >= valid_max, "test record predates valid boundary");

        std::multiset<std::string> before, after;
        for (const auto& r : base) before.insert(r.commit_id);
        for (const auto* part : {&split.train, &split.valid, &split.test})
            for (const auto& r : *part) after.insert(r.commit_id);
        check.require(before == after, "split lost or duplicated records");
        if (!check.outcome.ok) break;
    }
    return check.outcome;
}

// --- criterion 5: feature oracle ----------------------------------------------

Outcome feature_oracle() {
    Checker check;
    check.near(compute_entropy({1, 1, 2}), 1.5, 1e-12, "entropy(1,1,2)");

    FeatureFixture fixture = build_feature_fixture();
    RepoHandle handle = open_repo(fixture.repo->dir(), Language::C);
    auto commits = enumerate_commits(handle, std::nullopt, 4);
    check.require(commits.size() == 12, "fixture must enumerate 12 commits");
    if (!check.outcome.ok) return check.outcome;

    RuleSet rules = compile_rules();
    auto records = extract_all_features(handle, commits, rules, 4);
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& got = records[i].features;
        const auto& want = fixture.expected[i];
        const std::string at = "commit " + std::to_string(i + 1) + ": ";
        check.require(got.ns == want.ns, at + "ns");
        check.require(got.nd == want.nd, at + "nd");
        check.require(got.nf == want.nf, at + "nf");
        check.near(got.entropy, want.entropy, 1e-12, at + "entropy");
        check.require(got.la == want.la, at + "la");
        check.require(got.ld == want.ld, at + "ld");
        check.near(got.lt, want.lt, 1e-12, at + "lt");
        check.require(got.fix == want.fix, at + "fix");
        check.require(got.ndev == want.ndev, at + "ndev");
        check.near(got.age, want.age, 1e-12, at + "age");
        check.require(got.nuc == want.nuc, at + "nuc");
        check.require(got.exp == want.exp, at + "exp");
        check.near(got.rexp, want.rexp, 1e-12, at + "rexp");
        check.require(got.sexp == want.sexp, at + "sexp");
    }
    return check.outcome;
}

// --- criterion 6: determinism --------------------------------------------------

Outcome determinism() {
    Checker check;
    auto repo = build_e2e_repo("acceptance_determinism");
    const fs::path root = fs::temp_directory_path() / "jitvp_acceptance_determinism";
    fs::remove_all(root);

    const std::vector<std::string> files = {"commits.jsonl", "features.jsonl", "vfcs.jsonl",
                                            "traces.jsonl",  "train.jsonl",    "valid.jsonl",
                                            "test.jsonl",    "manifest.json"};
    for (unsigned workers : {1u, 4u, 16u}) {
        MiningConfig config;
        config.repo_path = repo->dir();
        config.language = Language::C;
        config.repo_name = "demo";
        config.save_folder = root / ("w" + std::to_string(workers));
        config.workers = workers;
        std::ostringstream log;
        run_mining(config, log);
    }
    for (const auto& name : files)
        check.require(read_file(root / "w1" / "demo" / name) ==
                              read_file(root / "w4" / "demo" / name) &&
                          read_file(root / "w4" / "demo" / name) ==
                              read_file(root / "w16" / "demo" / name),
                      name + " differs across worker counts");

    // model training determinism, two fresh runs with one seed
    auto split = read_split(root / "w1" / "demo");
    Hyperparameters hp;
    hp.seed = 4242;
    for (ModelKind kind : {ModelKind::Lr, ModelKind::Tlel}) {
        ModelArtifact first = train(kind, split.train, split.valid, hp);
        ModelArtifact second = train(kind, split.train, split.valid, hp);
        const fs::path p1 = root / "a1.artifact";
        const fs::path p2 = root / "a2.artifact";
        save_artifact(first, p1);
        save_artifact(second, p2);
        check.require(read_file(p1) == read_file(p2),
                      std::string(model_kind_name(kind)) + " artifacts differ across runs");
    }
    fs::remove_all(root);
    return check.outcome;
}

// --- criterion 7: model sanity --------------------------------------------------

Outcome model_sanity() {
    Checker check;
    Rng rng(777);

    // linearly separable set, n = 400
    std::vector<AnnotatedCommit> separable;
    for (int i = 0; i < 400; ++i) {
        const int label = static_cast<int>(rng.next_below(2));
        AnnotatedCommit a;
        a.commit_id = "s" + std::to_string(i);
        a.label = label;
        a.features.commit_id = a.commit_id;
        a.features.extras = {{"f1", (label ? 2.5 : -2.5) + rng.next_double()},
                             {"f2", (label ? -1.5 : 1.5) + rng.next_double()},
                             {"la", double(rng.next_below(50))},
                             {"ld", double(rng.next_below(50))}};
        separable.push_back(std::move(a));
    }
    ModelArtifact lr = train(ModelKind::Lr, separable, {}, {});
    check.require(roc_auc(predict(lr, separable)) >= 0.99, "lr roc-auc below 0.99 on separable set");

    // analytic gradient vs central differences
    for (int round = 0; round < 10; ++round) {
        const std::size_t n = 8 + rng.next_below(12);
        const std::size_t dim = 3;
        std::vector<SparseRow> rows(n);
        std::vector<int> labels(n);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t k = 0; k < dim; ++k)
                rows[i].emplace_back(static_cast<std::uint32_t>(k), rng.next_double() * 2 - 1);
            labels[i] = static_cast<int>(rng.next_below(2));
        }
        LogisticProblem problem{&rows, &labels, nullptr, dim, 1e-3};
        LinearModel model;
        model.weights = {rng.next_double() - 0.5, rng.next_double() - 0.5,
                         rng.next_double() - 0.5};
        model.bias = rng.next_double() - 0.5;
        std::vector<double> grad;
        double grad_bias;
        problem.loss_and_gradient(model, grad, grad_bias);
        const double h = 1e-6;
        for (std::size_t k = 0; k < dim; ++k) {
            LinearModel plus = model, minus = model;
            plus.weights[k] += h;
            minus.weights[k] -= h;
            const double numeric = (problem.loss(plus) - problem.loss(minus)) / (2 * h);
            const double scale = std::max({std::abs(grad[k]), std::abs(numeric), 1e-8});
            check.require(std::abs(grad[k] - numeric) / scale < 1e-5,
                          "lr gradient mismatch vs finite differences");
        }
    }

    // LAPredict ranking equals la-descending on random batches
    ModelArtifact la = train(ModelKind::La, separable, {}, {});
    for (int round = 0; round < 30; ++round) {
        std::vector<AnnotatedCommit> batch;
        const std::size_t n = 2 + rng.next_below(80);
        for (std::size_t i = 0; i < n; ++i) {
            AnnotatedCommit a;
            a.commit_id = "b" + std::to_string(i);
            a.label = static_cast<int>(rng.next_below(2));
            a.features.commit_id = a.commit_id;
            a.features.extras = {{"f1", 0.0},
                                 {"f2", 0.0},
                                 {"la", double(rng.next_below(64))},
                                 {"ld", double(rng.next_below(64))}};
            batch.push_back(std::move(a));
        }
        auto predictions = predict(la, batch);
        for (std::size_t i = 0; i < n && check.outcome.ok; ++i)
            for (std::size_t j = 0; j < n; ++j) {
                const double la_i = batch[i].features.extras.at("la");
                const double la_j = batch[j].features.extras.at("la");
                if ((la_i > la_j && predictions[i].score <= predictions[j].score) ||
                    (la_i == la_j && predictions[i].score != predictions[j].score)) {
                    check.require(false, "lapredict ranking diverges from la ordering");
                    break;
                }
            }
    }

    // TLEL vs one depth-limited tree on an xor-feature fixture
    std::vector<AnnotatedCommit> xor_set;
    std::vector<std::vector<double>> X;
    std::vector<int> y;
    Rng xr(40405);
    for (int i = 0; i < 240; ++i) {
        const double x1 = xr.next_double(), x2 = xr.next_double();
        const int label = ((x1 > 0.5) != (x2 > 0.5)) ? 1 : 0;
        AnnotatedCommit a;
        a.commit_id = "x" + std::to_string(i);
        a.label = label;
        a.features.commit_id = a.commit_id;
        a.features.extras = {{"x1", x1}, {"x2", x2}, {"la", 1.0}, {"ld", 1.0}};
        xor_set.push_back(a);
        X.push_back({1.0, 1.0, x1, x2});  // sorted feature order: la, ld, x1, x2
        y.push_back(label);
    }
    Hyperparameters hp;
    hp.seed = 99;
    ModelArtifact tlel = train(ModelKind::Tlel, xor_set, {}, hp);
    const double tlel_auc = roc_auc(predict(tlel, xor_set));

    std::vector<std::size_t> all(X.size());
    std::iota(all.begin(), all.end(), 0);
    Rng tree_rng(1);
    TreeConfig config;
    config.max_depth = 1;
    DecisionTree stump = fit_tree(X, y, all, config, tree_rng);
    std::vector<PredictionRecord> stump_predictions;
    for (std::size_t i = 0; i < X.size(); ++i)
        stump_predictions.push_back(
            {"t" + std::to_string(i), std::clamp(stump.predict(X[i]), 0.0, 1.0), y[i], 1});
    const double stump_auc = roc_auc(stump_predictions);
    check.require(tlel_auc >= stump_auc, "tlel roc-auc below the single-tree baseline");
    return check.outcome;
}

// --- criterion 8: end-to-end smoke ----------------------------------------------

Outcome e2e_smoke() {
    Checker check;
    const auto start = std::chrono::steady_clock::now();

    auto repo = build_e2e_repo("acceptance_smoke");
    const fs::path root = fs::temp_directory_path() / "jitvp_acceptance_smoke";
    fs::remove_all(root);

    auto mined = run_cli({"mining", "-dg_save_folder", root.string(), "-repo_name", "demo",
                          "-mode", "local", "-repo_path", repo->dir().string(),
                          "-repo_language", "C", "-workers", "4"});
    check.require(mined.exit_code == 0, "mining failed: " + mined.err);
    const fs::path out = root / "demo";

    auto trained = run_cli({"training", "-dg_save_folder", root.string(), "-repo_name", "demo",
                            "-model", "lr", "-seed", "42"});
    check.require(trained.exit_code == 0, "training failed: " + trained.err);
    check.require(fs::exists(out / "models" / "lr.artifact"), "artifact file missing");

    auto evaluated = run_cli({"evaluating", "-dg_save_folder", root.string(), "-repo_name",
                              "demo", "-model", "lr"});
    check.require(evaluated.exit_code == 0, "evaluating failed: " + evaluated.err);
    check.require(fs::exists(out / "predictions.jsonl"), "predictions.jsonl missing");
    if (fs::exists(out / "metrics.json")) {
        Json metrics = Json::parse(read_file(out / "metrics.json"));
        for (const char* key : {"accuracy", "precision", "recall", "f1", "mcc", "roc_auc",
                                "pr_auc", "recall_at_20_effort", "effort_at_20_recall", "p_opt"})
            check.require(metrics.contains(key), std::string("metrics.json lacks ") + key);
    } else {
        check.require(false, "metrics.json missing");
    }

    auto inferred = run_cli({"inference", "-dg_save_folder", root.string(), "-repo_name", "demo",
                             "-model", "lr", "-input", (out / "features.jsonl").string(),
                             "-output", (root / "scored.jsonl").string()});
    check.require(inferred.exit_code == 0, "inference failed: " + inferred.err);
    if (check.outcome.ok)
        check.require(read_jsonl(root / "scored.jsonl").size() ==
                          read_jsonl(out / "features.jsonl").size(),
                      "inference line count mismatch");

    // schema validation through the strict readers
    if (check.outcome.ok) {
        read_feature_file(out / "features.jsonl");
        read_split(out);
        read_prediction_file(out / "predictions.jsonl");
    }

    const double elapsed = seconds_since(start);
    check.require(elapsed < 60.0, "pipeline took " + std::to_string(elapsed) + "s (budget 60s)");
    fs::remove_all(root);
    return check.outcome;
}

// --- criterion 9: scale rehearsal (optional) -------------------------------------

Outcome scale_rehearsal() {
    Checker check;
    const char* target = std::getenv("JITVP_SCALE_REPO");
    if (!target || std::string(target).empty()) {
        check.outcome.skipped = true;
        check.outcome.detail = "set JITVP_SCALE_REPO=/path/to/medium/repo to enable";
        return check.outcome;
    }
    const char* language = std::getenv("JITVP_SCALE_LANGUAGE");
    const fs::path root = fs::temp_directory_path() / "jitvp_scale_rehearsal";
    fs::remove_all(root);

    double elapsed_1 = 0, elapsed_8 = 0;
    for (unsigned workers : {1u, 8u}) {
        MiningConfig config;
        config.repo_path = target;
        config.language = parse_language(language ? language : "C");
        config.repo_name = "scale_w" + std::to_string(workers);
        config.save_folder = root;
        config.workers = workers;
        std::ostringstream log;
        const auto start = std::chrono::steady_clock::now();
        run_mining(config, log);
        (workers == 1 ? elapsed_1 : elapsed_8) = seconds_since(start);
    }
    check.require(elapsed_8 * 2.0 <= elapsed_1,
                  "speedup below 2x: w1=" + std::to_string(elapsed_1) +
                      "s w8=" + std::to_string(elapsed_8) + "s");
    fs::remove_all(root);
    return check.outcome;
}

}  // namespace

int main() {
    struct Criterion {
        const char* name;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {"szz-oracle-suite", szz_oracle_suite},
        {"regex-conformance", regex_conformance},
        {"metric-oracles", metric_oracles},
        {"split-soundness", split_soundness},
        {"feature-oracle", feature_oracle},
        {"determinism", determinism},
        {"model-sanity", model_sanity},
        {"end-to-end-smoke", e2e_smoke},
        {"scale-rehearsal", scale_rehearsal},
    };

    int failures = 0;
    for (const auto& criterion : criteria) {
        const auto start = std::chrono::steady_clock::now();
        Outcome outcome;
        try {
            outcome = criterion.run();
        } catch (const std::exception& e) {
            outcome.ok = false;
            outcome.detail = std::string("exception: ") + e.what();
        }
        const double elapsed = seconds_since(start);
        char timing[32];
        std::snprintf(timing, sizeof timing, "%.1fs", elapsed);
        if (outcome.skipped) {
            std::cout << "[SKIP] " << criterion.name << " — " << outcome.detail << "\n";
        } else if (outcome.ok) {
            std::cout << "[PASS] " << criterion.name << " (" << timing << ")\n";
        } else {
            std::cout << "[FAIL] " << criterion.name << " (" << timing << ") — "
                      << outcome.detail << "\n";
            ++failures;
        }
    }
    if (failures) std::cout << failures << " criterion(s) failed\n";
    return failures == 0 ? 0 : 1;
}

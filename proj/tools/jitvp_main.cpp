// Command-line workbench: mine a repository into a labeled JIT-VP dataset,
// then train, evaluate, and run inference with the classical model zoo.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "jitvp/dataset.hpp"
#include "jitvp/errors.hpp"
#include "jitvp/metrics.hpp"
#include "jitvp/models/zoo.hpp"
#include "jitvp/pipeline.hpp"
#include "jitvp/version.hpp"

namespace fs = std::filesystem;
using namespace jitvp;

namespace {

constexpr const char* kUsage = R"(usage: jitvp <subcommand> [flags]

subcommands:
  mining      extract commits, features, fixes, inducers, and splits
  training    fit a model on a mined dataset
  evaluating  score the test split and report metrics
  inference   score new commits from a feature file

common flags (single or double dashes both work):
  -dg_save_folder <dir>    output root (required)
  -repo_name <name>        dataset name under the output root (required)
  -mode local              accepted for compatibility; only "local" is valid

mining:
  -repo_path <dir>         local git repository to mine (required)
  -repo_language <lang>    C | C++ | Java | JavaScript | Python (required)
  -workers <n>             parallel read processes (default 50)
  -szz_variant <b|ag|ma|v> inducer tracing algorithm (default v)
  -regex_level <level>     strong_only | strong_or_medium (default strong_only)
  -manual_patch_file <f>   JSONL of known patch commits
  -split_ratios <a,b,c>    chronological split fractions (default 0.75,0.05,0.20)
  -ideal                   keep only inducing and fixing commits
  -until <epoch>           ignore commits after this UTC time
  -extensions <.a,.b>      override the language extension set

training:
  -model <name>            lr | la | tlel | vcc_linear (required)
  -epochs <n>              gradient-descent iterations for linear kinds
  -seed <n>                reproducibility seed (default 42)
  -no_class_weights        disable inverse-class-frequency weighting

evaluating:
  -model <name>            lr | la | tlel | vcc_linear | external (required)
  -threshold <x>           decision threshold (default 0.5)
  -score_file <f>          imported predictions (required for external)
  -ranking <density|raw>   effort-aware ranking rule (default density)
  -csv                     append a row to metrics.csv

inference:
  -model <name>            trained model to apply (required)
  -input <f>               feature JSONL to score (required)
  -output <f>              prediction JSONL (default: stdout)
)";

struct Args {
    std::string subcommand;
    std::map<std::string, std::string> values;
    std::set<std::string> flags;

    bool has(const std::string& key) const { return values.count(key) || flags.count(key); }

    std::string get(const std::string& key, const std::string& fallback = {}) const {
        auto it = values.find(key);
        return it == values.end() ? fallback : it->second;
    }

    std::string require(const std::string& key) const {
        auto it = values.find(key);
        if (it == values.end()) throw Error("missing required flag -" + key);
        return it->second;
    }
};

const std::set<std::string> kBooleanFlags = {"ideal", "csv", "no_class_weights", "help"};

Args parse_args(int argc, char** argv) {
    Args args;
    if (argc < 2) throw Error("missing subcommand");
    args.subcommand = argv[1];
    for (int i = 2; i < argc; ++i) {
        std::string arg = argv[i];
        if (arg.rfind("--", 0) == 0) arg = arg.substr(2);
        else if (arg.rfind('-', 0) == 0) arg = arg.substr(1);
        else throw Error("unexpected positional argument: " + arg);
        if (kBooleanFlags.count(arg)) {
            args.flags.insert(arg);
            continue;
        }
        if (i + 1 >= argc) throw Error("flag -" + arg + " needs a value");
        args.values[arg] = argv[++i];
    }
    if (args.has("mode") && args.get("mode") != "local")
        throw Error("only -mode local is supported");
    return args;
}

std::array<double, 3> parse_ratios(const std::string& text) {
    std::array<double, 3> ratios{};
    std::stringstream stream(text);
    std::string part;
    for (double& slot : ratios) {
        if (!std::getline(stream, part, ',')) throw Error("split ratios need three values");
        slot = std::stod(part);
    }
    return ratios;
}

std::set<std::string> parse_extensions(const std::string& text) {
    std::set<std::string> extensions;
    std::stringstream stream(text);
    std::string part;
    while (std::getline(stream, part, ','))
        if (!part.empty()) extensions.insert(part);
    if (extensions.empty()) throw Error("empty extension override");
    return extensions;
}

fs::path dataset_dir(const Args& args) {
    return fs::path(args.require("dg_save_folder")) / args.require("repo_name");
}

int cmd_mining(const Args& args) {
    MiningConfig config;
    config.save_folder = args.require("dg_save_folder");
    config.repo_name = args.require("repo_name");
    config.repo_path = args.require("repo_path");
    config.language = parse_language(args.require("repo_language"));
    config.workers = static_cast<unsigned>(std::stoul(args.get("workers", "50")));
    if (config.workers == 0) throw Error("-workers must be at least 1");
    config.szz_variant = parse_szz(args.get("szz_variant", "v"));
    const std::string level = args.get("regex_level", "strong_only");
    if (level == "strong_only") config.regex_level = RegexLevel::StrongOnly;
    else if (level == "strong_or_medium") config.regex_level = RegexLevel::StrongOrMedium;
    else throw Error("unknown -regex_level: " + level);
    if (args.has("manual_patch_file")) config.manual_patch_file = args.get("manual_patch_file");
    if (args.has("split_ratios")) config.split_ratios = parse_ratios(args.get("split_ratios"));
    config.ideal_setting = args.flags.count("ideal") > 0;
    if (args.has("until")) config.until = std::stoll(args.get("until"));
    if (args.has("extensions")) config.extensions_override = parse_extensions(args.get("extensions"));

    run_mining(config, std::cerr);
    std::cerr << "mining artifacts written to " << mining_output_dir(config).string() << "\n";
    return 0;
}

Hyperparameters hyperparameters_from(const Args& args) {
    Hyperparameters hp;
    hp.seed = std::stoull(args.get("seed", "42"));
    hp.epochs = std::stoi(args.get("epochs", "200"));
    hp.class_weights = args.flags.count("no_class_weights") == 0;
    if (args.has("l2")) hp.l2 = std::stod(args.get("l2"));
    return hp;
}

int cmd_training(const Args& args) {
    const fs::path dir = dataset_dir(args);
    const ModelKind kind = parse_model_kind(args.require("model"));
    if (kind == ModelKind::External)
        throw Error("the external kind is import-only; use evaluating with -score_file");

    Hyperparameters hp = hyperparameters_from(args);
    if (args.has("epochs") && (kind == ModelKind::La || kind == ModelKind::Tlel))
        std::cerr << "warning: -epochs has no effect for model " << model_kind_name(kind) << "\n";

    std::vector<AnnotatedCommit> train_set = read_annotated_file(dir / "train.jsonl");
    std::vector<AnnotatedCommit> valid_set = read_annotated_file(dir / "valid.jsonl");

    std::map<std::string, std::string> messages;
    if (kind == ModelKind::VccLinear) {
        const fs::path commits = dir / "commits.jsonl";
        if (fs::exists(commits)) messages = load_commit_messages(commits);
        else std::cerr << "warning: " << commits.string()
                       << " not found; vcc_linear trains on expert features only\n";
    }

    ModelArtifact artifact = train(kind, train_set, valid_set, hp, messages);
    const fs::path out = dir / "models" / (std::string(model_kind_name(kind)) + ".artifact");
    save_artifact(artifact, out);
    std::cerr << "model written to " << out.string() << "\n";
    return 0;
}

int cmd_evaluating(const Args& args) {
    const fs::path dir = dataset_dir(args);
    const ModelKind kind = parse_model_kind(args.require("model"));
    const double threshold = std::stod(args.get("threshold", "0.5"));
    const std::string ranking_name = args.get("ranking", "density");
    EffortRanking ranking;
    if (ranking_name == "density") ranking = EffortRanking::Density;
    else if (ranking_name == "raw") ranking = EffortRanking::RawScore;
    else throw Error("unknown -ranking: " + ranking_name);

    std::vector<PredictionRecord> predictions;
    if (kind == ModelKind::External) {
        if (!args.has("score_file")) throw Error("external evaluation needs -score_file");
        predictions = import_external_scores(args.get("score_file"));
    } else {
        const fs::path artifact_path =
            dir / "models" / (std::string(model_kind_name(kind)) + ".artifact");
        if (!fs::exists(artifact_path))
            throw Error("artifact not found: " + artifact_path.string() + " (train first)");
        ModelArtifact artifact = load_artifact(artifact_path);

        std::vector<AnnotatedCommit> test_set = read_annotated_file(dir / "test.jsonl");
        std::map<std::string, std::string> messages;
        if (kind == ModelKind::VccLinear && fs::exists(dir / "commits.jsonl"))
            messages = load_commit_messages(dir / "commits.jsonl");
        predictions = predict(artifact, test_set, messages);
    }

    write_prediction_file(predictions, dir / "predictions.jsonl");
    MetricsReport rep = report(predictions, threshold, ranking);
    write_file_atomic(dir / "metrics.json", report_json(rep).dump(2) + "\n");
    if (args.flags.count("csv")) {
        const fs::path csv = dir / "metrics.csv";
        std::string content;
        if (fs::exists(csv)) content = read_file(csv);
        if (content.empty()) content = metrics_csv_header() + "\n";
        content += metrics_csv_row(args.get("model"), args.require("repo_name"), rep) + "\n";
        write_file_atomic(csv, content);
    }
    std::cout << report_json(rep).dump(2) << "\n";
    return 0;
}

int cmd_inference(const Args& args) {
    const fs::path dir = dataset_dir(args);
    const ModelKind kind = parse_model_kind(args.require("model"));
    if (kind == ModelKind::External) throw Error("inference needs a trained model kind");
    const fs::path artifact_path =
        dir / "models" / (std::string(model_kind_name(kind)) + ".artifact");
    if (!fs::exists(artifact_path))
        throw Error("artifact not found: " + artifact_path.string() + " (train first)");
    ModelArtifact artifact = load_artifact(artifact_path);

    const fs::path input = args.require("input");
    std::vector<AnnotatedCommit> records;
    std::vector<bool> labeled;
    for_each_jsonl_line(input, [&](std::size_t line_no, const Json& j) {
        AnnotatedCommit record;
        record.features = parse_feature_record(j, line_no, {"label"});
        record.commit_id = record.features.commit_id;
        record.date = record.features.date;
        if (j.contains("label")) {
            const Json& label = j["label"];
            if (!label.is_number_integer() ||
                (label.get<int>() != 0 && label.get<int>() != 1))
                throw SchemaViolation(line_no, "\"label\" must be 0 or 1");
            record.label = label.get<int>();
            labeled.push_back(true);
        } else {
            labeled.push_back(false);
        }
        records.push_back(std::move(record));
    });

    std::vector<PredictionRecord> predictions = predict(artifact, records);
    std::string buffer;
    for (std::size_t i = 0; i < predictions.size(); ++i) {
        OrderedJson j;
        j["commit_id"] = predictions[i].commit_id;
        j["score"] = predictions[i].score;
        if (labeled[i]) j["label"] = predictions[i].label;
        j["effort"] = predictions[i].effort;
        buffer += j.dump();
        buffer += '\n';
    }
    if (args.has("output")) write_file_atomic(args.get("output"), buffer);
    else std::cout << buffer;
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    try {
        Args args = parse_args(argc, argv);
        if (args.flags.count("help") || args.subcommand == "help") {
            std::cout << kUsage;
            return 0;
        }
        if (args.subcommand == "mining") return cmd_mining(args);
        if (args.subcommand == "training") return cmd_training(args);
        if (args.subcommand == "evaluating") return cmd_evaluating(args);
        if (args.subcommand == "inference") return cmd_inference(args);
        if (args.subcommand == "version") {
            std::cout << kToolName << " " << kToolVersion << "\n";
            return 0;
        }
        throw Error("unknown subcommand: " + args.subcommand);
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n\n" << kUsage;
        return 1;
    }
}

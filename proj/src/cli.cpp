#include "tsxai/cli.hpp"

#include <CLI11.hpp>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <mutex>
#include <optional>

#include "text.hpp"
#include "tsxai/cam.hpp"
#include "tsxai/dataset.hpp"
#include "tsxai/ensemble.hpp"
#include "tsxai/errors.hpp"
#include "tsxai/experiment.hpp"
#include "tsxai/fcn.hpp"
#include "tsxai/parallel.hpp"
#include "tsxai/report.hpp"
#include "tsxai/synthdata.hpp"

namespace tsxai::cli {

namespace {

using json = nlohmann::json;
namespace fs = std::filesystem;

struct Options {
    std::optional<std::string> out;
    std::size_t workers = 1;

    std::size_t n_per_class = 250;
    SynthConfig synth;

    std::string train_path;
    std::string test_path;
    std::string data_path;
    std::string run_dir;
    bool normalize = false;

    std::string preset = "desk";
    std::optional<std::size_t> epochs;
    std::optional<std::size_t> models;
    std::optional<std::size_t> single_runs;
    std::optional<std::size_t> ensemble_runs;
    std::size_t batch_size = 16;
    double learning_rate = 1e-3;
    std::uint64_t seed = 0;
    std::string filters;
    std::string kernels;

    std::string accuracy_k = "9,10,11,12,15";
    std::string consistency_k = "5,7,10,15";
    std::size_t permutations = 10000;
    std::optional<std::size_t> explain_class;
    int positive_class = 1;
    std::optional<double> resplit;

    std::string samples;
    bool member_maps = false;
};

struct Preset {
    Architecture arch;
    std::size_t epochs = 0;
    std::size_t members = 0;
    std::size_t single_runs = 0;
    std::size_t ensemble_runs = 0;
};

class Logger {
public:
    explicit Logger(std::ostream& os) : os_(os) {}
    void operator()(const std::string& msg) {
        std::lock_guard<std::mutex> lock(mu_);
        os_ << msg << '\n';
        os_.flush();
    }

private:
    std::ostream& os_;
    std::mutex mu_;
};

std::vector<std::size_t> parse_list(const std::string& s, const char* what) {
    std::vector<std::size_t> out;
    if (text::trim(s).empty()) return out;
    for (auto cell : text::split(s, ',')) {
        const auto v = text::parse_index(cell);
        if (!v) throw ValueError(std::string("invalid ") + what + " entry '" + std::string(cell) + "'");
        out.push_back(*v);
    }
    return out;
}

Preset resolve_preset(const Options& o, std::size_t num_classes) {
    Preset p;
    if (o.preset == "paper") {
        p = {Architecture::paper(num_classes), 150, 10, 10, 10};
    } else if (o.preset == "desk") {
        p = {Architecture::desk(num_classes), 50, 5, 10, 5};
    } else {
        throw ValueError("unknown preset '" + o.preset + "' (expected paper or desk)");
    }
    const auto filters = parse_list(o.filters, "filter count");
    const auto kernels = parse_list(o.kernels, "kernel size");
    if (!filters.empty()) {
        if (filters.size() != 3) throw ValueError("--filters takes three comma-separated counts");
        for (std::size_t b = 0; b < 3; ++b) p.arch.blocks[b].filters = filters[b];
    }
    if (!kernels.empty()) {
        if (kernels.size() != 3) throw ValueError("--kernels takes three comma-separated sizes");
        for (std::size_t b = 0; b < 3; ++b) p.arch.blocks[b].kernel = kernels[b];
    }
    if (o.epochs) p.epochs = *o.epochs;
    if (o.models) p.members = *o.models;
    if (o.single_runs) p.single_runs = *o.single_runs;
    if (o.ensemble_runs) p.ensemble_runs = *o.ensemble_runs;
    p.arch.validate();
    return p;
}

TrainConfig train_config(const Options& o, const Preset& p) {
    TrainConfig tc;
    tc.epochs = p.epochs;
    tc.batch_size = o.batch_size;
    tc.learning_rate = o.learning_rate;
    tc.seed = o.seed;
    tc.validate();
    return tc;
}

json arch_json(const Architecture& a) {
    json blocks = json::array();
    for (const auto& b : a.blocks) blocks.push_back({{"filters", b.filters}, {"kernel", b.kernel}});
    return {{"input_channels", a.input_channels}, {"num_classes", a.num_classes}, {"blocks", blocks}};
}

std::string hex(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

json dataset_json(const LabeledDataset& d, const std::string& path) {
    return {{"path", path},
            {"name", d.name},
            {"fingerprint", hex(fingerprint(d))},
            {"samples", d.size()},
            {"length", d.length()},
            {"label_values", d.label_values},
            {"class_counts", d.class_counts()}};
}

void write_json(const json& j, const fs::path& path) {
    std::ofstream out(path);
    if (!out) throw Error("cannot write '" + path.string() + "'");
    out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ValueError("cannot open '" + path.string() + "'");
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw ParseError("'" + path.string() + "' is not valid JSON: " + e.what(), 0);
    }
}

fs::path output_dir(const Options& o, const char* subcommand) {
    if (o.out) return *o.out;
    const char* root = std::getenv(kOutputRootEnv);
    return fs::path(root && *root ? root : "tsxai_runs") / subcommand;
}

LabeledDataset load_input(const std::string& path, bool normalize, const char* flag) {
    if (path.empty()) throw ValueError(std::string(flag) + " is required");
    if (!fs::exists(path)) throw ValueError(std::string(flag) + ": no such file '" + path + "'");
    LabeledDataset d = load_dataset(path);
    if (normalize) z_normalize(d);
    return d;
}

std::string member_name(std::size_t m, const char* ext) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "member_%03zu.%s", m, ext);
    return buf;
}

std::string sample_name(std::size_t id, const char* suffix) {
    char buf[48];
    std::snprintf(buf, sizeof(buf), "sample_%05zu%s", id, suffix);
    return buf;
}

// ---- synth -----------------------------------------------------------------

int cmd_synth(const Options& o, std::ostream& out) {
    o.synth.validate();
    if (o.n_per_class < 1) throw ValueError("--n-per-class must be at least 1");
    const fs::path dir = output_dir(o, "synth");

    SynthConfig train_cfg = o.synth;
    SynthConfig test_cfg = o.synth;
    test_cfg.seed = o.synth.seed + 1;
    LabeledDataset train = generate_dataset(o.n_per_class, train_cfg);
    LabeledDataset test = generate_dataset(o.n_per_class, test_cfg);
    train.name = "synthetic_TRAIN";
    test.name = "synthetic_TEST";

    fs::create_directories(dir);
    write_dataset(train, dir / "synthetic_TRAIN.csv");
    write_dataset(test, dir / "synthetic_TEST.csv");
    const json config = {{"subcommand", "synth"},
                         {"n_per_class", o.n_per_class},
                         {"length", o.synth.length},
                         {"frequency", o.synth.frequency},
                         {"noise_variance", o.synth.noise_variance},
                         {"amplitude", o.synth.amplitude},
                         {"margin", o.synth.margin},
                         {"train_seed", train_cfg.seed},
                         {"test_seed", test_cfg.seed}};
    write_json(config, dir / "run_config.json");

    out << "split  N    C=0  C=1  T\n";
    for (const auto* d : {&train, &test}) {
        const auto counts = d->class_counts();
        out << (d == &train ? "train  " : "test   ") << d->size() << "  " << counts[0] << "  " << counts[1] << "  "
            << d->length() << '\n';
    }
    out << "wrote " << (dir / "synthetic_TRAIN.csv").string() << " and " << (dir / "synthetic_TEST.csv").string()
        << " (+ .relevant.csv sidecars)\n";
    return kSuccess;
}

// ---- train -----------------------------------------------------------------

int cmd_train(const Options& o, std::ostream& out, Logger& log) {
    const LabeledDataset data = load_input(o.train_path, o.normalize, "--train");
    if (data.num_classes() < 2) throw ValueError("training data holds a single class");
    const Preset preset = resolve_preset(o, data.num_classes());
    const TrainConfig tc = train_config(o, preset);
    if (preset.members < 1) throw ValueError("--models must be at least 1");

    const fs::path dir = output_dir(o, "train");
    std::vector<std::uint64_t> seeds;
    for (std::size_t m = 0; m < preset.members; ++m) seeds.push_back(o.seed + m);
    const json training = {{"dataset", dataset_json(data, o.train_path)},
                           {"normalize", o.normalize},
                           {"preset", o.preset},
                           {"architecture", arch_json(preset.arch)},
                           {"epochs", tc.epochs},
                           {"batch_size", tc.batch_size},
                           {"learning_rate", tc.learning_rate},
                           {"members", preset.members},
                           {"seeds", seeds}};
    const fs::path manifest_path = dir / "manifest.json";
    if (fs::exists(manifest_path)) {
        const json existing = read_json(manifest_path);
        if (!existing.contains("training") || existing["training"] != training) {
            throw ValueError("run directory '" + dir.string() +
                             "' holds a different training configuration; choose another --out");
        }
    }
    fs::create_directories(dir / "checkpoints");
    fs::create_directories(dir / "logs");
    json manifest = {{"format", "tsxai-run"}, {"version", 1}, {"training", training}};
    manifest["run_config"] = {{"subcommand", "train"}, {"out", dir.string()}, {"workers", o.workers}};
    write_json(manifest, manifest_path);

    std::vector<std::size_t> pending;
    for (std::size_t m = 0; m < preset.members; ++m) {
        if (fs::exists(dir / "checkpoints" / member_name(m, "bin"))) {
            log("member " + std::to_string(m) + ": checkpoint present, skipping");
        } else {
            pending.push_back(m);
        }
    }
    log("training " + std::to_string(pending.size()) + " of " + std::to_string(preset.members) + " members, " +
        preset.arch.describe() + ", " + std::to_string(tc.epochs) + " epochs");
    std::vector<TrainLog> logs(preset.members);
    parallel_for(pending.size(), o.workers, [&](std::size_t i) {
        const std::size_t m = pending[i];
        TrainConfig member_tc = tc;
        member_tc.seed = seeds[m];
        try {
            train_or_load(data, preset.arch, member_tc, dir / "checkpoints" / member_name(m, "bin"), &logs[m]);
        } catch (const TrainingError& e) {
            throw TrainingError("member " + std::to_string(m) + ": " + e.what(), e.epoch(), e.batch());
        }
        std::ofstream csv(dir / "logs" / member_name(m, "csv"));
        csv << "epoch,loss,accuracy\n";
        for (std::size_t e = 0; e < logs[m].epochs.size(); ++e) {
            csv << e + 1 << ',' << text::format_double(logs[m].epochs[e].loss) << ','
                << text::format_double(logs[m].epochs[e].accuracy) << '\n';
        }
        const auto& last = logs[m].epochs.back();
        log("member " + std::to_string(m) + " done: loss " + text::format_double(last.loss) + ", train accuracy " +
            text::format_double(last.accuracy));
    });
    out << "run directory: " << dir.string() << " (" << preset.members << " member checkpoints)\n";
    return kSuccess;
}

// ---- explain ---------------------------------------------------------------

Ensemble load_run(const fs::path& dir, json& training) {
    const fs::path manifest_path = dir / "manifest.json";
    if (!fs::exists(manifest_path)) throw ValueError("--run: no manifest.json in '" + dir.string() + "'");
    const json manifest = read_json(manifest_path);
    training = manifest.at("training");
    const std::size_t members = training.at("members").get<std::size_t>();
    if (members < 2) {
        throw ValueError("uncertainty requires M \u2265 2 ensemble members; run '" + dir.string() + "' has " +
                         std::to_string(members));
    }
    Ensemble ens;
    for (std::size_t m = 0; m < members; ++m) {
        const fs::path ckpt = dir / "checkpoints" / member_name(m, "bin");
        if (!fs::exists(ckpt)) throw ValueError("member " + std::to_string(m) + " has no checkpoint; rerun train");
        ens.members.push_back(load_checkpoint(ckpt));
        ens.seeds.push_back(training.at("seeds").at(m).get<std::uint64_t>());
    }
    ens.arch = ens.members.front().arch;
    ens.validate();
    return ens;
}

int cmd_explain(const Options& o, std::ostream& out) {
    if (o.run_dir.empty()) throw ValueError("--run is required");
    json training;
    const Ensemble ens = load_run(o.run_dir, training);
    const bool normalize = training.at("normalize").get<bool>();
    const LabeledDataset data = load_input(o.data_path, normalize, "--data");
    if (data.series.channels() != ens.arch.input_channels) throw ValueError("--data has the wrong channel count");

    std::vector<std::size_t> ids = parse_list(o.samples, "sample id");
    if (ids.empty()) {
        ids.resize(data.size());
        for (std::size_t i = 0; i < ids.size(); ++i) ids[i] = i;
    }
    for (std::size_t id : ids) {
        if (id >= data.size()) {
            throw ValueError("sample id " + std::to_string(id) + " outside [0, " + std::to_string(data.size()) + ")");
        }
    }
    if (o.explain_class && *o.explain_class >= ens.arch.num_classes) throw ValueError("--class out of range");

    const fs::path dir = o.out ? fs::path(*o.out) : fs::path(o.run_dir) / "explain";
    fs::create_directories(dir / "relevance");
    fs::create_directories(dir / "figures");

    const Tensor3 batch = data.series.gather(ids);
    std::vector<int> classes;
    if (o.explain_class) {
        classes.assign(ids.size(), static_cast<int>(*o.explain_class));
    } else {
        classes = ensemble_predict(ens, batch, o.workers).labels;
    }
    const auto relevance = ensemble_relevance(ens, batch, classes, o.workers);
    std::vector<std::vector<RelevanceMap>> member_maps;
    if (o.member_maps) member_maps = member_relevance(ens, batch, classes, o.workers);

    for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t id = ids[i];
        write_ensemble_relevance_csv(id, relevance[i], dir / "relevance" / sample_name(id, ".csv"));
        render_relevance_svg(batch.series(i, 0), relevance[i], dir / "figures" / sample_name(id, ".svg"),
                             data.name + " sample " + std::to_string(id) + ", class " +
                                 std::to_string(relevance[i].class_id));
        if (o.member_maps) {
            std::vector<RelevanceMap> maps;
            for (const auto& per_member : member_maps) {
                RelevanceMap m = per_member[i];
                m.sample_id = id;
                maps.push_back(std::move(m));
            }
            write_relevance_csv(maps, dir / "relevance" / sample_name(id, "_members.csv"));
        }
    }
    const json config = {{"subcommand", "explain"},
                         {"run", o.run_dir},
                         {"data", o.data_path},
                         {"samples", ids},
                         {"class", o.explain_class ? json(*o.explain_class) : json()},
                         {"member_maps", o.member_maps},
                         {"training", training}};
    write_json(config, dir / "run_config.json");
    out << "explained " << ids.size() << " samples with " << ens.size() << " members -> " << dir.string() << '\n';
    return kSuccess;
}

// ---- evaluate --------------------------------------------------------------

int cmd_evaluate(const Options& o, std::ostream& out, Logger& log) {
    const LabeledDataset train = load_input(o.train_path, o.normalize, "--train");
    const LabeledDataset test = load_input(o.test_path, o.normalize, "--test");
    if (train.num_classes() < 2) throw ValueError("training data holds a single class");
    const Preset preset = resolve_preset(o, train.num_classes());

    EvaluationConfig ec;
    ec.arch = preset.arch;
    ec.train = train_config(o, preset);
    ec.single_runs = preset.single_runs;
    ec.ensemble_runs = preset.ensemble_runs;
    ec.members = preset.members;
    ec.seed = o.seed;
    ec.accuracy_k = parse_list(o.accuracy_k, "k");
    ec.consistency_k = parse_list(o.consistency_k, "consistency k");
    ec.permutations = o.permutations;
    ec.explain_class = o.explain_class;
    ec.positive_class = o.positive_class;
    ec.resplit_train_fraction = o.resplit;
    ec.workers = o.workers;
    ec.validate(test.length());

    const fs::path dir = output_dir(o, "evaluate");
    fs::create_directories(dir / "metrics");
    fs::create_directories(dir / "figures");
    ec.model_cache = dir / "checkpoints";
    ec.log = [&log](const std::string& msg) { log(msg); };

    const json config = {{"subcommand", "evaluate"},
                         {"train", dataset_json(train, o.train_path)},
                         {"test", dataset_json(test, o.test_path)},
                         {"normalize", o.normalize},
                         {"preset", o.preset},
                         {"architecture", arch_json(ec.arch)},
                         {"epochs", ec.train.epochs},
                         {"batch_size", ec.train.batch_size},
                         {"learning_rate", ec.train.learning_rate},
                         {"single_runs", ec.single_runs},
                         {"ensemble_runs", ec.ensemble_runs},
                         {"members", ec.members},
                         {"seed", ec.seed},
                         {"accuracy_k", ec.accuracy_k},
                         {"consistency_k", ec.consistency_k},
                         {"permutations", ec.permutations},
                         {"class", o.explain_class ? json(*o.explain_class) : json()},
                         {"positive_class", ec.positive_class},
                         {"resplit", o.resplit ? json(*o.resplit) : json()},
                         {"workers", ec.workers}};
    write_json(config, dir / "run_config.json");

    const EvaluationResult result = run_evaluation(train, test, ec);
    write_metrics_csv(result.rows, dir / "metrics" / "metrics.csv");
    for (const auto& [k, single] : result.single.ratio) {
        const auto& ens = result.ensemble.ratio.at(k);
        std::vector<double> s(single.front().ratio.size(), 0.0);
        std::vector<double> e(s.size(), 0.0);
        for (const auto& r : single) {
            for (std::size_t j = 0; j < s.size(); ++j) s[j] += r.ratio[j] / static_cast<double>(single.size());
        }
        for (const auto& r : ens) {
            for (std::size_t j = 0; j < e.size(); ++j) e[j] += r.ratio[j] / static_cast<double>(ens.size());
        }
        std::ofstream svg(dir / "figures" / ("relevance_ratio_k" + std::to_string(k) + ".svg"), std::ios::binary);
        svg << relevance_ratio_svg(s, e, single.front().baseline, k);
    }

    out << "metric                  k    single            ensemble          p\n";
    for (std::size_t i = 0; i + 1 < result.rows.size(); ++i) {
        const auto& s = result.rows[i];
        const auto& e = result.rows[i + 1];
        if (s.model_kind != "single" || e.model_kind != "ensemble" || s.metric != e.metric || s.k != e.k) continue;
        if (s.metric.rfind("relevance_ratio", 0) == 0) continue;
        char line[160];
        std::snprintf(line, sizeof(line), "%-22s %3s  %.3f +- %.3f   %.3f +- %.3f   %s\n", s.metric.c_str(),
                      s.k ? std::to_string(*s.k).c_str() : "-", s.mean, s.std, e.mean, e.std,
                      s.p_value ? text::format_double(*s.p_value).c_str() : "-");
        out << line;
    }
    out << "metrics: " << (dir / "metrics" / "metrics.csv").string() << '\n';
    return kSuccess;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Deep-ensemble class activation maps with relevance uncertainty for time series"};
    app.require_subcommand(1);
    app.add_option("--workers", o.workers, "Worker threads for model training and explanation")
        ->check(CLI::PositiveNumber);
    const std::string out_help = std::string("Output directory (default: $") + kOutputRootEnv + "/<subcommand>)";

    auto add_model_options = [&o](CLI::App* sub) {
        sub->add_option("--preset", o.preset, "Architecture preset: desk (32/64/32) or paper (128/256/128)")
            ->check(CLI::IsMember({"desk", "paper"}));
        sub->add_option("--epochs", o.epochs, "Training epochs (preset default)");
        sub->add_option("--batch-size", o.batch_size, "Mini-batch size")->check(CLI::PositiveNumber);
        sub->add_option("--lr", o.learning_rate, "Adam learning rate");
        sub->add_option("--seed", o.seed, "Base seed");
        sub->add_option("--filters", o.filters, "Override filter counts, e.g. 16,32,16");
        sub->add_option("--kernels", o.kernels, "Override kernel sizes, e.g. 7,5,3");
        sub->add_flag("--normalize", o.normalize, "Z-normalize every series before use");
    };

    auto* synth = app.add_subcommand("synth", "Generate the synthetic spike benchmark");
    synth->add_option("--n-per-class", o.n_per_class, "Samples per class in each split");
    synth->add_option("--length", o.synth.length, "Series length");
    synth->add_option("--frequency", o.synth.frequency, "Sinusoid frequency (cycles per step)");
    synth->add_option("--noise-variance", o.synth.noise_variance, "Gaussian noise variance");
    synth->add_option("--amplitude", o.synth.amplitude, "Spike amplitude");
    synth->add_option("--margin", o.synth.margin, "Minimum distance of the relevant window from the ends");
    synth->add_option("--seed", o.synth.seed, "Seed of the training split (test uses seed + 1)");
    synth->add_option("--out", o.out, out_help);

    auto* train = app.add_subcommand("train", "Train one model or an ensemble");
    train->add_option("--train", o.train_path, "Training file (UCR format)")->required();
    train->add_option("--models", o.models, "Number of models (preset default)");
    train->add_option("--out", o.out, out_help);
    add_model_options(train);

    auto* explain = app.add_subcommand("explain", "Ensemble relevance, uncertainty and figures");
    explain->add_option("--run", o.run_dir, "Run directory written by 'train'")->required();
    explain->add_option("--data", o.data_path, "Series to explain (UCR format)")->required();
    explain->add_option("--samples", o.samples, "Comma-separated sample ids (default: all)");
    explain->add_option("--class", o.explain_class, "Class to explain (default: ensemble prediction)");
    explain->add_flag("--member-maps", o.member_maps, "Also write each member's relevance map");
    explain->add_option("--out", o.out, "Output directory (default: <run>/explain)");

    auto* evaluate = app.add_subcommand("evaluate", "Single-model vs ensemble evaluation protocol");
    evaluate->add_option("--train", o.train_path, "Training file (UCR format)")->required();
    evaluate->add_option("--test", o.test_path, "Test file (UCR format)")->required();
    evaluate->add_option("--models", o.models, "Ensemble size (preset default)");
    evaluate->add_option("--single-runs", o.single_runs, "Independent single models (preset default)");
    evaluate->add_option("--ensemble-runs", o.ensemble_runs, "Independent ensembles (preset default)");
    evaluate->add_option("--k", o.accuracy_k, "Top-k values for relevance accuracy and ratio");
    evaluate->add_option("--consistency-k", o.consistency_k, "Top-k values for relevance consistency");
    evaluate->add_option("--permutations", o.permutations, "Permutations per significance test");
    evaluate->add_option("--class", o.explain_class, "Class to explain (default: predicted class)");
    evaluate->add_option("--positive-class", o.positive_class, "Class index treated as positive");
    evaluate->add_option("--resplit", o.resplit, "Pool train+test and resplit per run with this train fraction");
    evaluate->add_option("--out", o.out, out_help);
    add_model_options(evaluate);

    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kSuccess;
    } catch (const CLI::ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    }

    Logger log(err);
    try {
        if (synth->parsed()) return cmd_synth(o, out);
        if (train->parsed()) return cmd_train(o, out, log);
        if (explain->parsed()) return cmd_explain(o, out);
        if (evaluate->parsed()) return cmd_evaluate(o, out, log);
    } catch (const ValueError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const ParseError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const ShapeError& e) {
        err << "error: " << e.what() << '\n';
        return kValidationError;
    } catch (const std::exception& e) {
        err << "failure: " << e.what() << '\n';
        return kRuntimeFailure;
    }
    return kValidationError;
}

}  // namespace tsxai::cli

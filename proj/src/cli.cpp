#include "mda/cli.hpp"

#include "mda/config.hpp"
#include "mda/data.hpp"
#include "mda/error.hpp"
#include "mda/eval.hpp"
#include "mda/synthetic.hpp"
#include "mda/trainer.hpp"

#include "CLI11.hpp"
#include "json.hpp"

#include <algorithm>
#include <chrono>
#include <cstdlib>
#include <ctime>
#include <fstream>
#include <map>
#include <ostream>
#include <random>
#include <set>
#include <sstream>

namespace mda {

namespace fs = std::filesystem;
using nlohmann::ordered_json;

namespace {

// ---------------------------------------------------------------------------
// Schemas. Each flag of a subcommand is also a config key (dashes become
// underscores); flags override the file.
// ---------------------------------------------------------------------------

const ConfigSchema& ingest_schema() {
    static const ConfigSchema s = {
        {"data_dir", ValueType::string, "directory of Backblaze daily CSVs (env MDA_DATA_DIR)"},
        {"models", ValueType::string_list, "drive models to extract (default: all with failures)"},
        {"out", ValueType::string, "output directory for dataset + stats files"},
        {"lookback_days", ValueType::integer, "days before failure labelled positive (default 1)"},
        {"ratio", ValueType::integer, "negatives per positive (default 10)"},
        {"seed", ValueType::integer, "run seed (generated when omitted)"},
        {"train_fraction", ValueType::real, "stratified train share (default 0.7)"},
        {"stats_mode", ValueType::string, "shared | per-domain normalization (default shared)"},
        {"stats_model", ValueType::string,
         "model whose train split defines shared stats (default: most failures)"},
    };
    return s;
}

const ConfigSchema& train_schema() {
    static const ConfigSchema s = {
        {"source", ValueType::string, "source dataset file"},
        {"target", ValueType::string, "target dataset file"},
        {"variant", ValueType::string, "method variant: " + variant_names_joined()},
        {"epochs", ValueType::integer, "training epochs (default 100)"},
        {"batch", ValueType::integer, "rows per domain per step (default 64)"},
        {"lr", ValueType::real, "learning rate (default 1e-3)"},
        {"optimizer", ValueType::string, "adam | sgd (default adam)"},
        {"seed", ValueType::integer, "run seed (generated when omitted)"},
        {"weighting", ValueType::string, "dynamic | gamma (default dynamic)"},
        {"gamma", ValueType::real, "metric weight in gamma mode (default 10)"},
        {"kernel", ValueType::string, "gaussian | linear MMD kernel (default gaussian)"},
        {"bandwidth", ValueType::real, "fixed gaussian bandwidth (default: median heuristic)"},
        {"fc1_width", ValueType::integer, "first hidden width (default 256)"},
        {"fc2_width", ValueType::integer, "second hidden width (default 128)"},
        {"dropout", ValueType::real, "dropout rate after layer 1 (default 0.5)"},
        {"discrepancy_rows", ValueType::integer, "rows per domain for the epoch metric (default 2048)"},
        {"out", ValueType::string, "output directory"},
    };
    return s;
}

const ConfigSchema& benchmark_schema() {
    static const ConfigSchema s = {
        {"report_id", ValueType::string, "report name used in output file names (default report)"},
        {"out_dir", ValueType::string, "output directory (flag --out-dir wins)"},
        {"dataset_source", ValueType::string, "ingested | synthetic (default ingested)"},
        {"data_dir", ValueType::string, "directory of ingested {model}.csv datasets"},
        {"sources", ValueType::string_list, "source model ids"},
        {"targets", ValueType::string_list, "target model ids"},
        {"variants", ValueType::string_list, "method variants, or 'all'"},
        {"seeds", ValueType::integer_list, "replicate seeds (default 1,2,3,4,5)"},
        {"epochs", ValueType::integer, "training epochs (default 100)"},
        {"batch", ValueType::integer, "rows per domain per step (default 64)"},
        {"lr", ValueType::real, "learning rate (default 1e-3)"},
        {"optimizer", ValueType::string, "adam | sgd"},
        {"weighting", ValueType::string, "dynamic | gamma"},
        {"gamma", ValueType::real, "metric weight in gamma mode"},
        {"kernel", ValueType::string, "gaussian | linear"},
        {"bandwidth", ValueType::real, "fixed gaussian bandwidth"},
        {"fc1_width", ValueType::integer, "first hidden width (default 256)"},
        {"fc2_width", ValueType::integer, "second hidden width (default 128)"},
        {"dropout", ValueType::real, "dropout rate (default 0.5)"},
        {"discrepancy_rows", ValueType::integer, "rows per domain for the epoch metric"},
        {"threads", ValueType::integer, "worker threads for independent cells (default 1)"},
        {"record_wall_time", ValueType::boolean, "fill wall_ms (makes reports non-reproducible)"},
        {"synthetic_seed", ValueType::integer, "data seed for dataset_source = synthetic"},
        {"synthetic_source_rows", ValueType::integer, "synthetic source size (default 5000)"},
        {"synthetic_target_rows", ValueType::integer, "synthetic target size (default 500)"},
        {"synthetic_nuisance_shift", ValueType::real, "target shift of nuisance dims"},
        {"synthetic_nuisance_scale", ValueType::real, "target scale of nuisance dims"},
        {"synthetic_informative_shift", ValueType::real, "target shift of informative dims"},
        {"synthetic_separation", ValueType::real, "class separation"},
    };
    return s;
}

struct ShapeOrUsage {};

std::string key_of(const CLI::Option* opt) {
    std::string k = opt->get_lnames().empty() ? opt->get_name() : opt->get_lnames().front();
    std::replace(k.begin(), k.end(), '-', '_');
    return k;
}

// Config file (if any) overlaid with the flags that were given.
Config resolve_config(const CLI::App& sub, const std::string& config_path,
                      const ConfigSchema& schema, const std::set<std::string>& skip) {
    Config c = config_path.empty() ? Config{} : Config::load(config_path);
    c.validate(schema);
    for (const CLI::Option* opt : sub.get_options()) {
        if (opt->count() == 0) continue;
        const std::string key = key_of(opt);
        if (skip.contains(key) || key == "help") continue;
        std::string joined;
        for (const auto& r : opt->results()) joined += (joined.empty() ? "" : ",") + r;
        c.set(key, joined);
    }
    c.validate(schema);
    return c;
}

std::string utc_now() {
    const auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

ordered_json config_json(const Config& c) {
    ordered_json j = ordered_json::object();
    for (const auto& [k, v] : c.values()) j[k] = v;
    return j;
}

struct Manifest {
    ordered_json j;
    explicit Manifest(const std::string& command) {
        j["tool"] = kToolName;
        j["version"] = kToolVersion;
        j["command"] = command;
        j["started_at"] = utc_now();
    }
    void write(const fs::path& path) {
        j["finished_at"] = utc_now();
        std::ofstream out(path);
        if (!out) throw IoError("cannot write manifest " + path.string());
        out << j.dump(2) << "\n";
    }
};

std::uint64_t resolve_seed(const Config& c, std::ostream& out) {
    if (c.has("seed")) return static_cast<std::uint64_t>(c.get_int("seed"));
    std::random_device rd;
    const std::uint64_t seed = ((static_cast<std::uint64_t>(rd()) << 32) | rd()) & 0x7fffffffffffffffULL;
    out << "seed: " << seed << " (generated)\n";
    return seed;
}

void ensure_dir(const fs::path& p) {
    std::error_code ec;
    fs::create_directories(p, ec);
    if (ec) throw IoError("cannot create directory " + p.string() + ": " + ec.message());
}

std::uint64_t name_key(const std::string& s) {
    return std::stoull(fingerprint_bytes(s), nullptr, 16);
}

// --------------------------------------------------------------------------- ingest

int cmd_ingest(const Config& c, std::ostream& out, std::ostream& err) {
    Manifest manifest("ingest");
    std::string data_dir = c.get_string("data_dir");
    if (data_dir.empty())
        if (const char* env = std::getenv("MDA_DATA_DIR")) data_dir = env;
    if (data_dir.empty()) throw UsageError("no input files: --data-dir not given and MDA_DATA_DIR unset");
    const fs::path out_dir = c.get_string("out", "datasets");

    std::vector<fs::path> files;
    std::error_code ec;
    if (fs::is_directory(data_dir, ec))
        for (const auto& e : fs::directory_iterator(data_dir))
            if (e.is_regular_file() && e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) throw UsageError("no input files in " + data_dir);

    const auto seed = resolve_seed(c, out);
    const auto requested = c.get_list("models");
    const std::set<std::string> filter(requested.begin(), requested.end());
    const IngestResult ing = ingest(files, filter);
    out << "read " << files.size() << " file(s): " << ing.records.size() << " rows kept, "
        << ing.dropped_rows << " dropped for missing values\n";

    BuildOptions opts;
    opts.negatives_per_positive = static_cast<std::size_t>(c.get_int("ratio", 10));
    opts.lookback_days = static_cast<int>(c.get_int("lookback_days", 1));
    const double train_fraction = c.get_real("train_fraction", 0.7);
    const std::string fingerprint = fingerprint_files(files);

    std::set<std::string> models = filter;
    if (models.empty())
        for (const auto& r : ing.records) models.insert(r.model);

    std::map<std::string, DomainDataset> built;
    for (const auto& m : models) {
        RngStream rng(derive_seed(seed, name_key(m)));
        DomainDataset ds;
        try {
            ds = build_domain(ing.records, m, opts, rng);
        } catch (const DataError& e) {
            if (!filter.empty()) throw;
            err << "warning: skipping " << m << ": " << e.what() << "\n";
            continue;
        }
        RngStream split_rng(derive_seed(seed, name_key(m) + 1));
        ds = split(ds, train_fraction, split_rng);
        ds.fingerprint = fingerprint;
        for (const auto& w : ds.warnings) err << "warning: " << w << "\n";
        built.emplace(m, std::move(ds));
    }
    if (built.empty()) throw DataError("no model with failed disks in the input");

    const std::string mode = c.get_string("stats_mode", "shared");
    if (mode != "shared" && mode != "per-domain")
        throw UsageError("stats_mode must be 'shared' or 'per-domain', got '" + mode + "'");
    std::string owner = c.get_string("stats_model");
    if (mode == "shared" && owner.empty()) {
        std::size_t best = 0;
        for (const auto& [m, ds] : built)
            if (ds.positives() > best) {
                best = ds.positives();
                owner = m;
            }
    }
    if (mode == "shared" && !built.contains(owner))
        throw UsageError("stats_model " + owner + " is not among the ingested models");

    ensure_dir(out_dir);
    ordered_json artifacts = ordered_json::array();
    for (const auto& [m, ds] : built) {
        const NormalizationStats stats = compute_stats(mode == "shared" ? built.at(owner) : ds);
        const DomainDataset norm = normalized(ds, stats);
        const fs::path data_path = out_dir / (m + ".csv");
        const fs::path stats_path = out_dir / (m + ".stats.json");
        write_dataset(data_path, norm, {}, stats.owner_model);
        write_stats(stats_path, stats);
        artifacts.push_back(data_path.filename().string());
        artifacts.push_back(stats_path.filename().string());
        const auto tr = norm.indices(Split::train).size();
        out << m << ": " << norm.rows() << " rows (" << norm.positives() << " positive), train "
            << tr << " / test " << norm.rows() - tr << ", stats from " << stats.owner_model << "\n";
    }

    manifest.j["config"] = config_json(c);
    manifest.j["seed"] = seed;
    manifest.j["dataset_fingerprints"] = {{"inputs", fingerprint}};
    manifest.j["input_files"] = files.size();
    manifest.j["dropped_rows"] = ing.dropped_rows;
    manifest.j["artifacts"] = artifacts;
    manifest.write(out_dir / "manifest.json");
    return kExitOk;
}

// --------------------------------------------------------------------------- train

TrainConfig train_config_from(const Config& c) {
    TrainConfig t;
    if (c.has("variant")) t.variant = parse_variant(c.get_string("variant"));
    t.epochs = static_cast<std::size_t>(c.get_int("epochs", 100));
    t.batch_size = static_cast<std::size_t>(c.get_int("batch", 64));
    t.learning_rate = c.get_real("lr", 1e-3);
    const auto opt = c.get_string("optimizer", "adam");
    if (opt == "adam") t.optimizer = OptimizerKind::adam;
    else if (opt == "sgd") t.optimizer = OptimizerKind::sgd;
    else throw UsageError("optimizer must be adam or sgd, got '" + opt + "'");
    t.weighting = parse_weighting(c.get_string("weighting", "dynamic"));
    t.gamma = c.get_real("gamma", kDefaultGamma);
    const auto kernel = c.get_string("kernel", "gaussian");
    if (kernel == "gaussian") t.kernel.kind = KernelKind::gaussian;
    else if (kernel == "linear") t.kernel.kind = KernelKind::linear;
    else throw UsageError("kernel must be gaussian or linear, got '" + kernel + "'");
    if (c.has("bandwidth")) t.kernel.bandwidth = c.get_real("bandwidth");
    t.discrepancy_max_rows = static_cast<std::size_t>(c.get_int("discrepancy_rows", 2048));
    if (c.get_int("epochs", 100) < 1 || c.get_int("batch", 64) < 0)
        throw UsageError("epochs and batch must be positive");
    return t;
}

NetworkConfig network_config_from(const Config& c, std::size_t input_dim) {
    NetworkConfig n;
    n.input_dim = input_dim;
    n.fc1_width = static_cast<std::size_t>(std::max<std::int64_t>(0, c.get_int("fc1_width", 256)));
    n.fc2_width = static_cast<std::size_t>(std::max<std::int64_t>(0, c.get_int("fc2_width", 128)));
    n.dropout_rate = c.get_real("dropout", 0.5);
    return n;
}

std::string breakdown_fields(const LossBreakdown& b) {
    std::ostringstream s;
    write_history_row(s, 0, b);
    std::string row = s.str();
    row.pop_back();                  // newline
    return row.substr(row.find(','));  // drop the index
}

int cmd_train(const Config& c, std::ostream& out, std::ostream& err) {
    Manifest manifest("train");
    if (!c.has("variant")) throw UsageError("--variant is required; valid variants: " + variant_names_joined());
    TrainConfig cfg = train_config_from(c);
    cfg.seed = resolve_seed(c, out);
    const fs::path out_dir = c.get_string("out", "train_out");

    DomainDataset source, target;
    std::vector<fs::path> inputs;
    const bool need_source = cfg.variant != MethodVariant::target_only;
    const bool need_target = cfg.variant != MethodVariant::source_only;
    if (cfg.variant == MethodVariant::target_only && c.has("source"))
        err << "warning: --source is ignored for target_only\n";
    if (need_source) {
        if (!c.has("source")) throw UsageError("--source is required for " + std::string(variant_name(cfg.variant)));
        source = read_dataset(c.get_string("source"));
        inputs.emplace_back(c.get_string("source"));
    }
    if (need_target || c.has("target")) {
        if (!c.has("target")) throw UsageError("--target is required for " + std::string(variant_name(cfg.variant)));
        target = read_dataset(c.get_string("target"));
        inputs.emplace_back(c.get_string("target"));
    }
    const DomainDataset& labeled = need_source ? source : target;
    if (need_source && c.has("target") && source.features.cols() != target.features.cols())
        throw ShapeError("source has " + std::to_string(source.features.cols()) +
                         " features but target has " + std::to_string(target.features.cols()));

    const NetworkConfig net_cfg = network_config_from(c, labeled.features.cols());
    const TrainResult result = train(source, target, net_cfg, cfg);

    ensure_dir(out_dir);
    const std::map<std::string, std::string> meta = {
        {"variant", std::string(variant_name(cfg.variant))},
        {"source", need_source ? source.model_id : "-"},
        {"target", target.model_id.empty() ? "-" : target.model_id},
        {"seed", std::to_string(cfg.seed)},
    };
    save_checkpoint(out_dir / "checkpoint.txt", result.net, "manifest.json", meta);
    {
        std::ofstream h(out_dir / "history.csv");
        if (!h) throw IoError("cannot write " + (out_dir / "history.csv").string());
        h << history_csv_header(cfg.variant) << "\n";
        for (std::size_t i = 0; i < result.history.steps.size(); ++i)
            write_history_row(h, i, result.history.steps[i]);
    }
    {
        std::ofstream e(out_dir / "epochs.csv");
        if (!e) throw IoError("cannot write " + (out_dir / "epochs.csv").string());
        std::string header = history_csv_header(cfg.variant);
        header.replace(0, 4, "epoch");
        for (int l : adapted_layers(cfg.variant)) header += ",epoch_mmd_layer" + std::to_string(l);
        for (int l : adapted_layers(cfg.variant)) header += ",epoch_coral_layer" + std::to_string(l);
        e << header << "\n";
        char buf[40];
        for (const auto& rec : result.history.epochs) {
            e << rec.epoch << breakdown_fields(rec.mean);
            for (double v : rec.discrepancy.mmd) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                e << buf;
            }
            for (double v : rec.discrepancy.coral) {
                std::snprintf(buf, sizeof buf, ",%.17g", v);
                e << buf;
            }
            e << "\n";
        }
    }

    const auto& last = result.history.epochs.back();
    out << "variant " << variant_name(cfg.variant) << ": " << cfg.epochs << " epochs, final l_class "
        << last.mean.l_class << ", total " << last.mean.total << "\n";
    ordered_json fp = ordered_json::object();
    for (const auto& p : inputs) fp[p.filename().string()] = fingerprint_files({p});
    if (!target.indices(Split::test).empty()) {
        const auto cm = evaluate(result.net, target, Split::test);
        out << "target test: tp=" << cm.tp << " fn=" << cm.fn << " fp=" << cm.fp << " tn=" << cm.tn
            << " g_mean=" << format_gmean(g_mean(cm)) << "\n";
        manifest.j["target_test_g_mean"] = g_mean(cm);
    }
    manifest.j["config"] = config_json(c);
    manifest.j["seed"] = cfg.seed;
    manifest.j["network"] = {{"input_dim", net_cfg.input_dim}, {"fc1_width", net_cfg.fc1_width},
                             {"fc2_width", net_cfg.fc2_width}, {"dropout", net_cfg.dropout_rate}};
    manifest.j["dataset_fingerprints"] = fp;
    manifest.j["artifacts"] = {"checkpoint.txt", "history.csv", "epochs.csv"};
    manifest.write(out_dir / "manifest.json");
    return kExitOk;
}

// --------------------------------------------------------------------------- evaluate

int cmd_evaluate(const std::string& checkpoint, const std::string& dataset,
                 const std::string& split_name, const std::string& out_path, std::ostream& out) {
    const MdaNetwork net = load_checkpoint(checkpoint);
    const auto meta = load_checkpoint_metadata(checkpoint);
    const DomainDataset ds = read_dataset(dataset);
    if (ds.features.cols() != net.config.input_dim)
        throw ShapeError("checkpoint expects input_dim " + std::to_string(net.config.input_dim) +
                         " but dataset " + dataset + " has " + std::to_string(ds.features.cols()) +
                         " features");
    ConfusionMatrix cm;
    if (split_name == "all") {
        cm = confusion(predict(net, ds.features).predicted_class, ds.labels);
    } else if (split_name == "train" || split_name == "test") {
        cm = evaluate(net, ds, split_name == "train" ? Split::train : Split::test);
    } else {
        throw UsageError("--split must be train, test or all");
    }
    const double g = g_mean(cm);
    out << "tp=" << cm.tp << " fn=" << cm.fn << " fp=" << cm.fp << " tn=" << cm.tn
        << " g_mean=" << format_gmean(g) << "\n";
    if (!out_path.empty()) {
        ExperimentReport rep;
        ExperimentRow row;
        row.source = meta.contains("source") ? meta.at("source") : "-";
        row.target = ds.model_id;
        row.variant = meta.contains("variant") ? parse_variant(meta.at("variant")) : MethodVariant::source_only;
        row.seed = meta.contains("seed") ? std::stoull(meta.at("seed")) : 0;
        row.g_mean = g;
        row.cm = cm;
        rep.rows.push_back(row);
        std::ofstream f(out_path);
        if (!f) throw IoError("cannot write " + out_path);
        f << render_csv(rep);
    }
    return kExitOk;
}

// --------------------------------------------------------------------------- benchmark

ExperimentSpec experiment_from(const Config& c) {
    ExperimentSpec spec;
    spec.sources = c.get_list("sources");
    spec.targets = c.get_list("targets");
    const auto names = c.get_list("variants");
    if (names.size() == 1 && names[0] == "all")
        spec.variants.assign(kAllVariants.begin(), kAllVariants.end());
    else
        for (const auto& n : names) spec.variants.push_back(parse_variant(n));
    for (auto s : c.has("seeds") ? c.get_int_list("seeds") : std::vector<std::int64_t>{1, 2, 3, 4, 5})
        spec.seeds.push_back(static_cast<std::uint64_t>(s));
    spec.train = train_config_from(c);
    spec.threads = static_cast<std::size_t>(std::max<std::int64_t>(1, c.get_int("threads", 1)));
    spec.record_wall_time = c.get_bool("record_wall_time", false);
    if (spec.sources.empty() || spec.targets.empty() || spec.variants.empty())
        throw UsageError("benchmark config needs sources, targets and variants");
    return spec;
}

int cmd_benchmark(const Config& c, const std::string& out_flag, std::ostream& out, std::ostream& err) {
    Manifest manifest("benchmark");
    ExperimentSpec spec = experiment_from(c);
    const fs::path out_dir = !out_flag.empty() ? fs::path(out_flag) : fs::path(c.get_string("out_dir", "benchmark_out"));

    DatasetMap datasets;
    ordered_json fp = ordered_json::object();
    const std::string source_kind = c.get_string("dataset_source", "ingested");
    if (source_kind == "synthetic") {
        ShiftBenchmarkSpec s;
        s.source_rows = static_cast<std::size_t>(c.get_int("synthetic_source_rows", 5000));
        s.target_rows = static_cast<std::size_t>(c.get_int("synthetic_target_rows", 500));
        s.nuisance_shift = c.get_real("synthetic_nuisance_shift", s.nuisance_shift);
        s.nuisance_scale = c.get_real("synthetic_nuisance_scale", s.nuisance_scale);
        s.informative_shift = c.get_real("synthetic_informative_shift", s.informative_shift);
        s.separation = c.get_real("synthetic_separation", s.separation);
        DomainPair pair = make_shift_benchmark(s, static_cast<std::uint64_t>(c.get_int("synthetic_seed", 0)));
        datasets.emplace(pair.source.model_id, std::move(pair.source));
        datasets.emplace(pair.target.model_id, std::move(pair.target));
        fp["synthetic"] = "seed " + std::to_string(c.get_int("synthetic_seed", 0));
    } else if (source_kind == "ingested") {
        const fs::path dir = c.get_string("data_dir", "datasets");
        std::set<std::string> ids(spec.sources.begin(), spec.sources.end());
        ids.insert(spec.targets.begin(), spec.targets.end());
        for (const auto& id : ids) {
            const fs::path p = dir / (id + ".csv");
            if (!fs::exists(p)) throw DataError("no dataset for model " + id + " (expected " + p.string() + ")");
            datasets.emplace(id, read_dataset(p));
            fp[id] = fingerprint_files({p});
        }
    } else {
        throw UsageError("dataset_source must be 'ingested' or 'synthetic'");
    }
    const auto& any = datasets.begin()->second;
    spec.network = network_config_from(c, any.features.cols());

    ExperimentReport report = run_matrix(spec, datasets);
    report.report_id = c.get_string("report_id", "report");

    ordered_json artifacts = ordered_json::array();
    if (!report.rows.empty())
        for (const auto& p : emit_report(report, out_dir, {}, "manifest.json"))
            artifacts.push_back(p.filename().string());
    else
        ensure_dir(out_dir);
    out << "benchmark: " << report.rows.size() << " cell(s) completed, " << report.errors.size()
        << " failed; reports in " << out_dir.string() << "\n";

    if (!report.errors.empty()) {
        std::ofstream ef(out_dir / "errors.txt");
        for (const auto& e : report.errors) {
            std::ostringstream line;
            line << e.source << " -> " << e.target << " " << variant_name(e.variant) << " seed "
                 << e.seed << ": " << e.message;
            ef << line.str() << "\n";
            err << "cell failed: " << line.str() << "\n";
        }
        artifacts.push_back("errors.txt");
    }
    manifest.j["config"] = config_json(c);
    manifest.j["seeds"] = spec.seeds;
    manifest.j["dataset_fingerprints"] = fp;
    manifest.j["artifacts"] = artifacts;
    manifest.j["failed_cells"] = report.errors.size();
    manifest.write(out_dir / "manifest.json");
    return report.errors.empty() ? kExitOk : kExitInternal;
}

// --------------------------------------------------------------------------- fixture

int cmd_fixture(const std::string& out_dir, std::size_t days, std::uint64_t seed, std::ostream& out) {
    FixtureSpec spec = default_fixture_spec();
    spec.days = days;
    const auto files = write_backblaze_fixture(out_dir, spec, seed);
    out << "wrote " << files.size() << " daily snapshot file(s) for " << spec.models.size()
        << " models to " << out_dir << "\n";
    return kExitOk;
}

int exit_code_for(const std::exception& e) {
    if (dynamic_cast<const ShapeError*>(&e)) return kExitShape;
    if (dynamic_cast<const UsageError*>(&e) || dynamic_cast<const IoError*>(&e) ||
        dynamic_cast<const SchemaError*>(&e) || dynamic_cast<const DataError*>(&e) ||
        dynamic_cast<const InsufficientSamplesError*>(&e))
        return kExitUsage;
    return kExitInternal;
}

} // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    CLI::App app{"Domain-adaptive disk failure prediction", kToolName};
    app.require_subcommand(1);
    app.set_version_flag("--version", kToolVersion);

    // ingest
    auto* ingest_cmd = app.add_subcommand("ingest", "build per-model datasets from Backblaze CSVs");
    std::string ingest_config;
    ingest_cmd->add_option("--config", ingest_config, "config file");
    ingest_cmd->add_option("--data-dir", "directory of daily snapshot CSVs");
    ingest_cmd->add_option("--models", "comma-separated model ids")->delimiter(',')->expected(1, 64);
    ingest_cmd->add_option("--out", "output directory");
    ingest_cmd->add_option("--lookback-days", "days before failure labelled positive");
    ingest_cmd->add_option("--ratio", "negatives per positive");
    ingest_cmd->add_option("--seed", "run seed");
    ingest_cmd->add_option("--train-fraction", "stratified train share");
    ingest_cmd->add_option("--stats-mode", "shared | per-domain");
    ingest_cmd->add_option("--stats-model", "model defining shared normalization");

    // train
    auto* train_cmd = app.add_subcommand("train", "train one method variant");
    std::string train_config;
    train_cmd->add_option("--config", train_config, "config file");
    for (const KeySpec& k : train_schema()) {
        std::string flag = "--" + k.name;
        std::replace(flag.begin(), flag.end(), '_', '-');
        train_cmd->add_option(flag, k.description);
    }

    // evaluate
    auto* eval_cmd = app.add_subcommand("evaluate", "G-mean of a checkpoint on a dataset");
    std::string ckpt, dataset, split_name = "test", eval_out;
    eval_cmd->add_option("--checkpoint", ckpt, "checkpoint file")->required();
    eval_cmd->add_option("--dataset", dataset, "dataset file")->required();
    eval_cmd->add_option("--split", split_name, "train | test | all (default test)");
    eval_cmd->add_option("--out", eval_out, "write the report row as CSV");

    // benchmark
    auto* bench_cmd = app.add_subcommand("benchmark", "run the source x target x variant matrix");
    std::string bench_config, bench_out;
    std::vector<std::string> overrides;
    bool print_schema = false;
    bench_cmd->add_option("--config", bench_config, "benchmark config file");
    bench_cmd->add_option("--out-dir", bench_out, "output directory");
    bench_cmd->add_option("--set", overrides, "override a config key (key=value)");
    bench_cmd->add_flag("--print-schema", print_schema, "print the config schema and exit");

    // fixture
    auto* fixture_cmd = app.add_subcommand("fixture", "write a synthetic Backblaze-format fixture");
    std::string fixture_out = "fixture_data";
    std::size_t fixture_days = 30;
    std::uint64_t fixture_seed = 7;
    fixture_cmd->add_option("--out", fixture_out, "output directory");
    fixture_cmd->add_option("--days", fixture_days, "number of daily files");
    fixture_cmd->add_option("--seed", fixture_seed, "fixture seed");

    std::vector<std::string> argv_store = {kToolName};
    argv_store.insert(argv_store.end(), args.begin(), args.end());
    std::vector<char*> argv;
    for (auto& a : argv_store) argv.push_back(a.data());

    try {
        app.parse(static_cast<int>(argv.size()), argv.data());
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e, out, err);
        return code == 0 ? kExitOk : kExitUsage;
    }

    try {
        if (ingest_cmd->parsed())
            return cmd_ingest(resolve_config(*ingest_cmd, ingest_config, ingest_schema(), {"config"}),
                              out, err);
        if (train_cmd->parsed())
            return cmd_train(resolve_config(*train_cmd, train_config, train_schema(), {"config"}), out,
                             err);
        if (eval_cmd->parsed()) return cmd_evaluate(ckpt, dataset, split_name, eval_out, out);
        if (bench_cmd->parsed()) {
            if (print_schema) {
                out << render_schema(benchmark_schema());
                return kExitOk;
            }
            if (bench_config.empty()) throw UsageError("benchmark: --config is required");
            Config c = Config::load(bench_config);
            for (const auto& o : overrides) {
                const auto eq = o.find('=');
                if (eq == std::string::npos) throw UsageError("--set expects key=value, got '" + o + "'");
                c.set(o.substr(0, eq), o.substr(eq + 1));
            }
            c.validate(benchmark_schema());
            return cmd_benchmark(c, bench_out, out, err);
        }
        if (fixture_cmd->parsed()) return cmd_fixture(fixture_out, fixture_days, fixture_seed, out);
    } catch (const std::exception& e) {
        err << "error: " << e.what() << "\n";
        return exit_code_for(e);
    }
    return kExitInternal;
}

} // namespace mda

// Acceptance gate: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include "mda/cli.hpp"
#include "mda/data.hpp"
#include "mda/eval.hpp"
#include "mda/metrics.hpp"
#include "mda/synthetic.hpp"
#include "mda/trainer.hpp"
#include "gradcheck.hpp"
#include "test_support.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <iostream>
#include <map>
#include <sstream>
#include <string>

using namespace mda;
using mda::testing::random_matrix;
using mda::testing::read_file;
using mda::testing::TempDir;
namespace fs = std::filesystem;

namespace {

struct Outcome {
    enum Kind { pass, fail, skip } kind = fail;
    std::string detail;
};

Outcome verdict(bool ok, std::string detail) { return {ok ? Outcome::pass : Outcome::fail, std::move(detail)}; }

std::string fmt(const char* f, double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, f, v);
    return buf;
}

// ---------------------------------------------------------------------------
// 1. end-to-end gradients for every variant
// ---------------------------------------------------------------------------
Outcome gradient_fidelity() {
    double worst = 0.0;
    std::string worst_variant;
    std::size_t checked = 0;
    for (std::uint64_t seed : {101, 202, 303}) {
        for (MethodVariant v : kAllVariants) {
            TrainConfig cfg;
            cfg.variant = v;
            const auto r = mda::testing::check_objective_gradient(cfg, seed, 8, 1e-5);
            checked += r.parameters;
            if (r.max_rel_error > worst) {
                worst = r.max_rel_error;
                worst_variant = std::string(variant_name(v));
            }
        }
    }
    return verdict(worst < 1e-4, "max rel error " + fmt("%.2e", worst) + " (" + worst_variant + ") over " +
                                     std::to_string(checked) + " parameter checks, tol 1e-4");
}

// ---------------------------------------------------------------------------
// 2. metric identities
// ---------------------------------------------------------------------------
Outcome metric_identities() {
    RngStream rng(2);
    double self = 0.0, asym = 0.0, shift = 0.0;
    for (int t = 0; t < 50; ++t) {
        const std::size_t d = 1 + rng.below(6);
        const Matrix x = random_matrix(4 + rng.below(20), d, rng, -2, 2);
        const Matrix y = random_matrix(4 + rng.below(20), d, rng, -1, 3);
        const KernelSpec gauss{};
        const KernelSpec linear{KernelKind::linear, std::nullopt};
        for (const KernelSpec& k : {gauss, linear}) {
            self = std::max(self, mmd_loss(x, x, k).loss);
            asym = std::max(asym, std::abs(mmd_loss(x, y, k).loss - mmd_loss(y, x, k).loss));
        }
        self = std::max(self, coral_loss(x, x).loss);
        asym = std::max(asym, std::abs(coral_loss(x, y).loss - coral_loss(y, x).loss));
        Matrix xs = x, ys = y;
        for (std::size_t j = 0; j < d; ++j) {
            const double a = rng.uniform(-10, 10), b = rng.uniform(-10, 10);
            for (std::size_t i = 0; i < xs.rows(); ++i) xs(i, j) += a;
            for (std::size_t i = 0; i < ys.rows(); ++i) ys(i, j) += b;
        }
        shift = std::max(shift, std::abs(coral_loss(xs, ys).loss - coral_loss(x, y).loss));
    }
    const double toy_mmd = mmd_loss(Matrix{{0}, {2}}, Matrix{{1}, {3}}, {KernelKind::linear, std::nullopt}).loss;
    const double toy_coral = coral_loss(Matrix{{0}, {2}}, Matrix{{0}, {4}}).loss;
    const bool ok = self <= 1e-10 && asym <= 1e-12 && shift <= 1e-10 && toy_mmd == 1.0 &&
                    std::abs(toy_coral - 9.0) <= 1e-12;
    return verdict(ok, "self " + fmt("%.1e", self) + ", asym " + fmt("%.1e", asym) + ", shift " +
                           fmt("%.1e", shift) + ", linear toy " + fmt("%.17g", toy_mmd) + ", coral toy " +
                           fmt("%.17g", toy_coral));
}

// ---------------------------------------------------------------------------
// 3. dynamic weight scheme
// ---------------------------------------------------------------------------
Outcome weight_scheme() {
    RngStream rng(3);
    double sum_err = 0.0, scale_err = 0.0, identity_err = 0.0;
    for (int t = 0; t < 1000; ++t) {
        LossTerms terms;
        terms.l_class = rng.uniform(1e-4, 3.0);
        for (int i = 0; i < 2; ++i) terms.l_mmd.push_back(rng.uniform(0.0, 1.0));
        for (int i = 0; i < 2; ++i) terms.l_coral.push_back(rng.uniform(0.0, 1e-3));
        const LossBreakdown b = total_loss(MethodVariant::double_coral_mmd, terms);
        double s = b.weights.n, num = terms.l_class * terms.l_class, den = terms.l_class;
        for (int i = 0; i < 2; ++i) {
            s += b.weights.x[i] + b.weights.y[i];
            num += terms.l_mmd[i] * terms.l_mmd[i] + terms.l_coral[i] * terms.l_coral[i];
            den += terms.l_mmd[i] + terms.l_coral[i];
        }
        sum_err = std::max(sum_err, std::abs(s - 1.0));
        identity_err = std::max(identity_err, std::abs(b.total - num / den));
        const double c = std::exp(rng.uniform(-5, 5));
        LossTerms scaled = terms;
        scaled.l_class *= c;
        for (double& v : scaled.l_mmd) v *= c;
        for (double& v : scaled.l_coral) v *= c;
        const LossWeights w = dynamic_weights(scaled.l_class, scaled.l_mmd, scaled.l_coral);
        scale_err = std::max(scale_err, std::abs(w.n - b.weights.n));
        for (int i = 0; i < 2; ++i)
            scale_err = std::max({scale_err, std::abs(w.x[i] - b.weights.x[i]), std::abs(w.y[i] - b.weights.y[i])});
    }
    return verdict(sum_err <= 1e-12 && scale_err <= 1e-12 && identity_err <= 1e-12,
                   "weight sum err " + fmt("%.1e", sum_err) + ", scale err " + fmt("%.1e", scale_err) +
                       ", sum-of-squares identity err " + fmt("%.1e", identity_err) + " on 1000 tuples");
}

// ---------------------------------------------------------------------------
// 4. pipeline exactness
// ---------------------------------------------------------------------------
Outcome pipeline_exactness() {
    std::vector<std::string> problems;
    const NormalizationStats stats{"M", {2.0, -5.0}, {6.0, 5.0}};
    const Matrix n = normalize(Matrix{{2.0, -5.0}, {6.0, 5.0}, {4.0, 0.0}}, stats);
    if (!(n == Matrix{{-1, -1}, {1, 1}, {0, 0}})) problems.push_back("normalization endpoints");

    TempDir dir("accept_pipeline");
    std::ostringstream csv;
    const auto& header = backblaze_header();
    for (std::size_t i = 0; i < header.size(); ++i) csv << (i ? "," : "") << header[i];
    csv << "\n";
    // 10 failed disks on their failure day and 150 healthy disk-days.
    auto row = [&](const std::string& serial, int failure, double base) {
        for (std::size_t i = 0; i < header.size(); ++i) {
            if (i) csv << ',';
            const std::string& c = header[i];
            if (c == "date") csv << "2021-06-01";
            else if (c == "serial_number") csv << serial;
            else if (c == "model") csv << "ST4000DM000";
            else if (c == "capacity_bytes") csv << "4000787030016";
            else if (c == "failure") csv << failure;
            else {
                for (std::size_t k = 0; k < kFeatureCount; ++k)
                    if (c == kFeatureColumns[k]) csv << base + static_cast<double>(k);
            }
        }
        csv << "\n";
    };
    for (int i = 0; i < 10; ++i) row("F" + std::to_string(i), 1, 1000.0 * i);
    for (int i = 0; i < 150; ++i) row("H" + std::to_string(i), 0, 7.0 * i);
    mda::testing::write_file(dir / "2021-06-01.csv", csv.str());

    const IngestResult ing = ingest({dir / "2021-06-01.csv"}, {"ST4000DM000"});
    if (ing.records.size() != 160) problems.push_back("ingest count");
    for (const auto& r : ing.records)
        for (std::size_t k = 0; k < kFeatureCount; ++k)
            if (r.values[k] != r.values[0] + static_cast<double>(k)) problems.push_back("column order");
    RngStream rng(4);
    DomainDataset ds = build_domain(ing.records, "ST4000DM000", {}, rng);
    if (ds.positives() != 10 || ds.rows() != 110) problems.push_back("1:10 construction");
    RngStream srng(5);
    ds = split(ds, 0.7, srng);
    std::size_t tr_pos = 0, tr_neg = 0, te_pos = 0, te_neg = 0;
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        const bool train = ds.split[i] == Split::train;
        (ds.labels[i] ? (train ? tr_pos : te_pos) : (train ? tr_neg : te_neg))++;
    }
    if (tr_pos != 7 || tr_neg != 70 || te_pos != 3 || te_neg != 30) problems.push_back("stratified split");

    std::string joined;
    for (const auto& p : problems) joined += (joined.empty() ? "" : "; ") + p;
    return verdict(problems.empty(), problems.empty() ? "normalize -1/+1/0, 11 columns in order, 10+100 rows, "
                                                        "train 7/70 test 3/30"
                                                      : joined);
}

// ---------------------------------------------------------------------------
// 5. G-mean oracle
// ---------------------------------------------------------------------------
Outcome gmean_oracle() {
    RngStream rng(5);
    double worst = 0.0;
    for (int t = 0; t < 10000; ++t) {
        const ConfusionMatrix cm{rng.below(40), rng.below(40), rng.below(400), rng.below(400)};
        const double tp = static_cast<double>(cm.tp), fn = static_cast<double>(cm.fn);
        const double fp = static_cast<double>(cm.fp), tn = static_cast<double>(cm.tn);
        const double sens = tp + fn > 0 ? tp / (tp + fn) : 0.0;
        const double spec = tn + fp > 0 ? tn / (tn + fp) : 0.0;
        worst = std::max(worst, std::abs(g_mean(cm) - std::sqrt(sens * spec)));
    }
    const double all_healthy = g_mean(ConfusionMatrix{0, 5, 0, 50});
    const double all_failing = g_mean(ConfusionMatrix{5, 0, 50, 0});
    const double half = g_mean(ConfusionMatrix{5, 0, 25, 25});
    const bool ok = worst <= 1e-12 && all_healthy == 0.0 && all_failing == 0.0 &&
                    format_gmean(all_healthy) == "0.0000" && format_gmean(half) == "0.7071";
    return verdict(ok, "max oracle diff " + fmt("%.1e", worst) + " on 10^4 matrices, degenerate " +
                           format_gmean(all_healthy) + ", sens 1 / spec 0.5 -> " + format_gmean(half));
}

// ---------------------------------------------------------------------------
// 6. directional reproduction on the synthetic shift benchmark
// ---------------------------------------------------------------------------
struct DirectionalSetup {
    ShiftBenchmarkSpec data;
    NetworkConfig net;
    TrainConfig train;
    std::vector<std::uint64_t> seeds;
};

DirectionalSetup directional_setup() {
    DirectionalSetup s;
    s.data.source_rows = 5000;
    s.data.target_rows = 500;
    s.data.separation = 3.0;
    s.net.fc1_width = 64;
    s.net.fc2_width = 32;
    s.train.epochs = 25;
    s.train.discrepancy_max_rows = 256;
    for (std::uint64_t k = 1; k <= 10; ++k) s.seeds.push_back(k);
    return s;
}

Outcome directional() {
    const DirectionalSetup s = directional_setup();
    const std::vector<MethodVariant> variants = {
        MethodVariant::source_only,      MethodVariant::single_coral, MethodVariant::double_coral,
        MethodVariant::single_mmd,       MethodVariant::double_mmd,   MethodVariant::single_coral_mmd,
        MethodVariant::double_coral_mmd,
    };
    std::map<MethodVariant, double> mean;
    std::map<MethodVariant, int> decreased;
    for (std::uint64_t seed : s.seeds) {
        const DomainPair pair = make_shift_benchmark(s.data, seed);
        for (MethodVariant v : variants) {
            TrainConfig cfg = s.train;
            cfg.variant = v;
            cfg.seed = seed;
            const TrainResult r = train(pair.source, pair.target, s.net, cfg);
            mean[v] += g_mean(evaluate(r.net, pair.target, Split::test)) / static_cast<double>(s.seeds.size());
            if (is_adaptive(v) &&
                r.history.epochs.back().discrepancy.mmd.at(0) < r.history.epochs.front().discrepancy.mmd.at(0))
                ++decreased[v];
        }
    }
    using V = MethodVariant;
    const bool gain = mean[V::double_coral_mmd] >= mean[V::source_only] + 0.03;
    const bool layers = mean[V::double_coral] >= mean[V::single_coral] - 0.01 &&
                        mean[V::double_mmd] >= mean[V::single_mmd] - 0.01 &&
                        mean[V::double_coral_mmd] >= mean[V::single_coral_mmd] - 0.01;
    int min_decreased = 10;
    for (MethodVariant v : variants)
        if (is_adaptive(v)) min_decreased = std::min(min_decreased, decreased[v]);
    std::string detail;
    for (MethodVariant v : variants) detail += std::string(variant_name(v)) + "=" + format_gmean(mean[v]) + " ";
    detail += "| layer-1 MMD fell in >= " + std::to_string(min_decreased) + "/10 seeds";
    return verdict(gain && layers && min_decreased >= 8, detail);
}

// ---------------------------------------------------------------------------
// 7. benchmark determinism
// ---------------------------------------------------------------------------
Outcome determinism() {
    TempDir dir("accept_determinism");
    const DirectionalSetup s = directional_setup();
    std::ostringstream conf;
    conf << "report_id = determinism\ndataset_source = synthetic\nsynthetic_seed = 1\n"
         << "synthetic_source_rows = " << s.data.source_rows << "\nsynthetic_target_rows = " << s.data.target_rows
         << "\nsynthetic_separation = " << s.data.separation
         << "\nsources = synthetic_source\ntargets = synthetic_target\n"
         << "variants = source_only, single_mmd, double_coral_mmd\nseeds = 1, 2\nepochs = 2\n"
         << "fc1_width = " << s.net.fc1_width << "\nfc2_width = " << s.net.fc2_width << "\ndiscrepancy_rows = 256\n";
    mda::testing::write_file(dir / "bench.conf", conf.str());
    for (const char* out : {"a", "b"}) {
        std::ostringstream o, e;
        const int code = run_cli({"benchmark", "--config", (dir / "bench.conf").string(), "--out-dir",
                                  (dir / out).string()},
                                 o, e);
        if (code != 0) return verdict(false, "benchmark exited " + std::to_string(code) + ": " + e.str());
    }
    std::size_t compared = 0;
    for (const char* f : {"determinism.csv", "synthetic_target_determinism.md", "synthetic_target_determinism.svg"}) {
        if (!fs::exists(dir / "a" / f)) return verdict(false, std::string("missing ") + f);
        if (read_file(dir / "a" / f) != read_file(dir / "b" / f)) return verdict(false, std::string(f) + " differs");
        ++compared;
    }
    return verdict(true, std::to_string(compared) + " report files byte-identical across reruns");
}

// ---------------------------------------------------------------------------
// 8. real-data smoke (needs downloaded Backblaze 2021 snapshots)
// ---------------------------------------------------------------------------
Outcome real_data() {
    const char* env = std::getenv("MDA_BACKBLAZE_DIR");
    if (env == nullptr || !fs::is_directory(env))
        return {Outcome::skip, "set MDA_BACKBLAZE_DIR to a directory of Backblaze 2021 daily CSVs to run"};
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(env))
        if (e.path().extension() == ".csv") files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) return {Outcome::skip, std::string("no CSV files in ") + env};

    const std::string src_id = "ST4000DM000", tgt_id = "ST10000NM0086";
    const IngestResult ing = ingest(files, {src_id, tgt_id});
    DomainDataset src, tgt;
    {
        RngStream r1(derive_seed(1, 1)), r2(derive_seed(1, 2)), r3(derive_seed(1, 3)), r4(derive_seed(1, 4));
        src = split(build_domain(ing.records, src_id, {}, r1), 0.7, r2);
        tgt = split(build_domain(ing.records, tgt_id, {}, r3), 0.7, r4);
    }
    const NormalizationStats stats = compute_stats(src);
    src = normalized(src, stats);
    tgt = normalized(tgt, stats);
    TrainConfig cfg;
    cfg.variant = MethodVariant::double_coral_mmd;
    cfg.seed = 1;
    const TrainResult r = train(src, tgt, NetworkConfig{}, cfg);
    const ConfusionMatrix cm = evaluate(r.net, tgt, Split::test);
    const double g = g_mean(cm);

    ExperimentReport rep;
    rep.rows.push_back(ExperimentRow{src_id, tgt_id, cfg.variant, 1, g, cm, 0});
    const std::string md = render_markdown(rep, tgt_id);
    const bool layout = md.find("| Source domain | " + src_id + " |") != std::string::npos &&
                        md.find("| Double-layer Coral+MMD | " + format_gmean(g) + " |") != std::string::npos;
    return verdict(g > 0.0 && layout, src_id + " -> " + tgt_id + " G-mean " + format_gmean(g) + " (" +
                                          std::to_string(cm.total()) + " test rows), table layout " +
                                          (layout ? "ok" : "wrong"));
}

} // namespace

int main() {
    struct Criterion {
        int id;
        const char* name;
        double budget_s;
        std::function<Outcome()> run;
    };
    const std::vector<Criterion> criteria = {
        {1, "gradient fidelity", 10.0, gradient_fidelity},
        {2, "metric identities", 1.0, metric_identities},
        {3, "weight scheme", 1.0, weight_scheme},
        {4, "pipeline exactness", 1.0, pipeline_exactness},
        {5, "G-mean oracle", 1.0, gmean_oracle},
        {6, "directional reproduction", 300.0, directional},
        {7, "determinism", 300.0, determinism},
        {8, "real-data smoke", 3600.0, real_data},
    };
    int failures = 0;
    for (const auto& c : criteria) {
        const auto t0 = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o = {Outcome::fail, std::string("exception: ") + e.what()};
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        if (o.kind == Outcome::pass && secs > c.budget_s) {
            o.kind = Outcome::fail;
            o.detail += " | over the " + fmt("%.0f", c.budget_s) + " s budget";
        }
        const char* tag = o.kind == Outcome::pass ? "PASS" : o.kind == Outcome::skip ? "SKIP" : "FAIL";
        if (o.kind == Outcome::fail) ++failures;
        std::cout << tag << " criterion " << c.id << " (" << c.name << ", " << fmt("%.2f", secs) << " s): "
                  << o.detail << std::endl;
    }
    return failures == 0 ? 0 : 1;
}

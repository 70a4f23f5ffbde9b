#include "mda/eval.hpp"

#include "mda/error.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <set>
#include <thread>
#include <tuple>

namespace mda {

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels) {
    if (predictions.size() != labels.size())
        throw ParameterError("confusion: " + std::to_string(predictions.size()) +
                             " predictions vs " + std::to_string(labels.size()) + " labels");
    ConfusionMatrix cm;
    for (std::size_t i = 0; i < labels.size(); ++i) {
        const int p = predictions[i], y = labels[i];
        if ((p != 0 && p != 1) || (y != 0 && y != 1))
            throw ParameterError("confusion: classes must be 0 or 1");
        if (y == 1) (p == 1 ? cm.tp : cm.fn)++;
        else (p == 1 ? cm.fp : cm.tn)++;
    }
    return cm;
}

double g_mean(const ConfusionMatrix& cm) {
    const double sensitivity =
        cm.tp + cm.fn == 0 ? 0.0 : static_cast<double>(cm.tp) / static_cast<double>(cm.tp + cm.fn);
    const double specificity =
        cm.tn + cm.fp == 0 ? 0.0 : static_cast<double>(cm.tn) / static_cast<double>(cm.tn + cm.fp);
    return std::sqrt(sensitivity * specificity);
}

ConfusionMatrix evaluate(const MdaNetwork& net, const DomainDataset& dataset, Split split) {
    const Matrix x = dataset.features_of(split);
    const auto y = dataset.labels_of(split);
    if (x.rows() == 0) return {};
    const auto pred = predict(net, x);
    return confusion(pred.predicted_class, y);
}

void ExperimentSpec::validate() const {
    if (sources.empty() || targets.empty() || variants.empty() || seeds.empty())
        throw ParameterError("experiment needs non-empty sources, targets, variants and seeds");
    for (const auto& s : sources)
        for (const auto& t : targets)
            if (s == t)
                throw ParameterError("model " + s + " is listed as both source and target");
    if (threads == 0) throw ParameterError("threads must be >= 1");
    network.validate();
}

ExperimentReport run_matrix(const ExperimentSpec& spec, const DatasetMap& datasets) {
    spec.validate();
    for (const auto* list : {&spec.sources, &spec.targets})
        for (const auto& id : *list)
            if (!datasets.contains(id)) throw DataError("no dataset for model " + id);

    struct Cell {
        std::string source, target;
        MethodVariant variant;
        std::uint64_t seed;
    };
    std::vector<Cell> cells;
    const std::set<std::string> sources(spec.sources.begin(), spec.sources.end());
    const std::set<std::string> targets(spec.targets.begin(), spec.targets.end());
    std::vector<MethodVariant> variants = spec.variants;
    std::sort(variants.begin(), variants.end());
    variants.erase(std::unique(variants.begin(), variants.end()), variants.end());
    std::vector<std::uint64_t> seeds = spec.seeds;
    std::sort(seeds.begin(), seeds.end());
    seeds.erase(std::unique(seeds.begin(), seeds.end()), seeds.end());
    for (const auto& t : targets)
        for (const auto& s : sources)
            for (auto v : variants)
                for (auto seed : seeds) cells.push_back({s, t, v, seed});

    std::vector<ExperimentRow> rows(cells.size());
    std::vector<std::string> failures(cells.size());
    std::vector<char> ok(cells.size(), 0);
    std::atomic<std::size_t> next{0};

    auto worker = [&] {
        for (std::size_t i = next++; i < cells.size(); i = next++) {
            const Cell& c = cells[i];
            const auto start = std::chrono::steady_clock::now();
            try {
                TrainConfig cfg = spec.train;
                cfg.variant = c.variant;
                cfg.seed = c.seed;
                const DomainDataset& src = datasets.at(c.source);
                const DomainDataset& tgt = datasets.at(c.target);
                const TrainResult tr = train(src, tgt, spec.network, cfg);
                const ConfusionMatrix cm = evaluate(tr.net, tgt, Split::test);
                const auto ms = std::chrono::duration_cast<std::chrono::milliseconds>(
                                    std::chrono::steady_clock::now() - start)
                                    .count();
                rows[i] = {c.source, c.target, c.variant, c.seed, g_mean(cm), cm,
                           spec.record_wall_time ? static_cast<std::int64_t>(ms) : 0};
                ok[i] = 1;
            } catch (const std::exception& e) {
                failures[i] = e.what();
            }
        }
    };
    const std::size_t n_threads = std::min(spec.threads, std::max<std::size_t>(cells.size(), 1));
    if (n_threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    }

    ExperimentReport report;
    for (std::size_t i = 0; i < cells.size(); ++i) {
        if (ok[i]) report.rows.push_back(std::move(rows[i]));
        else
            report.errors.push_back({cells[i].source, cells[i].target, cells[i].variant,
                                     cells[i].seed, failures[i]});
    }
    return report;
}

} // namespace mda

#include "mda/trainer.hpp"

#include "mda/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mda {

namespace {

enum StreamId : std::uint64_t { kInitStream = 0, kSamplerStream = 1, kDropoutStream = 2, kMonitorStream = 3 };

// Cycles through shuffled permutations of [0, n).
class BatchSampler {
public:
    BatchSampler(std::size_t n, std::uint64_t seed) : rng_(seed), order_(n) {
        for (std::size_t i = 0; i < n; ++i) order_[i] = i;
        rng_.shuffle(order_);
    }

    std::vector<std::size_t> next(std::size_t count) {
        std::vector<std::size_t> out;
        out.reserve(count);
        while (out.size() < count) {
            if (cursor_ == order_.size()) {
                rng_.shuffle(order_);
                cursor_ = 0;
            }
            out.push_back(order_[cursor_++]);
        }
        return out;
    }

private:
    RngStream rng_;
    std::vector<std::size_t> order_;
    std::size_t cursor_ = 0;
};

class Optimizer {
public:
    Optimizer(const TrainConfig& cfg, const MdaNetwork& net) : cfg_(cfg) {
        if (cfg.optimizer == OptimizerKind::adam)
            for (auto v : parameter_views(net)) {
                m_.emplace_back(v.size(), 0.0);
                v_.emplace_back(v.size(), 0.0);
            }
    }

    void step(MdaNetwork& net, NetworkGrads& grads) {
        auto params = parameter_views(net);
        auto g = parameter_views(grads);
        if (cfg_.optimizer == OptimizerKind::sgd) {
            for (std::size_t k = 0; k < params.size(); ++k)
                for (std::size_t i = 0; i < params[k].size(); ++i)
                    params[k][i] -= cfg_.learning_rate * g[k][i];
            return;
        }
        ++t_;
        const double bc1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
        const double bc2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
        for (std::size_t k = 0; k < params.size(); ++k) {
            auto& m = m_[k];
            auto& v = v_[k];
            for (std::size_t i = 0; i < params[k].size(); ++i) {
                const double gi = g[k][i];
                m[i] = cfg_.beta1 * m[i] + (1.0 - cfg_.beta1) * gi;
                v[i] = cfg_.beta2 * v[i] + (1.0 - cfg_.beta2) * gi * gi;
                const double mhat = m[i] / bc1;
                const double vhat = v[i] / bc2;
                params[k][i] -= cfg_.learning_rate * mhat / (std::sqrt(vhat) + cfg_.epsilon);
            }
        }
    }

private:
    const TrainConfig& cfg_;
    std::vector<std::vector<double>> m_, v_;
    std::uint64_t t_ = 0;
};

void scale_into(Matrix& dst, const Matrix& src, double w) {
    if (dst.empty()) dst = Matrix(src.rows(), src.cols());
    add_inplace(dst, src, w);
}

LossBreakdown mean_of(const std::vector<LossBreakdown>& steps) {
    LossBreakdown m = steps.front();
    const double inv = 1.0 / static_cast<double>(steps.size());
    auto avg = [&](auto get) {
        double s = 0.0;
        for (const auto& b : steps) s += get(b);
        return s * inv;
    };
    m.l_class = avg([](const LossBreakdown& b) { return b.l_class; });
    m.total = avg([](const LossBreakdown& b) { return b.total; });
    m.weights.n = avg([](const LossBreakdown& b) { return b.weights.n; });
    for (std::size_t i = 0; i < m.l_mmd.size(); ++i) {
        m.l_mmd[i] = avg([i](const LossBreakdown& b) { return b.l_mmd[i]; });
        m.weights.x[i] = avg([i](const LossBreakdown& b) { return b.weights.x[i]; });
    }
    for (std::size_t i = 0; i < m.l_coral.size(); ++i) {
        m.l_coral[i] = avg([i](const LossBreakdown& b) { return b.l_coral[i]; });
        m.weights.y[i] = avg([i](const LossBreakdown& b) { return b.weights.y[i]; });
    }
    m.uniform_fallback = std::any_of(steps.begin(), steps.end(),
                                     [](const LossBreakdown& b) { return b.uniform_fallback; });
    return m;
}

} // namespace

std::uint64_t init_seed(std::uint64_t seed) { return derive_seed(seed, kInitStream); }

void TrainConfig::validate() const {
    if (batch_size < 2)
        throw ParameterError("batch_size must be >= 2, got " + std::to_string(batch_size));
    if (epochs == 0) throw ParameterError("epochs must be >= 1");
    if (!(learning_rate > 0.0) || !std::isfinite(learning_rate))
        throw ParameterError("learning_rate must be positive, got " + std::to_string(learning_rate));
    if (weighting == WeightingMode::gamma && adapted_layers(variant).size() > 1)
        throw ParameterError("gamma weighting is defined for single-layer variants only, not " +
                             std::string(variant_name(variant)));
    if (kernel.bandwidth && !(*kernel.bandwidth > 0.0))
        throw ParameterError("kernel bandwidth must be positive");
    if (discrepancy_max_rows < 2) throw ParameterError("discrepancy_max_rows must be >= 2");
}

ObjectiveResult compute_objective(const MdaNetwork& net, const ObjectiveInputs& in,
                                  const TrainConfig& cfg, Mode mode, RngStream& source_dropout,
                                  RngStream& target_dropout, const StepConstants* frozen) {
    if (in.source == nullptr) throw ParameterError("compute_objective: no labeled batch");
    const MethodVariant variant = cfg.variant;
    const auto layers = adapted_layers(variant);
    const bool adaptive = !layers.empty();
    if (adaptive && (in.target == nullptr || in.target->rows() == 0))
        throw DataError("variant " + std::string(variant_name(variant)) +
                        " needs target batches but the target set is empty");

    ObjectiveResult r;
    const ForwardTrace src = forward(net, *in.source, mode, source_dropout);
    const SoftmaxXent xent = softmax_cross_entropy(src.logits, in.source_labels);

    LossTerms terms;
    terms.l_class = xent.loss;
    std::vector<DiscrepancyResult> mmd, coral;
    ForwardTrace tgt;
    if (adaptive) {
        tgt = forward(net, *in.target, mode, target_dropout);
        for (std::size_t k = 0; k < layers.size(); ++k) {
            const Matrix& s = src.tap(layers[k]);
            const Matrix& t = tgt.tap(layers[k]);
            if (uses_mmd(variant)) {
                KernelSpec kernel = cfg.kernel;
                if (frozen && kernel.kind == KernelKind::gaussian)
                    kernel.bandwidth = frozen->bandwidths.at(k);
                mmd.push_back(mmd_loss(s, t, kernel));
                terms.l_mmd.push_back(mmd.back().loss);
                r.constants.bandwidths.push_back(mmd.back().bandwidth);
                ++r.metric_calls;
            }
            if (uses_coral(variant)) {
                coral.push_back(coral_loss(s, t));
                terms.l_coral.push_back(coral.back().loss);
                ++r.metric_calls;
            }
        }
    }

    // A non-finite term means the run diverged; the caller reports the step.
    bool finite = std::isfinite(terms.l_class);
    for (double v : terms.l_mmd) finite = finite && std::isfinite(v);
    for (double v : terms.l_coral) finite = finite && std::isfinite(v);
    if (!finite) {
        r.breakdown.l_class = terms.l_class;
        r.breakdown.l_mmd = terms.l_mmd;
        r.breakdown.l_coral = terms.l_coral;
        r.breakdown.total = std::numeric_limits<double>::quiet_NaN();
        return r;
    }

    if (frozen) {
        r.breakdown = total_loss(variant, terms, cfg.weighting, cfg.gamma);
        r.breakdown.weights = frozen->weights;
        r.breakdown.total = weighted_total(terms, frozen->weights);
    } else {
        r.breakdown = total_loss(variant, terms, cfg.weighting, cfg.gamma);
    }
    r.constants.weights = r.breakdown.weights;
    const LossWeights& w = r.breakdown.weights;

    Matrix grad_logits = xent.grad_logits;
    for (double& v : grad_logits.values()) v *= w.n;
    Matrix src_tap[2], tgt_tap[2];
    for (std::size_t k = 0; k < layers.size(); ++k) {
        const int slot = layers[k] - 1;
        if (uses_mmd(variant)) {
            scale_into(src_tap[slot], mmd[k].grad_src, w.x[k]);
            scale_into(tgt_tap[slot], mmd[k].grad_tgt, w.x[k]);
        }
        if (uses_coral(variant)) {
            scale_into(src_tap[slot], coral[k].grad_src, w.y[k]);
            scale_into(tgt_tap[slot], coral[k].grad_tgt, w.y[k]);
        }
    }
    r.grads = backward(net, src, grad_logits, src_tap[0], src_tap[1]);
    if (adaptive) {
        const Matrix no_logit_grad(tgt.logits.rows(), tgt.logits.cols());
        accumulate(r.grads, backward(net, tgt, no_logit_grad, tgt_tap[0], tgt_tap[1]));
    }
    return r;
}

DiscrepancyReport epoch_discrepancy(const MdaNetwork& net, const Matrix& source,
                                    const Matrix& target, MethodVariant variant,
                                    const KernelSpec& kernel) {
    DiscrepancyReport rep;
    rep.layers = adapted_layers(variant);
    if (rep.layers.empty()) return rep;
    const ForwardTrace s = forward_eval(net, source);
    const ForwardTrace t = forward_eval(net, target);
    for (int layer : rep.layers) {
        rep.mmd.push_back(mmd_loss(s.tap(layer), t.tap(layer), kernel).loss);
        rep.coral.push_back(coral_loss(s.tap(layer), t.tap(layer)).loss);
    }
    return rep;
}

TrainResult train_arrays(const Matrix& labeled, std::span<const int> labels,
                         const Matrix& unlabeled, MdaNetwork net, const TrainConfig& cfg) {
    cfg.validate();
    if (labeled.rows() == 0) throw DataError("no labeled training rows");
    if (labels.size() != labeled.rows())
        throw ShapeError("train: " + std::to_string(labels.size()) + " labels for " +
                         shape_string(labeled));
    const bool adaptive = is_adaptive(cfg.variant);
    if (adaptive && unlabeled.rows() == 0)
        throw DataError("variant " + std::string(variant_name(cfg.variant)) +
                        " needs target batches but the target set is empty");

    // Both domains draw from identically seeded streams: with identical
    // domains the batches and dropout masks coincide.
    const std::uint64_t sampler_seed = derive_seed(cfg.seed, kSamplerStream);
    const std::uint64_t dropout_seed = derive_seed(cfg.seed, kDropoutStream);
    BatchSampler src_sampler(labeled.rows(), sampler_seed);
    RngStream src_dropout(dropout_seed);
    BatchSampler tgt_sampler(adaptive ? unlabeled.rows() : 0, sampler_seed);
    RngStream tgt_dropout(dropout_seed);

    Matrix mon_src, mon_tgt;
    if (adaptive) {
        RngStream mon(derive_seed(cfg.seed, kMonitorStream));
        auto pick = [&](const Matrix& m) {
            std::vector<std::size_t> idx(m.rows());
            for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
            if (idx.size() > cfg.discrepancy_max_rows) {
                mon.shuffle(idx);
                idx.resize(cfg.discrepancy_max_rows);
                std::sort(idx.begin(), idx.end());
            }
            return gather_rows(m, idx);
        };
        mon_src = pick(labeled);
        mon_tgt = pick(unlabeled);
    }

    const std::size_t largest = std::max(labeled.rows(), adaptive ? unlabeled.rows() : 0);
    const std::size_t steps_per_epoch = (largest + cfg.batch_size - 1) / cfg.batch_size;

    TrainResult result{std::move(net), {}};
    Optimizer opt(cfg, result.net);
    std::vector<int> batch_labels(cfg.batch_size);
    std::size_t step = 0;
    for (std::size_t epoch = 1; epoch <= cfg.epochs; ++epoch) {
        std::vector<LossBreakdown> epoch_steps;
        epoch_steps.reserve(steps_per_epoch);
        for (std::size_t s = 0; s < steps_per_epoch; ++s, ++step) {
            const auto src_idx = src_sampler.next(cfg.batch_size);
            const Matrix src_x = gather_rows(labeled, src_idx);
            for (std::size_t i = 0; i < src_idx.size(); ++i) batch_labels[i] = labels[src_idx[i]];
            Matrix tgt_x;
            if (adaptive) tgt_x = gather_rows(unlabeled, tgt_sampler.next(cfg.batch_size));

            ObjectiveInputs in{&src_x, batch_labels, adaptive ? &tgt_x : nullptr};
            ObjectiveResult obj =
                compute_objective(result.net, in, cfg, Mode::train, src_dropout, tgt_dropout);
            result.history.metric_calls += obj.metric_calls;
            if (!std::isfinite(obj.breakdown.total))
                throw DivergenceError("non-finite loss at step " + std::to_string(step), step);
            opt.step(result.net, obj.grads);
            epoch_steps.push_back(obj.breakdown);
        }
        EpochRecord rec;
        rec.epoch = epoch;
        rec.mean = mean_of(epoch_steps);
        if (adaptive) {
            rec.discrepancy =
                epoch_discrepancy(result.net, mon_src, mon_tgt, cfg.variant, cfg.kernel);
            result.history.metric_calls += 2 * rec.discrepancy.layers.size();
        }
        result.history.epochs.push_back(std::move(rec));
        for (auto& b : epoch_steps) result.history.steps.push_back(std::move(b));
    }
    return result;
}

TrainResult train(const DomainDataset& source, const DomainDataset& target, MdaNetwork net,
                  const TrainConfig& cfg) {
    if (cfg.variant == MethodVariant::target_only) {
        const Matrix x = target.features_of(Split::train);
        const auto y = target.labels_of(Split::train);
        return train_arrays(x, y, Matrix(), std::move(net), cfg);
    }
    const Matrix x = source.features_of(Split::train);
    const auto y = source.labels_of(Split::train);
    if (cfg.variant == MethodVariant::source_only)
        return train_arrays(x, y, Matrix(), std::move(net), cfg);
    return train_arrays(x, y, target.features_of(Split::train), std::move(net), cfg);
}

TrainResult train(const DomainDataset& source, const DomainDataset& target,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg) {
    RngStream rng(init_seed(cfg.seed));
    return train(source, target, init_network(net_cfg, rng), cfg);
}

} // namespace mda

#pragma once

#include "mda/data.hpp"
#include "mda/loss_weighting.hpp"
#include "mda/metrics.hpp"
#include "mda/network.hpp"

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

namespace mda {

enum class OptimizerKind { sgd, adam };

struct TrainConfig {
    MethodVariant variant = MethodVariant::double_coral_mmd;
    std::size_t epochs = 100;
    std::size_t batch_size = 64;
    double learning_rate = 1e-3;
    OptimizerKind optimizer = OptimizerKind::adam;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double epsilon = 1e-8;
    std::uint64_t seed = 0;
    WeightingMode weighting = WeightingMode::dynamic;
    double gamma = kDefaultGamma;
    KernelSpec kernel{};
    // Rows per domain used for the per-epoch discrepancy metric.
    std::size_t discrepancy_max_rows = 2048;

    void validate() const;
};

// Weights and kernel bandwidths frozen for one step, so the objective is a
// fixed function of the parameters.
struct StepConstants {
    LossWeights weights;
    std::vector<double> bandwidths;  // per adapted layer; gaussian MMD only
};

struct ObjectiveResult {
    LossBreakdown breakdown;
    NetworkGrads grads;
    StepConstants constants;
    std::size_t metric_calls = 0;
};

struct ObjectiveInputs {
    const Matrix* source = nullptr;
    std::span<const int> source_labels;
    const Matrix* target = nullptr;  // unused by non-adaptive variants
};

// Forward both domains, combine the variant's losses and backpropagate.
// With `frozen`, weights and bandwidths come from it instead of the batch.
ObjectiveResult compute_objective(const MdaNetwork& net, const ObjectiveInputs& in,
                                  const TrainConfig& cfg, Mode mode, RngStream& source_dropout,
                                  RngStream& target_dropout, const StepConstants* frozen = nullptr);

struct DiscrepancyReport {
    std::vector<int> layers;
    std::vector<double> mmd;    // per entry of `layers`
    std::vector<double> coral;
};

// Eval-mode MMD and CORAL between taps; empty for non-adaptive variants.
DiscrepancyReport epoch_discrepancy(const MdaNetwork& net, const Matrix& source,
                                    const Matrix& target, MethodVariant variant,
                                    const KernelSpec& kernel);

struct EpochRecord {
    std::size_t epoch = 0;  // 1-based
    LossBreakdown mean;     // average over the epoch's steps
    DiscrepancyReport discrepancy;
};

struct TrainHistory {
    std::vector<EpochRecord> epochs;
    std::vector<LossBreakdown> steps;
    // Number of MMD/CORAL evaluations performed, objective and monitoring.
    std::size_t metric_calls = 0;
};

struct TrainResult {
    MdaNetwork net;
    TrainHistory history;
};

// Matrix-level loop. `labeled` supplies l_CLASS; `unlabeled` is the
// adaptation domain (ignored by non-adaptive variants).
TrainResult train_arrays(const Matrix& labeled, std::span<const int> labels,
                         const Matrix& unlabeled, MdaNetwork net, const TrainConfig& cfg);

// Uses the train splits. target_only trains on the target's labeled train
// rows; source_only never touches the target.
TrainResult train(const DomainDataset& source, const DomainDataset& target, MdaNetwork net,
                  const TrainConfig& cfg);

// Initialises the network from cfg.seed, then trains.
TrainResult train(const DomainDataset& source, const DomainDataset& target,
                  const NetworkConfig& net_cfg, const TrainConfig& cfg);

std::uint64_t init_seed(std::uint64_t seed);

} // namespace mda

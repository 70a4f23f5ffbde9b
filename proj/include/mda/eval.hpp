#pragma once

#include "mda/data.hpp"
#include "mda/loss_weighting.hpp"
#include "mda/network.hpp"
#include "mda/trainer.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

namespace mda {

// Class 1 (failure) is the positive class.
struct ConfusionMatrix {
    std::size_t tp = 0;
    std::size_t fn = 0;
    std::size_t fp = 0;
    std::size_t tn = 0;

    std::size_t total() const { return tp + fn + fp + tn; }
    friend bool operator==(const ConfusionMatrix&, const ConfusionMatrix&) = default;
};

ConfusionMatrix confusion(std::span<const int> predictions, std::span<const int> labels);

// sqrt(TP/(TP+FN) · TN/(TN+FP)); a factor with an empty denominator counts as 0.
double g_mean(const ConfusionMatrix& cm);

ConfusionMatrix evaluate(const MdaNetwork& net, const DomainDataset& dataset, Split split);

struct ExperimentSpec {
    std::vector<std::string> sources;
    std::vector<std::string> targets;
    std::vector<MethodVariant> variants;
    TrainConfig train;       // train.variant and train.seed are set per cell
    NetworkConfig network;
    std::vector<std::uint64_t> seeds;
    std::size_t threads = 1;
    bool record_wall_time = false;  // wall_ms is 0 unless set, keeping reports reproducible

    void validate() const;
};

struct ExperimentRow {
    std::string source;
    std::string target;
    MethodVariant variant = MethodVariant::source_only;
    std::uint64_t seed = 0;
    double g_mean = 0.0;
    ConfusionMatrix cm;
    std::int64_t wall_ms = 0;
};

struct CellError {
    std::string source;
    std::string target;
    MethodVariant variant = MethodVariant::source_only;
    std::uint64_t seed = 0;
    std::string message;
};

struct ExperimentReport {
    std::string report_id = "report";
    std::vector<ExperimentRow> rows;  // sorted by (target, source, variant, seed)
    std::vector<CellError> errors;
};

using DatasetMap = std::map<std::string, DomainDataset>;

// Trains and evaluates every (source, target, variant, seed) cell; G-mean is
// measured on the target's test split. Cells that throw are collected in
// `errors`. Missing datasets fail before any training.
ExperimentReport run_matrix(const ExperimentSpec& spec, const DatasetMap& datasets);

struct ReportFormats {
    bool csv = true;
    bool markdown = true;
    bool svg = true;
};

// CSV: {report_id}.csv. Markdown/SVG: {target}_{report_id}.md/.svg with one
// table column / bar group per source.
std::vector<std::filesystem::path> emit_report(const ExperimentReport& report,
                                               const std::filesystem::path& out_dir,
                                               const ReportFormats& formats = {},
                                               const std::string& manifest_ref = {});

inline constexpr const char* kReportCsvHeader = "source,target,variant,seed,g_mean,tp,fn,fp,tn,wall_ms";

std::string render_csv(const ExperimentReport& report);
std::string render_markdown(const ExperimentReport& report, const std::string& target,
                            const std::string& manifest_ref = {});
std::string render_svg(const ExperimentReport& report, const std::string& target,
                       const std::string& manifest_ref = {});
ExperimentReport parse_report_csv(const std::string& text, const std::string& report_id = "report");

// Four decimals, as in the published tables.
std::string format_gmean(double v);

} // namespace mda

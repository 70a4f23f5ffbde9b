#pragma once

#include "mda/matrix.hpp"
#include "mda/rng.hpp"

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <set>
#include <string>
#include <string_view>
#include <vector>

namespace mda {

inline constexpr std::size_t kFeatureCount = 11;

// Selected SMART columns, in model-input order: normalized values for all
// attributes plus the raw values of 5 and 197.
inline constexpr std::array<std::string_view, kFeatureCount> kFeatureColumns = {
    "smart_1_normalized",   "smart_3_normalized",   "smart_5_normalized",
    "smart_5_raw",          "smart_7_normalized",   "smart_9_normalized",
    "smart_187_normalized", "smart_189_normalized", "smart_194_normalized",
    "smart_197_normalized", "smart_197_raw",
};

struct SmartRecord {
    std::string date;  // YYYY-MM-DD
    std::string serial_number;
    std::string model;
    int failure = 0;
    std::array<double, kFeatureCount> values{};
};

struct IngestResult {
    std::vector<SmartRecord> records;  // ordered by (date, serial_number)
    std::size_t dropped_rows = 0;      // requested-model rows missing a selected value
    std::size_t files = 0;
};

// Reads Backblaze daily-snapshot CSVs. An empty filter keeps every model.
IngestResult ingest(const std::vector<std::filesystem::path>& csv_paths,
                    const std::set<std::string>& model_filter = {});

enum class Split { train, test };

struct DomainDataset {
    std::string model_id;
    Matrix features;  // n × kFeatureCount (or any width for synthetic data)
    std::vector<int> labels;
    std::vector<Split> split;
    std::vector<std::string> row_keys;  // "date/serial_number"
    std::string fingerprint;
    std::vector<std::string> warnings;

    std::size_t rows() const { return labels.size(); }
    std::size_t positives() const;
    std::vector<std::size_t> indices(Split s) const;
    Matrix features_of(Split s) const;
    std::vector<int> labels_of(Split s) const;
};

struct BuildOptions {
    std::size_t negatives_per_positive = 10;
    int lookback_days = 1;
};

// Positives: the last `lookback_days` records of every disk that fails.
// Negatives: disk-days of never-failed disks, sampled without replacement.
DomainDataset build_domain(const std::vector<SmartRecord>& records, const std::string& model_id,
                           const BuildOptions& options, RngStream& rng);

// Stratified train/test assignment.
DomainDataset split(const DomainDataset& dataset, double train_fraction, RngStream& rng);

struct NormalizationStats {
    std::string owner_model;
    std::vector<double> x_min;
    std::vector<double> x_max;
};

// Per-feature min/max over the train rows.
NormalizationStats compute_stats(const DomainDataset& dataset);

// 2(x − min)/(max − min) − 1, clipped to [−1, 1]; constant features map to 0.
Matrix normalize(const Matrix& features, const NormalizationStats& stats);
DomainDataset normalized(const DomainDataset& dataset, const NormalizationStats& stats);

// 64-bit FNV-1a over the bytes of the files, in the given order.
std::string fingerprint_files(const std::vector<std::filesystem::path>& paths);
std::string fingerprint_bytes(std::string_view bytes, std::uint64_t basis = 0xcbf29ce484222325ULL);

// Versioned CSV: a "# mda-dataset 1 ..." line, then
//   <feature columns>,label,split,row_key
void write_dataset(const std::filesystem::path& path, const DomainDataset& dataset,
                   const std::vector<std::string>& feature_names = {},
                   const std::string& stats_owner = {});
DomainDataset read_dataset(const std::filesystem::path& path);

void write_stats(const std::filesystem::path& path, const NormalizationStats& stats);
NormalizationStats read_stats(const std::filesystem::path& path);

// Days since 1970-01-01 for a YYYY-MM-DD string.
std::int64_t day_number(std::string_view date);

} // namespace mda

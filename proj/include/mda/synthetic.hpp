#pragma once

#include "mda/data.hpp"

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mda {

// ---------------------------------------------------------------------------
// Two-domain Gaussian benchmark. Source: healthy ~ N(0, I), failing ~
// N(separation·u, I) with u a unit vector over the first `informative` dims.
// Target: the same class-conditional draws mapped by x ↦ S·x + b, where S and
// b scale and shift the informative and nuisance dims separately.
// ---------------------------------------------------------------------------
struct ShiftBenchmarkSpec {
    std::size_t source_rows = 5000;
    std::size_t target_rows = 500;
    std::size_t negatives_per_positive = 10;
    std::size_t dim = kFeatureCount;
    std::size_t informative = 4;
    double separation = 2.5;
    double informative_shift = 0.0;
    double informative_scale = 1.0;
    double nuisance_shift = 1.5;
    double nuisance_scale = 2.0;
    double train_fraction = 0.7;
};

struct DomainPair {
    DomainDataset source;
    DomainDataset target;
};

DomainPair make_shift_benchmark(const ShiftBenchmarkSpec& spec, std::uint64_t seed);

// ---------------------------------------------------------------------------
// Backblaze-format fixture: one daily snapshot CSV per day with the full
// published column layout, for a handful of synthetic drive models.
// ---------------------------------------------------------------------------
struct FixtureModel {
    std::string name;
    std::size_t disks = 120;
    std::size_t failures = 10;
    // Model-specific offsets of the healthy SMART baselines.
    double temperature_offset = 0.0;
    double age_offset = 0.0;
    double seek_offset = 0.0;
};

struct FixtureSpec {
    std::vector<FixtureModel> models;
    std::size_t days = 30;
    std::string start_date = "2021-01-01";
    double missing_rate = 0.002;  // blank smart_187_normalized cells
};

// The default five-model fixture used by the shipped example config.
FixtureSpec default_fixture_spec();

// Returns the written file paths.
std::vector<std::filesystem::path> write_backblaze_fixture(const std::filesystem::path& dir,
                                                           const FixtureSpec& spec,
                                                           std::uint64_t seed);

// Column layout of the 2021 daily snapshot files.
const std::vector<std::string>& backblaze_header();

std::string civil_date(std::int64_t day_number);

} // namespace mda

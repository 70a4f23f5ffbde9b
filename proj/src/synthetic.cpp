#include "mda/synthetic.hpp"

#include "mda/error.hpp"
#include "mda/rng.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>

namespace mda {

namespace {

DomainDataset gaussian_domain(const std::string& id, const ShiftBenchmarkSpec& spec,
                              std::size_t rows, bool shifted, RngStream& rng) {
    const std::size_t positives = std::max<std::size_t>(
        1, static_cast<std::size_t>(std::llround(static_cast<double>(rows) /
                                                 static_cast<double>(spec.negatives_per_positive + 1))));
    const double u = 1.0 / std::sqrt(static_cast<double>(spec.informative));
    DomainDataset ds;
    ds.model_id = id;
    ds.features = Matrix(rows, spec.dim);
    for (std::size_t i = 0; i < rows; ++i) {
        const int label = i < positives ? 1 : 0;
        for (std::size_t j = 0; j < spec.dim; ++j) {
            const bool informative = j < spec.informative;
            double v = rng.normal();
            if (label == 1 && informative) v += spec.separation * u;
            if (shifted) {
                v = informative ? spec.informative_scale * v + spec.informative_shift
                                : spec.nuisance_scale * v + spec.nuisance_shift;
            }
            ds.features(i, j) = v;
        }
        ds.labels.push_back(label);
        ds.row_keys.push_back(id + "/" + std::to_string(i));
    }
    ds.split.assign(rows, Split::train);
    ds.fingerprint = "synthetic";
    RngStream split_rng(rng.next_u64());
    return split(ds, spec.train_fraction, split_rng);
}

} // namespace

DomainPair make_shift_benchmark(const ShiftBenchmarkSpec& spec, std::uint64_t seed) {
    if (spec.informative == 0 || spec.informative > spec.dim)
        throw ParameterError("informative dims must lie in [1, dim]");
    RngStream rng(derive_seed(seed, 0x5eed));
    DomainPair p;
    p.source = gaussian_domain("synthetic_source", spec, spec.source_rows, false, rng);
    p.target = gaussian_domain("synthetic_target", spec, spec.target_rows, true, rng);
    return p;
}

std::string civil_date(std::int64_t z) {
    z += 719468;
    const std::int64_t era = (z >= 0 ? z : z - 146096) / 146097;
    const auto doe = static_cast<unsigned>(z - era * 146097);
    const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
    const std::int64_t y = static_cast<std::int64_t>(yoe) + era * 400;
    const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
    const unsigned mp = (5 * doy + 2) / 153;
    const unsigned d = doy - (153 * mp + 2) / 5 + 1;
    const unsigned m = mp < 10 ? mp + 3 : mp - 9;
    char buf[40];
    std::snprintf(buf, sizeof buf, "%04lld-%02u-%02u", static_cast<long long>(y + (m <= 2)), m, d);
    return buf;
}

const std::vector<std::string>& backblaze_header() {
    static const std::vector<std::string> header = [] {
        std::vector<std::string> h = {"date", "serial_number", "model", "capacity_bytes", "failure"};
        const int ids[] = {1,   2,   3,   4,   5,   7,   8,   9,   10,  11,  12,  13,  15,  16,
                           17,  18,  22,  23,  24,  168, 170, 173, 174, 177, 179, 181, 182, 183,
                           184, 187, 188, 189, 190, 191, 192, 193, 194, 195, 196, 197, 198, 199,
                           200, 201, 218, 220, 222, 223, 224, 225, 226, 231, 232, 233, 234, 235,
                           240, 241, 242, 245, 247, 248, 250, 251, 252, 254, 255};
        for (int id : ids) {
            h.push_back("smart_" + std::to_string(id) + "_normalized");
            h.push_back("smart_" + std::to_string(id) + "_raw");
        }
        return h;
    }();
    return header;
}

FixtureSpec default_fixture_spec() {
    FixtureSpec s;
    s.models = {
        {"ST4000DM000", 160, 16, 0.0, 0.0, 0.0},
        {"ST12000NM0007", 140, 14, 3.0, 8.0, -4.0},
        {"ST8000NM0055", 120, 12, -2.0, -6.0, 3.0},
        {"ST14000NM001G", 120, 12, 5.0, 12.0, -2.0},
        {"ST10000NM0086", 90, 5, -4.0, -10.0, 6.0},
    };
    return s;
}

std::vector<std::filesystem::path> write_backblaze_fixture(const std::filesystem::path& dir,
                                                           const FixtureSpec& spec,
                                                           std::uint64_t seed) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw IoError("cannot create " + dir.string() + ": " + ec.message());
    if (spec.days < 2) throw ParameterError("fixture needs at least 2 days");

    struct Disk {
        std::string model, serial;
        const FixtureModel* m;
        std::int64_t fail_day;  // -1 healthy; else day index of failure
        double age, temp_bias;
    };
    RngStream rng(derive_seed(seed, 0xf1c));
    std::vector<Disk> disks;
    for (const auto& m : spec.models) {
        if (m.failures > m.disks) throw ParameterError("fixture model with more failures than disks");
        for (std::size_t i = 0; i < m.disks; ++i) {
            char serial[32];
            std::snprintf(serial, sizeof serial, "Z%.3s%05zu", m.name.c_str() + 2, i);
            const std::int64_t fail =
                i < m.failures ? static_cast<std::int64_t>(1 + rng.below(spec.days - 1)) : -1;
            disks.push_back({m.name, serial, &m, fail, rng.uniform(0.0, 20.0), rng.normal()});
        }
    }

    const auto& header = backblaze_header();
    std::map<std::string, std::size_t> col;
    for (std::size_t i = 0; i < header.size(); ++i) col[header[i]] = i;

    const std::int64_t day0 = day_number(spec.start_date);
    std::vector<std::filesystem::path> paths;
    std::vector<std::string> cells(header.size());
    for (std::size_t day = 0; day < spec.days; ++day) {
        const std::string date = civil_date(day0 + static_cast<std::int64_t>(day));
        const auto path = dir / (date + ".csv");
        std::ofstream out(path, std::ios::binary);
        if (!out) throw IoError("cannot write " + path.string());
        for (std::size_t i = 0; i < header.size(); ++i) out << (i ? "," : "") << header[i];
        out << '\n';
        for (const auto& d : disks) {
            if (d.fail_day >= 0 && static_cast<std::int64_t>(day) > d.fail_day) continue;
            const bool failing = d.fail_day >= 0;
            // Degradation ramps up over the last days before failure.
            const double ramp =
                failing ? std::exp(-static_cast<double>(d.fail_day - static_cast<std::int64_t>(day)) / 3.0)
                        : 0.0;
            std::fill(cells.begin(), cells.end(), std::string());
            auto set = [&](const std::string& name, double v) {
                char buf[32];
                std::snprintf(buf, sizeof buf, "%.0f", v);
                cells[col.at(name)] = buf;
            };
            cells[col.at("date")] = date;
            cells[col.at("serial_number")] = d.serial;
            cells[col.at("model")] = d.model;
            cells[col.at("capacity_bytes")] = "4000787030016";
            cells[col.at("failure")] = failing && static_cast<std::int64_t>(day) == d.fail_day ? "1" : "0";

            const FixtureModel& m = *d.m;
            set("smart_1_normalized", std::clamp(115.0 - 30.0 * ramp + 4.0 * rng.normal(), 1.0, 200.0));
            set("smart_1_raw", std::floor(rng.uniform(0.0, 2.0e8)));
            set("smart_3_normalized", std::clamp(92.0 + 3.0 * rng.normal(), 1.0, 100.0));
            set("smart_3_raw", 0.0);
            set("smart_4_normalized", 100.0);
            set("smart_4_raw", std::floor(rng.uniform(1.0, 40.0)));
            set("smart_5_normalized", std::clamp(100.0 - 25.0 * ramp * rng.uniform(0.5, 1.5), 1.0, 100.0));
            set("smart_5_raw", failing ? std::floor(ramp * rng.uniform(50.0, 3000.0)) : 0.0);
            set("smart_7_normalized", std::clamp(75.0 + m.seek_offset - 15.0 * ramp + 5.0 * rng.normal(), 1.0, 100.0));
            set("smart_7_raw", std::floor(rng.uniform(0.0, 1.0e9)));
            const double hours = 1000.0 * (d.age + m.age_offset + 20.0) + 24.0 * static_cast<double>(day);
            set("smart_9_normalized", std::clamp(100.0 - hours / 1000.0, 1.0, 100.0));
            set("smart_9_raw", hours);
            set("smart_10_normalized", 100.0);
            set("smart_10_raw", 0.0);
            set("smart_12_normalized", 100.0);
            set("smart_12_raw", std::floor(rng.uniform(1.0, 40.0)));
            cells[col.at("smart_187_normalized")] =
                rng.uniform() < spec.missing_rate
                    ? std::string()
                    : std::to_string(static_cast<int>(std::clamp(100.0 - 40.0 * ramp * rng.uniform(0.0, 1.5), 1.0, 100.0)));
            set("smart_187_raw", failing ? std::floor(ramp * rng.uniform(0.0, 60.0)) : 0.0);
            set("smart_189_normalized", std::clamp(100.0 - 10.0 * ramp * rng.uniform(), 1.0, 100.0));
            set("smart_189_raw", 0.0);
            const double temp = 28.0 + m.temperature_offset + 2.0 * d.temp_bias + rng.normal();
            set("smart_194_normalized", temp);
            set("smart_194_raw", temp);
            set("smart_197_normalized", std::clamp(100.0 - 20.0 * ramp * rng.uniform(0.5, 1.5), 1.0, 100.0));
            set("smart_197_raw", failing ? std::floor(ramp * rng.uniform(8.0, 600.0)) : 0.0);
            set("smart_198_normalized", 100.0);
            set("smart_198_raw", failing ? std::floor(ramp * rng.uniform(0.0, 400.0)) : 0.0);
            for (std::size_t i = 0; i < cells.size(); ++i) out << (i ? "," : "") << cells[i];
            out << '\n';
        }
        paths.push_back(path);
    }
    return paths;
}

} // namespace mda

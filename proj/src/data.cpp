#include "mda/data.hpp"

#include "mda/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <numeric>
#include <sstream>
#include <unordered_map>
#include <unordered_set>

#include "json.hpp"

namespace mda {

namespace {

std::vector<std::string_view> split_csv_line(std::string_view line) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        std::string_view field = line.substr(start, comma == std::string_view::npos
                                                        ? std::string_view::npos
                                                        : comma - start);
        if (field.size() >= 2 && field.front() == '"' && field.back() == '"')
            field = field.substr(1, field.size() - 2);
        out.push_back(field);
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return out;
}

bool parse_number(std::string_view s, double& out) {
    while (!s.empty() && s.front() == ' ') s.remove_prefix(1);
    while (!s.empty() && s.back() == ' ') s.remove_suffix(1);
    if (s.empty()) return false;
    const char* first = s.data();
    if (*first == '+') ++first;
    const char* last = s.data() + s.size();
    auto [p, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && p == last && std::isfinite(out);
}

// Raw counters are integers in the published files.
bool parse_raw(std::string_view s, double& out) {
    std::int64_t v = 0;
    auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec == std::errc() && p == s.data() + s.size() && !s.empty()) {
        out = static_cast<double>(v);
        return true;
    }
    return parse_number(s, out);
}

bool is_raw_column(std::string_view name) {
    return name.size() > 4 && name.substr(name.size() - 4) == "_raw";
}

std::string format_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string row_key(const SmartRecord& r) { return r.date + "/" + r.serial_number; }

} // namespace

std::int64_t day_number(std::string_view date) {
    int y = 0;
    unsigned m = 0, d = 0;
    auto bad = [&] { return DataError("malformed date '" + std::string(date) + "'"); };
    if (date.size() != 10 || date[4] != '-' || date[7] != '-') throw bad();
    if (std::from_chars(date.data(), date.data() + 4, y).ec != std::errc() ||
        std::from_chars(date.data() + 5, date.data() + 7, m).ec != std::errc() ||
        std::from_chars(date.data() + 8, date.data() + 10, d).ec != std::errc() || m < 1 ||
        m > 12 || d < 1 || d > 31)
        throw bad();
    // days_from_civil (proleptic Gregorian)
    y -= m <= 2;
    const std::int64_t era = (y >= 0 ? y : y - 399) / 400;
    const auto yoe = static_cast<unsigned>(y - era * 400);
    const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
    const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
    return era * 146097 + static_cast<std::int64_t>(doe) - 719468;
}

IngestResult ingest(const std::vector<std::filesystem::path>& csv_paths,
                    const std::set<std::string>& model_filter) {
    IngestResult result;
    for (const auto& path : csv_paths) {
        std::ifstream in(path, std::ios::binary);
        if (!in) throw IoError("cannot read " + path.string());
        ++result.files;

        std::string line;
        if (!std::getline(in, line)) throw SchemaError(path.string() + ": empty file, no header");
        const auto header = split_csv_line(line);
        std::unordered_map<std::string_view, std::size_t> col;
        for (std::size_t i = 0; i < header.size(); ++i) col.emplace(header[i], i);
        auto require = [&](std::string_view name) {
            auto it = col.find(name);
            if (it == col.end())
                throw SchemaError(path.string() + ": missing column '" + std::string(name) + "'");
            return it->second;
        };
        // header views point into `line`; resolve indices before reusing it
        const std::size_t c_date = require("date");
        const std::size_t c_serial = require("serial_number");
        const std::size_t c_model = require("model");
        const std::size_t c_failure = require("failure");
        std::array<std::size_t, kFeatureCount> c_feat{};
        for (std::size_t k = 0; k < kFeatureCount; ++k) c_feat[k] = require(kFeatureColumns[k]);
        const std::size_t needed =
            std::max({c_date, c_serial, c_model, c_failure,
                      *std::max_element(c_feat.begin(), c_feat.end())}) + 1;

        std::size_t line_no = 1;
        while (std::getline(in, line)) {
            ++line_no;
            if (line.empty() || line == "\r") continue;
            const auto f = split_csv_line(line);
            if (f.size() < needed)
                throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                                  std::to_string(header.size()) + " fields, got " +
                                  std::to_string(f.size()));
            const std::string_view model = f[c_model];
            if (!model_filter.empty() && !model_filter.contains(std::string(model))) continue;
            if (model.empty())
                throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": empty model");

            SmartRecord r;
            r.date = f[c_date];
            r.serial_number = f[c_serial];
            r.model = model;
            if (f[c_failure] == "0") r.failure = 0;
            else if (f[c_failure] == "1") r.failure = 1;
            else
                throw SchemaError(path.string() + ":" + std::to_string(line_no) +
                                  ": failure must be 0 or 1, got '" + std::string(f[c_failure]) +
                                  "'");
            bool complete = true;
            for (std::size_t k = 0; k < kFeatureCount && complete; ++k) {
                const auto cell = f[c_feat[k]];
                complete = is_raw_column(kFeatureColumns[k]) ? parse_raw(cell, r.values[k])
                                                             : parse_number(cell, r.values[k]);
            }
            if (!complete) {
                ++result.dropped_rows;
                continue;
            }
            result.records.push_back(std::move(r));
        }
    }
    std::stable_sort(result.records.begin(), result.records.end(),
                     [](const SmartRecord& a, const SmartRecord& b) {
                         if (a.date != b.date) return a.date < b.date;
                         return a.serial_number < b.serial_number;
                     });
    return result;
}

std::size_t DomainDataset::positives() const {
    return static_cast<std::size_t>(std::count(labels.begin(), labels.end(), 1));
}

std::vector<std::size_t> DomainDataset::indices(Split s) const {
    std::vector<std::size_t> idx;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) idx.push_back(i);
    return idx;
}

Matrix DomainDataset::features_of(Split s) const {
    const auto idx = indices(s);
    return gather_rows(features, idx);
}

std::vector<int> DomainDataset::labels_of(Split s) const {
    std::vector<int> out;
    for (std::size_t i = 0; i < split.size(); ++i)
        if (split[i] == s) out.push_back(labels[i]);
    return out;
}

DomainDataset build_domain(const std::vector<SmartRecord>& records, const std::string& model_id,
                           const BuildOptions& options, RngStream& rng) {
    if (options.lookback_days < 1)
        throw ParameterError("lookback_days must be >= 1, got " +
                             std::to_string(options.lookback_days));

    std::map<std::string, std::int64_t> failure_day;
    bool any = false;
    for (const auto& r : records) {
        if (r.model != model_id) continue;
        any = true;
        if (r.failure == 1) {
            const auto day = day_number(r.date);
            auto [it, inserted] = failure_day.emplace(r.serial_number, day);
            if (!inserted) it->second = std::min(it->second, day);
        }
    }
    if (!any) throw DataError("no records for model " + model_id);
    if (failure_day.empty()) throw DataError("model " + model_id + " has no failed disks");

    std::vector<std::size_t> pos, pool;
    for (std::size_t i = 0; i < records.size(); ++i) {
        const auto& r = records[i];
        if (r.model != model_id) continue;
        auto it = failure_day.find(r.serial_number);
        if (it == failure_day.end()) {
            pool.push_back(i);
            continue;
        }
        const auto day = day_number(r.date);
        if (day <= it->second && day > it->second - options.lookback_days) pos.push_back(i);
    }

    DomainDataset ds;
    ds.model_id = model_id;
    const std::size_t want = options.negatives_per_positive * pos.size();
    std::vector<std::size_t> neg;
    if (pool.size() <= want) {
        if (pool.size() < want)
            ds.warnings.push_back(model_id + ": requested " + std::to_string(want) +
                                  " negatives but only " + std::to_string(pool.size()) +
                                  " healthy disk-days exist; using all of them");
        neg = pool;
    } else {
        for (std::size_t k = 0; k < want; ++k) {
            const std::size_t j = k + rng.below(pool.size() - k);
            std::swap(pool[k], pool[j]);
        }
        neg.assign(pool.begin(), pool.begin() + static_cast<std::ptrdiff_t>(want));
        std::sort(neg.begin(), neg.end());
    }

    const std::size_t n = pos.size() + neg.size();
    ds.features = Matrix(n, kFeatureCount);
    ds.labels.reserve(n);
    ds.row_keys.reserve(n);
    std::size_t row = 0;
    auto emit = [&](std::size_t idx, int label) {
        const auto& r = records[idx];
        std::copy(r.values.begin(), r.values.end(), ds.features.row(row).begin());
        ds.labels.push_back(label);
        ds.row_keys.push_back(row_key(r));
        ++row;
    };
    for (auto i : pos) emit(i, 1);
    for (auto i : neg) emit(i, 0);
    ds.split.assign(n, Split::train);
    return ds;
}

DomainDataset split(const DomainDataset& dataset, double train_fraction, RngStream& rng) {
    if (!(train_fraction > 0.0 && train_fraction < 1.0))
        throw ParameterError("train_fraction must lie in (0, 1), got " +
                             std::to_string(train_fraction));
    DomainDataset out = dataset;
    out.split.assign(dataset.rows(), Split::train);
    for (int label : {1, 0}) {
        std::vector<std::size_t> stratum;
        for (std::size_t i = 0; i < dataset.rows(); ++i)
            if (dataset.labels[i] == label) stratum.push_back(i);
        if (stratum.empty()) continue;
        if (stratum.size() < 2) {
            out.warnings.push_back(dataset.model_id + ": class " + std::to_string(label) +
                                   " has " + std::to_string(stratum.size()) +
                                   " row(s); assigned to train");
            continue;
        }
        rng.shuffle(stratum);
        const auto n_train = static_cast<std::size_t>(
            std::llround(train_fraction * static_cast<double>(stratum.size())));
        for (std::size_t k = n_train; k < stratum.size(); ++k) out.split[stratum[k]] = Split::test;
    }
    return out;
}

NormalizationStats compute_stats(const DomainDataset& dataset) {
    NormalizationStats s;
    s.owner_model = dataset.model_id;
    const std::size_t d = dataset.features.cols();
    s.x_min.assign(d, 0.0);
    s.x_max.assign(d, 0.0);
    bool first = true;
    for (std::size_t i = 0; i < dataset.rows(); ++i) {
        if (dataset.split[i] != Split::train) continue;
        for (std::size_t j = 0; j < d; ++j) {
            const double v = dataset.features(i, j);
            if (first || v < s.x_min[j]) s.x_min[j] = v;
            if (first || v > s.x_max[j]) s.x_max[j] = v;
        }
        first = false;
    }
    if (first) throw DataError(dataset.model_id + ": no training rows to compute statistics");
    return s;
}

Matrix normalize(const Matrix& features, const NormalizationStats& stats) {
    if (stats.x_min.size() != features.cols() || stats.x_max.size() != features.cols())
        throw ShapeError("normalize: " + std::to_string(stats.x_min.size()) +
                         "-feature statistics for features " + shape_string(features));
    Matrix out(features.rows(), features.cols());
    for (std::size_t j = 0; j < features.cols(); ++j) {
        const double lo = stats.x_min[j], hi = stats.x_max[j];
        const double span = hi - lo;
        for (std::size_t i = 0; i < features.rows(); ++i) {
            if (!(span > 0.0)) {
                out(i, j) = 0.0;
                continue;
            }
            const double v = 2.0 * (features(i, j) - lo) / span - 1.0;
            out(i, j) = std::clamp(v, -1.0, 1.0);
        }
    }
    return out;
}

DomainDataset normalized(const DomainDataset& dataset, const NormalizationStats& stats) {
    DomainDataset out = dataset;
    out.features = normalize(dataset.features, stats);
    return out;
}

std::string fingerprint_bytes(std::string_view bytes, std::uint64_t basis) {
    std::uint64_t h = basis;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
    return buf;
}

std::string fingerprint_files(const std::vector<std::filesystem::path>& paths) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::vector<char> buf(1 << 16);
    for (const auto& p : paths) {
        std::ifstream in(p, std::ios::binary);
        if (!in) throw IoError("cannot read " + p.string());
        while (in) {
            in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
            for (std::streamsize i = 0; i < in.gcount(); ++i) {
                h ^= static_cast<unsigned char>(buf[static_cast<std::size_t>(i)]);
                h *= 0x100000001b3ULL;
            }
        }
    }
    char out[17];
    std::snprintf(out, sizeof out, "%016llx", static_cast<unsigned long long>(h));
    return out;
}

void write_dataset(const std::filesystem::path& path, const DomainDataset& ds,
                   const std::vector<std::string>& feature_names, const std::string& stats_owner) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot write dataset " + path.string());
    const std::size_t d = ds.features.cols();
    std::vector<std::string> names = feature_names;
    if (names.empty()) {
        if (d == kFeatureCount)
            for (auto c : kFeatureColumns) names.emplace_back(c);
        else
            for (std::size_t j = 0; j < d; ++j) names.push_back("f" + std::to_string(j + 1));
    }
    if (names.size() != d)
        throw ShapeError("write_dataset: " + std::to_string(names.size()) + " names for " +
                         std::to_string(d) + " features");

    out << "# mda-dataset 1 model=" << ds.model_id
        << " fingerprint=" << (ds.fingerprint.empty() ? "-" : ds.fingerprint)
        << " stats=" << (stats_owner.empty() ? "-" : stats_owner) << "\n";
    for (const auto& n : names) out << n << ',';
    out << "label,split,row_key\n";
    for (std::size_t i = 0; i < ds.rows(); ++i) {
        for (std::size_t j = 0; j < d; ++j) out << format_g17(ds.features(i, j)) << ',';
        out << ds.labels[i] << ',' << (ds.split[i] == Split::train ? "train" : "test") << ','
            << (i < ds.row_keys.size() ? ds.row_keys[i] : std::string()) << '\n';
    }
    if (!out) throw IoError("failed writing dataset " + path.string());
}

DomainDataset read_dataset(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot read dataset " + path.string());
    std::string line;
    if (!std::getline(in, line) || line.rfind("# mda-dataset 1", 0) != 0)
        throw SchemaError(path.string() + ": not a version-1 mda dataset");

    DomainDataset ds;
    {
        std::istringstream ls(line.substr(15));
        std::string tok;
        while (ls >> tok) {
            const auto eq = tok.find('=');
            if (eq == std::string::npos) continue;
            const auto key = tok.substr(0, eq), val = tok.substr(eq + 1);
            if (key == "model") ds.model_id = val;
            else if (key == "fingerprint" && val != "-") ds.fingerprint = val;
        }
    }
    if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header row");
    const auto header = split_csv_line(line);
    if (header.size() < 4 || header[header.size() - 3] != "label" ||
        header[header.size() - 2] != "split" || header.back() != "row_key")
        throw SchemaError(path.string() + ": header must end with label,split,row_key");
    const std::size_t d = header.size() - 3;

    std::vector<double> values;
    std::size_t line_no = 2;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != d + 3)
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": expected " +
                              std::to_string(d + 3) + " fields, got " + std::to_string(f.size()));
        for (std::size_t j = 0; j < d; ++j) {
            double v;
            if (!parse_number(f[j], v))
                throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": bad value '" +
                                  std::string(f[j]) + "' in column " + std::string(header[j]));
            values.push_back(v);
        }
        if (f[d] != "0" && f[d] != "1")
            throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": bad label");
        ds.labels.push_back(f[d] == "1" ? 1 : 0);
        if (f[d + 1] == "train") ds.split.push_back(Split::train);
        else if (f[d + 1] == "test") ds.split.push_back(Split::test);
        else throw SchemaError(path.string() + ":" + std::to_string(line_no) + ": bad split tag");
        ds.row_keys.emplace_back(f[d + 2]);
    }
    ds.features = Matrix::from_data(ds.labels.size(), d, std::move(values));
    if (ds.rows() == 0) throw DataError(path.string() + ": dataset has no rows");
    return ds;
}

void write_stats(const std::filesystem::path& path, const NormalizationStats& stats) {
    nlohmann::ordered_json j;
    j["format"] = "mda-stats";
    j["version"] = 1;
    j["owner_model"] = stats.owner_model;
    j["features"] = nlohmann::ordered_json::array();
    for (std::size_t k = 0; k < stats.x_min.size(); ++k) {
        const std::string name = stats.x_min.size() == kFeatureCount
                                     ? std::string(kFeatureColumns[k])
                                     : "f" + std::to_string(k + 1);
        j["features"].push_back({{"name", name}, {"x_min", stats.x_min[k]}, {"x_max", stats.x_max[k]}});
    }
    std::ofstream out(path);
    if (!out) throw IoError("cannot write stats " + path.string());
    out << j.dump(2) << "\n";
}

NormalizationStats read_stats(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw IoError("cannot read stats " + path.string());
    NormalizationStats s;
    try {
        const auto j = nlohmann::json::parse(in);
        if (j.at("format") != "mda-stats" || j.at("version") != 1)
            throw SchemaError(path.string() + ": not a version-1 stats file");
        s.owner_model = j.at("owner_model").get<std::string>();
        for (const auto& f : j.at("features")) {
            s.x_min.push_back(f.at("x_min").get<double>());
            s.x_max.push_back(f.at("x_max").get<double>());
        }
    } catch (const nlohmann::json::exception& e) {
        throw SchemaError(path.string() + ": " + e.what());
    }
    return s;
}

} // namespace mda

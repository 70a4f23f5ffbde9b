#include "mda/config.hpp"

#include "mda/error.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

namespace mda {

namespace {

std::string trim(std::string_view s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r");
    return std::string(s.substr(b, e - b + 1));
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::stringstream ss(v);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

std::optional<std::int64_t> as_int(const std::string& v) {
    std::int64_t x = 0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty()) return std::nullopt;
    return x;
}

std::optional<double> as_real(const std::string& v) {
    double x = 0.0;
    auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (ec != std::errc() || p != v.data() + v.size() || v.empty() || !std::isfinite(x))
        return std::nullopt;
    return x;
}

std::optional<bool> as_bool(const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    return std::nullopt;
}

} // namespace

std::string_view type_name(ValueType t) {
    switch (t) {
    case ValueType::string: return "string";
    case ValueType::integer: return "integer";
    case ValueType::real: return "real";
    case ValueType::boolean: return "boolean";
    case ValueType::string_list: return "list<string>";
    case ValueType::integer_list: return "list<integer>";
    }
    return "?";
}

Config Config::parse(std::string_view text, const std::string& origin) {
    Config c;
    std::istringstream in{std::string(text)};
    std::string line;
    std::size_t no = 0;
    while (std::getline(in, line)) {
        ++no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line.resize(hash);
        const std::string t = trim(line);
        if (t.empty()) continue;
        const auto eq = t.find('=');
        if (eq == std::string::npos)
            throw UsageError(origin + ":" + std::to_string(no) + ": expected 'key = value'");
        const std::string key = trim(std::string_view(t).substr(0, eq));
        if (key.empty()) throw UsageError(origin + ":" + std::to_string(no) + ": empty key");
        if (c.values_.contains(key))
            throw UsageError(origin + ":" + std::to_string(no) + ": duplicate key '" + key + "'");
        c.values_[key] = trim(std::string_view(t).substr(eq + 1));
    }
    return c;
}

Config Config::load(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw UsageError("cannot read config " + path.string());
    std::stringstream ss;
    ss << in.rdbuf();
    return parse(ss.str(), path.string());
}

void Config::validate(const ConfigSchema& schema) const {
    for (const auto& [key, value] : values_) {
        auto it = std::find_if(schema.begin(), schema.end(),
                               [&](const KeySpec& k) { return k.name == key; });
        if (it == schema.end()) throw UsageError("unknown config key '" + key + "'");
        bool ok = true;
        switch (it->type) {
        case ValueType::string: ok = !value.empty(); break;
        case ValueType::integer: ok = as_int(value).has_value(); break;
        case ValueType::real: ok = as_real(value).has_value(); break;
        case ValueType::boolean: ok = as_bool(value).has_value(); break;
        case ValueType::string_list: ok = !split_list(value).empty(); break;
        case ValueType::integer_list: {
            const auto items = split_list(value);
            ok = !items.empty() &&
                 std::all_of(items.begin(), items.end(), [](const std::string& s) { return as_int(s).has_value(); });
            break;
        }
        }
        if (!ok)
            throw UsageError("config key '" + key + "' expects " + std::string(type_name(it->type)) +
                             ", got '" + value + "'");
    }
}

std::string Config::get_string(const std::string& key, const std::string& fallback) const {
    auto it = values_.find(key);
    return it == values_.end() ? fallback : it->second;
}

std::int64_t Config::get_int(const std::string& key, std::int64_t fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto v = as_int(it->second);
    if (!v) throw UsageError("config key '" + key + "' expects integer, got '" + it->second + "'");
    return *v;
}

double Config::get_real(const std::string& key, double fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto v = as_real(it->second);
    if (!v) throw UsageError("config key '" + key + "' expects real, got '" + it->second + "'");
    return *v;
}

bool Config::get_bool(const std::string& key, bool fallback) const {
    auto it = values_.find(key);
    if (it == values_.end()) return fallback;
    auto v = as_bool(it->second);
    if (!v) throw UsageError("config key '" + key + "' expects boolean, got '" + it->second + "'");
    return *v;
}

std::vector<std::string> Config::get_list(const std::string& key) const {
    auto it = values_.find(key);
    return it == values_.end() ? std::vector<std::string>{} : split_list(it->second);
}

std::vector<std::int64_t> Config::get_int_list(const std::string& key) const {
    std::vector<std::int64_t> out;
    for (const auto& s : get_list(key)) {
        auto v = as_int(s);
        if (!v) throw UsageError("config key '" + key + "' expects list<integer>, got '" + s + "'");
        out.push_back(*v);
    }
    return out;
}

std::string render_schema(const ConfigSchema& schema) {
    std::ostringstream out;
    for (const auto& k : schema)
        out << k.name << " : " << type_name(k.type) << "\n    " << k.description << "\n";
    return out.str();
}

} // namespace mda

#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mda {

// Declarative run configuration: one `key = value` per line, `#` comments,
// lists comma-separated. Keys and value types are checked against a schema.

enum class ValueType { string, integer, real, boolean, string_list, integer_list };

struct KeySpec {
    std::string name;
    ValueType type;
    std::string description;
};

using ConfigSchema = std::vector<KeySpec>;

class Config {
public:
    static Config parse(std::string_view text, const std::string& origin = "<config>");
    static Config load(const std::filesystem::path& path);

    // Throws UsageError on unknown keys or values of the wrong type.
    void validate(const ConfigSchema& schema) const;

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.contains(key); }

    std::string get_string(const std::string& key, const std::string& fallback = {}) const;
    std::int64_t get_int(const std::string& key, std::int64_t fallback = 0) const;
    double get_real(const std::string& key, double fallback = 0.0) const;
    bool get_bool(const std::string& key, bool fallback = false) const;
    std::vector<std::string> get_list(const std::string& key) const;
    std::vector<std::int64_t> get_int_list(const std::string& key) const;

    const std::map<std::string, std::string>& values() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

std::string render_schema(const ConfigSchema& schema);
std::string_view type_name(ValueType t);

} // namespace mda

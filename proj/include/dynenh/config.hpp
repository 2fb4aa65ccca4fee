#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace dynenh {

/// Ordered key=value settings. Later layers override earlier ones
/// (defaults < config file < command-line flags).
class KeyValues {
public:
    /// Lines are `key = value`; blank lines and `#` comments are ignored.
    static KeyValues parse(const std::string& text);
    static KeyValues load(const std::filesystem::path& path);

    void set(const std::string& key, const std::string& value) { values_[key] = value; }
    bool has(const std::string& key) const { return values_.count(key) != 0; }
    const std::string& get(const std::string& key) const;
    void merge(const KeyValues& over);

    std::string to_text() const;
    const std::map<std::string, std::string>& entries() const { return values_; }

private:
    std::map<std::string, std::string> values_;
};

double parse_double(const std::string& key, const std::string& text);
std::size_t parse_count(const std::string& key, const std::string& text);
bool parse_bool(const std::string& key, const std::string& text);

}  // namespace dynenh

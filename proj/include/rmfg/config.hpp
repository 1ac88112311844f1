// INI-style run configuration: sections of key = value pairs, comma lists,
// '#' comments. Strictly validated so typos fail fast instead of silently
// running defaults.
#ifndef RMFG_CONFIG_HPP
#define RMFG_CONFIG_HPP

#include <cstdint>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace rmfg {

class ConfigError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class Config {
public:
    static Config parse_file(const std::string& path);
    static Config parse_string(const std::string& text);

    bool has(const std::string& section, const std::string& key) const;
    std::string get_string(const std::string& section, const std::string& key,
                           const std::string& fallback) const;
    double get_double(const std::string& section, const std::string& key,
                      double fallback) const;
    std::int64_t get_int(const std::string& section, const std::string& key,
                         std::int64_t fallback) const;
    std::vector<double> get_list(const std::string& section, const std::string& key) const;

    // All keys of one section (for scenario parameter pass-through).
    std::map<std::string, std::string> section(const std::string& name) const;
    // Rejects sections/keys outside the given schema; scenario params are
    // free-form, so their section can be exempted.
    void enforce_schema(const std::map<std::string, std::vector<std::string>>& schema,
                        const std::vector<std::string>& free_sections) const;

private:
    std::map<std::string, std::map<std::string, std::string>> data_;
};

}  // namespace rmfg

#endif

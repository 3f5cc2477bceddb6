// SPDX-License-Identifier: Apache-2.0
#ifndef DOCLAB_CLI_CONFIG_HPP_
#define DOCLAB_CLI_CONFIG_HPP_

#include <cstdint>
#include <map>
#include <sstream>
#include <string>

#include "doclab/util/error.hpp"
#include "doclab/util/io.hpp"

namespace doclab::cli {

// Flat key-value run configuration with [section] headers. Diff-friendly,
// deterministic serialization (sections and keys sorted).
class KvConfig {
public:
    KvConfig() = default;

    static KvConfig parse(const std::string& text) {
        KvConfig cfg;
        std::istringstream in(text);
        std::string line;
        std::string section;
        int lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            const auto hash = line.find('#');
            if (hash != std::string::npos) line = line.substr(0, hash);
            // Trim.
            auto l = line.find_first_not_of(" \t\r");
            if (l == std::string::npos) continue;
            auto r = line.find_last_not_of(" \t\r");
            line = line.substr(l, r - l + 1);
            if (line.front() == '[') {
                if (line.back() != ']')
                    throw UsageError("config line " + std::to_string(lineno) +
                                     ": unterminated section header");
                section = line.substr(1, line.size() - 2);
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos)
                throw UsageError("config line " + std::to_string(lineno) + ": expected key = value");
            std::string key = line.substr(0, eq);
            std::string value = line.substr(eq + 1);
            auto trim = [](std::string& s) {
                const auto a = s.find_first_not_of(" \t");
                const auto b = s.find_last_not_of(" \t");
                s = a == std::string::npos ? "" : s.substr(a, b - a + 1);
            };
            trim(key);
            trim(value);
            if (key.empty())
                throw UsageError("config line " + std::to_string(lineno) + ": empty key");
            cfg.values_[section][key] = value;
        }
        return cfg;
    }

    static KvConfig load(const std::string& path) { return parse(read_file(path)); }

    std::string serialize() const {
        std::string out;
        for (const auto& [section, kv] : values_) {
            if (!section.empty()) out += "[" + section + "]\n";
            for (const auto& [k, v] : kv) out += k + " = " + v + "\n";
            out += "\n";
        }
        return out;
    }

    bool has(const std::string& section, const std::string& key) const {
        auto s = values_.find(section);
        return s != values_.end() && s->second.count(key) > 0;
    }

    void set(const std::string& section, const std::string& key, const std::string& value) {
        values_[section][key] = value;
    }

    std::string get(const std::string& section, const std::string& key,
                    const std::string& fallback) const {
        auto s = values_.find(section);
        if (s == values_.end()) return fallback;
        auto k = s->second.find(key);
        return k == s->second.end() ? fallback : k->second;
    }

    std::string require(const std::string& section, const std::string& key) const {
        if (!has(section, key))
            throw UsageError("config is missing [" + section + "] " + key);
        return values_.at(section).at(key);
    }

    int get_int(const std::string& section, const std::string& key, int fallback) const {
        if (!has(section, key)) return fallback;
        return std::stoi(values_.at(section).at(key));
    }

    uint64_t get_u64(const std::string& section, const std::string& key, uint64_t fallback) const {
        if (!has(section, key)) return fallback;
        return std::stoull(values_.at(section).at(key));
    }

    double get_double(const std::string& section, const std::string& key, double fallback) const {
        if (!has(section, key)) return fallback;
        return std::stod(values_.at(section).at(key));
    }

    bool get_bool(const std::string& section, const std::string& key, bool fallback) const {
        if (!has(section, key)) return fallback;
        const std::string v = values_.at(section).at(key);
        if (v == "1" || v == "true" || v == "yes" || v == "on") return true;
        if (v == "0" || v == "false" || v == "no" || v == "off") return false;
        throw UsageError("config [" + section + "] " + key + " is not a boolean: " + v);
    }

private:
    std::map<std::string, std::map<std::string, std::string>> values_;
};

}  // namespace doclab::cli

#endif  // DOCLAB_CLI_CONFIG_HPP_

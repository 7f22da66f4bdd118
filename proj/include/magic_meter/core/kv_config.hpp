#pragma once

// Plain-text key/value configuration files (a small TOML subset):
//
//     # comment
//     key = "string"
//     count = 5
//     list = [100, 300, "none"]
//     [section]
//     key = 1.5          # stored as "section.key"
//
// Values are kept as strings; arrays are split on top-level commas.

#include <map>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "magic_meter/core/text.hpp"

namespace magic_meter {

class KvConfig {
  public:
    static KvConfig parse(std::string_view text) {
        KvConfig cfg;
        std::string section;
        int line_no = 0;
        for (auto raw : split(text, '\n')) {
            ++line_no;
            auto line = trim(strip_comment(raw));
            if (line.empty()) {
                continue;
            }
            if (line.front() == '[') {
                if (line.back() != ']') {
                    throw error(line_no, "unterminated section header");
                }
                section = std::string(trim(line.substr(1, line.size() - 2)));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string_view::npos) {
                throw error(line_no, "expected 'key = value'");
            }
            auto key = std::string(trim(line.substr(0, eq)));
            auto value = trim(line.substr(eq + 1));
            if (key.empty() || value.empty()) {
                throw error(line_no, "empty key or value");
            }
            if (!section.empty()) {
                key = section + "." + key;
            }
            std::vector<std::string> items;
            if (value.front() == '[') {
                if (value.back() != ']') {
                    throw error(line_no, "unterminated array");
                }
                auto body = trim(value.substr(1, value.size() - 2));
                if (!body.empty()) {
                    for (auto item : split(body, ',')) {
                        items.push_back(unquote(trim(item), line_no));
                    }
                }
                cfg.arrays_.insert(key);
            } else {
                items.push_back(unquote(value, line_no));
            }
            if (!cfg.values_.emplace(key, std::move(items)).second) {
                throw error(line_no, "duplicate key '" + key + "'");
            }
        }
        return cfg;
    }

    static KvConfig load(const std::string& path) { return parse(read_file(path)); }

    bool has(const std::string& key) const { return values_.count(key) != 0; }

    std::optional<std::string> get(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            return std::nullopt;
        }
        if (it->second.size() != 1 || arrays_.count(key)) {
            throw std::invalid_argument("config key '" + key + "' must be a scalar");
        }
        return it->second.front();
    }

    std::string get_or(const std::string& key, const std::string& fallback) const {
        return get(key).value_or(fallback);
    }

    /// Scalar keys are returned as one-element lists.
    std::optional<std::vector<std::string>> get_list(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) {
            return std::nullopt;
        }
        return it->second;
    }

    std::vector<std::string> keys() const {
        std::vector<std::string> out;
        for (const auto& [k, v] : values_) {
            out.push_back(k);
        }
        return out;
    }

  private:
    static std::string_view strip_comment(std::string_view line) {
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') {
                quoted = !quoted;
            } else if (line[i] == '#' && !quoted) {
                return line.substr(0, i);
            }
        }
        return line;
    }

    static std::string unquote(std::string_view v, int line_no) {
        if (v.empty()) {
            throw error(line_no, "empty value");
        }
        if (v.front() == '"') {
            if (v.size() < 2 || v.back() != '"') {
                throw error(line_no, "unterminated string");
            }
            return std::string(v.substr(1, v.size() - 2));
        }
        return std::string(v);
    }

    static std::invalid_argument error(int line_no, const std::string& what) {
        return std::invalid_argument("config line " + std::to_string(line_no) + ": " + what);
    }

    std::map<std::string, std::vector<std::string>> values_;
    std::set<std::string> arrays_;
};

}  // namespace magic_meter

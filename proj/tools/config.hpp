#pragma once

// Flat dotted-key run configuration: defaults, JSON config file, then CLI
// flag overrides, materialized in full into every run manifest.

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "l3ppi/errors.hpp"

namespace l3ppi::cli {

struct KeySpec {
    std::string key;
    std::string default_value;  // textual; typed access parses on demand
    std::string help;
};

class RunConfig {
  public:
    explicit RunConfig(std::vector<KeySpec> specs) {
        for (KeySpec& s : specs) {
            help_.push_back(s);
            values_[s.key] = s.default_value;
        }
    }

    // Config file keys lose to explicit flags; unknown keys fail fast.
    void load_file(const std::string& path) {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot open config file: " + path);
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(in);
        } catch (const nlohmann::json::exception& e) {
            throw ConfigError("bad JSON in " + path + ": " + e.what());
        }
        // a run manifest doubles as a config file
        if (j.contains("config") && j["config"].is_object()) j = j["config"];
        for (const auto& [key, value] : j.items()) {
            if (!values_.count(key)) throw ConfigError(unknown_key_message(key));
            set(key, value.is_string() ? value.get<std::string>() : value.dump());
        }
    }

    void set(const std::string& key, const std::string& value) {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(unknown_key_message(key));
        it->second = value;
    }

    bool has(const std::string& key) const {
        auto it = values_.find(key);
        return it != values_.end() && !it->second.empty();
    }

    std::string str(const std::string& key) const {
        auto it = values_.find(key);
        if (it == values_.end()) throw ConfigError(unknown_key_message(key));
        return it->second;
    }

    std::int64_t integer(const std::string& key) const {
        try {
            return std::stoll(str(key));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' wants an integer, got '" + str(key) + "'");
        }
    }

    double real(const std::string& key) const {
        try {
            return std::stod(str(key));
        } catch (const std::exception&) {
            throw ConfigError("config key '" + key + "' wants a number, got '" + str(key) + "'");
        }
    }

    bool boolean(const std::string& key) const {
        const std::string v = str(key);
        if (v == "true" || v == "1") return true;
        if (v == "false" || v == "0") return false;
        throw ConfigError("config key '" + key + "' wants true/false, got '" + v + "'");
    }

    nlohmann::json to_json() const {
        nlohmann::json j;
        for (const auto& [k, v] : values_) j[k] = v;
        return j;
    }

    const std::vector<KeySpec>& help() const { return help_; }

  private:
    std::string unknown_key_message(const std::string& key) const {
        std::string msg = "unknown config key '" + key + "'; valid keys:";
        for (const auto& s : help_) msg += " " + s.key;
        return msg;
    }

    std::map<std::string, std::string> values_;
    std::vector<KeySpec> help_;
};

}  // namespace l3ppi::cli

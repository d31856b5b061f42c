#pragma once

#include "proofloop/core/types.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace proofloop::cli {

enum class KeyType { integer, uint64, number, boolean, string, string_list, int_list };

struct KeySpec {
    std::string name;
    KeyType type;
    nlohmann::json default_value;
    std::vector<std::string> choices;  // allowed values for string keys, empty: any
    bool is_path = false;              // resolved against the config file directory
    std::string help;
};

// Every recognised setting, flags and config file alike.
const std::vector<KeySpec>& known_keys();
const KeySpec* find_key(std::string_view name);

// Parses a textual value (from --set or a flag) for a key. Lists take a
// comma-separated string or a JSON array. Throws ConfigError.
nlohmann::json parse_value(const KeySpec& spec, std::string_view text);

// Config file (JSON):
//   {"default_profile"?: str,
//    "prices"?: {model: {"input", "output", "thinking"?}},   USD per 1M tokens
//    "profiles": {name: {"extends"?: str, "prices"?: {...}, <key>: value, ...}}}
// Keys may be dotted ("llm.provider") or nested objects ({"llm": {"provider": ...}}).
struct ConfigFile {
    std::filesystem::path path;
    nlohmann::json data = nlohmann::json::object();

    static ConfigFile load(const std::filesystem::path& path);
};

// Resolved settings: default < profile < --set overrides < named flags.
class Settings {
public:
    static Settings resolve(const std::optional<ConfigFile>& config, const std::string& profile,
                            const std::vector<std::string>& overrides,
                            const std::map<std::string, std::string>& flags);

    const nlohmann::json& get(std::string_view key) const;
    std::string str(std::string_view key) const;
    int integer(std::string_view key) const;
    std::uint64_t u64(std::string_view key) const;
    double number(std::string_view key) const;
    bool boolean(std::string_view key) const;
    std::vector<std::string> strings(std::string_view key) const;
    std::vector<int> ints(std::string_view key) const;

    // Where a value came from: "default", "profile <name>", "--set", "flag".
    const std::string& source(std::string_view key) const;
    const std::string& profile() const { return profile_; }
    const PriceTable& prices() const { return prices_; }

    ProverConfig prover_config() const;
    nlohmann::json to_json() const;

private:
    void set(const std::string& key, nlohmann::json value, std::string source);

    std::map<std::string, nlohmann::json, std::less<>> values_;
    std::map<std::string, std::string, std::less<>> sources_;
    std::string profile_;
    PriceTable prices_;
};

}  // namespace proofloop::cli

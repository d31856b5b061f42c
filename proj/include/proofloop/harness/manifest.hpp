#pragma once

#include "proofloop/core/types.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace proofloop::harness {

inline constexpr std::string_view kManifestSchema = "proofloop.manifest/1";

struct ManifestEntry {
    std::string id;
    std::string file;     // relative to the dataset root
    std::string theorem;  // declaration name; empty means the id
};

// Schema (JSON):
//   {"schema": "proofloop.manifest/1", "name", "dataset"?, "lean_toolchain", "mathlib_commit",
//    "provenance"?, "entries": [{"id", "file", "theorem"?}]}
struct DatasetManifest {
    std::string name;
    std::string dataset;
    std::string lean_toolchain;
    std::string mathlib_commit;
    std::string provenance;
    std::vector<ManifestEntry> entries;

    // Throws ConfigError on duplicate or empty ids.
    void validate() const;
};

DatasetManifest parse_manifest(const nlohmann::json& j);
DatasetManifest load_manifest(const std::filesystem::path& path);

// Throws ConfigError naming every entry whose file is missing under root.
void validate_paths(const DatasetManifest& manifest, const std::filesystem::path& root);

// Reads every entry's file and cuts out the named declaration as the target.
// Throws InvalidTask when a declaration cannot be found.
std::vector<TheoremTask> load_tasks(const DatasetManifest& manifest, const std::filesystem::path& root);

// A single task from a file and a theorem name.
TheoremTask task_from_file(const std::filesystem::path& file, const std::string& theorem_name,
                           const std::string& dataset = "adhoc");

}  // namespace proofloop::harness

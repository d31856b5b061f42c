#include "proofloop/harness/manifest.hpp"

#include "proofloop/core/errors.hpp"
#include "proofloop/lean/source.hpp"

#include <fstream>
#include <set>
#include <sstream>

namespace proofloop::harness {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InvalidTask("cannot read " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

void DatasetManifest::validate() const {
    std::set<std::string> seen;
    for (const auto& e : entries) {
        if (e.id.empty()) throw ConfigError("manifest '" + name + "': entry with empty id");
        if (e.file.empty()) throw ConfigError("manifest '" + name + "': entry '" + e.id + "' has no file");
        if (!seen.insert(e.id).second) throw ConfigError("manifest '" + name + "': duplicate id '" + e.id + "'");
    }
}

DatasetManifest parse_manifest(const json& j) {
    DatasetManifest m;
    try {
        const auto schema = j.value("schema", std::string(kManifestSchema));
        if (schema != kManifestSchema) throw ConfigError("unsupported manifest schema '" + schema + "'");
        m.name = j.at("name").get<std::string>();
        m.dataset = j.value("dataset", m.name);
        m.lean_toolchain = j.value("lean_toolchain", "");
        m.mathlib_commit = j.value("mathlib_commit", "");
        m.provenance = j.value("provenance", "");
        for (const auto& e : j.at("entries")) {
            m.entries.push_back({e.at("id").get<std::string>(), e.at("file").get<std::string>(), e.value("theorem", "")});
        }
    } catch (const json::exception& e) {
        throw ConfigError(std::string("bad manifest: ") + e.what());
    }
    m.validate();
    return m;
}

DatasetManifest load_manifest(const fs::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open manifest " + path.string());
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError(path.string() + ": " + e.what());
    }
    return parse_manifest(j);
}

void validate_paths(const DatasetManifest& manifest, const fs::path& root) {
    std::string missing;
    std::size_t count = 0;
    for (const auto& e : manifest.entries) {
        if (!fs::is_regular_file(root / e.file)) {
            if (count < 10) missing += "\n  " + e.id + ": " + (root / e.file).string();
            ++count;
        }
    }
    if (count > 0) {
        throw ConfigError(std::to_string(count) + " manifest entries have no file under " + root.string() + missing);
    }
}

TheoremTask task_from_file(const fs::path& file, const std::string& theorem_name, const std::string& dataset) {
    TheoremTask task;
    task.id = theorem_name;
    task.dataset = dataset;
    task.file_content = read_file(file);
    const auto span = lean::find_declaration(task.file_content, theorem_name);
    if (!span) throw InvalidTask("no declaration named '" + theorem_name + "' in " + file.string());
    task.target_theorem = task.file_content.substr(span->begin, span->end - span->begin);
    task.metadata["file"] = file.string();
    validate_task(task);
    return task;
}

std::vector<TheoremTask> load_tasks(const DatasetManifest& manifest, const fs::path& root) {
    std::vector<TheoremTask> tasks;
    tasks.reserve(manifest.entries.size());
    for (const auto& e : manifest.entries) {
        TheoremTask t = task_from_file(root / e.file, e.theorem.empty() ? e.id : e.theorem, manifest.dataset);
        t.id = e.id;
        t.metadata["file"] = e.file;
        tasks.push_back(std::move(t));
    }
    return tasks;
}

}  // namespace proofloop::harness

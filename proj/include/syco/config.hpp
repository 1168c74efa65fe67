#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "syco/client.hpp"
#include "syco/corpus.hpp"
#include "syco/extract.hpp"
#include "syco/jsonl.hpp"
#include "syco/perturb.hpp"

namespace syco {

struct DatasetConfig {
    std::string name;
    std::string path;               // resolved against the config file's directory
    std::string subject;            // optional filter; empty keeps everything
    int subset_size = 0;            // 0 = whole dataset
    std::uint64_t subset_seed = 0;
    int choice_count = 0;           // 0 = any; otherwise enforced per question
};

struct RunConfig {
    std::vector<DatasetConfig> datasets;
    std::vector<ProviderConfig> providers;
    std::vector<Condition> conditions;          // nudged conditions; vanilla is implicit
    json template_overrides = json::object();
    std::string template_version_pin;           // empty keeps the default base name
    std::vector<DelimiterPair> delimiters = default_delimiters();
    std::string cache_dir = "cache";
    std::string output_dir = "out";
    int parallelism = 4;
};

// A config defect with a JSON-pointer-style location, e.g.
// {"/providers/0/endpoint", "endpoint 'x' is not an absolute URL"}.
struct Diagnostic {
    std::string pointer;
    std::string message;
};

std::string to_string(const Diagnostic& d);

// Tolerant parse: records every defect it can find and keeps going, so
// `validate` reports them all in one pass. Unknown keys are defects.
RunConfig parse_run_config(const json& j, std::vector<Diagnostic>& diags);

// Strict parse: ConfigError on the first defect.
RunConfig parse_run_config(const json& j);

// Reads and strictly parses a config file; relative paths are resolved
// against the file's directory.
RunConfig load_run_config(const std::filesystem::path& path);

// Deep, side-effect-free checks for `validate`: dataset files exist and
// load, subject filters match something, subset sizes fit, templates apply.
void check_run_config(const RunConfig& cfg, std::vector<Diagnostic>& diags);

// Fresh TemplateSet with the config's overrides and version pin applied.
TemplateSet templates_from_config(const RunConfig& cfg);

// Loads one configured dataset with choice-count enforcement, subject filter
// and deterministic subsetting applied, in that order.
Dataset load_configured_dataset(const DatasetConfig& dc);

}  // namespace syco

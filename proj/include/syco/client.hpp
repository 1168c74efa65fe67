#pragma once

#include <filesystem>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "syco/extract.hpp"
#include "syco/jsonl.hpp"
#include "syco/perturb.hpp"
#include "syco/synth.hpp"

namespace syco {

// One provider definition from the run config. `kind` selects the transport:
// "http" speaks the OpenAI-compatible chat-completion shape; "synthetic"
// answers locally from BehaviorParams and needs no network or credentials.
// Credentials are only ever named here (auth_env holds the name of an
// environment variable); the token itself never reaches config files, run
// manifests, or archives.
struct ProviderConfig {
    std::string name = "default";
    std::string kind = "http";
    std::string endpoint;  // absolute http(s) URL, e.g. "http://localhost:8000/v1"
    std::string model;
    double temperature = 0.0;
    int max_tokens = 1024;
    int timeout_ms = 30000;
    int max_retries = 3;
    int backoff_ms = 250;  // initial retry delay, doubled per retry
    std::string auth_env;  // empty = no Authorization header

    // kind == "synthetic" only.
    BehaviorParams behavior;
    int synth_latency_ms = 0;  // simulated per-request latency (testing aid)
};

void validate_provider_config(const ProviderConfig& cfg);

// The provider settings exactly as run.json echoes them (credentials appear
// as the environment variable's name only). Lets callers decide whether an
// existing archive was produced by the same provider settings.
json provider_echo(const ProviderConfig& cfg);

struct Transcript {
    std::string case_id;
    std::string model;
    std::string raw_text;  // response payload with any leading trace removed
    std::optional<std::string> reasoning_trace;  // keeps its markers
    std::string finish_reason;
    long long prompt_tokens = 0;
    long long output_tokens = 0;
    long long latency_ms = 0;
    long long created_at = 0;
    int attempts = 1;

    bool operator==(const Transcript&) const = default;
};

json transcript_to_json(const Transcript& t);
Transcript transcript_from_json(const json& j);

// Moves a thinking block sitting at the very start of raw_text into
// reasoning_trace (markers included), so reasoning_trace + raw_text always
// reconstructs the original payload byte for byte. Blocks elsewhere in the
// text are left alone; extraction strips them on its own pass.
void split_leading_reasoning(Transcript& t, const std::vector<DelimiterPair>& delimiters);

class Provider {
  public:
    virtual ~Provider() = default;
    // Throws AuthError (non-retryable), TimeoutError or ProviderError once
    // retries are exhausted. Thread-safe.
    virtual Transcript complete(const PerturbationCase& c) = 0;
    virtual const ProviderConfig& config() const = 0;
};

// Builds an HTTP or synthetic provider from cfg (ConfigError on bad cfg).
std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg);

// One JSON file per key under dir. A hit is returned only when every stored
// key component matches the request; anything else is a miss. Writes publish
// atomically (write-temp-then-rename), so concurrent writers of the same key
// are safe and readers never observe partial entries.
class ResponseCache {
  public:
    explicit ResponseCache(std::filesystem::path dir);

    static std::string key(const std::string& case_id, const std::string& model,
                           double temperature, int max_tokens,
                           const std::string& template_version);

    std::optional<Transcript> load(const std::string& case_id, const std::string& model,
                                   double temperature, int max_tokens,
                                   const std::string& template_version) const;
    void store(const std::string& case_id, const std::string& model, double temperature,
               int max_tokens, const std::string& template_version, const Transcript& t) const;

    const std::filesystem::path& dir() const { return dir_; }

  private:
    std::filesystem::path dir_;
};

struct RunFailure {
    std::string case_id;
    std::string error;  // "timeout" | "provider" | "other"
    std::string message;

    bool operator==(const RunFailure&) const = default;
};

// A completed run on disk: cases.jsonl (the manifest), transcripts.jsonl and
// failures.jsonl sorted by case_id, and run.json (config echo, counts, file
// hashes) written last as the completion marker. No timestamps anywhere, so
// archives of deterministic providers are byte-identical across reruns and
// parallelism levels.
struct RunArchive {
    std::filesystem::path dir;
    std::string dataset;
    std::string template_version;
    long long total = 0;
    long long from_cache = 0;
    long long fetched = 0;
    std::vector<Transcript> transcripts;  // sorted by case_id
    std::vector<RunFailure> failures;     // sorted by case_id
};

// Resolves every manifest case from cache or provider with at most
// `parallelism` requests in flight, then writes the archive. Transient
// per-case failures land in the failure ledger; AuthError aborts the run
// (every subsequent case would fail the same way). Rerunning after an
// interruption only contacts the provider for case_ids missing from the
// cache. Invariant checked before returning:
// |transcripts| + |failures| = |manifest|.
RunArchive run_manifest(const PerturbationManifest& m, Provider& provider,
                        const std::filesystem::path& cache_dir,
                        const std::filesystem::path& archive_dir, int parallelism,
                        const std::vector<DelimiterPair>& delimiters = default_delimiters());

std::vector<Transcript> read_transcripts(const std::filesystem::path& path);
std::vector<RunFailure> read_failures(const std::filesystem::path& path);

// Parsed run.json of an archive directory (Error if absent or malformed).
json read_run_info(const std::filesystem::path& archive_dir);

}  // namespace syco

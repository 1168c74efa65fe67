#define CPPHTTPLIB_OPENSSL_SUPPORT
#include <httplib.h>

#include "syco/client.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cstdlib>
#include <mutex>
#include <thread>

#include "syco/digest.hpp"
#include "syco/errors.hpp"

namespace syco {

namespace {

long long get_ll(const json& j, const char* key) {
    if (j.is_object() && j.contains(key) && j[key].is_number()) return j[key].get<long long>();
    return 0;
}

// "http://host:1234/v1" -> origin "http://host:1234", base path "/v1".
std::pair<std::string, std::string> split_endpoint(const std::string& url) {
    auto scheme_end = url.find("://");
    if (scheme_end == std::string::npos) {
        throw ConfigError("endpoint '" + url + "' is not an absolute URL");
    }
    const std::string scheme = url.substr(0, scheme_end);
    if (scheme != "http" && scheme != "https") {
        throw ConfigError("endpoint scheme must be http or https, got '" + scheme + "'");
    }
    auto path_start = url.find('/', scheme_end + 3);
    if (path_start == std::string::npos) return {url, ""};
    std::string origin = url.substr(0, path_start);
    std::string base = url.substr(path_start);
    while (!base.empty() && base.back() == '/') base.pop_back();
    if (origin.size() == scheme_end + 3) {
        throw ConfigError("endpoint '" + url + "' has an empty host");
    }
    return {origin, base};
}

}  // namespace

json provider_echo(const ProviderConfig& cfg) {
    json j;
    j["name"] = cfg.name;
    j["kind"] = cfg.kind;
    j["model"] = cfg.model;
    j["temperature"] = cfg.temperature;
    j["max_tokens"] = cfg.max_tokens;
    if (cfg.kind == "http") {
        j["endpoint"] = cfg.endpoint;
        j["timeout_ms"] = cfg.timeout_ms;
        j["max_retries"] = cfg.max_retries;
        j["backoff_ms"] = cfg.backoff_ms;
        j["auth_env"] = cfg.auth_env;  // the variable's name, never its value
    } else {
        j["behavior"] = {{"p_correct", cfg.behavior.p_correct},
                         {"f_move", cfg.behavior.f_move},
                         {"sigma", cfg.behavior.sigma},
                         {"seed", cfg.behavior.seed},
                         {"landing", to_string(cfg.behavior.landing)}};
        j["synth_latency_ms"] = cfg.synth_latency_ms;
    }
    return j;
}

namespace {

class HttpProvider final : public Provider {
  public:
    explicit HttpProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {
        std::tie(origin_, base_path_) = split_endpoint(cfg_.endpoint);
    }

    Transcript complete(const PerturbationCase& c) override {
        const std::string body = request_body(c);
        httplib::Headers headers;
        if (!cfg_.auth_env.empty()) headers.emplace("Authorization", "Bearer " + bearer());

        const int total_attempts = cfg_.max_retries + 1;
        int delay_ms = cfg_.backoff_ms;
        std::string last_transport_error;
        for (int attempt = 1;; ++attempt) {
            httplib::Client cli(origin_);
            cli.set_connection_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
            cli.set_read_timeout(std::chrono::milliseconds(cfg_.timeout_ms));
            cli.set_write_timeout(std::chrono::milliseconds(cfg_.timeout_ms));

            const auto started = std::chrono::steady_clock::now();
            auto res = cli.Post(base_path_ + "/chat/completions", headers, body,
                                "application/json");
            const auto elapsed = std::chrono::duration_cast<std::chrono::milliseconds>(
                                     std::chrono::steady_clock::now() - started)
                                     .count();

            if (!res) {
                last_transport_error = httplib::to_string(res.error());
                if (attempt >= total_attempts) {
                    throw TimeoutError("request for case " + c.case_id + " failed after " +
                                       std::to_string(attempt) + " attempts: " +
                                       last_transport_error);
                }
            } else if (res->status == 200) {
                return parse_success(c, res->body, elapsed, attempt);
            } else if (res->status == 401 || res->status == 403) {
                throw AuthError("provider rejected credentials (HTTP " +
                                std::to_string(res->status) + ") for case " + c.case_id);
            } else if (res->status == 429 || res->status >= 500) {
                if (attempt >= total_attempts) throw ProviderError(res->status, res->body);
            } else {
                throw ProviderError(res->status, res->body);  // other 4xx: not transient
            }

            std::this_thread::sleep_for(std::chrono::milliseconds(delay_ms));
            delay_ms *= 2;
        }
    }

    const ProviderConfig& config() const override { return cfg_; }

  private:
    std::string request_body(const PerturbationCase& c) const {
        json messages = json::array();
        if (!c.system_prompt.empty()) {
            messages.push_back({{"role", "system"}, {"content", c.system_prompt}});
        }
        messages.push_back({{"role", "user"}, {"content", c.user_prompt}});
        json body;
        body["model"] = cfg_.model;
        body["messages"] = messages;
        body["temperature"] = cfg_.temperature;
        body["max_tokens"] = cfg_.max_tokens;
        return body.dump();
    }

    Transcript parse_success(const PerturbationCase& c, const std::string& payload,
                             long long latency_ms, int attempts) const {
        json r = json::parse(payload, nullptr, false);
        if (r.is_discarded()) throw ProviderError(200, "response body is not JSON");
        if (!r.contains("choices") || !r["choices"].is_array() || r["choices"].empty() ||
            !r["choices"][0].contains("message") ||
            !r["choices"][0]["message"].contains("content") ||
            !r["choices"][0]["message"]["content"].is_string()) {
            throw ProviderError(200, "response missing choices[0].message.content");
        }
        const json& first = r["choices"][0];
        Transcript t;
        t.case_id = c.case_id;
        t.model = r.value("model", cfg_.model);
        t.raw_text = first["message"]["content"].get<std::string>();
        t.finish_reason = first.value("finish_reason", "");
        if (r.contains("usage")) {
            t.prompt_tokens = get_ll(r["usage"], "prompt_tokens");
            t.output_tokens = get_ll(r["usage"], "completion_tokens");
        }
        t.latency_ms = latency_ms;
        t.created_at = get_ll(r, "created");
        t.attempts = attempts;
        return t;
    }

    // Resolved on first use so fully cached runs never need the variable set.
    const std::string& bearer() {
        std::lock_guard<std::mutex> lock(token_mu_);
        if (!token_) {
            const char* v = std::getenv(cfg_.auth_env.c_str());
            if (v == nullptr || *v == '\0') {
                throw AuthError("environment variable " + cfg_.auth_env +
                                " is not set; it must hold the API token");
            }
            token_ = std::string(v);
        }
        return *token_;
    }

    ProviderConfig cfg_;
    std::string origin_;
    std::string base_path_;
    std::mutex token_mu_;
    std::optional<std::string> token_;
};

class SyntheticProvider final : public Provider {
  public:
    explicit SyntheticProvider(ProviderConfig cfg) : cfg_(std::move(cfg)) {}

    Transcript complete(const PerturbationCase& c) override {
        if (cfg_.synth_latency_ms > 0) {
            std::this_thread::sleep_for(std::chrono::milliseconds(cfg_.synth_latency_ms));
        }
        const int n_q = c.n_q();
        const char vanilla = behave_vanilla(cfg_.behavior, c.question_id, c.answer_key, n_q);
        char choice = vanilla;
        if (c.nudge != NudgeKind::Vanilla) {
            const Condition cond{c.nudge, c.placement};
            choice = behave_perturbed(cfg_.behavior, c.question_id, c.answer_key, vanilla,
                                      *c.suggested, n_q, cond.name());
        }
        Transcript t;
        t.case_id = c.case_id;
        t.model = cfg_.model;
        t.raw_text = std::string("The correct answer is ") + choice + ".";
        t.finish_reason = "stop";
        // Deterministic stand-ins so archives are byte-stable across reruns.
        t.prompt_tokens = static_cast<long long>(c.user_prompt.size());
        t.output_tokens = static_cast<long long>(t.raw_text.size());
        t.latency_ms = 0;
        t.created_at = 0;
        t.attempts = 1;
        return t;
    }

    const ProviderConfig& config() const override { return cfg_; }

  private:
    ProviderConfig cfg_;
};

std::string failure_kind(const Error& e) {
    if (dynamic_cast<const TimeoutError*>(&e)) return "timeout";
    if (dynamic_cast<const ProviderError*>(&e)) return "provider";
    return "other";
}

json failure_to_json(const RunFailure& f) {
    json j;
    j["record"] = "failure";
    j["case_id"] = f.case_id;
    j["error"] = f.error;
    j["message"] = f.message;
    return j;
}

RunFailure failure_from_json(const json& j) {
    RunFailure f;
    f.case_id = j.at("case_id").get<std::string>();
    f.error = j.at("error").get<std::string>();
    f.message = j.at("message").get<std::string>();
    return f;
}

}  // namespace

void validate_provider_config(const ProviderConfig& cfg) {
    if (cfg.name.empty()) throw ConfigError("provider name must not be empty");
    if (cfg.kind != "http" && cfg.kind != "synthetic") {
        throw ConfigError("provider kind must be 'http' or 'synthetic', got '" + cfg.kind + "'");
    }
    if (cfg.model.empty()) throw ConfigError("provider '" + cfg.name + "' needs a model id");
    if (cfg.temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (cfg.max_tokens < 1) throw ConfigError("max_tokens must be positive");
    if (cfg.max_retries < 0) throw ConfigError("max_retries must be >= 0");
    if (cfg.backoff_ms < 0) throw ConfigError("backoff_ms must be >= 0");
    if (cfg.kind == "http") {
        if (cfg.timeout_ms < 1) throw ConfigError("timeout_ms must be positive");
        split_endpoint(cfg.endpoint);  // validates shape
    } else {
        validate_params(cfg.behavior);
        if (cfg.synth_latency_ms < 0) throw ConfigError("synth_latency_ms must be >= 0");
    }
}

json transcript_to_json(const Transcript& t) {
    json j;
    j["record"] = "transcript";
    j["case_id"] = t.case_id;
    j["model"] = t.model;
    j["raw_text"] = t.raw_text;
    j["reasoning_trace"] = t.reasoning_trace ? json(*t.reasoning_trace) : json(nullptr);
    j["finish_reason"] = t.finish_reason;
    j["prompt_tokens"] = t.prompt_tokens;
    j["output_tokens"] = t.output_tokens;
    j["latency_ms"] = t.latency_ms;
    j["created_at"] = t.created_at;
    j["attempts"] = t.attempts;
    return j;
}

Transcript transcript_from_json(const json& j) {
    if (!j.is_object() || j.value("record", "") != "transcript") {
        throw Error("not a transcript record");
    }
    Transcript t;
    t.case_id = j.at("case_id").get<std::string>();
    t.model = j.at("model").get<std::string>();
    t.raw_text = j.at("raw_text").get<std::string>();
    if (j.contains("reasoning_trace") && !j["reasoning_trace"].is_null()) {
        t.reasoning_trace = j["reasoning_trace"].get<std::string>();
    }
    t.finish_reason = j.value("finish_reason", "");
    t.prompt_tokens = get_ll(j, "prompt_tokens");
    t.output_tokens = get_ll(j, "output_tokens");
    t.latency_ms = get_ll(j, "latency_ms");
    t.created_at = get_ll(j, "created_at");
    t.attempts = static_cast<int>(get_ll(j, "attempts"));
    return t;
}

void split_leading_reasoning(Transcript& t, const std::vector<DelimiterPair>& delimiters) {
    for (const auto& p : delimiters) {
        if (t.raw_text.rfind(p.open, 0) != 0) continue;
        StripResult r = strip_reasoning(t.raw_text, delimiters);
        if (r.trace) {
            t.reasoning_trace = std::move(r.trace);
            t.raw_text = std::move(r.answer_text);
        }
        return;
    }
}

std::unique_ptr<Provider> make_provider(const ProviderConfig& cfg) {
    validate_provider_config(cfg);
    if (cfg.kind == "synthetic") return std::make_unique<SyntheticProvider>(cfg);
    return std::make_unique<HttpProvider>(cfg);
}

ResponseCache::ResponseCache(std::filesystem::path dir) : dir_(std::move(dir)) {
    std::filesystem::create_directories(dir_);
}

std::string ResponseCache::key(const std::string& case_id, const std::string& model,
                               double temperature, int max_tokens,
                               const std::string& template_version) {
    const std::string material = std::string("cache-key\x1f") + case_id + "\x1f" + model +
                                 "\x1f" + json(temperature).dump() + "\x1f" +
                                 std::to_string(max_tokens) + "\x1f" + template_version;
    return short_hash(material);
}

std::optional<Transcript> ResponseCache::load(const std::string& case_id,
                                              const std::string& model, double temperature,
                                              int max_tokens,
                                              const std::string& template_version) const {
    const auto path = dir_ / (key(case_id, model, temperature, max_tokens, template_version) +
                              ".json");
    std::error_code ec;
    if (!std::filesystem::exists(path, ec)) return std::nullopt;
    json j;
    try {
        j = json::parse(read_file(path), nullptr, false);
    } catch (const Error&) {
        return std::nullopt;
    }
    if (j.is_discarded() || !j.is_object()) return std::nullopt;
    // A hit requires every key component to match, not just the hash.
    if (j.value("case_id", "") != case_id || j.value("model", "") != model ||
        !j.contains("temperature") || j["temperature"].get<double>() != temperature ||
        get_ll(j, "max_tokens") != max_tokens ||
        j.value("template_version", "") != template_version) {
        return std::nullopt;
    }
    try {
        return transcript_from_json(j.at("transcript"));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

void ResponseCache::store(const std::string& case_id, const std::string& model,
                          double temperature, int max_tokens,
                          const std::string& template_version, const Transcript& t) const {
    json j;
    j["record"] = "cache-entry";
    j["case_id"] = case_id;
    j["model"] = model;
    j["temperature"] = temperature;
    j["max_tokens"] = max_tokens;
    j["template_version"] = template_version;
    j["transcript"] = transcript_to_json(t);
    const auto path = dir_ / (key(case_id, model, temperature, max_tokens, template_version) +
                              ".json");
    atomic_write_file(path, j.dump() + "\n");
}

RunArchive run_manifest(const PerturbationManifest& m, Provider& provider,
                        const std::filesystem::path& cache_dir,
                        const std::filesystem::path& archive_dir, int parallelism,
                        const std::vector<DelimiterPair>& delimiters) {
    if (parallelism < 1) throw RangeError("parallelism must be >= 1");
    const ProviderConfig& cfg = provider.config();
    ResponseCache cache(cache_dir);

    RunArchive ar;
    ar.dir = archive_dir;
    ar.dataset = m.dataset;
    ar.template_version = m.template_version;
    ar.total = static_cast<long long>(m.cases.size());

    std::vector<const PerturbationCase*> missing;
    for (const auto& c : m.cases) {
        if (auto hit = cache.load(c.case_id, cfg.model, cfg.temperature, cfg.max_tokens,
                                  m.template_version)) {
            ar.transcripts.push_back(std::move(*hit));
            ar.from_cache += 1;
        } else {
            missing.push_back(&c);
        }
    }

    if (!missing.empty()) {
        std::vector<std::optional<Transcript>> done(missing.size());
        std::vector<std::optional<RunFailure>> failed(missing.size());
        std::atomic<std::size_t> next{0};
        std::atomic<bool> aborted{false};
        std::exception_ptr fatal;
        std::mutex fatal_mu;

        auto worker = [&]() {
            for (;;) {
                if (aborted.load()) return;
                const std::size_t i = next.fetch_add(1);
                if (i >= missing.size()) return;
                const PerturbationCase& c = *missing[i];
                try {
                    Transcript t = provider.complete(c);
                    split_leading_reasoning(t, delimiters);
                    cache.store(c.case_id, cfg.model, cfg.temperature, cfg.max_tokens,
                                m.template_version, t);
                    done[i] = std::move(t);
                } catch (const AuthError&) {
                    // Bad credentials fail every case identically; stop the run.
                    {
                        std::lock_guard<std::mutex> lock(fatal_mu);
                        if (!fatal) fatal = std::current_exception();
                    }
                    aborted.store(true);
                    return;
                } catch (const Error& e) {
                    failed[i] = RunFailure{c.case_id, failure_kind(e), e.what()};
                } catch (const std::exception& e) {
                    failed[i] = RunFailure{c.case_id, "other", e.what()};
                }
            }
        };

        const std::size_t pool =
            std::min<std::size_t>(static_cast<std::size_t>(parallelism), missing.size());
        std::vector<std::thread> threads;
        threads.reserve(pool);
        for (std::size_t i = 0; i < pool; ++i) threads.emplace_back(worker);
        for (auto& t : threads) t.join();
        if (fatal) std::rethrow_exception(fatal);

        for (std::size_t i = 0; i < missing.size(); ++i) {
            if (done[i]) {
                ar.transcripts.push_back(std::move(*done[i]));
                ar.fetched += 1;
            } else if (failed[i]) {
                ar.failures.push_back(std::move(*failed[i]));
            }
        }
    }

    std::sort(ar.transcripts.begin(), ar.transcripts.end(),
              [](const Transcript& a, const Transcript& b) { return a.case_id < b.case_id; });
    std::sort(ar.failures.begin(), ar.failures.end(),
              [](const RunFailure& a, const RunFailure& b) { return a.case_id < b.case_id; });

    for (std::size_t i = 1; i < ar.transcripts.size(); ++i) {
        if (ar.transcripts[i].case_id == ar.transcripts[i - 1].case_id) {
            throw InvariantError("duplicate transcript for case " + ar.transcripts[i].case_id);
        }
    }
    if (static_cast<long long>(ar.transcripts.size() + ar.failures.size()) != ar.total) {
        throw InvariantError(
            "archive incomplete: " + std::to_string(ar.transcripts.size()) + " transcripts + " +
            std::to_string(ar.failures.size()) + " failures != " + std::to_string(ar.total) +
            " cases");
    }

    std::filesystem::create_directories(archive_dir);
    save_manifest(m, archive_dir / "cases.jsonl");
    {
        std::vector<json> recs;
        recs.reserve(ar.transcripts.size());
        for (const auto& t : ar.transcripts) recs.push_back(transcript_to_json(t));
        write_jsonl(archive_dir / "transcripts.jsonl", recs);
    }
    {
        std::vector<json> recs;
        recs.reserve(ar.failures.size());
        for (const auto& f : ar.failures) recs.push_back(failure_to_json(f));
        write_jsonl(archive_dir / "failures.jsonl", recs);
    }

    // run.json goes last: its presence marks a complete archive. It carries
    // no timestamps and no cache-hit counters, so a resumed run finishes with
    // the same bytes as an uninterrupted one.
    json run;
    run["record"] = "run";
    run["dataset"] = m.dataset;
    run["template_version"] = m.template_version;
    run["provider"] = provider_echo(cfg);
    {
        json d = json::array();
        for (const auto& p : delimiters) d.push_back({{"open", p.open}, {"close", p.close}});
        run["delimiters"] = d;
    }
    run["counts"] = {{"cases", ar.total},
                     {"transcripts", static_cast<long long>(ar.transcripts.size())},
                     {"failures", static_cast<long long>(ar.failures.size())}};
    run["sha256"] = {
        {"cases", sha256_file((archive_dir / "cases.jsonl").string())},
        {"transcripts", sha256_file((archive_dir / "transcripts.jsonl").string())},
        {"failures", sha256_file((archive_dir / "failures.jsonl").string())}};
    atomic_write_file(archive_dir / "run.json", run.dump(2) + "\n");
    return ar;
}

std::vector<Transcript> read_transcripts(const std::filesystem::path& path) {
    std::vector<Transcript> out;
    for_each_jsonl(path, [&](std::size_t line, const json& j) {
        try {
            out.push_back(transcript_from_json(j));
        } catch (const std::exception& e) {
            throw ParseError(line, e.what());
        }
    });
    return out;
}

std::vector<RunFailure> read_failures(const std::filesystem::path& path) {
    std::vector<RunFailure> out;
    for_each_jsonl(path, [&](std::size_t line, const json& j) {
        try {
            out.push_back(failure_from_json(j));
        } catch (const std::exception& e) {
            throw ParseError(line, e.what());
        }
    });
    return out;
}

json read_run_info(const std::filesystem::path& archive_dir) {
    const auto path = archive_dir / "run.json";
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded() || !j.is_object() || j.value("record", "") != "run") {
        throw Error("malformed run manifest at " + path.string());
    }
    return j;
}

}  // namespace syco

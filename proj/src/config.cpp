#include "syco/config.hpp"

#include <set>

#include "syco/errors.hpp"

namespace syco {

namespace {

using Diags = std::vector<Diagnostic>;

void add(Diags& d, std::string ptr, std::string msg) {
    d.push_back({std::move(ptr), std::move(msg)});
}

void check_keys(const json& j, const std::set<std::string>& allowed, const std::string& ptr,
                Diags& d) {
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) add(d, ptr + "/" + it.key(), "unknown key");
    }
}

std::string get_string(const json& j, const char* key, const std::string& ptr, Diags& d,
                       bool required, const std::string& fallback = "") {
    if (!j.contains(key)) {
        if (required) add(d, ptr + "/" + key, "required key is missing");
        return fallback;
    }
    if (!j[key].is_string()) {
        add(d, ptr + "/" + key, "must be a string");
        return fallback;
    }
    return j[key].get<std::string>();
}

long long get_int(const json& j, const char* key, const std::string& ptr, Diags& d,
                  long long fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number_integer()) {
        add(d, ptr + "/" + key, "must be an integer");
        return fallback;
    }
    return j[key].get<long long>();
}

double get_double(const json& j, const char* key, const std::string& ptr, Diags& d,
                  double fallback) {
    if (!j.contains(key)) return fallback;
    if (!j[key].is_number()) {
        add(d, ptr + "/" + key, "must be a number");
        return fallback;
    }
    return j[key].get<double>();
}

void parse_datasets(const json& j, RunConfig& cfg, Diags& d) {
    if (!j.contains("datasets")) {
        add(d, "/datasets", "at least one dataset is required");
        return;
    }
    if (!j["datasets"].is_array() || j["datasets"].empty()) {
        add(d, "/datasets", "must be a non-empty array");
        return;
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < j["datasets"].size(); ++i) {
        const std::string ptr = "/datasets/" + std::to_string(i);
        const json& e = j["datasets"][i];
        if (!e.is_object()) {
            add(d, ptr, "must be an object");
            continue;
        }
        check_keys(e, {"name", "path", "subject", "subset", "choice_count"}, ptr, d);
        DatasetConfig dc;
        dc.name = get_string(e, "name", ptr, d, true);
        dc.path = get_string(e, "path", ptr, d, true);
        dc.subject = get_string(e, "subject", ptr, d, false);
        if (!dc.name.empty() && !names.insert(dc.name).second) {
            add(d, ptr + "/name", "duplicate dataset name '" + dc.name + "'");
        }
        if (e.contains("subset")) {
            const std::string sptr = ptr + "/subset";
            if (!e["subset"].is_object()) {
                add(d, sptr, "must be an object {size, seed}");
            } else {
                check_keys(e["subset"], {"size", "seed"}, sptr, d);
                long long size = get_int(e["subset"], "size", sptr, d, 0);
                if (size < 1) add(d, sptr + "/size", "must be a positive integer");
                dc.subset_size = static_cast<int>(size);
                long long seed = get_int(e["subset"], "seed", sptr, d, 0);
                dc.subset_seed = static_cast<std::uint64_t>(seed);
            }
        }
        long long cc = get_int(e, "choice_count", ptr, d, 0);
        if (e.contains("choice_count") && (cc < 2 || cc > 26)) {
            add(d, ptr + "/choice_count", "must be in 2..26");
        } else {
            dc.choice_count = static_cast<int>(cc);
        }
        cfg.datasets.push_back(std::move(dc));
    }
}

void parse_behavior(const json& e, BehaviorParams& b, const std::string& ptr, Diags& d) {
    if (!e.is_object()) {
        add(d, ptr, "must be an object");
        return;
    }
    check_keys(e, {"p_correct", "f_move", "sigma", "seed", "landing"}, ptr, d);
    b.p_correct = get_double(e, "p_correct", ptr, d, b.p_correct);
    b.f_move = get_double(e, "f_move", ptr, d, b.f_move);
    b.sigma = get_double(e, "sigma", ptr, d, b.sigma);
    b.seed = static_cast<std::uint64_t>(get_int(e, "seed", ptr, d, 0));
    if (e.contains("landing")) {
        try {
            b.landing = landing_from_string(get_string(e, "landing", ptr, d, false));
        } catch (const ConfigError& err) {
            add(d, ptr + "/landing", err.what());
        }
    }
}

void parse_providers(const json& j, RunConfig& cfg, Diags& d) {
    if (!j.contains("providers")) {
        add(d, "/providers", "at least one provider is required");
        return;
    }
    if (!j["providers"].is_array() || j["providers"].empty()) {
        add(d, "/providers", "must be a non-empty array");
        return;
    }
    std::set<std::string> names;
    for (std::size_t i = 0; i < j["providers"].size(); ++i) {
        const std::string ptr = "/providers/" + std::to_string(i);
        const json& e = j["providers"][i];
        if (!e.is_object()) {
            add(d, ptr, "must be an object");
            continue;
        }
        check_keys(e,
                   {"name", "kind", "endpoint", "model", "temperature", "max_tokens",
                    "timeout_ms", "max_retries", "backoff_ms", "auth_env", "behavior",
                    "synth_latency_ms"},
                   ptr, d);
        const std::size_t before = d.size();
        ProviderConfig pc;
        pc.name = get_string(e, "name", ptr, d, true);
        pc.kind = get_string(e, "kind", ptr, d, false, pc.kind);
        pc.endpoint = get_string(e, "endpoint", ptr, d, false);
        pc.model = get_string(e, "model", ptr, d, true);
        pc.temperature = get_double(e, "temperature", ptr, d, pc.temperature);
        pc.max_tokens = static_cast<int>(get_int(e, "max_tokens", ptr, d, pc.max_tokens));
        pc.timeout_ms = static_cast<int>(get_int(e, "timeout_ms", ptr, d, pc.timeout_ms));
        pc.max_retries = static_cast<int>(get_int(e, "max_retries", ptr, d, pc.max_retries));
        pc.backoff_ms = static_cast<int>(get_int(e, "backoff_ms", ptr, d, pc.backoff_ms));
        pc.auth_env = get_string(e, "auth_env", ptr, d, false);
        if (e.contains("behavior")) parse_behavior(e["behavior"], pc.behavior, ptr + "/behavior", d);
        pc.synth_latency_ms =
            static_cast<int>(get_int(e, "synth_latency_ms", ptr, d, pc.synth_latency_ms));
        const bool shape_ok = d.size() == before;
        if (!pc.name.empty() && !names.insert(pc.name).second) {
            add(d, ptr + "/name", "duplicate provider name '" + pc.name + "'");
        }
        // A duplicate name is a collection-level defect; it must not hide
        // semantic problems inside the element itself.
        if (shape_ok) {
            try {
                validate_provider_config(pc);
            } catch (const Error& err) {
                add(d, ptr, err.what());
            }
        }
        cfg.providers.push_back(std::move(pc));
    }
}

void parse_conditions(const json& j, RunConfig& cfg, Diags& d) {
    if (!j.contains("conditions")) {
        cfg.conditions = {{NudgeKind::Basic, RolePlacement::UserIntegrated},
                          {NudgeKind::Expert, RolePlacement::UserIntegrated}};
        return;
    }
    if (!j["conditions"].is_array() || j["conditions"].empty()) {
        add(d, "/conditions", "must be a non-empty array of condition names");
        return;
    }
    std::set<std::string> seen;
    for (std::size_t i = 0; i < j["conditions"].size(); ++i) {
        const std::string ptr = "/conditions/" + std::to_string(i);
        if (!j["conditions"][i].is_string()) {
            add(d, ptr, "must be a condition name string");
            continue;
        }
        const std::string name = j["conditions"][i].get<std::string>();
        if (!seen.insert(name).second) {
            add(d, ptr, "duplicate condition '" + name + "'");
            continue;
        }
        try {
            Condition c = condition_from_name(name);
            if (c.nudge == NudgeKind::Vanilla) {
                add(d, ptr, "the vanilla pass always runs; list only nudged conditions");
                continue;
            }
            validate_condition(c);
            cfg.conditions.push_back(c);
        } catch (const Error& err) {
            add(d, ptr, err.what());
        }
    }
}

void parse_templates(const json& j, RunConfig& cfg, Diags& d) {
    if (!j.contains("templates")) return;
    const json& e = j["templates"];
    if (!e.is_object()) {
        add(d, "/templates", "must be an object");
        return;
    }
    check_keys(e, {"overrides", "version_pin"}, "/templates", d);
    if (e.contains("overrides")) {
        if (!e["overrides"].is_object()) {
            add(d, "/templates/overrides", "must be an object of template name -> text");
        } else {
            bool ok = true;
            for (auto it = e["overrides"].begin(); it != e["overrides"].end(); ++it) {
                if (!it.value().is_string()) {
                    add(d, "/templates/overrides/" + it.key(), "must be a string");
                    ok = false;
                }
            }
            if (ok) {
                try {
                    TemplateSet t;
                    t.apply_overrides(e["overrides"]);
                    cfg.template_overrides = e["overrides"];
                } catch (const Error& err) {
                    add(d, "/templates/overrides", err.what());
                }
            }
        }
    }
    cfg.template_version_pin = get_string(e, "version_pin", "/templates", d, false);
}

void parse_extraction(const json& j, RunConfig& cfg, Diags& d) {
    if (!j.contains("extraction")) return;
    const json& e = j["extraction"];
    if (!e.is_object()) {
        add(d, "/extraction", "must be an object");
        return;
    }
    check_keys(e, {"delimiters"}, "/extraction", d);
    if (!e.contains("delimiters")) return;
    if (!e["delimiters"].is_array() || e["delimiters"].empty()) {
        add(d, "/extraction/delimiters", "must be a non-empty array of {open, close}");
        return;
    }
    std::vector<DelimiterPair> pairs;
    for (std::size_t i = 0; i < e["delimiters"].size(); ++i) {
        const std::string ptr = "/extraction/delimiters/" + std::to_string(i);
        const json& p = e["delimiters"][i];
        if (!p.is_object()) {
            add(d, ptr, "must be an object {open, close}");
            continue;
        }
        check_keys(p, {"open", "close"}, ptr, d);
        DelimiterPair dp;
        dp.open = get_string(p, "open", ptr, d, true);
        dp.close = get_string(p, "close", ptr, d, true);
        if (dp.open.empty() || dp.close.empty()) continue;
        if (dp.open == dp.close) {
            add(d, ptr, "open and close markers must differ");
            continue;
        }
        pairs.push_back(std::move(dp));
    }
    if (!pairs.empty()) cfg.delimiters = std::move(pairs);
}

}  // namespace

std::string to_string(const Diagnostic& d) {
    return (d.pointer.empty() ? std::string("/") : d.pointer) + ": " + d.message;
}

RunConfig parse_run_config(const json& j, std::vector<Diagnostic>& diags) {
    RunConfig cfg;
    if (!j.is_object()) {
        add(diags, "", "config must be a JSON object");
        return cfg;
    }
    check_keys(j,
               {"datasets", "providers", "conditions", "templates", "extraction", "cache_dir",
                "output_dir", "parallelism"},
               "", diags);
    parse_datasets(j, cfg, diags);
    parse_providers(j, cfg, diags);
    parse_conditions(j, cfg, diags);
    parse_templates(j, cfg, diags);
    parse_extraction(j, cfg, diags);
    cfg.cache_dir = get_string(j, "cache_dir", "", diags, false, cfg.cache_dir);
    cfg.output_dir = get_string(j, "output_dir", "", diags, false, cfg.output_dir);
    if (cfg.cache_dir.empty()) add(diags, "/cache_dir", "must not be empty");
    if (cfg.output_dir.empty()) add(diags, "/output_dir", "must not be empty");
    long long par = get_int(j, "parallelism", "", diags, cfg.parallelism);
    if (par < 1) {
        add(diags, "/parallelism", "must be >= 1");
    } else {
        cfg.parallelism = static_cast<int>(par);
    }
    return cfg;
}

RunConfig parse_run_config(const json& j) {
    std::vector<Diagnostic> diags;
    RunConfig cfg = parse_run_config(j, diags);
    if (!diags.empty()) throw ConfigError(to_string(diags.front()));
    return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
    json j = json::parse(read_file(path), nullptr, false);
    if (j.is_discarded()) {
        throw ConfigError("config file " + path.string() + " is not valid JSON");
    }
    RunConfig cfg = parse_run_config(j);
    const auto base = std::filesystem::absolute(path).parent_path();
    auto resolve = [&](std::string& p) {
        if (!p.empty() && !std::filesystem::path(p).is_absolute()) {
            p = (base / p).lexically_normal().string();
        }
    };
    for (auto& ds : cfg.datasets) resolve(ds.path);
    resolve(cfg.cache_dir);
    resolve(cfg.output_dir);
    return cfg;
}

void check_run_config(const RunConfig& cfg, std::vector<Diagnostic>& diags) {
    for (std::size_t i = 0; i < cfg.datasets.size(); ++i) {
        const std::string ptr = "/datasets/" + std::to_string(i);
        const DatasetConfig& dc = cfg.datasets[i];
        if (dc.name.empty() || dc.path.empty()) continue;  // already reported by the parser
        if (!std::filesystem::exists(dc.path)) {
            add(diags, ptr + "/path", "file not found: " + dc.path);
            continue;
        }
        try {
            load_configured_dataset(dc);
        } catch (const Error& e) {
            add(diags, ptr, e.what());
        }
    }
    try {
        templates_from_config(cfg);
    } catch (const Error& e) {
        add(diags, "/templates", e.what());
    }
}

TemplateSet templates_from_config(const RunConfig& cfg) {
    TemplateSet t;
    t.apply_overrides(cfg.template_overrides);
    if (!cfg.template_version_pin.empty()) t.pin_version(cfg.template_version_pin);
    return t;
}

Dataset load_configured_dataset(const DatasetConfig& dc) {
    std::optional<int> declared;
    if (dc.choice_count > 0) declared = dc.choice_count;
    Dataset ds = load_dataset(dc.path, dc.name, false, nullptr, declared);
    if (!dc.subject.empty()) {
        ds = filter_subject(ds, dc.subject);
        if (ds.questions.empty()) {
            throw ValidationError(dc.name, "subject '" + dc.subject + "' matches no questions");
        }
    }
    if (dc.subset_size > 0) ds = subset(ds, static_cast<std::size_t>(dc.subset_size),
                                        dc.subset_seed);
    return ds;
}

}  // namespace syco

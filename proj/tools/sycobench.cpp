// Command-line front end: validate | import | plan | run | score | report |
// simulate. Every stage is content-addressed — rerunning it with unchanged
// inputs prints "up to date" and touches nothing.
//
// Exit codes: 0 success, 1 usage or configuration problem, 2 runtime failure,
// 3 internal invariant breach.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "syco/client.hpp"
#include "syco/config.hpp"
#include "syco/corpus.hpp"
#include "syco/digest.hpp"
#include "syco/errors.hpp"
#include "syco/extract.hpp"
#include "syco/jsonl.hpp"
#include "syco/metrics.hpp"
#include "syco/perturb.hpp"
#include "syco/report.hpp"
#include "syco/synth.hpp"

namespace fs = std::filesystem;
using syco::json;

namespace {

std::string num(double v, int prec = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*f", prec, v);
    return buf;
}

std::string num_opt(const std::optional<double>& v, int prec = 4) {
    return v ? num(*v, prec) : "-";
}

// ---------------------------------------------------------------------------
// Stage stamps. A stamp records a digest of the stage's inputs and the list
// of files it wrote; the stage is up to date iff the digest matches and all
// outputs still exist.

bool stage_up_to_date(const fs::path& stamp_path, const std::string& stage, const json& inputs) {
    std::error_code ec;
    if (!fs::exists(stamp_path, ec)) return false;
    json j;
    try {
        j = json::parse(syco::read_file(stamp_path), nullptr, false);
    } catch (...) {
        return false;
    }
    if (!j.is_object() || j.value("record", "") != "stage-stamp") return false;
    if (j.value("stage", "") != stage) return false;
    if (j.value("inputs_sha256", "") != syco::sha256_hex(inputs.dump())) return false;
    if (!j.contains("outputs") || !j["outputs"].is_array()) return false;
    for (const auto& o : j["outputs"]) {
        if (!o.is_string()) return false;
        if (!fs::exists(stamp_path.parent_path() / o.get<std::string>(), ec)) return false;
    }
    return true;
}

void stamp_write(const fs::path& stamp_path, const std::string& stage, const json& inputs,
                 const std::vector<std::string>& outputs) {
    json j;
    j["record"] = "stage-stamp";
    j["stage"] = stage;
    j["inputs_sha256"] = syco::sha256_hex(inputs.dump());
    j["outputs"] = outputs;
    syco::atomic_write_file(stamp_path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Shared options and config plumbing.

struct CommonOpts {
    std::string config_path;
    std::string out_dir;                   // --out, overrides config output_dir
    int parallelism = 0;                   // --parallelism, overrides config
    std::vector<std::string> providers;    // --provider filters
    std::vector<std::string> conditions;   // --condition filters
};

syco::RunConfig load_cfg(const CommonOpts& o) {
    syco::RunConfig cfg = syco::load_run_config(o.config_path);
    if (!o.out_dir.empty()) {
        cfg.output_dir = fs::absolute(o.out_dir).lexically_normal().string();
    }
    if (o.parallelism > 0) cfg.parallelism = o.parallelism;
    return cfg;
}

std::vector<syco::ProviderConfig> selected_providers(const syco::RunConfig& cfg,
                                                     const std::vector<std::string>& filter) {
    if (filter.empty()) return cfg.providers;
    std::vector<syco::ProviderConfig> out;
    for (const auto& name : filter) {
        bool found = false;
        for (const auto& p : cfg.providers) {
            if (p.name == name) {
                out.push_back(p);
                found = true;
                break;
            }
        }
        if (!found) throw syco::ConfigError("provider '" + name + "' is not in the config");
    }
    return out;
}

std::vector<syco::Condition> selected_conditions(const syco::RunConfig& cfg,
                                                 const std::vector<std::string>& filter) {
    if (filter.empty()) return cfg.conditions;
    std::vector<syco::Condition> out;
    for (const auto& c : cfg.conditions) {
        for (const auto& name : filter) {
            if (c.name() == name) {
                out.push_back(c);
                break;
            }
        }
    }
    for (const auto& name : filter) {
        syco::Condition want = syco::condition_from_name(name);  // rejects unknown names
        bool found = false;
        for (const auto& c : out) found = found || c == want;
        if (!found) throw syco::ConfigError("condition '" + name + "' is not in the config");
    }
    return out;
}

json delimiters_json(const std::vector<syco::DelimiterPair>& delimiters) {
    json d = json::array();
    for (const auto& p : delimiters) d.push_back({{"open", p.open}, {"close", p.close}});
    return d;
}

// ---------------------------------------------------------------------------
// validate

int cmd_validate(const CommonOpts& o) {
    std::vector<syco::Diagnostic> diags;
    syco::RunConfig cfg;
    try {
        json j = json::parse(syco::read_file(o.config_path), nullptr, false);
        if (j.is_discarded()) {
            diags.push_back({"", "config file is not valid JSON"});
        } else {
            cfg = syco::parse_run_config(j, diags);
            const auto base = fs::absolute(o.config_path).parent_path();
            auto resolve = [&](std::string& p) {
                if (!p.empty() && !fs::path(p).is_absolute()) {
                    p = (base / p).lexically_normal().string();
                }
            };
            for (auto& ds : cfg.datasets) resolve(ds.path);
            resolve(cfg.cache_dir);
            resolve(cfg.output_dir);
            syco::check_run_config(cfg, diags);
        }
    } catch (const syco::Error& e) {
        diags.push_back({"", e.what()});
    }
    if (diags.empty()) {
        std::cout << "configuration OK: " << cfg.datasets.size() << " dataset(s), "
                  << cfg.providers.size() << " provider(s), " << cfg.conditions.size()
                  << " condition(s)\n";
        return 0;
    }
    for (const auto& d : diags) std::cout << "error: " << to_string(d) << "\n";
    std::cout << diags.size() << " problem(s) found\n";
    return 1;
}

// ---------------------------------------------------------------------------
// import

int cmd_import(const std::string& src, const std::string& dst, const std::string& name) {
    if (!fs::exists(src)) throw syco::ConfigError("input file not found: " + src);
    const fs::path dst_path = fs::absolute(dst).lexically_normal();
    const fs::path stamp = dst_path.string() + ".stamp.json";
    json inputs = {{"src_sha256", syco::sha256_file(src)},
                   {"name", name},
                   {"dst", dst_path.filename().string()}};
    if (stage_up_to_date(stamp, "import", inputs)) {
        std::cout << "import " << name << ": up to date\n";
        return 0;
    }
    const std::size_t n = syco::import_dataset(src, dst_path, name);
    stamp_write(stamp, "import", inputs, {dst_path.filename().string()});
    std::cout << "import " << name << ": " << n << " question(s) -> " << dst_path.string()
              << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// plan

int cmd_plan(const CommonOpts& o) {
    syco::RunConfig cfg = load_cfg(o);
    const auto conditions = selected_conditions(cfg, o.conditions);
    if (conditions.empty()) throw syco::ConfigError("no conditions selected");
    syco::TemplateSet tpl = syco::templates_from_config(cfg);
    json cond_names = json::array();
    for (const auto& c : conditions) cond_names.push_back(c.name());

    for (const auto& dc : cfg.datasets) {
        if (!fs::exists(dc.path)) {
            throw syco::ConfigError("dataset file not found: " + dc.path);
        }
        const fs::path dir = fs::path(cfg.output_dir) / dc.name;
        const fs::path manifest_path = dir / "cases.jsonl";
        json inputs = {{"dataset_sha256", syco::sha256_file(dc.path)},
                       {"name", dc.name},
                       {"subject", dc.subject},
                       {"subset_size", dc.subset_size},
                       {"subset_seed", dc.subset_seed},
                       {"choice_count", dc.choice_count},
                       {"conditions", cond_names},
                       {"template_version", tpl.version()}};
        if (stage_up_to_date(dir / "plan.stamp.json", "plan", inputs)) {
            std::cout << "plan " << dc.name << ": up to date\n";
            continue;
        }
        syco::Dataset ds = syco::load_configured_dataset(dc);
        syco::PerturbationManifest m = syco::plan_run(ds, conditions, tpl);
        syco::save_manifest(m, manifest_path);
        stamp_write(dir / "plan.stamp.json", "plan", inputs, {"cases.jsonl"});
        std::cout << "plan " << dc.name << ": " << m.cases.size() << " case(s) from "
                  << ds.questions.size() << " question(s), " << conditions.size()
                  << " condition(s) -> " << manifest_path.string() << "\n";
    }
    return 0;
}

// ---------------------------------------------------------------------------
// run

bool archive_up_to_date(const fs::path& archive_dir, const std::string& cases_sha,
                        const syco::PerturbationManifest& m, const json& expected_provider,
                        const json& expected_delims) {
    try {
        json info = syco::read_run_info(archive_dir);
        if (info.value("dataset", "") != m.dataset) return false;
        if (info.value("template_version", "") != m.template_version) return false;
        if (info["provider"] != expected_provider) return false;
        if (info["delimiters"] != expected_delims) return false;
        if (info["counts"].value("failures", -1) != 0) return false;
        if (info["sha256"].value("cases", "") != cases_sha) return false;
        for (const char* f : {"cases.jsonl", "transcripts.jsonl", "failures.jsonl"}) {
            if (!fs::exists(archive_dir / f)) return false;
            if (info["sha256"].value(fs::path(f).stem().string(), "") !=
                syco::sha256_file(archive_dir / f)) {
                return false;
            }
        }
        return true;
    } catch (...) {
        return false;
    }
}

int cmd_run(const CommonOpts& o) {
    syco::RunConfig cfg = load_cfg(o);
    const auto providers = selected_providers(cfg, o.providers);
    syco::TemplateSet tpl = syco::templates_from_config(cfg);
    const json delims = delimiters_json(cfg.delimiters);
    long long failed_total = 0;

    for (const auto& dc : cfg.datasets) {
        const fs::path manifest_path = fs::path(cfg.output_dir) / dc.name / "cases.jsonl";
        if (!fs::exists(manifest_path)) {
            throw syco::ConfigError("no manifest for dataset '" + dc.name + "' at " +
                                    manifest_path.string() + "; run `sycobench plan` first");
        }
        syco::PerturbationManifest m = syco::load_manifest(manifest_path);
        if (m.template_version != tpl.version()) {
            throw syco::ConfigError("manifest " + manifest_path.string() +
                                    " was planned with template version '" + m.template_version +
                                    "' but the config builds '" + tpl.version() +
                                    "'; run `sycobench plan` again");
        }
        const std::string cases_sha = syco::sha256_file(manifest_path);
        for (const auto& pc : providers) {
            const fs::path archive_dir = fs::path(cfg.output_dir) / dc.name / pc.name / "archive";
            const json echo = syco::provider_echo(pc);
            if (archive_up_to_date(archive_dir, cases_sha, m, echo, delims)) {
                std::cout << "run " << dc.name << "/" << pc.name << ": up to date\n";
                continue;
            }
            auto provider = syco::make_provider(pc);
            syco::RunArchive a =
                syco::run_manifest(m, *provider, fs::path(cfg.cache_dir) / pc.name, archive_dir,
                                   cfg.parallelism, cfg.delimiters);
            std::cout << "run " << dc.name << "/" << pc.name << ": " << a.total << " case(s), "
                      << a.from_cache << " from cache, " << a.fetched << " fetched, "
                      << a.failures.size() << " failed\n";
            std::size_t shown = 0;
            for (const auto& f : a.failures) {
                if (shown++ == 5) {
                    std::cerr << "  ... " << (a.failures.size() - 5) << " more\n";
                    break;
                }
                std::cerr << "  failed " << f.case_id << " (" << f.error << "): " << f.message
                          << "\n";
            }
            failed_total += static_cast<long long>(a.failures.size());
        }
    }
    if (failed_total > 0) {
        std::cerr << "error: " << failed_total
                  << " case(s) failed; re-run to retry them (resolved cases are cached)\n";
        return 2;
    }
    return 0;
}

// ---------------------------------------------------------------------------
// score

std::vector<syco::DelimiterPair> delimiters_from_json(const json& d) {
    std::vector<syco::DelimiterPair> out;
    for (const auto& p : d) out.push_back({p.at("open").get<std::string>(),
                                           p.at("close").get<std::string>()});
    return out;
}

// Pure function of the archive directory: join transcripts to manifest cases,
// parse each response, and emit one trial record per case in manifest order.
std::vector<syco::TrialRecord> score_archive(const fs::path& archive_dir,
                                             const std::vector<syco::DelimiterPair>& delims) {
    syco::PerturbationManifest m = syco::load_manifest(archive_dir / "cases.jsonl");
    const auto transcripts = syco::read_transcripts(archive_dir / "transcripts.jsonl");

    std::map<std::string, const syco::PerturbationCase*> case_by_id;
    for (const auto& c : m.cases) case_by_id[c.case_id] = &c;

    std::map<std::string, std::optional<char>> parsed;
    for (const auto& t : transcripts) {
        auto it = case_by_id.find(t.case_id);
        if (it == case_by_id.end()) {
            throw syco::InvariantError("transcript for unknown case '" + t.case_id + "'");
        }
        // The leading reasoning block already sits in reasoning_trace; this
        // strip pass removes any blocks elsewhere in the answer text.
        syco::StripResult sr = syco::strip_reasoning(t.raw_text, delims);
        parsed[t.case_id] = syco::extract_choice(sr.answer_text, it->second->labels).value;
    }

    std::map<std::string, std::optional<char>> vanilla_choice;
    for (const auto& c : m.cases) {
        if (c.nudge != syco::NudgeKind::Vanilla) continue;
        auto it = parsed.find(c.case_id);
        if (it == parsed.end()) {
            throw syco::InvariantError("archive incomplete: no transcript for case '" +
                                       c.case_id + "'");
        }
        vanilla_choice[c.question_id] = it->second;
    }

    std::vector<syco::TrialRecord> out;
    out.reserve(m.cases.size());
    for (const auto& c : m.cases) {
        auto it = parsed.find(c.case_id);
        if (it == parsed.end()) {
            throw syco::InvariantError("archive incomplete: no transcript for case '" +
                                       c.case_id + "'");
        }
        syco::TrialRecord r;
        r.question_id = c.question_id;
        r.n_q = c.n_q();
        r.answer_key = c.answer_key;
        if (c.nudge == syco::NudgeKind::Vanilla) {
            r.is_vanilla = true;
        } else {
            r.condition = syco::Condition{c.nudge, c.placement};
            r.suggested = c.suggested;
            auto vit = vanilla_choice.find(c.question_id);
            if (vit == vanilla_choice.end()) {
                throw syco::InvariantError("question '" + c.question_id +
                                           "' has nudged cases but no vanilla case");
            }
            r.vanilla_choice = vit->second;
        }
        r.choice = it->second;
        out.push_back(std::move(r));
    }
    return out;
}

void print_summaries(const std::vector<syco::MetricsSummary>& sums) {
    for (const auto& s : sums) {
        std::cout << "  " << s.condition << " n_q=" << s.n_q << ": " << s.n_questions
                  << " question(s), |Q_c|=" << s.n_in_qc << ", acc "
                  << num(s.vanilla_accuracy * 100, 2) << "% -> "
                  << num(s.perturbed_accuracy * 100, 2) << "%, S_r=" << num_opt(s.s_r)
                  << ", C_true=" << num(s.c_true) << ", S_a=" << num_opt(s.s_a) << "\n";
    }
}

int cmd_score(const CommonOpts& o) {
    syco::RunConfig cfg = load_cfg(o);
    const auto providers = selected_providers(cfg, o.providers);
    for (const auto& dc : cfg.datasets) {
        for (const auto& pc : providers) {
            const fs::path provider_dir = fs::path(cfg.output_dir) / dc.name / pc.name;
            const fs::path archive_dir = provider_dir / "archive";
            if (!fs::exists(archive_dir / "run.json")) {
                throw syco::ConfigError("no archive for " + dc.name + "/" + pc.name + " at " +
                                        archive_dir.string() + "; run `sycobench run` first");
            }
            json info = syco::read_run_info(archive_dir);
            const long long failures = info["counts"].value("failures", 0LL);
            if (failures != 0) {
                throw syco::ValidationError(
                    dc.name + "/" + pc.name,
                    std::to_string(failures) +
                        " unresolved failure(s) in the archive; re-run to resolve them "
                        "before scoring");
            }
            json inputs = {{"cases_sha256", info["sha256"].value("cases", "")},
                           {"transcripts_sha256", info["sha256"].value("transcripts", "")},
                           {"delimiters", info["delimiters"]},
                           {"model", info["provider"].value("model", "")}};
            const fs::path stamp = provider_dir / "score.stamp.json";
            if (stage_up_to_date(stamp, "score", inputs)) {
                std::cout << "score " << dc.name << "/" << pc.name << ": up to date\n";
                continue;
            }
            const auto delims = delimiters_from_json(info["delimiters"]);
            const auto trials = score_archive(archive_dir, delims);
            syco::write_trial_log(provider_dir / "trials.jsonl", trials);
            syco::Accumulator acc = syco::aggregate_serial(trials);
            const std::string model = info["provider"].value("model", "");
            const auto sums = syco::summarize(acc, model, dc.name);
            json out;
            out["record"] = "summary_set";
            out["dataset"] = dc.name;
            out["provider"] = pc.name;
            out["model"] = model;
            out["template_version"] = info.value("template_version", "");
            json arr = json::array();
            for (const auto& s : sums) arr.push_back(syco::summary_to_json(s));
            out["summaries"] = arr;
            syco::atomic_write_file(provider_dir / "summary.json", out.dump(2) + "\n");
            stamp_write(stamp, "score", inputs, {"trials.jsonl", "summary.json"});
            std::cout << "score " << dc.name << "/" << pc.name << ": " << trials.size()
                      << " trial(s)\n";
            print_summaries(sums);
        }
    }
    return 0;
}

// ---------------------------------------------------------------------------
// report

int cmd_report(const CommonOpts& o) {
    syco::RunConfig cfg = load_cfg(o);
    const auto providers = selected_providers(cfg, o.providers);
    std::vector<syco::MetricsSummary> all;
    json files = json::array();
    for (const auto& dc : cfg.datasets) {
        for (const auto& pc : providers) {
            const fs::path path = fs::path(cfg.output_dir) / dc.name / pc.name / "summary.json";
            if (!fs::exists(path)) continue;
            json j = json::parse(syco::read_file(path));
            for (const auto& s : j.at("summaries")) all.push_back(syco::summary_from_json(s));
            files.push_back({{"path", dc.name + "/" + pc.name + "/summary.json"},
                             {"sha256", syco::sha256_file(path)}});
        }
    }
    if (all.empty()) {
        throw syco::ConfigError("no summaries under " + cfg.output_dir +
                                "; run `sycobench score` first");
    }
    syco::ReportSpec spec;
    const fs::path report_dir = fs::path(cfg.output_dir) / "report";
    json inputs = {{"files", files}, {"decimals", spec.decimals}, {"formats", spec.formats}};
    const fs::path stamp = report_dir / "report.stamp.json";
    if (stage_up_to_date(stamp, "report", inputs)) {
        std::cout << "report: up to date\n";
        return 0;
    }
    const auto paths = syco::write_report(all, spec, report_dir);
    std::vector<std::string> rel;
    for (const auto& p : paths) rel.push_back(fs::relative(p, report_dir).generic_string());
    stamp_write(stamp, "report", inputs, rel);
    for (const auto& p : paths) std::cout << "report: wrote " << p.string() << "\n";
    return 0;
}

// ---------------------------------------------------------------------------
// simulate

struct SimOpts {
    double p_correct = 1.0;
    double f_move = 0.0;
    double sigma = 0.0;
    std::uint64_t seed = 0;
    std::string landing = "exclude-suggested";
    int questions = 1000;
    int n_q = 4;
    std::vector<std::string> conditions;
    std::string out_dir = "out/simulate";
};

json expectation_json(const syco::SynthExpectation& e) {
    return {{"s_r", e.s_r}, {"c_true", e.c_true}, {"s_a", e.s_a}};
}

int cmd_simulate(const SimOpts& so) {
    syco::BehaviorParams p;
    p.p_correct = so.p_correct;
    p.f_move = so.f_move;
    p.sigma = so.sigma;
    p.seed = so.seed;
    p.landing = syco::landing_from_string(so.landing);
    syco::validate_params(p);

    std::vector<std::string> cond_names = so.conditions;
    if (cond_names.empty()) cond_names = {"basic"};
    std::vector<syco::Condition> conditions;
    for (const auto& name : cond_names) conditions.push_back(syco::condition_from_name(name));

    const fs::path dir = fs::absolute(so.out_dir).lexically_normal();
    json inputs = {{"p_correct", p.p_correct}, {"f_move", p.f_move},     {"sigma", p.sigma},
                   {"seed", p.seed},           {"landing", so.landing},  {"questions", so.questions},
                   {"n_q", so.n_q},            {"conditions", cond_names}};
    const fs::path stamp = dir / "simulate.stamp.json";
    if (stage_up_to_date(stamp, "simulate", inputs)) {
        std::cout << "simulate: up to date\n";
        return 0;
    }

    const auto trials = syco::simulate_run(p, so.questions, so.n_q, conditions);
    syco::write_trial_log(dir / "trials.jsonl", trials);
    syco::Accumulator acc = syco::aggregate_serial(trials);
    const auto sums = syco::summarize(acc, "synthetic", "synthetic");
    json out;
    out["record"] = "summary_set";
    out["dataset"] = "synthetic";
    out["provider"] = "simulate";
    out["model"] = "synthetic";
    out["template_version"] = "simulate";
    json arr = json::array();
    for (const auto& s : sums) arr.push_back(syco::summary_to_json(s));
    out["summaries"] = arr;
    syco::atomic_write_file(dir / "summary.json", out.dump(2) + "\n");

    // Expected scores under both landing conventions next to the measured
    // ones, so estimator bias is visible at a glance.
    syco::BehaviorParams pa = p;
    pa.landing = syco::LandingConvention::ExcludeSuggested;
    syco::BehaviorParams pb = p;
    pb.landing = syco::LandingConvention::IncludeSuggested;
    json expect;
    expect["record"] = "expectation";
    expect["params"] = {{"p_correct", p.p_correct},
                        {"f_move", p.f_move},
                        {"sigma", p.sigma},
                        {"seed", p.seed},
                        {"landing", to_string(p.landing)}};
    expect["n_q"] = so.n_q;
    expect["questions"] = so.questions;
    expect["analytic"] = {
        {"exclude-suggested", expectation_json(syco::analytic_expectation(pa, so.n_q))},
        {"include-suggested", expectation_json(syco::analytic_expectation(pb, so.n_q))}};
    json measured = json::array();
    for (const auto& s : sums) {
        measured.push_back({{"condition", s.condition},
                            {"s_r", s.s_r ? json(*s.s_r) : json()},
                            {"c_true", s.c_true},
                            {"s_a", s.s_a ? json(*s.s_a) : json()}});
    }
    expect["measured"] = measured;
    syco::atomic_write_file(dir / "expectation.json", expect.dump(2) + "\n");
    stamp_write(stamp, "simulate", inputs,
                {"trials.jsonl", "summary.json", "expectation.json"});

    const syco::SynthExpectation e = syco::analytic_expectation(p, so.n_q);
    std::cout << "simulate: " << so.questions << " question(s), n_q=" << so.n_q << ", landing "
              << so.landing << " -> " << dir.string() << "\n";
    for (const auto& s : sums) {
        std::cout << "  " << s.condition << ": S_r=" << num_opt(s.s_r) << " (E=" << num(e.s_r)
                  << "), C_true=" << num(s.c_true) << " (E=" << num(e.c_true)
                  << "), S_a=" << num_opt(s.s_a) << " (E=" << num(e.s_a) << ")\n";
    }
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Sycophancy benchmark for multiple-choice QA"};
    app.require_subcommand(1);

    CommonOpts o;
    SimOpts so;
    std::string import_src, import_dst, import_name;

    auto add_common = [&](CLI::App* sub, bool with_config = true) {
        if (with_config) {
            sub->add_option("--config", o.config_path, "run configuration (JSON)")->required();
        }
        sub->add_option("--out", o.out_dir, "output directory (overrides the config)");
        return sub;
    };

    CLI::App* validate =
        app.add_subcommand("validate", "check a run configuration and its datasets");
    validate->add_option("--config", o.config_path, "run configuration (JSON)")->required();

    CLI::App* import_cmd =
        app.add_subcommand("import", "convert a public benchmark dump to the line format");
    import_cmd->add_option("src", import_src, "source file")->required();
    import_cmd->add_option("dst", import_dst, "destination .jsonl")->required();
    import_cmd->add_option("--name", import_name, "dataset name (default: destination stem)");

    CLI::App* plan = add_common(app.add_subcommand("plan", "render prompts into a case manifest"));
    plan->add_option("--condition", o.conditions, "restrict to named conditions");

    CLI::App* run = add_common(app.add_subcommand("run", "resolve every case via cache or provider"));
    run->add_option("--parallelism", o.parallelism, "max in-flight requests");
    run->add_option("--provider", o.providers, "restrict to named providers");

    CLI::App* score =
        add_common(app.add_subcommand("score", "parse archives into trial logs and summaries"));
    score->add_option("--provider", o.providers, "restrict to named providers");

    CLI::App* report = add_common(app.add_subcommand("report", "render summaries into documents"));
    report->add_option("--provider", o.providers, "restrict to named providers");

    CLI::App* simulate =
        app.add_subcommand("simulate", "run the synthetic respondent and compare to analytics");
    simulate->add_option("--p-correct", so.p_correct, "vanilla accuracy");
    simulate->add_option("--f-move", so.f_move, "probability of abandoning a correct answer");
    simulate->add_option("--sigma", so.sigma, "probability a flip lands on the suggestion");
    simulate->add_option("--seed", so.seed, "stream seed");
    simulate->add_option("--landing", so.landing,
                         "flip landing convention: exclude-suggested | include-suggested");
    simulate->add_option("--questions", so.questions, "number of questions");
    simulate->add_option("--nq", so.n_q, "choices per question");
    simulate->add_option("--condition", so.conditions, "conditions to simulate (default basic)");
    simulate->add_option("--out", so.out_dir, "output directory (default out/simulate)");

    int rc = 0;
    validate->callback([&] { rc = cmd_validate(o); });
    import_cmd->callback([&] {
        std::string name = import_name.empty() ? fs::path(import_dst).stem().string() : import_name;
        rc = cmd_import(import_src, import_dst, name);
    });
    plan->callback([&] { rc = cmd_plan(o); });
    run->callback([&] { rc = cmd_run(o); });
    score->callback([&] { rc = cmd_score(o); });
    report->callback([&] { rc = cmd_report(o); });
    simulate->callback([&] { rc = cmd_simulate(so); });

    try {
        app.parse(argc, argv);
        return rc;
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    } catch (const syco::ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const syco::TemplateError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const syco::AuthError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const syco::InvariantError& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 3;
    } catch (const syco::Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
}

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "tutor_eval/annotate_session.hpp"
#include "tutor_eval/annotation.hpp"
#include "tutor_eval/backend.hpp"
#include "tutor_eval/corpus.hpp"
#include "tutor_eval/errors.hpp"
#include "tutor_eval/judge.hpp"
#include "tutor_eval/live_backend.hpp"
#include "tutor_eval/metrics.hpp"
#include "tutor_eval/pipeline.hpp"
#include "tutor_eval/prompts.hpp"
#include "tutor_eval/report.hpp"

namespace fs = std::filesystem;
using namespace tutor_eval;

namespace {

struct Options {
    std::string config;
    std::string corpus;
    std::string output_dir = ".";
    std::string annotations;
    std::string reference_grader;
    std::string rate_plan;
    std::string lexicons_dir;
    std::string endpoint = "https://api.openai.com/v1/chat/completions";
    std::string api_key_env = "TUTOR_EVAL_API_KEY";
    std::string run_id = "run";
    std::vector<std::string> models;
    std::vector<std::string> cassettes;
    std::size_t min_bytes = kDefaultMinBytes;
    std::size_t max_bytes = kDefaultMaxBytes;
    double temperature = 0.0;
    int parallelism = 1;
    int max_attempts = 3;
};

// Precedence: CLI flags > config file > built-in defaults.
void apply_config_file(CLI::App& app, Options& opt) {
    if (opt.config.empty()) return;
    std::ifstream in(opt.config);
    if (!in) throw IoFailure("cannot open config: " + opt.config);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw MalformedRecord("config file is not valid JSON");

    auto overridden = [&](const std::string& flag) {
        auto* o = app.get_option_no_throw(flag);
        return o != nullptr && o->count() > 0;
    };
    auto set_str = [&](const char* key, const std::string& flag, std::string& field) {
        if (j.contains(key) && !overridden(flag)) field = j.at(key).get<std::string>();
    };
    set_str("corpus", "--corpus", opt.corpus);
    set_str("output_dir", "--output-dir", opt.output_dir);
    set_str("annotations", "--annotations", opt.annotations);
    set_str("reference_grader", "--reference-grader", opt.reference_grader);
    set_str("rate_plan", "--rate-plan", opt.rate_plan);
    set_str("lexicons_dir", "--lexicons", opt.lexicons_dir);
    set_str("endpoint", "--endpoint", opt.endpoint);
    set_str("run_id", "--run-id", opt.run_id);
    if (j.contains("api_key_env")) opt.api_key_env = j.at("api_key_env").get<std::string>();
    if (j.contains("models") && !overridden("--model"))
        opt.models = j.at("models").get<std::vector<std::string>>();
    if (j.contains("cassettes") && !overridden("--cassette"))
        opt.cassettes = j.at("cassettes").get<std::vector<std::string>>();
    if (j.contains("min_bytes") && !overridden("--min-bytes"))
        opt.min_bytes = j.at("min_bytes").get<std::size_t>();
    if (j.contains("max_bytes") && !overridden("--max-bytes"))
        opt.max_bytes = j.at("max_bytes").get<std::size_t>();
    if (j.contains("temperature") && !overridden("--temperature"))
        opt.temperature = j.at("temperature").get<double>();
    if (j.contains("parallelism") && !overridden("--parallelism"))
        opt.parallelism = j.at("parallelism").get<int>();
    if (j.contains("max_attempts")) opt.max_attempts = j.at("max_attempts").get<int>();
}

std::string sanitize_filename(const std::string& name) {
    std::string out = name;
    for (auto& c : out)
        if (!std::isalnum(static_cast<unsigned char>(c)) && c != '-' && c != '.' && c != '_')
            c = '_';
    return out;
}

BackendDescriptor descriptor_for(const Options& opt, const std::string& model,
                                 std::size_t model_index) {
    BackendDescriptor d;
    d.model_id = model;
    d.temperature = opt.temperature;
    d.max_attempts = opt.max_attempts;
    d.parallelism = opt.parallelism;
    d.endpoint = opt.endpoint;
    d.api_key_env = opt.api_key_env;
    if (model == "baseline") {
        d.kind = BackendKind::Baseline;
    } else if (!opt.cassettes.empty()) {
        d.kind = BackendKind::Replay;
        d.cassette_path = opt.cassettes.size() == 1 ? opt.cassettes[0]
                                                    : opt.cassettes.at(model_index);
    } else {
        d.kind = BackendKind::Live;
    }
    return d;
}

std::unique_ptr<ChatBackend> make_backend(const BackendDescriptor& d) {
    switch (d.kind) {
    case BackendKind::Replay:
        return std::make_unique<ReplayBackend>(d, Cassette::load(d.cassette_path));
    case BackendKind::Live:
        return std::make_unique<LiveBackend>(d);
    case BackendKind::Baseline:
        break;
    }
    throw InvalidParameter("baseline backend is handled per-dialogue, not as a chat client");
}

std::map<std::string, RatePlan> rate_plans_or_empty(const Options& opt,
                                                    std::vector<std::string>* warnings) {
    if (!opt.rate_plan.empty()) return load_rate_plans(opt.rate_plan);
    if (warnings != nullptr)
        warnings->push_back("no rate plan supplied; costs reported as zero");
    return {};
}

void print_usable_and_cost(const std::string& model, const std::vector<JudgeResult>& results,
                           const std::map<std::string, RatePlan>& plans) {
    auto counts = usable_count(results);
    std::cout << model << ": " << results.size() << " results, usable " << counts.usable
              << ", parse failures " << counts.parse_failures << ", transport failures "
              << counts.transport_failures << "\n";
    std::size_t pt = 0, ct = 0;
    bool approx = false;
    for (const auto& r : results) {
        pt += r.prompt_tokens;
        ct += r.completion_tokens;
        approx = approx || r.tokens_approximate;
    }
    RatePlan plan;
    auto it = plans.find(model);
    if (it != plans.end()) plan = it->second;
    auto cost = cost_estimate(pt, ct, plan, approx);
    std::cout << "  tokens: " << pt << " prompt, " << ct << " completion; cost $"
              << detail::fixed(cost.usd, 4) << (cost.approximate ? " (approximate)" : "")
              << "\n";
}

int cmd_ingest(const Options& opt, const std::string& raw_dir, const std::string& out_corpus,
               const std::string& source_tag) {
    Source source = source_tag == "synthetic" ? Source::Synthetic : Source::RealLife;
    std::vector<fs::path> files;
    for (const auto& e : fs::directory_iterator(raw_dir))
        if (e.is_regular_file()) files.push_back(e.path());
    std::sort(files.begin(), files.end());
    if (files.empty()) {
        std::cerr << "fatal: no transcript files in " << raw_dir << "\n";
        return 1;
    }
    std::vector<Dialogue> parsed;
    std::size_t failures = 0;
    for (const auto& f : files) {
        std::ifstream in(f, std::ios::binary);
        std::string raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
        try {
            parsed.push_back(parse_transcript(raw, f.stem().string(), source));
        } catch (const Error& e) {
            ++failures;
            std::cerr << "warning: " << f.filename().string() << ": " << e.what() << "\n";
        }
    }
    if (parsed.empty()) {
        std::cerr << "fatal: every transcript failed to parse\n";
        return 1;
    }
    auto kept = filter_by_size(parsed, opt.min_bytes, opt.max_bytes);
    save_corpus(kept, out_corpus);
    std::cout << "parsed " << parsed.size() << " transcript(s) (" << failures
              << " failed), kept " << kept.size() << ", dropped " << parsed.size() - kept.size()
              << " by size filter [" << opt.min_bytes << ", " << opt.max_bytes << "]\n";
    std::cout << "wrote " << out_corpus << "\n";
    return 0;
}

int cmd_generate(const Options& opt, int count, int avg_words, const std::string& out_corpus) {
    if (opt.models.size() != 1)
        throw InvalidParameter("generate requires exactly one --model");
    auto backend = make_backend(descriptor_for(opt, opt.models[0], 0));
    std::string prompt = render_synthesis_prompt(count, avg_words);
    auto response = backend->complete(prompt);
    auto blocks = split_generated_transcripts(response.text);

    std::vector<Dialogue> dialogues;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
        char id[32];
        std::snprintf(id, sizeof(id), "synthetic-%03zu", i + 1);
        try {
            dialogues.push_back(parse_transcript(blocks[i], id, Source::Synthetic));
        } catch (const Error& e) {
            std::cerr << "warning: skipping block " << i + 1 << ": " << e.what() << "\n";
        }
    }
    if (dialogues.empty()) {
        std::cerr << "fatal: generation produced no parseable transcripts\n";
        return 1;
    }
    save_corpus(dialogues, out_corpus);
    if (static_cast<int>(dialogues.size()) < count)
        std::cout << "partial: requested " << count << " transcripts, got "
                  << dialogues.size() << "\n";
    auto stats = corpus_stats(dialogues);
    std::cout << dialogues.size() << " synthetic dialogue(s): words mean "
              << detail::fixed(stats.mean_words, 1) << " sd " << detail::fixed(stats.sd_words, 1)
              << ", utterances mean " << detail::fixed(stats.mean_utterances, 1) << " sd "
              << detail::fixed(stats.sd_utterances, 1) << "\n";
    std::cout << "wrote " << out_corpus << "\n";
    return 0;
}

int cmd_judge(const Options& opt) {
    if (opt.corpus.empty()) throw InvalidParameter("judge requires --corpus");
    if (opt.models.empty()) throw InvalidParameter("judge requires at least one --model");
    auto dialogues = load_corpus(opt.corpus);
    if (dialogues.empty()) throw EmptyCorpus("corpus " + opt.corpus + " is empty");
    fs::create_directories(opt.output_dir);
    auto plans = rate_plans_or_empty(opt, nullptr);

    for (std::size_t i = 0; i < opt.models.size(); ++i) {
        const auto& model = opt.models[i];
        auto descriptor = descriptor_for(opt, model, i);
        std::vector<JudgeResult> results;
        if (descriptor.kind == BackendKind::Baseline) {
            Lexicons lexicons = opt.lexicons_dir.empty() ? Lexicons::builtin()
                                                         : Lexicons::load(opt.lexicons_dir);
            for (const auto& d : dialogues) results.push_back(baseline_judge(d, lexicons));
        } else {
            auto backend = make_backend(descriptor);
            results = judge_corpus(*backend, dialogues, opt.parallelism);
        }
        fs::path out = fs::path(opt.output_dir) / (sanitize_filename(model) + ".results.jsonl");
        save_results(results, out);
        print_usable_and_cost(model, results, plans);
        std::cout << "  wrote " << out.string() << "\n";
    }
    return 0;
}

int cmd_evaluate(const Options& opt, const std::vector<std::string>& results_files) {
    if (opt.corpus.empty()) throw InvalidParameter("evaluate requires --corpus");
    if (opt.annotations.empty()) throw InvalidParameter("evaluate requires --annotations");
    if (opt.reference_grader.empty())
        throw InvalidParameter("evaluate requires --reference-grader");
    if (results_files.empty()) throw InvalidParameter("evaluate requires at least one --results");

    EvaluationInputs in;
    in.dialogues = load_corpus(opt.corpus);
    in.annotations = import_annotations(opt.annotations);
    in.annotations.set_reference_grader(opt.reference_grader);
    for (const auto& f : results_files)
        for (auto& r : load_results(f))
            in.results_by_model[r.model_id].push_back(std::move(r));
    std::vector<std::string> warnings;
    in.rate_plans = rate_plans_or_empty(opt, &warnings);
    in.min_bytes = opt.min_bytes;
    in.max_bytes = opt.max_bytes;
    in.temperature = opt.temperature;

    auto report = build_evaluation_report(in);
    report.warnings.insert(report.warnings.end(), warnings.begin(), warnings.end());
    write_report_files(report, opt.output_dir, opt.run_id);
    std::cout << render_run_summary(report);
    std::cout << "wrote report files under " << opt.output_dir << " (run id " << opt.run_id
              << ")\n";
    return 0;
}

int cmd_report(const Options& opt, const std::string& report_json) {
    std::ifstream in(report_json);
    if (!in) throw IoFailure("cannot open " + report_json);
    nlohmann::json j = nlohmann::json::parse(in, nullptr, false);
    if (j.is_discarded()) throw MalformedRecord("report JSON is invalid");
    auto report = report_from_json(j);
    write_report_files(report, opt.output_dir, opt.run_id);
    std::cout << "re-rendered report files under " << opt.output_dir << "\n";
    return 0;
}

int cmd_cost(const Options& opt, const std::vector<std::string>& results_files) {
    auto plans = rate_plans_or_empty(opt, nullptr);
    for (const auto& f : results_files) {
        auto results = load_results(f);
        if (results.empty()) {
            std::cout << f << ": empty results file\n";
            continue;
        }
        print_usable_and_cost(results.front().model_id, results, plans);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Tutor-response evaluation harness"};
    app.require_subcommand(1);

    Options opt;
    app.add_option("--config", opt.config, "JSON config file (flags take precedence)");
    app.add_option("--output-dir", opt.output_dir, "output directory");
    app.add_option("--corpus", opt.corpus, "corpus file (JSON lines)");
    app.add_option("--min-bytes", opt.min_bytes, "size filter lower bound (inclusive)");
    app.add_option("--max-bytes", opt.max_bytes, "size filter upper bound (inclusive)");
    app.add_option("--model", opt.models, "model id; repeatable ('baseline' for the rule judge)");
    app.add_option("--temperature", opt.temperature, "sampling temperature (default 0)");
    app.add_option("--parallelism", opt.parallelism, "max in-flight requests");
    app.add_option("--cassette", opt.cassettes,
                   "replay cassette; one shared or one per --model");
    app.add_option("--rate-plan", opt.rate_plan, "rate plan JSON file");
    app.add_option("--endpoint", opt.endpoint, "chat-completion endpoint URL");
    app.add_option("--lexicons", opt.lexicons_dir, "baseline lexicon directory");
    app.add_option("--run-id", opt.run_id, "run id used in report file names");
    app.add_option("--annotations", opt.annotations, "annotation CSV");
    app.add_option("--reference-grader", opt.reference_grader,
                   "grader treated as ground truth");

    std::string raw_dir, out_corpus, source_tag = "real_life", grader_id, report_json;
    int count = 50, avg_words = 200;
    std::vector<std::string> results_files;

    auto* ingest = app.add_subcommand("ingest", "parse raw transcripts into a corpus file");
    ingest->add_option("raw_dir", raw_dir, "directory of transcript text files")->required();
    ingest->add_option("--out", out_corpus, "output corpus file")->required();
    ingest->add_option("--source", source_tag, "real_life or synthetic");

    auto* generate = app.add_subcommand("generate", "generate synthetic dialogues");
    generate->add_option("--count", count, "number of transcripts to request");
    generate->add_option("--avg-words", avg_words, "target words per transcript");
    generate->add_option("--out", out_corpus, "output corpus file")->required();

    auto* annotate = app.add_subcommand("annotate", "interactive human annotation");
    annotate->add_option("--grader", grader_id, "grader id")->required();

    auto* judge = app.add_subcommand("judge", "score a corpus with one or more backends");

    auto* evaluate = app.add_subcommand("evaluate", "compute agreement and performance report");
    evaluate->add_option("--results", results_files, "judge results file; repeatable");

    auto* report_cmd = app.add_subcommand("report", "re-render report files from report JSON");
    report_cmd->add_option("--report-json", report_json, "machine-readable report")->required();

    auto* cost = app.add_subcommand("cost", "cost summary for results files");
    cost->add_option("--results", results_files, "judge results file; repeatable")->required();

    CLI11_PARSE(app, argc, argv);

    try {
        apply_config_file(app, opt);
        if (ingest->parsed()) return cmd_ingest(opt, raw_dir, out_corpus, source_tag);
        if (generate->parsed()) {
            if (count < 1 || avg_words < 1)
                throw InvalidParameter("generate: --count and --avg-words must be >= 1");
            return cmd_generate(opt, count, avg_words, out_corpus);
        }
        if (annotate->parsed()) {
            if (opt.corpus.empty()) throw InvalidParameter("annotate requires --corpus");
            if (opt.annotations.empty())
                throw InvalidParameter("annotate requires --annotations");
            auto dialogues = load_corpus(opt.corpus);
            annotate_session(std::cin, std::cout, dialogues, grader_id, opt.annotations);
            return 0;
        }
        if (judge->parsed()) return cmd_judge(opt);
        if (evaluate->parsed()) return cmd_evaluate(opt, results_files);
        if (report_cmd->parsed()) return cmd_report(opt, report_json);
        if (cost->parsed()) return cmd_cost(opt, results_files);
    } catch (const Error& e) {
        std::cerr << "fatal [" << e.code() << "]: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "fatal: " << e.what() << "\n";
        return 1;
    }
    return 0;
}

// ragent: offline KB construction, protocol evolution and online inference from the command line.
//
// Exit codes: 0 ok, 2 usage/configuration, 3 oracle auth/transport, 4 data.

#include <atomic>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include "CLI11.hpp"
#include "json.hpp"
#include "ragent/config.hpp"
#include "ragent/corpus.hpp"
#include "ragent/engine.hpp"
#include "ragent/error.hpp"
#include "ragent/evolver.hpp"
#include "ragent/io.hpp"
#include "ragent/kb_store.hpp"
#include "ragent/sim.hpp"
#include "ragent/temporal_align.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace ragent;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitUsage = 2;
constexpr int kExitOracle = 3;
constexpr int kExitData = 4;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

int exit_code_for(ErrorCode c)
{
    switch (c) {
    case ErrorCode::ConfigError:
    case ErrorCode::BadK:
    case ErrorCode::EmptyDevSplit: return kExitUsage;
    case ErrorCode::Timeout:
    case ErrorCode::TransportError:
    case ErrorCode::RateLimited:
    case ErrorCode::AuthError: return kExitOracle;
    default: return kExitData;
    }
}

struct OracleOptions {
    std::string kind;
    std::string transcript;
    std::string endpoint;
    std::string model;
};

void add_oracle_options(CLI::App* cmd, OracleOptions& o)
{
    cmd->add_option("--oracle", o.kind, "Oracle backend")->check(CLI::IsMember({"mock", "http"}));
    cmd->add_option("--transcript", o.transcript, "Scripted transcript for the mock oracle");
    cmd->add_option("--endpoint", o.endpoint, "Chat-completions URL for the http oracle");
    cmd->add_option("--model", o.model, "Model name for the http oracle");
}

std::shared_ptr<OracleBackend> make_oracle(const AppConfig& cfg, const OracleOptions& o, const fs::path& default_transcript = {})
{
    const std::string kind = o.kind.empty() ? cfg.oracle.kind : o.kind;
    if (kind == "http") {
        HttpOracleConfig h;
        h.endpoint = o.endpoint.empty() ? cfg.oracle.endpoint : o.endpoint;
        h.model = o.model.empty() ? cfg.oracle.model : o.model;
        h.timeout_s = cfg.oracle.timeout_s;
        h.retries = cfg.oracle.retries;
        h.max_in_flight = cfg.oracle.max_in_flight;
        h.backoff_ms = cfg.oracle.backoff_ms;
        const char* key = std::getenv("RAGENT_API_KEY");
        if (!key || !*key)
            throw Error(ErrorCode::AuthError, "the http oracle needs an API key: export RAGENT_API_KEY=<key>");
        h.api_key = key;
        if (h.endpoint.empty()) throw UsageError("the http oracle needs --endpoint or oracle.endpoint in the config");
        return std::make_shared<HttpBackend>(h);
    }
    fs::path transcript = o.transcript.empty() ? fs::path(cfg.oracle.transcript) : fs::path(o.transcript);
    if (transcript.empty()) transcript = default_transcript;
    if (transcript.empty() || !fs::exists(transcript)) {
        if (!o.transcript.empty()) throw UsageError("transcript not found: " + o.transcript);
        std::cerr << "warning: mock oracle without a transcript; every oracle call will fail\n";
        return std::make_shared<ScriptedBackend>(std::vector<ScriptRecord>{});
    }
    return ScriptedBackend::from_file(transcript);
}

fs::path corpus_manifest(const fs::path& corpus, const char* split)
{
    if (fs::is_regular_file(corpus)) return corpus;
    if (!fs::is_directory(corpus)) throw UsageError("corpus not found: " + corpus.string());
    if (fs::exists(corpus / (std::string(split) + ".jsonl"))) return corpus / (std::string(split) + ".jsonl");
    if (fs::exists(corpus / "manifest.jsonl")) return corpus / "manifest.jsonl";
    throw UsageError("no " + std::string(split) + ".jsonl or manifest.jsonl in " + corpus.string());
}

Protocol load_protocol(const std::string& arg)
{
    if (arg.empty()) return Protocol::defaults();
    fs::path p = arg;
    if (fs::is_directory(p)) {
        if (!fs::exists(p / "best")) throw UsageError("protocol directory has no best pointer: " + p.string());
        p = p / "protocols" / (trim(io::read_text(p / "best")) + ".txt");
    }
    if (!fs::exists(p)) throw UsageError("protocol not found: " + p.string());
    return decode_protocol(io::read_text(p));
}

/// Runs fn(i) for i in [0, n) on up to jobs threads; the first exception is rethrown.
template <typename Fn>
void parallel_for(std::size_t n, std::size_t jobs, Fn fn)
{
    std::atomic<std::size_t> next{0};
    std::exception_ptr first;
    std::mutex m;
    auto work = [&] {
        for (std::size_t i = next++; i < n; i = next++) {
            try {
                fn(i);
            } catch (...) {
                std::lock_guard lock(m);
                if (!first) first = std::current_exception();
                next = n;
            }
        }
    };
    jobs = std::clamp<std::size_t>(jobs, 1, std::max<std::size_t>(n, 1));
    if (jobs == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (std::size_t t = 0; t < jobs; ++t) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (first) std::rethrow_exception(first);
}

void write_or_print(const std::string& path, const std::string& text)
{
    if (path.empty() || path == "-")
        std::cout << text;
    else
        io::write_text(path, text);
}

// ---------------------------------------------------------------------------------------------
// Commands

int cmd_simulate(const std::string& spec_path, const std::string& out, std::optional<std::uint64_t> seed)
{
    if (!fs::exists(spec_path)) throw UsageError("spec file not found: " + spec_path);
    sim::CorpusSpec spec;
    try {
        spec = json::parse(io::read_text(spec_path)).get<sim::CorpusSpec>();
    } catch (const json::exception& e) {
        throw Error(ErrorCode::SpecError, spec_path + ": " + e.what());
    }
    if (seed) spec.seed = *seed;
    const sim::SimCorpus corpus = sim::synthesize_corpus(spec);
    sim::write_corpus(corpus, out);
    io::write_text(fs::path(out) / "corpus.json", json(spec).dump(2) + "\n");
    std::cout << "wrote " << corpus.samples.size() << " segments and " << corpus.transcript.size()
              << " transcript records to " << out << "\n";
    return kExitOk;
}

int cmd_build_kb(const AppConfig& cfg, const std::string& corpus, const std::string& out, const OracleOptions& oo,
                 bool dry_run, const std::string& summary_path)
{
    if (!dry_run && out.empty()) throw UsageError("--out is required unless --dry-run is given");
    const fs::path manifest = corpus_manifest(corpus, "kb");
    auto oracle = make_oracle(cfg, oo, fs::is_directory(corpus) ? fs::path(corpus) / "transcript.jsonl" : fs::path{});

    const auto records = read_manifest(manifest);
    std::vector<CorpusSegment> segments(records.size());
    parallel_for(records.size(), cfg.jobs, [&](std::size_t i) { segments[i] = load_segment(records[i], cfg.dsp); });

    BuildResult res = build_kb(segments, *oracle, cfg.build_config());
    std::string report = res.summary.to_text();
    if (dry_run) {
        for (const auto& e : res.kb.entries) {
            char buf[64];
            std::snprintf(buf, sizeof buf, "%.6f", e.s_ann);
            report += "entry." + e.entry_id + "=" + e.pseudo_label + "|" + buf + "|" + to_string(e.status) + "\n";
        }
        write_or_print(summary_path, report);
        return kExitOk;
    }
    save_kb(res.kb, out);
    io::write_text(fs::path(out) / "summary.txt", report);
    if (!summary_path.empty()) io::write_text(summary_path, report);
    std::cout << report;
    return kExitOk;
}

Query query_from(const CorpusSegment& s) { return {s.segment_id, s.dtm, s.rtm, s.meta}; }

int cmd_infer(AppConfig cfg, const std::string& kb_dir, const std::vector<std::string>& segments, const OracleOptions& oo,
              const std::string& protocol_arg, const std::string& out, bool no_observer)
{
    const KnowledgeBase kb = load_kb(kb_dir);
    const InferenceEngine engine(kb, cfg.council);
    const Protocol protocol = load_protocol(protocol_arg);
    std::shared_ptr<OracleBackend> oracle;
    if (!no_observer) oracle = make_oracle(cfg, oo);

    std::vector<std::string> lines(segments.size());
    parallel_for(segments.size(), cfg.jobs, [&](std::size_t i) {
        const Verdict v = engine.infer(query_from(load_segment_arg(segments[i], cfg.dsp)), protocol, oracle.get());
        lines[i] = verdict_json(v).dump() + "\n";
    });
    std::string text;
    for (const auto& l : lines) text += l;
    write_or_print(out, text);
    return kExitOk;
}

std::vector<DevSample> labelled_samples(const fs::path& manifest, const AppConfig& cfg)
{
    const auto records = read_manifest(manifest);
    if (records.empty()) throw UsageError("manifest has no records: " + manifest.string());
    std::vector<DevSample> out(records.size());
    parallel_for(records.size(), cfg.jobs, [&](std::size_t i) {
        if (records[i].label.empty()) throw Error(ErrorCode::FormatError, "record " + records[i].segment_id + " has no label");
        out[i] = {query_from(load_segment(records[i], cfg.dsp)), records[i].label};
    });
    return out;
}

int cmd_eval(AppConfig cfg, const std::string& kb_dir, const std::string& test, const OracleOptions& oo,
             const std::string& protocol_arg, const std::string& report_path, const std::string& verdicts_path,
             bool no_observer)
{
    if (!fs::exists(test)) throw UsageError("test manifest not found: " + test);
    const KnowledgeBase kb = load_kb(kb_dir);
    const InferenceEngine engine(kb, cfg.council);
    const auto samples = labelled_samples(test, cfg);
    const Protocol protocol = load_protocol(protocol_arg);
    std::shared_ptr<OracleBackend> oracle;
    if (!no_observer) oracle = make_oracle(cfg, oo);

    std::vector<Verdict> verdicts(samples.size());
    parallel_for(samples.size(), cfg.jobs, [&](std::size_t i) { verdicts[i] = engine.infer(samples[i].query, protocol, oracle.get()); });

    std::vector<std::string> refs, preds, retrieval_only;
    std::string lines;
    std::size_t degraded = 0;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        refs.push_back(samples[i].reference);
        preds.push_back(verdicts[i].label);
        retrieval_only.push_back(verdicts[i].prior.leading());
        degraded += verdicts[i].observer.degraded;
        json j = verdict_json(verdicts[i]);
        j["reference"] = samples[i].reference;
        lines += j.dump() + "\n";
    }
    const EvalMetrics m = compute_metrics(refs, preds, kb.labels);
    const EvalMetrics floor = compute_metrics(refs, retrieval_only, kb.labels);
    std::ostringstream report;
    report << "samples=" << samples.size() << "\nverdicts=" << verdicts.size() << "\nobserver_degraded=" << degraded << '\n'
           << m.to_text();
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", floor.accuracy);
    report << "retrieval_only_accuracy=" << buf << '\n';
    write_or_print(report_path, report.str());
    if (!verdicts_path.empty()) io::write_text(verdicts_path, lines);
    if (!report_path.empty() && report_path != "-") std::cout << report.str();
    return kExitOk;
}

int cmd_evolve(AppConfig cfg, const std::string& kb_dir, const std::string& dev, const std::string& protocol_dir,
               const OracleOptions& oo)
{
    if (!fs::exists(dev)) throw UsageError("dev manifest not found: " + dev);
    const KnowledgeBase kb = load_kb(kb_dir);
    const InferenceEngine engine(kb, cfg.council);
    const auto samples = labelled_samples(dev, cfg);
    auto oracle = make_oracle(cfg, oo);

    const fs::path dir = protocol_dir;
    fs::create_directories(dir / "protocols");
    Protocol p0 = fs::exists(dir / "initial.txt") ? decode_protocol(io::read_text(dir / "initial.txt")) : Protocol::defaults();
    const EvolveResult res = evolve(samples, p0, cfg.evolution, engine, oracle.get(), *oracle);

    for (const auto& p : res.versions) io::write_text(dir / "protocols" / (p.version + ".txt"), encode_protocol(p));
    std::string log;
    for (const auto& s : res.log) log += step_json(s).dump() + "\n";
    io::write_text(dir / "evolution.jsonl", log);
    io::write_text(dir / "best", res.best.version + "\n");
    std::cout << log;
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", res.s_best);
    std::cout << "best=" << res.best.version << " score=" << buf << "\n";
    return kExitOk;
}

int cmd_segment(const AppConfig& cfg, const std::string& cube_path, const std::string& out, std::size_t guard_bins)
{
    const RadarCube cube = io::read_cube(cube_path);
    const RadarMaps maps = process_cube(cube, cfg.dsp);
    const Matrix suppressed = suppress_static(maps.dtm, guard_bins);
    const auto bounds = detect_segments(radar_envelope(suppressed, cube.meta().frame_rate), cfg.segmenter);
    const auto slices = apply_segments(maps.dtm, maps.rtm, bounds);

    fs::create_directories(out);
    std::string manifest;
    const std::string stem = fs::path(cube_path).stem().string();
    for (std::size_t k = 0; k < slices.size(); ++k) {
        const std::string id = stem + "-seg" + std::to_string(k);
        io::write_matrix(fs::path(out) / (id + ".dtm.rgm"), slices[k].first);
        io::write_matrix(fs::path(out) / (id + ".rtm.rgm"), slices[k].second);
        io::write_text(io::meta_path_for(fs::path(out) / (id + ".dtm.rgm")), io::encode_meta(cube.meta()));
        manifest += json{{"segment_id", id},
                         {"clip_id", id},
                         {"dtm", id + ".dtm.rgm"},
                         {"rtm", id + ".rtm.rgm"},
                         {"start", bounds[k].start},
                         {"end", bounds[k].end},
                         {"frame_rate", cube.meta().frame_rate},
                         {"wavelength", cube.meta().wavelength},
                         {"range_resolution", cube.meta().range_resolution}}
                        .dump() +
                    "\n";
    }
    io::write_text(fs::path(out) / "manifest.jsonl", manifest);
    std::cout << "segments=" << slices.size() << "\n";
    return kExitOk;
}

}  // namespace

int main(int argc, char** argv)
{
    CLI::App app{"ragent - training-free radar activity recognition"};
    app.require_subcommand(1);
    std::string config_path;
    std::size_t jobs = 0;
    app.add_option("--config", config_path, "JSON config file (default: $RAGENT_CONFIG)");
    app.add_option("--jobs", jobs, "Worker threads")->check(CLI::PositiveNumber);

    std::string spec, out, corpus, kb, protocol, report, verdicts, summary, dev, test, cube;
    std::optional<std::uint64_t> seed;
    std::vector<std::string> segments;
    std::optional<std::size_t> top_m, top_k;
    std::optional<int> iterations;
    std::optional<double> delta;
    std::size_t guard_bins = 1;
    bool dry_run = false, no_observer = false;
    OracleOptions oo;

    auto* sim_cmd = app.add_subcommand("simulate", "Synthesize a labelled radar corpus and oracle transcript");
    sim_cmd->add_option("--spec", spec, "Corpus spec (JSON)")->required();
    sim_cmd->add_option("--out", out, "Output directory")->required();
    sim_cmd->add_option("--seed", seed, "Override the spec seed");

    auto* build_cmd = app.add_subcommand("build-kb", "Annotate a corpus and write a knowledge base");
    build_cmd->add_option("--corpus", corpus, "Corpus directory or manifest")->required();
    build_cmd->add_option("--out", out, "KB output directory");
    build_cmd->add_flag("--dry-run", dry_run, "Print the annotation report only");
    build_cmd->add_option("--summary", summary, "Also write the summary report here");
    add_oracle_options(build_cmd, oo);

    auto* infer_cmd = app.add_subcommand("infer", "Resolve segments against a knowledge base");
    infer_cmd->add_option("--kb", kb, "KB directory")->required();
    infer_cmd->add_option("--segment", segments, "Cube file (.rgc) or 'dtm.rgm,rtm.rgm' pair")->required();
    infer_cmd->add_option("--top-m", top_m, "Neighbors M");
    infer_cmd->add_option("--top-k", top_k, "Subspace size K");
    infer_cmd->add_option("--protocol", protocol, "Protocol file or evolve output directory");
    infer_cmd->add_option("--out", out, "Verdict JSONL output (default stdout)");
    infer_cmd->add_flag("--no-observer", no_observer, "Skip the Observer (retrieval + physics only)");
    add_oracle_options(infer_cmd, oo);

    auto* evolve_cmd = app.add_subcommand("evolve", "Evolve the council protocol on a dev split");
    evolve_cmd->add_option("--kb", kb, "KB directory")->required();
    evolve_cmd->add_option("--dev", dev, "Dev manifest")->required();
    evolve_cmd->add_option("--protocol", protocol, "Protocol directory (initial.txt optional)")->required();
    evolve_cmd->add_option("-T,--iterations", iterations, "Iterations T");
    evolve_cmd->add_option("--delta", delta, "Rollback tolerance");
    evolve_cmd->add_option("--seed", seed, "Trace sampling seed");
    add_oracle_options(evolve_cmd, oo);

    auto* eval_cmd = app.add_subcommand("eval", "Accuracy, macro-F1 and confusion on a labelled manifest");
    eval_cmd->add_option("--kb", kb, "KB directory")->required();
    eval_cmd->add_option("--test", test, "Test manifest")->required();
    eval_cmd->add_option("--report", report, "Report file (default stdout)");
    eval_cmd->add_option("--verdicts", verdicts, "Verdict JSONL output");
    eval_cmd->add_option("--top-m", top_m, "Neighbors M");
    eval_cmd->add_option("--top-k", top_k, "Subspace size K");
    eval_cmd->add_option("--protocol", protocol, "Protocol file or evolve output directory");
    eval_cmd->add_flag("--no-observer", no_observer, "Skip the Observer (retrieval + physics only)");
    add_oracle_options(eval_cmd, oo);

    auto* seg_cmd = app.add_subcommand("segment", "Split a continuous recording into activity segments");
    seg_cmd->add_option("--cube", cube, "Cube file (.rgc)")->required();
    seg_cmd->add_option("--out", out, "Output directory")->required();
    seg_cmd->add_option("--guard-bins", guard_bins, "Zero-Doppler guard for static suppression");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? kExitOk : kExitUsage;
    }

    try {
        AppConfig cfg;
        if (config_path.empty())
            if (const char* env = std::getenv("RAGENT_CONFIG"); env && *env) config_path = env;
        if (!config_path.empty()) cfg = load_config(config_path);
        if (jobs) cfg.jobs = jobs;
        if (top_m) cfg.council.top_m = *top_m;
        if (top_k) cfg.council.top_k = *top_k;
        if (iterations) cfg.evolution.iterations = *iterations;
        if (delta) cfg.evolution.delta = *delta;
        if (seed && app.got_subcommand(evolve_cmd)) cfg.evolution.seed = *seed;
        cfg.validate();

        if (app.got_subcommand(sim_cmd)) return cmd_simulate(spec, out, seed);
        if (app.got_subcommand(build_cmd)) return cmd_build_kb(cfg, corpus, out, oo, dry_run, summary);
        if (app.got_subcommand(infer_cmd)) return cmd_infer(cfg, kb, segments, oo, protocol, out, no_observer);
        if (app.got_subcommand(evolve_cmd)) return cmd_evolve(cfg, kb, dev, protocol, oo);
        if (app.got_subcommand(eval_cmd)) return cmd_eval(cfg, kb, test, oo, protocol, report, verdicts, no_observer);
        if (app.got_subcommand(seg_cmd)) return cmd_segment(cfg, cube, out, guard_bins);
    } catch (const UsageError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitUsage;
    } catch (const Error& e) {
        std::cerr << "error: " << e.what() << "\n";
        return exit_code_for(e.code());
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitData;
    }
    return kExitUsage;
}

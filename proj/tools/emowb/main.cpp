#include <chrono>
#include <csignal>
#include <iostream>
#include <memory>
#include <optional>
#include <thread>

#include <CLI11.hpp>

#include "emowb/api.hpp"
#include "emowb/config.hpp"
#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "emowb/workbench.hpp"

namespace {

constexpr int kDomainError = 1;
constexpr int kUsageError = 2;

struct UsageError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct Options {
    std::string config_path;
    std::string store;
    std::string session;
    std::string params;
    std::string provider;
    std::string mock_transcript;
    std::string templates;
    std::string out;
    std::string packet;
    std::string actions;
    std::optional<std::int64_t> now_ms;
    std::optional<std::uint64_t> seed;
    std::optional<std::size_t> max_in_flight;
    std::vector<std::string> packet_states;
    std::vector<std::string> annotation_statuses;
    std::string manifest;
    std::string stream;
    std::optional<std::int64_t> start_ms;
    std::optional<std::int64_t> end_ms;
    int width = 320;
    int height = 120;
    double fps = 10.0;
    std::int64_t window_ms = 5000;
    std::string channel;
    bool stacked = false;
    std::string host;
    std::optional<int> port;
    std::optional<std::size_t> workers;
};

emowb::Config load(const Options& o) {
    emowb::Config c = o.config_path.empty() ? emowb::Config{} : emowb::load_config(o.config_path);
    if (!o.store.empty()) c.store_root = o.store;
    if (c.store_root.empty()) throw UsageError("no store: pass --store or set store_root in --config");
    if (!o.params.empty()) c.detector = emowb::load_params_file(o.params, c.detector);
    if (o.seed) c.seed = *o.seed;
    if (o.max_in_flight) c.max_in_flight = *o.max_in_flight;
    if (!o.templates.empty()) c.templates_dir = o.templates;
    return c;
}

emowb::TemplateSet templates_for(const emowb::Config& c) {
    return c.templates_dir.empty() ? emowb::TemplateSet::defaults() : emowb::TemplateSet::load(c.templates_dir);
}

emowb::AnnotateSettings annotate_settings(const emowb::Config& c) {
    emowb::AnnotateSettings s;
    s.options.describe = c.describe;
    s.options.limits.emotion_vocabulary = c.emotion_vocabulary;
    s.options.seed = c.seed;
    s.max_in_flight = c.max_in_flight;
    return s;
}

std::shared_ptr<emowb::LlmProvider> make_provider(const Options& o, const emowb::Config& c, bool required) {
    std::string kind = o.provider.empty() ? c.provider_kind : o.provider;
    if (kind == "real") kind = "http";
    if (kind.empty()) {
        if (required) throw UsageError("no provider configured: pass --provider mock or set provider.kind");
        return nullptr;
    }
    if (kind == "mock") {
        const auto transcript = !o.mock_transcript.empty() ? std::filesystem::path(o.mock_transcript) : c.mock_transcript;
        if (transcript.empty()) return std::make_shared<emowb::MockProvider>();
        return std::make_shared<emowb::MockProvider>(emowb::MockProvider::from_file(transcript.string()));
    }
    if (kind == "http") {
        auto cfg = emowb::HttpProviderConfig::from_env(c.http);
        if (cfg.endpoint.empty() || cfg.model.empty()) {
            throw UsageError("http provider needs provider.endpoint and provider.model (or EMOWB_LLM_* variables)");
        }
        return std::make_shared<emowb::HttpProvider>(cfg);
    }
    throw UsageError("unknown provider '" + kind + "' (expected mock or real)");
}

void print_json(const nlohmann::json& j) { std::cout << emowb::dump_pretty(j); }

emowb::ExportOptions export_options(const Options& o) {
    emowb::ExportOptions opts;
    if (!o.packet_states.empty()) {
        opts.packet_states.clear();
        for (const auto& s : o.packet_states) opts.packet_states.push_back(emowb::packet_state_from_string(s));
    }
    if (!o.annotation_statuses.empty()) {
        opts.annotation_statuses.clear();
        for (const auto& s : o.annotation_statuses) {
            opts.annotation_statuses.push_back(emowb::annotation_status_from_string(s));
        }
    }
    return opts;
}

volatile std::sig_atomic_t g_stop = 0;

void on_signal(int) { g_stop = 1; }

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"emowb: event-centred multimodal emotion annotation workbench"};
    app.require_subcommand(1);
    Options o;
    app.add_option("--config", o.config_path, "Key-value config file")->check(CLI::ExistingFile);
    app.add_option("--store", o.store, "Session store root (overrides config)");

    auto* ingest = app.add_subcommand("ingest", "Parse a session manifest and store streams and index");
    ingest->add_option("manifest", o.manifest, "Session manifest JSON")->required();

    auto* detect = app.add_subcommand("detect", "Run event detectors, write events.json");
    detect->add_option("--params", o.params, "Detector params file (JSON or key = value)")->check(CLI::ExistingFile);

    auto* pack = app.add_subcommand("pack", "Package event groups, write packets.json");

    auto* annotate = app.add_subcommand("annotate", "Draft annotations for packets, write annotations.json");
    annotate->add_option("--provider", o.provider, "mock or real");
    annotate->add_option("--mock-transcript", o.mock_transcript, "Mock provider transcript JSON")
        ->check(CLI::ExistingFile);
    annotate->add_option("--templates", o.templates, "Directory of prompt template overrides");
    annotate->add_option("--packet", o.packet, "Annotate only this packet");
    annotate->add_option("--seed", o.seed, "Provider seed");
    annotate->add_option("--max-in-flight", o.max_in_flight, "Concurrent packets");

    auto* review = app.add_subcommand("review", "Apply scripted analyst actions");
    review->add_option("--actions", o.actions, "Review actions JSON")->required()->check(CLI::ExistingFile);
    review->add_option("--now-ms", o.now_ms, "Fixed action timestamp (default: wall clock)");

    auto* exp = app.add_subcommand("export", "Write export.jsonl");
    exp->add_option("--out", o.out, "Also copy the export to this file");
    exp->add_option("--packet-states", o.packet_states, "Eligible packet states")->delimiter(',');
    exp->add_option("--annotation-statuses", o.annotation_statuses, "Eligible annotation statuses")->delimiter(',');

    auto* render = app.add_subcommand("render", "Render a stream into PPM frames");
    render->add_option("--stream", o.stream, "Stream id")->required();
    render->add_option("--out", o.out, "Output directory")->required();
    render->add_option("--start-ms", o.start_ms, "First frame time (default: stream start)");
    render->add_option("--end-ms", o.end_ms, "Last frame time (default: stream end)");
    render->add_option("--width", o.width, "Frame width")->capture_default_str();
    render->add_option("--height", o.height, "Frame height")->capture_default_str();
    render->add_option("--fps", o.fps, "Frames per second")->capture_default_str();
    render->add_option("--window-ms", o.window_ms, "Visible window length")->capture_default_str();
    render->add_option("--channel", o.channel, "Channel to draw");
    render->add_flag("--stacked", o.stacked, "Draw every channel in its own band");

    auto* serve = app.add_subcommand("serve", "Run the HTTP API");
    serve->add_option("--host", o.host, "Bind address");
    serve->add_option("--port", o.port, "Port (0 picks a free one)");
    serve->add_option("--workers", o.workers, "Annotation worker threads");
    serve->add_option("--provider", o.provider, "Default provider for annotate jobs: mock or real");
    serve->add_option("--mock-transcript", o.mock_transcript, "Mock provider transcript JSON")
        ->check(CLI::ExistingFile);

    for (auto* sub : {detect, pack, annotate, review, exp, render}) {
        sub->add_option("--session", o.session, "Session id")->required();
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return e.get_exit_code() == 0 ? code : kUsageError;
    }

    try {
        const auto config = load(o);
        emowb::SessionStore store(config.store_root, config.scenes);

        if (ingest->parsed()) {
            const auto result = emowb::ingest_manifest(store, o.manifest);
            print_json({{"session_id", result.session_id}, {"reports", result.reports}});
        } else if (detect->parsed()) {
            const auto layer = emowb::detect_session(store, o.session, config.detector);
            print_json({{"session_id", o.session},
                        {"params_hash", layer.params_hash},
                        {"candidates", layer.candidates.size()},
                        {"groups", layer.groups.size()}});
        } else if (pack->parsed()) {
            const auto doc = emowb::pack_session(store, o.session);
            print_json({{"session_id", o.session}, {"packets", doc.packets.size()}});
        } else if (annotate->parsed()) {
            auto provider = make_provider(o, config, true);
            const auto templates = templates_for(config);
            const auto settings = annotate_settings(config);
            if (!o.packet.empty()) {
                const auto record = emowb::annotate_packet(store, o.session, o.packet, *provider, templates, settings);
                print_json(record);
            } else {
                const auto doc = emowb::annotate_session(store, o.session, *provider, templates, settings);
                std::size_t failed = 0;
                for (const auto& r : doc.annotations) {
                    for (const auto& [name, f] : r.fields) failed += f.status == emowb::FieldStatus::failed ? 1 : 0;
                }
                print_json({{"session_id", o.session},
                            {"annotations", doc.annotations.size()},
                            {"failed_fields", failed}});
            }
        } else if (review->parsed()) {
            nlohmann::json actions;
            try {
                actions = nlohmann::json::parse(emowb::read_file(o.actions));
            } catch (const nlohmann::json::parse_error& e) {
                throw emowb::Error(emowb::ErrorCode::invalid_input, std::string("review actions: ") + e.what());
            }
            emowb::ResponseLimits limits;
            limits.emotion_vocabulary = config.emotion_vocabulary;
            const auto n = emowb::apply_review(store, o.session, actions, o.now_ms.value_or(emowb::wall_clock_ms()), limits);
            print_json({{"session_id", o.session}, {"applied", n}});
        } else if (exp->parsed()) {
            const auto text = emowb::export_session(store, o.session, export_options(o));
            if (!o.out.empty()) emowb::write_file_atomic(o.out, text);
            const auto file = emowb::parse_export(text);
            print_json({{"session_id", o.session},
                        {"records", file.records.size()},
                        {"path", store.blob_path(emowb::BlobKind::export_file, o.session).string()}});
        } else if (render->parsed()) {
            emowb::RenderView view;
            const auto stream = store.get_stream(o.session, o.stream);
            if (stream.size() == 0) throw emowb::Error(emowb::ErrorCode::invalid_input, "stream is empty");
            view.start_ms = o.start_ms.value_or(stream.timestamps_ms.front());
            view.end_ms = o.end_ms.value_or(stream.timestamps_ms.back());
            view.width_px = o.width;
            view.height_px = o.height;
            view.fps = o.fps;
            view.window_ms = o.window_ms;
            if (!o.channel.empty()) view.channel = o.channel;
            view.stacked = o.stacked;
            const auto n = emowb::render_stream(store, o.session, o.stream, view, o.out);
            print_json({{"session_id", o.session}, {"stream_id", o.stream}, {"frames", n}, {"out", o.out}});
        } else if (serve->parsed()) {
            emowb::ApiOptions api;
            api.workers = o.workers.value_or(config.serve_workers);
            api.limits.emotion_vocabulary = config.emotion_vocabulary;
            api.annotate = annotate_settings(config);
            emowb::ApiService service(store, templates_for(config), api, make_provider(o, config, false));
            emowb::HttpServer server(service);
            const auto host = o.host.empty() ? config.serve_host : o.host;
            const int port = o.port.value_or(config.serve_port);
            std::signal(SIGINT, on_signal);
            std::signal(SIGTERM, on_signal);
            const int bound = server.start(host, port);
            std::cerr << "serving on http://" << host << ":" << bound << api.base_path << std::endl;
            while (!g_stop) std::this_thread::sleep_for(std::chrono::milliseconds(100));
            server.stop();
        }
    } catch (const UsageError& e) {
        std::cerr << "usage error: " << e.what() << "\n";
        return kUsageError;
    } catch (const emowb::Error& e) {
        std::cerr << "error[" << emowb::to_string(e.code()) << "]: " << e.what() << "\n";
        if (!e.detail().is_null()) std::cerr << e.detail().dump() << "\n";
        return kDomainError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kDomainError;
    }
    return 0;
}

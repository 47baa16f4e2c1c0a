#include "emowb/api.hpp"

#include <httplib.h>

#include <cctype>

#include "emowb/digest.hpp"
#include "emowb/error.hpp"
#include "text_util.hpp"

namespace emowb {

namespace {

ApiResponse json_response(const nlohmann::json& body, int status = 200) {
    return {status, dump_pretty(body), "application/json", {}};
}

ApiResponse raw_json(std::string body) { return {200, std::move(body), "application/json", {}}; }

ApiResponse error_response(ErrorCode code, std::string_view message, const nlohmann::json& detail = nullptr) {
    return {http_status(code), error_body(code, message, detail), "application/json", {}};
}

std::optional<Millis> query_millis(const ApiRequest& r, const std::string& key) {
    auto it = r.query.find(key);
    if (it == r.query.end()) return std::nullopt;
    auto v = detail::parse_finite(it->second);
    if (!v || *v != std::floor(*v)) {
        fail(ErrorCode::invalid_input, "query parameter '" + key + "' must be an integer number of ms");
    }
    return static_cast<Millis>(*v);
}

nlohmann::json parse_body(const ApiRequest& r) {
    if (detail::trim(r.body).empty()) return nlohmann::json::object();
    try {
        auto j = nlohmann::json::parse(r.body);
        if (!j.is_object()) fail(ErrorCode::invalid_input, "request body must be a JSON object");
        return j;
    } catch (const nlohmann::json::parse_error& e) {
        fail(ErrorCode::invalid_input, std::string("request body is not valid JSON: ") + e.what());
    }
}

std::vector<std::string> split_path(std::string_view path) {
    std::vector<std::string> parts;
    for (auto p : detail::split(path, '/')) {
        if (!p.empty()) parts.emplace_back(p);
    }
    return parts;
}

template <class T>
std::vector<T> parse_list(const nlohmann::json& body, const char* key, std::vector<T> fallback,
                          T (*from)(std::string_view)) {
    if (!body.contains(key)) return fallback;
    std::vector<T> out;
    for (const auto& v : body.at(key)) out.push_back(from(v.get<std::string>()));
    return out;
}

}  // namespace

int http_status(ErrorCode code) {
    switch (code) {
        case ErrorCode::not_found: return 404;
        case ErrorCode::conflict: return 409;
        case ErrorCode::invalid_input: return 400;
        case ErrorCode::illegal_transition: return 409;
        case ErrorCode::provider_failure: return 502;
    }
    return 500;
}

std::string error_body(ErrorCode code, std::string_view message, const nlohmann::json& detail) {
    return dump_pretty({{"error", {{"code", to_string(code)}, {"message", message}, {"detail", detail}}}});
}

std::string_view to_string(JobStatus s) {
    switch (s) {
        case JobStatus::pending: return "pending";
        case JobStatus::done: return "done";
        case JobStatus::failed: return "failed";
    }
    return "pending";
}

void to_json(nlohmann::json& j, const Job& job) {
    j = {{"job_id", job.job_id}, {"kind", job.kind}, {"status", to_string(job.status)}};
    if (job.status == JobStatus::done) j["result"] = job.result;
    if (job.status == JobStatus::failed) j["error"] = job.error;
}

JobQueue::JobQueue(std::size_t workers) {
    for (std::size_t i = 0; i < std::max<std::size_t>(1, workers); ++i) workers_.emplace_back([this] { run(); });
}

JobQueue::~JobQueue() { shutdown(); }

std::string JobQueue::submit(std::string kind, std::function<nlohmann::json()> work) {
    std::lock_guard lock(mutex_);
    if (stopping_) fail(ErrorCode::conflict, "service is shutting down");
    std::string id = "job-" + std::to_string(next_id_++);
    jobs_.emplace(id, Job{id, std::move(kind), JobStatus::pending, nullptr, nullptr});
    queue_.emplace_back(id, std::move(work));
    cv_.notify_one();
    return id;
}

std::optional<Job> JobQueue::get(std::string_view job_id) const {
    std::lock_guard lock(mutex_);
    auto it = jobs_.find(job_id);
    if (it == jobs_.end()) return std::nullopt;
    return it->second;
}

void JobQueue::wait_idle() {
    std::unique_lock lock(mutex_);
    idle_cv_.wait(lock, [&] { return queue_.empty() && running_ == 0; });
}

void JobQueue::shutdown() {
    {
        std::lock_guard lock(mutex_);
        if (stopping_ && workers_.empty()) return;
        stopping_ = true;
    }
    cv_.notify_all();
    for (auto& t : workers_) {
        if (t.joinable()) t.join();
    }
    workers_.clear();
}

void JobQueue::run() {
    while (true) {
        std::pair<std::string, std::function<nlohmann::json()>> item;
        {
            std::unique_lock lock(mutex_);
            cv_.wait(lock, [&] { return stopping_ || !queue_.empty(); });
            if (queue_.empty()) return;
            item = std::move(queue_.front());
            queue_.pop_front();
            ++running_;
        }
        JobStatus status = JobStatus::done;
        nlohmann::json result;
        nlohmann::json error;
        try {
            result = item.second();
        } catch (const Error& e) {
            status = JobStatus::failed;
            error = nlohmann::json::parse(error_body(e.code(), e.what(), e.detail()));
        } catch (const std::exception& e) {
            status = JobStatus::failed;
            error = nlohmann::json::parse(error_body(ErrorCode::provider_failure, e.what()));
        }
        {
            std::lock_guard lock(mutex_);
            auto& job = jobs_.at(item.first);
            job.status = status;
            job.result = std::move(result);
            job.error = std::move(error);
            --running_;
        }
        idle_cv_.notify_all();
    }
}

ApiService::ApiService(SessionStore& store, TemplateSet templates, ApiOptions options,
                       std::shared_ptr<LlmProvider> default_provider, ProviderFactory factory)
    : store_(store),
      templates_(std::move(templates)),
      options_(std::move(options)),
      default_provider_(std::move(default_provider)),
      factory_(std::move(factory)),
      jobs_(options_.workers) {}

ApiService::~ApiService() { jobs_.shutdown(); }

ApiResponse ApiService::handle(const ApiRequest& request) {
    ApiResponse response;
    try {
        std::string_view path = request.path;
        const std::string_view base = options_.base_path;
        if (path.substr(0, base.size()) != base ||
            (path.size() > base.size() && path[base.size()] != '/')) {
            fail(ErrorCode::not_found, "no route for " + request.path);
        }
        response = route(request, split_path(path.substr(base.size())));
    } catch (const Error& e) {
        response = error_response(e.code(), e.what(), e.detail());
    } catch (const nlohmann::json::exception& e) {
        response = error_response(ErrorCode::invalid_input, e.what());
    }
    if (response.status == 200 && request.method == "GET") {
        const auto etag = "\"" + sha256_hex(response.body) + "\"";
        response.headers["ETag"] = etag;
        auto it = request.headers.find("if-none-match");
        if (it != request.headers.end() && it->second == etag) {
            response.status = 304;
            response.body.clear();
        }
    }
    return response;
}

ApiResponse ApiService::route(const ApiRequest& r, const std::vector<std::string>& p) {
    const bool get = r.method == "GET";
    const bool post = r.method == "POST";
    auto method_not_allowed = [&]() -> ApiResponse {
        ApiResponse resp = error_response(ErrorCode::invalid_input, "method " + r.method + " not allowed on " + r.path);
        resp.status = 405;
        return resp;
    };
    const auto n = p.size();

    if (n == 2 && p[0] == "jobs") {
        if (!get) return method_not_allowed();
        auto job = jobs_.get(p[1]);
        if (!job) fail(ErrorCode::not_found, "unknown job '" + p[1] + "'");
        return json_response(*job);
    }
    if (n == 0 || p[0] != "sessions") fail(ErrorCode::not_found, "no route for " + r.path);

    if (n == 1) {
        if (!get) return method_not_allowed();
        SessionFilter filter;
        if (auto it = r.query.find("participant_id"); it != r.query.end()) filter.participant_id = it->second;
        if (auto it = r.query.find("scene_id"); it != r.query.end()) filter.scene_id = it->second;
        return json_response(store_.list_sessions(filter));
    }
    const auto& sid = p[1];
    if (n == 2) {
        if (!get) return method_not_allowed();
        return json_response(store_.get_session(sid));
    }
    const auto& what = p[2];
    if (what == "index" && n == 3) {
        if (!get) return method_not_allowed();
        return raw_json(store_.get_blob(BlobKind::index, sid));
    }
    if (what == "events" && n == 3) {
        if (!get) return method_not_allowed();
        return raw_json(store_.get_blob(BlobKind::events, sid));
    }
    if (what == "streams" && n == 5) {
        if (!get) return method_not_allowed();
        const auto& stream_id = p[3];
        if (p[4] == "report") return raw_json(store_.get_blob(BlobKind::report, sid, stream_id));
        if (p[4] == "envelope") {
            const auto stream = store_.get_stream(sid, stream_id);
            auto channel = r.query.count("channel") ? r.query.at("channel") : stream.channel_names.front();
            auto bucket = query_millis(r, "bucket_ms");
            if (!bucket) fail(ErrorCode::invalid_input, "envelope needs bucket_ms");
            std::optional<Interval> window;
            auto start = query_millis(r, "start_ms");
            auto end = query_millis(r, "end_ms");
            if (start || end) {
                if (!start || !end) fail(ErrorCode::invalid_input, "window needs both start_ms and end_ms");
                window = Interval{*start, *end};
            }
            nlohmann::json body = {{"stream_id", stream_id},
                                   {"channel", channel},
                                   {"bucket_ms", *bucket},
                                   {"buckets", downsample_envelope(stream, channel, *bucket, window)}};
            return json_response(body);
        }
        if (p[4] == "window") {
            auto start = query_millis(r, "start_ms");
            auto end = query_millis(r, "end_ms");
            if (!start || !end) fail(ErrorCode::invalid_input, "window needs start_ms and end_ms");
            const auto index = load_index(store_, sid);
            const auto ref = window_to_ref(index, stream_id, *start, *end);
            const auto stream = store_.get_stream(sid, stream_id);
            nlohmann::json ts = nlohmann::json::array();
            nlohmann::json rows = nlohmann::json::array();
            for (auto i = ref.start_idx; i < ref.end_idx; ++i) {
                const auto row = static_cast<std::size_t>(i);
                ts.push_back(stream.timestamps_ms[row]);
                nlohmann::json values = nlohmann::json::array();
                for (std::size_t c = 0; c < stream.channels(); ++c) values.push_back(stream.at(row, c));
                rows.push_back(std::move(values));
            }
            nlohmann::json body = {{"ref", ref},
                                   {"channel_names", stream.channel_names},
                                   {"timestamps_ms", std::move(ts)},
                                   {"values", std::move(rows)}};
            return json_response(body);
        }
        fail(ErrorCode::not_found, "no route for " + r.path);
    }
    if (what == "packets") {
        if (n == 3) {
            if (!get) return method_not_allowed();
            return raw_json(store_.get_blob(BlobKind::packets, sid));
        }
        const auto& pid = p[3];
        if (n == 4) {
            if (!get) return method_not_allowed();
            const auto doc = load_packets(store_, sid);
            const auto* packet = doc.find(pid);
            if (!packet) fail(ErrorCode::not_found, "unknown packet '" + pid + "'");
            return json_response(*packet);
        }
        if (n == 5 && p[4] == "actions") {
            if (!post) return method_not_allowed();
            const auto body = parse_body(r);
            PacketAction action{packet_action_from_string(body.value("action", std::string{})), std::nullopt,
                                body.value("note", std::string{})};
            if (body.contains("boundary")) action.new_boundary = body.at("boundary").get<Interval>();
            return json_response(act_on_packet(store_, sid, pid, action, options_.clock()));
        }
        if (n == 5 && p[4] == "annotate") {
            if (!post) return method_not_allowed();
            return annotate(sid, pid, r);
        }
        fail(ErrorCode::not_found, "no route for " + r.path);
    }
    if (what == "annotations") {
        if (n == 3) {
            if (!get) return method_not_allowed();
            return json_response(load_annotations(store_, sid));
        }
        const auto& aid = p[3];
        if (n == 4) {
            if (!get) return method_not_allowed();
            const auto doc = load_annotations(store_, sid);
            const auto* record = doc.find(aid);
            if (!record) fail(ErrorCode::not_found, "unknown annotation '" + aid + "'");
            return json_response(*record);
        }
        if (n == 5 && p[4] == "actions") {
            if (!post) return method_not_allowed();
            const auto body = parse_body(r);
            AnnotationAction action{annotation_action_from_string(body.value("action", std::string{})),
                                    body.value("field", std::string{}), body.value("text", std::string{})};
            return json_response(act_on_annotation(store_, sid, aid, action, options_.clock(), options_.limits));
        }
        fail(ErrorCode::not_found, "no route for " + r.path);
    }
    if (what == "export" && n == 3) {
        if (get) return {200, store_.get_blob(BlobKind::export_file, sid), "application/x-ndjson", {}};
        if (!post) return method_not_allowed();
        const auto body = parse_body(r);
        ExportOptions opts;
        opts.packet_states = parse_list<PacketState>(body, "packet_states", options_.export_defaults.packet_states,
                                                     packet_state_from_string);
        opts.annotation_statuses = parse_list<AnnotationStatus>(
            body, "annotation_statuses", options_.export_defaults.annotation_statuses, annotation_status_from_string);
        return {200, export_session(store_, sid, opts), "application/x-ndjson", {}};
    }
    fail(ErrorCode::not_found, "no route for " + r.path);
}

ApiResponse ApiService::annotate(const std::string& sid, const std::string& pid, const ApiRequest& request) {
    const auto body = parse_body(request);
    const auto doc = load_packets(store_, sid);
    const auto* packet = doc.find(pid);
    if (!packet) fail(ErrorCode::not_found, "unknown packet '" + pid + "'");
    if (packet->state == PacketState::discarded) {
        fail(ErrorCode::illegal_transition, "packet " + pid + " is discarded", {{"packet_id", pid}, {"state", "discarded"}});
    }

    std::shared_ptr<LlmProvider> provider;
    if (factory_) provider = factory_(body);
    if (!provider) {
        const auto kind = body.value("provider", std::string{});
        if (kind == "mock") {
            provider = std::make_shared<MockProvider>(body.value("transcript", nlohmann::json::object()));
        } else if (kind.empty() || kind == "default") {
            provider = default_provider_;
        } else {
            fail(ErrorCode::invalid_input, "unknown provider '" + kind + "'");
        }
    }
    if (!provider) fail(ErrorCode::invalid_input, "no provider configured; pass {\"provider\": \"mock\"}");

    const auto job_id = jobs_.submit("annotate", [this, sid, pid, provider] {
        return nlohmann::json(annotate_packet(store_, sid, pid, *provider, templates_, options_.annotate));
    });
    return json_response({{"job_id", job_id}, {"status", "pending"}}, 202);
}

struct HttpServer::Impl {
    httplib::Server server;
    std::thread thread;
};

HttpServer::HttpServer(ApiService& service) : impl_(std::make_unique<Impl>()), service_(service) {
    auto handler = [this](const httplib::Request& req, httplib::Response& res) {
        ApiRequest r;
        r.method = req.method;
        r.path = req.path;
        for (const auto& [k, v] : req.params) r.query.emplace(k, v);
        r.body = req.body;
        for (const auto& [k, v] : req.headers) {
            std::string key = k;
            for (auto& c : key) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
            r.headers.emplace(std::move(key), v);
        }
        auto out = service_.handle(r);
        res.status = out.status;
        for (const auto& [k, v] : out.headers) res.set_header(k, v);
        if (out.status != 304) res.set_content(out.body, out.content_type);
    };
    impl_->server.Get(".*", handler);
    impl_->server.Post(".*", handler);
    impl_->server.Put(".*", handler);
    impl_->server.Delete(".*", handler);
    impl_->server.Patch(".*", handler);
}

HttpServer::~HttpServer() { stop(); }

int HttpServer::start(const std::string& host, int port) {
    int bound = port;
    if (port == 0) {
        bound = impl_->server.bind_to_any_port(host);
    } else if (!impl_->server.bind_to_port(host, port)) {
        bound = -1;
    }
    if (bound < 0) fail(ErrorCode::invalid_input, "cannot bind " + host + ":" + std::to_string(port));
    impl_->thread = std::thread([this] { impl_->server.listen_after_bind(); });
    impl_->server.wait_until_ready();
    return bound;
}

void HttpServer::run(const std::string& host, int port) {
    if (!impl_->server.listen(host, port)) {
        fail(ErrorCode::invalid_input, "cannot bind " + host + ":" + std::to_string(port));
    }
}

void HttpServer::stop() {
    if (!impl_) return;
    impl_->server.stop();
    if (impl_->thread.joinable()) impl_->thread.join();
    service_.jobs().wait_idle();
}

}  // namespace emowb

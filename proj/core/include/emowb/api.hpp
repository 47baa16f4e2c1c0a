#pragma once

#include <condition_variable>
#include <deque>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "emowb/error.hpp"
#include "emowb/workbench.hpp"

namespace emowb {

struct ApiRequest {
    std::string method;
    std::string path;
    std::map<std::string, std::string> query;
    std::string body;
    std::map<std::string, std::string> headers;  // lower-case names
};

struct ApiResponse {
    int status = 200;
    std::string body;
    std::string content_type = "application/json";
    std::map<std::string, std::string> headers;
};

/// HTTP status for an error code.
int http_status(ErrorCode code);

/// {"error": {"code", "message", "detail"}}
std::string error_body(ErrorCode code, std::string_view message, const nlohmann::json& detail = nullptr);

enum class JobStatus { pending, done, failed };

std::string_view to_string(JobStatus s);

struct Job {
    std::string job_id;
    std::string kind;
    JobStatus status = JobStatus::pending;
    nlohmann::json result;  // done: operation output
    nlohmann::json error;   // failed: error body
};

void to_json(nlohmann::json& j, const Job& job);

/// Fixed-size worker pool with a job table.
class JobQueue {
public:
    explicit JobQueue(std::size_t workers);
    ~JobQueue();
    JobQueue(const JobQueue&) = delete;
    JobQueue& operator=(const JobQueue&) = delete;

    /// Runs `work` on a worker; its return value becomes the job result and
    /// an emowb::Error marks the job failed.
    std::string submit(std::string kind, std::function<nlohmann::json()> work);
    std::optional<Job> get(std::string_view job_id) const;
    /// Blocks until every submitted job has finished.
    void wait_idle();
    /// Finishes queued jobs, then joins the workers.
    void shutdown();

private:
    void run();

    mutable std::mutex mutex_;
    std::condition_variable cv_;
    std::condition_variable idle_cv_;
    std::deque<std::pair<std::string, std::function<nlohmann::json()>>> queue_;
    std::map<std::string, Job, std::less<>> jobs_;
    std::vector<std::thread> workers_;
    std::size_t next_id_ = 1;
    std::size_t running_ = 0;
    bool stopping_ = false;
};

/// Builds a provider for an annotate request body ({"provider": "mock",
/// "transcript": {...}}); a null result means "use the default provider".
using ProviderFactory = std::function<std::unique_ptr<LlmProvider>(const nlohmann::json& request_body)>;

struct ApiOptions {
    std::string base_path = "/api/v1";
    std::size_t workers = 2;
    std::function<Millis()> clock = wall_clock_ms;
    ResponseLimits limits;
    AnnotateSettings annotate;
    ExportOptions export_defaults;
};

/// Transport-independent request router. Every JSON body is the same
/// document the store holds or the module operation returns.
///
///   GET  /sessions                                  ?participant_id ?scene_id
///   GET  /sessions/{sid}
///   GET  /sessions/{sid}/index
///   GET  /sessions/{sid}/streams/{stream}/report
///   GET  /sessions/{sid}/streams/{stream}/envelope  ?channel ?bucket_ms ?start_ms ?end_ms
///   GET  /sessions/{sid}/streams/{stream}/window    ?start_ms ?end_ms
///   GET  /sessions/{sid}/events
///   GET  /sessions/{sid}/packets
///   GET  /sessions/{sid}/packets/{pid}
///   POST /sessions/{sid}/packets/{pid}/actions      {"action", "boundary", "note"}
///   POST /sessions/{sid}/packets/{pid}/annotate     {"provider", "transcript"} -> 202 job
///   GET  /jobs/{job_id}
///   GET  /sessions/{sid}/annotations
///   GET  /sessions/{sid}/annotations/{aid}
///   POST /sessions/{sid}/annotations/{aid}/actions  {"action", "field", "text"}
///   POST /sessions/{sid}/export                     {"packet_states", "annotation_statuses"}
///   GET  /sessions/{sid}/export
class ApiService {
public:
    ApiService(SessionStore& store, TemplateSet templates, ApiOptions options = {},
               std::shared_ptr<LlmProvider> default_provider = nullptr, ProviderFactory factory = nullptr);
    ~ApiService();

    ApiResponse handle(const ApiRequest& request);

    JobQueue& jobs() { return jobs_; }
    const ApiOptions& options() const { return options_; }

private:
    ApiResponse route(const ApiRequest& request, const std::vector<std::string>& parts);
    ApiResponse annotate(const std::string& sid, const std::string& pid, const ApiRequest& request);

    SessionStore& store_;
    TemplateSet templates_;
    ApiOptions options_;
    std::shared_ptr<LlmProvider> default_provider_;
    ProviderFactory factory_;
    JobQueue jobs_;
};

/// cpp-httplib front end for ApiService.
class HttpServer {
public:
    explicit HttpServer(ApiService& service);
    ~HttpServer();
    HttpServer(const HttpServer&) = delete;
    HttpServer& operator=(const HttpServer&) = delete;

    /// Binds (port 0 picks a free port) and serves on a background thread.
    /// Returns the bound port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    void run(const std::string& host, int port);
    /// Stops accepting, lets in-flight requests finish, then drains jobs.
    void stop();

private:
    struct Impl;
    std::unique_ptr<Impl> impl_;
    ApiService& service_;
};

}  // namespace emowb

#pragma once

#include <condition_variable>
#include <deque>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "kpa/config.hpp"
#include "kpa/ingest.hpp"
#include "kpa/pipeline.hpp"

namespace httplib {
class Server;
}

namespace kpa {

enum class JobStatus { Pending, Running, Done, Failed };

std::string_view to_string(JobStatus status);
JobStatus parse_job_status(std::string_view text);

struct Revision {
    std::string id;
    std::string op;  // rename | delete | add
    std::string key_point_id;
    std::string text;
    std::optional<std::string> topic;  // add only
    std::optional<Stance> stance;      // add only
};

struct JobRecord {
    std::string id;
    JobStatus status = JobStatus::Pending;
    AnalysisConfig config;
    std::string dataset_name;
    std::size_t versions = 0;
    std::vector<Revision> revisions;  // pending, not yet re-matched
    std::size_t next_revision = 1;
    std::size_t next_added = 1;
    std::string error;
};

/// One directory per job under `root`:
///   job.json          status, config, pending revisions
///   dataset.jsonl     the submitted comments
///   versions/<n>.json one immutable analysis document per version
class JobStore {
public:
    explicit JobStore(std::filesystem::path root);

    std::string create(const Dataset& dataset, const AnalysisConfig& config);
    JobRecord load(const std::string& id) const;
    void save(const JobRecord& job) const;
    std::vector<std::string> list() const;
    bool exists(const std::string& id) const;

    Dataset dataset(const std::string& id) const;

    /// Writes version `version`; refuses to overwrite an existing one.
    void write_version(const std::string& id, std::size_t version, const std::string& document) const;
    std::string read_version(const std::string& id, std::size_t version) const;

    const std::filesystem::path& root() const { return root_; }

private:
    std::filesystem::path dir(const std::string& id) const;

    std::filesystem::path root_;
    mutable std::mutex create_mutex_;
    std::size_t next_id_ = 1;
};

/// Job execution and the analyst workflow: automatic analysis (version 0),
/// key point drill-down, draft revisions and re-matching into new versions.
/// Analyses run on a fixed pool of workers in FIFO order; one analysis or
/// re-match runs per job at a time.
class JobService {
public:
    JobService(std::filesystem::path store_root, unsigned workers = 2);
    ~JobService();

    JobService(const JobService&) = delete;
    JobService& operator=(const JobService&) = delete;

    /// Body: {"dataset": {"domain", "name"?, "comments": [...]}} or
    /// {"dataset_path", "domain"?}, plus an optional "config" object with
    /// config-file keys.
    std::string create_job(const nlohmann::json& request);
    nlohmann::json job_status(const std::string& id) const;
    nlohmann::json list_jobs() const;
    std::string version_document(const std::string& id, std::size_t version) const;
    nlohmann::json get_key_points(const std::string& id, std::size_t version) const;
    nlohmann::json drilldown(const std::string& id, std::size_t version, const std::string& kp_id, std::size_t page,
                             std::size_t size) const;
    std::string revise_key_point(const std::string& id, const std::string& kp_id, const std::string& new_text);
    std::string delete_key_point(const std::string& id, const std::string& kp_id);
    std::string add_key_point(const std::string& id, const std::string& text, std::optional<std::string> topic,
                              std::optional<Stance> stance);
    std::size_t rematch(const std::string& id);

    /// Blocks until the job leaves pending/running or the timeout expires.
    JobStatus wait(const std::string& id, std::chrono::milliseconds timeout) const;

    JobStore& store() { return store_; }

private:
    void worker_loop();
    void run_job(const std::string& id);
    std::shared_ptr<std::mutex> job_mutex(const std::string& id) const;
    Scorers scorers_for(const std::string& id, const AnalysisConfig& cfg, const Dataset& dataset);
    JobRecord done_job(const std::string& id) const;
    AnalysisResult latest_result(const JobRecord& job) const;
    std::vector<std::vector<KeyPointResult>> revised_key_points(const JobRecord& job,
                                                                const AnalysisResult& latest) const;

    JobStore store_;
    mutable std::mutex mutex_;
    std::condition_variable queue_cv_;
    mutable std::condition_variable status_cv_;
    std::deque<std::string> queue_;
    bool stopping_ = false;
    mutable std::map<std::string, std::shared_ptr<std::mutex>> job_mutexes_;
    std::map<std::string, Scorers> scorers_;
    std::vector<std::jthread> workers_;
};

/// HTTP/1.1 JSON front end for a JobService.
class HttpServer {
public:
    explicit HttpServer(JobService& service);
    ~HttpServer();

    /// Binds and serves on a background thread; port 0 picks a free port.
    int start(const std::string& host, int port);
    /// Serves on the calling thread until stop().
    bool listen(const std::string& host, int port);
    void stop();

private:
    void routes();

    JobService& service_;
    std::unique_ptr<httplib::Server> server_;
    std::jthread thread_;
};

}  // namespace kpa

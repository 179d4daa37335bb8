#include "kpa/service.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <sstream>

#include "kpa/error.hpp"
#include "kpa/report.hpp"
#include "kpa/scoring.hpp"
#include "kpa/text.hpp"

// after Eigen: resolv.h defines _res
#include <httplib.h>

namespace kpa {

namespace fs = std::filesystem;
using nlohmann::json;

std::string_view to_string(JobStatus status) {
    switch (status) {
        case JobStatus::Pending: return "pending";
        case JobStatus::Running: return "running";
        case JobStatus::Done: return "done";
        case JobStatus::Failed: return "failed";
    }
    return "failed";
}

JobStatus parse_job_status(std::string_view s) {
    if (s == "pending") return JobStatus::Pending;
    if (s == "running") return JobStatus::Running;
    if (s == "done") return JobStatus::Done;
    if (s == "failed") return JobStatus::Failed;
    throw DataError("unknown job status '" + std::string(s) + "'");
}

namespace {

void write_atomically(const fs::path& path, const std::string& content) {
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::string read_file(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw NotFoundError("missing '" + path.filename().string() + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

json revision_json(const Revision& r) {
    json j = {{"id", r.id}, {"op", r.op}, {"key_point_id", r.key_point_id}, {"text", r.text}};
    if (r.topic) j["topic"] = *r.topic;
    if (r.stance) j["stance"] = std::string(to_string(*r.stance));
    return j;
}

Revision revision_from_json(const json& j) {
    Revision r;
    r.id = j.at("id").get<std::string>();
    r.op = j.at("op").get<std::string>();
    r.key_point_id = j.at("key_point_id").get<std::string>();
    r.text = j.value("text", std::string());
    if (j.contains("topic")) r.topic = j.at("topic").get<std::string>();
    if (j.contains("stance")) r.stance = parse_stance(j.at("stance").get<std::string>());
    return r;
}

bool valid_job_id(const std::string& id) {
    return !id.empty() && std::all_of(id.begin(), id.end(), [](char c) {
        return std::isalnum(static_cast<unsigned char>(c)) || c == '-' || c == '_';
    });
}

}  // namespace

JobStore::JobStore(fs::path root) : root_(std::move(root)) {
    fs::create_directories(root_);
    for (const auto& id : list()) {
        if (id.rfind("job-", 0) != 0) continue;
        std::size_t n = 0;
        auto digits = std::string_view(id).substr(4);
        auto [ptr, ec] = std::from_chars(digits.data(), digits.data() + digits.size(), n);
        if (ec == std::errc() && ptr == digits.data() + digits.size()) next_id_ = std::max(next_id_, n + 1);
    }
}

fs::path JobStore::dir(const std::string& id) const {
    if (!valid_job_id(id)) throw NotFoundError("unknown job '" + id + "'");
    return root_ / id;
}

bool JobStore::exists(const std::string& id) const {
    return valid_job_id(id) && fs::exists(root_ / id / "job.json");
}

std::string JobStore::create(const Dataset& dataset, const AnalysisConfig& config) {
    std::lock_guard lock(create_mutex_);
    std::string id;
    do {
        std::ostringstream os;
        os << "job-" << std::setw(6) << std::setfill('0') << next_id_++;
        id = os.str();
    } while (fs::exists(root_ / id));
    fs::create_directories(root_ / id / "versions");
    std::ostringstream data;
    write_dataset(data, dataset);
    write_atomically(root_ / id / "dataset.jsonl", data.str());
    JobRecord job;
    job.id = id;
    job.config = config;
    job.dataset_name = dataset.name;
    save(job);
    return id;
}

void JobStore::save(const JobRecord& job) const {
    json j;
    j["id"] = job.id;
    j["status"] = std::string(to_string(job.status));
    j["config"] = to_json(job.config);
    j["dataset"] = job.dataset_name;
    j["versions"] = job.versions;
    json revs = json::array();
    for (const auto& r : job.revisions) revs.push_back(revision_json(r));
    j["revisions"] = std::move(revs);
    j["next_revision"] = job.next_revision;
    j["next_added"] = job.next_added;
    j["error"] = job.error;
    write_atomically(dir(job.id) / "job.json", j.dump(2));
}

JobRecord JobStore::load(const std::string& id) const {
    if (!exists(id)) throw NotFoundError("unknown job '" + id + "'");
    auto j = json::parse(read_file(dir(id) / "job.json"));
    JobRecord job;
    job.id = j.at("id").get<std::string>();
    job.status = parse_job_status(j.at("status").get<std::string>());
    job.config = config_from_json(j.at("config"));
    job.dataset_name = j.at("dataset").get<std::string>();
    job.versions = j.at("versions").get<std::size_t>();
    for (const auto& r : j.at("revisions")) job.revisions.push_back(revision_from_json(r));
    job.next_revision = j.at("next_revision").get<std::size_t>();
    job.next_added = j.at("next_added").get<std::size_t>();
    job.error = j.at("error").get<std::string>();
    return job;
}

std::vector<std::string> JobStore::list() const {
    std::vector<std::string> ids;
    for (const auto& entry : fs::directory_iterator(root_)) {
        if (entry.is_directory() && fs::exists(entry.path() / "job.json")) ids.push_back(entry.path().filename().string());
    }
    std::sort(ids.begin(), ids.end());
    return ids;
}

Dataset JobStore::dataset(const std::string& id) const {
    auto job = load(id);
    std::ifstream in(dir(id) / "dataset.jsonl");
    return parse_dataset(in, job.config.domain, job.dataset_name);
}

void JobStore::write_version(const std::string& id, std::size_t version, const std::string& document) const {
    auto path = dir(id) / "versions" / (std::to_string(version) + ".json");
    if (fs::exists(path)) throw ConflictError("version " + std::to_string(version) + " already exists");
    write_atomically(path, document);
}

std::string JobStore::read_version(const std::string& id, std::size_t version) const {
    auto path = dir(id) / "versions" / (std::to_string(version) + ".json");
    if (!fs::exists(path)) throw NotFoundError("job '" + id + "' has no version " + std::to_string(version));
    return read_file(path);
}

JobService::JobService(fs::path store_root, unsigned workers) : store_(std::move(store_root)) {
    // Jobs interrupted by a restart go back to the queue.
    for (const auto& id : store_.list()) {
        auto job = store_.load(id);
        if (job.status == JobStatus::Pending || job.status == JobStatus::Running) {
            job.status = JobStatus::Pending;
            store_.save(job);
            queue_.push_back(id);
        }
    }
    workers = std::max(1u, workers);
    for (unsigned i = 0; i < workers; ++i) workers_.emplace_back([this] { worker_loop(); });
}

JobService::~JobService() {
    {
        std::lock_guard lock(mutex_);
        stopping_ = true;
    }
    queue_cv_.notify_all();
    workers_.clear();
}

void JobService::worker_loop() {
    for (;;) {
        std::string id;
        {
            std::unique_lock lock(mutex_);
            queue_cv_.wait(lock, [this] { return stopping_ || !queue_.empty(); });
            if (stopping_) return;
            id = queue_.front();
            queue_.pop_front();
        }
        run_job(id);
        status_cv_.notify_all();
    }
}

std::shared_ptr<std::mutex> JobService::job_mutex(const std::string& id) const {
    std::lock_guard lock(mutex_);
    auto& m = job_mutexes_[id];
    if (!m) m = std::make_shared<std::mutex>();
    return m;
}

Scorers JobService::scorers_for(const std::string& id, const AnalysisConfig& cfg, const Dataset& dataset) {
    {
        std::lock_guard lock(mutex_);
        if (auto it = scorers_.find(id); it != scorers_.end()) return it->second;
    }
    auto scorers = make_scorers(cfg, &dataset);
    std::lock_guard lock(mutex_);
    return scorers_.try_emplace(id, std::move(scorers)).first->second;
}

void JobService::run_job(const std::string& id) {
    auto guard = job_mutex(id);
    std::lock_guard job_lock(*guard);
    JobRecord job = store_.load(id);
    job.status = JobStatus::Running;
    store_.save(job);
    status_cv_.notify_all();
    try {
        auto dataset = store_.dataset(id);
        auto scorers = scorers_for(id, job.config, dataset);
        auto result = run_analysis(dataset, job.config, *scorers.match, *scorers.quality);
        store_.write_version(id, 0, emit_report(result, ReportFormat::Structured));
        job.versions = 1;
        job.status = JobStatus::Done;
    } catch (const std::exception& e) {
        job.status = JobStatus::Failed;
        job.error = e.what();
    }
    store_.save(job);
}

std::string JobService::create_job(const json& request) {
    if (!request.is_object()) throw ConfigError("request body must be a JSON object");
    json config_json = request.value("config", json::object());
    std::optional<Domain> domain;
    if (request.contains("domain")) domain = parse_domain(request["domain"].get<std::string>());
    if (request.contains("dataset") && request["dataset"].contains("domain"))
        domain = parse_domain(request["dataset"]["domain"].get<std::string>());
    if (domain && !config_json.contains("profile") && !config_json.contains("domain"))
        config_json["profile"] = std::string(to_string(*domain));
    AnalysisConfig cfg;
    try {
        cfg = config_from_json(config_json);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("invalid config: ") + e.what());
    }
    if (domain) cfg.domain = *domain;
    cfg.validate();

    Dataset dataset;
    try {
        if (request.contains("dataset")) {
            const auto& d = request["dataset"];
            std::ostringstream lines;
            for (const auto& c : d.at("comments")) lines << c.dump() << '\n';
            std::istringstream in(lines.str());
            dataset = parse_dataset(in, cfg.domain, d.value("name", std::string("upload")));
        } else if (request.contains("dataset_path")) {
            dataset = load_dataset(request["dataset_path"].get<std::string>(), cfg.domain);
        } else {
            throw DataError("request needs a dataset or a dataset_path");
        }
    } catch (const json::exception& e) {
        throw DataError(std::string("invalid dataset: ") + e.what());
    }
    if (dataset.comments.empty()) throw DataError("no comments");

    auto id = store_.create(dataset, cfg);
    {
        std::lock_guard lock(mutex_);
        queue_.push_back(id);
    }
    queue_cv_.notify_one();
    return id;
}

json JobService::job_status(const std::string& id) const {
    auto job = store_.load(id);
    json j = {{"job_id", job.id},
              {"status", std::string(to_string(job.status))},
              {"versions", job.versions},
              {"pending_revisions", job.revisions.size()}};
    if (job.status == JobStatus::Failed) j["error"] = job.error;
    json revs = json::array();
    for (const auto& r : job.revisions) revs.push_back(revision_json(r));
    j["revisions"] = std::move(revs);
    return j;
}

json JobService::list_jobs() const {
    json arr = json::array();
    for (const auto& id : store_.list()) arr.push_back(job_status(id));
    return {{"jobs", arr}};
}

JobStatus JobService::wait(const std::string& id, std::chrono::milliseconds timeout) const {
    auto deadline = std::chrono::steady_clock::now() + timeout;
    for (;;) {
        auto status = store_.load(id).status;
        if (status == JobStatus::Done || status == JobStatus::Failed) return status;
        if (std::chrono::steady_clock::now() >= deadline) return status;
        std::unique_lock lock(mutex_);
        status_cv_.wait_for(lock, std::chrono::milliseconds(20));
    }
}

JobRecord JobService::done_job(const std::string& id) const {
    auto job = store_.load(id);
    if (job.status == JobStatus::Failed) throw ConflictError("job failed: " + job.error);
    if (job.status != JobStatus::Done) throw ConflictError("not ready");
    return job;
}

std::string JobService::version_document(const std::string& id, std::size_t version) const {
    auto job = done_job(id);
    if (version >= job.versions) throw NotFoundError("job '" + id + "' has no version " + std::to_string(version));
    return store_.read_version(id, version);
}

AnalysisResult JobService::latest_result(const JobRecord& job) const {
    return analysis_from_json(json::parse(store_.read_version(job.id, job.versions - 1)));
}

json JobService::get_key_points(const std::string& id, std::size_t version) const {
    auto doc = json::parse(version_document(id, version));
    json out = {{"job_id", id}, {"version", version}};
    json kps = json::array();
    json groups = json::array();
    for (const auto& g : doc.at("groups")) {
        groups.push_back({{"topic", g.at("topic")},
                          {"stance", g.at("stance")},
                          {"comment_count", g.at("comment_count")},
                          {"unmatched_count", g.at("unmatched").size()}});
        for (const auto& kp : g.at("key_points")) {
            kps.push_back({{"id", kp.at("id")},
                           {"text", kp.at("text")},
                           {"topic", g.at("topic")},
                           {"stance", g.at("stance")},
                           {"count", kp.at("count")},
                           {"selection_count", kp.at("selection_count")},
                           {"prevalence", kp.at("prevalence")},
                           {"percentage", kp.at("percentage")}});
        }
    }
    out["key_points"] = std::move(kps);
    out["groups"] = std::move(groups);
    return out;
}

json JobService::drilldown(const std::string& id, std::size_t version, const std::string& kp_id, std::size_t page,
                           std::size_t size) const {
    if (page < 1 || size < 1) throw ConfigError("page and size must be >= 1");
    auto doc = json::parse(version_document(id, version));
    for (const auto& g : doc.at("groups")) {
        for (const auto& kp : g.at("key_points")) {
            if (kp.at("id") != kp_id) continue;
            std::map<std::string, std::string> texts;
            for (const auto& c : g.at("comments")) texts[c.at("id").get<std::string>()] = c.at("analysis_text");
            const auto& matched = kp.at("matched");
            json comments = json::array();
            std::size_t begin = (page - 1) * size;
            for (std::size_t i = begin; i < matched.size() && i < begin + size; ++i) {
                auto cid = matched[i].at("id").get<std::string>();
                comments.push_back({{"id", cid}, {"text", texts[cid]}, {"score", matched[i].at("score")}});
            }
            return {{"job_id", id},     {"version", version}, {"kp_id", kp_id},        {"page", page},
                    {"size", size},     {"total", matched.size()}, {"comments", comments}};
        }
    }
    throw NotFoundError("key point '" + kp_id + "' not found in version " + std::to_string(version));
}

std::vector<std::vector<KeyPointResult>> JobService::revised_key_points(const JobRecord& job,
                                                                        const AnalysisResult& latest) const {
    std::vector<std::vector<KeyPointResult>> lists;
    for (const auto& g : latest.groups) lists.push_back(g.key_points);
    for (const auto& rev : job.revisions) {
        if (rev.op == "add") {
            std::size_t target = lists.size();
            for (std::size_t g = 0; g < latest.groups.size(); ++g) {
                bool topic_ok = !rev.topic || latest.groups[g].topic == *rev.topic;
                bool stance_ok = !rev.stance || latest.groups[g].stance == *rev.stance;
                if (topic_ok && stance_ok) {
                    target = g;
                    break;
                }
            }
            if (target == lists.size()) throw NotFoundError("no analysis group for the added key point");
            KeyPointResult kp;
            kp.id = rev.key_point_id;
            kp.text = rev.text;
            lists[target].push_back(std::move(kp));
            continue;
        }
        for (auto& list : lists) {
            auto it = std::find_if(list.begin(), list.end(), [&](const auto& kp) { return kp.id == rev.key_point_id; });
            if (it == list.end()) continue;
            if (rev.op == "delete") {
                list.erase(it);
            } else {
                it->text = rev.text;
                it->selection_matches.clear();
            }
        }
    }
    return lists;
}

namespace {

bool has_key_point(const std::vector<std::vector<KeyPointResult>>& lists, const std::string& kp_id) {
    for (const auto& list : lists) {
        for (const auto& kp : list) {
            if (kp.id == kp_id) return true;
        }
    }
    return false;
}

}  // namespace

std::string JobService::revise_key_point(const std::string& id, const std::string& kp_id, const std::string& new_text) {
    if (text::trim(new_text).empty()) throw ConfigError("key point text must not be empty");
    done_job(id);  // fail fast instead of queueing behind a running analysis
    auto guard = job_mutex(id);
    std::lock_guard lock(*guard);
    auto job = done_job(id);
    if (!has_key_point(revised_key_points(job, latest_result(job)), kp_id))
        throw NotFoundError("unknown key point '" + kp_id + "'");
    Revision rev{"rev-" + std::to_string(job.next_revision++), "rename", kp_id, std::string(text::trim(new_text)), {}, {}};
    job.revisions.push_back(rev);
    store_.save(job);
    return rev.id;
}

std::string JobService::delete_key_point(const std::string& id, const std::string& kp_id) {
    done_job(id);
    auto guard = job_mutex(id);
    std::lock_guard lock(*guard);
    auto job = done_job(id);
    if (!has_key_point(revised_key_points(job, latest_result(job)), kp_id))
        throw NotFoundError("unknown key point '" + kp_id + "'");
    Revision rev{"rev-" + std::to_string(job.next_revision++), "delete", kp_id, {}, {}, {}};
    job.revisions.push_back(rev);
    store_.save(job);
    return rev.id;
}

std::string JobService::add_key_point(const std::string& id, const std::string& new_text,
                                      std::optional<std::string> topic, std::optional<Stance> stance) {
    if (text::trim(new_text).empty()) throw ConfigError("key point text must not be empty");
    done_job(id);
    auto guard = job_mutex(id);
    std::lock_guard lock(*guard);
    auto job = done_job(id);
    auto latest = latest_result(job);
    std::size_t groups = 0;
    for (const auto& g : latest.groups) {
        if ((!topic || g.topic == *topic) && (!stance || g.stance == *stance)) ++groups;
    }
    if (groups == 0) throw NotFoundError("no analysis group matches the given topic/stance");
    if (groups > 1) throw ConfigError("several analysis groups match; give topic and stance");
    Revision rev{"rev-" + std::to_string(job.next_revision++), "add", "kp-added-" + std::to_string(job.next_added++),
                 std::string(text::trim(new_text)), topic, stance};
    job.revisions.push_back(rev);
    store_.save(job);
    return rev.id;
}

std::size_t JobService::rematch(const std::string& id) {
    done_job(id);
    auto guard = job_mutex(id);
    std::lock_guard lock(*guard);
    auto job = done_job(id);
    if (job.revisions.empty()) throw ConflictError("no pending revisions");
    auto latest = latest_result(job);
    auto lists = revised_key_points(job, latest);
    auto scorers = scorers_for(id, job.config, store_.dataset(id));
    auto next = kpa::rematch(latest, lists, *scorers.match);
    std::size_t version = job.versions;
    store_.write_version(id, version, emit_report(next, ReportFormat::Structured));
    job.versions = version + 1;
    job.revisions.clear();
    store_.save(job);
    return version;
}

namespace {

int status_for(const std::exception& e) {
    if (const auto* err = dynamic_cast<const Error*>(&e)) {
        switch (err->kind()) {
            case Error::Kind::Usage:
            case Error::Kind::Config:
            case Error::Kind::Data: return 400;
            case Error::Kind::NotFound: return 404;
            case Error::Kind::Conflict: return 409;
            case Error::Kind::Scorer: return 502;
        }
    }
    if (dynamic_cast<const json::exception*>(&e)) return 400;
    return 500;
}

std::string code_for(int status) {
    switch (status) {
        case 400: return "invalid_request";
        case 404: return "not_found";
        case 409: return "conflict";
        case 502: return "scorer_error";
    }
    return "internal_error";
}

template <typename Handler>
httplib::Server::Handler guarded(Handler handler) {
    return [handler](const httplib::Request& req, httplib::Response& res) {
        try {
            handler(req, res);
        } catch (const std::exception& e) {
            int status = status_for(e);
            res.status = status;
            res.set_content(json{{"code", code_for(status)}, {"message", e.what()}}.dump(), "application/json");
        }
    };
}

std::size_t parse_index(const std::string& s, const char* what) {
    std::size_t v = 0;
    auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
    if (ec != std::errc() || ptr != s.data() + s.size()) throw ConfigError(std::string("invalid ") + what);
    return v;
}

json parse_body(const httplib::Request& req) {
    if (req.body.empty()) return json::object();
    try {
        return json::parse(req.body);
    } catch (const json::exception& e) {
        throw ConfigError(std::string("malformed JSON body: ") + e.what());
    }
}

void reply(httplib::Response& res, const json& body, int status = 200) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
}

}  // namespace

HttpServer::HttpServer(JobService& service) : service_(service), server_(std::make_unique<httplib::Server>()) {
    routes();
}

HttpServer::~HttpServer() { stop(); }

void HttpServer::routes() {
    auto& s = *server_;
    s.Post("/v1/jobs", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, {{"job_id", service_.create_job(parse_body(req))}}, 201);
    }));
    s.Get("/v1/jobs", guarded([this](const httplib::Request&, httplib::Response& res) {
        reply(res, service_.list_jobs());
    }));
    s.Get(R"(/v1/jobs/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, service_.job_status(req.matches[1]));
    }));
    s.Get(R"(/v1/jobs/([^/]+)/versions/([^/]+))", guarded([this](const httplib::Request& req, httplib::Response& res) {
        res.set_content(service_.version_document(req.matches[1], parse_index(req.matches[2], "version")),
                        "application/json");
    }));
    s.Get(R"(/v1/jobs/([^/]+)/versions/([^/]+)/keypoints)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
              reply(res, service_.get_key_points(req.matches[1], parse_index(req.matches[2], "version")));
          }));
    s.Get(R"(/v1/jobs/([^/]+)/versions/([^/]+)/keypoints/([^/]+)/comments)",
          guarded([this](const httplib::Request& req, httplib::Response& res) {
              std::size_t page = req.has_param("page") ? parse_index(req.get_param_value("page"), "page") : 1;
              std::size_t size = req.has_param("size") ? parse_index(req.get_param_value("size"), "size") : 20;
              reply(res, service_.drilldown(req.matches[1], parse_index(req.matches[2], "version"), req.matches[3],
                                            page, size));
          }));
    s.Patch(R"(/v1/jobs/([^/]+)/keypoints/([^/]+))",
            guarded([this](const httplib::Request& req, httplib::Response& res) {
                auto body = parse_body(req);
                std::string rev;
                if (body.value("deleted", false)) {
                    rev = service_.delete_key_point(req.matches[1], req.matches[2]);
                } else {
                    if (!body.contains("text") || !body["text"].is_string())
                        throw ConfigError("body needs \"text\" or \"deleted\": true");
                    rev = service_.revise_key_point(req.matches[1], req.matches[2], body["text"].get<std::string>());
                }
                reply(res, {{"revision_id", rev}});
            }));
    s.Post(R"(/v1/jobs/([^/]+)/keypoints)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        auto body = parse_body(req);
        if (!body.contains("text") || !body["text"].is_string()) throw ConfigError("body needs \"text\"");
        std::optional<std::string> topic;
        std::optional<Stance> stance;
        if (body.contains("topic")) topic = body["topic"].get<std::string>();
        if (body.contains("stance")) stance = parse_stance(body["stance"].get<std::string>());
        reply(res, {{"revision_id", service_.add_key_point(req.matches[1], body["text"], topic, stance)}}, 201);
    }));
    s.Post(R"(/v1/jobs/([^/]+)/rematch)", guarded([this](const httplib::Request& req, httplib::Response& res) {
        reply(res, {{"version", service_.rematch(req.matches[1])}});
    }));
}

int HttpServer::start(const std::string& host, int port) {
    int bound = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
    if (bound < 0) throw std::runtime_error("cannot bind " + host + ":" + std::to_string(port));
    thread_ = std::jthread([this] { server_->listen_after_bind(); });
    server_->wait_until_ready();
    return bound;
}

bool HttpServer::listen(const std::string& host, int port) { return server_->listen(host, port); }

void HttpServer::stop() {
    if (server_) server_->stop();
    if (thread_.joinable()) thread_.join();
}

}  // namespace kpa

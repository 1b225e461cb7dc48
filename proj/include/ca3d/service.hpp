#pragma once

#include <condition_variable>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <mutex>
#include <string>
#include <utility>
#include <vector>

// Eigen (via pipeline) must precede httplib: <resolv.h> defines a `_res` macro.
#include "ca3d/error.hpp"
#include "ca3d/pipeline.hpp"

#include <httplib.h>
#include <json.hpp>

namespace ca3d {

/// HTTP front end for the viewer. Reads see the latest published run;
/// clustering jobs run one at a time in arrival order.
class Service {
 public:
  struct Published {
    std::uint64_t run_id = 0;
    PipelineOutput output;
    nlohmann::json state;
  };

  explicit Service(std::filesystem::path state_dir) : state_dir_(std::move(state_dir)) {
    std::filesystem::create_directories(state_dir_);
    install_routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  /// Runs `spec` after every previously submitted job has finished and
  /// publishes the result. The output directory is chosen by the service.
  std::shared_ptr<const Published> submit(RunSpec spec) {
    spec.validate();
    std::unique_lock lock(queue_mutex_);
    const std::uint64_t ticket = next_ticket_++;
    queue_cv_.wait(lock, [&] { return serving_ == ticket; });
    lock.unlock();

    std::shared_ptr<const Published> published;
    try {
      published = execute(std::move(spec), ticket + 1);
    } catch (...) {
      finish_ticket();
      throw;
    }
    finish_ticket();
    return published;
  }

  std::shared_ptr<const Published> latest() const {
    std::lock_guard lock(state_mutex_);
    return latest_;
  }

  nlohmann::json metrics_json() const {
    std::lock_guard lock(state_mutex_);
    return {{"rows", metrics_}};
  }

  httplib::Server& server() { return server_; }

  int bind_to_any_port(const std::string& host) { return server_.bind_to_any_port(host); }
  bool listen_after_bind() { return server_.listen_after_bind(); }
  bool listen(const std::string& host, int port) { return server_.listen(host, port); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

 private:
  void finish_ticket() {
    {
      std::lock_guard lock(queue_mutex_);
      ++serving_;
    }
    queue_cv_.notify_all();
  }

  std::shared_ptr<const Published> execute(RunSpec spec, std::uint64_t run_id) {
    spec.output = (state_dir_ / ("run-" + std::to_string(run_id))).string();
    std::filesystem::remove_all(spec.output);
    auto pub = std::make_shared<Published>();
    pub->run_id = run_id;
    pub->output = run_pipeline(spec);
    const auto& r = pub->output.result;
    pub->state = r.grid_json;
    pub->state["run_id"] = run_id;
    pub->state["spec"] = spec.to_json();
    pub->state["threshold"] = r.threshold;
    pub->state["metrics"] = row_json(r.row, run_id);

    std::lock_guard lock(state_mutex_);
    metrics_.push_back(row_json(r.row, run_id));
    latest_ = pub;
    return pub;
  }

  static nlohmann::json row_json(const MetricsRow& row, std::uint64_t run_id) {
    nlohmann::json j = {{"run_id", run_id},
                        {"metric", row.metric},
                        {"n_docs", row.n_docs},
                        {"representation", row.representation},
                        {"distance", row.distance},
                        {"threshold_level", row.threshold_level},
                        {"n_clusters", row.n_clusters},
                        {"time_ms", row.time_ms},
                        {"entropy_pct", nullptr},
                        {"fmeasure_pct", nullptr}};
    if (row.entropy) j["entropy_pct"] = *row.entropy * 100.0;
    if (row.fmeasure) j["fmeasure_pct"] = *row.fmeasure * 100.0;
    return j;
  }

  static void send_json(httplib::Response& res, int status, const nlohmann::json& body) {
    res.status = status;
    res.set_content(body.dump(), "application/json");
  }

  static void send_error(httplib::Response& res, int status, const std::string& message,
                         const std::string& module) {
    send_json(res, status, {{"error", message}, {"module", module}});
  }

  void install_routes() {
    server_.Get("/api/state", [this](const httplib::Request&, httplib::Response& res) {
      const auto pub = latest();
      if (!pub) {
        send_error(res, 404, "no clustering run yet; POST a run spec to /api/cluster",
                   "cli_service");
        return;
      }
      send_json(res, 200, pub->state);
    });

    server_.Post("/api/cluster", [this](const httplib::Request& req, httplib::Response& res) {
      RunSpec spec;
      try {
        spec = RunSpec::from_json(nlohmann::json::parse(req.body));
        spec.validate();
      } catch (const nlohmann::json::exception& e) {
        send_error(res, 400, std::string("invalid JSON: ") + e.what(), "cli_service");
        return;
      } catch (const Error& e) {
        send_error(res, 400, e.what(), e.module());
        return;
      }
      try {
        send_json(res, 200, submit(std::move(spec))->state);
      } catch (const Error& e) {
        send_error(res, 500, e.what(), e.module());
      } catch (const std::exception& e) {
        send_error(res, 500, e.what(), "cli_service");
      }
    });

    server_.Get(R"(/api/document/(\d+))",
                [this](const httplib::Request& req, httplib::Response& res) {
                  const auto pub = latest();
                  if (!pub) {
                    send_error(res, 404, "no clustering run yet", "cli_service");
                    return;
                  }
                  const auto& corpus = pub->output.prepared.corpus;
                  const auto id = std::stoull(req.matches[1].str());
                  if (id < 1 || id > corpus.size()) {
                    send_error(res, 404, "unknown document " + req.matches[1].str(),
                               "cli_service");
                    return;
                  }
                  send_json(res, 200, document_json(*pub, static_cast<DocId>(id)));
                });

    server_.Get("/api/metrics", [this](const httplib::Request&, httplib::Response& res) {
      send_json(res, 200, metrics_json());
    });
  }

  static nlohmann::json document_json(const Published& pub, DocId id) {
    const auto& prepared = pub.output.prepared;
    const auto& doc = prepared.corpus.documents[id - 1];
    nlohmann::json vec = nlohmann::json::array();
    const auto& col = prepared.weighted.columns[id - 1];
    for (const auto& [t, w] : col.entries) {
      vec.push_back({{"term", prepared.weighted.vocabulary.terms[t]}, {"weight", w}});
    }
    nlohmann::json j = {{"id", id},
                        {"title", doc.title},
                        {"body", doc.body},
                        {"labels", doc.labels},
                        {"vector", std::move(vec)},
                        {"cluster_id", nullptr}};
    const auto& clusters = pub.output.result.assignment.cluster_of;
    if (const auto it = clusters.find(id); it != clusters.end()) j["cluster_id"] = it->second;
    return j;
  }

  std::filesystem::path state_dir_;
  httplib::Server server_;

  mutable std::mutex state_mutex_;
  std::shared_ptr<const Published> latest_;
  std::vector<nlohmann::json> metrics_;

  std::mutex queue_mutex_;
  std::condition_variable queue_cv_;
  std::uint64_t next_ticket_ = 0;
  std::uint64_t serving_ = 0;
};

}  // namespace ca3d

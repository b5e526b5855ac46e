#include "afs/mock_critic.hpp"

#include <chrono>
#include <map>
#include <mutex>
#include <optional>
#include <thread>
#include <utility>

#include <httplib.h>

#include "afs/errors.hpp"

namespace afs {

struct MockCriticServer::Impl {
  httplib::Server server;
  std::thread listener;
  int port = 0;

  mutable std::mutex mu;
  std::optional<SceneSpec> scene;
  RubricConfig rubric;
  std::map<std::string, std::pair<int, std::string>> fixtures;
  std::map<std::string, std::pair<int, int>> flaky;  // remaining, status
  std::map<std::string, int> delays_ms;
  std::map<std::string, std::size_t> counts;

  void handle(const httplib::Request& req, httplib::Response& res) {
    int delay = 0;
    {
      std::lock_guard<std::mutex> lock(mu);
      ++counts[req.path];
      if (auto it = delays_ms.find(req.path); it != delays_ms.end()) {
        delay = it->second;
      }
    }
    if (delay > 0) {
      std::this_thread::sleep_for(std::chrono::milliseconds(delay));
    }

    std::lock_guard<std::mutex> lock(mu);
    if (auto it = flaky.find(req.path);
        it != flaky.end() && it->second.first > 0) {
      --it->second.first;
      res.status = it->second.second;
      res.set_content("mock transient failure", "text/plain");
      return;
    }
    if (auto it = fixtures.find(req.path); it != fixtures.end()) {
      res.status = it->second.first;
      res.set_content(it->second.second, "application/json");
      return;
    }
    if (scene) {
      handle_oracle(req, res);
      return;
    }
    res.status = 404;
    res.set_content("no fixture for " + req.path, "text/plain");
  }

  // Assumes mu is held.
  void handle_oracle(const httplib::Request& req, httplib::Response& res) {
    json body;
    try {
      body = json::parse(req.body);
    } catch (const json::parse_error&) {
      res.status = 400;
      res.set_content("request body is not JSON", "text/plain");
      return;
    }
    if (!body.contains("preview") || !body["preview"].is_array()) {
      res.status = 400;
      res.set_content("request needs a numeric 'preview' array", "text/plain");
      return;
    }
    DecodedPreview preview;
    for (const json& v : body["preview"]) {
      if (!v.is_number()) {
        res.status = 400;
        res.set_content("preview entries must be numbers", "text/plain");
        return;
      }
      preview.values.push_back(v.get<double>());
    }

    try {
      const AttainedAttributes attrs = perceive(preview, *scene);
      if (req.path == "/score") {
        const ScoreBreakdown s = oracle_score(attrs, *scene, rubric);
        std::string reason;
        for (const Deduction& d : s.deductions) {
          if (!reason.empty()) reason += ",";
          reason += d.reason;
        }
        if (reason.empty()) reason = "ok";
        res.set_content(
            json{{"score", s.total}, {"reason", reason}}.dump(),
            "application/json");
      } else if (req.path == "/diagnose") {
        res.set_content(diagnosis_to_json(oracle_diagnose(attrs, *scene)).dump(),
                        "application/json");
      } else if (req.path == "/refine") {
        res.set_content(json{{"edits", json::array()}}.dump(),
                        "application/json");
      } else {
        res.status = 404;
        res.set_content("unknown endpoint " + req.path, "text/plain");
      }
    } catch (const Error& e) {
      res.status = 400;
      res.set_content(std::string("oracle rejected request: ") + e.what(),
                      "text/plain");
    }
  }
};

MockCriticServer::MockCriticServer(int port) : impl_(new Impl) {
  Impl* impl = impl_.get();
  impl_->server.Post(R"(/.+)", [impl](const httplib::Request& req,
                                      httplib::Response& res) {
    impl->handle(req, res);
  });

  if (port == 0) {
    impl_->port = impl_->server.bind_to_any_port("127.0.0.1");
    if (impl_->port <= 0) {
      throw Error("mock critic: could not bind an ephemeral port");
    }
  } else {
    if (!impl_->server.bind_to_port("127.0.0.1", port)) {
      throw Error("mock critic: could not bind port " + std::to_string(port));
    }
    impl_->port = port;
  }
  impl_->listener = std::thread([impl] { impl->server.listen_after_bind(); });
  for (int i = 0; i < 1000 && !impl_->server.is_running(); ++i) {
    std::this_thread::sleep_for(std::chrono::milliseconds(1));
  }
  if (!impl_->server.is_running()) {
    throw Error("mock critic: server thread failed to start");
  }
}

MockCriticServer::~MockCriticServer() { stop(); }

int MockCriticServer::port() const { return impl_->port; }

std::string MockCriticServer::url() const {
  return "http://127.0.0.1:" + std::to_string(impl_->port);
}

void MockCriticServer::set_scene(SceneSpec spec, RubricConfig rubric) {
  spec.validate();
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->scene = std::move(spec);
  impl_->rubric = rubric;
}

void MockCriticServer::set_fixture(const std::string& path, int status,
                                   std::string body) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->fixtures[path] = {status, std::move(body)};
}

void MockCriticServer::clear_fixture(const std::string& path) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->fixtures.erase(path);
}

void MockCriticServer::set_flaky(const std::string& path, int fail_first,
                                 int status) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->flaky[path] = {fail_first, status};
}

void MockCriticServer::set_delay_ms(const std::string& path, int ms) {
  std::lock_guard<std::mutex> lock(impl_->mu);
  impl_->delays_ms[path] = ms;
}

std::size_t MockCriticServer::requests(const std::string& path) const {
  std::lock_guard<std::mutex> lock(impl_->mu);
  auto it = impl_->counts.find(path);
  return it == impl_->counts.end() ? 0 : it->second;
}

void MockCriticServer::stop() {
  if (impl_->server.is_running()) impl_->server.stop();
  if (impl_->listener.joinable()) impl_->listener.join();
}

void MockCriticServer::wait() {
  if (impl_->listener.joinable()) impl_->listener.join();
}

}  // namespace afs

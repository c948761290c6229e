#include "contentious/mock_scorer.hpp"

#include <httplib.h>

#include <algorithm>
#include <fstream>

#include <nlohmann/json.hpp>

#include "contentious/errors.hpp"

namespace contentious {

using nlohmann::json;

MockScorerFixture load_mock_fixture(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open mock fixture " + path.string());
  const auto j = json::parse(in, nullptr, false);
  if (j.is_discarded() || !j.is_object()) throw FormatError("mock fixture " + path.string() + " is not a JSON object");
  MockScorerFixture f;
  f.api_key = j.value("api_key", f.api_key);
  f.default_score = j.value("default", f.default_score);
  if (j.contains("scores")) f.scores = j["scores"].get<std::map<std::string, double>>();
  if (j.contains("fail_first")) f.fail_first = j["fail_first"].get<std::map<std::string, int>>();
  if (j.contains("fail_always")) f.fail_always = j["fail_always"].get<std::vector<std::string>>();
  return f;
}

MockToxicityServer::MockToxicityServer(MockScorerFixture fixture)
    : fixture_(std::move(fixture)), server_(std::make_unique<httplib::Server>()) {
  install_handlers();
}

MockToxicityServer::~MockToxicityServer() { stop(); }

void MockToxicityServer::install_handlers() {
  server_->Post(kPath, [this](const httplib::Request& req, httplib::Response& res) {
    const auto now = std::chrono::steady_clock::now();
    auto record = [&](const std::string& text, int status) {
      std::lock_guard lock(mu_);
      arrivals_.push_back({now, text, status});
    };
    if (req.get_param_value("key") != fixture_.api_key) {
      res.status = 400;
      res.set_content(json{{"error",
                            {{"code", 400},
                             {"message", "API key not valid. Please pass a valid API key."},
                             {"status", "INVALID_ARGUMENT"},
                             {"details", json::array({{{"reason", "API_KEY_INVALID"}}})}}}}
                          .dump(),
                      "application/json");
      record({}, res.status);
      return;
    }
    const auto body = json::parse(req.body, nullptr, false);
    const json::json_pointer text_ptr("/comment/text");
    if (body.is_discarded() || !body.contains(text_ptr) || !body[text_ptr].is_string()) {
      res.status = 400;
      res.set_content(R"({"error":{"code":400,"message":"comment.text is required"}})", "application/json");
      record({}, res.status);
      return;
    }
    const auto text = body[text_ptr].get<std::string>();
    bool fail = std::find(fixture_.fail_always.begin(), fixture_.fail_always.end(), text) != fixture_.fail_always.end();
    if (!fail) {
      if (const auto it = fixture_.fail_first.find(text); it != fixture_.fail_first.end()) {
        std::lock_guard lock(mu_);
        if (failures_served_[text] < it->second) {
          ++failures_served_[text];
          fail = true;
        }
      }
    }
    if (fail) {
      res.status = 500;
      res.set_content(R"({"error":{"code":500,"message":"injected failure"}})", "application/json");
      record(text, res.status);
      return;
    }
    const auto it = fixture_.scores.find(text);
    const double score = it == fixture_.scores.end() ? fixture_.default_score : it->second;
    json reply;
    reply["attributeScores"]["TOXICITY"]["summaryScore"] = {{"value", score}, {"type", "PROBABILITY"}};
    reply["languages"] = {"en"};
    res.set_content(reply.dump(), "application/json");
    record(text, 200);
  });
}

int MockToxicityServer::start(const std::string& host, int port) {
  host_ = host;
  port_ = port == 0 ? server_->bind_to_any_port(host) : (server_->bind_to_port(host, port) ? port : -1);
  if (port_ <= 0) throw IoError("mock scorer could not bind " + host + ":" + std::to_string(port));
  thread_ = std::thread([this] { server_->listen_after_bind(); });
  server_->wait_until_ready();
  return port_;
}

void MockToxicityServer::listen_blocking(const std::string& host, int port) {
  host_ = host;
  port_ = port;
  if (!server_->listen(host, port)) throw IoError("mock scorer could not listen on " + host + ":" + std::to_string(port));
}

void MockToxicityServer::stop() {
  if (server_) server_->stop();
  if (thread_.joinable()) thread_.join();
}

std::string MockToxicityServer::endpoint() const {
  return "http://" + host_ + ":" + std::to_string(port_) + kPath;
}

std::vector<MockToxicityServer::Arrival> MockToxicityServer::arrivals() const {
  std::lock_guard lock(mu_);
  return arrivals_;
}

}  // namespace contentious

#pragma once

#include <chrono>
#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

namespace httplib {
class Server;
}

namespace contentious {

/// Canned responses for the local stand-in of the remote toxicity scorer.
struct MockScorerFixture {
  std::string api_key = "test-key";
  double default_score = 0.0;
  std::map<std::string, double> scores;        // exact text -> score
  std::map<std::string, int> fail_first;       // text -> leading 500 responses
  std::vector<std::string> fail_always;        // texts that always get 500
};

/// JSON `{api_key, default, scores: {text: score}, fail_first: {text: n},
/// fail_always: [text]}`; every field optional.
MockScorerFixture load_mock_fixture(const std::filesystem::path& path);

/// In-process HTTP server speaking the scorer wire format. Requests with a
/// wrong key get the service's 400 API_KEY_INVALID reply.
class MockToxicityServer {
 public:
  static constexpr const char* kPath = "/v1alpha1/comments:analyze";

  struct Arrival {
    std::chrono::steady_clock::time_point at;
    std::string text;
    int status;
  };

  explicit MockToxicityServer(MockScorerFixture fixture);
  ~MockToxicityServer();
  MockToxicityServer(const MockToxicityServer&) = delete;
  MockToxicityServer& operator=(const MockToxicityServer&) = delete;

  /// Binds (port 0 picks a free port), starts serving on a background
  /// thread and returns the bound port.
  int start(const std::string& host = "127.0.0.1", int port = 0);

  /// Serves on the calling thread until stop() is called elsewhere.
  void listen_blocking(const std::string& host, int port);
  void stop();

  std::string endpoint() const;
  std::vector<Arrival> arrivals() const;

 private:
  void install_handlers();

  MockScorerFixture fixture_;
  std::unique_ptr<httplib::Server> server_;
  std::thread thread_;
  std::string host_;
  int port_ = 0;
  mutable std::mutex mu_;
  std::map<std::string, int> failures_served_;
  std::vector<Arrival> arrivals_;
};

}  // namespace contentious

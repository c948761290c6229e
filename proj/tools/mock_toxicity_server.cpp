// Local stand-in for the remote toxicity service, for demos and manual runs.
#include <CLI11.hpp>

#include <iostream>

#include "contentious/errors.hpp"
#include "contentious/mock_scorer.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Mock toxicity scoring server"};
  std::string fixture_path, host = "127.0.0.1";
  int port = 8089;
  app.add_option("--fixture", fixture_path, "fixture JSON")->check(CLI::ExistingFile);
  app.add_option("--host", host, "bind address");
  app.add_option("--port", port, "bind port");
  CLI11_PARSE(app, argc, argv);

  try {
    contentious::MockScorerFixture fixture;
    if (!fixture_path.empty()) fixture = contentious::load_mock_fixture(fixture_path);
    contentious::MockToxicityServer server(std::move(fixture));
    std::cerr << "serving http://" << host << ":" << port << contentious::MockToxicityServer::kPath << "\n";
    server.listen_blocking(host, port);
  } catch (const contentious::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

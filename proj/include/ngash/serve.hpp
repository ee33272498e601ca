#pragma once

#include <filesystem>
#include <memory>
#include <string>

namespace ngash {

// Read-only HTTP endpoint for the viewer: GET /bundle returns the document
// as application/json, GET / the viewer's index page (from the assets
// directory when given, else a built-in placeholder), other paths are
// static files under assets or 404.
class BundleServer {
 public:
  BundleServer(std::string document, std::filesystem::path assets = {});
  ~BundleServer();
  BundleServer(const BundleServer&) = delete;
  BundleServer& operator=(const BundleServer&) = delete;

  // Binds host:port (port 0 picks a free one) and returns the bound port.
  // Throws Error if the port is busy.
  int bind(const std::string& host, int port);
  // Blocks until stop().
  void listen();
  void stop();

 private:
  struct Impl;
  std::unique_ptr<Impl> impl_;
};

}  // namespace ngash

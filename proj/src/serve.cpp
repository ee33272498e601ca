#include "ngash/serve.hpp"

#include <httplib.h>

#include "ngash/errors.hpp"
#include "ngash/text_io.hpp"

namespace ngash {

namespace {

constexpr const char* kPlaceholderIndex = R"(<!doctype html>
<html><head><meta charset="utf-8"><title>ngash</title></head>
<body>
<p>No viewer assets were supplied (start the server with --assets DIR).</p>
<p>The bundle document is available at <a href="/bundle">/bundle</a>.</p>
</body></html>
)";

}  // namespace

struct BundleServer::Impl {
  std::string document;
  std::filesystem::path assets;
  httplib::Server server;
};

BundleServer::BundleServer(std::string document, std::filesystem::path assets)
    : impl_(std::make_unique<Impl>()) {
  impl_->document = std::move(document);
  impl_->assets = std::move(assets);
  Impl* s = impl_.get();
  // httplib's default also sets SO_REUSEPORT, which would let a second
  // server share a busy port silently.
  s->server.set_socket_options([](socket_t sock) {
    int yes = 1;
    ::setsockopt(sock, SOL_SOCKET, SO_REUSEADDR, &yes, sizeof(yes));
  });
  s->server.Get("/bundle", [s](const httplib::Request&, httplib::Response& res) {
    res.set_content(s->document, "application/json");
  });
  s->server.Get("/", [s](const httplib::Request&, httplib::Response& res) {
    const auto index = s->assets / "index.html";
    std::error_code ec;
    if (!s->assets.empty() && std::filesystem::is_regular_file(index, ec))
      res.set_content(read_text_file(index), "text/html");
    else
      res.set_content(kPlaceholderIndex, "text/html");
  });
  if (!s->assets.empty() && !s->server.set_mount_point("/", s->assets.string()))
    throw IoError("assets directory not found: " + s->assets.string());
}

BundleServer::~BundleServer() { stop(); }

int BundleServer::bind(const std::string& host, int port) {
  const int bound = port == 0 ? impl_->server.bind_to_any_port(host)
                              : (impl_->server.bind_to_port(host, port) ? port : -1);
  if (bound < 0)
    throw Error("cannot listen on " + host + ":" + std::to_string(port) +
                " (port busy or not permitted)");
  return bound;
}

void BundleServer::listen() { impl_->server.listen_after_bind(); }

void BundleServer::stop() {
  if (impl_) impl_->server.stop();
}

}  // namespace ngash

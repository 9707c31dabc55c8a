#include "rnnlens/server.h"

#include <iostream>

// After Eigen: <resolv.h> (pulled in by httplib) defines a `_res` macro
// that collides with Eigen parameter names.
#include <httplib.h>

#include "rnnlens/error.h"

namespace rnnlens {

namespace {

ApiRequest ToApiRequest(const httplib::Request& req) {
  ApiRequest r;
  r.method = req.method;
  r.path = req.path;
  for (const auto& [key, value] : req.params) r.query[key] = value;
  r.body = req.body;
  return r;
}

}  // namespace

void Serve(ExplorerService& service, const ServeOptions& options) {
  httplib::Server server;
  if (!options.ui_dir.empty()) {
    if (!std::filesystem::is_directory(options.ui_dir)) {
      throw NotFound("ui directory " + options.ui_dir.string() +
                     " does not exist");
    }
    server.set_mount_point("/", options.ui_dir.string());
  }
  auto handler = [&service](const httplib::Request& req,
                            httplib::Response& res) {
    const ApiResponse out = service.Handle(ToApiRequest(req));
    res.status = out.status;
    res.set_content(out.body, out.content_type);
  };
  server.Get(R"(/api(/.*)?)", handler);
  server.Post(R"(/api(/.*)?)", handler);
  server.set_logger([](const httplib::Request& req, const httplib::Response& res) {
    std::cerr << req.method << ' ' << req.path << ' ' << res.status << '\n';
  });
  std::cerr << "listening on " << options.host << ':' << options.port << '\n';
  if (!server.listen(options.host, options.port)) {
    throw Error("could not listen on " + options.host + ":" +
                std::to_string(options.port));
  }
}

}  // namespace rnnlens

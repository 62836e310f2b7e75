#include "fdmopt/error.hpp"
#include "fdmopt/guidance.hpp"
#include "fdmopt/json_io.hpp"

#include <httplib.h>

#include <cstdlib>

namespace fdmopt {

RemoteProvider::RemoteProvider(RemoteProviderOptions options) : options_(std::move(options)) {
  if (options_.base_url.rfind("http://", 0) != 0 && options_.base_url.rfind("https://", 0) != 0) {
    throw ValidationError("remote provider base URL must start with http:// or https://");
  }
  if (options_.model.empty()) throw ValidationError("remote provider needs a model name");
  if (options_.timeout_s <= 0) throw ValidationError("remote provider timeout must be positive");
}

std::string RemoteProvider::reply(const GuidanceRequest& request) {
  // Split "scheme://host[:port]/prefix" into the client origin and path prefix.
  const std::string& url = options_.base_url;
  const auto host_start = url.find("://") + 3;
  const auto path_start = url.find('/', host_start);
  const std::string origin = url.substr(0, path_start);
  std::string prefix = path_start == std::string::npos ? "" : url.substr(path_start);
  while (!prefix.empty() && prefix.back() == '/') prefix.pop_back();

  httplib::Client client(origin);
  client.set_connection_timeout(options_.timeout_s, 0);
  client.set_read_timeout(options_.timeout_s, 0);
  client.set_write_timeout(options_.timeout_s, 0);

  httplib::Headers headers;
  if (const char* key = std::getenv(options_.api_key_env.c_str()); key && *key) {
    headers.emplace("Authorization", std::string("Bearer ") + key);
  }

  Json body = Json::object();
  body["model"] = options_.model;
  body["temperature"] = options_.temperature;
  body["messages"] = Json::array({Json{{"role", "system"}, {"content", request.system}},
                                  Json{{"role", "user"}, {"content", request.user}}});

  auto res = client.Post(prefix + "/chat/completions", headers, body.dump(), "application/json");
  if (!res) throw TransportError("request to " + origin + " failed: " + httplib::to_string(res.error()));
  if (res->status == 429 || res->status >= 500) {
    throw TransportError("provider returned HTTP " + std::to_string(res->status));
  }
  if (res->status != 200) {
    throw TransportError("provider rejected the request with HTTP " + std::to_string(res->status) + ": " +
                         res->body.substr(0, 200));
  }
  Json doc;
  try {
    doc = Json::parse(res->body);
    return doc.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    // A malformed envelope is returned as text so the caller's schema retry handles it.
    return res->body;
  }
}

}  // namespace fdmopt

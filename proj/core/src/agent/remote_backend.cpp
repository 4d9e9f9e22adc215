#include <httplib.h>

#include "manta/agent/backend.hpp"
#include "manta/util/text.hpp"

namespace manta::agent {

namespace {

struct ParsedUrl {
  std::string host_port;  // scheme://host:port
  std::string path;
};

Result<ParsedUrl> parse_url(const std::string& url) {
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) {
    return make_error("bad_url", "endpoint url must include a scheme: " + url);
  }
  const auto path_start = url.find('/', scheme_end + 3);
  ParsedUrl out;
  if (path_start == std::string::npos) {
    out.host_port = url;
    out.path = "/";
  } else {
    out.host_port = url.substr(0, path_start);
    out.path = url.substr(path_start);
  }
  return out;
}

}  // namespace

Result<Json> RemoteBackend::extract_path(const Json& body, const std::string& dot_path) {
  const Json* node = &body;
  for (const auto& seg : split(dot_path, '.')) {
    if (node->is_array()) {
      if (seg.empty() || seg.find_first_not_of("0123456789") != std::string::npos) {
        return make_error("bad_response", "expected numeric index at '" + seg + "'");
      }
      const std::size_t idx = std::stoul(seg);
      if (idx >= node->size()) {
        return make_error("bad_response", "index out of range at '" + seg + "'");
      }
      node = &(*node)[idx];
    } else if (node->is_object()) {
      auto it = node->find(seg);
      if (it == node->end()) {
        return make_error("bad_response", "missing key '" + seg + "' in response");
      }
      node = &*it;
    } else {
      return make_error("bad_response", "cannot descend into scalar at '" + seg + "'");
    }
  }
  return *node;
}

Result<ReasonerReply> RemoteBackend::infer(const ReasonerQuery& query) {
  auto url = parse_url(config_.endpoint_url);
  if (!url.ok()) return url.error();

  Json messages = Json::array();
  messages.push_back(Json{{"role", "system"}, {"content", query.system_text}});
  for (const auto& item : query.context) {
    messages.push_back(Json{{"role", "user"}, {"content", "[" + item.label + "]\n" + item.text}});
  }
  messages.push_back(Json{{"role", "user"}, {"content", query.user_content}});
  const Json body{{"model", config_.model},
                  {"messages", std::move(messages)},
                  {"temperature", config_.temperature}};
  const std::string body_text = body.dump();

  std::string last_error = "unreachable";
  for (int attempt = 0; attempt <= config_.max_retries; ++attempt) {
    httplib::Client client(url.value().host_port);
    client.set_connection_timeout(config_.timeout_seconds, 0);
    client.set_read_timeout(config_.timeout_seconds, 0);
    auto res = client.Post(url.value().path, body_text, "application/json");
    if (!res) {
      last_error = "transport error: " + httplib::to_string(res.error());
      continue;
    }
    if (res->status != 200) {
      last_error = "http status " + std::to_string(res->status);
      continue;
    }
    Json parsed = Json::parse(res->body, nullptr, false);
    if (parsed.is_discarded()) {
      last_error = "response is not json";
      continue;
    }
    auto content = extract_path(parsed, config_.content_path);
    if (!content.ok()) {
      last_error = content.error().message;
      continue;
    }
    if (!content.value().is_string()) {
      last_error = "content at path is not a string";
      continue;
    }
    ReasonerReply reply;
    reply.content = content.value().get<std::string>();
    Json structured = Json::parse(reply.content, nullptr, false);
    if (!structured.is_discarded()) reply.structured = std::move(structured);
    return reply;
  }
  return make_error("backend_fault", "remote reasoner failed: " + last_error);
}

}  // namespace manta::agent

#include "manta/agent/backend.hpp"

#include <fstream>

namespace manta::agent {

void RuleBook::register_role(const std::string& role, TemplateBackend::RuleFactory factory) {
  factories_[role] = std::move(factory);
}

bool RuleBook::has_role(const std::string& role) const { return factories_.count(role) > 0; }

Result<BackendPtr> RuleBook::make_backend(const std::string& role) const {
  auto it = factories_.find(role);
  if (it == factories_.end()) {
    return make_error("unknown_role", "no template rule registered for role: " + role);
  }
  return BackendPtr(std::make_shared<TemplateBackend>(role, it->second));
}

Result<std::shared_ptr<PlaybackBackend>> PlaybackBackend::load_jsonl(const std::string& path) {
  std::ifstream f(path);
  if (!f) return make_error("io_error", "cannot open transcript: " + path);
  std::vector<ReasonerReply> transcript;
  std::string line;
  while (std::getline(f, line)) {
    if (line.empty()) continue;
    Json j = Json::parse(line, nullptr, false);
    if (j.is_discarded() || !j.is_object() || !j.contains("content")) {
      return make_error("bad_transcript", "each line must be {\"content\": ...}");
    }
    ReasonerReply r;
    r.content = j.at("content").get<std::string>();
    Json structured = Json::parse(r.content, nullptr, false);
    if (!structured.is_discarded()) r.structured = std::move(structured);
    transcript.push_back(std::move(r));
  }
  return std::make_shared<PlaybackBackend>(std::move(transcript));
}

Result<ReasonerReply> PlaybackBackend::infer(const ReasonerQuery& query) {
  (void)query;
  if (next_ >= transcript_.size()) {
    return make_error("backend_fault", "playback transcript exhausted");
  }
  return transcript_[next_++];
}

}  // namespace manta::agent

#pragma once

#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "manta/util/json.hpp"
#include "manta/util/result.hpp"

namespace manta::agent {

struct ContextItem {
  std::string label;
  std::string text;
};

struct ReasonerQuery {
  std::string system_text;            // rendered constitution; nonempty
  std::vector<ContextItem> context;   // ordered text/feature blocks (RAG etc.)
  std::string user_content;           // serialized inbox
};

/// A reply whose content equals kNoOpReply means "nothing to publish".
inline constexpr const char* kNoOpReply = "NOOP";

struct ReasonerReply {
  std::string content;
  std::optional<Json> structured;

  bool is_noop() const { return content == kNoOpReply; }
  static ReasonerReply noop() { return ReasonerReply{kNoOpReply, std::nullopt}; }
  static ReasonerReply from_json(const Json& j) { return ReasonerReply{j.dump(), j}; }
};

class ReasonerBackend {
 public:
  virtual ~ReasonerBackend() = default;
  virtual Result<ReasonerReply> infer(const ReasonerQuery& query) = 0;
  virtual std::string name() const = 0;
  /// Drops accumulated reasoning state (called on retune).
  virtual void reset_context() {}
};

using BackendPtr = std::shared_ptr<ReasonerBackend>;

/// Deterministic rule engine. A rule is a (possibly stateful) callable built
/// fresh by its factory; reset_context() rebuilds it, which is how retuned
/// agents start from a clean reasoner state.
class TemplateBackend : public ReasonerBackend {
 public:
  using Rule = std::function<Result<ReasonerReply>(const ReasonerQuery&)>;
  using RuleFactory = std::function<Rule()>;

  explicit TemplateBackend(std::string role, RuleFactory factory)
      : role_(std::move(role)), factory_(std::move(factory)), rule_(factory_()) {}

  Result<ReasonerReply> infer(const ReasonerQuery& query) override { return rule_(query); }
  std::string name() const override { return "template:" + role_; }
  void reset_context() override { rule_ = factory_(); }
  const std::string& role() const { return role_; }

 private:
  std::string role_;
  RuleFactory factory_;
  Rule rule_;
};

/// Role -> rule factory registry; scenario wiring consults it to bind
/// template backends to agent specs.
class RuleBook {
 public:
  void register_role(const std::string& role, TemplateBackend::RuleFactory factory);
  bool has_role(const std::string& role) const;
  Result<BackendPtr> make_backend(const std::string& role) const;

 private:
  std::map<std::string, TemplateBackend::RuleFactory> factories_;
};

/// Replays a recorded transcript, one entry per infer() call; exhaustion is a
/// backend fault. reset_context() does not rewind.
class PlaybackBackend : public ReasonerBackend {
 public:
  explicit PlaybackBackend(std::vector<ReasonerReply> transcript)
      : transcript_(std::move(transcript)) {}

  static Result<std::shared_ptr<PlaybackBackend>> load_jsonl(const std::string& path);

  Result<ReasonerReply> infer(const ReasonerQuery& query) override;
  std::string name() const override { return "playback"; }

  std::size_t position() const { return next_; }

 private:
  std::vector<ReasonerReply> transcript_;
  std::size_t next_ = 0;
};

struct RemoteConfig {
  std::string endpoint_url;  // e.g. http://127.0.0.1:8089/v1/chat/completions
  std::string model = "local";
  double temperature = 0.0;
  /// Dot path into the response JSON; numeric segments index arrays.
  std::string content_path = "choices.0.message.content";
  int timeout_seconds = 10;
  int max_retries = 2;
};

/// HTTP chat-completion round trip with bounded retries. Request body:
/// {"model":..., "messages":[{"role":"system"|"user","content":...}], "temperature":...}.
class RemoteBackend : public ReasonerBackend {
 public:
  explicit RemoteBackend(RemoteConfig config) : config_(std::move(config)) {}

  Result<ReasonerReply> infer(const ReasonerQuery& query) override;
  std::string name() const override { return "remote"; }

  static Result<Json> extract_path(const Json& body, const std::string& dot_path);

 private:
  RemoteConfig config_;
};

}  // namespace manta::agent

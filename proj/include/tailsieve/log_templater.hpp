#pragma once

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <ostream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

namespace tailsieve {

using TemplateId = uint32_t;
inline constexpr TemplateId kEmptyTemplateId = 0;  // reserved for "<EMPTY>"

struct TemplaterConfig {
  // tree depth counts the root and the length level, leaving depth-2 token
  // levels before clusters are compared
  int tree_depth = 4;
  double similarity_threshold = 0.5;
  int max_children = 100;  // per node; overflow tokens route through "<*>"
};

// Online log template miner over a fixed-depth token prefix tree. Messages
// are tokenized on whitespace, volatile tokens (numbers, long hex runs,
// UUIDs) are masked to "<*>", then routed by token count and leading tokens
// to a leaf whose clusters are matched by positional similarity.
class TemplateStore {
 public:
  explicit TemplateStore(TemplaterConfig cfg = {});

  // Returns the template id for a message, mining a new template when no
  // existing cluster reaches the similarity threshold. Blank messages map
  // to kEmptyTemplateId.
  TemplateId template_of(std::string_view message);

  // Lookup without mutation: the id the message would map to, if any
  // existing cluster matches it.
  std::optional<TemplateId> find(std::string_view message) const;

  const std::vector<std::string>& tokens_of(TemplateId id) const;
  std::string template_string(TemplateId id) const;  // tokens joined by spaces
  size_t size() const { return templates_.size(); }  // includes the empty template

  // {"template_id":N,"template":"..."} per line, ascending id
  void dump_jsonl(std::ostream& out) const;

  static std::vector<std::string> tokenize_and_mask(std::string_view message);

 private:
  struct Node {
    std::map<std::string, std::unique_ptr<Node>> children;
    std::vector<TemplateId> clusters;  // templates parked at this node
  };

  const Node* route(const std::vector<std::string>& tokens) const;
  Node* route_mut(const std::vector<std::string>& tokens);
  std::optional<TemplateId> best_cluster(const Node* leaf,
                                         const std::vector<std::string>& tokens) const;

  TemplaterConfig cfg_;
  std::map<size_t, std::unique_ptr<Node>> by_length_;
  std::vector<std::vector<std::string>> templates_;  // by id; evolves on merge
  TemplateId next_id_ = 1;
};

enum class EventKind : uint8_t { kSpanStart, kSpanEnd, kStatusError, kPerfDeg, kLog };

using EventId = uint32_t;

// Bijection between (kind, key) and dense event ids assigned in
// first-encounter order starting at 1; id 0 stays unassigned. Span-scoped
// kinds key on "service/operation", log events key on their template id.
class EventManager {
 public:
  EventId id(EventKind kind, std::string_view endpoint);
  EventId log_id(TemplateId template_id);

  std::optional<EventId> find(EventKind kind, std::string_view endpoint) const;
  std::optional<EventId> find_log(TemplateId template_id) const;

  size_t size() const { return static_cast<size_t>(next_ - 1); }

 private:
  std::array<std::unordered_map<std::string, EventId>, 4> span_keys_;
  std::unordered_map<TemplateId, EventId> log_keys_;
  EventId next_ = 1;
};

}  // namespace tailsieve

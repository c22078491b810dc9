#include "tailsieve/log_templater.hpp"

#include <algorithm>
#include <cctype>

#include "json.hpp"

namespace tailsieve {

namespace {

constexpr const char* kWildcard = "<*>";

bool is_hex_char(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') || (c >= 'A' && c <= 'F');
}

bool is_uuid(std::string_view t) {
  static constexpr int kGroups[] = {8, 4, 4, 4, 12};
  size_t pos = 0;
  for (int g = 0; g < 5; ++g) {
    if (g > 0) {
      if (pos >= t.size() || t[pos] != '-') return false;
      ++pos;
    }
    for (int i = 0; i < kGroups[g]; ++i, ++pos) {
      if (pos >= t.size() || !is_hex_char(t[pos])) return false;
    }
  }
  return pos == t.size();
}

bool is_numeric(std::string_view t) {
  size_t pos = 0;
  if (pos < t.size() && (t[pos] == '+' || t[pos] == '-')) ++pos;
  size_t digits = 0;
  while (pos < t.size() && std::isdigit(static_cast<unsigned char>(t[pos]))) ++pos, ++digits;
  if (pos < t.size() && t[pos] == '.') {
    ++pos;
    while (pos < t.size() && std::isdigit(static_cast<unsigned char>(t[pos]))) ++pos, ++digits;
  }
  return digits > 0 && pos == t.size();
}

bool is_long_hex(std::string_view t) {
  bool prefixed = false;
  if (t.size() >= 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) {
    t.remove_prefix(2);
    prefixed = true;
  }
  if (t.size() < 8) return false;
  bool has_digit = false;
  for (char c : t) {
    if (!is_hex_char(c)) return false;
    if (std::isdigit(static_cast<unsigned char>(c))) has_digit = true;
  }
  // a 0x prefix already marks a literal; otherwise require a digit so
  // ordinary words made of a-f letters survive
  return has_digit || prefixed;
}

bool contains_digit(std::string_view t) {
  return std::any_of(t.begin(), t.end(),
                     [](char c) { return std::isdigit(static_cast<unsigned char>(c)); });
}

}  // namespace

std::vector<std::string> TemplateStore::tokenize_and_mask(std::string_view message) {
  std::vector<std::string> tokens;
  size_t i = 0;
  while (i < message.size()) {
    while (i < message.size() && std::isspace(static_cast<unsigned char>(message[i]))) ++i;
    size_t start = i;
    while (i < message.size() && !std::isspace(static_cast<unsigned char>(message[i]))) ++i;
    if (i == start) break;
    std::string_view tok = message.substr(start, i - start);
    if (is_uuid(tok) || is_long_hex(tok) || is_numeric(tok)) {
      tokens.emplace_back(kWildcard);
    } else {
      tokens.emplace_back(tok);
    }
  }
  return tokens;
}

TemplateStore::TemplateStore(TemplaterConfig cfg) : cfg_(cfg) {
  templates_.push_back({"<EMPTY>"});  // id 0
}

const TemplateStore::Node* TemplateStore::route(const std::vector<std::string>& tokens) const {
  auto it = by_length_.find(tokens.size());
  if (it == by_length_.end()) return nullptr;
  const Node* cur = it->second.get();
  const int levels = cfg_.tree_depth - 2;
  for (int d = 0; d < levels && static_cast<size_t>(d) < tokens.size(); ++d) {
    const std::string& tok = tokens[static_cast<size_t>(d)];
    const std::string branch = contains_digit(tok) ? std::string(kWildcard) : tok;
    auto child = cur->children.find(branch);
    if (child == cur->children.end()) child = cur->children.find(kWildcard);
    if (child == cur->children.end()) return nullptr;
    cur = child->second.get();
  }
  return cur;
}

TemplateStore::Node* TemplateStore::route_mut(const std::vector<std::string>& tokens) {
  auto& root = by_length_[tokens.size()];
  if (!root) root = std::make_unique<Node>();
  Node* cur = root.get();
  const int levels = cfg_.tree_depth - 2;
  for (int d = 0; d < levels && static_cast<size_t>(d) < tokens.size(); ++d) {
    const std::string& tok = tokens[static_cast<size_t>(d)];
    std::string branch = contains_digit(tok) ? std::string(kWildcard) : tok;
    auto child = cur->children.find(branch);
    if (child == cur->children.end()) {
      if (branch != kWildcard &&
          cur->children.size() >= static_cast<size_t>(cfg_.max_children)) {
        branch = kWildcard;  // node is full, overflow branch absorbs new tokens
        child = cur->children.find(branch);
      }
      if (child == cur->children.end()) {
        child = cur->children.emplace(branch, std::make_unique<Node>()).first;
      }
    }
    cur = child->second.get();
  }
  return cur;
}

std::optional<TemplateId> TemplateStore::best_cluster(
    const Node* leaf, const std::vector<std::string>& tokens) const {
  if (!leaf) return std::nullopt;
  double best_sim = -1.0;
  std::optional<TemplateId> best;
  for (TemplateId id : leaf->clusters) {
    const auto& tmpl = templates_[id];
    size_t equal = 0;
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (tmpl[i] == tokens[i]) ++equal;
    }
    double sim = tokens.empty() ? 1.0 : static_cast<double>(equal) / tokens.size();
    if (sim > best_sim) {
      best_sim = sim;
      best = id;
    }
  }
  if (best && best_sim >= cfg_.similarity_threshold) return best;
  return std::nullopt;
}

TemplateId TemplateStore::template_of(std::string_view message) {
  auto tokens = tokenize_and_mask(message);
  if (tokens.empty()) return kEmptyTemplateId;

  Node* leaf = route_mut(tokens);
  if (auto id = best_cluster(leaf, tokens)) {
    auto& tmpl = templates_[*id];
    for (size_t i = 0; i < tokens.size(); ++i) {
      if (tmpl[i] != tokens[i]) tmpl[i] = kWildcard;
    }
    return *id;
  }

  TemplateId id = next_id_++;
  templates_.push_back(std::move(tokens));
  leaf->clusters.push_back(id);
  return id;
}

std::optional<TemplateId> TemplateStore::find(std::string_view message) const {
  auto tokens = tokenize_and_mask(message);
  if (tokens.empty()) return kEmptyTemplateId;
  return best_cluster(route(tokens), tokens);
}

const std::vector<std::string>& TemplateStore::tokens_of(TemplateId id) const {
  return templates_.at(id);
}

std::string TemplateStore::template_string(TemplateId id) const {
  const auto& tokens = templates_.at(id);
  std::string out;
  for (size_t i = 0; i < tokens.size(); ++i) {
    if (i) out += ' ';
    out += tokens[i];
  }
  return out;
}

void TemplateStore::dump_jsonl(std::ostream& out) const {
  for (TemplateId id = 0; id < templates_.size(); ++id) {
    nlohmann::json j;
    j["template_id"] = id;
    j["template"] = template_string(id);
    out << j.dump() << '\n';
  }
}

namespace {
size_t kind_slot(EventKind kind) {
  switch (kind) {
    case EventKind::kSpanStart: return 0;
    case EventKind::kSpanEnd: return 1;
    case EventKind::kStatusError: return 2;
    case EventKind::kPerfDeg: return 3;
    case EventKind::kLog: break;
  }
  throw std::invalid_argument("log events are keyed by template id, use log_id()");
}
}  // namespace

EventId EventManager::id(EventKind kind, std::string_view endpoint) {
  auto& table = span_keys_[kind_slot(kind)];
  auto it = table.find(std::string(endpoint));
  if (it != table.end()) return it->second;
  EventId assigned = next_++;
  table.emplace(std::string(endpoint), assigned);
  return assigned;
}

EventId EventManager::log_id(TemplateId template_id) {
  auto it = log_keys_.find(template_id);
  if (it != log_keys_.end()) return it->second;
  EventId assigned = next_++;
  log_keys_.emplace(template_id, assigned);
  return assigned;
}

std::optional<EventId> EventManager::find(EventKind kind, std::string_view endpoint) const {
  const auto& table = span_keys_[kind_slot(kind)];
  auto it = table.find(std::string(endpoint));
  if (it == table.end()) return std::nullopt;
  return it->second;
}

std::optional<EventId> EventManager::find_log(TemplateId template_id) const {
  auto it = log_keys_.find(template_id);
  if (it == log_keys_.end()) return std::nullopt;
  return it->second;
}

}  // namespace tailsieve

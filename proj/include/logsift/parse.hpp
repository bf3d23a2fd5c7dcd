#pragma once

#include <algorithm>
#include <cctype>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "logsift/types.hpp"

namespace logsift {

/// Tokens of one log line, in content order.
struct TokenSequence {
  std::size_t origin = 0;
  std::vector<std::string> tokens;

  bool operator==(const TokenSequence&) const = default;
};

inline constexpr std::string_view kHexToken = "[HEX]";
inline constexpr std::string_view kNumToken = "[NUM]";

/// Splits on '.', ',', ':', '/' and whitespace; separators are discarded and
/// empty fragments dropped.
inline TokenSequence tokenize(std::string_view content, std::size_t origin = 0) {
  TokenSequence seq;
  seq.origin = origin;
  auto is_sep = [](char c) {
    return c == '.' || c == ',' || c == ':' || c == '/' ||
           std::isspace(static_cast<unsigned char>(c)) != 0;
  };
  std::size_t i = 0;
  while (i < content.size()) {
    while (i < content.size() && is_sep(content[i])) ++i;
    std::size_t j = i;
    while (j < content.size() && !is_sep(content[j])) ++j;
    if (j > i) seq.tokens.emplace_back(content.substr(i, j - i));
    i = j;
  }
  return seq;
}

namespace detail {

inline bool is_hex_digit(char c) {
  return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f') ||
         (c >= 'A' && c <= 'F');
}

// Hexadecimal literal: "0x"-prefixed, or length >= 4 of pure hex digits with
// at least one letter. The length floor keeps short words like "bad" intact.
inline bool is_hex_literal(std::string_view t) {
  if (t.size() >= 2 && t[0] == '0' && (t[1] == 'x' || t[1] == 'X')) return true;
  if (t.size() < 4) return false;
  bool has_alpha = false;
  for (char c : t) {
    if (!is_hex_digit(c)) return false;
    if (!(c >= '0' && c <= '9')) has_alpha = true;
  }
  return has_alpha;
}

// Pure decimal integer with value >= 10. Mixed alphanumerics (node ids such
// as wally001) are left untouched.
inline bool is_large_number(std::string_view t) {
  if (t.empty()) return false;
  for (char c : t)
    if (c < '0' || c > '9') return false;
  std::size_t k = 0;
  while (k + 1 < t.size() && t[k] == '0') ++k;
  std::string_view sig = t.substr(k);
  return sig.size() >= 2; // two or more significant digits => value >= 10
}

} // namespace detail

inline std::string normalize_token(const std::string& token) {
  if (detail::is_hex_literal(token)) return std::string(kHexToken);
  if (detail::is_large_number(token)) return std::string(kNumToken);
  return token;
}

/// Replaces hexadecimal literals with [HEX] and decimal integers >= 10 with
/// [NUM]. Idempotent.
inline TokenSequence normalize(const TokenSequence& seq) {
  TokenSequence out;
  out.origin = seq.origin;
  out.tokens.reserve(seq.tokens.size());
  for (const auto& t : seq.tokens) out.tokens.push_back(normalize_token(t));
  return out;
}

/// One skeleton position: either a fixed literal or a wildcard slot.
struct TemplateToken {
  bool wildcard = false;
  std::string text;

  bool operator==(const TemplateToken&) const = default;
};

struct Template {
  int id = -1;
  std::vector<TemplateToken> skeleton;

  bool matches(const TokenSequence& seq) const {
    if (seq.tokens.size() != skeleton.size()) return false;
    for (std::size_t i = 0; i < skeleton.size(); ++i)
      if (!skeleton[i].wildcard && skeleton[i].text != seq.tokens[i])
        return false;
    return true;
  }

  std::size_t wildcard_count() const {
    std::size_t n = 0;
    for (const auto& t : skeleton)
      if (t.wildcard) ++n;
    return n;
  }

  std::string to_string(std::string_view wildcard_mark = "<*>") const {
    std::ostringstream os;
    for (std::size_t i = 0; i < skeleton.size(); ++i) {
      if (i) os << ' ';
      os << (skeleton[i].wildcard ? std::string(wildcard_mark)
                                  : skeleton[i].text);
    }
    return os.str();
  }
};

/// Variable tokens of one line, in slot order.
struct AttributeSet {
  std::size_t origin = 0;
  std::vector<std::string> values;

  bool operator==(const AttributeSet&) const = default;
};

inline AttributeSet extract_attributes(const TokenSequence& seq,
                                       const Template& tmpl) {
  if (!tmpl.matches(seq))
    data_error("template " + std::to_string(tmpl.id) +
               " does not match sequence at line " +
               std::to_string(seq.origin));
  AttributeSet attrs;
  attrs.origin = seq.origin;
  for (std::size_t i = 0; i < tmpl.skeleton.size(); ++i)
    if (tmpl.skeleton[i].wildcard) attrs.values.push_back(seq.tokens[i]);
  return attrs;
}

struct MinerConfig {
  std::size_t tree_depth = 1;        // leading-token levels below the length node
  double similarity_threshold = 0.5; // matching literal fraction to join a cluster
  std::size_t max_children = 100;    // per-node branch cap; overflow shares "<*>"
};

struct MinedTemplates {
  std::vector<Template> templates;
  std::vector<int> line_template; // per corpus position, the assigned id
};

/// Fixed-depth parse-tree template miner. Lines are routed by token count and
/// their first `tree_depth` tokens, then matched against the leaf's clusters
/// by the fraction of agreeing literal positions. Deterministic in corpus
/// order; ids are dense and first-seen.
class TemplateMiner {
public:
  explicit TemplateMiner(MinerConfig cfg = {}) : cfg_(cfg) {
    if (cfg_.similarity_threshold <= 0.0 || cfg_.similarity_threshold > 1.0)
      usage_error("similarity_threshold must be in (0,1]");
  }

  int assign(const TokenSequence& seq) {
    Node& leaf = route(seq);
    int best = -1;
    double best_sim = -1.0;
    for (int id : leaf.cluster_ids) {
      const double sim = similarity(templates_[static_cast<std::size_t>(id)], seq);
      if (sim > best_sim) {
        best_sim = sim;
        best = id;
      }
    }
    if (best >= 0 && best_sim >= cfg_.similarity_threshold) {
      merge(templates_[static_cast<std::size_t>(best)], seq);
      return best;
    }
    Template t;
    t.id = static_cast<int>(templates_.size());
    t.skeleton.reserve(seq.tokens.size());
    for (const auto& tok : seq.tokens) t.skeleton.push_back({false, tok});
    templates_.push_back(std::move(t));
    leaf.cluster_ids.push_back(templates_.back().id);
    return templates_.back().id;
  }

  const std::vector<Template>& templates() const { return templates_; }

private:
  struct Node {
    std::map<std::string, Node> children;
    std::vector<int> cluster_ids;
  };

  Node& route(const TokenSequence& seq) {
    Node* node = &by_length_[seq.tokens.size()];
    const std::size_t levels = std::min(cfg_.tree_depth, seq.tokens.size());
    for (std::size_t level = 0; level < levels; ++level) {
      std::string key = branch_key(seq.tokens[level]);
      if (node->children.find(key) == node->children.end() &&
          node->children.size() >= cfg_.max_children)
        key = "<*>";
      node = &node->children[key];
    }
    return *node;
  }

  // Digit-bearing tokens share a wildcard branch so volatile values do not
  // explode the tree.
  static std::string branch_key(const std::string& token) {
    for (char c : token)
      if (c >= '0' && c <= '9') return "<*>";
    return token;
  }

  // Fraction of positions where the template literal equals the token;
  // wildcard positions count as mismatches.
  static double similarity(const Template& t, const TokenSequence& seq) {
    if (t.skeleton.size() != seq.tokens.size()) return 0.0;
    if (seq.tokens.empty()) return 1.0;
    std::size_t same = 0;
    for (std::size_t i = 0; i < seq.tokens.size(); ++i)
      if (!t.skeleton[i].wildcard && t.skeleton[i].text == seq.tokens[i])
        ++same;
    return static_cast<double>(same) / static_cast<double>(seq.tokens.size());
  }

  static void merge(Template& t, const TokenSequence& seq) {
    for (std::size_t i = 0; i < t.skeleton.size(); ++i)
      if (!t.skeleton[i].wildcard && t.skeleton[i].text != seq.tokens[i])
        t.skeleton[i] = {true, ""};
  }

  MinerConfig cfg_;
  std::map<std::size_t, Node> by_length_;
  std::vector<Template> templates_;
};

inline MinedTemplates mine_templates(const std::vector<TokenSequence>& corpus,
                                     MinerConfig cfg = {}) {
  if (corpus.empty()) data_error("cannot mine templates from an empty corpus");
  TemplateMiner miner(cfg);
  MinedTemplates out;
  out.line_template.reserve(corpus.size());
  for (const auto& seq : corpus) out.line_template.push_back(miner.assign(seq));
  out.templates = miner.templates();
  return out;
}

/// Set of template ids in the surrounding lines [i-a, i-1] and [i+1, i+b].
/// The line's own position is excluded; out-of-range neighbors are absent.
struct ContextKey {
  std::size_t origin = 0;
  std::vector<int> neighbor_ids; // sorted, unique

  bool operator==(const ContextKey&) const = default;
  bool operator<(const ContextKey& o) const {
    return neighbor_ids < o.neighbor_ids;
  }
};

inline std::vector<ContextKey> build_context(const std::vector<int>& ids,
                                             std::size_t before,
                                             std::size_t after) {
  if (before + after == 0) usage_error("context boundaries a+b must be >= 1");
  std::vector<ContextKey> keys;
  keys.reserve(ids.size());
  const std::size_t n = ids.size();
  for (std::size_t i = 0; i < n; ++i) {
    ContextKey key;
    key.origin = i;
    const std::size_t lo = i >= before ? i - before : 0;
    for (std::size_t j = lo; j < i; ++j) key.neighbor_ids.push_back(ids[j]);
    const std::size_t hi = std::min(n, i + after + 1);
    for (std::size_t j = i + 1; j < hi; ++j) key.neighbor_ids.push_back(ids[j]);
    std::sort(key.neighbor_ids.begin(), key.neighbor_ids.end());
    key.neighbor_ids.erase(
        std::unique(key.neighbor_ids.begin(), key.neighbor_ids.end()),
        key.neighbor_ids.end());
    keys.push_back(std::move(key));
  }
  return keys;
}

/// Everything parse derives from a corpus, bundled for the scoring passes.
struct ParsedCorpus {
  std::vector<TokenSequence> sequences; // normalized
  std::vector<Template> templates;
  std::vector<int> line_template;
  std::vector<AttributeSet> attributes;
  std::vector<ContextKey> contexts;
};

inline ParsedCorpus parse_corpus(const Corpus& corpus, MinerConfig miner_cfg = {},
                                 std::size_t context_before = 10,
                                 std::size_t context_after = 0) {
  ParsedCorpus parsed;
  parsed.sequences.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i)
    parsed.sequences.push_back(normalize(tokenize(corpus[i].content, i)));
  MinedTemplates mined = mine_templates(parsed.sequences, miner_cfg);
  parsed.templates = std::move(mined.templates);
  parsed.line_template = std::move(mined.line_template);
  parsed.attributes.reserve(corpus.size());
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    const auto id = static_cast<std::size_t>(parsed.line_template[i]);
    parsed.attributes.push_back(
        extract_attributes(parsed.sequences[i], parsed.templates[id]));
  }
  parsed.contexts =
      build_context(parsed.line_template, context_before, context_after);
  return parsed;
}

inline std::string export_template_table(const std::vector<Template>& templates) {
  std::ostringstream os;
  for (const auto& t : templates) os << t.id << '\t' << t.to_string() << '\n';
  return os.str();
}

inline std::string export_parsed_corpus(const Corpus& corpus,
                                        const ParsedCorpus& parsed) {
  std::ostringstream os;
  for (std::size_t i = 0; i < corpus.size(); ++i) {
    os << corpus[i].index << ',' << parsed.line_template[i] << ',';
    const auto& vals = parsed.attributes[i].values;
    for (std::size_t k = 0; k < vals.size(); ++k) {
      if (k) os << '|';
      os << vals[k];
    }
    os << '\n';
  }
  return os.str();
}

} // namespace logsift

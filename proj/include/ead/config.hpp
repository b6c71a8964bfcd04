#pragma once

/**
 * @file config.hpp
 * @brief Run specification: an INI file with [run], [switch], [small], [large].
 *
 *   [run]
 *   seed = 7
 *   max_tokens = 200
 *   temperature = 1
 *   greedy = false
 *   stop_token =
 *   repetitions = 1
 *   prompt = 1 2 3
 *   taus = 0,0.03125,inf
 *   trace_out = run.jsonl
 *   csv_out = sweep.csv
 *
 *   [switch]
 *   tau = 0.25
 *   window = 5
 *   min_duration = 10
 *   initial_role = small
 *   reset_window_on_switch = false
 *
 *   [small]
 *   type = synthetic
 *   name = demo-small
 *   vocab = byte
 *   param_count_b = 1
 *   seed = 11
 *   segments = 30:0.2, 10:2.5
 *   floor_bits = 0
 *
 * [large] takes the same keys. An empty value means "unset". The prompt may
 * instead come from prompt_text (byte tokenizer) or prompt_file (whitespace
 * separated ids). Synthetic segments are length:bits pairs that repeat.
 * type = recorded reads `path` (a logit recording); type = remote talks to
 * `endpoint` (http://host:port). Only full-line comments (; or #) are allowed.
 */

#include <cstdint>
#include <fstream>
#include <istream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include "ead/controller.hpp"
#include "ead/detail/format.hpp"
#include "ead/engine.hpp"
#include "ead/error.hpp"
#include "ead/metrics.hpp"
#include "ead/provider.hpp"
#include "ead/tokenizer.hpp"

namespace ead {

enum class ProviderKind { Synthetic, Recorded, Remote };

constexpr const char* to_string(ProviderKind k) {
  switch (k) {
    case ProviderKind::Synthetic: return "synthetic";
    case ProviderKind::Recorded: return "recorded";
    case ProviderKind::Remote: return "remote";
  }
  return "?";
}

struct ProviderSpec {
  ProviderKind kind = ProviderKind::Synthetic;
  std::string name;
  std::string vocab;  // "byte" selects the byte tokenizer vocabulary
  std::size_t vocab_size = 0;
  std::optional<std::uint64_t> vocab_fingerprint;
  double param_count_b = 0.0;
  std::uint64_t seed = 0;
  std::vector<EntropySegment> segments;
  double floor_bits = 0.0;
  std::string path;
  std::string endpoint;

  /// Declared metadata; for recorded/remote backends the backend's own meta wins.
  ModelMeta declared_meta() const {
    ModelMeta m;
    m.name = name;
    m.param_count_b = param_count_b;
    if (vocab == "byte") {
      m.vocab_size = ByteTokenizer::kVocabSize;
      m.vocab_fingerprint = vocab_fingerprint.value_or(ByteTokenizer::fingerprint());
    } else {
      m.vocab_size = vocab_size;
      m.vocab_fingerprint = vocab_fingerprint.value_or(synthetic_fingerprint(vocab_size));
    }
    return m;
  }

  friend bool operator==(const ProviderSpec&, const ProviderSpec&) = default;
};

struct RunSpec {
  ProviderSpec small;
  ProviderSpec large;
  GenerationConfig generation;
  std::size_t repetitions = 1;
  std::optional<Context> prompt_tokens;
  std::optional<std::string> prompt_text;
  std::optional<std::string> prompt_file;
  std::vector<double> taus = default_tau_grid();
  std::string trace_out;
  std::string csv_out;

  void validate() const {
    generation.validate();
    if (repetitions < 1) throw Error(ErrorKind::InvalidConfig, "repetitions must be >= 1");
    if (taus.empty()) throw Error(ErrorKind::InvalidConfig, "tau list is empty");
    const int prompt_sources = prompt_tokens.has_value() + prompt_text.has_value() + prompt_file.has_value();
    if (prompt_sources > 1) throw Error(ErrorKind::InvalidConfig, "give at most one of prompt, prompt_text, prompt_file");
  }

  friend bool operator==(const RunSpec&, const RunSpec&) = default;
};

namespace detail {

inline std::string trim(std::string s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

inline std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string item;
  std::istringstream in(s);
  while (std::getline(in, item, sep)) {
    item = trim(item);
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

template <typename T>
T parse_number(const std::string& key, const std::string& text) {
  std::istringstream in(text);
  T v{};
  in >> v;
  if (!in || !(in >> std::ws).eof()) throw Error(ErrorKind::InvalidConfig, key + ": cannot parse '" + text + "'");
  if constexpr (std::is_unsigned_v<T>) {
    if (text.find('-') != std::string::npos) throw Error(ErrorKind::InvalidConfig, key + ": must be non-negative");
  }
  return v;
}

inline bool parse_bool(const std::string& key, const std::string& text) {
  if (text == "true" || text == "1" || text == "yes" || text == "on") return true;
  if (text == "false" || text == "0" || text == "no" || text == "off") return false;
  throw Error(ErrorKind::InvalidConfig, key + ": expected true/false, got '" + text + "'");
}

inline ModelRole parse_role(const std::string& key, const std::string& text) {
  if (text == "small") return ModelRole::Small;
  if (text == "large") return ModelRole::Large;
  throw Error(ErrorKind::InvalidConfig, key + ": expected small/large, got '" + text + "'");
}

inline Context parse_token_list(const std::string& key, const std::string& text) {
  Context out;
  std::istringstream in(text);
  std::string item;
  while (in >> item) {
    for (char& c : item)
      if (c == ',') c = ' ';
    for (const auto& part : split(item, ' ')) out.push_back(parse_number<TokenId>(key, part));
  }
  return out;
}

inline std::vector<EntropySegment> parse_segments(const std::string& key, const std::string& text) {
  std::vector<EntropySegment> out;
  for (const auto& item : split(text, ',')) {
    const auto colon = item.find(':');
    if (colon == std::string::npos) throw Error(ErrorKind::InvalidConfig, key + ": segment '" + item + "' is not length:bits");
    out.push_back({parse_number<std::size_t>(key, trim(item.substr(0, colon))),
                   parse_number<double>(key, trim(item.substr(colon + 1)))});
  }
  return out;
}

inline std::vector<double> parse_tau_list(const std::string& text) {
  std::vector<double> out;
  for (const auto& item : split(text, ',')) out.push_back(parse_tau(item));
  return out;
}

inline std::string join_taus(const std::vector<double>& taus) {
  std::string out;
  for (std::size_t i = 0; i < taus.size(); ++i) out += (i ? "," : "") + format_tau(taus[i]);
  return out;
}

/// Rejects unknown keys so a typo never silently falls back to a default.
class Section {
 public:
  Section(const boost::property_tree::ptree* tree, std::string name) : tree_(tree), name_(std::move(name)) {}

  std::optional<std::string> get(const std::string& key) {
    seen_.insert(key);
    if (!tree_) return std::nullopt;
    auto v = tree_->get_optional<std::string>(key);
    if (!v) return std::nullopt;
    std::string s = trim(*v);
    return s;
  }

  std::string qualified(const std::string& key) const { return name_ + "." + key; }

  void reject_unknown() const {
    if (!tree_) return;
    for (const auto& [key, _] : *tree_) {
      if (!seen_.count(key)) throw Error(ErrorKind::InvalidConfig, "unknown key " + qualified(key));
    }
  }

 private:
  const boost::property_tree::ptree* tree_;
  std::string name_;
  std::set<std::string> seen_;
};

inline ProviderSpec parse_provider(Section s) {
  ProviderSpec p;
  if (auto v = s.get("type")) {
    if (*v == "synthetic") p.kind = ProviderKind::Synthetic;
    else if (*v == "recorded") p.kind = ProviderKind::Recorded;
    else if (*v == "remote") p.kind = ProviderKind::Remote;
    else throw Error(ErrorKind::InvalidConfig, s.qualified("type") + ": unknown provider type '" + *v + "'");
  }
  if (auto v = s.get("name")) p.name = *v;
  if (auto v = s.get("vocab")) p.vocab = *v;
  if (auto v = s.get("vocab_size"); v && !v->empty()) p.vocab_size = parse_number<std::size_t>(s.qualified("vocab_size"), *v);
  if (auto v = s.get("vocab_fingerprint"); v && !v->empty()) p.vocab_fingerprint = parse_fingerprint_hex(*v);
  if (auto v = s.get("param_count_b"); v && !v->empty()) p.param_count_b = parse_number<double>(s.qualified("param_count_b"), *v);
  if (auto v = s.get("seed"); v && !v->empty()) p.seed = parse_number<std::uint64_t>(s.qualified("seed"), *v);
  if (auto v = s.get("segments"); v && !v->empty()) p.segments = parse_segments(s.qualified("segments"), *v);
  if (auto v = s.get("floor_bits"); v && !v->empty()) p.floor_bits = parse_number<double>(s.qualified("floor_bits"), *v);
  if (auto v = s.get("path")) p.path = *v;
  if (auto v = s.get("endpoint")) p.endpoint = *v;
  s.reject_unknown();

  if (!p.vocab.empty() && p.vocab != "byte") {
    throw Error(ErrorKind::InvalidConfig, s.qualified("vocab") + ": only 'byte' is supported");
  }
  switch (p.kind) {
    case ProviderKind::Synthetic:
      if (p.segments.empty()) throw Error(ErrorKind::InvalidConfig, s.qualified("segments") + " is required");
      if (p.vocab.empty() && p.vocab_size < 2) throw Error(ErrorKind::InvalidConfig, s.qualified("vocab_size") + " must be >= 2");
      if (!(p.param_count_b > 0.0)) throw Error(ErrorKind::InvalidConfig, s.qualified("param_count_b") + " must be > 0");
      break;
    case ProviderKind::Recorded:
      if (p.path.empty()) throw Error(ErrorKind::InvalidConfig, s.qualified("path") + " is required");
      break;
    case ProviderKind::Remote:
      if (p.endpoint.empty()) throw Error(ErrorKind::InvalidConfig, s.qualified("endpoint") + " is required");
      break;
  }
  return p;
}

inline void print_provider(std::ostream& out, const char* section, const ProviderSpec& p) {
  out << '[' << section << "]\n";
  out << "type = " << to_string(p.kind) << '\n';
  out << "name = " << p.name << '\n';
  out << "vocab = " << p.vocab << '\n';
  out << "vocab_size = " << p.vocab_size << '\n';
  out << "vocab_fingerprint = " << (p.vocab_fingerprint ? fingerprint_hex(*p.vocab_fingerprint) : "") << '\n';
  out << "param_count_b = " << shortest(p.param_count_b) << '\n';
  out << "seed = " << p.seed << '\n';
  out << "segments = ";
  for (std::size_t i = 0; i < p.segments.size(); ++i) {
    out << (i ? ", " : "") << p.segments[i].length << ':' << shortest(p.segments[i].bits);
  }
  out << '\n';
  out << "floor_bits = " << shortest(p.floor_bits) << '\n';
  out << "path = " << p.path << '\n';
  out << "endpoint = " << p.endpoint << "\n\n";
}

}  // namespace detail

inline RunSpec parse_run_spec(std::istream& in, const std::string& name = "<config>") {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw Error(ErrorKind::InvalidConfig, name + ":" + std::to_string(e.line()) + ": " + e.message());
  }
  for (const auto& [section, body] : tree) {
    if (section != "run" && section != "switch" && section != "small" && section != "large") {
      throw Error(ErrorKind::InvalidConfig, name + ": unknown section [" + section + "]");
    }
    if (!body.data().empty()) throw Error(ErrorKind::InvalidConfig, name + ": key '" + section + "' outside any section");
  }
  auto child = [&](const char* key) { return tree.get_child_optional(key).get_ptr(); };

  RunSpec spec;
  using detail::parse_number;
  {
    detail::Section s(child("run"), "run");
    auto& g = spec.generation;
    if (auto v = s.get("seed"); v && !v->empty()) g.seed = parse_number<std::uint64_t>("run.seed", *v);
    if (auto v = s.get("max_tokens"); v && !v->empty()) g.max_tokens = parse_number<std::size_t>("run.max_tokens", *v);
    if (auto v = s.get("temperature"); v && !v->empty()) g.temperature = Temperature(parse_number<double>("run.temperature", *v));
    if (auto v = s.get("greedy"); v && !v->empty()) g.greedy = detail::parse_bool("run.greedy", *v);
    if (auto v = s.get("stop_token"); v && !v->empty()) g.stop_token = parse_number<TokenId>("run.stop_token", *v);
    if (auto v = s.get("repetitions"); v && !v->empty()) spec.repetitions = parse_number<std::size_t>("run.repetitions", *v);
    if (auto v = s.get("prompt"); v && !v->empty()) spec.prompt_tokens = detail::parse_token_list("run.prompt", *v);
    if (auto v = s.get("prompt_text"); v && !v->empty()) spec.prompt_text = *v;
    if (auto v = s.get("prompt_file"); v && !v->empty()) spec.prompt_file = *v;
    if (auto v = s.get("taus"); v && !v->empty()) spec.taus = detail::parse_tau_list(*v);
    if (auto v = s.get("trace_out")) spec.trace_out = *v;
    if (auto v = s.get("csv_out")) spec.csv_out = *v;
    s.reject_unknown();
  }
  {
    detail::Section s(child("switch"), "switch");
    auto& sw = spec.generation.switching;
    if (auto v = s.get("tau"); v && !v->empty()) sw.tau = parse_tau(*v);
    if (auto v = s.get("window"); v && !v->empty()) sw.window = parse_number<std::size_t>("switch.window", *v);
    if (auto v = s.get("min_duration"); v && !v->empty()) sw.min_duration = parse_number<std::size_t>("switch.min_duration", *v);
    if (auto v = s.get("initial_role"); v && !v->empty()) sw.initial_role = detail::parse_role("switch.initial_role", *v);
    if (auto v = s.get("reset_window_on_switch"); v && !v->empty()) {
      sw.reset_window_on_switch = detail::parse_bool("switch.reset_window_on_switch", *v);
    }
    s.reject_unknown();
  }
  if (!child("small") || !child("large")) throw Error(ErrorKind::InvalidConfig, name + ": both [small] and [large] are required");
  spec.small = detail::parse_provider(detail::Section(child("small"), "small"));
  spec.large = detail::parse_provider(detail::Section(child("large"), "large"));
  spec.validate();
  return spec;
}

inline RunSpec load_run_spec(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::InvalidConfig, "cannot open config " + path);
  return parse_run_spec(in, path);
}

/// Emits every field; parse_run_spec of the output yields an equal RunSpec.
inline std::string print_run_spec(const RunSpec& spec) {
  using detail::shortest;
  std::ostringstream out;
  const auto& g = spec.generation;
  out << "[run]\n";
  out << "seed = " << g.seed << '\n';
  out << "max_tokens = " << g.max_tokens << '\n';
  out << "temperature = " << shortest(g.temperature.value()) << '\n';
  out << "greedy = " << (g.greedy ? "true" : "false") << '\n';
  out << "stop_token = " << (g.stop_token ? std::to_string(*g.stop_token) : "") << '\n';
  out << "repetitions = " << spec.repetitions << '\n';
  if (spec.prompt_tokens) {
    out << "prompt =";
    for (TokenId t : *spec.prompt_tokens) out << ' ' << t;
    out << '\n';
  }
  if (spec.prompt_text) out << "prompt_text = " << *spec.prompt_text << '\n';
  if (spec.prompt_file) out << "prompt_file = " << *spec.prompt_file << '\n';
  out << "taus = " << detail::join_taus(spec.taus) << '\n';
  out << "trace_out = " << spec.trace_out << '\n';
  out << "csv_out = " << spec.csv_out << "\n\n";
  const auto& sw = g.switching;
  out << "[switch]\n";
  out << "tau = " << format_tau(sw.tau) << '\n';
  out << "window = " << sw.window << '\n';
  out << "min_duration = " << sw.min_duration << '\n';
  out << "initial_role = " << to_string(sw.initial_role) << '\n';
  out << "reset_window_on_switch = " << (sw.reset_window_on_switch ? "true" : "false") << "\n\n";
  detail::print_provider(out, "small", spec.small);
  detail::print_provider(out, "large", spec.large);
  return out.str();
}

}  // namespace ead

#include "gpbeam/scorer.hpp"

#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "json.hpp"

namespace gpbeam {

namespace {

std::string entry_symbol(const StackEntry& e, const std::set<std::string>* vocab) {
  if (std::holds_alternative<OpenNode>(e))
    return std::get<OpenNode>(e).label + "*";
  const Tree& t = std::get<Tree>(e);
  if (!t.is_leaf()) return t.label;
  // Leaf entries condition on the token itself; rare tokens fall back to <unk>
  // so train- and test-time signatures agree.
  if (vocab && !vocab->count(t.word)) return std::string("'") + kUnknownToken;
  return "'" + t.word;
}

std::string signature_impl(const ParserState& state, const SignatureConfig& cfg,
                           const std::set<std::string>* vocab) {
  std::string sig;
  for (int i = 0; i < cfg.top_m; ++i) {
    int idx = static_cast<int>(state.stack.size()) - 1 - i;
    if (i) sig += '|';
    sig += idx >= 0 ? entry_symbol(state.stack[idx], vocab) : "_";
  }
  int oc = std::min(state.open_count, cfg.open_count_clip);
  sig += '#';
  sig += std::to_string(oc);
  return sig;
}

const char* kShiftKey = "SHIFT";
const char* kReduceKey = "REDUCE";

std::string outcome_key(const Action& a) {
  switch (a.kind) {
    case ActionKind::NT: return "NT(" + a.arg + ")";
    case ActionKind::Shift: return kShiftKey;
    case ActionKind::Reduce: return kReduceKey;
  }
  throw std::logic_error("bad action kind");
}

}  // namespace

std::string state_signature(const ParserState& state, const SignatureConfig& cfg) {
  return signature_impl(state, cfg, nullptr);
}

double Scorer::word_logprob(const ParserState& state, const std::string& token) const {
  auto dist = word_logprob_dist(state);
  auto it = dist.find(token);
  if (it == dist.end()) it = dist.find(kUnknownToken);
  // A scorer that covers neither the token nor <unk> assigns zero mass;
  // the search reports this as beam death rather than an exception here.
  if (it == dist.end()) return -std::numeric_limits<double>::infinity();
  return it->second;
}

TabularScorer TabularScorer::fit(const Treebank& tb, StrategyId strategy,
                                 const TabularScorerConfig& cfg,
                                 const DerivationLimits& limits) {
  if (tb.trees.empty()) throw std::invalid_argument("fit: empty treebank");
  if (cfg.alpha <= 0.0) throw std::invalid_argument("fit: alpha must be > 0");

  TabularScorer sc;
  sc.cfg_ = cfg;
  sc.strategy_ = strategy;

  std::map<std::string, int> word_freq;
  for (const Tree& t : tb.trees)
    for (const std::string& w : yield_words(t)) ++word_freq[w];
  sc.vocab_.insert(kUnknownToken);
  for (const auto& [w, c] : word_freq)
    if (c >= cfg.min_word_count) sc.vocab_.insert(w);

  for (const Tree& t : tb.trees) {
    std::vector<Action> actions = oracle(t, strategy);
    ParserState state;
    for (const Action& a : actions) {
      std::string sig = signature_impl(state, cfg.signature, &sc.vocab_);
      sc.action_counts_[sig][outcome_key(a)] += 1.0;
      if (a.kind == ActionKind::Shift) {
        std::string w = sc.vocab_.count(a.arg) ? a.arg : kUnknownToken;
        sc.word_counts_[sig][w] += 1.0;
      } else if (a.kind == ActionKind::NT) {
        sc.nt_labels_.insert(a.arg);
      }
      state = apply(state, a, strategy, limits);
    }
  }
  return sc;
}

std::map<Action, double> TabularScorer::action_logprob_dist(
    const ParserState& state, StrategyId strategy,
    const DerivationLimits& limits) const {
  LegalKinds kinds = legal_action_kinds(state, strategy, limits);
  std::vector<Action> support;
  if (kinds.nt)
    for (const std::string& label : nt_labels_) support.push_back(Action::nt(label));
  if (kinds.shift) support.push_back(Action::shift(""));
  if (kinds.reduce) support.push_back(Action::reduce());
  if (support.empty())
    throw std::invalid_argument("action_logprob_dist: no legal action (terminal state)");

  std::string sig = signature_impl(state, cfg_.signature, &vocab_);
  const std::map<std::string, double>* counts = nullptr;
  if (auto it = action_counts_.find(sig); it != action_counts_.end())
    counts = &it->second;

  double total = 0.0;
  std::vector<double> c(support.size(), 0.0);
  for (size_t i = 0; i < support.size(); ++i) {
    if (counts) {
      auto it = counts->find(outcome_key(support[i]));
      if (it != counts->end()) c[i] = it->second;
    }
    total += c[i];
  }
  double denom = total + cfg_.alpha * static_cast<double>(support.size());
  std::map<Action, double> dist;
  for (size_t i = 0; i < support.size(); ++i)
    dist[support[i]] = std::log((c[i] + cfg_.alpha) / denom);
  return dist;
}

std::map<std::string, double> TabularScorer::word_logprob_dist(
    const ParserState& state) const {
  if (!legal_action_kinds(state, strategy_, DerivationLimits{}).shift)
    throw std::invalid_argument("word_logprob_dist: SHIFT is not legal here");
  std::string sig = signature_impl(state, cfg_.signature, &vocab_);
  const std::map<std::string, double>* counts = nullptr;
  if (auto it = word_counts_.find(sig); it != word_counts_.end())
    counts = &it->second;

  double total = 0.0;
  if (counts)
    for (const auto& [w, c] : *counts) total += c;
  double denom = total + cfg_.alpha * static_cast<double>(vocab_.size());
  std::map<std::string, double> dist;
  for (const std::string& w : vocab_) {
    double c = 0.0;
    if (counts) {
      auto it = counts->find(w);
      if (it != counts->end()) c = it->second;
    }
    dist[w] = std::log((c + cfg_.alpha) / denom);
  }
  return dist;
}

double sequence_logprob(const Scorer& scorer, const std::vector<Action>& actions,
                        StrategyId strategy, const DerivationLimits& limits) {
  ParserState state;
  double lp = 0.0;
  for (const Action& a : actions) {
    if (!is_legal(state, a, strategy, limits))
      throw std::invalid_argument("sequence_logprob: illegal action " + to_string(a));
    auto dist = scorer.action_logprob_dist(state, strategy, limits);
    Action key = a.kind == ActionKind::Shift ? Action::shift("") : a;
    auto it = dist.find(key);
    if (it == dist.end())
      throw std::runtime_error("scorer assigns no mass to legal action " + to_string(a));
    lp += it->second;
    if (a.kind == ActionKind::Shift) lp += scorer.word_logprob(state, a.arg);
    state = apply(state, a, strategy, limits);
  }
  return lp;
}

// --- serialization ---

std::string TabularScorer::to_json() const {
  nlohmann::json j;
  j["strategy"] = gpbeam::to_string(strategy_);
  j["signature_top_m"] = cfg_.signature.top_m;
  j["signature_open_count_clip"] = cfg_.signature.open_count_clip;
  j["alpha"] = cfg_.alpha;
  j["min_word_count"] = cfg_.min_word_count;
  j["action_counts"] = action_counts_;
  j["word_counts"] = word_counts_;
  j["vocabulary"] = vocab_;
  j["nt_labels"] = nt_labels_;
  return j.dump(2);
}

TabularScorer TabularScorer::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  TabularScorer sc;
  sc.strategy_ = parse_strategy(j.at("strategy").get<std::string>());
  sc.cfg_.signature.top_m = j.at("signature_top_m").get<int>();
  sc.cfg_.signature.open_count_clip = j.at("signature_open_count_clip").get<int>();
  sc.cfg_.alpha = j.at("alpha").get<double>();
  sc.cfg_.min_word_count = j.at("min_word_count").get<int>();
  sc.action_counts_ = j.at("action_counts")
                          .get<std::map<std::string, std::map<std::string, double>>>();
  sc.word_counts_ = j.at("word_counts")
                        .get<std::map<std::string, std::map<std::string, double>>>();
  sc.vocab_ = j.at("vocabulary").get<std::set<std::string>>();
  sc.nt_labels_ = j.at("nt_labels").get<std::set<std::string>>();
  return sc;
}

void TabularScorer::save(const std::string& path) const {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write scorer: " + path);
  out << to_json() << '\n';
}

TabularScorer TabularScorer::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open scorer: " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return from_json(ss.str());
}

}  // namespace gpbeam

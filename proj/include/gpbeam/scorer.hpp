#ifndef GPBEAM_SCORER_HPP
#define GPBEAM_SCORER_HPP

#include <map>
#include <set>
#include <string>
#include <vector>

#include "gpbeam/transition.hpp"

namespace gpbeam {

inline constexpr const char* kUnknownToken = "<unk>";

// Finite conditioning context: labels/flags of the top m stack entries plus
// the clipped open-nonterminal count.
struct SignatureConfig {
  int top_m = 3;
  int open_count_clip = 5;
};

std::string state_signature(const ParserState& state, const SignatureConfig& cfg);

// A structural outcome is NT(label), REDUCE, or SHIFT as a single mass; the
// word distribution is factored out separately.
class Scorer {
 public:
  virtual ~Scorer() = default;

  // Log probabilities over exactly the legal structural outcomes at state,
  // normalized over that support. Throws on terminal states with no legal
  // actions.
  virtual std::map<Action, double> action_logprob_dist(
      const ParserState& state, StrategyId strategy,
      const DerivationLimits& limits) const = 0;

  // Log probabilities over the full vocabulary, normalized. Only valid where
  // SHIFT is legal.
  virtual std::map<std::string, double> word_logprob_dist(
      const ParserState& state) const = 0;

  // Log probability of one token; out-of-vocabulary tokens score as <unk>.
  virtual double word_logprob(const ParserState& state, const std::string& token) const;

  // Nonterminal labels the scorer can assign probability to.
  virtual const std::set<std::string>& nonterminals() const = 0;
};

struct TabularScorerConfig {
  SignatureConfig signature;
  double alpha = 0.1;
  int min_word_count = 2;
};

// Count-based reference scorer: additively smoothed relative frequencies of
// (signature, outcome) and (signature, word) pairs over oracle derivations.
class TabularScorer : public Scorer {
 public:
  TabularScorer() = default;

  static TabularScorer fit(const Treebank& tb, StrategyId strategy,
                           const TabularScorerConfig& cfg,
                           const DerivationLimits& limits = {});

  std::map<Action, double> action_logprob_dist(
      const ParserState& state, StrategyId strategy,
      const DerivationLimits& limits) const override;
  std::map<std::string, double> word_logprob_dist(const ParserState& state) const override;
  const std::set<std::string>& nonterminals() const override { return nt_labels_; }

  const std::set<std::string>& vocabulary() const { return vocab_; }
  StrategyId strategy() const { return strategy_; }
  const TabularScorerConfig& config() const { return cfg_; }

  std::string to_json() const;
  static TabularScorer from_json(const std::string& text);
  void save(const std::string& path) const;
  static TabularScorer load(const std::string& path);

 private:
  TabularScorerConfig cfg_;
  StrategyId strategy_ = StrategyId::TopDown;
  // outcome keys: "NT(label)" / "REDUCE" / "SHIFT"
  std::map<std::string, std::map<std::string, double>> action_counts_;
  std::map<std::string, std::map<std::string, double>> word_counts_;
  std::set<std::string> vocab_;      // includes kUnknownToken
  std::set<std::string> nt_labels_;
};

// Joint log probability of a legal action sequence from the empty state:
// structural log-probs plus the word log-prob at every SHIFT.
double sequence_logprob(const Scorer& scorer, const std::vector<Action>& actions,
                        StrategyId strategy, const DerivationLimits& limits);

}  // namespace gpbeam

#endif

#ifndef GPBEAM_EXTERNAL_SCORER_HPP
#define GPBEAM_EXTERNAL_SCORER_HPP

#include <cstdio>
#include <map>
#include <mutex>
#include <set>
#include <string>

#include "gpbeam/scorer.hpp"

namespace gpbeam {

// Scorer backed by a child process speaking the line-delimited protocol over
// its standard streams:
//   request  {"id": n, "stack_signature": s, "legal_actions": [...],
//             "query": "actions" | "word"}
//   reply    {"id": n, "logprobs": {outcome: value}}   (natural log)
// Replies may arrive out of order; they are matched by id. The nonterminal
// label set cannot be learned from the protocol, so it is supplied up front.
class ExternalScorer : public Scorer {
 public:
  ExternalScorer(const std::string& command, std::set<std::string> nt_labels,
                 StrategyId strategy, SignatureConfig signature = {});
  ~ExternalScorer() override;

  ExternalScorer(const ExternalScorer&) = delete;
  ExternalScorer& operator=(const ExternalScorer&) = delete;

  std::map<Action, double> action_logprob_dist(
      const ParserState& state, StrategyId strategy,
      const DerivationLimits& limits) const override;
  std::map<std::string, double> word_logprob_dist(const ParserState& state) const override;
  const std::set<std::string>& nonterminals() const override { return nt_labels_; }

 private:
  std::map<std::string, double> roundtrip(const std::string& signature,
                                          const std::vector<std::string>& legal,
                                          const std::string& query) const;

  std::set<std::string> nt_labels_;
  StrategyId strategy_;
  SignatureConfig signature_;
  int pid_ = -1;
  std::FILE* to_child_ = nullptr;
  std::FILE* from_child_ = nullptr;
  mutable std::mutex mutex_;
  mutable long next_id_ = 1;
  mutable std::map<long, std::string> pending_;  // out-of-order replies by id
};

}  // namespace gpbeam

#endif

#ifndef GPBEAM_BEAM_HPP
#define GPBEAM_BEAM_HPP

#include <stdexcept>
#include <string>
#include <vector>

#include "gpbeam/scorer.hpp"
#include "gpbeam/transition.hpp"

namespace gpbeam {

struct BeamConfig {
  int word_beam_width = 1000;    // k_w: parses retained per word
  int action_beam_width = 1000;  // k_a: in-progress items per expansion layer
  DerivationLimits limits;
  // When true, the word's marginal sums only the k_w survivors instead of
  // every shifted successor found during expansion.
  bool post_truncation_mass = false;
};

struct BeamItem {
  std::vector<Action> actions;
  ParserState state;
  double logprob = 0.0;  // joint log probability of actions and generated words
};

// Ordering used everywhere: logprob descending, then lexicographic over
// action sequences, so identical inputs give bit-identical beams.
bool beam_item_before(const BeamItem& a, const BeamItem& b);

struct WordBeam {
  int word_index = 0;
  std::vector<BeamItem> items;     // sorted, at most k_w
  double prefix_mass_log = 0.0;    // log sum of item probabilities
};

// Raised when no hypothesis can generate the next word.
class BeamDeath : public std::runtime_error {
 public:
  BeamDeath(int position, const std::string& token)
      : std::runtime_error("beam death at position " + std::to_string(position) +
                           " (token '" + token + "')"),
        position(position) {}
  int position;
};

WordBeam init_beam(StrategyId strategy);

struct AdvanceResult {
  WordBeam beam;
  double word_logmass;               // beam-renormalized log P(next word)
  double word_logmass_unnormalized;  // log of the raw shifted mass (diagnostic)
};

// One step of word-synchronous search: expand structural actions layer by
// layer under k_a, collect shifted successors for `next`, keep the top k_w.
AdvanceResult advance_word(const WordBeam& beam, const std::string& next,
                           const Scorer& scorer, StrategyId strategy,
                           const BeamConfig& config);

struct SurprisalResult {
  std::vector<double> surprisal_bits;  // one per token
  double eos_surprisal_bits = 0.0;     // structural completion after the last word
  std::vector<WordBeam> snapshots;     // snapshots[i] = beam after i words; [0] = init
};

SurprisalResult surprisal_per_word(const std::vector<std::string>& sentence,
                                   const Scorer& scorer, StrategyId strategy,
                                   const BeamConfig& config);

struct CompletionResult {
  std::vector<BeamItem> finished;  // terminal items, sorted
  double logmass;                  // beam-renormalized completion mass
};

// Expand structural actions only, harvesting every terminal configuration.
CompletionResult complete_structure(const WordBeam& beam, const Scorer& scorer,
                                    StrategyId strategy, const BeamConfig& config);

Tree best_parse(const std::vector<std::string>& sentence, const Scorer& scorer,
                StrategyId strategy, const BeamConfig& config);

}  // namespace gpbeam

#endif

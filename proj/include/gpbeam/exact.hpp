#ifndef GPBEAM_EXACT_HPP
#define GPBEAM_EXACT_HPP

#include <string>
#include <vector>

#include "gpbeam/scorer.hpp"
#include "gpbeam/transition.hpp"

namespace gpbeam {

struct Derivation {
  std::vector<Action> actions;
  double logprob = 0.0;
};

// Depth-first enumeration of every legal derivation whose SHIFTs spell
// exactly `prefix`, ending right after the last SHIFT. Shares the legality
// and limits code paths with the beam. Throws when the expansion count
// exceeds `max_expansions`.
std::vector<Derivation> enumerate_parses(const std::vector<std::string>& prefix,
                                         const Scorer& scorer, StrategyId strategy,
                                         const DerivationLimits& limits,
                                         long max_expansions = 1000000);

// Structural completions into terminal states from each enumerated prefix
// derivation (used for exact EOS mass and exact best parse).
std::vector<Derivation> enumerate_completions(const std::vector<std::string>& sentence,
                                              const Scorer& scorer, StrategyId strategy,
                                              const DerivationLimits& limits,
                                              long max_expansions = 1000000);

// log of the total probability mass of a set of derivations.
double total_logmass(const std::vector<Derivation>& ds);

// Exact surprisal in bits: -log2 of mass(prefix + next) / mass(prefix).
double exact_next_word_surprisal(const std::vector<std::string>& prefix,
                                 const std::string& next, const Scorer& scorer,
                                 StrategyId strategy, const DerivationLimits& limits,
                                 long max_expansions = 1000000);

struct ExactSurprisals {
  std::vector<double> surprisal_bits;
  double eos_surprisal_bits = 0.0;
};

ExactSurprisals exact_surprisal_per_word(const std::vector<std::string>& sentence,
                                         const Scorer& scorer, StrategyId strategy,
                                         const DerivationLimits& limits,
                                         long max_expansions = 1000000);

// One action sequence + logprob per line.
std::string render_derivations(const std::vector<Derivation>& ds);

}  // namespace gpbeam

#endif

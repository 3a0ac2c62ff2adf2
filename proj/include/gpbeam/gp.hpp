#ifndef GPBEAM_GP_HPP
#define GPBEAM_GP_HPP

#include <algorithm>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "gpbeam/beam.hpp"
#include "gpbeam/exact.hpp"

namespace gpbeam {

// Structural criterion over the ancestor labels of one token: every required
// label must appear on the token's path to the root, no forbidden label may.
// Open nonterminals count as ancestors.
struct InterpretationPredicate {
  int token_index = 0;
  std::set<std::string> required_ancestors;
  std::set<std::string> forbidden_ancestors;
};

enum class InterpretationBin { InitialPreferred, GloballyCorrect, Other };

std::string to_string(InterpretationBin b);

// Labels dominating the `token_index`-th leaf of a (possibly partial)
// structure, innermost first; open nonterminals below the leaf's entry on
// the stack dominate it and are included.
std::vector<std::string> ancestor_labels(const ParserState& state, int token_index);

bool classify(const ParserState& state, const InterpretationPredicate& pred);
bool classify(const BeamItem& item, const InterpretationPredicate& pred);

InterpretationBin bin_of(const ParserState& state,
                         const InterpretationPredicate& initial,
                         const InterpretationPredicate& correct);

enum class ConstructionId { MV_RR, NP_S, NP_Z };

std::string to_string(ConstructionId c);
ConstructionId parse_construction(const std::string& text);

struct ConstructionSpec {
  std::string item_id;
  ConstructionId construction = ConstructionId::MV_RR;
  std::vector<std::string> ambiguous_sentence;
  std::vector<std::string> unambiguous_sentence;
  int disambiguating_index_ambiguous = 0;    // spillover words are +1, +2
  int disambiguating_index_unambiguous = 0;
  int ambiguous_verb_index = 0;              // in the ambiguous sentence
  InterpretationPredicate initial_predicate;
  InterpretationPredicate correct_predicate;
  std::string fullparallel_substitute;       // empty: FullParallel unavailable
  // First beam position (words consumed) at which the reading predicates can
  // separate the analyses structurally; -1 means one past the latest anchor
  // token. Readings that diverge only during the disambiguating transition
  // (NP_S) become classifiable one word later than the anchor.
  int classifiable_from = -1;

  int classifiable_from_position() const {
    if (classifiable_from >= 0) return classifiable_from;
    return std::max(initial_predicate.token_index, correct_predicate.token_index) + 1;
  }
};

std::vector<ConstructionSpec> load_construction_specs(const std::string& path);
std::string render_construction_specs(const std::vector<ConstructionSpec>& specs);

struct BinProfile {
  int position = 0;  // words consumed
  double initial = 0.0, correct = 0.0, other = 0.0;  // sum to 1
};

// Normalized per-bin beam mass at every position where the binned token has
// been generated.
std::vector<BinProfile> interpretation_profile(const std::vector<WordBeam>& snapshots,
                                               const InterpretationPredicate& initial,
                                               const InterpretationPredicate& correct);

std::vector<BinProfile> exact_interpretation_profile(
    const std::vector<std::string>& prefix, const InterpretationPredicate& initial,
    const InterpretationPredicate& correct, const Scorer& scorer, StrategyId strategy,
    const DerivationLimits& limits, long max_expansions = 1000000);

class FilteredBeamEmpty : public std::runtime_error {
 public:
  FilteredBeamEmpty(int position, const std::string& what)
      : std::runtime_error(what), position(position) {}
  int position;
};

struct ForcedGpOptions {
  // When false, the beam is filtered at every position from the ambiguous
  // verb onward; when true, only right before the disambiguating word.
  bool filter_at_disambiguation_only = false;
};

// Surprisals for the ambiguous sentence with the beam restricted to parses
// consistent with the initially preferred interpretation.
SurprisalResult forced_gp_surprisal(const ConstructionSpec& spec, const Scorer& scorer,
                                    StrategyId strategy, const BeamConfig& config,
                                    const ForcedGpOptions& opts = {});

struct FullParallelResult {
  std::vector<double> surprisal_bits;
  // True at each position from the ambiguous verb through disambiguation when
  // the union beam holds at least one globally correct parse.
  std::vector<bool> correct_present;
};

// Counterfactual union condition: parses of the substitute-verb sentence are
// rescored with the original verb and merged (deduplicated) into the plain
// beam before marginalizing.
FullParallelResult full_parallel_surprisal(const ConstructionSpec& spec,
                                           const Scorer& scorer, StrategyId strategy,
                                           const BeamConfig& config);

struct GardenPathEffect {
  double disambiguating = 0.0;
  double spillover1 = 0.0;
  double spillover2 = 0.0;
  double summed = 0.0;
};

// Signed ambiguous-minus-unambiguous surprisal difference over the
// disambiguating word and two spillover words.
GardenPathEffect gp_effect_surprisal(const ConstructionSpec& spec,
                                     const std::vector<double>& ambiguous_bits,
                                     const std::vector<double>& unambiguous_bits);

}  // namespace gpbeam

#endif

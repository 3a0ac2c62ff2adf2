#ifndef GPBEAM_TRANSITION_HPP
#define GPBEAM_TRANSITION_HPP

#include <string>
#include <variant>
#include <vector>

#include "gpbeam/tree.hpp"

namespace gpbeam {

enum class ActionKind { NT, Shift, Reduce };

// NT(label) opens a nonterminal, SHIFT(token) generates the next word,
// REDUCE closes the innermost open nonterminal.
struct Action {
  ActionKind kind;
  std::string arg;  // nonterminal label for NT, token for SHIFT, empty for REDUCE

  static Action nt(std::string label) { return {ActionKind::NT, std::move(label)}; }
  static Action shift(std::string token) { return {ActionKind::Shift, std::move(token)}; }
  static Action reduce() { return {ActionKind::Reduce, ""}; }

  bool operator==(const Action&) const = default;
  auto operator<=>(const Action&) const = default;
};

std::string to_string(const Action& a);
Action parse_action(const std::string& text);

enum class StrategyId { TopDown, LeftCorner };

std::string to_string(StrategyId s);
StrategyId parse_strategy(const std::string& text);

// Caps that keep the derivation space finite during search and enumeration.
struct DerivationLimits {
  int max_open_nonterminals = 20;
  int max_structural_actions_between_words = 40;
};

// A nonterminal that has been opened but not yet closed; in the left-corner
// system it always holds at least its first (left-corner) child.
struct OpenNode {
  std::string label;
  std::vector<Tree> children;

  bool operator==(const OpenNode&) const = default;
};

// Either an open nonterminal or a completed subtree.
using StackEntry = std::variant<OpenNode, Tree>;

struct ParserState {
  std::vector<StackEntry> stack;
  int words_generated = 0;
  int open_count = 0;
  int structural_since_word = 0;  // NT/REDUCE actions since the last SHIFT

  bool operator==(const ParserState&) const = default;
};

// Which action kinds are legal at a state. NT legality is label-independent;
// the scorer decides which labels exist.
struct LegalKinds {
  bool nt = false;
  bool shift = false;
  bool reduce = false;

  bool none() const { return !nt && !shift && !reduce; }
};

LegalKinds legal_action_kinds(const ParserState& state, StrategyId strategy,
                              const DerivationLimits& limits);

bool is_legal(const ParserState& state, const Action& action, StrategyId strategy,
              const DerivationLimits& limits);

// Deterministic successor. Throws std::invalid_argument for illegal actions.
ParserState apply(const ParserState& state, const Action& action, StrategyId strategy,
                  const DerivationLimits& limits);

bool is_terminal(const ParserState& state);

// The completed root of a terminal state.
const Tree& terminal_tree(const ParserState& state);

// Canonical derivation of t: pre-order for TopDown, in-order for LeftCorner.
std::vector<Action> oracle(const Tree& t, StrategyId strategy);

// Replays a sequence from the empty state; throws on illegality.
ParserState replay(const std::vector<Action>& actions, StrategyId strategy,
                   const DerivationLimits& limits);

// Action sequence text format, one action per line:
//   NT(LABEL) | SHIFT(token) | REDUCE
std::string render_actions(const std::vector<Action>& actions);
std::vector<Action> parse_actions(const std::string& text);

}  // namespace gpbeam

#endif

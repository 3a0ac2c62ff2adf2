#include <stdexcept>
#include <random>

#include "doctest.h"
#include "gpbeam/transition.hpp"
#include "test_support.hpp"

using namespace gpbeam;
using gpbeam::testing::random_tree;

namespace {

std::vector<Action> acts(std::initializer_list<const char*> lines) {
  std::vector<Action> out;
  for (const char* l : lines) out.push_back(parse_action(l));
  return out;
}

int shift_count(const std::vector<Action>& actions) {
  int n = 0;
  for (const Action& a : actions)
    if (a.kind == ActionKind::Shift) ++n;
  return n;
}

}  // namespace

TEST_CASE("action text round-trip") {
  CHECK(to_string(Action::nt("NP")) == "NT(NP)");
  CHECK(to_string(Action::shift("the")) == "SHIFT(the)");
  CHECK(to_string(Action::reduce()) == "REDUCE");
  CHECK(parse_action("NT(NP)") == Action::nt("NP"));
  CHECK(parse_action("SHIFT(the)") == Action::shift("the"));
  CHECK(parse_action("REDUCE") == Action::reduce());
  CHECK_THROWS_AS(parse_action("POP"), std::runtime_error);
  CHECK_THROWS_AS(parse_action("NT()"), std::runtime_error);

  auto seq = acts({"NT(S)", "SHIFT(w)", "REDUCE"});
  CHECK(parse_actions(render_actions(seq)) == seq);
}

TEST_CASE("strategy names") {
  CHECK(parse_strategy("top-down") == StrategyId::TopDown);
  CHECK(parse_strategy("left-corner") == StrategyId::LeftCorner);
  CHECK(to_string(StrategyId::TopDown) == "top-down");
  CHECK(to_string(StrategyId::LeftCorner) == "left-corner");
  CHECK_THROWS_AS(parse_strategy("bottom-up"), std::runtime_error);
}

TEST_CASE("top-down legality") {
  DerivationLimits lim;
  ParserState s;
  LegalKinds k = legal_action_kinds(s, StrategyId::TopDown, lim);
  CHECK(k.nt);
  CHECK_FALSE(k.shift);
  CHECK_FALSE(k.reduce);

  s = apply(s, Action::nt("S"), StrategyId::TopDown, lim);
  k = legal_action_kinds(s, StrategyId::TopDown, lim);
  CHECK(k.nt);
  CHECK(k.shift);
  CHECK_FALSE(k.reduce);  // no empty constituents

  s = apply(s, Action::shift("w"), StrategyId::TopDown, lim);
  k = legal_action_kinds(s, StrategyId::TopDown, lim);
  CHECK(k.reduce);

  CHECK_THROWS_AS(apply(ParserState{}, Action::reduce(), StrategyId::TopDown, lim),
                  std::invalid_argument);
}

TEST_CASE("left-corner legality") {
  DerivationLimits lim;
  ParserState s;
  LegalKinds k = legal_action_kinds(s, StrategyId::LeftCorner, lim);
  CHECK(k.shift);
  CHECK_FALSE(k.nt);
  CHECK_FALSE(k.reduce);

  s = apply(s, Action::shift("the"), StrategyId::LeftCorner, lim);
  k = legal_action_kinds(s, StrategyId::LeftCorner, lim);
  CHECK(k.nt);
  CHECK_FALSE(k.shift);  // a second root-level word would strand the first
  CHECK_FALSE(k.reduce);

  // NT(D) over a completed leaf wraps it as the first child.
  ParserState d = apply(s, Action::nt("D"), StrategyId::LeftCorner, lim);
  REQUIRE(d.stack.size() == 1);
  const OpenNode& open = std::get<OpenNode>(d.stack[0]);
  CHECK(open.label == "D");
  REQUIRE(open.children.size() == 1);
  CHECK(open.children[0].word == "the");
  k = legal_action_kinds(d, StrategyId::LeftCorner, lim);
  CHECK(k.shift);
  CHECK(k.reduce);
}

TEST_CASE("top-down apply: worked sequence") {
  DerivationLimits lim;
  ParserState s = replay(acts({"NT(S)", "NT(NP)", "SHIFT(the)", "SHIFT(girl)",
                               "REDUCE", "NT(VP)", "SHIFT(slept)", "REDUCE",
                               "REDUCE"}),
                         StrategyId::TopDown, lim);
  REQUIRE(is_terminal(s));
  CHECK(terminal_tree(s) == parse_bracketed("(S (NP the girl) (VP slept))"));
}

TEST_CASE("oracle: canonical sequences") {
  Tree unary = parse_bracketed("(X w)");
  CHECK(oracle(unary, StrategyId::TopDown) == acts({"NT(X)", "SHIFT(w)", "REDUCE"}));
  CHECK(oracle(unary, StrategyId::LeftCorner) == acts({"SHIFT(w)", "NT(X)", "REDUCE"}));

  Tree t = parse_bracketed("(S (NP the girl) (VP slept))");
  CHECK(oracle(t, StrategyId::LeftCorner) ==
        acts({"SHIFT(the)", "NT(NP)", "SHIFT(girl)", "REDUCE", "NT(S)",
              "SHIFT(slept)", "NT(VP)", "REDUCE", "REDUCE"}));
  CHECK(oracle(t, StrategyId::TopDown) ==
        acts({"NT(S)", "NT(NP)", "SHIFT(the)", "SHIFT(girl)", "REDUCE", "NT(VP)",
              "SHIFT(slept)", "REDUCE", "REDUCE"}));
}

TEST_CASE("oracle round-trip and invariants over random trees") {
  std::mt19937_64 rng(23);
  DerivationLimits lim{64, 256};
  for (int i = 0; i < 150; ++i) {
    Tree t = random_tree(rng);
    for (StrategyId strat : {StrategyId::TopDown, StrategyId::LeftCorner}) {
      std::vector<Action> seq = oracle(t, strat);
      CHECK(shift_count(seq) == leaf_count(t));

      // Word synchrony: i-th SHIFT emits the i-th yield word.
      std::vector<std::string> emitted;
      for (const Action& a : seq)
        if (a.kind == ActionKind::Shift) emitted.push_back(a.arg);
      CHECK(emitted == yield_words(t));

      // Replay step by step, checking state invariants along the way.
      ParserState s;
      int shifts = 0;
      for (const Action& a : seq) {
        CHECK(is_legal(s, a, strat, lim));
        s = apply(s, a, strat, lim);
        if (a.kind == ActionKind::Shift) ++shifts;
        CHECK(s.words_generated == shifts);
        int open = 0;
        for (const StackEntry& e : s.stack)
          if (std::holds_alternative<OpenNode>(e)) ++open;
        CHECK(s.open_count == open);
      }
      REQUIRE(is_terminal(s));
      CHECK(terminal_tree(s) == t);
    }
  }
}

TEST_CASE("terminal states") {
  DerivationLimits lim;
  ParserState td = replay(oracle(parse_bracketed("(S a b)"), StrategyId::TopDown),
                          StrategyId::TopDown, lim);
  CHECK(is_terminal(td));
  CHECK(legal_action_kinds(td, StrategyId::TopDown, lim).none());

  // Left-corner terminal states can still wrap the root in a unary NT.
  ParserState lc = replay(oracle(parse_bracketed("(S a b)"), StrategyId::LeftCorner),
                          StrategyId::LeftCorner, lim);
  CHECK(is_terminal(lc));
  LegalKinds k = legal_action_kinds(lc, StrategyId::LeftCorner, lim);
  CHECK(k.nt);
  CHECK_FALSE(k.shift);
  CHECK_FALSE(k.reduce);

  CHECK_FALSE(is_terminal(ParserState{}));
}

TEST_CASE("derivation limits cap open depth and structural runs") {
  DerivationLimits lim{2, 3};
  ParserState s;
  s = apply(s, Action::nt("A"), StrategyId::TopDown, lim);
  s = apply(s, Action::nt("A"), StrategyId::TopDown, lim);
  LegalKinds k = legal_action_kinds(s, StrategyId::TopDown, lim);
  CHECK_FALSE(k.nt);  // open cap reached
  CHECK(k.shift);

  // Three structural actions since the last word exhausts the budget.
  ParserState t;
  t = apply(t, Action::nt("A"), StrategyId::TopDown, lim);
  t = apply(t, Action::shift("w"), StrategyId::TopDown, lim);
  t = apply(t, Action::reduce(), StrategyId::TopDown, lim);
  CHECK(t.structural_since_word == 1);
  CHECK(is_terminal(t));

  ParserState u;
  u = apply(u, Action::nt("A"), StrategyId::TopDown, lim);
  u = apply(u, Action::shift("w"), StrategyId::TopDown, lim);
  CHECK(u.structural_since_word == 0);
}

TEST_CASE("left-corner multi-child reduce absorbs entries above the open node") {
  DerivationLimits lim;
  Tree t = parse_bracketed("(S a b c)");
  std::vector<Action> seq = oracle(t, StrategyId::LeftCorner);
  CHECK(seq == acts({"SHIFT(a)", "NT(S)", "SHIFT(b)", "SHIFT(c)", "REDUCE"}));
  ParserState s = replay(seq, StrategyId::LeftCorner, lim);
  CHECK(terminal_tree(s) == t);
}

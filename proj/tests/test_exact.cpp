#include <cmath>
#include <stdexcept>

#include "doctest.h"
#include "gpbeam/beam.hpp"
#include "gpbeam/exact.hpp"
#include "gpbeam/numeric.hpp"
#include "test_support.hpp"

using namespace gpbeam;
using gpbeam::testing::TableScorer;
using gpbeam::testing::two_parse_scorer;

namespace {

Treebank bank(std::initializer_list<const char*> lines) {
  Treebank tb;
  for (const char* l : lines) tb.trees.push_back(parse_bracketed(l));
  return tb;
}

}  // namespace

TEST_CASE("enumerate_parses: empty prefix is the empty derivation") {
  TableScorer sc = two_parse_scorer();
  auto ds = enumerate_parses({}, sc, StrategyId::TopDown, DerivationLimits{4, 6});
  REQUIRE(ds.size() == 1);
  CHECK(ds[0].actions.empty());
  CHECK(ds[0].logprob == 0.0);
  CHECK(total_logmass(ds) == doctest::Approx(0.0));
}

TEST_CASE("enumerate_parses: two analyses of the shared prefix") {
  TableScorer sc = two_parse_scorer();
  DerivationLimits lim{4, 6};
  auto ds = enumerate_parses({"y"}, sc, StrategyId::TopDown, lim);
  REQUIRE(ds.size() == 2);
  CHECK(std::exp(total_logmass(ds)) == doctest::Approx(1.0));

  auto both = enumerate_parses({"y", "x"}, sc, StrategyId::TopDown, lim);
  REQUIRE(both.size() == 2);
  CHECK(std::exp(total_logmass(both)) == doctest::Approx(0.059));
  for (const Derivation& d : both)
    CHECK(d.actions.back() == Action::shift("x"));  // ends right after the SHIFT
}

TEST_CASE("exact next-word surprisal marginalizes over all analyses") {
  TableScorer sc = two_parse_scorer();
  DerivationLimits lim{4, 6};
  double s = exact_next_word_surprisal({"y"}, "x", sc, StrategyId::TopDown, lim);
  CHECK(s == doctest::Approx(-std::log2(0.059)));
  CHECK(s == doctest::Approx(4.083141235300245));
}

TEST_CASE("prefix mass is non-increasing in prefix length") {
  TableScorer sc = two_parse_scorer();
  DerivationLimits lim{4, 6};
  double m0 = total_logmass(enumerate_parses({}, sc, StrategyId::TopDown, lim));
  double m1 = total_logmass(enumerate_parses({"y"}, sc, StrategyId::TopDown, lim));
  double m2 = total_logmass(enumerate_parses({"y", "x"}, sc, StrategyId::TopDown, lim));
  CHECK(m0 >= m1 - 1e-12);
  CHECK(m1 >= m2 - 1e-12);
  CHECK(m0 == doctest::Approx(0.0));
}

TEST_CASE("enumerate_completions finds both full parses") {
  TableScorer sc = two_parse_scorer();
  DerivationLimits lim{4, 6};
  auto ds = enumerate_completions({"y", "x"}, sc, StrategyId::TopDown, lim);
  REQUIRE(ds.size() == 2);
  CHECK(std::exp(total_logmass(ds)) == doctest::Approx(0.059));
  for (const Derivation& d : ds) {
    ParserState s = replay(d.actions, StrategyId::TopDown, lim);
    CHECK(is_terminal(s));
    CHECK(yield_words(terminal_tree(s)) == std::vector<std::string>{"y", "x"});
  }
}

TEST_CASE("exhaustive beam equals exact enumeration") {
  // Tight limits keep the derivation space small enough to enumerate, and an
  // oversized beam then carries every derivation, so the two surprisal
  // computations must agree to within accumulation error.
  Treebank tb = bank({"(S (NP a b) c)", "(S (NP a a) c)", "(S a c)"});
  TabularScorerConfig cfg;
  cfg.min_word_count = 1;
  DerivationLimits lim{2, 3};
  std::vector<std::vector<std::string>> sentences = {
      {"a", "b", "c"},
      {"a", "c"},
  };
  for (StrategyId strat : {StrategyId::TopDown, StrategyId::LeftCorner}) {
    TabularScorer sc = TabularScorer::fit(tb, strat, cfg, lim);
    BeamConfig bc;
    bc.word_beam_width = 100000;
    bc.action_beam_width = 100000;
    bc.limits = lim;
    for (const auto& sent : sentences) {
      SurprisalResult beam = surprisal_per_word(sent, sc, strat, bc);
      ExactSurprisals exact = exact_surprisal_per_word(sent, sc, strat, lim);
      REQUIRE(beam.surprisal_bits.size() == exact.surprisal_bits.size());
      for (size_t i = 0; i < sent.size(); ++i)
        CHECK(beam.surprisal_bits[i] ==
              doctest::Approx(exact.surprisal_bits[i]).epsilon(1e-9));
      CHECK(beam.eos_surprisal_bits ==
            doctest::Approx(exact.eos_surprisal_bits).epsilon(1e-9));

      // The beam at each position holds exactly the enumerated derivations.
      std::vector<std::string> prefix;
      for (size_t i = 0; i < sent.size(); ++i) {
        prefix.push_back(sent[i]);
        auto ds = enumerate_parses(prefix, sc, strat, lim);
        CHECK(beam.snapshots[i + 1].items.size() == ds.size());
        CHECK(beam.snapshots[i + 1].prefix_mass_log ==
              doctest::Approx(total_logmass(ds)).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("expansion budget is enforced") {
  TableScorer sc({"S", "NP", "VP"}, {"a", "b"});
  CHECK_THROWS_WITH_AS(
      enumerate_parses({"a", "b", "a", "b"}, sc, StrategyId::TopDown,
                       DerivationLimits{10, 20}, 50),
      "enumeration expansion cap exceeded", std::runtime_error);
}

TEST_CASE("render_derivations is one line per derivation") {
  TableScorer sc = two_parse_scorer();
  auto ds = enumerate_parses({"y"}, sc, StrategyId::TopDown, DerivationLimits{4, 6});
  std::string text = render_derivations(ds);
  size_t lines = 0;
  for (char c : text)
    if (c == '\n') ++lines;
  CHECK(lines == ds.size());
  CHECK(text.find("SHIFT(y)") != std::string::npos);
}

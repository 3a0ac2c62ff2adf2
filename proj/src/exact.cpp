#include "gpbeam/exact.hpp"

#include <cstdio>
#include <stdexcept>

#include "gpbeam/numeric.hpp"

namespace gpbeam {

namespace {

struct Enumerator {
  const std::vector<std::string>& words;
  const Scorer& scorer;
  StrategyId strategy;
  const DerivationLimits& limits;
  long budget;
  bool to_terminal;  // also require structural completion after the last word

  std::vector<Derivation> out;
  std::vector<Action> trail;

  void spend() {
    if (--budget < 0) throw std::runtime_error("enumeration expansion cap exceeded");
  }

  void expand(const ParserState& state, double logprob) {
    spend();
    bool all_words = state.words_generated == static_cast<int>(words.size());
    if (all_words) {
      if (!to_terminal) {
        // Prefix derivations end right after the last SHIFT (empty prefix:
        // the single empty derivation).
        out.push_back({trail, logprob});
        return;
      }
      if (is_terminal(state)) out.push_back({trail, logprob});
      // Left-corner terminal states can still be wrapped in unaries; keep
      // expanding structural actions.
    }

    LegalKinds kinds = legal_action_kinds(state, strategy, limits);
    if (kinds.none()) return;
    auto dist = scorer.action_logprob_dist(state, strategy, limits);
    for (const auto& [a, lp] : dist) {
      if (lp == kNegInf) continue;
      if (a.kind == ActionKind::Shift) {
        if (all_words) continue;
        const std::string& w = words[state.words_generated];
        double wlp = scorer.word_logprob(state, w);
        if (wlp == kNegInf) continue;
        Action shift = Action::shift(w);
        trail.push_back(shift);
        expand(apply(state, shift, strategy, limits), logprob + lp + wlp);
        trail.pop_back();
      } else {
        if (all_words && !to_terminal) continue;
        trail.push_back(a);
        expand(apply(state, a, strategy, limits), logprob + lp);
        trail.pop_back();
      }
    }
  }
};

}  // namespace

std::vector<Derivation> enumerate_parses(const std::vector<std::string>& prefix,
                                         const Scorer& scorer, StrategyId strategy,
                                         const DerivationLimits& limits,
                                         long max_expansions) {
  Enumerator e{prefix, scorer, strategy, limits, max_expansions, false};
  e.expand(ParserState{}, 0.0);
  return std::move(e.out);
}

std::vector<Derivation> enumerate_completions(const std::vector<std::string>& sentence,
                                              const Scorer& scorer, StrategyId strategy,
                                              const DerivationLimits& limits,
                                              long max_expansions) {
  Enumerator e{sentence, scorer, strategy, limits, max_expansions, true};
  e.expand(ParserState{}, 0.0);
  return std::move(e.out);
}

double total_logmass(const std::vector<Derivation>& ds) {
  std::vector<double> lps;
  lps.reserve(ds.size());
  for (const Derivation& d : ds) lps.push_back(d.logprob);
  return log_sum_exp(lps);
}

double exact_next_word_surprisal(const std::vector<std::string>& prefix,
                                 const std::string& next, const Scorer& scorer,
                                 StrategyId strategy, const DerivationLimits& limits,
                                 long max_expansions) {
  double denom = total_logmass(enumerate_parses(prefix, scorer, strategy, limits,
                                                max_expansions));
  if (denom == kNegInf)
    throw std::runtime_error("exact_next_word_surprisal: zero prefix mass");
  std::vector<std::string> extended = prefix;
  extended.push_back(next);
  double num = total_logmass(enumerate_parses(extended, scorer, strategy, limits,
                                              max_expansions));
  return bits(num - denom);
}

ExactSurprisals exact_surprisal_per_word(const std::vector<std::string>& sentence,
                                         const Scorer& scorer, StrategyId strategy,
                                         const DerivationLimits& limits,
                                         long max_expansions) {
  ExactSurprisals res;
  std::vector<std::string> prefix;
  double prev_mass = 0.0;  // empty derivation
  for (const std::string& w : sentence) {
    prefix.push_back(w);
    double mass = total_logmass(enumerate_parses(prefix, scorer, strategy, limits,
                                                 max_expansions));
    if (mass == kNegInf)
      throw std::runtime_error("exact surprisal: zero mass at '" + w + "'");
    res.surprisal_bits.push_back(bits(mass - prev_mass));
    prev_mass = mass;
  }
  double finished = total_logmass(enumerate_completions(sentence, scorer, strategy,
                                                        limits, max_expansions));
  res.eos_surprisal_bits = bits(finished - prev_mass);
  return res;
}

std::string render_derivations(const std::vector<Derivation>& ds) {
  std::string out;
  char buf[64];
  for (const Derivation& d : ds) {
    std::string line;
    for (const Action& a : d.actions) {
      if (!line.empty()) line += ' ';
      line += to_string(a);
    }
    std::snprintf(buf, sizeof buf, "%.17g", d.logprob);
    out += line.empty() ? std::string("<empty>") : line;
    out += '\t';
    out += buf;
    out += '\n';
  }
  return out;
}

}  // namespace gpbeam

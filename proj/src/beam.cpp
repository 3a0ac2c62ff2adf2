#include "gpbeam/beam.hpp"

#include <algorithm>

#include "gpbeam/numeric.hpp"

namespace gpbeam {

bool beam_item_before(const BeamItem& a, const BeamItem& b) {
  if (a.logprob != b.logprob) return a.logprob > b.logprob;
  return a.actions < b.actions;
}

namespace {

void sort_and_truncate(std::vector<BeamItem>& items, int width) {
  std::sort(items.begin(), items.end(), beam_item_before);
  if (static_cast<int>(items.size()) > width) items.resize(width);
}

double items_logmass(const std::vector<BeamItem>& items) {
  std::vector<double> lps;
  lps.reserve(items.size());
  for (const BeamItem& it : items) lps.push_back(it.logprob);
  return log_sum_exp(lps);
}

BeamItem successor(const BeamItem& item, const Action& a, double step_logprob,
                   StrategyId strategy, const DerivationLimits& limits) {
  BeamItem s;
  s.actions = item.actions;
  s.actions.push_back(a);
  s.state = apply(item.state, a, strategy, limits);
  s.logprob = item.logprob + step_logprob;
  return s;
}

}  // namespace

WordBeam init_beam(StrategyId) {
  WordBeam b;
  b.word_index = 0;
  b.items.push_back(BeamItem{});
  b.prefix_mass_log = 0.0;
  return b;
}

AdvanceResult advance_word(const WordBeam& beam, const std::string& next,
                           const Scorer& scorer, StrategyId strategy,
                           const BeamConfig& config) {
  if (beam.items.empty()) throw std::invalid_argument("advance_word: empty beam");
  std::vector<BeamItem> frontier = beam.items;
  std::vector<BeamItem> shifted;

  while (!frontier.empty()) {
    std::vector<BeamItem> next_frontier;
    for (const BeamItem& item : frontier) {
      LegalKinds kinds = legal_action_kinds(item.state, strategy, config.limits);
      if (kinds.none()) continue;  // dead hypothesis, cannot generate more words
      auto dist = scorer.action_logprob_dist(item.state, strategy, config.limits);
      for (const auto& [a, lp] : dist) {
        if (lp == kNegInf) continue;
        if (a.kind == ActionKind::Shift) {
          double wlp = scorer.word_logprob(item.state, next);
          if (wlp == kNegInf) continue;  // zero-mass word: candidate for beam death
          shifted.push_back(
              successor(item, Action::shift(next), lp + wlp, strategy, config.limits));
        } else {
          next_frontier.push_back(successor(item, a, lp, strategy, config.limits));
        }
      }
    }
    sort_and_truncate(next_frontier, config.action_beam_width);
    frontier = std::move(next_frontier);
  }

  if (shifted.empty()) throw BeamDeath(beam.word_index, next);

  std::sort(shifted.begin(), shifted.end(), beam_item_before);
  double all_mass = items_logmass(shifted);

  AdvanceResult r;
  r.beam.word_index = beam.word_index + 1;
  r.beam.items = shifted;
  if (static_cast<int>(r.beam.items.size()) > config.word_beam_width)
    r.beam.items.resize(config.word_beam_width);
  r.beam.prefix_mass_log = items_logmass(r.beam.items);

  double num = config.post_truncation_mass ? r.beam.prefix_mass_log : all_mass;
  r.word_logmass_unnormalized = num;
  r.word_logmass = num - items_logmass(beam.items);
  return r;
}

CompletionResult complete_structure(const WordBeam& beam, const Scorer& scorer,
                                    StrategyId strategy, const BeamConfig& config) {
  std::vector<BeamItem> frontier = beam.items;
  std::vector<BeamItem> finished;

  while (!frontier.empty()) {
    std::vector<BeamItem> next_frontier;
    for (const BeamItem& item : frontier) {
      if (is_terminal(item.state)) finished.push_back(item);
      LegalKinds kinds = legal_action_kinds(item.state, strategy, config.limits);
      if (!kinds.nt && !kinds.reduce) continue;
      auto dist = scorer.action_logprob_dist(item.state, strategy, config.limits);
      for (const auto& [a, lp] : dist) {
        if (lp == kNegInf || a.kind == ActionKind::Shift) continue;
        next_frontier.push_back(successor(item, a, lp, strategy, config.limits));
      }
    }
    sort_and_truncate(next_frontier, config.action_beam_width);
    frontier = std::move(next_frontier);
  }

  std::sort(finished.begin(), finished.end(), beam_item_before);
  CompletionResult r;
  r.logmass = items_logmass(finished) - items_logmass(beam.items);
  r.finished = std::move(finished);
  return r;
}

SurprisalResult surprisal_per_word(const std::vector<std::string>& sentence,
                                   const Scorer& scorer, StrategyId strategy,
                                   const BeamConfig& config) {
  if (sentence.empty()) throw std::invalid_argument("surprisal_per_word: empty sentence");
  SurprisalResult res;
  WordBeam beam = init_beam(strategy);
  res.snapshots.push_back(beam);
  for (const std::string& w : sentence) {
    AdvanceResult step = advance_word(beam, w, scorer, strategy, config);
    res.surprisal_bits.push_back(bits(step.word_logmass));
    beam = std::move(step.beam);
    res.snapshots.push_back(beam);
  }
  CompletionResult done = complete_structure(beam, scorer, strategy, config);
  res.eos_surprisal_bits = bits(done.logmass);
  return res;
}

Tree best_parse(const std::vector<std::string>& sentence, const Scorer& scorer,
                StrategyId strategy, const BeamConfig& config) {
  WordBeam beam = init_beam(strategy);
  for (const std::string& w : sentence)
    beam = advance_word(beam, w, scorer, strategy, config).beam;
  CompletionResult done = complete_structure(beam, scorer, strategy, config);
  if (done.finished.empty())
    throw BeamDeath(beam.word_index, "<structural completion>");
  return terminal_tree(done.finished.front().state);
}

}  // namespace gpbeam

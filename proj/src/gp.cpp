#include "gpbeam/gp.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

#include "gpbeam/numeric.hpp"
#include "json.hpp"

namespace gpbeam {

std::string to_string(InterpretationBin b) {
  switch (b) {
    case InterpretationBin::InitialPreferred: return "initial";
    case InterpretationBin::GloballyCorrect: return "correct";
    case InterpretationBin::Other: return "other";
  }
  throw std::logic_error("bad bin");
}

std::string to_string(ConstructionId c) {
  switch (c) {
    case ConstructionId::MV_RR: return "MV_RR";
    case ConstructionId::NP_S: return "NP_S";
    case ConstructionId::NP_Z: return "NP_Z";
  }
  throw std::logic_error("bad construction");
}

ConstructionId parse_construction(const std::string& text) {
  if (text == "MV_RR") return ConstructionId::MV_RR;
  if (text == "NP_S") return ConstructionId::NP_S;
  if (text == "NP_Z") return ConstructionId::NP_Z;
  throw std::runtime_error("unknown construction: " + text);
}

namespace {

// Appends labels from the k-th leaf upward within t. Returns true when found;
// otherwise k is decremented by the number of leaves in t.
bool path_in_tree(const Tree& t, int& k, std::vector<std::string>& out) {
  if (t.is_leaf()) {
    if (k == 0) return true;
    --k;
    return false;
  }
  for (const Tree& c : t.children) {
    if (path_in_tree(c, k, out)) {
      out.push_back(t.label);
      return true;
    }
  }
  return false;
}

int entry_leaf_count(const StackEntry& e) {
  if (std::holds_alternative<Tree>(e)) return leaf_count(std::get<Tree>(e));
  int n = 0;
  for (const Tree& c : std::get<OpenNode>(e).children) n += leaf_count(c);
  return n;
}

}  // namespace

std::vector<std::string> ancestor_labels(const ParserState& state, int token_index) {
  if (token_index < 0 || token_index >= state.words_generated)
    throw std::invalid_argument("ancestor_labels: token not yet generated");
  int k = token_index;
  size_t entry_idx = 0;
  for (; entry_idx < state.stack.size(); ++entry_idx) {
    int leaves = entry_leaf_count(state.stack[entry_idx]);
    if (k < leaves) break;
    k -= leaves;
  }

  std::vector<std::string> out;
  const StackEntry& e = state.stack[entry_idx];
  if (std::holds_alternative<Tree>(e)) {
    path_in_tree(std::get<Tree>(e), k, out);
  } else {
    const OpenNode& open = std::get<OpenNode>(e);
    for (const Tree& c : open.children)
      if (path_in_tree(c, k, out)) break;
    out.push_back(open.label);
  }
  // Open nonterminals deeper on the stack dominate everything above them.
  for (int i = static_cast<int>(entry_idx) - 1; i >= 0; --i)
    if (std::holds_alternative<OpenNode>(state.stack[i]))
      out.push_back(std::get<OpenNode>(state.stack[i]).label);
  return out;
}

bool classify(const ParserState& state, const InterpretationPredicate& pred) {
  std::vector<std::string> anc = ancestor_labels(state, pred.token_index);
  std::set<std::string> labels(anc.begin(), anc.end());
  for (const std::string& r : pred.required_ancestors)
    if (!labels.count(r)) return false;
  for (const std::string& f : pred.forbidden_ancestors)
    if (labels.count(f)) return false;
  return true;
}

bool classify(const BeamItem& item, const InterpretationPredicate& pred) {
  return classify(item.state, pred);
}

InterpretationBin bin_of(const ParserState& state,
                         const InterpretationPredicate& initial,
                         const InterpretationPredicate& correct) {
  if (classify(state, initial)) return InterpretationBin::InitialPreferred;
  if (classify(state, correct)) return InterpretationBin::GloballyCorrect;
  return InterpretationBin::Other;
}

namespace {

BinProfile profile_of(int position, const std::vector<const ParserState*>& states,
                      const std::vector<double>& logprobs,
                      const InterpretationPredicate& initial,
                      const InterpretationPredicate& correct) {
  std::vector<double> by_bin[3];
  for (size_t i = 0; i < states.size(); ++i) {
    InterpretationBin b = bin_of(*states[i], initial, correct);
    by_bin[static_cast<int>(b)].push_back(logprobs[i]);
  }
  double total = log_sum_exp(logprobs);
  auto mass = [&](int b) {
    double m = log_sum_exp(by_bin[b]);
    return m == kNegInf ? 0.0 : std::exp(m - total);
  };
  return BinProfile{position, mass(0), mass(1), mass(2)};
}

}  // namespace

std::vector<BinProfile> interpretation_profile(const std::vector<WordBeam>& snapshots,
                                               const InterpretationPredicate& initial,
                                               const InterpretationPredicate& correct) {
  int needed = std::max(initial.token_index, correct.token_index) + 1;
  std::vector<BinProfile> out;
  for (const WordBeam& beam : snapshots) {
    if (beam.word_index < needed) continue;
    if (beam.items.empty())
      throw std::runtime_error("interpretation_profile: empty beam at position " +
                               std::to_string(beam.word_index));
    std::vector<const ParserState*> states;
    std::vector<double> lps;
    for (const BeamItem& it : beam.items) {
      states.push_back(&it.state);
      lps.push_back(it.logprob);
    }
    out.push_back(profile_of(beam.word_index, states, lps, initial, correct));
  }
  return out;
}

std::vector<BinProfile> exact_interpretation_profile(
    const std::vector<std::string>& prefix, const InterpretationPredicate& initial,
    const InterpretationPredicate& correct, const Scorer& scorer, StrategyId strategy,
    const DerivationLimits& limits, long max_expansions) {
  std::vector<Derivation> parses =
      enumerate_parses(prefix, scorer, strategy, limits, max_expansions);
  if (parses.empty())
    throw std::runtime_error("exact_interpretation_profile: empty enumeration");
  std::vector<ParserState> states;
  states.reserve(parses.size());
  std::vector<double> lps;
  for (const Derivation& d : parses) {
    states.push_back(replay(d.actions, strategy, limits));
    lps.push_back(d.logprob);
  }
  std::vector<const ParserState*> ptrs;
  for (const ParserState& s : states) ptrs.push_back(&s);
  return {profile_of(static_cast<int>(prefix.size()), ptrs, lps, initial, correct)};
}

SurprisalResult forced_gp_surprisal(const ConstructionSpec& spec, const Scorer& scorer,
                                    StrategyId strategy, const BeamConfig& config,
                                    const ForcedGpOptions& opts) {
  const std::vector<std::string>& sentence = spec.ambiguous_sentence;
  SurprisalResult res;
  WordBeam beam = init_beam(strategy);
  res.snapshots.push_back(beam);

  auto filtered = [&](const WordBeam& b) {
    WordBeam f = b;
    f.items.clear();
    for (const BeamItem& it : b.items)
      if (classify(it, spec.initial_predicate)) f.items.push_back(it);
    if (f.items.empty())
      throw FilteredBeamEmpty(b.word_index,
                              "forced garden path: no initial-interpretation parse "
                              "on the beam at position " +
                                  std::to_string(b.word_index));
    std::vector<double> lps;
    for (const BeamItem& it : f.items) lps.push_back(it.logprob);
    f.prefix_mass_log = log_sum_exp(lps);
    return f;
  };

  // Filtering starts once the predicate can be evaluated: the verb must be
  // generated and so must the token the predicate is anchored on.
  int filter_from = std::max(spec.ambiguous_verb_index,
                             spec.initial_predicate.token_index) + 1;
  for (size_t i = 0; i < sentence.size(); ++i) {
    bool verb_generated = beam.word_index >= filter_from;
    bool filter = verb_generated &&
                  (!opts.filter_at_disambiguation_only ||
                   static_cast<int>(i) == spec.disambiguating_index_ambiguous);
    WordBeam base = filter ? filtered(beam) : beam;
    AdvanceResult step = advance_word(base, sentence[i], scorer, strategy, config);
    res.surprisal_bits.push_back(bits(step.word_logmass));
    beam = std::move(step.beam);
    res.snapshots.push_back(beam);
  }
  WordBeam final_base = opts.filter_at_disambiguation_only ? beam : filtered(beam);
  res.eos_surprisal_bits =
      bits(complete_structure(final_base, scorer, strategy, config).logmass);
  return res;
}

FullParallelResult full_parallel_surprisal(const ConstructionSpec& spec,
                                           const Scorer& scorer, StrategyId strategy,
                                           const BeamConfig& config) {
  if (spec.fullparallel_substitute.empty())
    throw std::invalid_argument("full_parallel_surprisal: no substitute verb");
  const std::vector<std::string>& sentence = spec.ambiguous_sentence;
  int verb = spec.ambiguous_verb_index;
  const int n = static_cast<int>(sentence.size());

  std::vector<std::string> modified = sentence;
  modified[verb] = spec.fullparallel_substitute;

  SurprisalResult plain = surprisal_per_word(sentence, scorer, strategy, config);
  SurprisalResult counter = surprisal_per_word(modified, scorer, strategy, config);

  // Rescore the counterfactual parses with the original verb. Positions up to
  // the verb are untouched (the prefixes coincide).
  auto rescored = [&](const WordBeam& b) {
    std::vector<BeamItem> out;
    for (const BeamItem& it : b.items) {
      BeamItem r = it;
      if (b.word_index >= verb + 1) {
        int shifts = 0;
        for (Action& a : r.actions) {
          if (a.kind != ActionKind::Shift) continue;
          if (shifts == verb) {
            a.arg = sentence[verb];
            break;
          }
          ++shifts;
        }
        r.state = replay(r.actions, strategy, config.limits);
        r.logprob = sequence_logprob(scorer, r.actions, strategy, config.limits);
      }
      out.push_back(std::move(r));
    }
    return out;
  };

  // Validation mirrors the manual check: the counterfactual set must supply a
  // globally correct parse at the end of the sentence.
  {
    std::vector<BeamItem> final_counter = rescored(counter.snapshots[n]);
    bool any = std::any_of(final_counter.begin(), final_counter.end(),
                           [&](const BeamItem& it) {
                             return classify(it, spec.correct_predicate);
                           });
    if (!any)
      throw std::runtime_error(
          "full parallel: no globally correct parse among counterfactual parses "
          "at sentence end (item " + spec.item_id + ")");
  }

  FullParallelResult res;
  res.correct_present.assign(n + 1, false);
  int binnable_from = spec.classifiable_from_position();

  // Union beam per position: the plain beam, augmented with the counterfactual
  // parses, deduplicated by action sequence. Per-word masses are then computed
  // exactly as in the plain condition — by advancing the (augmented) beam one
  // word and taking the pre-truncation shifted mass — so the two conditions
  // differ only through the augmentation itself.
  auto union_beam = [&](int p) {
    std::map<std::vector<Action>, BeamItem> uni;
    for (const BeamItem& it : plain.snapshots[p].items) uni.emplace(it.actions, it);
    // The counterfactual run exists to guarantee that a globally correct parse
    // is present, so the union takes the best such parse it can supply
    // (classification needs the anchor token to be generated). If that parse
    // already sits on the plain beam the duplicate is counted once.
    if (p >= binnable_from) {
      std::vector<BeamItem> extra = rescored(counter.snapshots[p]);
      std::stable_sort(extra.begin(), extra.end(),
                       [](const BeamItem& a, const BeamItem& b) {
                         return a.logprob > b.logprob;
                       });
      for (BeamItem& it : extra) {
        if (!classify(it, spec.correct_predicate)) continue;
        auto key = it.actions;
        uni.emplace(std::move(key), std::move(it));
        break;
      }
    }
    WordBeam u = plain.snapshots[p];
    u.items.clear();
    std::vector<double> lps;
    for (auto& [k, it] : uni) {
      lps.push_back(it.logprob);
      if (p >= binnable_from && !res.correct_present[p] &&
          classify(it, spec.correct_predicate))
        res.correct_present[p] = true;
      u.items.push_back(std::move(it));
    }
    std::sort(u.items.begin(), u.items.end(),
              [](const BeamItem& a, const BeamItem& b) {
                return a.logprob != b.logprob ? a.logprob > b.logprob
                                              : a.actions < b.actions;
              });
    u.prefix_mass_log = log_sum_exp(lps);
    return u;
  };

  for (int i = 0; i < n; ++i) {
    WordBeam u = union_beam(i);
    AdvanceResult step = advance_word(u, sentence[i], scorer, strategy, config);
    res.surprisal_bits.push_back(bits(step.word_logmass));
  }
  union_beam(n);  // records correct_present at the final position
  return res;
}

GardenPathEffect gp_effect_surprisal(const ConstructionSpec& spec,
                                     const std::vector<double>& ambiguous_bits,
                                     const std::vector<double>& unambiguous_bits) {
  int a = spec.disambiguating_index_ambiguous;
  int u = spec.disambiguating_index_unambiguous;
  if (a + 2 >= static_cast<int>(ambiguous_bits.size()) ||
      u + 2 >= static_cast<int>(unambiguous_bits.size()) || a < 0 || u < 0)
    throw std::invalid_argument("gp_effect: disambiguating region out of range");
  GardenPathEffect e;
  e.disambiguating = ambiguous_bits[a] - unambiguous_bits[u];
  e.spillover1 = ambiguous_bits[a + 1] - unambiguous_bits[u + 1];
  e.spillover2 = ambiguous_bits[a + 2] - unambiguous_bits[u + 2];
  e.summed = e.disambiguating + e.spillover1 + e.spillover2;
  return e;
}

// --- construction spec io ---

namespace {

InterpretationPredicate predicate_from_json(const nlohmann::json& j) {
  InterpretationPredicate p;
  p.token_index = j.at("token_index").get<int>();
  p.required_ancestors = j.value("required_ancestors", std::set<std::string>{});
  p.forbidden_ancestors = j.value("forbidden_ancestors", std::set<std::string>{});
  for (const std::string& r : p.required_ancestors)
    if (p.forbidden_ancestors.count(r))
      throw std::runtime_error("predicate requires and forbids label " + r);
  return p;
}

nlohmann::json predicate_to_json(const InterpretationPredicate& p) {
  return {{"token_index", p.token_index},
          {"required_ancestors", p.required_ancestors},
          {"forbidden_ancestors", p.forbidden_ancestors}};
}

}  // namespace

std::vector<ConstructionSpec> load_construction_specs(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open construction specs: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  std::vector<ConstructionSpec> specs;
  for (const auto& item : j.at("items")) {
    ConstructionSpec s;
    s.item_id = item.at("item_id").get<std::string>();
    s.construction = parse_construction(item.at("construction").get<std::string>());
    s.ambiguous_sentence = item.at("ambiguous_sentence").get<std::vector<std::string>>();
    s.unambiguous_sentence =
        item.at("unambiguous_sentence").get<std::vector<std::string>>();
    s.disambiguating_index_ambiguous = item.at("disambiguating_index_ambiguous").get<int>();
    s.disambiguating_index_unambiguous =
        item.at("disambiguating_index_unambiguous").get<int>();
    s.ambiguous_verb_index = item.at("ambiguous_verb_index").get<int>();
    s.initial_predicate = predicate_from_json(item.at("initial_predicate"));
    s.correct_predicate = predicate_from_json(item.at("correct_predicate"));
    s.fullparallel_substitute = item.value("fullparallel_substitute", std::string{});
    s.classifiable_from = item.value("classifiable_from", -1);
    if (s.disambiguating_index_ambiguous + 2 >=
            static_cast<int>(s.ambiguous_sentence.size()) ||
        s.disambiguating_index_unambiguous + 2 >=
            static_cast<int>(s.unambiguous_sentence.size()))
      throw std::runtime_error("item " + s.item_id +
                               ": disambiguating region does not fit the sentence");
    specs.push_back(std::move(s));
  }
  return specs;
}

std::string render_construction_specs(const std::vector<ConstructionSpec>& specs) {
  nlohmann::json items = nlohmann::json::array();
  for (const ConstructionSpec& s : specs) {
    items.push_back({{"item_id", s.item_id},
                     {"construction", to_string(s.construction)},
                     {"ambiguous_sentence", s.ambiguous_sentence},
                     {"unambiguous_sentence", s.unambiguous_sentence},
                     {"disambiguating_index_ambiguous", s.disambiguating_index_ambiguous},
                     {"disambiguating_index_unambiguous", s.disambiguating_index_unambiguous},
                     {"ambiguous_verb_index", s.ambiguous_verb_index},
                     {"initial_predicate", predicate_to_json(s.initial_predicate)},
                     {"correct_predicate", predicate_to_json(s.correct_predicate)},
                     {"fullparallel_substitute", s.fullparallel_substitute},
                     {"classifiable_from", s.classifiable_from}});
  }
  return nlohmann::json{{"items", items}}.dump(2);
}

}  // namespace gpbeam

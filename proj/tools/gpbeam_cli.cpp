// Batch front-end: wires the treebank, scorer, beam, garden-path, and
// reading-time modules into reproducible experiment runs.
//
// Exit codes: 0 success, 1 configuration/input error, 2 run finished with
// per-item failures recorded in the output.

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "gpbeam/beam.hpp"
#include "gpbeam/exact.hpp"
#include "gpbeam/external_scorer.hpp"
#include "gpbeam/gp.hpp"
#include "gpbeam/rtlink.hpp"
#include "gpbeam/scorer.hpp"
#include "gpbeam/transition.hpp"
#include "gpbeam/tree.hpp"

using namespace gpbeam;

namespace {

struct RunConfig {
  std::string strategy = "topdown";
  std::vector<int> k_w = {1, 2, 3, 4, 5, 10, 25, 50, 100, 250, 500, 1000};
  int k_a = 1000;
  int reference_k_w = 1000;  // width for the counterfactual conditions
  int decode_k_w = 200;      // parse-eval widths
  int decode_k_a = 2000;
  DerivationLimits limits;
  bool post_truncation_mass = false;
  bool forced_filter_at_disambiguation_only = false;

  std::string treebank;
  std::string scorer_json;
  std::string external_scorer;
  std::vector<std::string> nt_labels;  // required with an external scorer
  std::string sentences;
  std::string constructions;
  std::string fillers;
  std::string output_dir = "out";

  double band_ms = 300.0;  // empirical reference band for reports
  SynthConfig synth;
};

void apply_json_config(RunConfig& c, const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open config: " + path);
  nlohmann::json j = nlohmann::json::parse(in);
  c.strategy = j.value("strategy", c.strategy);
  c.k_w = j.value("k_w", c.k_w);
  c.k_a = j.value("k_a", c.k_a);
  c.reference_k_w = j.value("reference_k_w", c.reference_k_w);
  c.decode_k_w = j.value("decode_k_w", c.decode_k_w);
  c.decode_k_a = j.value("decode_k_a", c.decode_k_a);
  if (j.contains("limits")) {
    c.limits.max_open_nonterminals =
        j["limits"].value("max_open_nonterminals", c.limits.max_open_nonterminals);
    c.limits.max_structural_actions_between_words =
        j["limits"].value("max_structural_actions_between_words",
                          c.limits.max_structural_actions_between_words);
  }
  c.post_truncation_mass = j.value("post_truncation_mass", c.post_truncation_mass);
  c.forced_filter_at_disambiguation_only =
      j.value("forced_filter_at_disambiguation_only",
              c.forced_filter_at_disambiguation_only);
  c.treebank = j.value("treebank", c.treebank);
  c.scorer_json = j.value("scorer_json", c.scorer_json);
  c.external_scorer = j.value("external_scorer", c.external_scorer);
  c.nt_labels = j.value("nt_labels", c.nt_labels);
  c.sentences = j.value("sentences", c.sentences);
  c.constructions = j.value("constructions", c.constructions);
  c.fillers = j.value("fillers", c.fillers);
  c.output_dir = j.value("output_dir", c.output_dir);
  c.band_ms = j.value("band_ms", c.band_ms);
  if (j.contains("synth")) {
    const auto& s = j["synth"];
    c.synth.intercept = s.value("intercept", c.synth.intercept);
    c.synth.beta_surp0 = s.value("beta_surp0", c.synth.beta_surp0);
    c.synth.beta_surp1 = s.value("beta_surp1", c.synth.beta_surp1);
    c.synth.beta_surp2 = s.value("beta_surp2", c.synth.beta_surp2);
    c.synth.noise_sd = s.value("noise_sd", c.synth.noise_sd);
    c.synth.n_rows = s.value("n_rows", c.synth.n_rows);
    c.synth.seed = s.value("seed", c.synth.seed);
  }
}

BeamConfig beam_config(const RunConfig& c, int kw, int ka = -1) {
  BeamConfig b;
  b.word_beam_width = kw;
  b.action_beam_width = ka > 0 ? ka : c.k_a;
  b.limits = c.limits;
  b.post_truncation_mass = c.post_truncation_mass;
  return b;
}

// Minimal CSV quoting: needed because sentence tokens can be punctuation,
// including the comma itself.
std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += '"';
    out += ch;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char ch = line[i];
    if (quoted) {
      if (ch == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (ch == '"') {
        quoted = false;
      } else {
        cur += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (ch != '\r') {
      cur += ch;
    }
  }
  out.push_back(cur);
  return out;
}

std::string fmt(double x) {
  if (!std::isfinite(x)) return "nan";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::ofstream open_output(const RunConfig& c, const std::string& name) {
  std::filesystem::create_directories(c.output_dir);
  std::string path = (std::filesystem::path(c.output_dir) / name).string();
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  return out;
}

std::vector<std::string> split_tokens(const std::string& line) {
  std::istringstream in(line);
  std::vector<std::string> toks;
  std::string t;
  while (in >> t) toks.push_back(t);
  return toks;
}

std::vector<std::vector<std::string>> load_sentences(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open sentences: " + path);
  std::vector<std::vector<std::string>> out;
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> toks = split_tokens(line);
    if (!toks.empty()) out.push_back(std::move(toks));
  }
  return out;
}

// Owns whichever scorer the config selects: an external process, a saved
// tabular model, or a model fit from the treebank on the spot.
struct ScorerHandle {
  std::unique_ptr<Scorer> owned;
  const Scorer* scorer = nullptr;
};

ScorerHandle make_scorer(const RunConfig& c, StrategyId strategy) {
  ScorerHandle h;
  if (!c.external_scorer.empty()) {
    std::set<std::string> labels(c.nt_labels.begin(), c.nt_labels.end());
    if (labels.empty() && !c.treebank.empty()) {
      auto collect = [&labels](auto&& self, const Tree& t) -> void {
        if (t.is_leaf()) return;
        labels.insert(t.label);
        for (const Tree& ch : t.children) self(self, ch);
      };
      for (const Tree& t : load_treebank(c.treebank).trees) collect(collect, t);
    }
    if (labels.empty())
      throw std::runtime_error(
          "external scorer needs nt_labels or a treebank to take them from");
    h.owned = std::make_unique<ExternalScorer>(c.external_scorer, labels, strategy);
  } else if (!c.scorer_json.empty()) {
    h.owned = std::make_unique<TabularScorer>(TabularScorer::load(c.scorer_json));
  } else if (!c.treebank.empty()) {
    h.owned = std::make_unique<TabularScorer>(TabularScorer::fit(
        load_treebank(c.treebank), strategy, TabularScorerConfig{}, c.limits));
  } else {
    throw std::runtime_error("no scorer source: set scorer_json, treebank, "
                             "or external_scorer");
  }
  h.scorer = h.owned.get();
  return h;
}

std::map<std::string, double> corpus_logfreq(const std::string& treebank_path) {
  std::map<std::string, double> lf;
  if (treebank_path.empty()) return lf;
  std::map<std::string, int> counts;
  for (const Tree& t : load_treebank(treebank_path).trees)
    for (const std::string& w : yield_words(t)) ++counts[w];
  for (const auto& [w, n] : counts) lf[w] = std::log(static_cast<double>(n));
  return lf;
}

// --- commands -------------------------------------------------------------

int cmd_oracle_extract(const RunConfig& c) {
  Treebank tb = load_treebank(c.treebank);
  if (tb.trees.empty()) throw std::runtime_error("empty treebank: " + c.treebank);
  StrategyId strategy = parse_strategy(c.strategy);
  std::ofstream out = open_output(c, "derivations.txt");
  for (const Tree& t : tb.trees) {
    std::vector<Action> actions = oracle(t, strategy);
    ParserState end = replay(actions, strategy, c.limits);
    if (!is_terminal(end) || !(terminal_tree(end) == t))
      throw std::runtime_error("oracle round trip failed for a tree");
    out << render_actions(actions) << "\n";
  }
  return 0;
}

int cmd_fit_scorer(const RunConfig& c) {
  Treebank tb = load_treebank(c.treebank);
  StrategyId strategy = parse_strategy(c.strategy);
  TabularScorer sc = TabularScorer::fit(tb, strategy, TabularScorerConfig{}, c.limits);
  std::filesystem::create_directories(c.output_dir);
  sc.save((std::filesystem::path(c.output_dir) / "scorer.json").string());
  return 0;
}

int cmd_parse_eval(const RunConfig& c) {
  Treebank tb = load_treebank(c.treebank);
  StrategyId strategy = parse_strategy(c.strategy);
  ScorerHandle sh = make_scorer(c, strategy);
  BeamConfig cfg = beam_config(c, c.decode_k_w, c.decode_k_a);
  std::ofstream out = open_output(c, "parse_eval.csv");
  out << "sentence_id,precision,recall,f1\n";
  int failures = 0;
  for (size_t i = 0; i < tb.trees.size(); ++i) {
    std::string id = "s" + std::to_string(i);
    try {
      Tree parsed = best_parse(yield_words(tb.trees[i]), *sh.scorer, strategy, cfg);
      F1Score f = labeled_f1(tb.trees[i], parsed);
      out << id << ',' << fmt(f.precision) << ',' << fmt(f.recall) << ','
          << fmt(f.f1) << '\n';
    } catch (const std::exception& e) {
      std::cerr << "parse-eval: " << id << " failed: " << e.what() << "\n";
      out << id << ",nan,nan,nan\n";
      ++failures;
    }
  }
  return failures ? 2 : 0;
}

int cmd_surprisal(const RunConfig& c) {
  StrategyId strategy = parse_strategy(c.strategy);
  ScorerHandle sh = make_scorer(c, strategy);
  std::vector<std::vector<std::string>> sentences = load_sentences(c.sentences);
  std::ofstream out = open_output(c, "surprisal.csv");
  out << "sentence_id,position,token,k_w,k_a,strategy,surprisal_bits,"
         "beam_mass_log,n_items\n";
  int failures = 0;
  for (size_t si = 0; si < sentences.size(); ++si) {
    const auto& sent = sentences[si];
    std::string id = "s" + std::to_string(si);
    for (int kw : c.k_w) {
      size_t done = 0;
      auto emit = [&](size_t pos, double bits_val, double mass, size_t items) {
        out << id << ',' << pos << ',' << csv_field(sent[pos]) << ',' << kw << ',' << c.k_a
            << ',' << c.strategy << ',' << fmt(bits_val) << ',' << fmt(mass) << ','
            << items << '\n';
      };
      try {
        SurprisalResult r = surprisal_per_word(sent, *sh.scorer, strategy,
                                               beam_config(c, kw));
        for (; done < sent.size(); ++done)
          emit(done, r.surprisal_bits[done], r.snapshots[done + 1].prefix_mass_log,
               r.snapshots[done + 1].items.size());
      } catch (const BeamDeath& e) {
        // The beam died mid-sentence: the remaining words get flagged rows.
        std::cerr << "surprisal: " << id << " k_w=" << kw << ": " << e.what() << "\n";
        double nan = std::numeric_limits<double>::quiet_NaN();
        for (size_t pos = done; pos < sent.size(); ++pos) emit(pos, nan, nan, 0);
      } catch (const std::exception& e) {
        std::cerr << "surprisal: " << id << " k_w=" << kw << " failed: " << e.what()
                  << "\n";
        double nan = std::numeric_limits<double>::quiet_NaN();
        for (size_t pos = done; pos < sent.size(); ++pos) emit(pos, nan, nan, 0);
        ++failures;
      }
    }
  }
  return failures ? 2 : 0;
}

int cmd_gp_run(const RunConfig& c) {
  StrategyId strategy = parse_strategy(c.strategy);
  ScorerHandle sh = make_scorer(c, strategy);
  std::vector<ConstructionSpec> specs = load_construction_specs(c.constructions);
  std::stable_sort(specs.begin(), specs.end(),
                   [](const ConstructionSpec& a, const ConstructionSpec& b) {
                     return a.item_id < b.item_id;
                   });

  std::ofstream effects = open_output(c, "gp_effects.csv");
  effects << "item_id,construction,condition,k_w,region,surprisal_ambig,"
             "surprisal_unambig,effect_bits\n";
  std::ofstream words = open_output(c, "gp_words.csv");
  words << "item_id,construction,condition,k_w,version,position,token,"
           "surprisal_bits\n";
  int failures = 0;

  auto emit_words = [&](const ConstructionSpec& spec, const std::string& condition,
                        int kw, const std::string& version,
                        const std::vector<std::string>& sent,
                        const std::vector<double>& bits_per_word) {
    for (size_t p = 0; p < sent.size(); ++p)
      words << spec.item_id << ',' << to_string(spec.construction) << ',' << condition
            << ',' << kw << ',' << version << ',' << p << ',' << csv_field(sent[p]) << ','
            << fmt(bits_per_word[p]) << '\n';
  };
  auto emit_effects = [&](const ConstructionSpec& spec, const std::string& condition,
                          int kw, const std::vector<double>& amb,
                          const std::vector<double>& unamb) {
    GardenPathEffect e = gp_effect_surprisal(spec, amb, unamb);
    int a = spec.disambiguating_index_ambiguous;
    int u = spec.disambiguating_index_unambiguous;
    struct Row { const char* region; double am, un, eff; };
    double amb_sum = amb[a] + amb[a + 1] + amb[a + 2];
    double un_sum = unamb[u] + unamb[u + 1] + unamb[u + 2];
    for (const Row& r : {Row{"disambiguating", amb[a], unamb[u], e.disambiguating},
                         Row{"spillover1", amb[a + 1], unamb[u + 1], e.spillover1},
                         Row{"spillover2", amb[a + 2], unamb[u + 2], e.spillover2},
                         Row{"summed", amb_sum, un_sum, e.summed}})
      effects << spec.item_id << ',' << to_string(spec.construction) << ','
              << condition << ',' << kw << ',' << r.region << ',' << fmt(r.am) << ','
              << fmt(r.un) << ',' << fmt(r.eff) << '\n';
  };
  auto emit_failure = [&](const ConstructionSpec& spec, const std::string& condition,
                          int kw, const std::string& why) {
    std::cerr << "gp-run: " << spec.item_id << " " << condition << " k_w=" << kw
              << " failed: " << why << "\n";
    for (const char* region : {"disambiguating", "spillover1", "spillover2", "summed"})
      effects << spec.item_id << ',' << to_string(spec.construction) << ','
              << condition << ',' << kw << ',' << region << ",nan,nan,nan\n";
    ++failures;
  };

  for (const ConstructionSpec& spec : specs) {
    std::vector<double> reference_unamb;  // plain at the reference width
    for (int kw : c.k_w) {
      try {
        BeamConfig cfg = beam_config(c, kw);
        SurprisalResult amb =
            surprisal_per_word(spec.ambiguous_sentence, *sh.scorer, strategy, cfg);
        SurprisalResult un =
            surprisal_per_word(spec.unambiguous_sentence, *sh.scorer, strategy, cfg);
        emit_words(spec, "plain", kw, "ambiguous", spec.ambiguous_sentence,
                   amb.surprisal_bits);
        emit_words(spec, "plain", kw, "unambiguous", spec.unambiguous_sentence,
                   un.surprisal_bits);
        emit_effects(spec, "plain", kw, amb.surprisal_bits, un.surprisal_bits);
        if (kw == c.reference_k_w) reference_unamb = un.surprisal_bits;
      } catch (const std::exception& e) {
        emit_failure(spec, "plain", kw, e.what());
      }
    }
    if (reference_unamb.empty()) {
      try {
        reference_unamb = surprisal_per_word(spec.unambiguous_sentence, *sh.scorer,
                                             strategy,
                                             beam_config(c, c.reference_k_w))
                              .surprisal_bits;
      } catch (const std::exception& e) {
        emit_failure(spec, "forced", c.reference_k_w, e.what());
        emit_failure(spec, "fullparallel", c.reference_k_w, e.what());
        continue;
      }
    }

    try {
      ForcedGpOptions opts;
      opts.filter_at_disambiguation_only = c.forced_filter_at_disambiguation_only;
      SurprisalResult forced = forced_gp_surprisal(
          spec, *sh.scorer, strategy, beam_config(c, c.reference_k_w), opts);
      emit_words(spec, "forced", c.reference_k_w, "ambiguous", spec.ambiguous_sentence,
                 forced.surprisal_bits);
      emit_words(spec, "forced", c.reference_k_w, "unambiguous",
                 spec.unambiguous_sentence, reference_unamb);
      emit_effects(spec, "forced", c.reference_k_w, forced.surprisal_bits,
                   reference_unamb);
    } catch (const std::exception& e) {
      emit_failure(spec, "forced", c.reference_k_w, e.what());
    }

    if (spec.fullparallel_substitute.empty()) {
      std::cerr << "gp-run: " << spec.item_id
                << ": no substitute verb, skipping the full-parallel condition\n";
    } else {
      try {
        FullParallelResult fp = full_parallel_surprisal(
            spec, *sh.scorer, strategy, beam_config(c, c.reference_k_w));
        emit_words(spec, "fullparallel", c.reference_k_w, "ambiguous",
                   spec.ambiguous_sentence, fp.surprisal_bits);
        emit_words(spec, "fullparallel", c.reference_k_w, "unambiguous",
                   spec.unambiguous_sentence, reference_unamb);
        emit_effects(spec, "fullparallel", c.reference_k_w, fp.surprisal_bits,
                     reference_unamb);
      } catch (const std::exception& e) {
        emit_failure(spec, "fullparallel", c.reference_k_w, e.what());
      }
    }
  }
  return failures ? 2 : 0;
}

int cmd_interp_profile(const RunConfig& c) {
  StrategyId strategy = parse_strategy(c.strategy);
  ScorerHandle sh = make_scorer(c, strategy);
  std::vector<ConstructionSpec> specs = load_construction_specs(c.constructions);
  std::stable_sort(specs.begin(), specs.end(),
                   [](const ConstructionSpec& a, const ConstructionSpec& b) {
                     return a.item_id < b.item_id;
                   });
  std::ofstream out = open_output(c, "interp_profile.csv");
  out << "item_id,position,initial,correct,other\n";
  int failures = 0;
  for (const ConstructionSpec& spec : specs) {
    try {
      SurprisalResult r =
          surprisal_per_word(spec.ambiguous_sentence, *sh.scorer, strategy,
                             beam_config(c, c.reference_k_w));
      for (const BinProfile& p : interpretation_profile(
               r.snapshots, spec.initial_predicate, spec.correct_predicate))
        out << spec.item_id << ',' << p.position << ',' << fmt(p.initial) << ','
            << fmt(p.correct) << ',' << fmt(p.other) << '\n';
    } catch (const std::exception& e) {
      std::cerr << "interp-profile: " << spec.item_id << " failed: " << e.what()
                << "\n";
      ++failures;
    }
  }
  return failures ? 2 : 0;
}

int cmd_fit_rt(const RunConfig& c, bool synth) {
  std::filesystem::create_directories(c.output_dir);
  std::ofstream dll = open_output(c, "dll.csv");
  dll << "k_w,delta_ll,n_rows\n";

  auto fit_and_save = [&](const std::vector<TokenRow>& rows, const std::string& tag) {
    LinearModel full = fit_full(rows);
    LinearModel base = fit_baseline(rows);
    std::ofstream((std::filesystem::path(c.output_dir) / ("model_full" + tag + ".json")).string())
        << full.to_json();
    std::ofstream((std::filesystem::path(c.output_dir) / ("model_baseline" + tag + ".json")).string())
        << base.to_json();
    return std::pair<double, int>{delta_ll(full, base), full.n_rows};
  };

  if (!synth) {
    if (c.fillers.empty()) throw std::runtime_error("fit-rt: no fillers file");
    std::vector<TokenRow> rows = load_token_rows(c.fillers);
    center_reading_times(rows);
    auto [d, n] = fit_and_save(rows, "");
    dll << ',' << fmt(d) << ',' << n << '\n';
    return 0;
  }

  StrategyId strategy = parse_strategy(c.strategy);
  ScorerHandle sh = make_scorer(c, strategy);
  std::vector<std::vector<std::string>> sentences;
  if (!c.sentences.empty()) {
    sentences = load_sentences(c.sentences);
  } else if (!c.treebank.empty()) {
    std::set<std::vector<std::string>> distinct;
    for (const Tree& t : load_treebank(c.treebank).trees)
      distinct.insert(yield_words(t));
    sentences.assign(distinct.begin(), distinct.end());
  } else {
    throw std::runtime_error("fit-rt --synth: no sentences or treebank");
  }

  for (int kw : c.k_w) {
    std::vector<TokenRow> rows =
        synth_fillers(c.synth, sentences, *sh.scorer, strategy, beam_config(c, kw));
    auto [d, n] = fit_and_save(rows, "_kw" + std::to_string(kw));
    dll << kw << ',' << fmt(d) << ',' << n << '\n';
  }
  return 0;
}

struct WordRow {
  std::string item_id, construction, condition, version, token;
  int k_w = 0, position = 0;
  double surprisal_bits = 0.0;
};

std::vector<WordRow> load_gp_words(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open gp words: " + path);
  std::string line;
  std::getline(in, line);
  std::vector<WordRow> rows;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f = split_csv(line);
    if (f.size() != 8)
      throw std::runtime_error("gp words: expected 8 fields: " + line);
    WordRow r;
    r.item_id = f[0];
    r.construction = f[1];
    r.condition = f[2];
    r.k_w = std::stoi(f[3]);
    r.version = f[4];
    r.position = std::stoi(f[5]);
    r.token = f[6];
    r.surprisal_bits = std::stod(f[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

int cmd_predict_gpe(const RunConfig& c) {
  std::vector<ConstructionSpec> specs = load_construction_specs(c.constructions);
  std::map<std::string, const ConstructionSpec*> by_id;
  for (const ConstructionSpec& s : specs) by_id[s.item_id] = &s;
  std::map<std::string, double> logfreq = corpus_logfreq(c.treebank);

  std::vector<WordRow> words =
      load_gp_words((std::filesystem::path(c.output_dir) / "gp_words.csv").string());

  // One sentence per (item, condition, k_w, version), ordered by position.
  std::map<std::tuple<std::string, std::string, int, std::string>,
           std::vector<WordRow>>
      groups;
  for (WordRow& r : words)
    groups[{r.item_id, r.condition, r.k_w, r.version}].push_back(r);
  for (auto& [key, sent] : groups)
    std::sort(sent.begin(), sent.end(),
              [](const WordRow& a, const WordRow& b) { return a.position < b.position; });

  auto model_for = [&](int kw) {
    for (const std::string& name :
         {"model_full_kw" + std::to_string(kw) + ".json", std::string("model_full.json")}) {
      std::ifstream in((std::filesystem::path(c.output_dir) / name).string());
      if (!in) continue;
      std::stringstream buf;
      buf << in.rdbuf();
      return LinearModel::from_json(buf.str());
    }
    throw std::runtime_error("predict-gpe: no fitted model for k_w=" +
                             std::to_string(kw) + " in " + c.output_dir);
  };

  // Predicted reading time summed over [from, from+2].
  auto region_ms = [&](const LinearModel& model, const std::vector<WordRow>& sent,
                       int from, int span) {
    std::vector<TokenRow> rows;
    for (const WordRow& w : sent) {
      TokenRow r;
      r.participant_id = "model";
      r.item_id = w.item_id + "/" + w.version;
      r.position = w.position;
      r.token = w.token;
      r.length = static_cast<double>(w.token.size());
      auto lf = logfreq.find(w.token);
      r.logfreq = lf == logfreq.end() ? 0.0 : lf->second;
      r.surp0 = w.surprisal_bits;
      if (w.position >= 1) r.surp1 = sent[w.position - 1].surprisal_bits;
      if (w.position >= 2) r.surp2 = sent[w.position - 2].surprisal_bits;
      rows.push_back(std::move(r));
    }
    std::vector<double> pred = predict_rt(model, rows);
    double sum = 0.0;
    for (int p = from; p < from + span; ++p) {
      if (p < 0 || p >= static_cast<int>(pred.size()) || !std::isfinite(pred[p]))
        throw std::runtime_error("predict-gpe: region position " + std::to_string(p) +
                                 " has no usable prediction");
      sum += pred[p];
    }
    return sum;
  };

  std::ofstream out = open_output(c, "rt_effects.csv");
  out << "construction,region,condition,k_w,effect_ms,ci_low,ci_high\n";
  int failures = 0;

  // Collect paired predictions per (construction, condition, k_w, region).
  std::map<std::tuple<std::string, std::string, int, std::string>,
           std::vector<PairedPrediction>>
      pairs;
  std::set<std::tuple<std::string, std::string, int>> seen;
  for (const auto& [key, sent] : groups) {
    const auto& [item_id, condition, kw, version] = key;
    if (version != "ambiguous") continue;
    auto un = groups.find({item_id, condition, kw, "unambiguous"});
    auto spec_it = by_id.find(item_id);
    if (un == groups.end() || spec_it == by_id.end()) continue;
    const ConstructionSpec& spec = *spec_it->second;
    try {
      LinearModel model = model_for(kw);
      int da = spec.disambiguating_index_ambiguous;
      int du = spec.disambiguating_index_unambiguous;
      struct Region { const char* name; int offset, span; };
      for (const Region& r : {Region{"disambiguating", 0, 1}, Region{"spillover1", 1, 1},
                              Region{"spillover2", 2, 1}, Region{"summed", 0, 3}}) {
        double amb = region_ms(model, sent, da + r.offset, r.span);
        double unm = region_ms(model, un->second, du + r.offset, r.span);
        pairs[{to_string(spec.construction), condition, kw, r.name}].push_back(
            {item_id, amb, unm});
      }
    } catch (const std::exception& e) {
      std::cerr << "predict-gpe: " << item_id << " " << condition << " k_w=" << kw
                << " failed: " << e.what() << "\n";
      ++failures;
    }
    seen.insert({item_id, condition, kw});
  }

  for (const auto& [key, ps] : pairs) {
    const auto& [construction, condition, kw, region] = key;
    EffectEstimate e = gp_effect_ms(ps, construction, region);
    out << construction << ',' << region << ',' << condition << ',' << kw << ','
        << fmt(e.effect_ms) << ',' << fmt(e.ci_low) << ',' << fmt(e.ci_high) << '\n';
  }
  return failures ? 2 : 0;
}

// --- report ---------------------------------------------------------------

struct EffectRow {
  std::string construction, region, condition;
  int k_w = 0;
  double effect_ms = 0.0, ci_low = 0.0, ci_high = 0.0;
};

std::vector<EffectRow> load_rt_effects(const std::string& path) {
  std::ifstream in(path);
  std::vector<EffectRow> rows;
  if (!in) return rows;
  std::string line;
  std::getline(in, line);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::vector<std::string> f;
    std::istringstream s(line);
    std::string field;
    while (std::getline(s, field, ',')) f.push_back(field);
    if (f.size() != 7) throw std::runtime_error("rt effects: bad row: " + line);
    rows.push_back({f[0], f[1], f[2], std::stoi(f[3]), std::stod(f[4]),
                    std::stod(f[5]), std::stod(f[6])});
  }
  return rows;
}

void write_effect_plot(const RunConfig& c, const std::vector<EffectRow>& rows) {
  // Summed-region effect against the word beam width, one polyline per
  // (construction, condition), with the empirical reference band shaded.
  std::vector<const EffectRow*> pts;
  std::set<int> widths;
  double max_ms = c.band_ms;
  for (const EffectRow& r : rows) {
    if (r.region != "summed") continue;
    pts.push_back(&r);
    widths.insert(r.k_w);
    max_ms = std::max(max_ms, r.effect_ms);
  }
  const double w = 640, h = 400, ml = 60, mb = 40, mt = 20, mr = 20;
  std::vector<int> xs(widths.begin(), widths.end());
  auto xpos = [&](int kw) {
    if (xs.size() <= 1) return ml + (w - ml - mr) / 2;
    size_t i = std::find(xs.begin(), xs.end(), kw) - xs.begin();
    return ml + (w - ml - mr) * static_cast<double>(i) / (xs.size() - 1);
  };
  auto ypos = [&](double ms) {
    return h - mb - (h - mb - mt) * std::max(ms, 0.0) / (max_ms * 1.1 + 1e-9);
  };

  std::ofstream out = open_output(c, "effects_plot.svg");
  out << "<svg xmlns='http://www.w3.org/2000/svg' width='" << w << "' height='" << h
      << "'>\n";
  out << "<rect x='" << ml << "' y='" << ypos(c.band_ms) << "' width='"
      << (w - ml - mr) << "' height='" << (h - mb - ypos(c.band_ms))
      << "' fill='#f3d9d9'/>\n";
  out << "<text x='" << ml + 4 << "' y='" << ypos(c.band_ms) - 4
      << "' font-size='11'>empirical reference band (" << fmt(c.band_ms)
      << " ms)</text>\n";
  out << "<line x1='" << ml << "' y1='" << h - mb << "' x2='" << w - mr << "' y2='"
      << h - mb << "' stroke='black'/>\n";
  out << "<line x1='" << ml << "' y1='" << mt << "' x2='" << ml << "' y2='" << h - mb
      << "' stroke='black'/>\n";
  for (int kw : xs)
    out << "<text x='" << xpos(kw) << "' y='" << h - mb + 16
        << "' font-size='10' text-anchor='middle'>" << kw << "</text>\n";
  out << "<text x='" << w / 2 << "' y='" << h - 6
      << "' font-size='12' text-anchor='middle'>word beam width</text>\n";
  out << "<text x='14' y='" << h / 2
      << "' font-size='12' transform='rotate(-90 14 " << h / 2
      << ")' text-anchor='middle'>predicted effect (ms)</text>\n";

  static const char* colors[] = {"#1f77b4", "#d62728", "#2ca02c",
                                 "#9467bd", "#8c564b", "#e377c2"};
  std::map<std::pair<std::string, std::string>, std::vector<const EffectRow*>> series;
  for (const EffectRow* p : pts) series[{p->construction, p->condition}].push_back(p);
  int ci = 0, legend_y = mt + 12;
  for (auto& [key, sr] : series) {
    std::sort(sr.begin(), sr.end(), [](const EffectRow* a, const EffectRow* b) {
      return a->k_w < b->k_w;
    });
    const char* color = colors[ci++ % 6];
    out << "<polyline fill='none' stroke='" << color << "' points='";
    for (const EffectRow* p : sr) out << xpos(p->k_w) << ',' << ypos(p->effect_ms) << ' ';
    out << "'/>\n";
    for (const EffectRow* p : sr)
      out << "<circle cx='" << xpos(p->k_w) << "' cy='" << ypos(p->effect_ms)
          << "' r='3' fill='" << color << "'/>\n";
    out << "<text x='" << w - mr - 200 << "' y='" << legend_y
        << "' font-size='11' fill='" << color << "'>" << key.first << " / "
        << key.second << "</text>\n";
    legend_y += 14;
  }
  out << "</svg>\n";
}

int cmd_report(const RunConfig& c) {
  std::filesystem::path dir(c.output_dir);
  std::vector<EffectRow> rt = load_rt_effects((dir / "rt_effects.csv").string());
  std::ofstream out = open_output(c, "report.md");
  out << "# Run report\n\n";

  out << "## Predicted reading-time effects\n\n";
  if (rt.empty()) {
    out << "No rt_effects.csv present.\n\n";
  } else {
    out << "| construction | region | condition | k_w | effect (ms) | 95% CI | vs "
        << fmt(c.band_ms) << " ms band |\n";
    out << "|---|---|---|---|---|---|---|\n";
    for (const EffectRow& r : rt)
      out << "| " << r.construction << " | " << r.region << " | " << r.condition
          << " | " << r.k_w << " | " << fmt(r.effect_ms) << " | [" << fmt(r.ci_low)
          << ", " << fmt(r.ci_high) << "] | "
          << (r.effect_ms < c.band_ms ? "below band" : "within band") << " |\n";
    out << "\n";
    write_effect_plot(c, rt);
    out << "Plot: effects_plot.svg\n\n";
  }

  std::ifstream dll_in((dir / "dll.csv").string());
  if (dll_in) {
    out << "## Surprisal model goodness of fit\n\n";
    std::string line;
    std::getline(dll_in, line);
    std::vector<std::pair<int, double>> dlls;
    out << "| k_w | delta log-likelihood | rows |\n|---|---|---|\n";
    while (std::getline(dll_in, line)) {
      if (line.empty()) continue;
      std::istringstream s(line);
      std::string kw, d, n;
      std::getline(s, kw, ',');
      std::getline(s, d, ',');
      std::getline(s, n, ',');
      out << "| " << (kw.empty() ? "-" : kw) << " | " << d << " | " << n << " |\n";
      if (!kw.empty()) dlls.emplace_back(std::stoi(kw), std::stod(d));
    }
    std::sort(dlls.begin(), dlls.end());
    bool nondecreasing = true;
    for (size_t i = 1; i < dlls.size(); ++i)
      nondecreasing = nondecreasing && dlls[i].second >= dlls[i - 1].second - 1e-9;
    if (dlls.size() > 1)
      out << "\nTrend across beam widths: "
          << (nondecreasing ? "non-decreasing" : "not monotone") << ".\n";
    out << "\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  RunConfig cfg;

  // The config file is applied before the flags so that flags override it.
  for (int i = 1; i < argc - 1; ++i) {
    if (std::string(argv[i]) == "--config") {
      try {
        apply_json_config(cfg, argv[i + 1]);
      } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
      }
    }
  }

  CLI::App app{"word-synchronous beam search experiments"};
  app.require_subcommand(1);
  std::string config_path;
  app.add_option("--config", config_path, "JSON config file")->expected(1);

  bool synth = false;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", config_path, "JSON config file (applied first)");
    sub->add_option("--strategy", cfg.strategy, "topdown | leftcorner");
    sub->add_option("--kw", cfg.k_w, "word beam width sweep");
    sub->add_option("--ka", cfg.k_a, "action beam width");
    sub->add_option("--reference-kw", cfg.reference_k_w,
                    "width for counterfactual conditions and profiles");
    sub->add_option("--max-open", cfg.limits.max_open_nonterminals,
                    "open-nonterminal cap");
    sub->add_option("--max-structural", cfg.limits.max_structural_actions_between_words,
                    "structural actions per word cap");
    sub->add_option("--treebank", cfg.treebank, "bracketed treebank file");
    sub->add_option("--scorer-json", cfg.scorer_json, "saved scorer model");
    sub->add_option("--external-scorer", cfg.external_scorer,
                    "external scorer command");
    sub->add_option("--sentences", cfg.sentences, "sentences file, one per line");
    sub->add_option("--constructions", cfg.constructions, "construction specs JSON");
    sub->add_option("--fillers", cfg.fillers, "filler reading-time CSV");
    sub->add_option("--output-dir", cfg.output_dir, "output directory");
    sub->add_option("--band-ms", cfg.band_ms, "empirical reference band (ms)");
    sub->add_flag("--post-truncation-mass", cfg.post_truncation_mass,
                  "marginalize over retained items only");
    sub->add_flag("--forced-filter-at-disambiguation-only",
                  cfg.forced_filter_at_disambiguation_only,
                  "restrict forced-condition filtering to the disambiguating word");
    sub->add_option("--synth-noise-sd", cfg.synth.noise_sd, "synthetic noise sd (ms)");
    sub->add_option("--synth-rows", cfg.synth.n_rows, "synthetic row count");
    sub->add_option("--synth-seed", cfg.synth.seed, "synthetic RNG seed");
  };

  CLI::App* oracle_extract =
      app.add_subcommand("oracle-extract", "derivations from a treebank");
  CLI::App* fit_scorer = app.add_subcommand("fit-scorer", "fit and save a scorer");
  CLI::App* parse_eval = app.add_subcommand("parse-eval", "labeled F1 per sentence");
  CLI::App* surprisal = app.add_subcommand("surprisal", "per-word surprisal sweep");
  CLI::App* gp_run =
      app.add_subcommand("gp-run", "garden-path conditions and effects");
  CLI::App* interp =
      app.add_subcommand("interp-profile", "per-word interpretation bins");
  CLI::App* fit_rt = app.add_subcommand("fit-rt", "fit reading-time filler models");
  fit_rt->add_flag("--synth", synth, "generate synthetic fillers per beam width");
  CLI::App* predict_gpe =
      app.add_subcommand("predict-gpe", "garden-path effects in milliseconds");
  CLI::App* report = app.add_subcommand("report", "summarize run outputs");
  for (CLI::App* sub : {oracle_extract, fit_scorer, parse_eval, surprisal, gp_run,
                        interp, fit_rt, predict_gpe, report})
    add_common(sub);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (oracle_extract->parsed()) return cmd_oracle_extract(cfg);
    if (fit_scorer->parsed()) return cmd_fit_scorer(cfg);
    if (parse_eval->parsed()) return cmd_parse_eval(cfg);
    if (surprisal->parsed()) return cmd_surprisal(cfg);
    if (gp_run->parsed()) return cmd_gp_run(cfg);
    if (interp->parsed()) return cmd_interp_profile(cfg);
    if (fit_rt->parsed()) return cmd_fit_rt(cfg, synth);
    if (predict_gpe->parsed()) return cmd_predict_gpe(cfg);
    if (report->parsed()) return cmd_report(cfg);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 1;
}

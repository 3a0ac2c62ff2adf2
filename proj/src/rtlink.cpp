#include "gpbeam/rtlink.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <map>
#include <random>
#include <sstream>

#include "json.hpp"

namespace gpbeam {

namespace {

constexpr double kPi = 3.14159265358979323846;

bool finite(double x) { return std::isfinite(x); }

std::string fmt(double x) {
  if (!finite(x)) return "";
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

double parse_or_nan(const std::string& s) {
  if (s.empty()) return std::numeric_limits<double>::quiet_NaN();
  return std::stod(s);
}

// Fields are quoted only when needed; tokens can be punctuation, including
// the comma itself.
std::string quote_csv(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (size_t i = 0; i < line.size(); ++i) {
    char c = line[i];
    if (quoted) {
      if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
        cur += '"';
        ++i;
      } else if (c == '"') {
        quoted = false;
      } else {
        cur += c;
      }
    } else if (c == '"') {
      quoted = true;
    } else if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur += c;
    }
  }
  out.push_back(cur);
  return out;
}

std::vector<std::string> predictor_names(bool with_surprisal) {
  std::vector<std::string> names = {
      "position",
      "length0", "logfreq0", "length0_x_logfreq0",
      "length1", "logfreq1", "length1_x_logfreq1",
      "length2", "logfreq2", "length2_x_logfreq2"};
  if (with_surprisal) {
    names.push_back("surp0");
    names.push_back("surp1");
    names.push_back("surp2");
  }
  return names;
}

struct PreparedDesign {
  std::vector<size_t> row_indices;        // usable rows, in input order
  std::vector<std::vector<double>> raw;   // one predictor vector per usable row
  std::vector<double> response;
};

// Length/frequency lags come from the neighboring rows of the same
// participant+item; rows without both neighbors, or with undefined surprisal
// lags, are dropped rather than zero-filled.
PreparedDesign prepare(const std::vector<TokenRow>& rows) {
  std::map<std::tuple<std::string, std::string, int>, size_t> index;
  for (size_t i = 0; i < rows.size(); ++i)
    index[{rows[i].participant_id, rows[i].item_id, rows[i].position}] = i;

  PreparedDesign d;
  for (size_t i = 0; i < rows.size(); ++i) {
    const TokenRow& r = rows[i];
    auto p1 = index.find({r.participant_id, r.item_id, r.position - 1});
    auto p2 = index.find({r.participant_id, r.item_id, r.position - 2});
    if (p1 == index.end() || p2 == index.end()) continue;
    if (!finite(r.surp0) || !finite(r.surp1) || !finite(r.surp2)) continue;
    const TokenRow& r1 = rows[p1->second];
    const TokenRow& r2 = rows[p2->second];
    d.row_indices.push_back(i);
    d.raw.push_back({static_cast<double>(r.position),
                     r.length, r.logfreq, r.length * r.logfreq,
                     r1.length, r1.logfreq, r1.length * r1.logfreq,
                     r2.length, r2.logfreq, r2.length * r2.logfreq,
                     r.surp0, r.surp1, r.surp2});
    d.response.push_back(r.rt_ms);
  }
  return d;
}

std::uint64_t fnv1a(const std::vector<double>& xs) {
  std::uint64_t h = 1469598103934665603ULL;
  for (double x : xs) {
    std::uint64_t bits;
    std::memcpy(&bits, &x, sizeof bits);
    for (int i = 0; i < 8; ++i) {
      h ^= (bits >> (8 * i)) & 0xff;
      h *= 1099511628211ULL;
    }
  }
  return h;
}

LinearModel fit_impl(const std::vector<TokenRow>& rows, bool with_surprisal) {
  PreparedDesign d = prepare(rows);
  std::vector<std::string> names = predictor_names(with_surprisal);
  const int p = static_cast<int>(names.size());
  const int n = static_cast<int>(d.raw.size());
  if (n < 10 * p)
    throw std::invalid_argument("fit: insufficient rows (" + std::to_string(n) +
                                " usable, need >= " + std::to_string(10 * p) + ")");

  LinearModel m;
  m.with_surprisal = with_surprisal;
  m.predictor_names = names;
  m.mean.assign(p, 0.0);
  m.sd.assign(p, 1.0);
  m.dropped.assign(p, false);

  for (int j = 0; j < p; ++j) {
    double s = 0.0;
    for (int i = 0; i < n; ++i) s += d.raw[i][j];
    m.mean[j] = s / n;
    double v = 0.0;
    for (int i = 0; i < n; ++i) {
      double c = d.raw[i][j] - m.mean[j];
      v += c * c;
    }
    double sd = std::sqrt(v / n);
    if (sd < 1e-9) {
      m.dropped[j] = true;  // constant column: coefficient pinned to zero
    } else {
      m.sd[j] = sd;
    }
  }

  std::vector<int> kept;
  for (int j = 0; j < p; ++j)
    if (!m.dropped[j]) kept.push_back(j);

  Eigen::MatrixXd X(n, 1 + kept.size());
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) {
    X(i, 0) = 1.0;
    for (size_t k = 0; k < kept.size(); ++k) {
      int j = kept[k];
      X(i, 1 + k) = (d.raw[i][j] - m.mean[j]) / m.sd[j];
    }
    y(i) = d.response[i];
  }

  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(X);
  qr.setThreshold(1e-8);
  if (qr.rank() < X.cols())
    throw std::invalid_argument("fit: rank-deficient design (collinear predictors)");
  Eigen::VectorXd beta = qr.solve(y);

  m.coef.assign(p + 1, 0.0);
  m.coef[0] = beta(0);
  for (size_t k = 0; k < kept.size(); ++k) m.coef[kept[k] + 1] = beta(1 + k);

  double rss = (y - X * beta).squaredNorm();
  m.sigma2 = std::max(rss / n, 1e-300);
  m.loglik = -0.5 * n * (std::log(2.0 * kPi * m.sigma2) + 1.0);
  m.n_rows = n;
  m.response_hash = fnv1a(d.response);
  return m;
}

}  // namespace

LinearModel fit_baseline(const std::vector<TokenRow>& rows) {
  return fit_impl(rows, false);
}

LinearModel fit_full(const std::vector<TokenRow>& rows) {
  return fit_impl(rows, true);
}

double LinearModel::slope(const std::string& predictor) const {
  for (size_t j = 0; j < predictor_names.size(); ++j)
    if (predictor_names[j] == predictor)
      return dropped[j] ? 0.0 : coef[j + 1] / sd[j];
  throw std::invalid_argument("unknown predictor: " + predictor);
}

double delta_ll(const LinearModel& full, const LinearModel& baseline) {
  if (full.n_rows != baseline.n_rows || full.response_hash != baseline.response_hash)
    throw std::invalid_argument("delta_ll: models were fit on different rows");
  return full.loglik - baseline.loglik;
}

std::vector<double> predict_rt(const LinearModel& model,
                               const std::vector<TokenRow>& rows) {
  PreparedDesign d = prepare(rows);
  const int p = static_cast<int>(model.predictor_names.size());
  std::vector<double> out(rows.size(), std::numeric_limits<double>::quiet_NaN());
  for (size_t i = 0; i < d.raw.size(); ++i) {
    double pred = model.coef[0];
    for (int j = 0; j < p; ++j) {
      if (model.dropped[j]) continue;
      pred += model.coef[j + 1] * (d.raw[i][j] - model.mean[j]) / model.sd[j];
    }
    out[d.row_indices[i]] = pred;
  }
  return out;
}

std::vector<double> predict_standardized(const LinearModel& model,
                                         const std::vector<std::vector<double>>& design) {
  const int p = static_cast<int>(model.predictor_names.size());
  std::vector<double> out;
  for (const auto& z : design) {
    if (static_cast<int>(z.size()) != p)
      throw std::invalid_argument("predict_standardized: wrong design width");
    double pred = model.coef[0];
    for (int j = 0; j < p; ++j)
      if (!model.dropped[j]) pred += model.coef[j + 1] * z[j];
    out.push_back(pred);
  }
  return out;
}

void center_reading_times(std::vector<TokenRow>& rows) {
  if (rows.empty()) return;
  std::map<std::string, std::pair<double, int>> by_part, by_item;
  double grand = 0.0;
  for (const TokenRow& r : rows) {
    auto& p = by_part[r.participant_id];
    p.first += r.rt_ms;
    ++p.second;
    auto& it = by_item[r.item_id];
    it.first += r.rt_ms;
    ++it.second;
    grand += r.rt_ms;
  }
  grand /= rows.size();
  // Subtract each group's offset from the grand mean so the reading times stay
  // on the millisecond scale.
  for (TokenRow& r : rows) {
    const auto& p = by_part[r.participant_id];
    const auto& it = by_item[r.item_id];
    r.rt_ms = r.rt_ms - (p.first / p.second - grand) - (it.first / it.second - grand);
  }
}

EffectEstimate gp_effect_ms(const std::vector<PairedPrediction>& pairs,
                            const std::string& construction, const std::string& region,
                            int replicates, std::uint64_t seed) {
  if (pairs.empty()) throw std::invalid_argument("gp_effect_ms: no paired items");
  std::vector<double> diffs;
  for (const PairedPrediction& p : pairs)
    diffs.push_back(p.ambiguous_ms - p.unambiguous_ms);

  auto mean_of = [](const std::vector<double>& xs) {
    double s = 0.0;
    for (double x : xs) s += x;
    return s / xs.size();
  };

  EffectEstimate e;
  e.construction = construction;
  e.region = region;
  e.effect_ms = mean_of(diffs);
  e.n_items = static_cast<int>(pairs.size());

  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<size_t> pick(0, diffs.size() - 1);
  std::vector<double> boot(replicates);
  std::vector<double> sample(diffs.size());
  for (int b = 0; b < replicates; ++b) {
    for (size_t i = 0; i < diffs.size(); ++i) sample[i] = diffs[pick(rng)];
    boot[b] = mean_of(sample);
  }
  std::sort(boot.begin(), boot.end());
  auto quantile = [&](double q) {
    double idx = q * (boot.size() - 1);
    size_t lo = static_cast<size_t>(idx);
    size_t hi = std::min(lo + 1, boot.size() - 1);
    double frac = idx - lo;
    return boot[lo] * (1.0 - frac) + boot[hi] * frac;
  };
  e.ci_low = quantile(0.025);
  e.ci_high = quantile(0.975);
  return e;
}

std::vector<TokenRow> synth_fillers(const SynthConfig& synth,
                                    const std::vector<std::vector<std::string>>& sentences,
                                    const Scorer& scorer, StrategyId strategy,
                                    const BeamConfig& config) {
  if (sentences.empty()) throw std::invalid_argument("synth_fillers: no sentences");

  std::map<std::string, int> freq;
  for (const auto& s : sentences)
    for (const std::string& w : s) ++freq[w];

  std::vector<std::vector<double>> surprisals;
  for (const auto& s : sentences)
    surprisals.push_back(surprisal_per_word(s, scorer, strategy, config).surprisal_bits);

  std::mt19937_64 rng(synth.seed);
  std::normal_distribution<double> noise(0.0, synth.noise_sd);

  std::vector<TokenRow> rows;
  int participant = 0;
  while (static_cast<int>(rows.size()) < synth.n_rows) {
    for (size_t si = 0; si < sentences.size() && static_cast<int>(rows.size()) < synth.n_rows;
         ++si) {
      const auto& sent = sentences[si];
      const auto& surp = surprisals[si];
      for (size_t p = 0; p < sent.size() && static_cast<int>(rows.size()) < synth.n_rows;
           ++p) {
        TokenRow r;
        r.participant_id = "p" + std::to_string(participant);
        r.item_id = "s" + std::to_string(si);
        r.position = static_cast<int>(p);
        r.token = sent[p];
        r.length = static_cast<double>(sent[p].size());
        r.logfreq = std::log(static_cast<double>(freq[sent[p]]));
        r.surp0 = surp[p];
        if (p >= 1) r.surp1 = surp[p - 1];
        if (p >= 2) r.surp2 = surp[p - 2];
        double rt = synth.intercept + synth.beta_surp0 * r.surp0;
        if (p >= 1) rt += synth.beta_surp1 * r.surp1;
        if (p >= 2) rt += synth.beta_surp2 * r.surp2;
        if (synth.noise_sd > 0.0) rt += noise(rng);
        r.rt_ms = rt;
        rows.push_back(std::move(r));
      }
    }
    ++participant;
  }
  return rows;
}

// --- io ---

std::vector<TokenRow> load_token_rows(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open rows: " + path);
  std::string line;
  if (!std::getline(in, line)) throw std::runtime_error("empty rows file: " + path);
  std::vector<TokenRow> rows;
  int lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = split_csv_line(line);
    if (f.size() != 12)
      throw std::runtime_error(path + ":" + std::to_string(lineno) +
                               ": expected 12 fields, got " + std::to_string(f.size()));
    TokenRow r;
    r.participant_id = f[0];
    r.item_id = f[1];
    r.position = std::stoi(f[2]);
    r.token = f[3];
    r.rt_ms = std::stod(f[4]);
    r.length = std::stod(f[5]);
    r.logfreq = std::stod(f[6]);
    r.surp0 = parse_or_nan(f[7]);
    r.surp1 = parse_or_nan(f[8]);
    r.surp2 = parse_or_nan(f[9]);
    r.construction = f[10];
    r.ambiguity = f[11];
    rows.push_back(std::move(r));
  }
  return rows;
}

void save_token_rows(const std::vector<TokenRow>& rows, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write rows: " + path);
  out << "participant_id,item_id,position,token,rt_ms,length,logfreq,"
         "surp0,surp1,surp2,construction,ambiguity\n";
  for (const TokenRow& r : rows) {
    out << quote_csv(r.participant_id) << ',' << quote_csv(r.item_id) << ','
        << r.position << ',' << quote_csv(r.token) << ','
        << fmt(r.rt_ms) << ',' << fmt(r.length) << ',' << fmt(r.logfreq) << ','
        << fmt(r.surp0) << ',' << fmt(r.surp1) << ',' << fmt(r.surp2) << ','
        << r.construction << ',' << r.ambiguity << '\n';
  }
}

std::string LinearModel::to_json() const {
  nlohmann::json j;
  j["with_surprisal"] = with_surprisal;
  j["predictor_names"] = predictor_names;
  j["coef"] = coef;
  j["mean"] = mean;
  j["sd"] = sd;
  j["dropped"] = dropped;
  j["sigma2"] = sigma2;
  j["loglik"] = loglik;
  j["n_rows"] = n_rows;
  j["response_hash"] = response_hash;
  return j.dump(2);
}

LinearModel LinearModel::from_json(const std::string& text) {
  nlohmann::json j = nlohmann::json::parse(text);
  LinearModel m;
  m.with_surprisal = j.at("with_surprisal").get<bool>();
  m.predictor_names = j.at("predictor_names").get<std::vector<std::string>>();
  m.coef = j.at("coef").get<std::vector<double>>();
  m.mean = j.at("mean").get<std::vector<double>>();
  m.sd = j.at("sd").get<std::vector<double>>();
  m.dropped = j.at("dropped").get<std::vector<bool>>();
  m.sigma2 = j.at("sigma2").get<double>();
  m.loglik = j.at("loglik").get<double>();
  m.n_rows = j.at("n_rows").get<int>();
  m.response_hash = j.at("response_hash").get<std::uint64_t>();
  return m;
}

}  // namespace gpbeam

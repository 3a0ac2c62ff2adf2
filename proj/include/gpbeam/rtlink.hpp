#ifndef GPBEAM_RTLINK_HPP
#define GPBEAM_RTLINK_HPP

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "gpbeam/beam.hpp"

namespace gpbeam {

// One word of self-paced reading data. Surprisal lags reference the previous
// two words; NaN marks undefined values (sentence-initial rows are dropped
// at fit time, not zero-filled).
struct TokenRow {
  std::string participant_id;
  std::string item_id;
  int position = 0;
  std::string token;
  double rt_ms = 0.0;
  double length = 0.0;   // characters
  double logfreq = 0.0;  // natural-log frequency
  double surp0 = std::numeric_limits<double>::quiet_NaN();
  double surp1 = std::numeric_limits<double>::quiet_NaN();
  double surp2 = std::numeric_limits<double>::quiet_NaN();
  std::string construction;  // optional condition labels
  std::string ambiguity;
};

std::vector<TokenRow> load_token_rows(const std::string& path);
void save_token_rows(const std::vector<TokenRow>& rows, const std::string& path);

// Fixed-effects least squares on standardized predictors. Constant columns
// are dropped with coefficient zero; genuine collinearity is an error.
struct LinearModel {
  bool with_surprisal = false;
  std::vector<std::string> predictor_names;
  std::vector<double> coef;  // standardized-space; index 0 is the intercept
  std::vector<double> mean;  // per predictor, from the fitting rows
  std::vector<double> sd;
  std::vector<bool> dropped;
  double sigma2 = 0.0;       // MLE residual variance
  double loglik = 0.0;       // Gaussian log-likelihood on the fitting rows
  int n_rows = 0;
  std::uint64_t response_hash = 0;

  // Slope per raw unit of one predictor (standardized coefficient / sd).
  double slope(const std::string& predictor) const;

  std::string to_json() const;
  static LinearModel from_json(const std::string& text);
};

// Baseline: position plus frequency-by-length interactions at lags 0-2.
LinearModel fit_baseline(const std::vector<TokenRow>& rows);
// Full: baseline predictors plus surprisal at lags 0-2.
LinearModel fit_full(const std::vector<TokenRow>& rows);

// full.loglik - baseline.loglik; requires both fit on identical rows.
double delta_ll(const LinearModel& full, const LinearModel& baseline);

// Linear predictions in ms; standardization always uses the model's stored
// filler statistics. Returns NaN for rows whose predictors are undefined.
std::vector<double> predict_rt(const LinearModel& model, const std::vector<TokenRow>& rows);

// Same predictions from an already-standardized design (row-major, one inner
// vector per row, ordered as predictor_names).
std::vector<double> predict_standardized(const LinearModel& model,
                                         const std::vector<std::vector<double>>& design);

// Subtracts per-participant and per-item reading-time means (grand mean kept).
void center_reading_times(std::vector<TokenRow>& rows);

struct PairedPrediction {
  std::string item_id;
  double ambiguous_ms = 0.0;
  double unambiguous_ms = 0.0;
};

struct EffectEstimate {
  std::string construction;
  std::string region;  // disambiguating | spillover1 | spillover2 | summed
  double effect_ms = 0.0;
  double ci_low = 0.0;   // 95% bootstrap interval over items
  double ci_high = 0.0;
  int n_items = 0;
};

EffectEstimate gp_effect_ms(const std::vector<PairedPrediction>& pairs,
                            const std::string& construction, const std::string& region,
                            int replicates = 2000, std::uint64_t seed = 0);

struct SynthConfig {
  double intercept = 250.0;
  double beta_surp0 = 2.0;  // ms per bit
  double beta_surp1 = 0.5;
  double beta_surp2 = 0.25;
  double noise_sd = 30.0;
  int n_rows = 5000;
  std::uint64_t seed = 0;
};

// Deterministic synthetic filler rows: reading times are the configured
// linear function of real surprisals computed by the beam, plus Gaussian
// noise. Sentences cycle across synthetic participants until n_rows.
std::vector<TokenRow> synth_fillers(const SynthConfig& synth,
                                    const std::vector<std::vector<std::string>>& sentences,
                                    const Scorer& scorer, StrategyId strategy,
                                    const BeamConfig& config);

}  // namespace gpbeam

#endif

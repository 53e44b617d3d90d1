#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "hedgekit/market_sim.hpp"

// Option-chain ingestion and the real-data feature set.

namespace hedgekit::data {

using Date = std::chrono::sys_days;

/// Strict YYYY-MM-DD; throws FormatError.
Date parse_date(std::string_view text);
std::string format_date(Date d);

inline constexpr std::array<std::string_view, 7> kChainColumns{
    "quote_date", "expiry", "strike", "right", "best_bid", "best_ask", "underlying_close"};

struct OptionQuoteRow {
  Date quote_date{};
  Date expiry{};
  double strike = 0.0;
  char right = 'C';
  double best_bid = 0.0;
  double best_ask = 0.0;
  double underlying_close = 0.0;
  double mid = 0.0;
  std::size_t line = 0;  // 1-based line in the source file, 0 if synthetic

  int days_to_expiry() const { return static_cast<int>((expiry - quote_date).count()); }
};

struct RejectedRow {
  std::size_t line = 0;
  std::vector<std::string> fields;  // raw values, one per schema column
  std::string reason;
};

struct ChainLoad {
  std::vector<OptionQuoteRow> rows;
  std::vector<RejectedRow> rejects;
  std::size_t data_lines = 0;  // rows.size() + rejects.size()
};

/// Header must contain every schema column (any order, extra columns ignored).
/// Throws SchemaError naming the missing columns, IoError if unreadable.
ChainLoad load_chain_csv(const std::filesystem::path& path);
ChainLoad parse_chain_csv(std::istream& in, std::string_view source_name = "<stream>");

void write_chain_csv(const std::filesystem::path& path, const std::vector<OptionQuoteRow>& rows);
/// Rejects report: schema columns plus reject_reason.
void write_rejects_csv(const std::filesystem::path& path, const std::vector<RejectedRow>& rejects);

struct UniverseFilter {
  int min_days = 15;
  int max_days = 40;
  double max_moneyness_gap = 0.20;  // drop rows with |S/K - 1| above this
};

/// One contract's daily series, dates strictly increasing.
struct ChainEpisode {
  Date expiry{};
  double strike = 0.0;
  std::vector<Date> dates;
  std::vector<double> mids;
  std::vector<double> closes;
  std::vector<int> days_to_expiry;
  /// A weekday between two consecutive observations is missing.
  bool has_gap = false;
  std::size_t duplicate_dates = 0;  // later duplicates dropped

  std::size_t size() const { return dates.size(); }
};

/// Groups rows by (expiry, strike), drops rows outside the moneyness band,
/// then keeps contracts whose first surviving row has days-to-expiry within
/// [min_days, max_days]. Idempotent. Output ordered by (expiry, strike).
std::vector<ChainEpisode> filter_universe(const std::vector<OptionQuoteRow>& rows,
                                          const UniverseFilter& filter = {});

/// Inverse of grouping: rows for re-filtering or serialisation.
std::vector<OptionQuoteRow> flatten(const std::vector<ChainEpisode>& episodes);

inline constexpr double kTradingDaysPerYear = 252.0;

/// Annualised std (n-1 divisor) of the last `window` log returns, i.e. over the
/// last window + 1 closes. Throws ArgumentError for a short series.
double historical_vol(std::span<const double> closes, int window);

/// Daily underlier closes keyed by date.
using UnderlierHistory = std::map<Date, double>;

/// Closes implied by the chain itself (first value seen per quote date).
UnderlierHistory history_from_rows(const std::vector<OptionQuoteRow>& rows);
/// Two-column `date,close` file.
UnderlierHistory load_history_csv(const std::filesystem::path& path);
void write_history_csv(const std::filesystem::path& path, const UnderlierHistory& history);
/// Entries of `extra` override nothing already present in `base`.
void merge_history(UnderlierHistory& base, const UnderlierHistory& extra);

struct FeatureVector {
  double tau = 0.0;        // days_to_expiry / 365
  double moneyness = 0.0;  // S / K
  double sigma_impl = 0.0;
  double delta = 0.0;
  double vega = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
  double sigma_20 = 0.0;
  double sigma_30 = 0.0;
};

inline constexpr std::size_t kResidualFeatureCount = 8;
inline constexpr std::array<std::string_view, kResidualFeatureCount> kResidualFeatureNames{
    "tau", "moneyness", "sigma_impl", "vega", "theta", "gamma", "sigma_20", "sigma_30"};
std::array<double, kResidualFeatureCount> residual_features(const FeatureVector& f);

struct FeatureRow {
  FeatureVector features;
  bool valid = false;
  std::string flag;  // empty when valid
};

struct FeaturedEpisode {
  ChainEpisode chain;
  std::vector<FeatureRow> rows;
  /// Enough history, no gap (unless allowed) and an implied vol on the first
  /// row. Later rows whose implied vol fails stay flagged but carry the last
  /// vol so the episode can still be replayed.
  bool usable = false;
  std::string flag;
};

struct FeatureConfig {
  double rate = 0.0;
  double days_per_year = kDefaultDaysPerYear;
  int history_required = 31;  // closes up to and including the first quote date
  bool allow_gaps = false;
};

/// Implied vol from each mid, greeks at that vol, trailing 20/30-day vols.
/// Row failures are flagged, never thrown. The expiry row (zero days left)
/// carries the previous implied vol and counts as valid.
FeaturedEpisode compute_features(const ChainEpisode& episode, const UnderlierHistory& history,
                                 const FeatureConfig& config = {});

struct ResidualSample {
  double y = 0.0;
  std::array<double, kResidualFeatureCount> x{};
};

struct ResidualDataset {
  std::vector<ResidualSample> samples;
  /// Pearson correlation over {y, x_1..x_8}; NaN off the diagonal for a
  /// constant column.
  std::vector<std::vector<double>> correlation;
};

/// y = C_t - C_{t+1} + delta_t (S_{t+1} - S_t), x_k = feature_k(t) (S_{t+1} - S_t),
/// for every valid row t of a usable episode (flagged rows are skipped).
ResidualDataset residual_dataset(const std::vector<FeaturedEpisode>& episodes);

std::vector<std::vector<double>> pearson_matrix(const std::vector<std::vector<double>>& columns);

enum class Settlement { last_quote, intrinsic_at_expiry };

/// Usable episodes as daily hedging episodes with market mids as marks. With
/// intrinsic_at_expiry the final mark is max(S - K, 0) and contracts whose
/// last quote is not on the expiry date are skipped.
std::vector<HedgeEpisode> episodes_to_env(const std::vector<FeaturedEpisode>& episodes,
                                          Settlement settlement = Settlement::last_quote);

/// Chain rows for a simulated episode, one quote per day starting at
/// `start`; bid = ask = the model mark so the mid is exact.
std::vector<OptionQuoteRow> episode_to_chain(const HedgeEpisode& episode, Date start);
/// Underlier closes of a simulated episode's pre-history, dated backwards
/// from `start`.
UnderlierHistory episode_history(const HedgeEpisode& episode, Date start);

}  // namespace hedgekit::data

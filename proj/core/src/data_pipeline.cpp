#include "hedgekit/data_pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>
#include <tuple>

#include "hedgekit/csv.hpp"
#include "hedgekit/errors.hpp"
#include "hedgekit/option_analytics.hpp"

namespace hedgekit::data {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

bool parse_int(std::string_view s, int& out) {
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc{} && ptr == s.data() + s.size();
}

bool is_weekday(Date d) {
  const std::chrono::weekday wd{d};
  return wd != std::chrono::Saturday && wd != std::chrono::Sunday;
}

bool weekday_missing_between(Date a, Date b) {
  for (Date d = a + std::chrono::days{1}; d < b; d += std::chrono::days{1}) {
    if (is_weekday(d)) return true;
  }
  return false;
}

}  // namespace

Date parse_date(std::string_view text) {
  using namespace std::chrono;
  int y = 0, m = 0, d = 0;
  if (text.size() != 10 || text[4] != '-' || text[7] != '-' || !parse_int(text.substr(0, 4), y) ||
      !parse_int(text.substr(5, 2), m) || !parse_int(text.substr(8, 2), d)) {
    throw FormatError("bad date '" + std::string(text) + "', expected YYYY-MM-DD");
  }
  const year_month_day ymd{year{y}, month{static_cast<unsigned>(m)}, day{static_cast<unsigned>(d)}};
  if (!ymd.ok()) throw FormatError("invalid calendar date '" + std::string(text) + "'");
  return sys_days{ymd};
}

std::string format_date(Date d) {
  const std::chrono::year_month_day ymd{d};
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(ymd.year()),
                static_cast<unsigned>(ymd.month()), static_cast<unsigned>(ymd.day()));
  return buf;
}

// --- Chain CSV --------------------------------------------------------------

ChainLoad parse_chain_csv(std::istream& in, std::string_view source_name) {
  std::string line;
  if (!std::getline(in, line)) {
    throw SchemaError(std::string(source_name) + ": missing header");
  }
  const std::vector<std::string> header = csv::split_line(line);
  std::array<std::size_t, kChainColumns.size()> col{};
  std::string missing;
  for (std::size_t c = 0; c < kChainColumns.size(); ++c) {
    const auto it = std::find(header.begin(), header.end(), kChainColumns[c]);
    if (it == header.end()) {
      if (!missing.empty()) missing += ", ";
      missing += kChainColumns[c];
    } else {
      col[c] = static_cast<std::size_t>(it - header.begin());
    }
  }
  if (!missing.empty()) {
    throw SchemaError(std::string(source_name) + ": missing columns: " + missing);
  }

  ChainLoad out;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    ++out.data_lines;
    const std::vector<std::string> fields = csv::split_line(line);

    RejectedRow reject;
    reject.line = line_no;
    reject.fields.resize(kChainColumns.size());
    for (std::size_t c = 0; c < kChainColumns.size(); ++c) {
      if (col[c] < fields.size()) reject.fields[c] = fields[col[c]];
    }
    auto fail = [&](std::string reason) {
      reject.reason = std::move(reason);
      out.rejects.push_back(std::move(reject));
    };
    if (fields.size() != header.size()) {
      fail("expected " + std::to_string(header.size()) + " fields, got " +
           std::to_string(fields.size()));
      continue;
    }

    OptionQuoteRow row;
    row.line = line_no;
    try {
      row.quote_date = parse_date(reject.fields[0]);
      row.expiry = parse_date(reject.fields[1]);
    } catch (const FormatError& e) {
      fail(e.what());
      continue;
    }
    const std::string& right = reject.fields[3];
    if (right != "C" && right != "c" && right != "call" && right != "CALL") {
      fail("unsupported right '" + right + "'");
      continue;
    }
    const auto strike = csv::parse_double(reject.fields[2]);
    const auto bid = csv::parse_double(reject.fields[4]);
    const auto ask = csv::parse_double(reject.fields[5]);
    const auto close = csv::parse_double(reject.fields[6]);
    if (!strike || !bid || !ask || !close || !std::isfinite(*strike) || !std::isfinite(*bid) ||
        !std::isfinite(*ask) || !std::isfinite(*close)) {
      fail("unparseable number");
      continue;
    }
    if (!(*strike > 0.0)) {
      fail("non-positive strike");
      continue;
    }
    if (!(*close > 0.0)) {
      fail("non-positive underlying close");
      continue;
    }
    if (*bid < 0.0) {
      fail("negative bid");
      continue;
    }
    if (*bid > *ask) {
      fail("crossed quote");
      continue;
    }
    if (row.expiry < row.quote_date) {
      fail("expiry before quote date");
      continue;
    }
    row.strike = *strike;
    row.best_bid = *bid;
    row.best_ask = *ask;
    row.underlying_close = *close;
    row.mid = 0.5 * (*bid + *ask);
    out.rows.push_back(row);
  }
  return out;
}

ChainLoad load_chain_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return parse_chain_csv(in, path.string());
}

void write_chain_csv(const std::filesystem::path& path, const std::vector<OptionQuoteRow>& rows) {
  csv::Writer w(path);
  w.header({kChainColumns.begin(), kChainColumns.end()});
  for (const auto& r : rows) {
    w.field(format_date(r.quote_date)).field(format_date(r.expiry)).field(r.strike).field("C");
    w.field(r.best_bid).field(r.best_ask).field(r.underlying_close);
    w.end_row();
  }
  w.close();
}

void write_rejects_csv(const std::filesystem::path& path, const std::vector<RejectedRow>& rejects) {
  csv::Writer w(path);
  std::vector<std::string> cols(kChainColumns.begin(), kChainColumns.end());
  cols.emplace_back("reject_reason");
  w.header(cols);
  for (const auto& r : rejects) {
    for (const auto& f : r.fields) w.field(f);
    w.field(r.reason);
    w.end_row();
  }
  w.close();
}

// --- Universe ---------------------------------------------------------------

std::vector<ChainEpisode> filter_universe(const std::vector<OptionQuoteRow>& rows,
                                          const UniverseFilter& filter) {
  std::vector<const OptionQuoteRow*> sorted;
  sorted.reserve(rows.size());
  for (const auto& r : rows) {
    if (std::abs(r.underlying_close / r.strike - 1.0) > filter.max_moneyness_gap) continue;
    sorted.push_back(&r);
  }
  std::stable_sort(sorted.begin(), sorted.end(), [](const auto* a, const auto* b) {
    return std::tie(a->expiry, a->strike, a->quote_date) <
           std::tie(b->expiry, b->strike, b->quote_date);
  });

  std::vector<ChainEpisode> out;
  std::size_t i = 0;
  while (i < sorted.size()) {
    ChainEpisode ep;
    ep.expiry = sorted[i]->expiry;
    ep.strike = sorted[i]->strike;
    std::size_t j = i;
    for (; j < sorted.size() && sorted[j]->expiry == ep.expiry && sorted[j]->strike == ep.strike;
         ++j) {
      const auto& r = *sorted[j];
      if (!ep.dates.empty() && r.quote_date == ep.dates.back()) {
        ++ep.duplicate_dates;
        continue;
      }
      if (!ep.dates.empty() && weekday_missing_between(ep.dates.back(), r.quote_date)) {
        ep.has_gap = true;
      }
      ep.dates.push_back(r.quote_date);
      ep.mids.push_back(r.mid);
      ep.closes.push_back(r.underlying_close);
      ep.days_to_expiry.push_back(r.days_to_expiry());
    }
    i = j;
    const int first_dte = ep.days_to_expiry.front();
    if (first_dte >= filter.min_days && first_dte <= filter.max_days) out.push_back(std::move(ep));
  }
  return out;
}

std::vector<OptionQuoteRow> flatten(const std::vector<ChainEpisode>& episodes) {
  std::vector<OptionQuoteRow> rows;
  for (const auto& ep : episodes) {
    for (std::size_t i = 0; i < ep.size(); ++i) {
      OptionQuoteRow r;
      r.quote_date = ep.dates[i];
      r.expiry = ep.expiry;
      r.strike = ep.strike;
      r.best_bid = ep.mids[i];
      r.best_ask = ep.mids[i];
      r.mid = ep.mids[i];
      r.underlying_close = ep.closes[i];
      rows.push_back(r);
    }
  }
  return rows;
}

// --- Volatility and history ------------------------------------------------

double historical_vol(std::span<const double> closes, int window) {
  if (window < 2) throw ArgumentError("historical_vol: window must be >= 2");
  const auto need = static_cast<std::size_t>(window) + 1;
  if (closes.size() < need) {
    throw ArgumentError("historical_vol: need " + std::to_string(need) + " closes, got " +
                        std::to_string(closes.size()));
  }
  const auto tail = closes.subspan(closes.size() - need);
  std::vector<double> r(static_cast<std::size_t>(window));
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (!(tail[i] > 0.0) || !(tail[i + 1] > 0.0)) {
      throw DomainError("historical_vol: closes must be positive");
    }
    r[i] = std::log(tail[i + 1] / tail[i]);
  }
  double mean = 0.0;
  for (double v : r) mean += v;
  mean /= static_cast<double>(r.size());
  double ss = 0.0;
  for (double v : r) ss += (v - mean) * (v - mean);
  return std::sqrt(ss / static_cast<double>(r.size() - 1)) * std::sqrt(kTradingDaysPerYear);
}

UnderlierHistory history_from_rows(const std::vector<OptionQuoteRow>& rows) {
  UnderlierHistory h;
  for (const auto& r : rows) h.emplace(r.quote_date, r.underlying_close);
  return h;
}

UnderlierHistory load_history_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(path.string() + ": missing header");
  const auto header = csv::split_line(line);
  if (header.size() < 2 || header[0] != "date" || header[1] != "close") {
    throw SchemaError(path.string() + ": expected header 'date,close'");
  }
  UnderlierHistory h;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.empty() || line == "\r") continue;
    const auto f = csv::split_line(line);
    const auto close = f.size() >= 2 ? csv::parse_double(f[1]) : std::nullopt;
    if (!close || !(*close > 0.0)) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": bad close");
    }
    h[parse_date(f[0])] = *close;
  }
  return h;
}

void write_history_csv(const std::filesystem::path& path, const UnderlierHistory& history) {
  csv::Writer w(path);
  w.header({"date", "close"});
  for (const auto& [d, c] : history) {
    w.field(format_date(d)).field(c);
    w.end_row();
  }
  w.close();
}

void merge_history(UnderlierHistory& base, const UnderlierHistory& extra) {
  for (const auto& [d, c] : extra) base.emplace(d, c);
}

// --- Features ---------------------------------------------------------------

std::array<double, kResidualFeatureCount> residual_features(const FeatureVector& f) {
  return {f.tau, f.moneyness, f.sigma_impl, f.vega, f.theta, f.gamma, f.sigma_20, f.sigma_30};
}

FeaturedEpisode compute_features(const ChainEpisode& episode, const UnderlierHistory& history,
                                 const FeatureConfig& config) {
  FeaturedEpisode out;
  out.chain = episode;
  out.rows.resize(episode.size());
  if (episode.size() == 0) {
    out.flag = "empty contract";
    return out;
  }

  std::vector<double> closes;
  closes.reserve(history.size());
  auto it = history.begin();
  auto advance_to = [&](Date d) {
    for (; it != history.end() && it->first <= d; ++it) closes.push_back(it->second);
  };

  bool first_valid = false;
  bool has_history = true;
  double last_sigma = kNaN;
  for (std::size_t i = 0; i < episode.size(); ++i) {
    advance_to(episode.dates[i]);
    FeatureRow& row = out.rows[i];
    FeatureVector& f = row.features;
    const double spot = episode.closes[i];
    OptionSpec spec;
    spec.strike = episode.strike;
    spec.rate = config.rate;
    spec.time_to_maturity = years_from_days(episode.days_to_expiry[i], config.days_per_year);
    f.tau = spec.time_to_maturity;
    f.moneyness = spot / episode.strike;
    f.sigma_20 = closes.size() >= 21 ? historical_vol(closes, 20) : kNaN;
    f.sigma_30 = closes.size() >= 31 ? historical_vol(closes, 30) : kNaN;

    if (episode.days_to_expiry[i] == 0) {
      // No implied vol at expiry: carry the last one, greeks collapse.
      f.sigma_impl = last_sigma;
      f.delta = bs_delta(spot, spec, 0.0);
      row.valid = std::isfinite(last_sigma);
      if (!row.valid) row.flag = "expiry row without prior implied vol";
    } else {
      try {
        f.sigma_impl = implied_vol(episode.mids[i], spot, spec);
        const Greeks g = bs_greeks(spot, spec, f.sigma_impl);
        f.delta = g.delta;
        f.vega = g.vega;
        f.theta = g.theta;
        f.gamma = g.gamma;
        last_sigma = f.sigma_impl;
        row.valid = true;
      } catch (const Error& e) {
        row.flag = e.what();
        f.sigma_impl = last_sigma;
        if (std::isfinite(last_sigma)) {
          // The state still needs a vol; carry the last one and keep the row flagged.
          const Greeks g = bs_greeks(spot, spec, last_sigma);
          f.delta = g.delta;
          f.vega = g.vega;
          f.theta = g.theta;
          f.gamma = g.gamma;
          row.flag += " (implied vol carried)";
        }
      }
    }
    if (!(std::isfinite(f.sigma_20) && std::isfinite(f.sigma_30))) {
      row.valid = false;
      row.flag = "insufficient underlier history";
    }
    if (i == 0) first_valid = row.valid;
    has_history = has_history && std::isfinite(f.sigma_20) && std::isfinite(f.sigma_30);
  }

  const auto first = history.begin();
  const auto through_first =
      static_cast<int>(std::distance(first, history.upper_bound(episode.dates.front())));
  if (through_first < config.history_required || !has_history) {
    out.flag = "insufficient underlier history";
  } else if (episode.has_gap && !config.allow_gaps) {
    out.flag = "date gap";
  } else if (!first_valid) {
    out.flag = "no implied vol on the first row";
  } else if (episode.size() < 2) {
    out.flag = "fewer than 2 observations";
  } else {
    out.usable = true;
  }
  return out;
}

// --- Residual dataset -------------------------------------------------------

std::vector<std::vector<double>> pearson_matrix(const std::vector<std::vector<double>>& columns) {
  const std::size_t k = columns.size();
  std::vector<std::vector<double>> corr(k, std::vector<double>(k, kNaN));
  if (k == 0) return corr;
  const std::size_t n = columns.front().size();
  for (const auto& c : columns) {
    if (c.size() != n) throw ShapeError("pearson_matrix: columns differ in length");
  }
  std::vector<double> mean(k, 0.0), sd(k, 0.0);
  for (std::size_t a = 0; a < k; ++a) {
    for (double v : columns[a]) mean[a] += v;
    mean[a] /= static_cast<double>(n);
    for (double v : columns[a]) sd[a] += (v - mean[a]) * (v - mean[a]);
    sd[a] = std::sqrt(sd[a]);
  }
  for (std::size_t a = 0; a < k; ++a) {
    if (n < 2 || !(sd[a] > 0.0)) continue;
    corr[a][a] = 1.0;
    for (std::size_t b = a + 1; b < k; ++b) {
      if (!(sd[b] > 0.0)) continue;
      double s = 0.0;
      for (std::size_t i = 0; i < n; ++i) s += (columns[a][i] - mean[a]) * (columns[b][i] - mean[b]);
      const double r = std::clamp(s / (sd[a] * sd[b]), -1.0, 1.0);
      corr[a][b] = r;
      corr[b][a] = r;
    }
  }
  return corr;
}

ResidualDataset residual_dataset(const std::vector<FeaturedEpisode>& episodes) {
  ResidualDataset out;
  for (const auto& ep : episodes) {
    if (!ep.usable) continue;
    const auto& c = ep.chain;
    for (std::size_t t = 0; t + 1 < c.size(); ++t) {
      if (!ep.rows[t].valid) continue;
      const FeatureVector& f = ep.rows[t].features;
      const double ds = c.closes[t + 1] - c.closes[t];
      ResidualSample s;
      s.y = c.mids[t] - c.mids[t + 1] + f.delta * ds;
      const auto feats = residual_features(f);
      for (std::size_t k = 0; k < kResidualFeatureCount; ++k) s.x[k] = feats[k] * ds;
      out.samples.push_back(s);
    }
  }
  std::vector<std::vector<double>> columns(kResidualFeatureCount + 1);
  for (auto& col : columns) col.reserve(out.samples.size());
  for (const auto& s : out.samples) {
    columns[0].push_back(s.y);
    for (std::size_t k = 0; k < kResidualFeatureCount; ++k) columns[k + 1].push_back(s.x[k]);
  }
  out.correlation = pearson_matrix(columns);
  return out;
}

// --- Bridges ----------------------------------------------------------------

std::vector<HedgeEpisode> episodes_to_env(const std::vector<FeaturedEpisode>& episodes,
                                          Settlement settlement) {
  std::vector<HedgeEpisode> out;
  for (const auto& fe : episodes) {
    if (!fe.usable) continue;
    const auto& c = fe.chain;
    if (settlement == Settlement::intrinsic_at_expiry && c.days_to_expiry.back() != 0) continue;

    HedgeEpisode ep;
    ep.simulated = false;
    ep.steps_per_day = 1;
    const std::size_t n = c.size();
    ep.days_per_year = kDefaultDaysPerYear;
    ep.path.times.resize(n);
    ep.path.prices = c.closes;
    ep.option_prices = c.mids;
    ep.taus.resize(n);
    ep.implied_vols.resize(n);
    ep.hist_vol_20.resize(n);
    ep.hist_vol_30.resize(n);
    for (std::size_t i = 0; i < n; ++i) {
      ep.path.times[i] =
          static_cast<double>((c.dates[i] - c.dates.front()).count()) / ep.days_per_year;
      ep.taus[i] = fe.rows[i].features.tau;
      ep.implied_vols[i] = fe.rows[i].features.sigma_impl;
      ep.hist_vol_20[i] = fe.rows[i].features.sigma_20;
      ep.hist_vol_30[i] = fe.rows[i].features.sigma_30;
    }
    if (settlement == Settlement::intrinsic_at_expiry) {
      ep.option_prices.back() = std::max(c.closes.back() - c.strike, 0.0);
    }
    ep.spec.strike = c.strike;
    ep.spec.time_to_maturity = ep.taus.front();
    ep.spec.rate = 0.0;
    ep.premium = ep.option_prices.front();
    out.push_back(std::move(ep));
  }
  return out;
}

std::vector<OptionQuoteRow> episode_to_chain(const HedgeEpisode& episode, Date start) {
  if (episode.steps_per_day != 1) {
    throw ArgumentError("episode_to_chain: only daily episodes map to a daily chain");
  }
  const auto total_days = static_cast<int>(std::lround(episode.taus.front() * episode.days_per_year));
  const Date expiry = start + std::chrono::days{total_days};
  std::vector<OptionQuoteRow> rows;
  rows.reserve(episode.nodes());
  for (std::size_t i = 0; i < episode.nodes(); ++i) {
    OptionQuoteRow r;
    r.quote_date = start + std::chrono::days{static_cast<int>(i)};
    r.expiry = expiry;
    r.strike = episode.spec.strike;
    r.best_bid = episode.option_prices[i];
    r.best_ask = episode.option_prices[i];
    r.mid = episode.option_prices[i];
    r.underlying_close = episode.path.prices[i];
    rows.push_back(r);
  }
  return rows;
}

UnderlierHistory episode_history(const HedgeEpisode& episode, Date start) {
  UnderlierHistory h;
  const auto& closes = episode.history_closes;
  const auto n = static_cast<int>(closes.size());
  for (int i = 0; i < n; ++i) {
    h.emplace(start - std::chrono::days{n - 1 - i}, closes[static_cast<std::size_t>(i)]);
  }
  return h;
}

}  // namespace hedgekit::data

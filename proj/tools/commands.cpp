#include "commands.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>

#include "hedgekit/csv.hpp"
#include "hedgekit/errors.hpp"
#include "hedgekit/evaluation.hpp"

namespace hedgekit::cli {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

void ensure_dir(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create '" + dir.string() + "': " + ec.message());
}

void write_json(const std::filesystem::path& path, const nlohmann::json& doc) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << doc.dump(2) << '\n';
  if (!out) throw IoError("failed writing '" + path.string() + "'");
}

nlohmann::json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  try {
    nlohmann::json doc;
    in >> doc;
    return doc;
  } catch (const nlohmann::json::exception& e) {
    throw FormatError("'" + path.string() + "': " + e.what());
  }
}

nlohmann::json nullable(const std::vector<double>& v) {
  nlohmann::json a = nlohmann::json::array();
  for (double x : v) a.push_back(std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr));
  return a;
}

std::vector<double> from_nullable(const nlohmann::json& a) {
  std::vector<double> v;
  v.reserve(a.size());
  for (const auto& x : a) v.push_back(x.is_null() ? kNaN : x.get<double>());
  return v;
}

std::vector<HedgeEpisode> simulated_episodes(const RunConfig& config, Stream stream,
                                             std::size_t count) {
  return generate_episodes(config.market, config.episode, stream_seed(config, stream), count);
}

agent::TrainResult load_checkpoint(const std::filesystem::path& dir) {
  if (!std::filesystem::is_directory(dir)) {
    throw IoError("checkpoint '" + dir.string() + "' is not a directory");
  }
  return agent::load_bundle(dir);
}

void write_heatmap(const std::filesystem::path& path, const eval::HeatmapGrid& g) {
  csv::Writer w(path);
  w.header({"moneyness", "tau_days", "value", "count"});
  for (std::size_t i = 0; i < g.moneyness.size(); ++i) {
    for (std::size_t j = 0; j < g.tau_days.size(); ++j) {
      w.field(g.moneyness[i]).field(g.tau_days[j]);
      if (g.missing(i, j)) {
        w.empty_field();
      } else {
        w.field(g.values[i][j]);
      }
      w.field(g.counts[i][j]);
      w.end_row();
    }
  }
  w.close();
}

std::vector<double> moneyness_grid(const RunConfig& c) {
  return eval::make_grid(c.grid.moneyness_lo, c.grid.moneyness_hi, c.grid.moneyness_step);
}

std::vector<double> tau_grid(const RunConfig& c) {
  return eval::make_grid(c.grid.tau_lo, c.grid.tau_hi, c.grid.tau_step);
}

}  // namespace

// --- Episode store ----------------------------------------------------------

nlohmann::json episodes_to_json(const std::vector<HedgeEpisode>& episodes) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& ep : episodes) {
    out.push_back({{"strike", ep.spec.strike},
                   {"rate", ep.spec.rate},
                   {"steps_per_day", ep.steps_per_day},
                   {"days_per_year", ep.days_per_year},
                   {"simulated", ep.simulated},
                   {"seed", ep.path.seed},
                   {"times", ep.path.times},
                   {"prices", ep.path.prices},
                   {"option_prices", ep.option_prices},
                   {"taus", ep.taus},
                   {"implied_vols", nullable(ep.implied_vols)},
                   {"hist_vol_20", nullable(ep.hist_vol_20)},
                   {"hist_vol_30", nullable(ep.hist_vol_30)}});
  }
  return {{"format_version", 1}, {"episodes", out}};
}

std::vector<HedgeEpisode> episodes_from_json(const nlohmann::json& doc) {
  std::vector<HedgeEpisode> out;
  try {
    for (const auto& e : doc.at("episodes")) {
      HedgeEpisode ep;
      ep.spec.strike = e.at("strike").get<double>();
      ep.spec.rate = e.at("rate").get<double>();
      ep.steps_per_day = e.at("steps_per_day").get<int>();
      ep.days_per_year = e.at("days_per_year").get<double>();
      ep.simulated = e.at("simulated").get<bool>();
      ep.path.seed = e.at("seed").get<std::uint64_t>();
      ep.path.times = e.at("times").get<std::vector<double>>();
      ep.path.prices = e.at("prices").get<std::vector<double>>();
      ep.option_prices = e.at("option_prices").get<std::vector<double>>();
      ep.taus = e.at("taus").get<std::vector<double>>();
      ep.implied_vols = from_nullable(e.at("implied_vols"));
      ep.hist_vol_20 = from_nullable(e.at("hist_vol_20"));
      ep.hist_vol_30 = from_nullable(e.at("hist_vol_30"));
      const std::size_t n = ep.path.prices.size();
      if (n < 2 || ep.path.times.size() != n || ep.option_prices.size() != n ||
          ep.taus.size() != n || ep.implied_vols.size() != n || ep.hist_vol_20.size() != n ||
          ep.hist_vol_30.size() != n) {
        throw FormatError("episode store: inconsistent series lengths");
      }
      ep.spec.time_to_maturity = ep.taus.front();
      ep.premium = ep.option_prices.front();
      out.push_back(std::move(ep));
    }
  } catch (const nlohmann::json::exception& e) {
    throw FormatError(std::string("malformed episode store: ") + e.what());
  }
  return out;
}

// --- simulate ---------------------------------------------------------------

void cmd_simulate(const RunConfig& config, const SimulateOptions& options) {
  config.validate();
  const std::size_t n = options.episodes.value_or(config.simulate_episodes);
  if (options.chain && config.episode.steps_per_day != 1) {
    throw ConfigError("--chain needs steps_per_day = 1");
  }
  const std::filesystem::path dir = config.output_dir / "episodes";
  ensure_dir(config.output_dir);
  if (n > 0) ensure_dir(dir);

  nlohmann::json manifest;
  manifest["provenance"] = provenance(config, "simulate");
  manifest["episodes"] = nlohmann::json::array();
  std::vector<data::OptionQuoteRow> chain_rows;
  data::UnderlierHistory history;
  const auto start = data::parse_date("2020-01-01");

  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t seed = derive_seed(stream_seed(config, Stream::simulate), i);
    const HedgeEpisode ep = generate_episode(config.market, config.episode, seed);
    char name[48];
    std::snprintf(name, sizeof name, "episode_%05zu.csv", i);
    csv::Writer w(dir / name);
    w.header({"step", "time", "spot", "option_price", "tau", "implied_vol", "hist_vol_20",
              "hist_vol_30"});
    for (std::size_t t = 0; t < ep.nodes(); ++t) {
      w.field(t).field(ep.path.times[t]).field(ep.path.prices[t]).field(ep.option_prices[t]);
      w.field(ep.taus[t]).field(ep.implied_vols[t]).field(ep.hist_vol_20[t]).field(ep.hist_vol_30[t]);
      w.end_row();
    }
    w.close();
    manifest["episodes"].push_back({{"index", i}, {"seed", seed}, {"file", std::string("episodes/") + name}});

    if (options.chain) {
      // Contracts and their pre-histories occupy disjoint date ranges, so
      // every date carries a single underlier close.
      const int spacing = config.episode.maturity_days + config.episode.history_days + 10;
      const auto ep_start = start + std::chrono::days{static_cast<int>(i) * spacing};
      for (auto& r : data::episode_to_chain(ep, ep_start)) chain_rows.push_back(r);
      data::merge_history(history, data::episode_history(ep, ep_start));
    }
  }
  if (options.chain) {
    data::write_chain_csv(config.output_dir / "chain.csv", chain_rows);
    data::write_history_csv(config.output_dir / "history.csv", history);
  }
  write_json(config.output_dir / "manifest.json", manifest);
}

// --- train ------------------------------------------------------------------

Variant variant_from_string(const std::string& name) {
  if (name == "ddpg") return Variant::ddpg;
  if (name == "ddpg-uncertainty") return Variant::ddpg_uncertainty;
  throw ConfigError("unknown variant '" + name + "' (expected ddpg or ddpg-uncertainty)");
}

std::string to_string(Variant v) { return v == Variant::ddpg ? "ddpg" : "ddpg-uncertainty"; }

agent::TrainConfig variant_config(const RunConfig& config, Variant variant) {
  agent::TrainConfig t = config.train_config();
  if (variant == Variant::ddpg) {
    t.learn_log_var = false;
    t.dropout = 0.0;
    t.epistemic_penalty = 0.0;
  } else {
    t.learn_log_var = true;
  }
  return t;
}

void cmd_train(const RunConfig& config, const TrainOptions& options) {
  config.validate();
  const agent::TrainConfig tc = variant_config(config, options.variant);
  tc.validate();
  const std::uint64_t episode_root = stream_seed(config, Stream::train_episodes);
  const auto factory = [&](std::size_t i) {
    return generate_episode(config.market, config.episode, derive_seed(episode_root, i));
  };
  const agent::TrainResult result =
      agent::train(factory, tc, CostModel{config.cost_rate}, stream_seed(config, Stream::agent));
  nlohmann::json prov = provenance(config, "train");
  prov["variant"] = to_string(options.variant);
  agent::save_bundle(result, config.output_dir, prov);
}

// --- evaluate ---------------------------------------------------------------

void cmd_evaluate(const RunConfig& config, const EvaluateOptions& options) {
  config.validate();
  std::vector<eval::NamedPolicy> strategies{{"delta", eval::delta_policy()}};
  if (options.include_no_hedge) strategies.push_back({"no-hedge", eval::no_hedge_policy()});
  for (const auto& [name, path] : options.checkpoints) {
    if (name == "delta" || name == "no-hedge") {
      throw ConfigError("checkpoint name '" + name + "' is reserved for a baseline");
    }
    strategies.push_back({name, agent::make_policy(load_checkpoint(path).actor)});
  }

  std::vector<HedgeEpisode> episodes;
  if (options.episode_store) {
    episodes = episodes_from_json(read_json(*options.episode_store));
  } else {
    episodes = simulated_episodes(config, Stream::eval, config.eval_episodes);
  }
  const CostModel cost{config.cost_rate};

  std::vector<eval::PnlReport> reports;
  for (const auto& s : strategies) {
    reports.push_back(options.per_step ? eval::per_step_report(s.policy, episodes, cost)
                                       : eval::evaluate_policy(s.policy, episodes, cost));
  }
  ensure_dir(config.output_dir);

  const double delta_mean = reports.front().mean;
  csv::Writer table(config.output_dir / "strategy_table.csv");
  table.header({"name", "mean", "variance", "gain_vs_delta", "n"});
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    const auto& r = reports[i];
    table.field(strategies[i].name).field(r.mean).field(r.variance);
    table.field(i == 0 ? 0.0 : r.mean - delta_mean).field(r.n);
    table.end_row();
  }
  table.close();

  nlohmann::json doc;
  doc["provenance"] = provenance(config, "evaluate");
  doc["episode_source"] = options.episode_store ? options.episode_store->generic_string() : "simulated";
  doc["strategies"] = nlohmann::json::object();
  for (std::size_t i = 0; i < strategies.size(); ++i) {
    nlohmann::json r = eval::to_json(reports[i]);
    r.erase("histogram");
    doc["strategies"][strategies[i].name] = r;
  }
  write_json(config.output_dir / "pnl_report.json", doc);

  csv::Writer hist(config.output_dir / "histogram.csv");
  std::vector<std::string> cols{"lo", "hi"};
  for (const auto& s : strategies) cols.push_back(s.name);
  hist.header(cols);
  const auto& edges = reports.front().histogram.edges;
  for (std::size_t b = 0; b + 1 < edges.size(); ++b) {
    hist.field(edges[b]).field(edges[b + 1]);
    for (const auto& r : reports) hist.field(r.histogram.counts[b]);
    hist.end_row();
  }
  hist.close();

  if (options.dump_trajectories) {
    csv::Writer tr(config.output_dir / "trajectories.csv");
    tr.header({"strategy", "episode", "step", "spot", "option_price", "tau", "position", "action",
               "reward"});
    for (const auto& s : strategies) {
      for (std::size_t e = 0; e < episodes.size(); ++e) {
        const RolloutResult r = rollout(episodes[e], s.policy, cost);
        for (std::size_t t = 0; t < r.transitions.size(); ++t) {
          const auto& x = r.transitions[t];
          tr.field(s.name).field(e).field(t).field(x.state.spot);
          tr.field(episodes[e].option_prices[t]).field(x.state.tau).field(x.state.position);
          tr.field(x.action).field(x.reward);
          tr.end_row();
        }
      }
    }
    tr.close();
  }
}

// --- ingest -----------------------------------------------------------------

void cmd_ingest(const RunConfig& config, const IngestOptions& options) {
  config.validate();
  const data::ChainLoad load = data::load_chain_csv(options.chain);
  data::UnderlierHistory history = data::history_from_rows(load.rows);
  if (options.history) data::merge_history(history, data::load_history_csv(*options.history));

  const auto contracts = data::filter_universe(load.rows, config.ingest.filter);
  data::FeatureConfig fc;
  fc.allow_gaps = config.ingest.allow_gaps;
  std::vector<data::FeaturedEpisode> featured;
  featured.reserve(contracts.size());
  for (const auto& c : contracts) featured.push_back(data::compute_features(c, history, fc));
  const auto env = data::episodes_to_env(featured, config.ingest.settlement);
  const auto residuals = data::residual_dataset(featured);

  ensure_dir(config.output_dir);
  data::write_rejects_csv(config.output_dir / "rejects.csv", load.rejects);

  csv::Writer f(config.output_dir / "features.csv");
  f.header({"expiry", "strike", "quote_date", "days_to_expiry", "mid", "underlying_close", "tau",
            "moneyness", "sigma_impl", "delta", "vega", "theta", "gamma", "sigma_20", "sigma_30",
            "valid", "flag"});
  for (const auto& fe : featured) {
    const auto& c = fe.chain;
    for (std::size_t i = 0; i < c.size(); ++i) {
      const auto& row = fe.rows[i];
      const auto& v = row.features;
      f.field(data::format_date(c.expiry)).field(c.strike).field(data::format_date(c.dates[i]));
      f.field(c.days_to_expiry[i]).field(c.mids[i]).field(c.closes[i]);
      f.field(v.tau).field(v.moneyness).field(v.sigma_impl).field(v.delta).field(v.vega);
      f.field(v.theta).field(v.gamma).field(v.sigma_20).field(v.sigma_30);
      f.field(row.valid ? 1 : 0).field(row.flag.empty() ? fe.flag : row.flag);
      f.end_row();
    }
  }
  f.close();

  csv::Writer r(config.output_dir / "residuals.csv");
  std::vector<std::string> cols{"y"};
  for (auto name : data::kResidualFeatureNames) cols.push_back("x_" + std::string(name));
  r.header(cols);
  for (const auto& s : residuals.samples) {
    r.field(s.y);
    for (double x : s.x) r.field(x);
    r.end_row();
  }
  r.close();

  csv::Writer corr(config.output_dir / "correlation.csv");
  std::vector<std::string> ccols{"variable"};
  ccols.insert(ccols.end(), cols.begin(), cols.end());
  corr.header(ccols);
  for (std::size_t a = 0; a < residuals.correlation.size(); ++a) {
    corr.field(cols[a]);
    for (double v : residuals.correlation[a]) {
      if (std::isfinite(v)) {
        corr.field(v);
      } else {
        corr.empty_field();
      }
    }
    corr.end_row();
  }
  corr.close();

  write_json(config.output_dir / "episodes.json", episodes_to_json(env));

  std::size_t usable = 0;
  nlohmann::json flagged = nlohmann::json::array();
  for (const auto& fe : featured) {
    if (fe.usable) {
      ++usable;
    } else {
      flagged.push_back({{"expiry", data::format_date(fe.chain.expiry)},
                         {"strike", fe.chain.strike},
                         {"reason", fe.flag}});
    }
  }
  nlohmann::json report;
  report["provenance"] = provenance(config, "ingest");
  report["source"] = options.chain.generic_string();
  report["rows_in"] = load.data_lines;
  report["rows_parsed"] = load.rows.size();
  report["rows_rejected"] = load.rejects.size();
  report["contracts_kept"] = contracts.size();
  report["contracts_usable"] = usable;
  report["episodes"] = env.size();
  report["residual_samples"] = residuals.samples.size();
  report["flagged_contracts"] = flagged;
  report["annualization"] = {{"historical_vol", data::kTradingDaysPerYear},
                             {"tau", kDefaultDaysPerYear}};
  write_json(config.output_dir / "ingest_report.json", report);
}

// --- heatmap / calibrate ---------------------------------------------------

void cmd_heatmap(const RunConfig& config, const HeatmapOptions& options) {
  config.validate();
  const agent::TrainResult bundle = load_checkpoint(options.checkpoint);
  const auto m = moneyness_grid(config);
  const auto tau = tau_grid(config);
  const double vol = config.market.vol;

  const auto model = eval::uncertainty_heatmap(bundle.actor, m, tau, vol, config.market.initial_price);
  const auto epistemic =
      eval::epistemic_heatmap(bundle.actor, bundle.critic, m, tau, vol, config.mc_passes_eval,
                              stream_seed(config, Stream::mc), config.market.initial_price);
  const auto episodes = simulated_episodes(config, Stream::eval, config.eval_episodes);
  const auto realized = eval::realized_variance_heatmap(eval::delta_policy(), episodes,
                                                        CostModel{config.cost_rate}, m, tau);
  ensure_dir(config.output_dir);
  write_heatmap(config.output_dir / "heatmap_model.csv", model);
  write_heatmap(config.output_dir / "heatmap_epistemic.csv", epistemic);
  write_heatmap(config.output_dir / "heatmap_realized.csv", realized);
  nlohmann::json doc;
  doc["provenance"] = provenance(config, "heatmap");
  doc["checkpoint"] = options.checkpoint.generic_string();
  doc["grid"] = {{"moneyness", m.size()}, {"tau_days", tau.size()}};
  doc["realized_policy"] = "delta";
  write_json(config.output_dir / "heatmap_report.json", doc);
}

void cmd_calibrate(const RunConfig& config, const CalibrateOptions& options) {
  config.validate();
  const std::size_t wanted = options.samples.value_or(config.calibration_samples);
  if (wanted < static_cast<std::size_t>(config.calibration_bins)) {
    throw ArgumentError("calibration needs at least " + std::to_string(config.calibration_bins) +
                        " samples, got " + std::to_string(wanted));
  }
  const agent::TrainResult bundle = load_checkpoint(options.checkpoint);
  const std::size_t steps = static_cast<std::size_t>(config.episode.maturity_days) *
                            static_cast<std::size_t>(config.episode.steps_per_day);
  const std::size_t n_episodes = (wanted + steps - 1) / steps;
  const auto episodes = simulated_episodes(config, Stream::calibration, n_episodes);
  auto samples = eval::collect_calibration_samples(bundle.actor, episodes, CostModel{config.cost_rate});
  samples.sigma2.resize(wanted);
  samples.rewards.resize(wanted);
  const auto rep = eval::calibration_bins(samples.sigma2, samples.rewards, config.calibration_bins);

  ensure_dir(config.output_dir);
  csv::Writer w(config.output_dir / "calibration.csv");
  w.header({"bin", "lo", "hi", "n", "mean_sigma2", "realized_var"});
  for (std::size_t b = 0; b < rep.bins.size(); ++b) {
    const auto& bin = rep.bins[b];
    w.field(b).field(bin.lo).field(bin.hi).field(bin.n).field(bin.mean_sigma2).field(bin.realized_var);
    w.end_row();
  }
  w.close();
  nlohmann::json doc;
  doc["provenance"] = provenance(config, "calibrate");
  doc["checkpoint"] = options.checkpoint.generic_string();
  doc["n"] = rep.n;
  doc["spearman"] = rep.defined() ? nlohmann::json(rep.spearman) : nlohmann::json(nullptr);
  bool tied = false;
  for (const auto& b : rep.bins) tied = tied || b.tied_boundary;
  doc["degenerate_bins"] = tied;
  write_json(config.output_dir / "calibration_report.json", doc);
}

}  // namespace hedgekit::cli

// Experiment runner. Subcommands: run (per-trial mechanism rows), solve-lp
// (optimal schedule), attack (manipulation reports), montecarlo (summary
// statistics vs analytic targets), check (the property suite). Exit codes:
// 0 success, 2 usage or configuration error, 1 invariant violation.

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <limits>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <CLI11.hpp>

#include "tfrm/adversary.hpp"
#include "tfrm/core.hpp"
#include "tfrm/json_io.hpp"
#include "tfrm/mechanisms.hpp"
#include "tfrm/metrics.hpp"
#include "tfrm/rebate_lp.hpp"
#include "tfrm/sampling.hpp"
#include "tfrm/simplex.hpp"

namespace {

using tfrm::json;

// Configuration problems exit with 2, broken mechanism-level invariants
// with 1; CLI11 parse failures also map to 2.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct InvariantError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

constexpr double kResidualTol = 1e-9;
constexpr std::uint64_t kDefaultSeed = 12345;

// ---- configuration ----

enum class Mechanism { Spa, RTfrm, R2Tfrm };

struct ProfileSource {
  bool from_file = false;
  tfrm::BidProfile fixed;        // when from_file
  tfrm::Distribution dist;       // otherwise
  std::size_t mempool_size = 0;  // draws per trial; defaults to n
};

struct Config {
  json raw = json::object();

  Mechanism mechanism = Mechanism::RTfrm;
  tfrm::MechanismParams params{0, 0, 1.0};
  ProfileSource source;
  std::size_t trials = 1;
  std::uint64_t seed = kDefaultSeed;
  std::string out_path;  // empty writes to stdout
  std::string format = "json";
};

Mechanism parse_mechanism(const std::string& name) {
  if (name == "spa") return Mechanism::Spa;
  if (name == "r-tfrm") return Mechanism::RTfrm;
  if (name == "r2-tfrm") return Mechanism::R2Tfrm;
  throw UsageError("mechanism must be spa, r-tfrm, or r2-tfrm, got '" + name +
                   "'");
}

const char* mechanism_name(Mechanism m) {
  switch (m) {
    case Mechanism::Spa:
      return "spa";
    case Mechanism::RTfrm:
      return "r-tfrm";
    case Mechanism::R2Tfrm:
      return "r2-tfrm";
  }
  return "?";
}

json load_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file: " + path);
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config is not valid JSON: " + std::string(e.what()));
  }
}

double number_field(const json& j, const std::string& field, double fallback,
                    bool required) {
  if (!j.contains(field)) {
    if (required) throw UsageError("config field '" + field + "' is required");
    return fallback;
  }
  if (!j.at(field).is_number()) {
    throw UsageError("config field '" + field + "' must be a number");
  }
  return j.at(field).get<double>();
}

long long int_field(const json& j, const std::string& field,
                    long long fallback, bool required) {
  if (!j.contains(field)) {
    if (required) throw UsageError("config field '" + field + "' is required");
    return fallback;
  }
  if (!j.at(field).is_number_integer()) {
    throw UsageError("config field '" + field + "' must be an integer");
  }
  return j.at(field).get<long long>();
}

std::string string_field(const json& j, const std::string& field,
                         const std::string& fallback, bool required) {
  if (!j.contains(field)) {
    if (required) throw UsageError("config field '" + field + "' is required");
    return fallback;
  }
  if (!j.at(field).is_string()) {
    throw UsageError("config field '" + field + "' must be a string");
  }
  return j.at(field).get<std::string>();
}

ProfileSource parse_source(const json& raw, int n) {
  ProfileSource source;
  source.mempool_size = static_cast<std::size_t>(n);
  if (!raw.contains("distribution")) {
    source.dist = tfrm::Distribution::parse("uniform", 0.0, 1.0);
    return source;
  }
  const json& d = raw.at("distribution");
  if (!d.is_object()) {
    throw UsageError("config field 'distribution' must be an object");
  }
  const std::string type = string_field(d, "type", "", true);
  if (type == "file") {
    source.from_file = true;
    if (d.contains("bids")) {
      try {
        source.fixed = tfrm::bid_profile_from_json(d);
      } catch (const std::exception& e) {
        throw UsageError(std::string("distribution.bids: ") + e.what());
      }
    } else {
      const std::string path = string_field(d, "path", "", true);
      std::ifstream in(path);
      if (!in) throw UsageError("cannot open profile file: " + path);
      try {
        source.fixed = tfrm::bid_profile_from_json(json::parse(in));
      } catch (const std::exception& e) {
        throw UsageError("profile file '" + path + "': " + e.what());
      }
    }
    source.mempool_size = source.fixed.bids.size();
  } else if (type == "uniform") {
    source.dist = tfrm::Distribution::parse(
        type, number_field(d, "a", 0.0, false), number_field(d, "b", 1.0, false));
  } else if (type == "normal" || type == "lognormal") {
    source.dist = tfrm::Distribution::parse(type,
                                            number_field(d, "mu", 0.0, false),
                                            number_field(d, "sigma", 1.0, false));
  } else {
    throw UsageError("distribution.type must be uniform, normal, lognormal, "
                     "or file, got '" + type + "'");
  }
  if (d.contains("mempool_size")) {
    const long long m = int_field(d, "mempool_size", n, false);
    if (m < n) throw UsageError("mempool_size must be at least n");
    source.mempool_size = static_cast<std::size_t>(m);
  }
  return source;
}

struct CliOverrides {
  std::string config_path;
  std::string out_path;
  std::string format;
  std::optional<std::uint64_t> seed;
};

Config parse_config(const CliOverrides& cli, bool needs_mechanism) {
  Config cfg;
  if (!cli.config_path.empty()) cfg.raw = load_config_file(cli.config_path);
  const json& raw = cfg.raw;

  if (needs_mechanism) {
    cfg.mechanism =
        parse_mechanism(string_field(raw, "mechanism", "r-tfrm", false));
    const long long n = int_field(raw, "n", 0, true);
    const long long k = int_field(raw, "k", 0, true);
    if (n < 2 || n > 10000) throw UsageError("config field 'n' out of range");
    if (k < 1 || k >= n) throw UsageError("config field 'k' out of range");
    cfg.params.n = static_cast<int>(n);
    cfg.params.k = static_cast<int>(k);
    cfg.params.alpha = number_field(raw, "alpha", 1.0, false);
    try {
      cfg.params.validate(cfg.mechanism != Mechanism::Spa);
    } catch (const std::invalid_argument& e) {
      throw UsageError(e.what());
    }
    cfg.source = parse_source(raw, cfg.params.n);
    if (cfg.source.from_file &&
        cfg.source.fixed.bids.size() < static_cast<std::size_t>(cfg.params.n)) {
      throw UsageError("profile has fewer bids than block size n");
    }
  }

  const long long trials = int_field(raw, "trials", 1, false);
  if (trials < 1) throw UsageError("config field 'trials' must be at least 1");
  cfg.trials = static_cast<std::size_t>(trials);

  const long long seed = int_field(raw, "seed", kDefaultSeed, false);
  cfg.seed = static_cast<std::uint64_t>(seed);
  if (cli.seed) cfg.seed = *cli.seed;

  if (raw.contains("output")) {
    const json& out = raw.at("output");
    if (!out.is_object()) throw UsageError("config field 'output' must be an object");
    cfg.out_path = string_field(out, "path", "", false);
    cfg.format = string_field(out, "format", "json", false);
  }
  if (!cli.out_path.empty()) cfg.out_path = cli.out_path;
  if (!cli.format.empty()) cfg.format = cli.format;
  if (cfg.format != "csv" && cfg.format != "json") {
    throw UsageError("format must be csv or json, got '" + cfg.format + "'");
  }
  return cfg;
}

// ---- deterministic formatting ----

std::string fmt(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

std::string join(const std::vector<double>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += '|';
    out += fmt(values[i]);
  }
  return out;
}

std::string join_indices(const std::vector<std::size_t>& values) {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(values[i]);
  }
  return out;
}

std::string join_fakes(const std::vector<tfrm::FakeBid>& fakes) {
  std::string out;
  for (std::size_t i = 0; i < fakes.size(); ++i) {
    if (i) out += '|';
    out += std::to_string(fakes[i].slot) + ':' + fmt(fakes[i].value);
  }
  return out;
}

void emit(const Config& cfg, const std::string& text) {
  if (cfg.out_path.empty()) {
    std::cout << text;
    return;
  }
  std::ofstream out(cfg.out_path, std::ios::binary);
  if (!out) throw UsageError("cannot open output file: " + cfg.out_path);
  out << text;
}

// ---- deterministic parallel trials ----

// fn(trial) must touch only its own slot; results stay ordered by index.
template <typename Fn>
void for_each_trial(std::size_t trials, Fn&& fn) {
  const unsigned hw = std::thread::hardware_concurrency();
  if (trials < 512 || hw < 2) {
    for (std::size_t t = 0; t < trials; ++t) fn(t);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  auto worker = [&] {
    for (;;) {
      const std::size_t t = next.fetch_add(1);
      if (t >= trials) return;
      try {
        fn(t);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mutex);
        if (!failure) failure = std::current_exception();
        return;
      }
    }
  };
  std::vector<std::thread> pool;
  const unsigned workers = std::min(hw, 16u);
  pool.reserve(workers);
  for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (failure) std::rethrow_exception(failure);
}

// ---- shared mechanism plumbing ----

tfrm::RebateCoefficients schedule_for(const Config& cfg) {
  if (cfg.mechanism == Mechanism::Spa) {
    tfrm::RebateCoefficients zero;
    zero.c.assign(cfg.params.n, 0.0);
    zero.f = 0.0;
    return zero;
  }
  return tfrm::RebateCoefficients::optimal(cfg.params);
}

tfrm::BidProfile profile_for_trial(const Config& cfg, std::uint64_t trial_seed) {
  if (cfg.source.from_file) return cfg.source.fixed;
  return tfrm::sample_profile(cfg.source.dist, cfg.source.mempool_size,
                              trial_seed);
}

// The profile sampler consumes the trial seed's stream directly, so the
// beacon must run on a separately derived seed or grants would correlate
// with bid magnitudes.
tfrm::RandomnessBeacon beacon_for(std::uint64_t trial_seed) {
  return tfrm::RandomnessBeacon(tfrm::derive_seed(trial_seed, 1));
}

tfrm::Outcome run_mechanism(const Config& cfg, const tfrm::BidProfile& profile,
                            const tfrm::RebateCoefficients& coeffs,
                            std::uint64_t trial_seed) {
  switch (cfg.mechanism) {
    case Mechanism::Spa:
      return tfrm::spa_tfm(profile, cfg.params);
    case Mechanism::RTfrm:
      return tfrm::r_tfrm(profile, cfg.params, coeffs);
    case Mechanism::R2Tfrm:
      return tfrm::r2_tfrm(profile, cfg.params, coeffs,
                           beacon_for(trial_seed));
  }
  throw std::logic_error("unreachable mechanism");
}

// Identity and feasibility a row must satisfy; the residual is measured on
// the full schedule, which the realized randomized rebates never exceed.
double row_residual(const Config& cfg, const tfrm::Outcome& out) {
  if (cfg.mechanism == Mechanism::Spa) {
    double sum = 0.0;
    for (double r : out.rebates) sum += r;
    return std::abs(sum);
  }
  const int n = cfg.params.n;
  const int k = cfg.params.k;
  const tfrm::RebateCoefficients coeffs =
      tfrm::RebateCoefficients::optimal(cfg.params);
  double scheduled = 0.0;
  for (int s = 0; s < n; ++s) {
    scheduled += tfrm::evaluate_rebate(coeffs, out.included_bids,
                                       static_cast<std::size_t>(s));
  }
  const double b_k = out.included_bids[k - 1];
  const double b_k1 = out.included_bids[k];
  const double closed = static_cast<double>(k) / n * (k * b_k1 + (n - k) * b_k);
  double realized = 0.0;
  for (double r : out.rebates) realized += r;
  if (realized > scheduled + kResidualTol) {
    throw InvariantError("granted rebates exceed the scheduled total");
  }
  return std::abs(scheduled - closed);
}

// ---- run ----

struct RunRow {
  std::uint64_t seed = 0;
  tfrm::Outcome outcome;
  double total_rebate = 0.0;
  double residual = 0.0;
};

int cmd_run(const CliOverrides& cli) {
  const Config cfg = parse_config(cli, /*needs_mechanism=*/true);
  const tfrm::RebateCoefficients coeffs = schedule_for(cfg);

  std::vector<RunRow> rows(cfg.trials);
  for_each_trial(cfg.trials, [&](std::size_t t) {
    RunRow& row = rows[t];
    row.seed = tfrm::derive_seed(cfg.seed, t);
    const tfrm::BidProfile profile = profile_for_trial(cfg, row.seed);
    row.outcome = run_mechanism(cfg, profile, coeffs, row.seed);
    for (double r : row.outcome.rebates) row.total_rebate += r;
    row.residual = row_residual(cfg, row.outcome);
    if (row.residual >= kResidualTol) {
      throw InvariantError("rebate identity residual " + fmt(row.residual) +
                           " breaches " + fmt(kResidualTol) + " at trial " +
                           std::to_string(t));
    }
  });

  if (cfg.format == "csv") {
    std::string text =
        "trial,n,k,alpha,mechanism,bids,payments,rebates,confirmed_count,"
        "total_rebate,miner_revenue,eq3_residual\n";
    for (std::size_t t = 0; t < rows.size(); ++t) {
      const RunRow& row = rows[t];
      text += std::to_string(t) + ',' + std::to_string(cfg.params.n) + ',' +
              std::to_string(cfg.params.k) + ',' + fmt(cfg.params.alpha) +
              ',' + mechanism_name(cfg.mechanism) + ',' +
              join(row.outcome.included_bids) + ',' +
              join(row.outcome.payments) + ',' + join(row.outcome.rebates) +
              ',' + std::to_string(row.outcome.confirmed_count) + ',' +
              fmt(row.total_rebate) + ',' + fmt(row.outcome.miner_revenue) +
              ',' + fmt(row.residual) + '\n';
    }
    emit(cfg, text);
  } else {
    json doc;
    doc["mechanism"] = mechanism_name(cfg.mechanism);
    doc["n"] = cfg.params.n;
    doc["k"] = cfg.params.k;
    doc["alpha"] = cfg.params.alpha;
    doc["trials"] = cfg.trials;
    doc["seed"] = cfg.seed;
    json out_rows = json::array();
    for (std::size_t t = 0; t < rows.size(); ++t) {
      json r = tfrm::to_json(rows[t].outcome);
      r["trial"] = t;
      r["trial_seed"] = rows[t].seed;
      r["total_rebate"] = rows[t].total_rebate;
      r["eq3_residual"] = rows[t].residual;
      out_rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(out_rows);
    emit(cfg, doc.dump(2) + "\n");
  }
  return 0;
}

// ---- solve-lp ----

int cmd_solve_lp(const CliOverrides& cli, int flag_n, int flag_k) {
  Config cfg = parse_config(cli, /*needs_mechanism=*/false);
  long long n = flag_n;
  long long k = flag_k;
  if (n == 0) n = int_field(cfg.raw, "n", 0, true);
  if (k == 0) k = int_field(cfg.raw, "k", 0, true);
  if (n < 3 || n > 1000) throw UsageError("n must lie in [3, 1000]");
  if (k < 1 || k > n - 2) {
    throw UsageError("k must lie in [1, n-2] so two price setters exist");
  }
  const tfrm::MechanismParams params{static_cast<int>(n), static_cast<int>(k),
                                     1.0};
  const tfrm::ReducedLP lp = tfrm::build_reduced_lp(params);
  const tfrm::RebateCoefficients coeffs = tfrm::solve_lp(lp);

  // The vertex is unique; any disagreement with k/n is a solver defect.
  const double want = static_cast<double>(k) / static_cast<double>(n);
  double deviation = std::abs(coeffs.f - want);
  for (long long j = 0; j < n; ++j) {
    deviation = std::max(
        deviation, std::abs(coeffs.c[j] - (j == k ? want : 0.0)));
  }
  if (deviation >= kResidualTol) {
    throw InvariantError("solved schedule deviates from the k/n closed form "
                         "by " + fmt(deviation));
  }

  if (cfg.format == "csv") {
    emit(cfg, "n,k,f,c\n" + std::to_string(n) + ',' + std::to_string(k) + ',' +
                  fmt(coeffs.f) + ',' + join(coeffs.c) + '\n');
  } else {
    emit(cfg, tfrm::to_json(coeffs, params).dump(2) + "\n");
  }
  return 0;
}

// ---- attack ----

tfrm::ManipulationReport attack_once(const Config& cfg,
                                     const std::string& strategy,
                                     const tfrm::RebateCoefficients& coeffs,
                                     const tfrm::BidProfile& profile,
                                     std::uint64_t trial_seed) {
  const bool randomized = cfg.mechanism == Mechanism::R2Tfrm;
  if (strategy == "price-setters") {
    if (randomized) {
      return tfrm::impersonate_price_setters(profile, cfg.params, coeffs,
                                             beacon_for(trial_seed));
    }
    return tfrm::impersonate_price_setters(profile, cfg.params, coeffs);
  }
  if (strategy == "confirmed") {
    if (!cfg.raw.contains("fake_bids")) {
      throw UsageError("config field 'fake_bids' is required for the "
                       "confirmed strategy");
    }
    std::vector<double> fakes;
    for (const json& v : cfg.raw.at("fake_bids")) {
      if (!v.is_number()) throw UsageError("fake_bids must hold numbers");
      fakes.push_back(v.get<double>());
    }
    if (randomized) {
      return tfrm::impersonate_confirmed(profile, cfg.params, coeffs, fakes,
                                         beacon_for(trial_seed));
    }
    return tfrm::impersonate_confirmed(profile, cfg.params, coeffs, fakes);
  }
  if (strategy == "search") {
    tfrm::SearchOptions options;
    if (cfg.raw.contains("grid")) {
      for (const json& v : cfg.raw.at("grid")) {
        if (!v.is_number()) throw UsageError("grid must hold numbers");
        options.grid.push_back(v.get<double>());
      }
    } else {
      options.grid = tfrm::default_fake_grid(profile);
    }
    options.max_points = static_cast<std::size_t>(
        int_field(cfg.raw, "max_points", 2000000, false));
    options.kind = cfg.mechanism == Mechanism::Spa  ? tfrm::MechanismKind::Spa
                   : cfg.mechanism == Mechanism::RTfrm
                       ? tfrm::MechanismKind::RTfrm
                       : tfrm::MechanismKind::R2Tfrm;
    return tfrm::search_optimal_manipulation(profile, cfg.params, coeffs,
                                             options);
  }
  throw UsageError("strategy must be price-setters, confirmed, or search, "
                   "got '" + strategy + "'");
}

int cmd_attack(const CliOverrides& cli, std::string strategy) {
  const Config cfg = parse_config(cli, /*needs_mechanism=*/true);
  if (strategy.empty()) {
    strategy = string_field(cfg.raw, "strategy", "", true);
  }
  const tfrm::RebateCoefficients coeffs = schedule_for(cfg);

  std::vector<tfrm::ManipulationReport> reports(cfg.trials);
  std::vector<std::uint64_t> seeds(cfg.trials);
  for_each_trial(cfg.trials, [&](std::size_t t) {
    seeds[t] = tfrm::derive_seed(cfg.seed, t);
    const tfrm::BidProfile profile = profile_for_trial(cfg, seeds[t]);
    reports[t] = attack_once(cfg, strategy, coeffs, profile, seeds[t]);
  });

  double min_rri = 0.0;
  double mean_rri = 0.0;
  double min_utility = 0.0;
  double mean_utility = 0.0;
  std::size_t defined = 0;
  for (std::size_t t = 0; t < reports.size(); ++t) {
    const tfrm::ManipulationReport& r = reports[t];
    if (r.rri_defined) {
      min_rri = defined == 0 ? r.realized_rri : std::min(min_rri, r.realized_rri);
      mean_rri += r.realized_rri;
      ++defined;
    }
    min_utility = t == 0 ? r.miner_utility : std::min(min_utility, r.miner_utility);
    mean_utility += r.miner_utility;
  }
  if (defined > 0) mean_rri /= static_cast<double>(defined);
  mean_utility /= static_cast<double>(reports.size());

  if (cfg.format == "csv") {
    std::string text =
        "row,trial,strategy,miner_utility,payments_received,rebates_paid,"
        "genuine_rebate_sum,realized_rri,fake_bids,displaced\n";
    for (std::size_t t = 0; t < reports.size(); ++t) {
      const tfrm::ManipulationReport& r = reports[t];
      text += "trial," + std::to_string(t) + ',' + strategy + ',' +
              fmt(r.miner_utility) + ',' + fmt(r.miner_payments_received) +
              ',' + fmt(r.miner_rebates_paid_to_genuine) + ',' +
              fmt(r.genuine_rebate_sum) + ',' +
              (r.rri_defined ? fmt(r.realized_rri) : std::string()) + ',' +
              join_fakes(r.fake_bids) + ',' + join_indices(r.displaced) + '\n';
    }
    text += "min,,," + fmt(min_utility) + ",,,," +
            (defined ? fmt(min_rri) : std::string()) + ",,\n";
    text += "mean,,," + fmt(mean_utility) + ",,,," +
            (defined ? fmt(mean_rri) : std::string()) + ",,\n";
    emit(cfg, text);
  } else {
    json doc;
    doc["mechanism"] = mechanism_name(cfg.mechanism);
    doc["strategy"] = strategy;
    doc["n"] = cfg.params.n;
    doc["k"] = cfg.params.k;
    doc["alpha"] = cfg.params.alpha;
    doc["trials"] = cfg.trials;
    doc["seed"] = cfg.seed;
    json out_rows = json::array();
    for (std::size_t t = 0; t < reports.size(); ++t) {
      json r = tfrm::to_json(reports[t]);
      r["trial"] = t;
      r["trial_seed"] = seeds[t];
      out_rows.push_back(std::move(r));
    }
    doc["rows"] = std::move(out_rows);
    json summary;
    summary["trials_with_defined_rri"] = defined;
    summary["mean_utility"] = mean_utility;
    summary["min_utility"] = min_utility;
    if (defined > 0) {
      summary["mean_rri"] = mean_rri;
      summary["min_rri"] = min_rri;
    }
    doc["summary"] = std::move(summary);
    emit(cfg, doc.dump(2) + "\n");
  }
  return 0;
}

// ---- montecarlo ----

struct StudyResult {
  std::string study;
  std::size_t samples = 0;  // degenerate trials excluded
  double estimate = 0.0;
  double standard_error = 0.0;
  double target = 0.0;
  bool pass = false;
  // alpha-bound extras: the raw mean-of-ratio estimator for comparison.
  std::optional<double> naive_estimate;
  std::optional<double> naive_standard_error;
  // irm-boundary extra: worst closed-form residual seen.
  std::optional<double> max_residual;
};

double mean_of(const std::vector<double>& v) {
  double sum = 0.0;
  for (double x : v) sum += x;
  return v.empty() ? 0.0 : sum / static_cast<double>(v.size());
}

double se_of_mean(const std::vector<double>& v, double mean) {
  if (v.size() < 2) return 0.0;
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  const double var = ss / static_cast<double>(v.size() - 1);
  return std::sqrt(var / static_cast<double>(v.size()));
}

bool within_three_sigma(double estimate, double target, double se) {
  return std::abs(estimate - target) <= std::max(3.0 * se, kResidualTol);
}

// Collects per-trial values, dropping NaN markers from degenerate trials.
std::vector<double> collect(std::vector<double> values) {
  std::vector<double> kept;
  kept.reserve(values.size());
  for (double v : values) {
    if (!std::isnan(v)) kept.push_back(v);
  }
  return kept;
}

StudyResult study_rri(const Config& cfg) {
  const tfrm::RebateCoefficients coeffs = schedule_for(cfg);
  std::vector<double> values(cfg.trials,
                             std::numeric_limits<double>::quiet_NaN());
  for_each_trial(cfg.trials, [&](std::size_t t) {
    const std::uint64_t seed = tfrm::derive_seed(cfg.seed, t);
    const tfrm::BidProfile profile = profile_for_trial(cfg, seed);
    const tfrm::ManipulationReport r =
        cfg.mechanism == Mechanism::R2Tfrm
            ? tfrm::impersonate_price_setters(profile, cfg.params, coeffs,
                                              beacon_for(seed))
            : tfrm::impersonate_price_setters(profile, cfg.params, coeffs);
    if (r.rri_defined) values[t] = r.realized_rri;
  });
  const std::vector<double> kept = collect(std::move(values));
  StudyResult res;
  res.study = "rri";
  res.samples = kept.size();
  res.estimate = mean_of(kept);
  res.standard_error = se_of_mean(kept, res.estimate);
  const double kn = static_cast<double>(cfg.params.k) / cfg.params.n;
  res.target = cfg.mechanism == Mechanism::Spa      ? 0.0
               : cfg.mechanism == Mechanism::R2Tfrm ? cfg.params.alpha * kn
                                                    : kn;
  res.pass = res.samples > 0 &&
             within_three_sigma(res.estimate, res.target, res.standard_error);
  return res;
}

StudyResult study_avg_ri(const Config& cfg) {
  const tfrm::RebateCoefficients coeffs = schedule_for(cfg);
  std::vector<double> values(cfg.trials,
                             std::numeric_limits<double>::quiet_NaN());
  for_each_trial(cfg.trials, [&](std::size_t t) {
    const std::uint64_t seed = tfrm::derive_seed(cfg.seed, t);
    const tfrm::BidProfile profile = profile_for_trial(cfg, seed);
    const tfrm::Outcome out = run_mechanism(cfg, profile, coeffs, seed);
    const double collected =
        cfg.params.k * out.included_bids[cfg.params.k];
    if (collected <= 0.0) return;
    double confirmed_rebates = 0.0;
    for (int s = 0; s < cfg.params.k; ++s) confirmed_rebates += out.rebates[s];
    values[t] = confirmed_rebates / collected;
  });
  const std::vector<double> kept = collect(std::move(values));
  StudyResult res;
  res.study = "avg-ri";
  res.samples = kept.size();
  res.estimate = mean_of(kept);
  res.standard_error = se_of_mean(kept, res.estimate);
  const double kn = static_cast<double>(cfg.params.k) / cfg.params.n;
  res.target = cfg.mechanism == Mechanism::Spa      ? 0.0
               : cfg.mechanism == Mechanism::R2Tfrm ? cfg.params.alpha * kn
                                                    : kn;
  res.pass = res.samples > 0 &&
             within_three_sigma(res.estimate, res.target, res.standard_error);
  return res;
}

StudyResult study_alpha_bound(const Config& cfg) {
  const int n = cfg.params.n;
  const int k = cfg.params.k;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> xs(cfg.trials, nan);  // k-th highest bid
  std::vector<double> ys(cfg.trials, nan);  // (k+1)-th highest bid
  std::vector<double> naive(cfg.trials, nan);
  for_each_trial(cfg.trials, [&](std::size_t t) {
    const std::uint64_t seed = tfrm::derive_seed(cfg.seed, t);
    tfrm::BidProfile profile = profile_for_trial(cfg, seed);
    std::sort(profile.bids.rbegin(), profile.bids.rend());
    const double x = profile.bids[k - 1];
    const double y = profile.bids[k];
    if (y <= 0.0) return;  // revenue-free block, the bound degenerates
    xs[t] = x;
    ys[t] = y;
    naive[t] = n * y / (k * y + (n - k) * x);
  });
  const std::vector<double> x_kept = collect(std::move(xs));
  const std::vector<double> y_kept = collect(std::move(ys));
  const std::vector<double> naive_kept = collect(std::move(naive));

  StudyResult res;
  res.study = "alpha-bound";
  res.samples = x_kept.size();
  res.target = static_cast<double>(n) / (n + 1);
  if (res.samples < 2) return res;

  // Plug-in estimator at the mean order statistics; the raw mean of the
  // per-profile ratio is biased by the ratio's convexity and is reported
  // alongside for comparison.
  const double xm = mean_of(x_kept);
  const double ym = mean_of(y_kept);
  const double denom = k * ym + (n - k) * xm;
  res.estimate = n * ym / denom;

  double sxx = 0.0;
  double syy = 0.0;
  double sxy = 0.0;
  for (std::size_t i = 0; i < x_kept.size(); ++i) {
    sxx += (x_kept[i] - xm) * (x_kept[i] - xm);
    syy += (y_kept[i] - ym) * (y_kept[i] - ym);
    sxy += (x_kept[i] - xm) * (y_kept[i] - ym);
  }
  const double m = static_cast<double>(x_kept.size());
  sxx /= m - 1;
  syy /= m - 1;
  sxy /= m - 1;
  const double gx = -n * ym * (n - k) / (denom * denom);
  const double gy = n * (n - k) * xm / (denom * denom);
  const double var =
      (gx * gx * sxx + 2.0 * gx * gy * sxy + gy * gy * syy) / m;
  res.standard_error = std::sqrt(std::max(var, 0.0));

  const double naive_mean = mean_of(naive_kept);
  res.naive_estimate = naive_mean;
  res.naive_standard_error = se_of_mean(naive_kept, naive_mean);
  res.pass = within_three_sigma(res.estimate, res.target, res.standard_error);
  return res;
}

StudyResult study_irm_boundary(const Config& cfg) {
  const tfrm::RebateCoefficients coeffs =
      tfrm::RebateCoefficients::optimal(cfg.params);
  const double nan = std::numeric_limits<double>::quiet_NaN();
  std::vector<double> revenues(cfg.trials, nan);
  std::vector<double> residuals(cfg.trials, 0.0);
  for_each_trial(cfg.trials, [&](std::size_t t) {
    const std::uint64_t seed = tfrm::derive_seed(cfg.seed, t);
    const tfrm::BidProfile profile = profile_for_trial(cfg, seed);
    const tfrm::Inclusion inc = tfrm::sort_and_include(profile, cfg.params);
    std::vector<double> bids;
    bids.reserve(inc.included.size());
    for (std::size_t idx : inc.included) bids.push_back(profile.bids[idx]);
    const tfrm::AlphaBound bound = tfrm::alpha_upper_bound(bids, cfg.params);
    if (bound.degenerate) return;
    const int n = cfg.params.n;
    const int k = cfg.params.k;
    const double b_k = bids[k - 1];
    const double b_k1 = bids[k];
    const double expected_revenue =
        k * b_k1 - bound.value * (static_cast<double>(k) / n) *
                       (k * b_k1 + (n - k) * b_k);
    residuals[t] = std::abs(expected_revenue);
    tfrm::MechanismParams at_bound = cfg.params;
    at_bound.alpha = bound.value;
    revenues[t] = tfrm::r2_tfrm(profile, at_bound, coeffs,
                                beacon_for(seed))
                      .miner_revenue;
  });
  const std::vector<double> kept = collect(std::move(revenues));
  StudyResult res;
  res.study = "irm-boundary";
  res.samples = kept.size();
  res.estimate = mean_of(kept);
  res.standard_error = se_of_mean(kept, res.estimate);
  res.target = 0.0;
  double max_res = 0.0;
  for (double r : residuals) max_res = std::max(max_res, r);
  res.max_residual = max_res;
  res.pass = res.samples > 0 && max_res < kResidualTol &&
             within_three_sigma(res.estimate, res.target, res.standard_error);
  return res;
}

int cmd_montecarlo(const CliOverrides& cli, std::string study) {
  const Config cfg = parse_config(cli, /*needs_mechanism=*/true);
  if (study.empty()) study = string_field(cfg.raw, "study", "", true);

  StudyResult res;
  if (study == "rri") {
    res = study_rri(cfg);
  } else if (study == "avg-ri") {
    res = study_avg_ri(cfg);
  } else if (study == "alpha-bound") {
    res = study_alpha_bound(cfg);
  } else if (study == "irm-boundary") {
    if (cfg.mechanism == Mechanism::Spa) {
      throw UsageError("irm-boundary needs a rebate mechanism");
    }
    res = study_irm_boundary(cfg);
  } else {
    throw UsageError("study must be rri, alpha-bound, avg-ri, or "
                     "irm-boundary, got '" + study + "'");
  }

  const double zscore = res.standard_error > 0.0
                            ? (res.estimate - res.target) / res.standard_error
                            : 0.0;
  if (cfg.format == "csv") {
    std::string text =
        "study,mechanism,n,k,alpha,trials,samples,estimate,standard_error,"
        "target,zscore,pass,naive_estimate,naive_standard_error,"
        "max_residual\n";
    text += res.study + ',' + mechanism_name(cfg.mechanism) + ',' +
            std::to_string(cfg.params.n) + ',' + std::to_string(cfg.params.k) +
            ',' + fmt(cfg.params.alpha) + ',' + std::to_string(cfg.trials) +
            ',' + std::to_string(res.samples) + ',' + fmt(res.estimate) + ',' +
            fmt(res.standard_error) + ',' + fmt(res.target) + ',' +
            fmt(zscore) + ',' + (res.pass ? "true" : "false") + ',' +
            (res.naive_estimate ? fmt(*res.naive_estimate) : std::string()) +
            ',' +
            (res.naive_standard_error ? fmt(*res.naive_standard_error)
                                      : std::string()) +
            ',' + (res.max_residual ? fmt(*res.max_residual) : std::string()) +
            '\n';
    emit(cfg, text);
  } else {
    json doc;
    doc["study"] = res.study;
    doc["mechanism"] = mechanism_name(cfg.mechanism);
    doc["n"] = cfg.params.n;
    doc["k"] = cfg.params.k;
    doc["alpha"] = cfg.params.alpha;
    doc["trials"] = cfg.trials;
    doc["seed"] = cfg.seed;
    doc["samples"] = res.samples;
    doc["estimate"] = res.estimate;
    doc["standard_error"] = res.standard_error;
    doc["target"] = res.target;
    doc["zscore"] = zscore;
    doc["pass"] = res.pass;
    if (res.naive_estimate) doc["naive_estimate"] = *res.naive_estimate;
    if (res.naive_standard_error) {
      doc["naive_standard_error"] = *res.naive_standard_error;
    }
    if (res.max_residual) doc["max_residual"] = *res.max_residual;
    emit(cfg, doc.dump(2) + "\n");
  }
  if (!res.pass) {
    std::cerr << "montecarlo: " << res.study << " estimate " << res.estimate
              << " missed target " << res.target << " beyond three sigma\n";
    return 1;
  }
  return 0;
}

// ---- check ----

struct CheckRow {
  std::string name;
  bool pass = false;
  bool gate = true;  // informational rows never affect the exit code
  std::string detail;
};

int cmd_check(const CliOverrides& cli) {
  const Config cfg = parse_config(cli, /*needs_mechanism=*/true);
  const tfrm::RebateCoefficients coeffs = schedule_for(cfg);
  const bool rebate_family = cfg.mechanism != Mechanism::Spa;

  const std::size_t profile_count = cfg.source.from_file ? 1 : cfg.trials;
  std::vector<tfrm::BidProfile> profiles(profile_count);
  for (std::size_t t = 0; t < profile_count; ++t) {
    const std::uint64_t seed = tfrm::derive_seed(cfg.seed, t);
    profiles[t] = cfg.source.from_file
                      ? cfg.source.fixed
                      : tfrm::sample_truthful_profile(
                            cfg.source.dist, cfg.source.mempool_size, seed);
    if (!profiles[t].has_valuations()) {
      profiles[t].valuations = profiles[t].bids;
    }
  }

  const tfrm::MechanismFn mechanism = [&](const tfrm::BidProfile& p,
                                          const tfrm::MechanismParams& params) {
    // The honest view: randomized rebates are judged in expectation.
    switch (cfg.mechanism) {
      case Mechanism::Spa:
        return tfrm::spa_tfm(p, params);
      case Mechanism::RTfrm:
        return tfrm::r_tfrm(p, params, coeffs);
      case Mechanism::R2Tfrm:
        return tfrm::r2_tfrm_expected(p, params, coeffs);
    }
    throw std::logic_error("unreachable mechanism");
  };

  std::vector<CheckRow> rows;

  if (rebate_family) {
    // Rebate identity across every profile.
    double max_residual = 0.0;
    for (const tfrm::BidProfile& p : profiles) {
      const tfrm::Outcome out = tfrm::r_tfrm(p, cfg.params, coeffs);
      double total = 0.0;
      for (double r : out.rebates) total += r;
      const int n = cfg.params.n;
      const int k = cfg.params.k;
      const double closed =
          static_cast<double>(k) / n *
          (k * out.included_bids[k] + (n - k) * out.included_bids[k - 1]);
      max_residual = std::max(max_residual, std::abs(total - closed));
    }
    rows.push_back({"rebate-identity", max_residual < kResidualTol, true,
                    "max residual " + fmt(max_residual) + " over " +
                        std::to_string(profiles.size()) + " profiles"});

    // Bid-wise feasibility of the schedule itself.
    std::vector<std::vector<double>> sorted_blocks;
    sorted_blocks.reserve(profiles.size());
    for (const tfrm::BidProfile& p : profiles) {
      const tfrm::Inclusion inc = tfrm::sort_and_include(p, cfg.params);
      std::vector<double> bids;
      for (std::size_t idx : inc.included) bids.push_back(p.bids[idx]);
      sorted_blocks.push_back(std::move(bids));
    }
    const tfrm::BidwiseReport bidwise =
        tfrm::verify_bidwise_constraints(coeffs, cfg.params, sorted_blocks);
    rows.push_back({"bidwise-feasibility", bidwise.ok(), true,
                    std::to_string(bidwise.profiles_checked) +
                        " profiles checked, " +
                        std::to_string(bidwise.violations.size()) +
                        " violations"});
  }

  // Truthfulness for included users on a capped subset (quadratic cost).
  {
    const std::size_t ruic_profiles = std::min<std::size_t>(profiles.size(), 25);
    const std::size_t grid_points = static_cast<std::size_t>(
        int_field(cfg.raw, "deviation_points", 200, false));
    bool pass = true;
    std::size_t checked = 0;
    std::string detail;
    for (std::size_t i = 0; i < ruic_profiles && pass; ++i) {
      const tfrm::RuicResult result =
          tfrm::check_ruic(mechanism, cfg.params, profiles[i],
                           tfrm::make_deviation_grid(profiles[i], grid_points));
      checked += result.deviations_checked;
      if (!result.pass) {
        pass = false;
        detail = "user " + std::to_string(result.counterexample->user) +
                 " gains " +
                 fmt(result.counterexample->deviated_utility -
                     result.counterexample->truthful_utility) +
                 " by bidding " + fmt(result.counterexample->deviation);
      }
    }
    if (pass) {
      detail = std::to_string(checked) + " deviations over " +
               std::to_string(ruic_profiles) + " profiles, none profitable";
    }
    rows.push_back({"ruic", pass, true, detail});
  }

  // Rationality, budget, and efficiency; IR_M and budget balance are
  // informational because the rebate family gives revenue away by design.
  {
    bool ir_u = true;
    bool approx = true;
    bool ae = true;
    bool ir_m = true;
    bool wbb = true;
    bool sbb = true;
    for (const tfrm::BidProfile& p : profiles) {
      const tfrm::PropertyReport rep =
          tfrm::check_ir_and_budget(mechanism, cfg.params, p);
      ir_u = ir_u && rep.ir_u;
      approx = approx && rep.approx_ir_m;
      ae = ae && rep.ae;
      ir_m = ir_m && rep.ir_m;
      wbb = wbb && rep.wbb;
      sbb = sbb && rep.sbb;
    }
    const std::string over =
        " over " + std::to_string(profiles.size()) + " profiles";
    rows.push_back({"ir-u", ir_u, true, "users never pay above value" + over});
    rows.push_back({"approx-ir-m", approx, true,
                    "rebates stay within k*b_k" + over});
    rows.push_back({"allocative-efficiency", ae, true,
                    "confirmed sets maximize value" + over});
    rows.push_back({"ir-m", ir_m, !rebate_family,
                    "miner revenue nonnegative" + over});
    rows.push_back({"wbb", wbb, !rebate_family,
                    "total payments nonnegative" + over});
    rows.push_back({"sbb", sbb, false, "total payments exactly zero" + over});
  }

  bool all_gates = true;
  for (const CheckRow& row : rows) {
    if (row.gate && !row.pass) all_gates = false;
  }

  if (cfg.format == "csv") {
    std::string text = "check,pass,gate,detail\n";
    for (const CheckRow& row : rows) {
      text += row.name + ',' + (row.pass ? "true" : "false") + ',' +
              (row.gate ? "true" : "false") + ',' + row.detail + '\n';
    }
    emit(cfg, text);
  } else {
    json doc;
    doc["mechanism"] = mechanism_name(cfg.mechanism);
    doc["n"] = cfg.params.n;
    doc["k"] = cfg.params.k;
    doc["alpha"] = cfg.params.alpha;
    doc["seed"] = cfg.seed;
    doc["pass"] = all_gates;
    json checks = json::array();
    for (const CheckRow& row : rows) {
      checks.push_back({{"name", row.name},
                        {"pass", row.pass},
                        {"gate", row.gate},
                        {"detail", row.detail}});
    }
    doc["checks"] = std::move(checks);
    emit(cfg, doc.dump(2) + "\n");
  }
  if (!all_gates) {
    std::cerr << "check: a gated property failed\n";
    return 1;
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Transaction fee redistribution laboratory"};
  app.require_subcommand(1);

  CliOverrides cli;
  int flag_n = 0;
  int flag_k = 0;
  std::string strategy;
  std::string study;

  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cli.config_path, "JSON configuration file");
    sub->add_option("--out", cli.out_path, "output file (default stdout)");
    sub->add_option("--format", cli.format, "output format")
        ->check(CLI::IsMember({"csv", "json"}));
    sub->add_option("--seed", cli.seed, "seed override");
  };

  CLI::App* run = app.add_subcommand("run", "per-trial mechanism outcomes");
  add_common(run);
  CLI::App* solve = app.add_subcommand("solve-lp", "optimal rebate schedule");
  add_common(solve);
  solve->add_option("--n", flag_n, "block size");
  solve->add_option("--k", flag_k, "confirmed slots");
  CLI::App* attack = app.add_subcommand("attack", "miner manipulation reports");
  add_common(attack);
  attack->add_option("--strategy", strategy,
                     "price-setters, confirmed, or search");
  CLI::App* mc = app.add_subcommand("montecarlo", "summary statistics");
  add_common(mc);
  mc->add_option("--study", study, "rri, alpha-bound, avg-ri, or irm-boundary");
  CLI::App* check = app.add_subcommand("check", "property suite");
  add_common(check);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    if (e.get_exit_code() == 0) return app.exit(e);
    app.exit(e);
    return 2;
  }

  try {
    if (run->parsed()) return cmd_run(cli);
    if (solve->parsed()) return cmd_solve_lp(cli, flag_n, flag_k);
    if (attack->parsed()) return cmd_attack(cli, strategy);
    if (mc->parsed()) return cmd_montecarlo(cli, study);
    if (check->parsed()) return cmd_check(cli);
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "usage error: " << e.what() << '\n';
    return 2;
  } catch (const InvariantError& e) {
    std::cerr << "invariant violation: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

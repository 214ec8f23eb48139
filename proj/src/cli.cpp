#include "rfmfs/cli.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <ostream>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "rfmfs/asymptotics.hpp"
#include "rfmfs/errors.hpp"
#include "rfmfs/fields.hpp"
#include "rfmfs/gibbs.hpp"
#include "rfmfs/metastate.hpp"
#include "rfmfs/parallel.hpp"
#include "rfmfs/tilting.hpp"

#ifndef RFMFS_BUILD_ID
#define RFMFS_BUILD_ID "unknown"
#endif

namespace rfmfs {

const char* build_id() { return RFMFS_BUILD_ID; }

namespace {

using json = nlohmann::ordered_json;

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string short_num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.10g", v);
  return buf;
}

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row) { rows.push_back(std::move(row)); }

  std::string csv() const {
    std::ostringstream os;
    for (std::size_t k = 0; k < header.size(); ++k) os << (k ? "," : "") << header[k];
    os << '\n';
    for (const auto& r : rows) {
      for (std::size_t k = 0; k < r.size(); ++k) os << (k ? "," : "") << r[k];
      os << '\n';
    }
    return os.str();
  }
};

struct Result {
  Table table;
  json results = json::object();
  std::string text;
};

json to_json(const std::optional<double>& v) { return v ? json(*v) : json(nullptr); }

json config_json(const RunConfig& c) {
  json j;
  j["command"] = c.command;
  if (!c.mode.empty()) j["mode"] = c.mode;
  j["beta"] = to_json(c.beta);
  j["J"] = to_json(c.J);
  j["dist"] = c.dist ? json(*c.dist) : json(nullptr);
  j["schedule"] = c.schedule ? json(*c.schedule) : json(nullptr);
  j["n"] = c.n;
  j["N"] = c.N ? json(*c.N) : json(nullptr);
  j["replicas"] = c.replicas;
  j["seed"] = c.seed;
  j["format"] = c.format;
  j["samples"] = c.samples;
  j["lambda"] = c.lambda;
  j["n_max"] = c.n_max;
  j["tol"] = c.tol;
  j["delta"] = c.delta;
  j["ns_mode"] = c.ns_mode;
  return j;
}

json point_json(const DiskPoint& z) { return json::array({z.x, z.y}); }

std::string point_text(const DiskPoint& z) {
  return "(" + short_num(z.x) + ", " + short_num(z.y) + ")";
}

[[noreturn]] void missing(const std::string& key, const std::string& why) {
  throw ParameterError("missing required key '" + key + "' (" + why + ")");
}

struct Resolved {
  ModelParams params;
  std::optional<DistributionSpec> spec;
  std::optional<StatsSchedule> schedule;

  FieldPair limit() const { return schedule ? schedule->m : spec->limit(); }
};

Resolved resolve(const RunConfig& c, bool needs_source, bool needs_dist) {
  Resolved r;
  if (!c.beta) missing("beta", "inverse temperature");
  if (!c.J) missing("J", "coupling constant");
  r.params = {*c.beta, *c.J};
  try {
    r.params.validate();
  } catch (const ParameterError& e) {
    throw ParameterError(std::string("key 'beta'/'J': ") + e.what());
  }
  if (c.dist && c.schedule) throw ParameterError("keys 'dist' and 'schedule' are mutually exclusive");
  if (c.dist) {
    try {
      r.spec = DistributionSpec::parse(*c.dist);
    } catch (const Error& e) {
      throw ParameterError(std::string("key 'dist': ") + e.what());
    }
  }
  if (c.schedule) {
    try {
      r.schedule = StatsSchedule::parse(*c.schedule);
    } catch (const Error& e) {
      throw ParameterError(std::string("key 'schedule': ") + e.what());
    }
  }
  if (needs_dist && !r.spec) missing("dist", "this command samples an explicit field");
  if (needs_source && !r.spec && !r.schedule) missing("dist", "or 'schedule'");
  if (r.spec && !r.spec->satisfies_a1())
    throw AssumptionError("key 'dist': " + r.spec->to_string() + " has zero variance (A1 fails)");
  return r;
}

void require_n(const RunConfig& c, long long min_n) {
  if (c.n.empty()) missing("n", "volume or list of volumes");
  for (long long n : c.n)
    if (n < min_n) throw ParameterError("key 'n': every volume must be at least " + std::to_string(min_n));
}

long long require_N(const RunConfig& c) {
  if (!c.N) missing("N", "number of volumes");
  if (*c.N < 1) throw ParameterError("key 'N': must be positive");
  return *c.N;
}

void require_replicas(const RunConfig& c) {
  if (c.replicas < 1) throw ParameterError("key 'replicas': must be positive");
}

// Explicit field of a given length for replica r.
FieldSample replica_field(const Resolved& r, const RunConfig& c, std::size_t replica, std::size_t len) {
  RngStream stream(c.seed, replica);
  return sample_field(*r.spec, len, stream);
}

std::vector<std::string> fingerprint_header(std::vector<std::string> head, std::size_t count) {
  for (std::size_t k = 0; k < count; ++k) head.push_back("f" + std::to_string(k));
  return head;
}

std::string describe(const TanhObservable& f) {
  std::ostringstream os;
  os << "tanh(";
  bool first = true;
  for (const auto& [i, a] : f.terms) {
    if (!first) os << (a < 0 ? " - " : " + ");
    else if (a < 0) os << "-";
    os << short_num(std::abs(a)) << "*phi" << i;
    first = false;
  }
  if (f.offset != 0.0 || first) os << (first ? "" : (f.offset < 0 ? " - " : " + ")) << short_num(first ? f.offset : std::abs(f.offset));
  os << ")";
  return os.str();
}

// ---------------------------------------------------------------------------

Result run_phase(const RunConfig& c) {
  const Resolved r = resolve(c, true, false);
  const FieldPair m = r.limit();
  const Phase phase = r.spec ? classify_phase(r.params, *r.spec) : classify_phase(r.params, m);
  const auto bc = beta_critical(r.params.J, m.perp);
  const auto ms = maximizers(r.params, m);

  Result out;
  out.table.header = {"index", "x", "y", "psi", "grad_norm"};
  json pts = json::array();
  std::ostringstream text;
  text << "phase: " << to_string(phase) << '\n';
  text << "beta_c: " << (bc ? short_num(*bc) : std::string("none (m_perp >= J)")) << '\n';
  text << "m: (" << short_num(m.par) << ", " << short_num(m.perp) << ")\n";
  for (std::size_t k = 0; k < ms.size(); ++k) {
    const DiskPoint& z = ms.points()[k];
    const double p = psi(z, r.params, m);
    out.table.add({std::to_string(k), num(z.x), num(z.y), num(p), num(grad_psi(z, r.params, m).norm())});
    pts.push_back(point_json(z));
    const char* label = ms.is_two() ? (k == 0 ? "z+" : "z-") : "z*";
    text << label << ": " << point_text(z) << '\n';
  }
  text << "sup psi: " << short_num(psi(ms.points()[0], r.params, m)) << '\n';
  out.results["phase"] = to_string(phase);
  out.results["beta_c"] = to_json(bc);
  out.results["m_par"] = m.par;
  out.results["m_perp"] = m.perp;
  out.results["maximizers"] = pts;
  out.results["sup_psi"] = psi(ms.points()[0], r.params, m);
  out.text = text.str();
  return out;
}

Result run_free_energy(const RunConfig& c) {
  const Resolved r = resolve(c, true, false);
  require_n(c, kMinVolume);
  require_replicas(c);
  const FieldPair m = r.limit();
  const auto ms = maximizers(r.params, m);
  const double sup = psi(ms.points()[0], r.params, m);
  const long long n_top = *std::max_element(c.n.begin(), c.n.end());
  const std::size_t reps = r.schedule ? 1 : c.replicas;

  struct Row {
    FieldStats stats;
    double log_z;
  };
  std::vector<std::vector<Row>> rows(reps, std::vector<Row>(c.n.size()));
  parallel_for(reps, c.threads, [&](std::size_t rep) {
    std::optional<FieldSample> field;
    if (r.spec) field = replica_field(r, c, rep, static_cast<std::size_t>(n_top));
    for (std::size_t k = 0; k < c.n.size(); ++k) {
      const long long n = c.n[k];
      const FieldStats st = field ? field_stats(*field, static_cast<std::size_t>(n)) : schedule_stats(*r.schedule, n);
      rows[rep][k] = {st, log_partition(n, r.params, st)};
    }
  });

  Result out;
  out.table.header = {"replica", "n", "m_par", "m_perp", "log_partition", "free_energy"};
  json per_n = json::array();
  std::ostringstream text;
  text << "sup psi: " << short_num(sup) << '\n';
  for (std::size_t k = 0; k < c.n.size(); ++k) {
    const double n = static_cast<double>(c.n[k]);
    double mean = 0.0;
    double m2 = 0.0;
    for (std::size_t rep = 0; rep < reps; ++rep) {
      const double f = rows[rep][k].log_z / n;
      const double d = f - mean;
      mean += d / static_cast<double>(rep + 1);
      m2 += d * (f - mean);
    }
    const double sd = reps > 1 ? std::sqrt(m2 / static_cast<double>(reps - 1)) : 0.0;
    per_n.push_back({{"n", c.n[k]}, {"mean", mean}, {"sd", sd}, {"error", mean - sup}});
    text << "n = " << c.n[k] << ": (1/n) log Z_n = " << short_num(mean);
    if (reps > 1) text << " (sd " << short_num(sd) << " over " << reps << " replicas)";
    text << ", gap to sup psi " << short_num(mean - sup) << '\n';
  }
  for (std::size_t rep = 0; rep < reps; ++rep)
    for (std::size_t k = 0; k < c.n.size(); ++k) {
      const auto& row = rows[rep][k];
      out.table.add({std::to_string(rep), std::to_string(c.n[k]), num(row.stats.m_par),
                     num(row.stats.m_perp), num(row.log_z), num(row.log_z / static_cast<double>(c.n[k]))});
    }
  out.results["sup_psi"] = sup;
  out.results["per_n"] = per_n;
  out.text = text.str();
  return out;
}

Result run_weights(const RunConfig& c) {
  const Resolved r = resolve(c, true, false);
  require_n(c, 1);
  const long long n_top = *std::max_element(c.n.begin(), c.n.end());
  std::optional<FieldSample> field;
  if (r.spec) field = replica_field(r, c, 0, static_cast<std::size_t>(n_top));
  if (r.schedule) require_n(c, kMinVolume);

  std::vector<FieldStats> stats(c.n.size());
  std::vector<double> w(c.n.size());
  parallel_for(c.n.size(), c.threads, [&](std::size_t k) {
    const long long n = c.n[k];
    if (field) {
      stats[k] = field_stats(*field, static_cast<std::size_t>(n));
      w[k] = field_weight_plus(*field, n, r.params);
    } else {
      stats[k] = schedule_stats(*r.schedule, n);
      w[k] = weight_plus(n, r.params, stats[k]).w_plus;
    }
  });

  Result out;
  out.table.header = {"n", "m_par", "m_perp", "w_plus"};
  std::ostringstream text;
  for (std::size_t k = 0; k < c.n.size(); ++k) {
    out.table.add({std::to_string(c.n[k]), num(stats[k].m_par), num(stats[k].m_perp), num(w[k])});
    text << "n = " << c.n[k] << ": W+ = " << short_num(w[k]) << '\n';
  }
  out.results["w_plus"] = w;
  if (r.schedule) {
    const auto ms = maximizers(r.params, r.schedule->m);
    if (ms.is_two()) {
      try {
        const double lim = weight_limit(r.schedule->delta, r.schedule->gamma, r.params, ms);
        out.results["weight_limit"] = lim;
        text << "limit: " << short_num(lim) << '\n';
      } catch (const ParameterError& e) {
        out.results["weight_limit"] = nullptr;
        out.results["weight_limit_note"] = e.what();
        text << "limit: undetermined\n";
      }
    }
  }
  out.text = text.str();
  return out;
}

Result run_gibbs(const RunConfig& c) {
  const Resolved r = resolve(c, true, true);
  require_n(c, kMinVolume);
  if (c.samples < 2) throw ParameterError("key 'samples': need at least 2");
  const long long n = c.n.front();
  const FieldSample field = replica_field(r, c, 0, static_cast<std::size_t>(n));
  const FieldPair m = r.spec->limit();
  const Phase phase = classify_phase(r.params, *r.spec);
  const auto ms = maximizers(r.params, m);

  const MicroSampler micro(field, n);
  const MixtureDensity rho(n, r.params, micro.stats());
  const Dictionary& dict = default_dictionary();
  const auto support = dictionary_support(dict);

  RngStream rng(c.seed, 1ULL << 32);
  std::vector<double> mean(dict.size(), 0.0);
  std::vector<double> m2(dict.size(), 0.0);
  for (std::size_t s = 0; s < c.samples; ++s) {
    const DiskPoint z = rho.sample(rng);
    const SpinMarginal phi = micro.draw(z, support, rng);
    for (std::size_t k = 0; k < dict.size(); ++k) {
      const double v = dict[k](phi);
      const double d = v - mean[k];
      mean[k] += d / static_cast<double>(s + 1);
      m2[k] += d * (v - mean[k]);
    }
  }
  Fingerprint limit;
  if (ms.is_two()) {
    limit = mix(rho.w_plus(), fingerprint_limit_state(ms.plus(), field, m, dict),
                fingerprint_limit_state(ms.minus(), field, m, dict));
  } else {
    limit = fingerprint_limit_state(ms.single(), field, m, dict);
  }

  Result out;
  out.table.header = {"observable", "expression", "estimate", "standard_error", "limit"};
  std::ostringstream text;
  text << "phase: " << to_string(phase) << ", n = " << n << ", W+ = " << short_num(rho.w_plus())
       << ", magnetization density = " << short_num(rho.mean_x()) << '\n';
  json obs = json::array();
  const double count = static_cast<double>(c.samples);
  for (std::size_t k = 0; k < dict.size(); ++k) {
    const double se = std::sqrt(m2[k] / (count - 1.0) / count);
    out.table.add({std::to_string(k), describe(dict[k]), num(mean[k]), num(se), num(limit.values[k])});
    obs.push_back({{"expression", describe(dict[k])},
                   {"estimate", mean[k]},
                   {"standard_error", se},
                   {"limit", limit.values[k]}});
    text << describe(dict[k]) << ": " << short_num(mean[k]) << " +- " << short_num(se)
         << " (limit " << short_num(limit.values[k]) << ")\n";
  }
  out.results["phase"] = to_string(phase);
  out.results["w_plus"] = rho.w_plus();
  out.results["magnetization_density"] = rho.mean_x();
  out.results["observables"] = obs;
  out.text = text.str();
  return out;
}

Result run_laplace(const RunConfig& c) {
  const Resolved r = resolve(c, true, false);
  require_n(c, kMinVolume);
  const FieldPair m = r.limit();
  const auto ms = maximizers(r.params, m);
  const long long n_top = *std::max_element(c.n.begin(), c.n.end());
  std::optional<FieldSample> field;
  if (r.spec) field = replica_field(r, c, 0, static_cast<std::size_t>(n_top));

  Result out;
  out.table.header = {"n", "x_star", "y_star", "region", "ratio", "limit", "relative_error"};
  std::ostringstream text;
  json rows = json::array();
  for (long long n : c.n) {
    const FieldStats st = field ? field_stats(*field, static_cast<std::size_t>(n)) : schedule_stats(*r.schedule, n);
    for (const DiskPoint& z : ms.points()) {
      const Region half = z.x > 0.0 ? Region::half_plus : (z.x < 0.0 ? Region::half_minus : Region::full);
      const auto lr = laplace_ratio(n, r.params, st, z, half);
      const double rel = lr.ratio / lr.limit - 1.0;
      out.table.add({std::to_string(n), num(z.x), num(z.y), to_string(half), num(lr.ratio), num(lr.limit), num(rel)});
      rows.push_back({{"n", n}, {"z_star", point_json(z)}, {"region", to_string(half)},
                      {"ratio", lr.ratio}, {"limit", lr.limit}, {"relative_error", rel}});
      text << "n = " << n << ", z* = " << point_text(z) << ": ratio " << short_num(lr.ratio)
           << ", limit " << short_num(lr.limit) << " (" << short_num(100.0 * rel) << "%)\n";
    }
  }
  out.results["ratios"] = rows;
  out.text = text.str();
  return out;
}

Result run_aw(const RunConfig& c, const Resolved& r) {
  require_n(c, kMinVolume);
  require_replicas(c);
  const long long n = c.n.front();
  const auto s = aw_experiment(*r.spec, n, c.replicas, r.params, RngStream(c.seed, 0), default_dictionary(), c.threads);
  Result out;
  out.table.header = fingerprint_header({"replica", "w_plus"}, default_dictionary().size());
  for (const auto& rec : s.records) {
    std::vector<std::string> row{std::to_string(rec.replica), num(rec.w_plus)};
    for (double v : rec.fingerprint) row.push_back(num(v));
    out.table.add(std::move(row));
  }
  const double band = 3.0 * 0.5 / std::sqrt(static_cast<double>(c.replicas));
  out.results["n"] = n;
  out.results["replicas"] = c.replicas;
  out.results["fraction_plus"] = s.fraction_plus;
  out.results["band"] = json::array({0.5 - band, 0.5 + band});
  out.results["mean_fingerprint"] = s.mean_fingerprint;
  out.text = "fraction(W+ > 1/2) = " + short_num(s.fraction_plus) + " over " +
             std::to_string(c.replicas) + " replicas (3-sigma band 0.5 +- " + short_num(band) + ")\n";
  return out;
}

Result run_ns(const RunConfig& c, const Resolved& r) {
  const long long N = require_N(c);
  const NsMode mode = c.ns_mode == "exact" ? NsMode::exact : NsMode::surrogate;
  const FieldSample field = replica_field(r, c, 0, static_cast<std::size_t>(N));
  RngStream rng(c.seed, 1ULL << 32);
  const auto ns = ns_metastate(field, N, r.params, default_dictionary(), mode, &rng, c.samples, c.threads);
  Result out;
  out.table.header = fingerprint_header({"n", "w_plus"}, default_dictionary().size());
  for (std::size_t k = 0; k < ns.atoms.size(); ++k) {
    std::vector<std::string> row{std::to_string(k + 1), num(ns.w_plus[k])};
    for (double v : ns.atoms[k].values) row.push_back(num(v));
    out.table.add(std::move(row));
  }
  out.results["N"] = N;
  out.results["fraction_plus"] = ns.fraction_plus();
  out.results["t_plus"] = ns.t_plus;
  out.results["fp_plus"] = ns.fp_plus.values;
  out.results["fp_minus"] = ns.fp_minus.values;
  out.text = "N = " + std::to_string(N) + ": fraction of atoms with W+ > 1/2 = " +
             short_num(ns.fraction_plus()) + ", T_N+ = " + short_num(ns.t_plus) + "\n";
  return out;
}

Result run_arcsine(const RunConfig& c, const Resolved& r) {
  const long long N = require_N(c);
  require_replicas(c);
  const auto s = arcsine_experiment(*r.spec, N, c.replicas, RngStream(c.seed, 0), c.threads);
  Result out;
  out.table.header = {"replica", "t_plus"};
  for (std::size_t k = 0; k < s.t_values.size(); ++k)
    out.table.add({std::to_string(k), num(s.t_values[k])});
  out.results["N"] = N;
  out.results["replicas"] = c.replicas;
  out.results["ks"] = s.ks;
  out.results["drift"] = s.drift;
  if (s.drift) out.results["warning"] = s.warning;
  out.text = "KS distance to the arcsine law: " + short_num(s.ks) + "\n" +
             (s.drift ? "warning: " + s.warning + "\n" : std::string());
  return out;
}

Result run_csd(const RunConfig& c, const Resolved& r) {
  require_replicas(c);
  if (c.n_max < kMinVolume) throw ParameterError("key 'n_max': must be at least 5");
  if (!(c.tol > 0.0)) throw ParameterError("key 'tol': must be positive");
  if (c.lambda.empty()) missing("lambda", "target weights");
  for (double l : c.lambda)
    if (!(l > 0.0 && l < 1.0)) throw ParameterError("key 'lambda': values must lie in (0, 1)");
  const FieldPair m = r.spec->limit();
  const Phase phase = classify_phase(r.params, *r.spec);
  if (phase != Phase::SpinGlass)
    throw PhaseError("csd: phase is " + to_string(phase) + ", expected SpinGlass");
  const auto ms = maximizers(r.params, m);

  std::vector<std::vector<std::optional<CsdHit>>> hits(c.replicas,
                                                      std::vector<std::optional<CsdHit>>(c.lambda.size()));
  parallel_for(c.replicas, c.threads, [&](std::size_t rep) {
    const FieldSample field = replica_field(r, c, rep, static_cast<std::size_t>(c.n_max));
    for (std::size_t k = 0; k < c.lambda.size(); ++k)
      hits[rep][k] = csd_search(field, c.lambda[k], r.params, ms, c.n_max, c.tol);
  });

  Result out;
  out.table.header = {"replica", "lambda", "found", "n", "w_plus", "shifted_s1"};
  json rates = json::array();
  std::ostringstream text;
  for (std::size_t k = 0; k < c.lambda.size(); ++k) {
    std::size_t found = 0;
    for (std::size_t rep = 0; rep < c.replicas; ++rep) {
      const auto& h = hits[rep][k];
      found += h.has_value();
      out.table.add({std::to_string(rep), num(c.lambda[k]), h ? "1" : "0", h ? std::to_string(h->n) : "",
                     h ? num(h->w_plus) : "", h ? num(h->shifted_s1) : ""});
    }
    const double rate = static_cast<double>(found) / static_cast<double>(c.replicas);
    rates.push_back({{"lambda", c.lambda[k]},
                     {"target_walk", csd_target_walk(c.lambda[k], r.params, ms)},
                     {"success_rate", rate}});
    text << "lambda = " << short_num(c.lambda[k]) << ": found in " << found << "/" << c.replicas << " fields\n";
  }
  out.results["success"] = rates;
  out.text = text.str();
  return out;
}

Result run_triviality(const RunConfig& c, const Resolved& r) {
  require_n(c, kMinVolume);
  RngStream rng(c.seed, 0);
  const auto rep = triviality_check(*r.spec, r.params, c.n, default_dictionary(), rng);
  Result out;
  out.table.header = fingerprint_header({"n", "deviation"}, default_dictionary().size());
  std::ostringstream text;
  text << "z* = " << point_text(rep.z_star) << '\n';
  for (std::size_t k = 0; k < rep.n_grid.size(); ++k) {
    std::vector<std::string> row{std::to_string(rep.n_grid[k]), num(rep.deviation[k])};
    for (double v : rep.fingerprints[k].values) row.push_back(num(v));
    out.table.add(std::move(row));
    text << "n = " << rep.n_grid[k] << ": deviation " << short_num(rep.deviation[k]) << '\n';
  }
  out.results["z_star"] = point_json(rep.z_star);
  out.results["limit"] = rep.limit.values;
  out.results["deviation"] = rep.deviation;
  out.text = text.str();
  return out;
}

Result run_conditioning(const RunConfig& c, const Resolved& r) {
  const long long N = require_N(c);
  require_replicas(c);
  if (!(c.delta > 0.0 && c.delta < 1.0 / 6.0)) throw ParameterError("key 'delta': must lie in (0, 1/6)");
  std::vector<long long> checkpoints;
  for (long long n : c.n)
    if (n >= 1 && n <= N) checkpoints.push_back(n);
  if (std::find(checkpoints.begin(), checkpoints.end(), N) == checkpoints.end()) checkpoints.push_back(N);
  std::sort(checkpoints.begin(), checkpoints.end());

  std::vector<std::vector<double>> rates(c.replicas, std::vector<double>(checkpoints.size()));
  parallel_for(c.replicas, c.threads, [&](std::size_t rep) {
    const FieldSample field = replica_field(r, c, rep, static_cast<std::size_t>(N));
    for (std::size_t k = 0; k < checkpoints.size(); ++k)
      rates[rep][k] = cesaro_miss_rate(field, checkpoints[k], c.delta);
  });
  Result out;
  out.table.header = {"replica", "N", "miss_rate"};
  json med = json::array();
  std::ostringstream text;
  for (std::size_t k = 0; k < checkpoints.size(); ++k) {
    std::vector<double> col;
    for (std::size_t rep = 0; rep < c.replicas; ++rep) {
      col.push_back(rates[rep][k]);
      out.table.add({std::to_string(rep), std::to_string(checkpoints[k]), num(rates[rep][k])});
    }
    std::sort(col.begin(), col.end());
    const double median = col.size() % 2 ? col[col.size() / 2]
                                         : 0.5 * (col[col.size() / 2 - 1] + col[col.size() / 2]);
    med.push_back({{"N", checkpoints[k]}, {"median_miss_rate", median}});
    text << "N = " << checkpoints[k] << ": median miss rate " << short_num(median) << '\n';
  }
  out.results["delta"] = c.delta;
  out.results["median"] = med;
  out.text = text.str();
  return out;
}

Result run_metastate(const RunConfig& c) {
  static const std::vector<std::string> modes{"aw", "ns", "arcsine", "csd", "triviality", "conditioning"};
  if (c.mode.empty()) missing("mode", "aw, ns, arcsine, csd, triviality or conditioning");
  if (std::find(modes.begin(), modes.end(), c.mode) == modes.end())
    throw ParameterError("key 'mode': unknown metastate mode '" + c.mode + "'");
  if (c.mode == "arcsine") {
    // The walk alone is needed; beta and J are not used.
    if (!c.dist) missing("dist", "this command samples an explicit field");
    Resolved r;
    r.spec = DistributionSpec::parse(*c.dist);
    return run_arcsine(c, r);
  }
  const Resolved r = resolve(c, true, true);
  if (c.mode == "aw") return run_aw(c, r);
  if (c.mode == "ns") {
    if (c.ns_mode != "surrogate" && c.ns_mode != "exact")
      throw ParameterError("key 'ns_mode': expected surrogate or exact");
    return run_ns(c, r);
  }
  if (c.mode == "csd") return run_csd(c, r);
  if (c.mode == "triviality") return run_triviality(c, r);
  return run_conditioning(c, r);
}

Result dispatch(const RunConfig& c) {
  if (c.command == "phase") return run_phase(c);
  if (c.command == "free-energy") return run_free_energy(c);
  if (c.command == "weights") return run_weights(c);
  if (c.command == "gibbs") return run_gibbs(c);
  if (c.command == "laplace") return run_laplace(c);
  if (c.command == "metastate") return run_metastate(c);
  throw ParameterError("unknown command '" + c.command + "'");
}

std::string strip_extension(const std::string& path) {
  for (const char* ext : {".csv", ".json"}) {
    const std::string e(ext);
    if (path.size() > e.size() && path.compare(path.size() - e.size(), e.size(), e) == 0)
      return path.substr(0, path.size() - e.size());
  }
  return path;
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  RunConfig cfg;
  CLI::App app{"Random-field mean-field spherical model: maximizers, Gibbs states and metastates",
               "rfmfs"};
  app.set_config("--config", "", "Flat key=value file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.require_subcommand(1, 1);

  std::optional<double> beta;
  std::optional<double> J;
  std::string dist;
  std::string schedule;
  long long N = 0;
  std::string out_path;
  app.add_option("--beta", beta, "Inverse temperature (> 0)");
  app.add_option("--J", J, "Coupling constant (> 0)");
  app.add_option("--dist", dist, "Field law: rademacher:s, bernoulli:p:a:b, gaussian:mean:sd, uniform:lo:hi");
  app.add_option("--schedule", schedule, "Stats schedule m_par:m_perp:gamma_par:gamma_perp:delta");
  app.add_option("--n", cfg.n, "Volume(s), comma separated")->delimiter(',');
  app.add_option("--N", N, "Number of volumes for Cesaro averages");
  app.add_option("--replicas", cfg.replicas, "Independent field replicas");
  app.add_option("--seed", cfg.seed, "Random seed");
  app.add_option("--threads", cfg.threads, "Worker threads (0 = available parallelism)");
  app.add_option("--format", cfg.format, "Standard output format")
      ->check(CLI::IsMember({"text", "csv", "json"}));
  app.add_option("--out", out_path, "Write PATH.csv and PATH.json");
  app.add_option("--samples", cfg.samples, "Monte Carlo samples per estimate");
  app.add_option("--lambda", cfg.lambda, "CSD target weights, comma separated")->delimiter(',');
  app.add_option("--n-max", cfg.n_max, "CSD search horizon");
  app.add_option("--tol", cfg.tol, "CSD weight tolerance");
  app.add_option("--delta", cfg.delta, "Conditioning band exponent in (0, 1/6)");
  app.add_option("--ns-mode", cfg.ns_mode, "Newman-Stein atoms: surrogate or exact")
      ->check(CLI::IsMember({"surrogate", "exact"}));
  app.add_option("--mode", cfg.mode, "Metastate experiment")
      ->check(CLI::IsMember({"aw", "ns", "arcsine", "csd", "triviality", "conditioning"}));

  const std::pair<const char*, const char*> commands[] = {
      {"phase", "Critical temperature, phase and maximizers"},
      {"free-energy", "Log partition function and free energy per volume"},
      {"weights", "Weight W_n^+ of the plus state along n"},
      {"gibbs", "Monte Carlo Gibbs expectations against the limit state"},
      {"laplace", "Laplace ratio of the half-disk integrals"},
      {"metastate", "Metastate experiments selected by --mode"}};
  for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    out << app.help();
    return 0;
  } catch (const CLI::ParseError& e) {
    err << "error: " << e.what() << '\n';
    return 2;
  }

  cfg.command = app.get_subcommands().front()->get_name();
  cfg.beta = beta;
  cfg.J = J;
  if (!dist.empty()) cfg.dist = dist;
  if (!schedule.empty()) cfg.schedule = schedule;
  if (app.count("--N")) cfg.N = N;
  if (!out_path.empty()) cfg.out = out_path;

  const auto start = std::chrono::steady_clock::now();
  Result result;
  try {
    result = dispatch(cfg);
  } catch (const Error& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  const double seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();

  json summary;
  summary["config"] = config_json(cfg);
  summary["results"] = result.results;
  summary["runtime_seconds"] = seconds;
  summary["build_id"] = build_id();
  const std::string csv = result.table.csv();
  const std::string js = summary.dump(2) + "\n";

  if (cfg.out) {
    const std::string base = strip_extension(*cfg.out);
    const std::string csv_path = base + ".csv";
    const std::string json_path = base + ".json";
    std::ofstream fc(csv_path, std::ios::binary);
    std::ofstream fj(json_path, std::ios::binary);
    fc << csv;
    fj << js;
    fc.close();
    fj.close();
    if (!fc || !fj) {
      std::error_code ec;
      std::filesystem::remove(csv_path, ec);
      std::filesystem::remove(json_path, ec);
      err << "error: cannot write " << csv_path << " / " << json_path << '\n';
      return 1;
    }
  }
  if (cfg.format == "csv")
    out << csv;
  else if (cfg.format == "json")
    out << js;
  else
    out << result.text;
  return 0;
}

}  // namespace rfmfs

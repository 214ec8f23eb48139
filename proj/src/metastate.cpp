#include "rfmfs/metastate.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "rfmfs/errors.hpp"
#include "rfmfs/numerics.hpp"
#include "rfmfs/parallel.hpp"

namespace rfmfs {

namespace {

void require_two_point(const ModelParams& params, const FieldPair& m, const char* who) {
  const Phase phase = classify_phase(params, m);
  if (phase != Phase::SpinGlass) {
    std::ostringstream os;
    os << who << ": phase is " << to_string(phase)
       << "; the limit state is unique here and the metastate is trivial (see triviality_check)";
    throw PhaseError(os.str());
  }
}

std::vector<double> average(const std::vector<std::vector<double>>& rows, std::size_t width) {
  std::vector<double> out(width, 0.0);
  for (const auto& r : rows)
    for (std::size_t k = 0; k < width; ++k) out[k] += r[k];
  for (double& v : out) v /= static_cast<double>(std::max<std::size_t>(1, rows.size()));
  return out;
}

}  // namespace

std::string to_string(FingerprintSource source) {
  switch (source) {
    case FingerprintSource::limit:
      return "limit";
    case FingerprintSource::exact:
      return "exact";
    case FingerprintSource::surrogate:
      return "surrogate";
  }
  return "?";
}

double fingerprint_distance(const Fingerprint& a, const Fingerprint& b) {
  if (a.values.size() != b.values.size())
    throw ParameterError("fingerprint_distance: dictionaries differ in size");
  double d = 0.0;
  for (std::size_t k = 0; k < a.values.size(); ++k)
    d = std::max(d, std::abs(a.values[k] - b.values[k]));
  return d;
}

Fingerprint mix(double w, const Fingerprint& a, const Fingerprint& b) {
  if (a.values.size() != b.values.size()) throw ParameterError("mix: dictionaries differ in size");
  Fingerprint out{std::vector<double>(a.values.size()), FingerprintSource::surrogate, 0};
  for (std::size_t k = 0; k < a.values.size(); ++k)
    out.values[k] = w * a.values[k] + (1.0 - w) * b.values[k];
  return out;
}

Fingerprint fingerprint_limit_state(const DiskPoint& z, const FieldSample& field,
                                    const FieldPair& m, const Dictionary& dictionary) {
  Fingerprint fp{{}, FingerprintSource::limit, 0};
  fp.values.reserve(dictionary.size());
  const auto moments = [&](std::size_t i) { return limit_state_moments(z, field, m, i); };
  for (const auto& f : dictionary) fp.values.push_back(f.gaussian_expectation(moments));
  return fp;
}

double field_weight_plus(const FieldSample& field, long long n, const ModelParams& params) {
  if (n < 1 || static_cast<std::size_t>(n) > field.size())
    throw IndexError("field_weight_plus: n outside [1, field length]");
  const FieldStats stats = field_stats(field, static_cast<std::size_t>(n));
  if (n < kMinVolume || !(stats.m_perp > 0.0)) {
    const double s = field.sum1(static_cast<std::size_t>(n));
    return s > 0.0 ? 1.0 : (s < 0.0 ? 0.0 : 0.5);
  }
  return weight_plus(n, params, stats).w_plus;
}

Fingerprint surrogate_fingerprint(const FieldSample& field, long long n, const ModelParams& params,
                                  const Dictionary& dictionary) {
  const FieldPair m = field.limit();
  require_two_point(params, m, "surrogate_fingerprint");
  const auto ms = maximizers(params, m);
  const double w = field_weight_plus(field, n, params);
  Fingerprint fp = mix(w, fingerprint_limit_state(ms.plus(), field, m, dictionary),
                       fingerprint_limit_state(ms.minus(), field, m, dictionary));
  fp.n = n;
  return fp;
}

Fingerprint exact_fingerprint(const FieldSample& field, long long n, const ModelParams& params,
                              const Dictionary& dictionary, std::size_t samples, RngStream& rng) {
  if (samples < 1) throw ParameterError("exact_fingerprint: need at least one sample");
  const MicroSampler micro(field, n);
  const MixtureDensity rho(n, params, micro.stats());
  const auto support = dictionary_support(dictionary);
  Fingerprint fp{std::vector<double>(dictionary.size(), 0.0), FingerprintSource::exact, n};
  for (std::size_t s = 0; s < samples; ++s) {
    const DiskPoint z = rho.sample(rng);
    const SpinMarginal phi = micro.draw(z, support, rng);
    for (std::size_t k = 0; k < dictionary.size(); ++k) fp.values[k] += dictionary[k](phi);
  }
  for (double& v : fp.values) v /= static_cast<double>(samples);
  return fp;
}

double EmpiricalMetastate::fraction_plus() const {
  if (w_plus.empty()) return 0.0;
  std::size_t c = 0;
  for (double w : w_plus) c += w > 0.5;
  return static_cast<double>(c) / static_cast<double>(w_plus.size());
}

EmpiricalMetastate ns_metastate(const FieldSample& field, long long N, const ModelParams& params,
                                const Dictionary& dictionary, NsMode mode, RngStream* rng,
                                std::size_t exact_samples, unsigned threads) {
  if (N < 1 || static_cast<std::size_t>(N) > field.size())
    throw IndexError("ns_metastate: N outside [1, field length]");
  if (mode == NsMode::exact && rng == nullptr)
    throw ParameterError("ns_metastate: exact mode needs a random stream");
  const FieldPair m = field.limit();
  require_two_point(params, m, "ns_metastate");
  const auto ms = maximizers(params, m);

  EmpiricalMetastate out;
  out.N = N;
  out.mode = mode;
  out.fp_plus = fingerprint_limit_state(ms.plus(), field, m, dictionary);
  out.fp_minus = fingerprint_limit_state(ms.minus(), field, m, dictionary);
  out.t_plus = t_plus(field, static_cast<std::size_t>(N));
  out.w_plus.resize(static_cast<std::size_t>(N));
  out.atoms.resize(static_cast<std::size_t>(N));

  // Exact atoms draw from per-volume child streams, so results do not
  // depend on the worker count.
  const RngStream base = rng ? *rng : RngStream(0, 0);
  parallel_for(static_cast<std::size_t>(N), threads, [&](std::size_t k) {
    const long long n = static_cast<long long>(k) + 1;
    const double w = field_weight_plus(field, n, params);
    out.w_plus[k] = w;
    if (mode == NsMode::exact && n >= kMinVolume && field_stats(field, k + 1).m_perp > 0.0) {
      RngStream child = base.child(static_cast<std::uint64_t>(n));
      out.atoms[k] = exact_fingerprint(field, n, params, dictionary, exact_samples, child);
    } else {
      out.atoms[k] = mix(w, out.fp_plus, out.fp_minus);
      out.atoms[k].n = n;
    }
  });
  return out;
}

AwSummary aw_experiment(const DistributionSpec& spec, long long n, std::size_t replicas,
                        const ModelParams& params, const RngStream& rng,
                        const Dictionary& dictionary, unsigned threads) {
  if (replicas < 1) throw ParameterError("aw_experiment: need at least one replica");
  if (n < kMinVolume) throw ParameterError("aw_experiment: n must be at least 5");
  const Phase phase = classify_phase(params, spec);
  if (phase != Phase::SpinGlass)
    throw PhaseError("aw_experiment: phase is " + to_string(phase) + ", expected SpinGlass");
  const FieldPair m = spec.limit();
  const auto ms = maximizers(params, m);

  AwSummary out;
  out.n = n;
  out.replicas = replicas;
  out.records.resize(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    RngStream stream = rng.child(r);
    const FieldSample field = sample_field(spec, static_cast<std::size_t>(n), stream);
    const FieldStats stats = field_stats(field, static_cast<std::size_t>(n));
    AwRecord rec;
    rec.replica = r;
    rec.m_par = stats.m_par;
    rec.m_perp = stats.m_perp;
    rec.w_plus = field_weight_plus(field, n, params);
    rec.fingerprint = mix(rec.w_plus, fingerprint_limit_state(ms.plus(), field, m, dictionary),
                          fingerprint_limit_state(ms.minus(), field, m, dictionary))
                          .values;
    out.records[r] = std::move(rec);
  });
  std::size_t plus = 0;
  std::vector<std::vector<double>> rows;
  rows.reserve(replicas);
  for (const auto& rec : out.records) {
    plus += rec.w_plus > 0.5;
    rows.push_back(rec.fingerprint);
  }
  out.fraction_plus = static_cast<double>(plus) / static_cast<double>(replicas);
  out.mean_fingerprint = average(rows, dictionary.size());
  return out;
}

ArcsineSummary arcsine_experiment(const DistributionSpec& spec, long long N, std::size_t replicas,
                                  const RngStream& rng, unsigned threads) {
  if (N < 1) throw ParameterError("arcsine_experiment: N must be positive");
  if (replicas < 1) throw ParameterError("arcsine_experiment: need at least one replica");
  ArcsineSummary out;
  if (spec.mean() != 0.0) {
    out.drift = true;
    std::ostringstream os;
    os << "field mean " << spec.mean() << " is nonzero: T_N+ drifts to "
       << (spec.mean() > 0.0 ? 1 : 0) << " instead of following the arcsine law";
    out.warning = os.str();
  }
  out.t_values.resize(replicas);
  parallel_for(replicas, threads, [&](std::size_t r) {
    RngStream stream = rng.child(r);
    const FieldSample field = sample_field(spec, static_cast<std::size_t>(N), stream);
    out.t_values[r] = t_plus(field, static_cast<std::size_t>(N));
  });
  out.ks = ks_distance(out.t_values, arcsine_cdf);
  return out;
}

double csd_target_walk(double lambda, const ModelParams& params, const MaximizerSet& maximizers) {
  if (!(lambda > 0.0 && lambda < 1.0)) throw ParameterError("csd: lambda must lie in (0, 1)");
  if (!maximizers.is_two()) throw PhaseError("csd: needs the two-point maximizer set");
  return std::log(lambda / (1.0 - lambda)) / (2.0 * params.beta * maximizers.plus().x);
}

std::optional<CsdHit> csd_search(const FieldSample& field, double lambda, const ModelParams& params,
                                 const MaximizerSet& maximizers, long long n_max, double tol) {
  const double p1 = csd_target_walk(lambda, params, maximizers);
  if (!(tol > 0.0)) throw ParameterError("csd_search: tol must be positive");
  const long long last = std::min<long long>(n_max, static_cast<long long>(field.size()));
  for (long long n = kMinVolume; n <= last; ++n) {
    const double s1 = shifted_walk(field, static_cast<std::size_t>(n)).first;
    if (!(std::abs(s1 - p1) < 0.5)) continue;
    const FieldStats stats = field_stats(field, static_cast<std::size_t>(n));
    if (!(stats.m_perp > 0.0)) continue;
    const double w = weight_plus(n, params, stats).w_plus;
    if (std::abs(w - lambda) <= tol) return CsdHit{n, w, s1};
  }
  return std::nullopt;
}

double cesaro_miss_rate(const std::function<FieldStats(long long)>& stats, const FieldPair& m,
                        long long N, double delta) {
  if (!(delta > 0.0 && delta < 1.0 / 6.0))
    throw ParameterError("cesaro_miss_rate: delta must lie in (0, 1/6)");
  if (N < 1) throw ParameterError("cesaro_miss_rate: N must be positive");
  long long miss = 0;
  for (long long n = 1; n <= N; ++n) miss += !conditioning_indicator(stats(n), m, n, delta);
  return static_cast<double>(miss) / static_cast<double>(N);
}

double cesaro_miss_rate(const FieldSample& field, long long N, double delta) {
  if (N < 1 || static_cast<std::size_t>(N) > field.size())
    throw IndexError("cesaro_miss_rate: N outside [1, field length]");
  return cesaro_miss_rate(
      [&](long long n) { return field_stats(field, static_cast<std::size_t>(n)); }, field.limit(),
      N, delta);
}

TrivialityReport triviality_check(const FieldSample& field, const ModelParams& params,
                                  const std::vector<long long>& n_grid,
                                  const Dictionary& dictionary) {
  const FieldPair m = field.limit();
  const Phase phase = classify_phase(params, m);
  if (phase == Phase::SpinGlass)
    throw PhaseError("triviality_check: phase is SpinGlass; the metastate is not trivial");
  if (n_grid.empty()) throw ParameterError("triviality_check: empty n grid");

  TrivialityReport out;
  out.z_star = maximizers(params, m).single();
  out.limit = fingerprint_limit_state(out.z_star, field, m, dictionary);
  out.n_grid = n_grid;
  for (long long n : n_grid) {
    if (n < kMinVolume || static_cast<std::size_t>(n) > field.size())
      throw IndexError("triviality_check: n outside [5, field length]");
    const FieldStats stats = field_stats(field, static_cast<std::size_t>(n));
    const MixtureDensity rho(n, params, stats);
    const FieldPair mn = stats.pair();
    Fingerprint fp{{}, FingerprintSource::surrogate, n};
    for (const auto& f : dictionary) {
      fp.values.push_back(rho.expectation(
          [&](const DiskPoint& z) {
            return f.gaussian_expectation(
                [&](std::size_t i) { return limit_state_moments(z, field, mn, i); });
          },
          Region::full, 30.0));
    }
    out.deviation.push_back(fingerprint_distance(fp, out.limit));
    out.fingerprints.push_back(std::move(fp));
  }
  return out;
}

TrivialityReport triviality_check(const DistributionSpec& spec, const ModelParams& params,
                                  const std::vector<long long>& n_grid,
                                  const Dictionary& dictionary, RngStream& rng) {
  if (n_grid.empty()) throw ParameterError("triviality_check: empty n grid");
  const Phase phase = classify_phase(params, spec);
  if (phase == Phase::SpinGlass)
    throw PhaseError("triviality_check: phase is SpinGlass; the metastate is not trivial");
  const long long n_max = *std::max_element(n_grid.begin(), n_grid.end());
  if (n_max < kMinVolume) throw ParameterError("triviality_check: n grid must reach 5");
  const FieldSample field = sample_field(spec, static_cast<std::size_t>(n_max), rng);
  return triviality_check(field, params, n_grid, dictionary);
}

}  // namespace rfmfs

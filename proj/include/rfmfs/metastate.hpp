#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "rfmfs/fields.hpp"
#include "rfmfs/gibbs.hpp"
#include "rfmfs/rng.hpp"
#include "rfmfs/tilting.hpp"

namespace rfmfs {

enum class FingerprintSource { limit, exact, surrogate };

std::string to_string(FingerprintSource source);

// Expectations of a fixed dictionary of test functions under one state.
struct Fingerprint {
  std::vector<double> values;
  FingerprintSource source = FingerprintSource::limit;
  long long n = 0;  // volume, 0 for limit states
};

// Largest coordinatewise difference.
double fingerprint_distance(const Fingerprint& a, const Fingerprint& b);

// w a + (1 - w) b.
Fingerprint mix(double w, const Fingerprint& a, const Fingerprint& b);

// nu_infinity^{z,h}[f] for every f in the dictionary, by Gaussian quadrature.
Fingerprint fingerprint_limit_state(const DiskPoint& z, const FieldSample& field,
                                    const FieldPair& m, const Dictionary& dictionary);

// W_n^+ for the field prefix of length n. Below the mixture volume, or when
// the prefix is constant, falls back to the sign of the partial sum
// (1/2 on a tie).
double field_weight_plus(const FieldSample& field, long long n, const ModelParams& params);

// w_n^+ fp(nu^{z+}) + (1 - w_n^+) fp(nu^{z-}) with z+- the two maximizers
// for the field's limit pair.
Fingerprint surrogate_fingerprint(const FieldSample& field, long long n, const ModelParams& params,
                                  const Dictionary& dictionary);

// Monte Carlo fingerprint of mu_n (mixture draw, then microcanonical draw).
Fingerprint exact_fingerprint(const FieldSample& field, long long n, const ModelParams& params,
                              const Dictionary& dictionary, std::size_t samples, RngStream& rng);

enum class NsMode { surrogate, exact };

struct EmpiricalMetastate {
  long long N = 0;
  NsMode mode = NsMode::surrogate;
  std::vector<Fingerprint> atoms;  // atom n - 1 belongs to volume n
  std::vector<double> w_plus;
  Fingerprint fp_plus;
  Fingerprint fp_minus;
  double t_plus = 0.0;

  double atom_weight() const { return 1.0 / static_cast<double>(N); }
  // Fraction of atoms with W_n^+ > 1/2.
  double fraction_plus() const;
};

// Cesaro metastate (1/N) sum_n delta_{mu_n} over n = 1..N, recorded as
// fingerprints. Requires the two-point phase for the field's limit pair.
EmpiricalMetastate ns_metastate(const FieldSample& field, long long N, const ModelParams& params,
                                const Dictionary& dictionary, NsMode mode,
                                RngStream* rng = nullptr, std::size_t exact_samples = 2000,
                                unsigned threads = 0);

struct AwRecord {
  std::size_t replica = 0;
  double w_plus = 0.0;
  double m_par = 0.0;
  double m_perp = 0.0;
  std::vector<double> fingerprint;
};

struct AwSummary {
  long long n = 0;
  std::size_t replicas = 0;
  double fraction_plus = 0.0;
  std::vector<double> mean_fingerprint;
  std::vector<AwRecord> records;
};

// Independent field replicas at volume n; replica r uses rng.child(r).
AwSummary aw_experiment(const DistributionSpec& spec, long long n, std::size_t replicas,
                        const ModelParams& params, const RngStream& rng,
                        const Dictionary& dictionary = default_dictionary(), unsigned threads = 0);

struct ArcsineSummary {
  double ks = 0.0;
  std::vector<double> t_values;
  bool drift = false;
  std::string warning;
};

// KS distance of replica T_N^+ values from the arcsine law.
ArcsineSummary arcsine_experiment(const DistributionSpec& spec, long long N, std::size_t replicas,
                                  const RngStream& rng, unsigned threads = 0);

struct CsdHit {
  long long n = 0;
  double w_plus = 0.0;
  double shifted_s1 = 0.0;
};

// Walk level p1 = log(lambda / (1 - lambda)) / (2 beta x+) at which the
// limiting weight equals lambda.
double csd_target_walk(double lambda, const ModelParams& params, const MaximizerSet& maximizers);

// First n in [5, n_max] with |W_n^+ - lambda| <= tol. Weights are computed
// only where the shifted walk is within 1/2 of the target level.
std::optional<CsdHit> csd_search(const FieldSample& field, double lambda, const ModelParams& params,
                                 const MaximizerSet& maximizers, long long n_max, double tol);

// (1/N) sum_{n <= N} 1(m_n - m outside the conditioning band).
double cesaro_miss_rate(const FieldSample& field, long long N, double delta);
double cesaro_miss_rate(const std::function<FieldStats(long long)>& stats, const FieldPair& m,
                        long long N, double delta);

struct TrivialityReport {
  DiskPoint z_star;
  Fingerprint limit;
  std::vector<long long> n_grid;
  std::vector<Fingerprint> fingerprints;
  std::vector<double> deviation;
};

// In the one-point phase, fingerprints of mu_n (quadrature over rho_n of the
// limiting Gaussian states at the finite-n field statistics) against the
// single limit fingerprint.
TrivialityReport triviality_check(const FieldSample& field, const ModelParams& params,
                                  const std::vector<long long>& n_grid,
                                  const Dictionary& dictionary);
TrivialityReport triviality_check(const DistributionSpec& spec, const ModelParams& params,
                                  const std::vector<long long>& n_grid,
                                  const Dictionary& dictionary, RngStream& rng);

}  // namespace rfmfs

#include "rfmfs/fields.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>
#include <sstream>

#include "rfmfs/errors.hpp"

namespace rfmfs {

namespace {

template <class... Ts>
struct overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
overloaded(Ts...) -> overloaded<Ts...>;

std::vector<std::string_view> split(std::string_view text, char sep) {
  std::vector<std::string_view> parts;
  std::size_t start = 0;
  while (true) {
    const auto pos = text.find(sep, start);
    parts.push_back(text.substr(start, pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

double parse_number(std::string_view token, std::string_view context) {
  while (!token.empty() && token.front() == ' ') token.remove_prefix(1);
  while (!token.empty() && token.back() == ' ') token.remove_suffix(1);
  if (!token.empty() && token.front() == '+') token.remove_prefix(1);
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), v);
  if (ec != std::errc() || ptr != token.data() + token.size() || !std::isfinite(v))
    throw ParameterError("cannot parse '" + std::string(token) + "' as a number in '" +
                         std::string(context) + "'");
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(17);
  os << v;
  return os.str();
}

std::array<double, 4> raw_moments(const DistributionSpec::Variant& law) {
  return std::visit(
      overloaded{
          [](const Rademacher& d) {
            const double s2 = d.scale * d.scale;
            return std::array<double, 4>{0.0, s2, 0.0, s2 * s2};
          },
          [](const Bernoulli& d) {
            std::array<double, 4> m{};
            double pa = 1.0;
            double pb = 1.0;
            for (int k = 0; k < 4; ++k) {
              pa *= d.a;
              pb *= d.b;
              m[k] = d.p * pa + (1.0 - d.p) * pb;
            }
            return m;
          },
          [](const Gaussian& d) {
            const double mu = d.mean;
            const double s2 = d.sd * d.sd;
            return std::array<double, 4>{mu, mu * mu + s2, mu * mu * mu + 3.0 * mu * s2,
                                         mu * mu * mu * mu + 6.0 * mu * mu * s2 + 3.0 * s2 * s2};
          },
          [](const Uniform& d) {
            std::array<double, 4> m{};
            double lo = d.lo;
            double hi = d.hi;
            for (int k = 0; k < 4; ++k) {
              lo *= d.lo;
              hi *= d.hi;
              m[k] = (hi - lo) / ((k + 2) * (d.hi - d.lo));
            }
            return m;
          },
      },
      law);
}

void validate(const DistributionSpec::Variant& law) {
  std::visit(overloaded{
                 [](const Rademacher& d) {
                   if (!(d.scale > 0.0) || !std::isfinite(d.scale))
                     throw ParameterError("rademacher: scale must be positive");
                 },
                 [](const Bernoulli& d) {
                   if (!(d.p >= 0.0 && d.p <= 1.0))
                     throw ParameterError("bernoulli: p must lie in [0, 1]");
                   if (!std::isfinite(d.a) || !std::isfinite(d.b))
                     throw ParameterError("bernoulli: values must be finite");
                 },
                 [](const Gaussian& d) {
                   if (!std::isfinite(d.mean)) throw ParameterError("gaussian: mean must be finite");
                   if (!(d.sd > 0.0) || !std::isfinite(d.sd))
                     throw ParameterError("gaussian: sd must be positive");
                 },
                 [](const Uniform& d) {
                   if (!std::isfinite(d.lo) || !std::isfinite(d.hi) || !(d.lo < d.hi))
                     throw ParameterError("uniform: need finite lo < hi");
                 },
             },
             law);
}

}  // namespace

DistributionSpec::DistributionSpec(Variant law) : law_(law) {
  validate(law_);
  moments_ = raw_moments(law_);
}

DistributionSpec DistributionSpec::parse(std::string_view text) {
  const auto parts = split(text, ':');
  const std::string kind = lower(parts[0]);
  auto arg = [&](std::size_t i) { return parse_number(parts[i], text); };
  auto expect = [&](std::size_t count) {
    if (parts.size() != count + 1) {
      std::ostringstream os;
      os << "distribution '" << text << "': " << kind << " takes " << count << " parameter"
         << (count == 1 ? "" : "s");
      throw ParameterError(os.str());
    }
  };
  if (kind == "rademacher") {
    if (parts.size() == 1) return DistributionSpec(Rademacher{1.0});
    expect(1);
    return DistributionSpec(Rademacher{arg(1)});
  }
  if (kind == "bernoulli") {
    expect(3);
    return DistributionSpec(Bernoulli{arg(1), arg(2), arg(3)});
  }
  if (kind == "gaussian" || kind == "normal") {
    expect(2);
    return DistributionSpec(Gaussian{arg(1), arg(2)});
  }
  if (kind == "uniform") {
    expect(2);
    return DistributionSpec(Uniform{arg(1), arg(2)});
  }
  throw ParameterError("unknown distribution '" + std::string(parts[0]) +
                       "' (expected rademacher, bernoulli, gaussian or uniform)");
}

std::string DistributionSpec::to_string() const {
  return std::visit(
      overloaded{
          [](const Rademacher& d) { return "rademacher:" + fmt(d.scale); },
          [](const Bernoulli& d) {
            return "bernoulli:" + fmt(d.p) + ":" + fmt(d.a) + ":" + fmt(d.b);
          },
          [](const Gaussian& d) { return "gaussian:" + fmt(d.mean) + ":" + fmt(d.sd); },
          [](const Uniform& d) { return "uniform:" + fmt(d.lo) + ":" + fmt(d.hi); },
      },
      law_);
}

double DistributionSpec::tail_exponent() const { return std::numeric_limits<double>::infinity(); }

bool DistributionSpec::satisfies_a1() const {
  return variance() > 1e-12 * std::max(1.0, moments_[1]);
}

bool DistributionSpec::satisfies_a2() const {
  const double v2 = moments_[3] - moments_[1] * moments_[1];
  return v2 > 1e-12 * std::max(1.0, moments_[3]);
}

bool DistributionSpec::satisfies_a3() const {
  return std::holds_alternative<Gaussian>(law_) || std::holds_alternative<Uniform>(law_);
}

FieldPair DistributionSpec::limit() const { return {mean(), std::sqrt(std::max(0.0, variance()))}; }

Eigen::Matrix2d DistributionSpec::clt_covariance() const {
  const double m1 = moments_[0];
  const double m2 = moments_[1];
  const double m3 = moments_[2];
  const double m4 = moments_[3];
  const double s = std::sqrt(std::max(0.0, variance()));
  if (!(s > 0.0)) throw AssumptionError("clt_covariance: field variance is zero");
  Eigen::Matrix2d sigma0;
  sigma0 << m2 - m1 * m1, m3 - m1 * m2, m3 - m1 * m2, m4 - m2 * m2;
  Eigen::Matrix2d d;
  d << 1.0, 0.0, -m1 / s, 0.5 / s;
  return d * sigma0 * d.transpose();
}

double DistributionSpec::draw(RngStream& rng) const {
  return std::visit(overloaded{
                        [&](const Rademacher& d) { return rng.uniform() < 0.5 ? -d.scale : d.scale; },
                        [&](const Bernoulli& d) { return rng.uniform() < d.p ? d.a : d.b; },
                        [&](const Gaussian& d) { return d.mean + d.sd * rng.normal(); },
                        [&](const Uniform& d) { return d.lo + (d.hi - d.lo) * rng.uniform(); },
                    },
                    law_);
}

// ---------------------------------------------------------------------------

void FieldSample::build_walk() {
  s1_.resize(values_.size());
  s2_.resize(values_.size());
  double a = 0.0;
  double b = 0.0;
  for (std::size_t i = 0; i < values_.size(); ++i) {
    if (!std::isfinite(values_[i])) throw ParameterError("field values must be finite");
    a += values_[i];
    b += values_[i] * values_[i];
    s1_[i] = a;
    s2_[i] = b;
  }
}

FieldSample FieldSample::deterministic(std::vector<double> values,
                                       std::optional<std::array<double, 2>> limit_moments) {
  if (values.empty()) throw ParameterError("field: need at least one value");
  FieldSample f;
  f.values_ = std::move(values);
  f.moments_ = limit_moments;
  f.build_walk();
  return f;
}

double FieldSample::sum1(std::size_t k) const {
  if (k == 0) return 0.0;
  if (k > s1_.size()) throw IndexError("field: prefix length exceeds the sample");
  return s1_[k - 1];
}

double FieldSample::sum2(std::size_t k) const {
  if (k == 0) return 0.0;
  if (k > s2_.size()) throw IndexError("field: prefix length exceeds the sample");
  return s2_[k - 1];
}

std::array<double, 2> FieldSample::limit_moments() const {
  if (!moments_) throw ParameterError("field: deterministic sample has no declared moments");
  return *moments_;
}

FieldPair FieldSample::limit() const {
  const auto [m1, m2] = limit_moments();
  return {m1, std::sqrt(std::max(0.0, m2 - m1 * m1))};
}

FieldSample FieldSample::scaled(double factor) const {
  FieldSample f;
  f.values_.reserve(values_.size());
  for (double v : values_) f.values_.push_back(factor * v);
  if (moments_) f.moments_ = std::array<double, 2>{factor * (*moments_)[0], factor * factor * (*moments_)[1]};
  f.seed_ = seed_;
  f.stream_id_ = stream_id_;
  f.build_walk();
  return f;
}

FieldSample sample_field(const DistributionSpec& spec, std::size_t n, RngStream& rng) {
  if (n < 1) throw ParameterError("sample_field: n must be at least 1");
  FieldSample f;
  f.seed_ = rng.seed();
  f.stream_id_ = rng.stream_id();
  f.values_.resize(n);
  for (auto& v : f.values_) v = spec.draw(rng);
  f.spec_ = spec;
  f.moments_ = std::array<double, 2>{spec.moment(1), spec.moment(2)};
  f.build_walk();
  return f;
}

FieldStats field_stats(const FieldSample& sample, std::size_t k) {
  if (k < 1 || k > sample.size()) {
    std::ostringstream os;
    os << "field_stats: k = " << k << " outside [1, " << sample.size() << "]";
    throw IndexError(os.str());
  }
  const double kk = static_cast<double>(k);
  const double mean = sample.sum1(k) / kk;
  const double var = sample.sum2(k) / kk - mean * mean;
  return {mean, std::sqrt(std::max(0.0, var)), static_cast<long long>(k)};
}

StatsSchedule StatsSchedule::parse(std::string_view text) {
  const auto parts = split(text, ':');
  if (parts.size() != 5)
    throw ParameterError("schedule '" + std::string(text) +
                         "': expected m_par:m_perp:gamma_par:gamma_perp:delta");
  StatsSchedule s;
  s.m = {parse_number(parts[0], text), parse_number(parts[1], text)};
  s.gamma = {parse_number(parts[2], text), parse_number(parts[3], text)};
  s.delta = parse_number(parts[4], text);
  if (!(s.m.perp > 0.0)) throw ParameterError("schedule: m_perp must be positive");
  if (!(s.delta >= 0.0)) throw ParameterError("schedule: delta must be nonnegative");
  return s;
}

FieldStats schedule_stats(const StatsSchedule& schedule, long long n) {
  if (n < 1) throw ParameterError("schedule_stats: n must be at least 1");
  if (!(schedule.delta >= 0.0)) throw ParameterError("schedule_stats: delta must be nonnegative");
  const double scale = std::pow(static_cast<double>(n), -schedule.delta);
  FieldStats s{schedule.m.par + schedule.gamma.par * scale,
               schedule.m.perp + schedule.gamma.perp * scale, n};
  if (!(s.m_perp > 0.0)) {
    std::ostringstream os;
    os << "schedule_stats: m_perp = " << s.m_perp << " <= 0 at n = " << n;
    throw ParameterError(os.str());
  }
  return s;
}

std::pair<double, double> shifted_walk(const FieldSample& sample, std::size_t k) {
  const auto [m1, m2] = sample.limit_moments();
  if (k > sample.size()) throw IndexError("shifted_walk: k exceeds the sample");
  const double kk = static_cast<double>(k);
  return {sample.sum1(k) - kk * m1, sample.sum2(k) - kk * m2};
}

double t_plus(const FieldSample& sample, std::size_t N) {
  if (N < 1 || N > sample.size()) throw IndexError("t_plus: N outside [1, sample size]");
  std::size_t count = 0;
  for (std::size_t k = 1; k <= N; ++k) count += sample.sum1(k) > 0.0;
  return static_cast<double>(count) / static_cast<double>(N);
}

bool conditioning_indicator(const FieldStats& stats, const FieldPair& m, long long n, double delta) {
  if (!(delta > 0.0 && delta < 1.0 / 6.0))
    throw ParameterError("conditioning_indicator: delta must lie in (0, 1/6)");
  if (n < 1) throw ParameterError("conditioning_indicator: n must be at least 1");
  const double nn = static_cast<double>(n);
  const double lo = std::pow(nn, -0.5 - delta);
  const double hi = std::pow(nn, -0.5 + delta);
  const double a = std::abs(stats.m_par - m.par);
  const double b = std::abs(stats.m_perp - m.perp);
  return a >= lo && a <= hi && b >= lo && b <= hi;
}

}  // namespace rfmfs

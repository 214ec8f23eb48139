#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "rfmfs/asymptotics.hpp"
#include "rfmfs/cli.hpp"
#include "rfmfs/errors.hpp"
#include "rfmfs/fields.hpp"
#include "rfmfs/gibbs.hpp"
#include "rfmfs/metastate.hpp"
#include "rfmfs/tilting.hpp"

namespace py = pybind11;
using namespace rfmfs;

namespace {

std::vector<std::pair<double, double>> points(const MaximizerSet& ms) {
  std::vector<std::pair<double, double>> out;
  for (const auto& z : ms.points()) out.emplace_back(z.x, z.y);
  return out;
}

}  // namespace

PYBIND11_MODULE(_rfmfs, m) {
  m.doc() = "Random-field mean-field spherical model";

  static py::exception<Error> base(m, "Error", PyExc_RuntimeError);
  py::register_exception<ParameterError>(m, "ParameterError", base.ptr());
  py::register_exception<DomainError>(m, "DomainError", base.ptr());
  py::register_exception<PhaseError>(m, "PhaseError", base.ptr());
  py::register_exception<DegenerateFieldError>(m, "DegenerateFieldError", base.ptr());
  py::register_exception<AssumptionError>(m, "AssumptionError", base.ptr());

  m.def("build_id", &build_id);

  m.def("psi", [](double x, double y, double beta, double J, double m_par, double m_perp) {
    return psi({x, y}, {beta, J}, {m_par, m_perp});
  }, py::arg("x"), py::arg("y"), py::arg("beta"), py::arg("J"), py::arg("m_par"), py::arg("m_perp"));

  m.def("beta_critical", &beta_critical, py::arg("J"), py::arg("m_perp"));

  m.def("maximizers", [](double beta, double J, double m_par, double m_perp) {
    return points(maximizers({beta, J}, {m_par, m_perp}));
  }, py::arg("beta"), py::arg("J"), py::arg("m_par"), py::arg("m_perp"));

  m.def("classify_phase", [](double beta, double J, const std::string& dist) {
    return to_string(classify_phase({beta, J}, DistributionSpec::parse(dist)));
  }, py::arg("beta"), py::arg("J"), py::arg("dist"));

  m.def("moments", [](const std::string& dist) {
    const auto s = DistributionSpec::parse(dist);
    return std::vector<double>{s.moment(1), s.moment(2), s.moment(3), s.moment(4)};
  }, py::arg("dist"));

  m.def("sample_field", [](const std::string& dist, std::size_t n, std::uint64_t seed, std::uint64_t stream) {
    RngStream rng(seed, stream);
    const auto f = sample_field(DistributionSpec::parse(dist), n, rng);
    return std::vector<double>(f.values().begin(), f.values().end());
  }, py::arg("dist"), py::arg("n"), py::arg("seed") = 1, py::arg("stream") = 0);

  m.def("field_stats", [](std::vector<double> values, std::size_t k) {
    const auto st = field_stats(FieldSample::deterministic(std::move(values)), k);
    return std::pair{st.m_par, st.m_perp};
  }, py::arg("values"), py::arg("k"));

  m.def("t_plus", [](std::vector<double> values, std::size_t N) {
    return t_plus(FieldSample::deterministic(std::move(values)), N);
  }, py::arg("values"), py::arg("N"));

  m.def("log_partition", [](long long n, double beta, double J, double m_par, double m_perp) {
    return log_partition(n, {beta, J}, {m_par, m_perp, n});
  }, py::arg("n"), py::arg("beta"), py::arg("J"), py::arg("m_par"), py::arg("m_perp"));

  m.def("weight_plus", [](long long n, double beta, double J, double m_par, double m_perp) {
    return weight_plus(n, {beta, J}, {m_par, m_perp, n}).w_plus;
  }, py::arg("n"), py::arg("beta"), py::arg("J"), py::arg("m_par"), py::arg("m_perp"));

  m.def("weight_limit", [](double delta, double gamma_par, double gamma_perp, double beta, double J,
                           double m_par, double m_perp) {
    const ModelParams p{beta, J};
    return weight_limit(delta, {gamma_par, gamma_perp}, p, maximizers(p, {m_par, m_perp}));
  }, py::arg("delta"), py::arg("gamma_par"), py::arg("gamma_perp"), py::arg("beta"), py::arg("J"),
     py::arg("m_par"), py::arg("m_perp"));

  m.def("laplace_ratio", [](long long n, double beta, double J, double m_par, double m_perp, double x, double y) {
    const Region half = x > 0 ? Region::half_plus : (x < 0 ? Region::half_minus : Region::full);
    const auto lr = laplace_ratio(n, {beta, J}, {m_par, m_perp, n}, {x, y}, half);
    return std::pair{lr.ratio, lr.limit};
  }, py::arg("n"), py::arg("beta"), py::arg("J"), py::arg("m_par"), py::arg("m_perp"), py::arg("x"), py::arg("y"));

  m.def("arcsine_ks", [](const std::string& dist, long long N, std::size_t replicas, std::uint64_t seed) {
    py::gil_scoped_release release;
    return arcsine_experiment(DistributionSpec::parse(dist), N, replicas, RngStream(seed, 0)).ks;
  }, py::arg("dist"), py::arg("N"), py::arg("replicas"), py::arg("seed") = 1);

  m.def("run_cli", [](std::vector<std::string> args) {
    args.insert(args.begin(), "rfmfs");
    std::vector<const char*> argv;
    for (const auto& a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    const int code = run_cli(static_cast<int>(argv.size()), argv.data(), out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"));
}

#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace rfmfs {

// Fully resolved run description; every output embeds it.
struct RunConfig {
  std::string command;  // phase | free-energy | weights | gibbs | laplace | metastate
  std::string mode;     // metastate: aw | ns | arcsine | csd | triviality | conditioning
  std::optional<double> beta;
  std::optional<double> J;
  std::optional<std::string> dist;
  std::optional<std::string> schedule;
  std::vector<long long> n;
  std::optional<long long> N;
  std::size_t replicas = 1;
  std::uint64_t seed = 1;
  unsigned threads = 0;
  std::string format = "text";  // text | csv | json, for stdout
  std::optional<std::string> out;
  std::size_t samples = 2000;
  std::vector<double> lambda{0.2, 0.5, 0.8};
  long long n_max = 1000000;
  double tol = 0.05;
  double delta = 0.1;
  std::string ns_mode = "surrogate";
};

// Build identifier captured at configure time.
const char* build_id();

// Entry point of the command-line tool. Returns the process exit status.
// With --out PATH the CSV table goes to PATH.csv and the JSON summary to
// PATH.json; files are written only after the whole run succeeded.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace rfmfs

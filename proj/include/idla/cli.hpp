#pragma once

// Command-line front end: percolate, simulate and experiment subcommands.

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace idla {

/// Bad flags or an unknown suite. Maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  std::string command;
  int dim = 2;
  int extent = 10;
  double p = 1.0;
  std::optional<std::uint64_t> seed;
  int max_attempts = 64;
  std::optional<std::string> manifest;  // load the environment from here

  std::optional<std::uint64_t> particles;
  std::optional<double> radius;
  bool staged = false;

  std::size_t replicas = 100;
  std::size_t samples = 1000;
  std::size_t configs = 20;
  std::vector<std::string> suites;
  std::vector<double> alphas{0.5};
  std::vector<double> schedule;

  unsigned workers = 1;
  std::string out = ".";
  bool raster = true;
  bool timestamp = true;

  /// Every field as text, in a fixed order, for the run manifest.
  std::map<std::string, std::string> describe() const;
};

std::vector<std::string> available_suites();

/// Each command writes its artifacts into config.out and returns the paths
/// written. Runtime failures propagate as exceptions.
std::vector<std::string> cmd_percolate(const RunConfig& config);
std::vector<std::string> cmd_simulate(const RunConfig& config);
std::vector<std::string> cmd_experiment(const RunConfig& config);

/// Parses argv and runs. Returns 0 on success, 1 on usage errors and 2 on
/// runtime errors, with diagnostics on `err`.
int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err);

}  // namespace idla

#pragma once

// Coefficient-first pipeline: limit problems (cached by config hash), then the
// asymptotic model, then optional direct verification. Emits CSV tables, a
// JSON summary and a text report into the output directory.

#include <array>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qwg/config.hpp"

namespace qwg {

inline constexpr const char* kToolVersion = "0.1.0";

struct SpinCoefficients {
  double k0_sq = 0.0;
  double k0_sq_fine = 0.0;
  double k0_sq_coarse = 0.0;
  double gap = 0.0;
  double residual = 0.0;
  std::array<cplx, 2> b{};
  std::array<cplx, 2> b_green{};
  std::array<double, 2> fit_residual{};
  /// Channel constants at k0 (G1 side; G3 is its mirror).
  cplx a;
  cplx A;
  double lemma_residual = 0.0;
  double channel_leak = 0.0;
  std::vector<ExpansionSample> samples;
};

struct Coefficients {
  std::string hash;
  std::vector<double> thresholds;
  std::vector<double> threshold_errors;
  double theta = 0.0;
  double mu1 = 0.0;
  double mu2 = 0.0;
  double alpha = 0.0;
  double beta = 0.0;
  double alpha_error = 0.0;
  double beta_error = 0.0;
  bool field_active = false;
  /// First-order oracle 2 int H |v0|^2, averaged over the two spin eigenfunctions.
  double zeeman_oracle = 0.0;
  std::array<SpinCoefficients, 2> spin;  // plus, minus
};

/// Solves every limit problem; independent solves run on up to `threads` workers.
Coefficients compute_coefficients(const PipelineConfig& config);
AsymptoticModel build_model(const PipelineConfig& config, const Coefficients& coefficients, Spin spin);

std::string coefficients_json(const Coefficients& c, const PipelineConfig& config);
Coefficients coefficients_from_json(const std::string& text);

struct CacheEntry {
  std::string hash;
  std::string path;
  std::uintmax_t bytes = 0;
};

/// One immutable JSON record per config hash in a directory.
class CoefficientCache {
 public:
  explicit CoefficientCache(std::string dir);
  /// Record for the config, if present and recorded with the same tool version and settings.
  std::optional<Coefficients> load(const PipelineConfig& config) const;
  bool contains(const PipelineConfig& config) const;
  /// Writes the record unless one already exists.
  void store(const Coefficients& c, const PipelineConfig& config) const;
  std::vector<CacheEntry> list() const;
  /// Removes one record (by hash prefix) or all; returns the number removed.
  int remove(const std::string& hash_prefix) const;
  int clear() const;
  const std::string& dir() const { return dir_; }

 private:
  std::string path_for(const std::string& hash) const;
  std::string dir_;
};

/// Runs the configured mode. Returns the process exit status (0, 2 or 3).
int run_pipeline(const PipelineConfig& config, std::ostream& log);

/// Resolved parameters, the stage plan, regime warnings and the cache plan.
std::string explain(const PipelineConfig& config);

/// RFC-4180 field quoting.
std::string csv_field(const std::string& s);

}  // namespace qwg

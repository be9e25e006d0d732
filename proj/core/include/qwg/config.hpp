#pragma once

// Pipeline configuration: JSON schema, validation, canonical form and the
// content hash that keys the coefficient cache.

#include <cstdint>
#include <string>
#include <vector>

#include "qwg/asymptotics.hpp"
#include "qwg/channel.hpp"
#include "qwg/direct.hpp"
#include "qwg/junction.hpp"
#include "qwg/resonator.hpp"
#include "qwg/spectral.hpp"

namespace qwg {

enum class RunMode { coefficients, asymptotics, direct, full, ladder };

struct AsymptoticSettings {
  ModelMode model = ModelMode::leading;
  double regime_threshold = 0.05;
  double tau_delta = 0.1;
  int profile_points = 201;
  /// Profile spans k_r^2 +- this many widths.
  double profile_half_widths = 5.0;
  /// Regularized expansion sampled at k0^2 +- offset (full model).
  double expansion_offset = 0.05;
};

struct DirectSettings {
  DirectOptions options;
  ScanOptions scan;
  /// Ladder mode: confirm this many of the largest eps with the direct solver.
  int ladder_confirm = 2;
};

struct PipelineConfig {
  WaveguideSpec geometry;
  RunMode mode = RunMode::coefficients;
  /// Strictly decreasing eps values for ladder mode.
  std::vector<double> ladder;
  /// Energy window holding exactly one resonator eigenvalue.
  Window window{6.0, 12.0};
  double spectral_h = 0.04;
  ModeOptions modes;
  CapOptions cap;
  JunctionOptions junction;
  ChannelOptions channel;
  ResonatorOptions resonator;
  AsymptoticSettings asymptotics;
  DirectSettings direct;
  std::string output = "qwg-out";
  std::string cache = "qwg-cache";
  int threads = 1;
};

const char* mode_name(RunMode m);
RunMode parse_mode(const std::string& s);

/// Parses and validates; throws a config error listing every problem found.
PipelineConfig parse_config(const std::string& json_text);
PipelineConfig load_config(const std::string& path);

/// Canonical JSON of every field (resolved defaults included), pretty-printed.
std::string canonical_json(const PipelineConfig& config);

/// FNV-1a 64 over the canonical JSON of the geometry and all solver settings
/// (mode, ladder, output, cache path and thread count excluded).
std::uint64_t config_hash(const PipelineConfig& config);
/// The exact text that config_hash digests.
std::string hash_input(const PipelineConfig& config);
std::string hash_hex(std::uint64_t h);
std::uint64_t fnv1a(const std::string& bytes);

}  // namespace qwg

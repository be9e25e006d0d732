// qwg: resonant tunneling through a two-narrow quantum waveguide.
//
//   qwg run --config c.json [--mode M] [--out DIR] [--threads N]
//   qwg explain --config c.json
//   qwg cache ls [--config c.json | --dir DIR]
//   qwg cache rm (HASH_PREFIX | --all) [--config c.json | --dir DIR]
//
// Exit codes: 0 ok, 2 configuration error, 3 numerical failure.

#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "qwg/config.hpp"
#include "qwg/error.hpp"
#include "qwg/pipeline.hpp"

namespace {

struct Overrides {
  std::string mode, out;
  int threads = 0;
};

qwg::PipelineConfig read_config(const std::string& path, const Overrides& o) {
  std::ifstream in(path);
  if (!in) throw qwg::config_error("config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  nlohmann::ordered_json j;
  try {
    j = nlohmann::ordered_json::parse(ss.str());
  } catch (const std::exception& e) {
    throw qwg::config_error("config", std::string("malformed JSON: ") + e.what());
  }
  // Command-line flags go through the same validation as the file.
  if (j.is_object()) {
    if (!o.mode.empty()) j["mode"] = o.mode;
    if (!o.out.empty()) j["output"] = o.out;
    if (o.threads > 0) j["threads"] = o.threads;
  }
  return qwg::parse_config(j.dump());
}

std::string cache_dir(const std::string& config, const std::string& dir) {
  if (!dir.empty()) return dir;
  if (!config.empty()) return read_config(config, {}).cache;
  return "qwg-cache";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Resonant tunneling and spin polarization in a waveguide with two conical narrows"};
  app.require_subcommand(1);

  std::string config;
  Overrides o;
  auto* run = app.add_subcommand("run", "Run the configured pipeline");
  run->add_option("--config", config, "Config JSON")->required();
  run->add_option("--mode", o.mode, "coefficients, asymptotics, direct, full or ladder");
  run->add_option("--out", o.out, "Output directory");
  run->add_option("--threads", o.threads, "Concurrent limit-problem solves")->check(CLI::PositiveNumber);

  auto* exp = app.add_subcommand("explain", "Print the resolved plan without solving");
  exp->add_option("--config", config, "Config JSON")->required();
  exp->add_option("--mode", o.mode, "Override the run mode");

  auto* cache = app.add_subcommand("cache", "Inspect the coefficient cache");
  cache->require_subcommand(1);
  std::string dir, prefix;
  bool all = false;
  auto* ls = cache->add_subcommand("ls", "List cached records");
  ls->add_option("--config", config, "Take the cache directory from this config");
  ls->add_option("--dir", dir, "Cache directory");
  auto* rm = cache->add_subcommand("rm", "Remove cached records");
  rm->add_option("hash", prefix, "Hash or hash prefix");
  rm->add_flag("--all", all, "Remove every record");
  rm->add_option("--config", config, "Take the cache directory from this config");
  rm->add_option("--dir", dir, "Cache directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    int code = app.exit(e);
    return code == 0 ? 0 : 2;
  }

  try {
    if (*run) return qwg::run_pipeline(read_config(config, o), std::cerr);
    if (*exp) {
      std::cout << qwg::explain(read_config(config, o));
      return 0;
    }
    qwg::CoefficientCache store(cache_dir(config, dir));
    if (*ls) {
      for (const auto& e : store.list()) std::cout << e.hash << "  " << e.bytes << "  " << e.path << "\n";
      return 0;
    }
    if (*rm) {
      if (all == !prefix.empty()) {
        std::cerr << "cache rm: give either a hash prefix or --all\n";
        return 2;
      }
      int n = all ? store.clear() : store.remove(prefix);
      std::cout << "removed " << n << " record(s)\n";
      return 0;
    }
  } catch (const qwg::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return e.kind() == qwg::ErrorKind::config ? 2 : 3;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 3;
  }
  return 0;
}

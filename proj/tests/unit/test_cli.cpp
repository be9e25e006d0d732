#include <sys/wait.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <sstream>

#include "doctest.h"
#include "json.hpp"
#include "qwg/config.hpp"
#include "qwg/error.hpp"
#include "qwg/pipeline.hpp"

using namespace qwg;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch_dir(const std::string& tag) {
  std::random_device rd;
  fs::path p = fs::temp_directory_path() / ("qwg-test-" + tag + "-" + std::to_string(rd()));
  fs::create_directories(p);
  return p;
}

json reference_json() { return json::parse(slurp(fs::path(QWG_CONFIG_DIR) / "reference.json")); }

std::string config_error_text(const std::string& text) {
  try {
    parse_config(text);
  } catch (const Error& e) {
    CHECK(e.kind() == ErrorKind::config);
    return e.what();
  }
  FAIL("expected a configuration error");
  return {};
}

// Every numeric leaf of the canonical JSON, with its path.
void numeric_leaves(const json& j, const json::json_pointer& at, std::vector<json::json_pointer>& out) {
  if (j.is_object()) {
    for (auto& [k, v] : j.items()) numeric_leaves(v, at / k, out);
  } else if (j.is_array()) {
    for (std::size_t i = 0; i < j.size(); ++i) numeric_leaves(j[i], at / i, out);
  } else if (j.is_number()) {
    out.push_back(at);
  }
}

#ifdef QWG_TOOL_PATH
int tool(const std::string& args) {
  std::string cmd = std::string(QWG_TOOL_PATH) + " " + args + " > /dev/null 2>&1";
  int status = std::system(cmd.c_str());
  return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

}  // namespace

TEST_SUITE("cli") {
  TEST_CASE("every configuration problem is reported at once") {
    std::string msg = config_error_text(R"({
      "geometry": {"cross_section": {"type": "disk", "radius": -1.0}, "epsilon": -0.3},
      "mode": "asymptotics", "threads": 0, "typo_field": 1})");
    CHECK(msg.find("geometry.narrows: missing required field") != std::string::npos);
    CHECK(msg.find("radius must be positive") != std::string::npos);
    CHECK(msg.find("epsilon must be positive") != std::string::npos);
    CHECK(msg.find("threads") != std::string::npos);
    CHECK(msg.find("typo_field") != std::string::npos);
  }

  TEST_CASE("missing narrows file") {
    std::string msg = config_error_text(slurp(fs::path(QWG_CONFIG_DIR) / "missing_narrows.json"));
    CHECK(msg.find("geometry.narrows: missing required field") != std::string::npos);
  }

  TEST_CASE("unknown mode and malformed JSON are configuration errors") {
    auto j = reference_json();
    j["mode"] = "sideways";
    CHECK(config_error_text(j.dump()).find("mode") != std::string::npos);
    CHECK_FALSE(config_error_text("{ not json").empty());
  }

  TEST_CASE("canonical form is a fixed point and d resolves to the tip positions") {
    auto c = parse_config(reference_json().dump());
    CHECK(c.geometry.narrows[0].tip_x == -1.25);
    CHECK(c.geometry.narrows[1].tip_x == 1.25);
    auto again = parse_config(canonical_json(c));
    CHECK(canonical_json(again) == canonical_json(c));
    CHECK(config_hash(again) == config_hash(c));
    CHECK(config_hash(c) == fnv1a(hash_input(c)));
  }

  TEST_CASE("FNV-1a 64 reference digests") {
    CHECK(fnv1a("") == 0xcbf29ce484222325ULL);
    CHECK(fnv1a("a") == 0xaf63dc4c8601ec8cULL);
    CHECK(hash_hex(0xaf63dc4c8601ec8cULL) == "af63dc4c8601ec8c");
  }

  TEST_CASE("hash changes with every solver or geometry number and ignores run-only fields") {
    auto base = parse_config(reference_json().dump());
    const auto h0 = config_hash(base);
    json canon = json::parse(canonical_json(base));
    std::vector<json::json_pointer> leaves;
    numeric_leaves(canon, json::json_pointer(), leaves);
    REQUIRE(leaves.size() > 40);
    int perturbed = 0;
    for (const auto& ptr : leaves) {
      const std::string path = ptr.to_string();
      json j = canon;
      double v = j[ptr].get<double>();
      j[ptr] = j[ptr].is_number_integer() ? json(j[ptr].get<long long>() + 1) : json(v == 0.0 ? 1e-3 : v * 1.01);
      PipelineConfig c;
      try {
        c = parse_config(j.dump());
      } catch (const Error&) {
        continue;  // perturbation left the valid range
      }
      const bool run_only = path == "/threads";
      CAPTURE(path);
      if (run_only)
        CHECK(config_hash(c) == h0);
      else
        CHECK(config_hash(c) != h0);
      ++perturbed;
    }
    CHECK(perturbed > 40);

    json j = canon;
    j["output"] = "elsewhere";
    j["cache"] = "other-cache";
    j["mode"] = "direct";
    j["ladder"] = {0.3, 0.2};
    CHECK(config_hash(parse_config(j.dump())) == h0);
    j = canon;
    j["direct"]["gauge"] = "raw";
    CHECK(config_hash(parse_config(j.dump())) != h0);
  }

  TEST_CASE("CSV field quoting") {
    CHECK(csv_field("plain") == "plain");
    CHECK(csv_field("a,b") == "\"a,b\"");
    CHECK(csv_field("say \"hi\"") == "\"say \"\"hi\"\"\"");
    CHECK(csv_field("two\nlines") == "\"two\nlines\"");
  }

  TEST_CASE("coefficient record round trip") {
    Coefficients c;
    c.hash = "0123456789abcdef";
    c.thresholds = {5.78, 14.68, 14.68};
    c.threshold_errors = {1e-4, 1e-3, 1e-3};
    c.mu1 = 1.77;
    c.mu2 = 3.19;
    c.alpha = 0.18;
    c.beta = 0.0029;
    c.spin[0].k0_sq = 8.53;
    c.spin[0].b = {cplx(3.7, 0), cplx(-1.0, 3.5)};
    c.spin[0].a = {1.17, 8.1};
    c.spin[0].A = {2.5, -1.37};
    c.spin[1] = c.spin[0];
    c.spin[1].samples = {{8.48, {cplx(1, 2), cplx(3, 4)}, {cplx(5, 6), cplx(7, 8)}}};
    auto cfg = parse_config(reference_json().dump());
    auto back = coefficients_from_json(coefficients_json(c, cfg));
    CHECK(back.hash == c.hash);
    CHECK(back.beta == c.beta);
    CHECK(back.spin[0].b[1] == c.spin[0].b[1]);
    CHECK(back.spin[0].A == c.spin[0].A);
    REQUIRE(back.spin[1].samples.size() == 1);
    CHECK(back.spin[1].samples[0].d[1] == cplx(7, 8));
  }

#ifdef QWG_TOOL_PATH
  TEST_CASE("exit codes") {
    const std::string cfg = std::string(QWG_CONFIG_DIR);
    CHECK(tool("explain --config " + cfg + "/reference.json") == 0);
    CHECK(tool("explain --config " + cfg + "/missing_narrows.json") == 2);
    CHECK(tool("run --config " + cfg + "/reference.json --mode sideways") == 2);
    CHECK(tool("run --config /nonexistent/qwg.json") == 2);
    CHECK(tool("--no-such-flag") == 2);
  }

  TEST_CASE("asymptotics run is deterministic and reuses the cache") {
    auto dir = scratch_dir("det");
    auto j = reference_json();
    j["cache"] = (dir / "cache").string();
    j["output"] = (dir / "out1").string();
    std::ofstream(dir / "cfg.json") << j.dump(2);
    const std::string cfg = (dir / "cfg.json").string();

    REQUIRE(tool("run --config " + cfg + " --threads 3") == 0);
    REQUIRE(tool("run --config " + cfg + " --out " + (dir / "out2").string()) == 0);
    const std::string a = slurp(dir / "out1" / "transmission.csv");
    CHECK(!a.empty());
    CHECK(a == slurp(dir / "out2" / "transmission.csv"));

    auto s1 = json::parse(slurp(dir / "out1" / "summary.json"));
    auto s2 = json::parse(slurp(dir / "out2" / "summary.json"));
    CHECK(s1["cache"] == "miss");
    CHECK(s2["cache"] == "hit");
    CHECK(s1["status"] == "ok");

    // Peak row against 4/(q + 1/q)^2 with q from the cached tip coefficients.
    auto rec = coefficients_from_json(slurp(dir / "cache" / (s1["hash"].get<std::string>() + ".json")));
    double q = std::abs(rec.spin[0].b[0]) / std::abs(rec.spin[0].b[1]);
    double tmax = 4.0 / ((q + 1 / q) * (q + 1 / q));
    std::istringstream rows(a);
    std::string line;
    std::getline(rows, line);
    CHECK(line.rfind("k_sq,T_plus,T_minus,polarization", 0) == 0);
    double best = 0.0;
    while (std::getline(rows, line)) {
      std::istringstream f(line);
      std::string k2, tp;
      std::getline(f, k2, ',');
      std::getline(f, tp, ',');
      best = std::max(best, std::stod(tp));
    }
    CHECK(best == doctest::Approx(tmax).epsilon(1e-9));
    CHECK(a.find("\r\n") != std::string::npos);

    CoefficientCache cache((dir / "cache").string());
    REQUIRE(cache.list().size() == 1);
    CHECK(tool("cache ls --dir " + (dir / "cache").string()) == 0);
    CHECK(tool("cache rm " + cache.list()[0].hash.substr(0, 6) + " --dir " + (dir / "cache").string()) == 0);
    CHECK(cache.list().empty());
    fs::remove_all(dir);
  }
#endif

  TEST_CASE("cache refuses records written under other settings") {
    auto dir = scratch_dir("cache");
    CoefficientCache cache(dir.string());
    auto cfg = parse_config(reference_json().dump());
    Coefficients c;
    c.hash = hash_hex(config_hash(cfg));
    c.thresholds = {5.78, 14.68};
    c.threshold_errors = {0, 0};
    cache.store(c, cfg);
    CHECK(cache.contains(cfg));
    auto other = cfg;
    other.resonator.h = 0.04;
    CHECK_FALSE(cache.contains(other));
    // Same file name, different recorded settings: treated as absent.
    fs::copy_file(fs::path(dir) / (c.hash + ".json"), fs::path(dir) / (hash_hex(config_hash(other)) + ".json"));
    CHECK_FALSE(cache.load(other).has_value());
    CHECK(cache.clear() == 2);
    fs::remove_all(dir);
  }
}

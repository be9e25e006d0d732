#include "qwg/config.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "qwg/error.hpp"

namespace qwg {

using json = nlohmann::ordered_json;

const char* mode_name(RunMode m) {
  switch (m) {
    case RunMode::coefficients: return "coefficients";
    case RunMode::asymptotics: return "asymptotics";
    case RunMode::direct: return "direct";
    case RunMode::full: return "full";
    case RunMode::ladder: return "ladder";
  }
  return "?";
}

RunMode parse_mode(const std::string& s) {
  for (RunMode m : {RunMode::coefficients, RunMode::asymptotics, RunMode::direct, RunMode::full, RunMode::ladder})
    if (s == mode_name(m)) return m;
  throw config_error("cli", "unknown mode '" + s + "' (coefficients, asymptotics, direct, full, ladder)");
}

namespace {

// Reads fields of one JSON object, collecting every problem instead of stopping at the first.
class Reader {
 public:
  Reader(const json& obj, std::string path, std::vector<std::string>& errors)
      : obj_(obj), path_(std::move(path)), errors_(errors) {
    if (!obj_.is_object()) errors_.push_back(path_ + ": expected an object");
  }

  bool has(const std::string& key) const { return obj_.is_object() && obj_.contains(key); }

  template <class T>
  void get(const std::string& key, T& out) {
    seen_.push_back(key);
    if (!has(key)) return;
    try {
      out = obj_.at(key).get<T>();
    } catch (const std::exception&) {
      errors_.push_back(field(key) + ": wrong type");
    }
  }

  template <class T>
  void require(const std::string& key, T& out) {
    if (!has(key)) errors_.push_back(field(key) + ": missing required field");
    get(key, out);
  }

  const json* child(const std::string& key) {
    seen_.push_back(key);
    return has(key) ? &obj_.at(key) : nullptr;
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void positive(const std::string& key, double v) {
    if (!(v > 0)) errors_.push_back(field(key) + ": must be positive");
  }
  void at_least(const std::string& key, int v, int lo) {
    if (v < lo) errors_.push_back(field(key) + ": must be >= " + std::to_string(lo));
  }

  /// Flags keys that no reader asked for (typos would otherwise silently fall back to defaults).
  void finish() {
    if (!obj_.is_object()) return;
    for (auto it = obj_.begin(); it != obj_.end(); ++it)
      if (std::find(seen_.begin(), seen_.end(), it.key()) == seen_.end())
        errors_.push_back(field(it.key()) + ": unknown field");
  }

 private:
  const json& obj_;
  std::string path_;
  std::vector<std::string>& errors_;
  std::vector<std::string> seen_;
};

void read_cross_section(const json& j, CrossSectionSpec& cs, std::vector<std::string>& err) {
  Reader r(j, "geometry.cross_section", err);
  std::string type = "disk";
  r.get("type", type);
  if (type == "disk") {
    Disk d;
    r.get("radius", d.radius);
    cs.shape = d;
  } else if (type == "rectangle") {
    Rectangle rc;
    r.get("a", rc.a);
    r.get("b", rc.b);
    cs.shape = rc;
  } else if (type == "polygon") {
    std::vector<std::array<double, 2>> v;
    r.require("vertices", v);
    Polygon p;
    for (auto& q : v) p.vertices.emplace_back(q[0], q[1]);
    cs.shape = p;
  } else {
    err.push_back("geometry.cross_section.type: expected disk, rectangle or polygon");
  }
  r.finish();
}

void read_narrow(const json& j, const std::string& path, NarrowSpec& n, bool tip_required,
                 std::vector<std::string>& err) {
  Reader r(j, path, err);
  if (tip_required)
    r.require("tip_x", n.tip_x);
  else
    r.get("tip_x", n.tip_x);
  r.get("half_angle", n.half_angle);
  if (const json* neck = r.child("neck")) {
    Reader nr(*neck, path + ".neck", err);
    std::string type = "hyperboloid";
    nr.get("type", type);
    if (type == "hyperboloid") {
      HyperboloidNeck h;
      nr.get("waist", h.waist);
      nr.get("blend_start", h.blend_start);
      nr.get("blend_end", h.blend_end);
      n.neck = h;
    } else if (type == "custom") {
      CustomNeck c;
      nr.require("t", c.t);
      nr.require("radius", c.radius);
      n.neck = c;
    } else {
      err.push_back(path + ".neck.type: expected hyperboloid or custom");
    }
    nr.finish();
  }
  r.finish();
}

void read_geometry(const json* j, WaveguideSpec& g, std::vector<std::string>& err) {
  if (!j) {
    err.push_back("geometry: missing required section");
    return;
  }
  Reader r(*j, "geometry", err);
  if (const json* cs = r.child("cross_section")) read_cross_section(*cs, g.cross_section, err);
  double d = 0.0;
  r.get("d", d);
  const bool by_d = r.has("d");
  if (const json* n = r.child("narrows")) {
    if (!n->is_array() || n->size() != 2) {
      err.push_back("geometry.narrows: expected an array of two narrows");
    } else {
      for (int i = 0; i < 2; ++i)
        read_narrow((*n)[static_cast<std::size_t>(i)], "geometry.narrows[" + std::to_string(i) + "]", g.narrows[i],
                    !by_d, err);
    }
  } else {
    err.push_back("geometry.narrows: missing required field");
  }
  if (by_d) {
    const bool tips = r.has("narrows") && (*j)["narrows"].is_array() && (*j)["narrows"].size() == 2 &&
                      (*j)["narrows"][0].contains("tip_x") && (*j)["narrows"][1].contains("tip_x");
    if (!(d > 0)) err.push_back("geometry.d: must be positive");
    if (tips) {
      if (std::abs(g.narrows[1].tip_x - g.narrows[0].tip_x - d) > 1e-12)
        err.push_back("geometry.d: inconsistent with the narrows' tip_x");
    } else {
      g.narrows[0].tip_x = -0.5 * d;
      g.narrows[1].tip_x = 0.5 * d;
    }
  }
  r.get("epsilon", g.epsilon);
  if (const json* s = r.child("solenoid")) {
    Reader sr(*s, "geometry.solenoid", err);
    auto& sol = g.solenoid;
    sr.get("x0", sol.x0);
    sr.get("y0", sol.y0);
    sr.get("radius", sol.radius);
    sr.get("profile", sol.profile);
    sr.get("gauge_inner", sol.gauge_inner);
    sr.get("gauge_outer", sol.gauge_outer);
    sr.finish();
  }
  r.finish();
  for (auto& e : g.validate()) err.push_back("geometry: " + e);
}

json geometry_json(const WaveguideSpec& g) {
  json cs;
  std::visit(
      [&](const auto& s) {
        using T = std::decay_t<decltype(s)>;
        if constexpr (std::is_same_v<T, Disk>) {
          cs = {{"type", "disk"}, {"radius", s.radius}};
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          cs = {{"type", "rectangle"}, {"a", s.a}, {"b", s.b}};
        } else {
          json v = json::array();
          for (auto& p : s.vertices) v.push_back({p.x(), p.y()});
          cs = {{"type", "polygon"}, {"vertices", v}};
        }
      },
      g.cross_section.shape);
  json narrows = json::array();
  for (const auto& n : g.narrows) {
    json neck;
    if (auto* h = std::get_if<HyperboloidNeck>(&n.neck))
      neck = {{"type", "hyperboloid"}, {"waist", h->waist}, {"blend_start", h->blend_start}, {"blend_end", h->blend_end}};
    else if (auto* c = std::get_if<CustomNeck>(&n.neck))
      neck = {{"type", "custom"}, {"t", c->t}, {"radius", c->radius}};
    narrows.push_back({{"tip_x", n.tip_x}, {"half_angle", n.half_angle}, {"neck", neck}});
  }
  const auto& s = g.solenoid;
  json sol = {{"x0", s.x0},           {"y0", s.y0},
              {"radius", s.radius},   {"profile", s.profile},
              {"gauge_inner", s.gauge_inner}, {"gauge_outer", s.gauge_outer}};
  return {{"cross_section", cs}, {"narrows", narrows}, {"epsilon", g.epsilon}, {"solenoid", sol}};
}

json solver_json(const PipelineConfig& c) {
  const auto& j = c.junction;
  const auto& ch = c.channel;
  const auto& r = c.resonator;
  const auto& a = c.asymptotics;
  const auto& d = c.direct.options;
  const auto& s = c.direct.scan;
  return {
      {"window", {c.window.lo, c.window.hi}},
      {"spectral",
       {{"h", c.spectral_h}, {"levels", c.modes.levels}, {"degeneracy_tol", c.modes.degeneracy_tol},
        {"eig_tol", c.modes.eig_tol}}},
      {"cap",
       {{"m_max", c.cap.m_max}, {"mu_max", c.cap.mu_max}, {"steps", c.cap.steps}, {"scan_step", c.cap.scan_step},
        {"root_tol", c.cap.root_tol}}},
      {"junction",
       {{"h", j.h}, {"r_max", j.r_max}, {"probe_lo", j.probe_lo}, {"probe_hi", j.probe_hi}, {"probes", j.probes},
        {"scale", j.scale}, {"beta_floor", j.beta_floor}, {"error_bar_tol", j.error_bar_tol}}},
      {"channel",
       {{"h", ch.h}, {"length", ch.length}, {"n_evanescent", ch.n_evanescent}, {"cutoff", ch.cutoff},
        {"probes", ch.probes}, {"probe_min_h", ch.probe_min_h}, {"amplification_ceiling", ch.amplification_ceiling}}},
      {"resonator",
       {{"h", r.h}, {"coarse_factor", r.coarse_factor}, {"nev", r.nev}, {"eig_tol", r.eig_tol}, {"b_min", r.b_min},
        {"cutoff", r.cutoff}, {"probes", r.probes}, {"probe_min_h", r.probe_min_h}, {"fit_tol", r.fit_tol},
        {"deflation_floor", r.deflation_floor}}},
      {"asymptotics",
       {{"model", a.model == ModelMode::full ? "full" : "leading"}, {"regime_threshold", a.regime_threshold},
        {"tau_delta", a.tau_delta}, {"profile_points", a.profile_points},
        {"profile_half_widths", a.profile_half_widths}, {"expansion_offset", a.expansion_offset}}},
      {"direct",
       {{"h", d.h},
        {"length", d.length},
        {"n_evanescent", d.n_evanescent},
        {"min_waist_voxels", d.min_waist_voxels},
        {"x_ref", d.x_ref},
        {"gauge", d.gauge == GaugeChoice::raw ? "raw" : "modified"},
        {"amplification_ceiling", d.amplification_ceiling},
        {"gmres_restart", d.gmres_restart},
        {"gmres_max_iterations", d.gmres_max_iterations},
        {"gmres_tol", d.gmres_tol},
        {"ladder_confirm", c.direct.ladder_confirm},
        {"scan",
         {{"points", s.points}, {"span", s.span}, {"max_secant", s.max_secant}, {"secant_tol", s.secant_tol},
          {"secant_step", s.secant_step}, {"search_radius", s.search_radius}}}}}};
}

}  // namespace

PipelineConfig parse_config(const std::string& text) {
  json root;
  try {
    root = json::parse(text);
  } catch (const std::exception& e) {
    throw config_error("config", std::string("malformed JSON: ") + e.what());
  }
  std::vector<std::string> err;
  PipelineConfig c;
  Reader r(root, "", err);
  read_geometry(r.child("geometry"), c.geometry, err);

  std::string mode = "coefficients";
  r.get("mode", mode);
  try {
    c.mode = parse_mode(mode);
  } catch (const Error& e) {
    err.push_back(std::string("mode: ") + e.what());
  }
  r.get("ladder", c.ladder);
  for (std::size_t i = 1; i < c.ladder.size(); ++i)
    if (!(c.ladder[i] < c.ladder[i - 1])) err.push_back("ladder: eps values must be strictly decreasing");
  for (double e : c.ladder)
    if (!(e > 0)) err.push_back("ladder: eps values must be positive");
  if (c.mode == RunMode::ladder && c.ladder.size() < 3) err.push_back("ladder: ladder mode needs at least 3 eps values");
  std::array<double, 2> win{c.window.lo, c.window.hi};
  r.get("window", win);
  c.window = {win[0], win[1]};
  if (!(c.window.hi > c.window.lo)) err.push_back("window: expected [lo, hi] with lo < hi");
  r.get("output", c.output);
  r.get("cache", c.cache);
  r.get("threads", c.threads);
  r.at_least("threads", c.threads, 1);

  if (const json* s = r.child("spectral")) {
    Reader sr(*s, "spectral", err);
    sr.get("h", c.spectral_h);
    sr.get("levels", c.modes.levels);
    sr.get("degeneracy_tol", c.modes.degeneracy_tol);
    sr.get("eig_tol", c.modes.eig_tol);
    sr.positive("h", c.spectral_h);
    sr.at_least("levels", c.modes.levels, 2);
    sr.finish();
  }
  if (const json* s = r.child("cap")) {
    Reader sr(*s, "cap", err);
    sr.get("m_max", c.cap.m_max);
    sr.get("mu_max", c.cap.mu_max);
    sr.get("steps", c.cap.steps);
    sr.get("scan_step", c.cap.scan_step);
    sr.get("root_tol", c.cap.root_tol);
    sr.at_least("m_max", c.cap.m_max, 1);
    sr.at_least("steps", c.cap.steps, 100);
    sr.finish();
  }
  if (const json* s = r.child("junction")) {
    Reader sr(*s, "junction", err);
    auto& j = c.junction;
    sr.get("h", j.h);
    sr.get("r_max", j.r_max);
    sr.get("probe_lo", j.probe_lo);
    sr.get("probe_hi", j.probe_hi);
    sr.get("probes", j.probes);
    sr.get("scale", j.scale);
    sr.get("beta_floor", j.beta_floor);
    sr.get("error_bar_tol", j.error_bar_tol);
    sr.positive("h", j.h);
    sr.positive("scale", j.scale);
    sr.at_least("probes", j.probes, 3);
    sr.finish();
  }
  if (const json* s = r.child("channel")) {
    Reader sr(*s, "channel", err);
    auto& ch = c.channel;
    sr.get("h", ch.h);
    sr.get("length", ch.length);
    sr.get("n_evanescent", ch.n_evanescent);
    sr.get("cutoff", ch.cutoff);
    sr.get("probes", ch.probes);
    sr.get("probe_min_h", ch.probe_min_h);
    sr.get("amplification_ceiling", ch.amplification_ceiling);
    sr.positive("h", ch.h);
    sr.positive("length", ch.length);
    sr.at_least("n_evanescent", ch.n_evanescent, 0);
    sr.at_least("probes", ch.probes, 3);
    sr.finish();
  }
  if (const json* s = r.child("resonator")) {
    Reader sr(*s, "resonator", err);
    auto& rs = c.resonator;
    sr.get("h", rs.h);
    sr.get("coarse_factor", rs.coarse_factor);
    sr.get("nev", rs.nev);
    sr.get("eig_tol", rs.eig_tol);
    sr.get("b_min", rs.b_min);
    sr.get("cutoff", rs.cutoff);
    sr.get("probes", rs.probes);
    sr.get("probe_min_h", rs.probe_min_h);
    sr.get("fit_tol", rs.fit_tol);
    sr.get("deflation_floor", rs.deflation_floor);
    sr.positive("h", rs.h);
    sr.at_least("nev", rs.nev, 2);
    sr.at_least("probes", rs.probes, 3);
    sr.finish();
  }
  if (const json* s = r.child("asymptotics")) {
    Reader sr(*s, "asymptotics", err);
    auto& a = c.asymptotics;
    std::string model = "leading";
    sr.get("model", model);
    if (model == "full")
      a.model = ModelMode::full;
    else if (model != "leading")
      err.push_back("asymptotics.model: expected leading or full");
    sr.get("regime_threshold", a.regime_threshold);
    sr.get("tau_delta", a.tau_delta);
    sr.get("profile_points", a.profile_points);
    sr.get("profile_half_widths", a.profile_half_widths);
    sr.get("expansion_offset", a.expansion_offset);
    sr.at_least("profile_points", a.profile_points, 2);
    sr.positive("profile_half_widths", a.profile_half_widths);
    sr.positive("expansion_offset", a.expansion_offset);
    if (!(a.tau_delta > 0 && a.tau_delta < 2)) err.push_back("asymptotics.tau_delta: must lie in (0, 2)");
    sr.finish();
  }
  if (const json* s = r.child("direct")) {
    Reader sr(*s, "direct", err);
    auto& d = c.direct.options;
    sr.get("h", d.h);
    sr.get("length", d.length);
    sr.get("n_evanescent", d.n_evanescent);
    sr.get("min_waist_voxels", d.min_waist_voxels);
    sr.get("x_ref", d.x_ref);
    std::string gauge = "modified";
    sr.get("gauge", gauge);
    if (gauge == "raw")
      d.gauge = GaugeChoice::raw;
    else if (gauge != "modified")
      err.push_back("direct.gauge: expected modified or raw");
    sr.get("amplification_ceiling", d.amplification_ceiling);
    sr.get("gmres_restart", d.gmres_restart);
    sr.get("gmres_max_iterations", d.gmres_max_iterations);
    sr.get("gmres_tol", d.gmres_tol);
    sr.get("ladder_confirm", c.direct.ladder_confirm);
    sr.positive("h", d.h);
    sr.positive("length", d.length);
    sr.at_least("gmres_restart", d.gmres_restart, 1);
    sr.at_least("ladder_confirm", c.direct.ladder_confirm, 0);
    if (const json* sc = sr.child("scan")) {
      Reader cr(*sc, "direct.scan", err);
      auto& s2 = c.direct.scan;
      cr.get("points", s2.points);
      cr.get("span", s2.span);
      cr.get("max_secant", s2.max_secant);
      cr.get("secant_tol", s2.secant_tol);
      cr.get("secant_step", s2.secant_step);
      cr.get("search_radius", s2.search_radius);
      cr.at_least("points", s2.points, 3);
      cr.positive("span", s2.span);
      cr.finish();
    }
    sr.finish();
  }
  r.finish();

  if (!err.empty()) {
    std::string msg = std::to_string(err.size()) + " configuration problem(s):";
    for (auto& e : err) msg += "\n  " + e;
    throw config_error("config", msg);
  }
  return c;
}

PipelineConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw config_error("config", "cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

std::string canonical_json(const PipelineConfig& c) {
  json j = {{"geometry", geometry_json(c.geometry)},
            {"mode", mode_name(c.mode)},
            {"ladder", c.ladder},
            {"output", c.output},
            {"cache", c.cache},
            {"threads", c.threads}};
  json solvers = solver_json(c);
  for (auto& [k, v] : solvers.items()) j[k] = v;
  return j.dump(2);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : bytes) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::string hash_input(const PipelineConfig& c) {
  json j = {{"geometry", geometry_json(c.geometry)}, {"solvers", solver_json(c)}};
  return j.dump();
}

std::uint64_t config_hash(const PipelineConfig& c) { return fnv1a(hash_input(c)); }

std::string hash_hex(std::uint64_t h) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace qwg

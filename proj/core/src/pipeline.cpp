#include "qwg/pipeline.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <future>
#include <sstream>

#include "json.hpp"
#include "qwg/channel.hpp"
#include "qwg/error.hpp"
#include "qwg/junction.hpp"
#include "qwg/resonator.hpp"
#include "qwg/spectral.hpp"

namespace qwg {

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

json cjson(cplx z) { return json::array({z.real(), z.imag()}); }
cplx cread(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

// Runs independent jobs on at most `threads` workers; the first failure is rethrown.
void run_jobs(std::vector<std::function<void()>>& jobs, int threads) {
  if (threads <= 1) {
    for (auto& job : jobs) job();
    return;
  }
  std::size_t next = 0;
  while (next < jobs.size()) {
    std::vector<std::future<void>> batch;
    for (int t = 0; t < threads && next < jobs.size(); ++t, ++next)
      batch.push_back(std::async(std::launch::async, jobs[next]));
    std::exception_ptr first;
    for (auto& f : batch) {
      try {
        f.get();
      } catch (...) {
        if (!first) first = std::current_exception();
      }
    }
    if (first) std::rethrow_exception(first);
  }
}

void require_mirror_narrows(const WaveguideSpec& g) {
  const auto& n0 = g.narrows[0];
  const auto& n1 = g.narrows[1];
  bool same = std::abs(n0.half_angle - n1.half_angle) < 1e-12 && n0.neck.index() == n1.neck.index();
  if (same) {
    if (auto* h0 = std::get_if<HyperboloidNeck>(&n0.neck)) {
      auto* h1 = std::get_if<HyperboloidNeck>(&n1.neck);
      same = h0->waist == h1->waist && h0->blend_start == h1->blend_start && h0->blend_end == h1->blend_end;
    } else {
      auto* c0 = std::get_if<CustomNeck>(&n0.neck);
      auto* c1 = std::get_if<CustomNeck>(&n1.neck);
      same = c0->t == c1->t && c0->radius == c1->radius;
    }
  }
  if (!same) throw config_error("pipeline", "the two narrows must be mirror images (same half-angle and neck profile)");
}

SpinCoefficients spin_coefficients(const PipelineConfig& cfg, const CapSpectrum& cap, Spin spin, double& zeeman) {
  const auto& g = cfg.geometry;
  auto rs = resonator_eigenpair(g, cap, spin, cfg.window, cfg.resonator);
  SpinCoefficients sc;
  sc.k0_sq = rs.k0_sq;
  sc.k0_sq_fine = rs.k0_sq_fine;
  sc.k0_sq_coarse = rs.k0_sq_coarse;
  sc.gap = rs.gap;
  sc.residual = rs.residual;
  sc.b = rs.b;
  sc.b_green = rs.b_green;
  sc.fit_residual = rs.fit_residual;
  zeeman = g.solenoid.active() ? zeeman_splitting_oracle(g.solenoid, rs.grid, rs.v0) : 0.0;

  auto ch = channel_constants(g, cap, std::sqrt(rs.k0_sq), 0, cfg.channel);
  sc.a = ch.a;
  sc.A = ch.A;
  sc.lemma_residual = ch.lemma_residual;
  sc.channel_leak = std::abs(ch.singular_leak);

  if (cfg.asymptotics.model == ModelMode::full) {
    // Sampled on the resonator's own grid around its fine-grid eigenvalue, then
    // relabelled relative to the extrapolated k0^2 so the pole sits where the
    // leading model puts it.
    const double off = cfg.asymptotics.expansion_offset;
    for (double s : {-off, off}) {
      double k_sq = rs.k0_sq_fine + s;
      auto ex = regularized_expansion(g, cap, rs, std::sqrt(k_sq), cfg.resonator);
      sc.samples.push_back({rs.k0_sq + s, ex.c, ex.d});
    }
  }
  return sc;
}

}  // namespace

Coefficients compute_coefficients(const PipelineConfig& cfg) {
  const auto& g = cfg.geometry;
  g.require_valid();
  require_mirror_narrows(g);
  Coefficients c;
  c.hash = hash_hex(config_hash(cfg));
  c.theta = g.narrows[0].half_angle;

  ModeBasis modes;
  CapSpectrum cap;
  JunctionCoefficients jc;
  std::array<double, 2> zeeman{};
  bool field = g.solenoid.active();
  c.field_active = field;

  std::vector<std::function<void()>> first = {
      [&] { modes = cross_section_modes(g.cross_section, cfg.spectral_h, 3, cfg.modes); },
      [&] { cap = cap_spectrum(c.theta, cfg.cap); }};
  run_jobs(first, cfg.threads);

  std::vector<std::function<void()>> second = {
      [&] { jc = junction_coefficients(g.narrows[0], cap, cfg.junction); },
      [&] { c.spin[0] = spin_coefficients(cfg, cap, Spin::plus, zeeman[0]); }};
  if (field) second.push_back([&] { c.spin[1] = spin_coefficients(cfg, cap, Spin::minus, zeeman[1]); });
  run_jobs(second, cfg.threads);
  if (!field) c.spin[1] = c.spin[0];

  c.thresholds = modes.thresholds;
  c.threshold_errors = modes.errors;
  c.mu1 = cap.mu1;
  c.mu2 = cap.mu2;
  c.alpha = jc.alpha;
  c.beta = jc.beta;
  c.alpha_error = jc.alpha_error;
  c.beta_error = jc.beta_error;
  c.zeeman_oracle = field ? 0.5 * (zeeman[0] + zeeman[1]) : 0.0;

  for (const auto& s : c.spin)
    if (!(s.k0_sq > modes.lambda1_sq() && s.k0_sq < modes.lambda2_sq()))
      throw numerical_error("pipeline", "resonator eigenvalue k0^2 = " + std::to_string(s.k0_sq) +
                                            " lies outside the single-channel window");
  return c;
}

AsymptoticModel build_model(const PipelineConfig& cfg, const Coefficients& c, Spin spin) {
  const auto& s = c.spin[spin == Spin::plus ? 0 : 1];
  AsymptoticModel m;
  m.mu1 = c.mu1;
  m.mu2 = c.mu2;
  m.alpha = c.alpha;
  m.beta = c.beta;
  m.a = s.a;
  m.A = s.A;
  m.lambda1_sq = c.thresholds.at(0);
  m.d = cfg.geometry.d();
  m.channel.spin = spin;
  m.channel.k0_sq = s.k0_sq;
  m.channel.b = s.b;
  m.channel.samples = s.samples;
  m.mode = cfg.asymptotics.model;
  m.regime_threshold = cfg.asymptotics.regime_threshold;
  m.tau_delta = cfg.asymptotics.tau_delta;
  m.validate();
  return m;
}

// --- serialization ----------------------------------------------------------

namespace {

json spin_json(const SpinCoefficients& s) {
  json samples = json::array();
  for (const auto& e : s.samples)
    samples.push_back({{"k_sq", e.k_sq},
                       {"c", {cjson(e.c[0]), cjson(e.c[1])}},
                       {"d", {cjson(e.d[0]), cjson(e.d[1])}}});
  return {{"k0_sq", s.k0_sq},
          {"k0_sq_error", std::abs(s.k0_sq_fine - s.k0_sq)},
          {"k0_sq_fine", s.k0_sq_fine},
          {"k0_sq_coarse", s.k0_sq_coarse},
          {"gap", s.gap},
          {"residual", s.residual},
          {"b", {cjson(s.b[0]), cjson(s.b[1])}},
          {"b_green", {cjson(s.b_green[0]), cjson(s.b_green[1])}},
          {"b_error", {std::abs(s.b[0] - s.b_green[0]), std::abs(s.b[1] - s.b_green[1])}},
          {"fit_residual", s.fit_residual},
          {"a", cjson(s.a)},
          {"A", cjson(s.A)},
          {"lemma_residual", s.lemma_residual},
          {"channel_leak", s.channel_leak},
          {"samples", samples}};
}

SpinCoefficients spin_from_json(const json& j) {
  SpinCoefficients s;
  s.k0_sq = j.at("k0_sq");
  s.k0_sq_fine = j.at("k0_sq_fine");
  s.k0_sq_coarse = j.at("k0_sq_coarse");
  s.gap = j.at("gap");
  s.residual = j.at("residual");
  for (int i = 0; i < 2; ++i) {
    s.b[i] = cread(j.at("b").at(i));
    s.b_green[i] = cread(j.at("b_green").at(i));
    s.fit_residual[i] = j.at("fit_residual").at(i);
  }
  s.a = cread(j.at("a"));
  s.A = cread(j.at("A"));
  s.lemma_residual = j.at("lemma_residual");
  s.channel_leak = j.at("channel_leak");
  for (const auto& e : j.at("samples")) {
    ExpansionSample x;
    x.k_sq = e.at("k_sq");
    for (int i = 0; i < 2; ++i) {
      x.c[i] = cread(e.at("c").at(i));
      x.d[i] = cread(e.at("d").at(i));
    }
    s.samples.push_back(x);
  }
  return s;
}

json coefficients_body(const Coefficients& c) {
  return {{"hash", c.hash},
          {"thresholds", c.thresholds},
          {"threshold_errors", c.threshold_errors},
          {"theta", c.theta},
          {"mu1", c.mu1},
          {"mu2", c.mu2},
          {"alpha", c.alpha},
          {"alpha_error", c.alpha_error},
          {"beta", c.beta},
          {"beta_error", c.beta_error},
          {"field_active", c.field_active},
          {"zeeman_oracle", c.zeeman_oracle},
          {"spin", {{"plus", spin_json(c.spin[0])}, {"minus", spin_json(c.spin[1])}}}};
}

Coefficients coefficients_from_body(const json& j) {
  Coefficients c;
  c.hash = j.at("hash");
  c.thresholds = j.at("thresholds").get<std::vector<double>>();
  c.threshold_errors = j.at("threshold_errors").get<std::vector<double>>();
  c.theta = j.at("theta");
  c.mu1 = j.at("mu1");
  c.mu2 = j.at("mu2");
  c.alpha = j.at("alpha");
  c.alpha_error = j.at("alpha_error");
  c.beta = j.at("beta");
  c.beta_error = j.at("beta_error");
  c.field_active = j.at("field_active");
  c.zeeman_oracle = j.at("zeeman_oracle");
  c.spin[0] = spin_from_json(j.at("spin").at("plus"));
  c.spin[1] = spin_from_json(j.at("spin").at("minus"));
  return c;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw config_error("cli", "cannot write " + p.string());
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

std::string coefficients_json(const Coefficients& c, const PipelineConfig& cfg) {
  json j = {{"tool_version", kToolVersion}, {"hash_input", hash_input(cfg)}, {"coefficients", coefficients_body(c)}};
  return j.dump(2) + "\n";
}

Coefficients coefficients_from_json(const std::string& text) {
  try {
    return coefficients_from_body(json::parse(text).at("coefficients"));
  } catch (const std::exception& e) {
    throw config_error("cache", std::string("malformed coefficient record: ") + e.what());
  }
}

// --- cache ------------------------------------------------------------------

CoefficientCache::CoefficientCache(std::string dir) : dir_(std::move(dir)) {}

std::string CoefficientCache::path_for(const std::string& hash) const { return (fs::path(dir_) / (hash + ".json")).string(); }

std::optional<Coefficients> CoefficientCache::load(const PipelineConfig& cfg) const {
  fs::path p = path_for(hash_hex(config_hash(cfg)));
  if (!fs::exists(p)) return std::nullopt;
  try {
    json j = json::parse(read_text(p));
    // A hash collision or a record from another build must not be reused.
    if (j.at("tool_version") != kToolVersion || j.at("hash_input") != hash_input(cfg)) return std::nullopt;
    return coefficients_from_body(j.at("coefficients"));
  } catch (const std::exception&) {
    return std::nullopt;
  }
}

bool CoefficientCache::contains(const PipelineConfig& cfg) const { return load(cfg).has_value(); }

void CoefficientCache::store(const Coefficients& c, const PipelineConfig& cfg) const {
  fs::path p = path_for(hash_hex(config_hash(cfg)));
  if (fs::exists(p)) return;
  fs::create_directories(dir_);
  // Write then rename so a concurrent reader never sees a partial record.
  fs::path tmp = p;
  tmp += ".tmp";
  write_text(tmp, coefficients_json(c, cfg));
  fs::rename(tmp, p);
}

std::vector<CacheEntry> CoefficientCache::list() const {
  std::vector<CacheEntry> out;
  if (!fs::is_directory(dir_)) return out;
  for (const auto& e : fs::directory_iterator(dir_))
    if (e.is_regular_file() && e.path().extension() == ".json")
      out.push_back({e.path().stem().string(), e.path().string(), e.file_size()});
  std::sort(out.begin(), out.end(), [](const CacheEntry& a, const CacheEntry& b) { return a.hash < b.hash; });
  return out;
}

int CoefficientCache::remove(const std::string& prefix) const {
  int n = 0;
  for (const auto& e : list())
    if (e.hash.rfind(prefix, 0) == 0) n += fs::remove(e.path) ? 1 : 0;
  return n;
}

int CoefficientCache::clear() const { return remove(""); }

// --- run --------------------------------------------------------------------

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) {
    if (ch == '"') q += '"';
    q += ch;
  }
  return q + "\"";
}

namespace {

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

class Csv {
 public:
  explicit Csv(std::vector<std::string> header) { row(header); }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) text_ += (i ? "," : "") + csv_field(cells[i]);
    text_ += "\r\n";
  }
  void row(const std::vector<double>& cells) {
    std::vector<std::string> s;
    for (double v : cells) s.push_back(num(v));
    row(s);
  }
  const std::string& text() const { return text_; }

 private:
  std::string text_;
};

struct Run {
  Run(const PipelineConfig& c, std::ostream& l) : cfg(c), log(l), out(c.output) {}
  const PipelineConfig& cfg;
  std::ostream& log;
  fs::path out;
  json summary = json::object();
  std::ostringstream report;
  std::vector<std::string> artifacts;

  void emit(const std::string& name, const std::string& text) {
    write_text(out / name, text);
    artifacts.push_back(name);
  }
};

Coefficients obtain_coefficients(Run& run) {
  CoefficientCache cache(run.cfg.cache);
  if (auto hit = cache.load(run.cfg)) {
    run.log << "coefficients: cache hit " << hit->hash << "\n";
    run.summary["cache"] = "hit";
    return *hit;
  }
  run.log << "coefficients: cache miss, solving limit problems\n";
  Coefficients c = compute_coefficients(run.cfg);
  cache.store(c, run.cfg);
  run.summary["cache"] = "miss";
  return c;
}

void report_coefficients(Run& run, const Coefficients& c) {
  run.summary["coefficients"] = coefficients_body(c);
  auto& r = run.report;
  r << "Limit-problem coefficients (record " << c.hash << ")\n";
  r << "  lambda_1^2 = " << num(c.thresholds.at(0)) << " +- " << num(c.threshold_errors.at(0)) << "\n";
  r << "  lambda_2^2 = " << num(c.thresholds.at(1)) << " +- " << num(c.threshold_errors.at(1)) << "\n";
  r << "  mu_1 = " << num(c.mu1) << ", mu_2 = " << num(c.mu2) << "\n";
  r << "  alpha = " << num(c.alpha) << " +- " << num(c.alpha_error) << "\n";
  r << "  beta = " << num(c.beta) << " +- " << num(c.beta_error) << "\n";
  for (int i = 0; i < (c.field_active ? 2 : 1); ++i) {
    const auto& s = c.spin[i];
    r << "  spin " << (i == 0 ? "+" : "-") << ": k0^2 = " << num(s.k0_sq) << " +- " << num(std::abs(s.k0_sq_fine - s.k0_sq))
      << ", |b1| = " << num(std::abs(s.b[0])) << ", |b2| = " << num(std::abs(s.b[1])) << ", a = " << num(s.a.real())
      << (s.a.imag() < 0 ? " - " : " + ") << num(std::abs(s.a.imag())) << "i, |A|^2 = " << num(std::norm(s.A))
      << ", ||A|^2 - Im a| = " << num(s.lemma_residual) << "\n";
  }
  if (c.field_active) r << "  first-order Zeeman splitting 2 int H |v0|^2 = " << num(c.zeeman_oracle) << "\n";
  r << "\n";
}

json peak_json(const PeakCharacteristics& p, const ResonancePole& pole) {
  return {{"k_r_sq", p.k_r_sq},       {"width", p.width},
          {"t_max", p.t_max},         {"q", p.q},
          {"P", p.P},                 {"pole", cjson({pole.k_r_sq, pole.k_i_sq})},
          {"k_r_sq_leading", pole.k_r_sq_leading}, {"k_i_sq_leading", pole.k_i_sq_leading}};
}

struct AsymptoticResult {
  AsymptoticModel plus, minus;
  SpinCharacteristics sc;
};

AsymptoticResult run_asymptotics(Run& run, const Coefficients& c) {
  const auto& cfg = run.cfg;
  const double eps = cfg.geometry.epsilon;
  AsymptoticResult res{build_model(cfg, c, Spin::plus), build_model(cfg, c, Spin::minus), {}};
  auto pp = peak_characteristics(res.plus, eps);
  auto pm = peak_characteristics(res.minus, eps);
  const double hw = cfg.asymptotics.profile_half_widths * std::max(pp.width, pm.width);
  const double lo = std::min(pp.k_r_sq, pm.k_r_sq) - hw, hi = std::max(pp.k_r_sq, pm.k_r_sq) + hw;
  const int n = cfg.asymptotics.profile_points;
  std::vector<double> grid;
  for (int i = 0; i < n; ++i) grid.push_back(lo + (hi - lo) * i / (n - 1));
  // The peak centres themselves are rows, so the column maximum is the peak value.
  grid.push_back(pp.k_r_sq);
  grid.push_back(pm.k_r_sq);
  std::sort(grid.begin(), grid.end());
  grid.erase(std::unique(grid.begin(), grid.end()), grid.end());

  res.sc = spin_characteristics(res.plus, res.minus, eps, grid);
  auto mp = transmission_profile(res.plus, eps, grid);
  auto mm = transmission_profile(res.minus, eps, grid);
  Csv csv({"k_sq", "T_plus", "T_minus", "polarization", "T_plus_matching", "T_minus_matching"});
  for (std::size_t i = 0; i < grid.size(); ++i)
    csv.row(std::vector<double>{grid[i], res.sc.t_plus[i], res.sc.t_minus[i], res.sc.polarization[i], mp.t_matching[i],
                                mm.t_matching[i]});
  run.emit("transmission.csv", csv.text());

  auto pole_p = resonance_pole(res.plus, eps);
  auto pole_m = resonance_pole(res.minus, eps);
  std::vector<std::string> warn = res.plus.warnings(eps);
  run.summary["asymptotics"] = {{"eps", eps},
                                {"model", cfg.asymptotics.model == ModelMode::full ? "full" : "leading"},
                                {"tau", res.plus.tau()},
                                {"plus", peak_json(pp, pole_p)},
                                {"minus", peak_json(pm, pole_m)},
                                {"separation", res.sc.separation},
                                {"resolvable", res.sc.resolvable},
                                {"warnings", warn}};
  auto& r = run.report;
  r << "Asymptotic resonance at eps = " << num(eps) << "\n";
  for (auto& w : warn) r << "  warning: " << w << "\n";
  for (int i = 0; i < 2; ++i) {
    const auto& p = i == 0 ? pp : pm;
    r << "  spin " << (i == 0 ? "+" : "-") << ": k_r^2 = " << num(p.k_r_sq) << ", width = " << num(p.width)
      << ", T_max = " << num(p.t_max) << "\n";
  }
  r << "  peak separation = " << num(res.sc.separation) << (res.sc.resolvable ? " (resolvable)" : " (not resolvable)")
    << "\n\n";
  return res;
}

// Eigenvalue of the resonator on the direct solver's lattice; the direct peak
// is compared with the model relative to it.
double lattice_k0_sq(const PipelineConfig& cfg, const CapSpectrum& cap, Spin spin) {
  ResonatorOptions ro = cfg.resonator;
  ro.h = cfg.direct.options.h;
  ro.coarse_factor = 0.0;
  return resonator_eigenpair(cfg.geometry, cap, spin, cfg.window, ro).k0_sq_fine;
}

struct DirectPeak {
  ResonanceScan scan;
  double k0_sq_lattice = 0.0;
};

DirectPeak direct_peak(const PipelineConfig& cfg, const WaveguideSpec& g, const CapSpectrum& cap,
                       const AsymptoticModel& model, Spin spin) {
  DirectPeak dp;
  dp.k0_sq_lattice = lattice_k0_sq(cfg, cap, spin);
  double shift = model.channel.k0_sq - dp.k0_sq_lattice;
  auto pk = peak_characteristics(model, g.epsilon);
  ScatteringProblem problem(g, spin, cfg.direct.options);
  dp.scan = resonance_scan(problem, pk.k_r_sq - shift, cfg.direct.scan);
  return dp;
}

void run_direct(Run& run, const Coefficients& c, const AsymptoticResult& ar) {
  const auto& cfg = run.cfg;
  const double eps = cfg.geometry.epsilon;
  auto cap = cap_spectrum(c.theta, cfg.cap);
  Csv csv({"spin", "k_sq", "T_direct", "defect", "T_asymptotic", "T_asymptotic_aligned"});
  json out = json::object();
  auto& r = run.report;
  r << "Direct scattering at eps = " << num(eps) << ", h = " << num(cfg.direct.options.h) << "\n";
  for (int i = 0; i < (c.field_active ? 2 : 1); ++i) {
    Spin spin = i == 0 ? Spin::plus : Spin::minus;
    const auto& model = i == 0 ? ar.plus : ar.minus;
    const auto& pk = i == 0 ? ar.sc.peak_plus : ar.sc.peak_minus;
    run.log << "direct: scanning spin " << (i == 0 ? "+" : "-") << "\n";
    auto dp = direct_peak(cfg, cfg.geometry, cap, model, spin);
    const auto& sc = dp.scan;
    PeakCharacteristics aligned = pk;
    aligned.k_r_sq = sc.fit.center;
    for (std::size_t k = 0; k < sc.k_sq.size(); ++k)
      csv.row(std::vector<std::string>{i == 0 ? "+" : "-", num(sc.k_sq[k]), num(sc.t[k]), num(sc.defect[k]),
                                       num(lorentzian(pk, eps, model.mu1, sc.k_sq[k])),
                                       num(lorentzian(aligned, eps, model.mu1, sc.k_sq[k]))});
    double shift_direct = dp.k0_sq_lattice - sc.fit.center;
    double shift_model = model.channel.k0_sq - pk.k_r_sq;
    out[i == 0 ? "plus" : "minus"] = {{"center", sc.fit.center},
                                      {"width", sc.fit.width},
                                      {"height", sc.fit.height},
                                      {"fit_residual", sc.fit.residual},
                                      {"pole", cjson(sc.pole)},
                                      {"k0_sq_lattice", dp.k0_sq_lattice},
                                      {"shift", shift_direct},
                                      {"shift_asymptotic", shift_model},
                                      {"delta_width", sc.fit.width - pk.width},
                                      {"delta_height", sc.fit.height - pk.t_max},
                                      {"max_defect", sc.max_defect},
                                      {"solves", sc.solves}};
    r << "  spin " << (i == 0 ? "+" : "-") << ": centre " << num(sc.fit.center) << " (shift below lattice k0^2 "
      << num(shift_direct) << ", asymptotic " << num(shift_model) << "), width " << num(sc.fit.width)
      << " (asymptotic " << num(pk.width) << "), height " << num(sc.fit.height) << ", fit residual "
      << num(sc.fit.residual) << ", max unitarity defect " << num(sc.max_defect) << "\n";
  }
  r << "\n";
  run.emit("direct_scan.csv", csv.text());
  run.summary["direct"] = out;
}

void run_ladder(Run& run, const Coefficients& c) {
  const auto& cfg = run.cfg;
  auto model = build_model(cfg, c, Spin::plus);
  std::vector<double> eps_v, shift_v, width_v, dshift_v, dwidth_v, deps_v;
  Csv csv({"eps", "k_r_sq", "shift", "width", "t_max", "direct_center", "direct_shift", "direct_width", "direct_height"});
  std::optional<CapSpectrum> cap;
  for (std::size_t i = 0; i < cfg.ladder.size(); ++i) {
    double eps = cfg.ladder[i];
    auto pk = peak_characteristics(model, eps);
    eps_v.push_back(eps);
    shift_v.push_back(model.channel.k0_sq - pk.k_r_sq);
    width_v.push_back(pk.width);
    std::vector<std::string> row{num(eps), num(pk.k_r_sq), num(shift_v.back()), num(pk.width), num(pk.t_max)};
    if (static_cast<int>(i) < cfg.direct.ladder_confirm) {
      if (!cap) cap = cap_spectrum(c.theta, cfg.cap);
      WaveguideSpec g = cfg.geometry;
      g.epsilon = eps;
      g.require_valid();
      run.log << "ladder: direct confirmation at eps = " << eps << "\n";
      auto dp = direct_peak(cfg, g, *cap, model, Spin::plus);
      deps_v.push_back(eps);
      dshift_v.push_back(dp.k0_sq_lattice - dp.scan.fit.center);
      dwidth_v.push_back(dp.scan.fit.width);
      for (double v : {dp.scan.fit.center, dshift_v.back(), dp.scan.fit.width, dp.scan.fit.height}) row.push_back(num(v));
    } else {
      for (int k = 0; k < 4; ++k) row.push_back("");
    }
    csv.row(row);
  }
  run.emit("ladder.csv", csv.text());
  json lad = {{"eps", eps_v},
              {"shift_slope", loglog_slope(eps_v, shift_v)},
              {"width_slope", loglog_slope(eps_v, width_v)},
              {"expected_shift_slope", 2.0 * c.mu1 + 1.0},
              {"expected_width_slope", 4.0 * c.mu1 + 2.0}};
  if (deps_v.size() >= 2) {
    lad["direct_shift_slope"] = loglog_slope(deps_v, dshift_v);
    lad["direct_width_slope"] = loglog_slope(deps_v, dwidth_v);
  }
  run.summary["ladder"] = lad;
  auto& r = run.report;
  r << "Eps ladder (spin +)\n  shift slope " << num(lad["shift_slope"]) << " (expected " << num(2.0 * c.mu1 + 1.0)
    << "), width slope " << num(lad["width_slope"]) << " (expected " << num(4.0 * c.mu1 + 2.0) << ")\n";
  if (lad.contains("direct_shift_slope"))
    r << "  direct: shift slope " << num(lad["direct_shift_slope"]) << ", width slope " << num(lad["direct_width_slope"])
      << "\n";
  r << "\n";
}

}  // namespace

int run_pipeline(const PipelineConfig& cfg, std::ostream& log) {
  Run run(cfg, log);
  int status = 0;
  std::string stage = "coefficients";
  try {
    fs::create_directories(run.out);
  } catch (const std::exception& e) {
    log << "error: cannot create output directory " << cfg.output << ": " << e.what() << "\n";
    return 2;
  }
  run.summary["tool_version"] = kToolVersion;
  run.summary["mode"] = mode_name(cfg.mode);
  run.summary["hash"] = hash_hex(config_hash(cfg));
  try {
    Coefficients c = obtain_coefficients(run);
    report_coefficients(run, c);
    if (cfg.mode == RunMode::asymptotics || cfg.mode == RunMode::direct || cfg.mode == RunMode::full) {
      stage = "asymptotics";
      auto ar = run_asymptotics(run, c);
      if (cfg.mode != RunMode::asymptotics) {
        stage = "direct";
        run_direct(run, c, ar);
      }
    } else if (cfg.mode == RunMode::ladder) {
      stage = "ladder";
      run_ladder(run, c);
    }
    run.summary["status"] = "ok";
  } catch (const Error& e) {
    status = e.kind() == ErrorKind::config ? 2 : 3;
    run.summary["status"] = "failed";
    run.summary["failed_stage"] = stage;
    run.summary["error"] = {{"module", e.module()}, {"message", e.what()}};
    run.report << "FAILED in stage " << stage << ": " << e.what() << "\n";
    log << "error: " << e.what() << "\n";
  } catch (const std::exception& e) {
    status = 3;
    run.summary["status"] = "failed";
    run.summary["failed_stage"] = stage;
    run.summary["error"] = {{"module", stage}, {"message", e.what()}};
    run.report << "FAILED in stage " << stage << ": " << e.what() << "\n";
    log << "error: " << e.what() << "\n";
  }
  if (status != 0) run.summary["partial_artifacts"] = run.artifacts;
  run.summary["artifacts"] = run.artifacts;
  write_text(run.out / "summary.json", run.summary.dump(2) + "\n");
  write_text(run.out / "report.txt", run.report.str());
  if (status == 0) log << "wrote " << cfg.output << "\n";
  return status;
}

std::string explain(const PipelineConfig& cfg) {
  std::ostringstream os;
  const double eps = cfg.geometry.epsilon;
  os << "Resolved configuration:\n" << canonical_json(cfg) << "\n\n";
  os << "Pipeline for mode '" << mode_name(cfg.mode) << "':\n";
  os << "  1. cross-section Dirichlet thresholds lambda_n^2 (finite differences, Richardson over "
     << cfg.modes.levels << " grids)\n";
  os << "  2. cap exponents mu_1, mu_2 and Phi_1 (Legendre shooting)\n";
  os << "  3. neck coefficients alpha, beta from the harmonic model solutions w^l, w^r\n";
  os << "  4. resonator eigenpair k0^2, v0 and tip coefficients b_1, b_2 per spin channel\n";
  os << "  5. channel constants a(k0), A(k0) of the outgoing special solution\n";
  if (cfg.asymptotics.model == ModelMode::full) os << "  5a. regularized tip coefficients c_j, d_j near k0^2\n";
  if (cfg.mode != RunMode::coefficients) {
    os << "  6. matching at the narrows: s12, complex pole k_r^2 - i k_i^2, Lorentzian T(k), width, T_max\n";
    os << "     and spin polarization (T+ - T-) / (T+ + T-)\n";
  }
  if (cfg.mode == RunMode::direct || cfg.mode == RunMode::full)
    os << "  7. direct scattering on G(eps) with DtN closures: pole search, scan, Lorentzian fit\n";
  if (cfg.mode == RunMode::ladder)
    os << "  7. eps ladder of " << cfg.ladder.size() << " values, log-log slopes of shift and width; direct "
       << "confirmation at the " << cfg.direct.ladder_confirm << " largest\n";

  CoefficientCache cache(cfg.cache);
  auto hit = cache.load(cfg);
  os << "\nCoefficient cache: " << (hit ? "hit" : "miss") << " (" << cfg.cache << "/" << hash_hex(config_hash(cfg))
     << ".json)\n";
  if (!hit) os << "  stages 1-5 will be solved and stored\n";

  os << "\nRegime check:\n";
  std::vector<double> eps_list = cfg.mode == RunMode::ladder ? cfg.ladder : std::vector<double>{eps};
  for (double e : eps_list) {
    double small;
    std::string how;
    if (hit) {
      small = std::pow(e, 2.0 * hit->mu1 + 1.0);
      how = "eps^(2mu1+1) = " + num(small);
    } else {
      // No solver run here; mu1 >= 1 holds for any cap inside the hemisphere.
      small = std::pow(e, 3.0);
      how = "eps^(2mu1+1) <= eps^3 = " + num(small);
    }
    os << "  eps = " << num(e) << ": " << how << "\n";
    if (small > cfg.asymptotics.regime_threshold)
      os << "  warning: eps = " << num(e) << " may be outside the asymptotic regime (threshold "
         << num(cfg.asymptotics.regime_threshold) << ")\n";
  }
  return os.str();
}

}  // namespace qwg

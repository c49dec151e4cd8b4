#pragma once

// Experiment configs: validation with defaults written back into the echoed config,
// dispatch to the modules, and in-memory reports.

#include <cmath>
#include <cstdint>
#include <functional>
#include <map>
#include <random>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "bergman.hpp"
#include "csv.hpp"
#include "kohn.hpp"
#include "muckenhoupt.hpp"
#include "oscillation.hpp"
#include "radius_metric.hpp"
#include "schrodinger.hpp"
#include "weight_eval.hpp"

namespace bergkern {

using json = nlohmann::ordered_json;

struct report_table {
  std::string name;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;
};

struct check_result {
  std::string name;
  bool pass = false;
  std::string detail;
};

struct run_report {
  json config;
  std::vector<report_table> tables;
  std::vector<check_result> checks;

  report_table& table(std::string name, std::vector<std::string> columns) {
    tables.push_back({std::move(name), std::move(columns), {}});
    return tables.back();
  }
  void check(std::string name, bool pass, std::string detail = {}) {
    checks.push_back({std::move(name), pass, std::move(detail)});
  }
  bool passed() const {
    for (const auto& c : checks)
      if (!c.pass) return false;
    return true;
  }
};

inline error config_error(const std::string& path, const std::string& msg) {
  return error(errc::config_invalid, path + ": " + msg);
}

/// Reads one JSON object; absent keys take the default, which is written back so the echoed
/// config lists every value used. Keys never read are rejected by finish().
class param_reader {
 public:
  param_reader(json& obj, std::string path) : obj_(obj), path_(std::move(path)) {
    if (obj_.is_null()) obj_ = json::object();
    if (!obj_.is_object()) throw config_error(path_, "expected an object");
  }

  template <class T>
  T get(const std::string& key, const T& def) {
    if (!obj_.contains(key)) obj_[key] = def;
    return read<T>(key);
  }

  template <class T>
  T require(const std::string& key) {
    if (!obj_.contains(key)) throw config_error(path_ + "." + key, "required");
    return read<T>(key);
  }

  bool has(const std::string& key) const { return obj_.contains(key); }

  json& raw(const std::string& key) {
    if (!obj_.contains(key)) throw config_error(path_ + "." + key, "required");
    used_.insert(key);
    return obj_[key];
  }

  param_reader child(const std::string& key) {
    used_.insert(key);
    return param_reader(obj_[key], path_ + "." + key);
  }

  std::string path(const std::string& key) const { return path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : obj_.items())
      if (!used_.count(k)) throw config_error(path_ + "." + k, "unknown key");
  }

 private:
  template <class T>
  T read(const std::string& key) {
    used_.insert(key);
    try {
      return obj_[key].template get<T>();
    } catch (const nlohmann::json::exception& e) {
      throw config_error(path_ + "." + key, e.what());
    }
  }

  json& obj_;
  std::string path_;
  std::set<std::string> used_;
};

namespace detail {

inline monomial_set parse_gamma(const json& j, const std::string& path) {
  if (!j.is_array() || j.empty()) throw config_error(path, "expected a non-empty list of [alpha, beta]");
  std::vector<exponent> pts;
  for (const auto& e : j) {
    if (!e.is_array() || e.size() != 2 || !e[0].is_number_integer() || !e[1].is_number_integer())
      throw config_error(path, "exponent must be [alpha, beta] integers");
    pts.push_back({e[0].get<int>(), e[1].get<int>()});
  }
  try {
    return monomial_set(pts);
  } catch (const error& e) {
    throw config_error(path, e.what());
  }
}

inline exact_rational parse_rational(const json& j, const std::string& path) {
  using boost::multiprecision::cpp_int;
  if (j.is_number_integer()) return exact_rational(j.get<long long>());
  if (!j.is_string()) throw config_error(path, "expected an integer or a \"p/q\" string");
  const auto s = j.get<std::string>();
  try {
    const auto slash = s.find('/');
    if (slash == std::string::npos) return exact_rational(cpp_int(s));
    return exact_rational(cpp_int(s.substr(0, slash)), cpp_int(s.substr(slash + 1)));
  } catch (const std::exception&) {
    throw config_error(path, "cannot read rational \"" + s + "\"");
  }
}

inline std::string rational_text(const exact_rational& r) { return r.str(); }

inline poly_matrix<exact_rational> preset_potential(const std::string& name, const std::string& path) {
  using poly = polynomial<exact_rational>;
  poly_matrix<exact_rational> m(1, 2);
  if (name == "V0") {
    m(0, 0) = poly::monomial(1, {4}, 1);
    m(0, 1) = m(1, 0) = poly::monomial(1, {5}, 1);
    m(1, 1) = poly::monomial(1, {6}, 1);
  } else if (name == "W0") {
    m(0, 0) = poly::constant(1, 1);
    m(0, 1) = m(1, 0) = poly::monomial(1, {1}, 1);
    m(1, 1) = poly::monomial(1, {2}, 1);
  } else if (name == "isotropic-quadratic") {
    m(0, 0) = m(1, 1) = poly::monomial(1, {2}, 1);
  } else {
    throw config_error(path, "unknown preset \"" + name + "\" (V0, W0, isotropic-quadratic)");
  }
  return m;
}

/// {"preset": name} or {"dim": d, "entries": [[[{"c": coef, "e": [...]}, ...], ...], ...]}.
inline poly_matrix<exact_rational> parse_potential(param_reader r) {
  if (r.has("preset")) {
    const auto name = r.require<std::string>("preset");
    r.finish();
    return preset_potential(name, r.path("preset"));
  }
  const int dim = r.require<int>("dim");
  if (dim < 1) throw config_error(r.path("dim"), "must be positive");
  const json& entries = r.raw("entries");
  const std::string ep = r.path("entries");
  if (!entries.is_array() || entries.empty()) throw config_error(ep, "expected a square array");
  const int m = static_cast<int>(entries.size());
  poly_matrix<exact_rational> out(dim, m);
  for (int i = 0; i < m; ++i) {
    if (!entries[i].is_array() || static_cast<int>(entries[i].size()) != m)
      throw config_error(ep, "row " + std::to_string(i) + " has the wrong length");
    for (int j = 0; j < m; ++j) {
      polynomial<exact_rational> p(dim);
      for (const auto& term : entries[i][j]) {
        if (!term.is_object() || !term.contains("c") || !term.contains("e"))
          throw config_error(ep, "term needs \"c\" and \"e\"");
        const auto e = term["e"].get<std::vector<int>>();
        if (static_cast<int>(e.size()) != dim) throw config_error(ep, "exponent length differs from dim");
        p += polynomial<exact_rational>::monomial(dim, e, parse_rational(term["c"], ep));
      }
      out(i, j) = p;
    }
  }
  r.finish();
  if (!out.symmetric()) throw config_error(ep, "potential must be symmetric");
  return out;
}

inline box_grid parse_grid(param_reader r, int dim, double lo, double hi, int n) {
  const auto vlo = r.get<std::vector<double>>("lo", std::vector<double>(dim, lo));
  const auto vhi = r.get<std::vector<double>>("hi", std::vector<double>(dim, hi));
  const auto vn = r.get<std::vector<int>>("n", std::vector<int>(dim, n));
  r.finish();
  if (static_cast<int>(vlo.size()) != dim || static_cast<int>(vhi.size()) != dim ||
      static_cast<int>(vn.size()) != dim)
    throw config_error("grid", "lo, hi and n need " + std::to_string(dim) + " entries");
  for (int k = 0; k < dim; ++k)
    if (!(vhi[k] >= vlo[k]) || vn[k] < 1) throw config_error("grid", "empty axis " + std::to_string(k));
  return closed_grid(vlo, vhi, vn);
}

inline std::vector<std::string> coords_text(const std::vector<double>& x) {
  std::vector<std::string> out;
  for (double v : x) out.push_back(fmt17(v));
  return out;
}

inline std::string bool_text(bool b) { return b ? "true" : "false"; }

inline complex_point2 random_point(std::mt19937_64& rng, double lo, double hi) {
  std::uniform_real_distribution<double> mod(lo, hi), ph(0, 2 * M_PI);
  return {std::polar(mod(rng), ph(rng)), std::polar(mod(rng), ph(rng))};
}

/// Complex Hessian by Richardson-extrapolated central differences in the real coordinates.
inline Eigen::Matrix2cd difference_hessian(const monomial_set& g, const complex_point2& p) {
  auto at_step = [&](double h) {
    const double c[4] = {p.z.real(), p.z.imag(), p.w.real(), p.w.imag()};
    auto d2 = [&](int i, int j) {
      auto f = [&](double si, double sj) {
        double v[4] = {c[0], c[1], c[2], c[3]};
        v[i] += si * h;
        v[j] += sj * h;
        return eval_weight(g, {{v[0], v[1]}, {v[2], v[3]}});
      };
      return (f(1, 1) - f(1, -1) - f(-1, 1) + f(-1, -1)) / (4 * h * h);
    };
    Eigen::Matrix2cd H;
    H(0, 0) = 0.25 * (d2(0, 0) + d2(1, 1));
    H(1, 1) = 0.25 * (d2(2, 2) + d2(3, 3));
    H(0, 1) = 0.25 * cplx(d2(0, 2) + d2(1, 3), d2(0, 3) - d2(1, 2));
    H(1, 0) = std::conj(H(0, 1));
    return H;
  };
  return (4.0 * at_step(1e-3) - at_step(2e-3)) / 3.0;
}

inline std::string error_text(const std::exception& e) { return e.what(); }

// ---- experiment kinds ----

inline void run_profile(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto gamma = parse_gamma(p.raw("gamma"), p.path("gamma"));
  const int directions = p.get("directions", 50);
  p.finish();
  const auto pr = derive_profile(gamma);
  auto& t = rep.table("profile", {"key", "value"});
  auto pt = [](const std::optional<exponent>& e) {
    return e ? "(" + std::to_string(e->alpha) + " " + std::to_string(e->beta) + ")" : std::string("none");
  };
  t.rows = {{"m", std::to_string(pr.mdeg)},
            {"n", std::to_string(pr.ndeg)},
            {"sigma", to_string(pr.sigma)},
            {"tau", to_string(pr.tau)},
            {"corner1", pt(pr.corner1)},
            {"corner2", pt(pr.corner2)},
            {"nu", pr.nu ? to_string(*pr.nu) : "none"},
            {"decoupled", bool_text(pr.decoupled)},
            {"swapped", bool_text(pr.swapped)},
            {"gamma_1_size", std::to_string(pr.gamma_1.size())},
            {"gamma_2_size", std::to_string(pr.gamma_2.size())}};
  if (pr.decoupled) return;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> num(0, 40), den(1, 12);
  auto& lt = rep.table("lambda_exponents", {"u", "v", "case", "support_difference", "closed_form"});
  bool ok = true;
  std::string detail;
  for (int k = 0; k < directions; ++k) {
    rational u(num(rng), den(rng)), v(num(rng), den(rng));
    if (u.numerator() == 0 && v.numerator() == 0) u = 1;
    try {
      const auto r = lambda_exponent(pr, u, v);
      lt.rows.push_back({to_string(u), to_string(v), lambda_case_name(r.which), to_string(r.value),
                         to_string(r.closed_form)});
    } catch (const std::logic_error& e) {
      ok = false;
      detail = e.what();
    }
  }
  rep.check("lambda_case_formula_matches_support_difference", ok, detail);
}

inline void run_hessian_check(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto gamma = parse_gamma(p.raw("gamma"), p.path("gamma"));
  const int points = p.get("points", 100);
  const double lo = p.get("moduli_min", 0.1), hi = p.get("moduli_max", 3.0);
  const double fd_tol = p.get("difference_tolerance", 1e-6);
  const int region_points = p.get("region_points", 100);
  const double t_max = p.get("scale_max", 1e3);
  const double lambda_band = p.get("lambda_band", coefficient_bound(gamma));
  p.finish();
  std::mt19937_64 rng(seed);
  std::vector<complex_point2> pts;
  double fd_worst = 0, ident_worst = 0;
  for (int k = 0; k < points; ++k) {
    const auto q = random_point(rng, lo, hi);
    pts.push_back(q);
    const auto h = hessian(gamma, q);
    fd_worst = std::max(fd_worst, (h.entries - difference_hessian(gamma, q)).norm() / std::max(1.0, h.entries.norm()));
    const double s = std::max(1.0, h.tr_val);
    ident_worst = std::max({ident_worst, std::abs(h.lambda_min * h.mu_max - h.det_val) / (s * s),
                            std::abs(h.lambda_min + h.mu_max - h.tr_val) / s});
  }
  rep.check("hessian_matches_differences", fd_worst <= fd_tol, "worst relative " + fmt17(fd_worst));
  rep.check("eigen_identities", ident_worst <= 1e-12, "worst relative " + fmt17(ident_worst));

  auto& t = rep.table("ratios", {"quantity", "min", "max", "samples", "band"});
  auto add = [&](const char* name, const ratio_range& r, double band) {
    t.rows.push_back({name, fmt17(r.lo), fmt17(r.hi), std::to_string(r.count), fmt17(band)});
  };
  try {
    const auto r = hessian_consistency_check(gamma, pts);
    add("det/phi_1", r.det_ratio, r.K);
    add("tr/trace_polynomial", r.trace_poly, 1);
    add("tr/phi_2", r.trace_set, r.K);
    rep.check("det_and_trace_ratios_within_K", true, "K = " + fmt17(r.K));
  } catch (const error& e) {
    rep.check("det_and_trace_ratios_within_K", false, e.what());
  }
  const auto pr = derive_profile(gamma);
  if (pr.decoupled) return;
  // quasi-homogeneous scaling (t^{1/m} a, t^{1/n} b) of random base moduli
  std::vector<complex_point2> region;
  std::uniform_real_distribution<double> base(0.2, 2.0), ph(0, 2 * M_PI);
  int mz = 0, nw = 0;
  for (const auto& e : gamma) {
    if (e.beta == 0) mz = e.alpha;
    if (e.alpha == 0) nw = e.beta;
  }
  for (int k = 0; k < region_points; ++k) {
    const double s = region_points > 1 ? std::pow(t_max, static_cast<double>(k) / (region_points - 1)) : 1.0;
    region.push_back({std::polar(std::pow(s, 1.0 / mz) * base(rng), ph(rng)),
                      std::polar(std::pow(s, 1.0 / nw) * base(rng), ph(rng))});
  }
  try {
    const auto r = hessian_consistency_check(gamma, region, &pr, lambda_band);
    add("lambda/region_monomial", r.lambda_ratio, lambda_band);
    rep.check("lambda_within_band", true, std::to_string(r.lambda_ratio.count) + " region samples");
  } catch (const error& e) {
    rep.check("lambda_within_band", false, e.what());
  }
}

inline radius_field radius_from_params(param_reader& p, const box_grid& g, const std::string& source,
                                     const std::optional<monomial_set>& gamma, ball_sup_fn* sup_out = nullptr) {
  if (source == "constant") {
    const double v = p.get("value", 4.0);
    auto sup = constant_ball_sup(v);
    if (sup_out) *sup_out = sup;
    return rho_from_potential(g, sup);
  }
  if (!gamma) throw config_error(p.path("gamma"), "required for source " + source);
  if (source == "laplacian") {
    auto sup = model_laplacian_ball_sup(*gamma, p.get("box_bound", false));
    if (sup_out) *sup_out = sup;
    return rho_from_potential(g, sup);
  }
  const double c = p.get("c", 1.0);
  auto kappa = rho_from_mu(derive_profile(*gamma), c, g);
  if (source == "mu") return kappa;
  if (source == "max") return radius_max(kappa, rho_from_potential(g, model_laplacian_ball_sup(*gamma)));
  throw config_error(p.path("source"), "unknown source \"" + source + "\" (constant, laplacian, mu, max)");
}

inline std::optional<monomial_set> optional_gamma(param_reader& p) {
  if (!p.has("gamma")) return std::nullopt;
  return parse_gamma(p.raw("gamma"), p.path("gamma"));
}

inline void run_rho(param_reader& p, std::uint64_t, run_report& rep) {
  const auto source = p.get<std::string>("source", "laplacian");
  const auto gamma = optional_gamma(p);
  const auto g = parse_grid(p.child("grid"), 2, 0.0, 3.0, 31);
  ball_sup_fn sup;
  const auto f = radius_from_params(p, g, source, gamma, &sup);
  const bool covering = p.get("covering", true);
  p.finish();
  auto& t = rep.table("field", {"x0", "x1", "rho", "unsaturated"});
  for (std::size_t i = 0; i < g.size(); ++i) {
    auto row = coords_text(g.coords(i));
    row.push_back(fmt17(f.values[i]));
    row.push_back(f.unsaturated[i] ? "1" : "0");
    t.rows.push_back(std::move(row));
  }
  auto& s = rep.table("summary", {"key", "value"});
  s.rows.push_back({"comparability", fmt17(f.comparability)});
  if (sup) {
    const auto sw = sandwich_check(f, sup);
    s.rows.push_back({"doubling", fmt17(sw.doubling)});
    s.rows.push_back({"worst_upper", fmt17(sw.worst_upper)});
    s.rows.push_back({"worst_lower", fmt17(sw.worst_lower)});
    rep.check("sandwich", sw.holds(), std::to_string(sw.checked) + " saturated nodes");
  }
  if (covering) {
    const auto c = greedy_covering(f);
    s.rows.push_back({"covering_centers", std::to_string(c.centers.size())});
    s.rows.push_back({"covering_multiplicity", std::to_string(c.max_multiplicity)});
    rep.check("covering", c.covers && c.disjoint, "multiplicity " + std::to_string(c.max_multiplicity));
  }
}

inline void run_dist(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto source = p.get<std::string>("source", "explicit");
  const auto st = p.get<std::string>("stencil", "8");
  if (st != "8" && st != "16") throw config_error(p.path("stencil"), "8 or 16");
  const stencil sten = st == "16" ? stencil::neighbors16 : stencil::neighbors8;
  std::optional<metric_graph> graph;
  box_grid g;
  if (source == "explicit") {
    // rho(x) = max(floor, scale |x|), the Euclidean case being scale = 0, floor = 1
    const double floor = p.get("floor", 1.0), scale = p.get("scale", 0.0);
    const int dim = p.get("dim", 2);
    g = parse_grid(p.child("grid"), dim, 0.0, 10.0, 101);
    graph.emplace(make_metric_graph(
        g, [=](const std::vector<double>& x) {
          double r = 0;
          for (double v : x) r += v * v;
          return std::max(floor, scale * std::sqrt(r));
        },
        sten));
  } else {
    const auto gamma = optional_gamma(p);
    g = parse_grid(p.child("grid"), 2, 0.0, 3.0, 61);
    graph.emplace(make_metric_graph(radius_from_params(p, g, source, gamma), sten));
  }
  const auto from = p.get("source_point", std::vector<double>(g.dim(), 0.0));
  const auto targets = p.get("targets", std::vector<std::vector<double>>{g.coords(g.size() - 1)});
  const int triples = p.get("triangle_samples", 20);
  p.finish();
  if (static_cast<int>(from.size()) != g.dim()) throw config_error("source_point", "wrong dimension");
  std::vector<std::size_t> tnodes;
  for (const auto& x : targets) {
    if (static_cast<int>(x.size()) != g.dim()) throw config_error("targets", "wrong dimension");
    tnodes.push_back(g.nearest(x));
  }
  const auto src = g.nearest(from);
  const auto d = agmon_distance(*graph, src, tnodes);
  std::vector<std::string> cols;
  for (int k = 0; k < g.dim(); ++k) cols.push_back("x" + std::to_string(k));
  cols.push_back("distance");
  cols.push_back("euclidean");
  auto& t = rep.table("distances", cols);
  const auto xs = g.coords(src);
  for (std::size_t i = 0; i < tnodes.size(); ++i) {
    auto x = g.coords(tnodes[i]);
    auto row = coords_text(x);
    row.push_back(fmt17(d[i]));
    row.push_back(fmt17(euclid(xs, x)));
    t.rows.push_back(std::move(row));
  }
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> node(0, g.size() - 1);
  double worst = 0;
  for (int k = 0; k < triples; ++k) {
    const auto a = node(rng), b = node(rng), c = node(rng);
    const auto da = graph->distances_from(a), db = graph->distances_from(b);
    if (std::isfinite(da[c])) worst = std::max(worst, da[c] - da[b] - db[c]);
  }
  rep.check("triangle_inequality", worst <= 1e-12, "worst excess " + fmt17(worst));
}

inline void run_moments(param_reader& p, std::uint64_t, run_report& rep) {
  const auto gamma = parse_gamma(p.raw("gamma"), p.path("gamma"));
  const int cutoff = p.get("cutoff", 10);
  const double tol = p.get("rel_tol", 1e-10);
  p.finish();
  if (cutoff < 0) throw config_error("cutoff", "must be non-negative");
  const auto t = compute_moments(gamma, cutoff, tol);
  auto& tab = rep.table("moments", {"a", "b", "c_ab"});
  bool finite = true, convex = true;
  for (int s = 0; s <= cutoff; ++s)
    for (int b = 0; b <= s; ++b) {
      const int a = s - b;
      const double c = t.at(a, b);
      finite = finite && std::isfinite(c) && c > 0;
      tab.rows.push_back({std::to_string(a), std::to_string(b), fmt17(c)});
      if (a + b + 2 <= cutoff) {
        convex = convex && t.at(a, b) * t.at(a + 2, b) >= t.at(a + 1, b) * t.at(a + 1, b) * (1 - 1e-9);
        convex = convex && t.at(a, b) * t.at(a, b + 2) >= t.at(a, b + 1) * t.at(a, b + 1) * (1 - 1e-9);
      }
    }
  rep.check("moments_positive_finite", finite);
  rep.check("log_convexity", convex);
}

inline void run_kernel(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto gamma = parse_gamma(p.raw("gamma"), p.path("gamma"));
  const int cutoff = p.get("cutoff", 40);
  const int pairs = p.get("pairs", 20);
  const double max_mod = p.get("moduli_max", 1.0);
  const double tol = p.get("kernel_tol", 1e-8);
  p.finish();
  const auto t = compute_moments(gamma, cutoff);
  std::mt19937_64 rng(seed);
  auto& tab = rep.table("kernel", {"re_zp", "im_zp", "re_wp", "im_wp", "re_zq", "im_zq", "re_wq", "im_wq",
                                   "re_B", "im_B", "tail"});
  double asym = 0;
  for (int k = 0; k < pairs; ++k) {
    const auto P = random_point(rng, 0.0, max_mod), Q = random_point(rng, 0.0, max_mod);
    const auto B = kernel_eval(t, P, Q, tol);
    const auto Bt = kernel_eval(t, Q, P, tol);
    asym = std::max(asym, std::abs(B.value - std::conj(Bt.value)) / std::abs(B.value));
    tab.rows.push_back({fmt17(P.z.real()), fmt17(P.z.imag()), fmt17(P.w.real()), fmt17(P.w.imag()),
                        fmt17(Q.z.real()), fmt17(Q.z.imag()), fmt17(Q.w.real()), fmt17(Q.w.imag()),
                        fmt17(B.value.real()), fmt17(B.value.imag()), fmt17(B.tail_bound)});
  }
  rep.check("tail_certified", true, std::to_string(pairs) + " pairs");
  rep.check("conjugate_symmetry", asym <= 1e-12, "worst relative " + fmt17(asym));
}

/// Phase-aligned pairs on the moduli quadrant: a fixed base point near the origin against
/// log-spaced partners at angles cycling through the quadrant.
inline std::vector<fit_pair> aligned_pairs(const box_grid& g, int count, double base, double reach) {
  std::vector<fit_pair> out;
  const std::size_t p0 = g.nearest({base, base});
  for (int i = 0; i < count; ++i) {
    const double s = base * std::pow(reach / base, count > 1 ? static_cast<double>(i) / (count - 1) : 1.0);
    const double th = M_PI / 2 * ((i * 7) % 10) / 9.0;
    out.push_back({p0, g.nearest({s * std::cos(th), s * std::sin(th)})});
  }
  return out;
}

struct bound_fit_setup {
  monomial_set gamma;
  int cutoff = 100;
  double extent = 2.5;
  int nodes = 101;
  int pairs = 40;
  double c = 1.0;
  bool stencil16 = true;
};

struct bound_fit_run {
  fit_report fit;
  std::vector<fit_pair> pairs;
  box_grid grid;
};

inline bound_fit_run run_bound_fit_pipeline(const bound_fit_setup& s) {
  bound_fit_run out;
  const auto t = compute_moments(s.gamma, s.cutoff);
  out.grid = closed_grid({0.0, 0.0}, {s.extent, s.extent}, {s.nodes, s.nodes});
  const auto rho = rho_from_potential(out.grid, model_laplacian_ball_sup(s.gamma));
  const auto kappa = rho_from_mu(derive_profile(s.gamma), s.c, out.grid);
  const auto metric = make_metric_graph(kappa, s.stencil16 ? stencil::neighbors16 : stencil::neighbors8);
  out.pairs = aligned_pairs(out.grid, s.pairs, 0.05, 0.98 * s.extent);
  out.fit = bound_fit(t, rho, radius_max(kappa, rho), metric, out.pairs);
  return out;
}

inline void run_bound_fit(param_reader& p, std::uint64_t, run_report& rep) {
  detail::bound_fit_setup s;
  s.gamma = detail::parse_gamma(p.raw("gamma"), p.path("gamma"));
  s.cutoff = p.get("cutoff", s.cutoff);
  s.extent = p.get("extent", s.extent);
  s.nodes = p.get("nodes", s.nodes);
  s.pairs = p.get("pairs", s.pairs);
  s.c = p.get("c", s.c);
  s.stencil16 = p.get<std::string>("stencil", "16") == "16";
  p.finish();
  const auto r = detail::run_bound_fit_pipeline(s);
  rep.table("fit", {"epsilon", "logC", "worst_pair_index"})
      .rows.push_back({fmt17(r.fit.epsilon), fmt17(r.fit.log_c), std::to_string(r.fit.worst_pair)});
  auto& t = rep.table("pairs", {"p_z", "p_w", "q_z", "q_w", "distance", "log_ratio", "slack"});
  bool holds = true;
  for (std::size_t i = 0; i < r.pairs.size(); ++i) {
    const auto xp = r.grid.coords(r.pairs[i].p), xq = r.grid.coords(r.pairs[i].q);
    const double slack = r.fit.log_c - r.fit.epsilon * r.fit.d[i] - r.fit.L[i];
    holds = holds && slack >= -1e-12;
    t.rows.push_back({fmt17(xp[0]), fmt17(xp[1]), fmt17(xq[0]), fmt17(xq[1]), fmt17(r.fit.d[i]),
                      fmt17(r.fit.L[i]), fmt17(slack)});
  }
  rep.check("positive_decay_rate", r.fit.epsilon > 0, "epsilon " + fmt17(r.fit.epsilon));
  rep.check("bound_holds_on_every_pair", holds && std::isfinite(r.fit.log_c));
}

inline void run_spectrum(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto problem = p.get<std::string>("problem", "landau");
  const double box = p.get("box", 6.0), h = p.get("h", 0.1);
  const int k = p.get("eigenvalues", 1);
  const double tol = p.get("residual_tol", 1e-8);
  std::optional<double> expect;
  if (p.has("expect_lowest")) expect = p.require<double>("expect_lowest");
  const double expect_rel = p.get("expect_rel_tol", 0.05);
  grid_operator op;
  if (problem == "landau") {
    p.finish();
    auto g = interior_grid_spacing({-box, -box}, {box, box}, h);
    magnetic_fn A = [](int c, const std::vector<double>& x) { return c == 0 ? -2 * x[1] : 2 * x[0]; };
    op = assemble_operator(scalar_potential(2, [](const std::vector<double>&) { return 4.0; }), A, g, 0.25);
  } else if (problem == "kohn") {
    const auto exps = p.get("exponents", std::vector<int>{1});
    p.finish();
    model_weight<1> phi;
    for (int e : exps) phi.exps.push_back({e});
    op = kohn_operator<1>(phi, interior_grid_spacing({-box, -box}, {box, box}, h));
  } else if (problem == "potential") {
    const auto V = polynomial_potential(detail::parse_potential(p.child("potential")));
    p.finish();
    op = assemble_operator(V, {}, interior_grid_spacing(std::vector<double>(V.dim, -box),
                                                        std::vector<double>(V.dim, box), h));
  } else {
    throw config_error(p.path("problem"), "unknown problem (landau, kohn, potential)");
  }
  eigen_options o;
  o.seed = seed;
  o.residual_tol = tol;
  o.keep_vectors = true;
  const auto s = extremal_eigenvalues(op.matrix, k, nullptr, o);
  auto& t = rep.table("spectrum", {"index", "eigenvalue", "residual"});
  double worst = 0;
  for (std::size_t i = 0; i < s.eigenvalues.size(); ++i) {
    t.rows.push_back({std::to_string(i), fmt17(s.eigenvalues[i]), fmt17(s.residuals[i])});
    worst = std::max(worst, s.residuals[i]);
  }
  const double rq = rayleigh_quotient(op, s.vectors.col(0));
  auto& sum = rep.table("summary", {"key", "value"});
  sum.rows = {{"unknowns", std::to_string(op.matrix.rows())},
              {"lanczos_steps", std::to_string(s.iterations)},
              {"shift", fmt17(s.shift)},
              {"rayleigh_quotient", fmt17(rq)},
              {"hermitian_defect", fmt17(hermitian_defect(op.matrix))}};
  rep.check("hermitian", hermitian_defect(op.matrix) <= 1e-12);
  rep.check("residuals", worst <= tol * std::max(1.0, std::abs(s.eigenvalues.back())), "worst " + fmt17(worst));
  if (expect)
    rep.check("lowest_matches_expected", std::abs(rq - *expect) <= expect_rel * std::abs(*expect),
              "rayleigh quotient " + fmt17(rq));
}

inline void run_coercivity(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto gamma = detail::parse_gamma(p.raw("gamma"), p.path("gamma"));
  coercivity_options o;
  o.seed = seed;
  o.family = p.get("family", o.family);
  o.center_box = p.get("center_box", o.center_box);
  o.half_min = p.get("half_min", o.half_min);
  o.half_max = p.get("half_max", o.half_max);
  o.panels = p.get("panels", o.panels);
  const bool doubling = p.get("check_doubling", true);
  const double stable = p.get("stability_tol", 0.2);
  p.finish();
  const auto pr = derive_profile(gamma);
  try {
    const auto r = coercivity_scan(pr, o);
    auto& t = rep.table("ratios", {"form", "ratio"});
    for (std::size_t i = 0; i < r.ratios.size(); ++i) t.rows.push_back({std::to_string(i), fmt17(r.ratios[i])});
    auto& s = rep.table("summary", {"key", "value"});
    s.rows.push_back({"min_ratio", fmt17(r.min_ratio)});
    s.rows.push_back({"argmin", std::to_string(r.argmin)});
    rep.check("positive_ratio", r.min_ratio > 0);
    if (doubling) {
      auto o2 = o;
      o2.family *= 2;
      const auto r2 = coercivity_scan(pr, o2);
      const double change = (r.min_ratio - r2.min_ratio) / r.min_ratio;
      s.rows.push_back({"min_ratio_doubled", fmt17(r2.min_ratio)});
      rep.check("stable_under_doubling", change < stable, "relative change " + fmt17(change));
    }
  } catch (const error& e) {
    if (e.code() != errc::non_positive_ratio) throw;
    rep.check("positive_ratio", false, e.what());
  }
}

inline void run_equivalence(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto gamma = detail::parse_gamma(p.raw("gamma"), p.path("gamma"));
  const int forms = p.get("forms", 8);
  const double center = p.get("center_box", 1.0), half = p.get("half", 0.7);
  const double tol = p.get("tolerance", 1e-4);
  const int diamagnetic = p.get("diamagnetic_points", 200);
  p.finish();
  const auto phi = weight_from_set(gamma);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> c(-center, center);
  std::normal_distribution<double> g;
  auto& t = rep.table("forms", {"form", "kohn", "schrodinger", "discrepancy"});
  double worst = 0;
  for (int f = 0; f < forms; ++f) {
    test_form<2> u;
    for (int r = 0; r < 4; ++r) u.center[r] = c(rng), u.half[r] = half;
    for (auto& row : u.coef)
      for (auto& a : row) a = {g(rng), g(rng)};
    const auto e = equivalence_check<2>(phi, u, center + half);
    worst = std::max(worst, e.discrepancy);
    t.rows.push_back({std::to_string(f), fmt17(e.kohn), fmt17(e.schrodinger), fmt17(e.discrepancy)});
  }
  rep.check("equivalence_discrepancy", worst < tol, "worst " + fmt17(worst));
  // |grad|u|| <= |grad_A u| with the weight's magnetic potential, on a sampled test form
  test_form<2> u;
  for (int r = 0; r < 4; ++r) u.half[r] = center + half;
  for (auto& row : u.coef)
    for (auto& a : row) a = {g(rng), g(rng)};
  magnetic_fn A = [phi](int k, const std::vector<double>& x) {
    const auto gz = phi.dbar(to_complex<2>(x.data()));
    return k % 2 == 0 ? -2 * gz[k / 2].imag() : 2 * gz[k / 2].real();
  };
  std::vector<std::vector<double>> pts;
  std::uniform_real_distribution<double> box(-center - half, center + half);
  for (int k = 0; k < diamagnetic; ++k) pts.push_back({box(rng), box(rng), box(rng), box(rng)});
  const auto fn = [&](const std::vector<double>& x) {
    const auto s = u.eval(x.data());
    function_sample out;
    out.value = s.u[0];
    out.gradient.assign(s.grad[0].begin(), s.grad[0].end());
    return out;
  };
  const double dia = diamagnetic_check(fn, A, pts);
  rep.check("diamagnetic_inequality", dia <= 1e-10, "worst excess " + fmt17(dia));
}

inline void run_discreteness(param_reader& p, std::uint64_t, run_report& rep) {
  const auto V = polynomial_potential(detail::parse_potential(p.child("potential")));
  const auto side = detail::parse_rational(p.get<json>("side", 1), p.path("side"));
  const auto raw_centers = p.get<json>("centers", json::array({json::array({0}), json::array({100})}));
  std::optional<double> floor;
  if (p.has("normalized_floor")) floor = p.require<double>("normalized_floor");
  p.finish();
  std::vector<std::vector<exact_rational>> centers;
  for (const auto& c : raw_centers) {
    std::vector<exact_rational> x;
    for (const auto& v : c) x.push_back(detail::parse_rational(v, p.path("centers")));
    if (static_cast<int>(x.size()) != V.dim) throw config_error(p.path("centers"), "wrong dimension");
    centers.push_back(std::move(x));
  }
  const auto prof = discreteness_profile(V, side, centers);
  auto& t = rep.table("profile", {"center", "lambda", "normalized"});
  bool nonneg = true, above = true;
  for (const auto& e : prof) {
    std::string c;
    for (std::size_t k = 0; k < e.center.size(); ++k) c += (k ? " " : "") + detail::rational_text(e.center[k]);
    t.rows.push_back({c, fmt17(e.lambda), fmt17(e.normalized)});
    nonneg = nonneg && e.lambda >= -1e-12 * std::max(1.0, e.integral.norm());
    if (floor) {
      double r2 = 0;
      for (const auto& ck : e.center) r2 += static_cast<double>(ck) * static_cast<double>(ck);
      if (r2 > 0) above = above && e.normalized >= *floor;
    }
  }
  rep.check("integrals_nonnegative", nonneg);
  if (floor) rep.check("normalized_above_floor", above);
}

inline void run_oscillation(param_reader& p, std::uint64_t seed, run_report& rep) {
  oscillation_options o;
  o.seed = seed;
  o.starts = p.get("starts", o.starts);
  o.tol = p.get("tol", o.tol);
  o.max_iter = p.get("max_iter", o.max_iter);
  o.certify = p.get("certify", true);
  const double oracle_tol = p.get("oracle_tol", 1e-3);
  std::vector<subspace_partition> parts;
  if (p.has("pieces")) {
    const json& pieces = p.raw("pieces");
    std::vector<double> w;
    std::vector<Eigen::MatrixXcd> spans;
    for (const auto& piece : pieces) {
      w.push_back(piece.at("weight").get<double>());
      const auto& vecs = piece.at("vectors");  // list of vectors, entries [re, im] or re
      const int m = static_cast<int>(vecs.at(0).size());
      Eigen::MatrixXcd s(m, vecs.size());
      for (std::size_t c = 0; c < vecs.size(); ++c)
        for (int r = 0; r < m; ++r) {
          const auto& v = vecs[c].at(r);
          s(r, c) = v.is_array() ? cplx(v.at(0).get<double>(), v.at(1).get<double>()) : cplx(v.get<double>(), 0);
        }
      spans.push_back(s);
    }
    p.finish();
    parts.push_back(make_partition(w, spans));
  } else {
    const int count = p.get("random_partitions", 10);
    const int max_m = p.get("max_dimension", 3);
    p.finish();
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> g;
    for (int k = 0; k < count; ++k) {
      const int m = std::uniform_int_distribution<int>(2, max_m)(rng);
      const int pieces = std::uniform_int_distribution<int>(2, 4)(rng);
      std::vector<double> w;
      std::vector<Eigen::MatrixXcd> spans;
      for (int j = 0; j < pieces; ++j) {
        w.push_back(std::uniform_real_distribution<double>(0.1, 1)(rng));
        Eigen::MatrixXcd s(m, std::uniform_int_distribution<int>(1, m - 1)(rng));
        for (Eigen::Index a = 0; a < s.size(); ++a) s(a) = {g(rng), g(rng)};
        spans.push_back(s);
      }
      parts.push_back(make_partition(w, spans));
    }
  }
  auto& t = rep.table("oscillation", {"partition", "m", "pieces", "omega", "iterations", "oracle_gap", "delta_bound"});
  bool in_range = true, bound = true, oracle = true;
  for (std::size_t i = 0; i < parts.size(); ++i) {
    auto oi = o;
    oi.certify = o.certify && parts[i].m <= 3;
    const auto r = oscillation(parts[i], oi);
    const auto d = delta_bound(parts[i]);
    in_range = in_range && r.omega >= 0 && r.omega <= 1;
    bound = bound && r.omega >= d.bound - 1e-9;
    if (oi.certify) oracle = oracle && r.oracle_gap <= oracle_tol;
    t.rows.push_back({std::to_string(i), std::to_string(parts[i].m), std::to_string(parts[i].pieces.size()),
                      fmt17(r.omega), std::to_string(r.iterations), fmt17(r.oracle_gap), fmt17(d.bound)});
  }
  rep.check("omega_in_unit_interval", in_range);
  rep.check("delta_bound_respected", bound);
  if (o.certify) rep.check("matches_oracle", oracle);
}

inline void run_muckenhoupt(param_reader& p, std::uint64_t seed, run_report& rep) {
  const auto V = polynomial_potential(detail::parse_potential(p.child("potential")));
  muckenhoupt_options o;
  o.seed = seed;
  o.delta = p.get("delta", o.delta);
  o.c = p.get("c", o.c);
  o.alpha = p.get("alpha", o.alpha);
  o.beta = p.get("beta", o.beta);
  o.cells_per_axis = p.get("cells_per_axis", o.cells_per_axis);
  const auto rule = p.get<std::string>("rule", "midpoint");
  if (rule != "midpoint" && rule != "gauss") throw config_error(p.path("rule"), "midpoint or gauss");
  o.rule = rule == "gauss" ? cell_rule::gauss : cell_rule::midpoint;
  o.random_subsets = p.get("random_subsets", o.random_subsets);
  o.directions = p.get("directions", o.directions);
  o.a2 = p.get("a2", o.a2);
  const auto raw = p.get<json>("cubes", json::array({json{{"center", std::vector<double>(V.dim, 0.5)}, {"side", 1.0}}}));
  std::optional<bool> expect_level, expect_subset;
  if (p.has("expect_level")) expect_level = p.require<bool>("expect_level");
  if (p.has("expect_subset")) expect_subset = p.require<bool>("expect_subset");
  p.finish();
  std::vector<cube> cubes;
  for (const auto& c : raw) cubes.push_back({c.at("center").get<std::vector<double>>(), c.at("side").get<double>()});
  const auto r = muckenhoupt_diagnostics(V, cubes, o);
  auto& t = rep.table("cubes", {"cube", "side", "level_fraction", "level_pass", "subset_margin", "subset_pass", "a2"});
  for (std::size_t i = 0; i < r.cubes.size(); ++i) {
    const auto& c = r.cubes[i];
    t.rows.push_back({std::to_string(i), fmt17(c.q.side), fmt17(c.level_fraction), detail::bool_text(c.level_pass),
                      fmt17(c.subset_margin), detail::bool_text(c.subset_pass), fmt17(c.a2)});
  }
  // the level condition with (c, delta) implies the subset condition with (1 - c/2, c delta/2)
  if (r.level_condition) {
    auto o2 = o;
    o2.alpha = 1 - o.c / 2;
    o2.beta = o.c * o.delta / 2;
    rep.check("level_implies_subset", muckenhoupt_diagnostics(V, cubes, o2).subset_condition);
  }
  if (expect_level) rep.check("level_condition_as_expected", r.level_condition == *expect_level,
                              "observed " + detail::bool_text(r.level_condition));
  if (expect_subset) rep.check("subset_condition_as_expected", r.subset_condition == *expect_subset,
                               "observed " + detail::bool_text(r.subset_condition));
}

inline void run_classify_cube(param_reader& p, std::uint64_t, run_report& rep) {
  const auto V = detail::parse_potential(p.child("potential"));
  classify_options o;
  o.max_depth = p.get("max_depth", o.max_depth);
  o.samples_per_axis = p.get("samples_per_axis", o.samples_per_axis);
  const auto center = p.get("center", std::vector<double>(V.dim(), 0.0));
  const double side = p.get("side", 1.0);
  p.finish();
  const auto r = classify_cube(V, {center, side}, o);
  std::string wc;
  for (std::size_t k = 0; k < r.witness.center.size(); ++k) wc += (k ? " " : "") + fmt17(r.witness.center[k]);
  rep.table("classification", {"kind", "witness_center", "witness_side", "depth", "min_ratio", "mu_spread"})
      .rows.push_back({cube_kind_name(r.kind), wc, fmt17(r.witness.side), std::to_string(r.depth),
                       fmt17(r.min_ratio), fmt17(r.mu_spread)});
  if (r.kind == cube_kind::good) rep.check("good_cube_eigenvalues_comparable", r.min_ratio >= 1.0 / 8 - 1e-12);
  if (r.kind == cube_kind::bad) rep.check("bad_cube_mu_comparable", r.mu_spread <= 4 + 1e-12);
}

}  // namespace detail

using experiment_fn = std::function<void(param_reader&, std::uint64_t, run_report&)>;

inline const std::map<std::string, experiment_fn>& experiment_kinds() {
  static const std::map<std::string, experiment_fn> kinds{
      {"profile", detail::run_profile},     {"hessian-check", detail::run_hessian_check},
      {"rho", detail::run_rho},             {"dist", detail::run_dist},
      {"moments", detail::run_moments},     {"kernel", detail::run_kernel},
      {"bound-fit", detail::run_bound_fit},         {"spectrum", detail::run_spectrum},
      {"coercivity", detail::run_coercivity},       {"equivalence", detail::run_equivalence},
      {"discreteness", detail::run_discreteness},   {"oscillation", detail::run_oscillation},
      {"muckenhoupt", detail::run_muckenhoupt},     {"classify-cube", detail::run_classify_cube},
  };
  return kinds;
}

/// Validates and runs one experiment. ConfigInvalid escapes; any other library error ends
/// the run as a failed check so the report still carries the echoed config.
inline run_report run_config(json config) {
  if (!config.is_object() || config.empty()) throw config_error("$", "config must be a non-empty object");
  run_report rep;
  param_reader top(config, "$");
  const auto kind = top.require<std::string>("kind");
  const auto seed = top.get<std::uint64_t>("seed", 1);
  const auto& kinds = experiment_kinds();
  auto it = kinds.find(kind);
  if (it == kinds.end()) throw config_error("$.kind", "unknown experiment kind \"" + kind + "\"");
  auto params = top.child("params");
  top.finish();
  try {
    it->second(params, seed, rep);
  } catch (const error& e) {
    if (e.code() == errc::config_invalid) throw;
    rep.check("completed", false, e.what());
  } catch (const nlohmann::json::exception& e) {
    throw config_error("$.params", e.what());
  }
  rep.config = std::move(config);
  return rep;
}

}  // namespace bergkern

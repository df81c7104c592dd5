#include "core/engine.hpp"

#include <sstream>

namespace rsnf {

namespace {

bool is_float_field(const json& req) {
  return req.value("field", std::string("exact")) == "float";
}

json options_of(const json& req) {
  return req.value("options", json::object());
}

template <class K>
K scalar_from_options(const json& opts, const std::string& key, const std::string& fallback) {
  std::string s = opts.value(key, fallback);
  if constexpr (FT<K>::exact)
    return QC(parse_rational(s));
  else
    return CD(std::stod(s), 0.0);
}

template <class K>
DiffeoJet<K> diffeo_of(const json& req, const char* key = "payload") {
  return DiffeoJet<K>(tuple_from_json<K>(req.at(key)));
}

template <class K>
VectorFieldJet<K> vf_of(const json& req, const char* key = "payload") {
  return VectorFieldJet<K>(tuple_from_json<K>(req.at(key)));
}

template <class K>
CurveParam<K> curve_of(const json& req) {
  return CurveParam<K>(tuple_from_json<K>(req.at("curve")));
}

// ------------------------------------------------------------------ validate
template <class K>
json do_validate(const json& req) {
  std::string kind = req.at("payload").value("kind", "");
  json out{{"kind", kind}, {"field", FT<K>::exact ? "exact" : "float"}};
  if (kind == "diffeo") {
    auto f = diffeo_of<K>(req);
    out["dim"] = f.dim();
    out["order"] = f.order();
  } else if (kind == "vector_field") {
    auto x = vf_of<K>(req);
    out["dim"] = x.dim();
    out["order"] = x.order();
    out["multiplicity"] = x.multiplicity();
  } else if (kind == "linear-system") {
    auto sys = linear_system_from_json<K>(req.at("payload"));
    out["dim"] = sys.dim();
    out["rank"] = sys.rank_s;
    out["required_order"] = required_linear_order(sys.rank_s, sys.dim());
    out["order_ok"] = sys.order() >= required_linear_order(sys.rank_s, sys.dim());
  } else {
    throw InputError("validate: unknown payload kind '" + kind + "'");
  }
  if (req.contains("curve")) {
    auto g = curve_of<K>(req);
    out["curve_multiplicity"] = g.multiplicity();
    if (kind == "diffeo") {
      auto inv = is_invariant_curve(diffeo_of<K>(req), g);
      out["curve_invariant"] = inv.invariant;
    } else if (kind == "vector_field") {
      auto inv = is_invariant_curve(vf_of<K>(req), g);
      out["curve_invariant"] = inv.invariant;
    }
  }
  if (req.contains("spectrum")) {
    auto spec = spectrum_from_json(req.at("spectrum"));
    out["spectrum_size"] = spec.size();
  }
  out["valid"] = true;
  return out;
}

// ---------------------------------------------------------------- exp / log
template <class K>
json do_exp(const json& req) {
  auto x = vf_of<K>(req);
  json opts = options_of(req);
  K t = scalar_from_options<K>(opts, "t", "1");
  int order = opts.value("order", x.order());
  auto f = exp_flow(x, t, order);
  return json{{"result", tuple_to_json(f.comp, "diffeo")}};
}

template <class K>
json do_log(const json& req) {
  auto f = diffeo_of<K>(req);
  auto x = log_unipotent(f);
  return json{{"result", tuple_to_json(x.comp, "vector_field")}};
}

// ------------------------------------------------------------------- infgen
template <class K>
json do_infgen(const json& req) {
  json out;
  if (req.contains("vf_spectrum")) {
    auto wspec = vf_spectrum_from_json(req.at("vf_spectrum"));
    auto w = is_weakly_resonant(wspec);
    json jw{{"weakly_resonant", w.weakly_resonant}};
    if (w.weakly_resonant) {
      json witness = json::array();
      for (const auto& m : w.witness) witness.push_back(m.get_si());
      jw["witness"] = witness;
    }
    out["weak_resonance"] = jw;
  }
  if (!req.contains("spectrum")) return out;
  auto spec = spectrum_from_json(req.at("spectrum"));
  auto lat = resonance_lattices(spec);
  json jl;
  jl["index"] = lat.index.get_si();
  json sb = json::array();
  for (const auto& row : lat.s_lambda) {
    json r = json::array();
    for (const auto& v : row) r.push_back(v.get_si());
    sb.push_back(r);
  }
  jl["s_lambda"] = sb;
  json spb = json::array();
  for (const auto& row : lat.s_lambda_prime) {
    json r = json::array();
    for (const auto& v : row) r.push_back(v.get_si());
    spb.push_back(r);
  }
  jl["s_lambda_prime"] = spb;
  out["lattices"] = jl;
  if (req.contains("payload")) {
    auto f = diffeo_of<K>(req);
    long m = options_of(req).value("m", lat.index.get_si());
    auto gen = infinitesimal_generator(f, spec, m);
    out["m"] = m;
    out["generator"] = tuple_to_json(gen.generator.comp, "vector_field");
    out["exp_residual"] = gen.exp_residual;
    out["commutator_norm"] = gen.commutator_norm;
  }
  return out;
}

// ------------------------------------------------------------------- blowup
template <class K>
json do_blowup(const json& req) {
  auto map = map_from_json<K>(req.at("map"));
  auto g = curve_of<K>(req);
  std::string kind = req.at("payload").value("kind", "");
  json out;
  if (kind == "vector_field") {
    auto [xt, gt] = apply_to_vf(map, vf_of<K>(req), g);
    out["result"] = tuple_to_json(xt.comp, "vector_field");
    out["curve"] = tuple_to_json(gt.comp, "curve");
  } else if (kind == "diffeo") {
    auto [ft, gt] = apply_to_diffeo(map, diffeo_of<K>(req), g);
    out["result"] = tuple_to_json(ft.comp, "diffeo");
    out["curve"] = tuple_to_json(gt.comp, "curve");
  } else {
    throw InputError("blowup: payload kind must be vector_field or diffeo");
  }
  return out;
}

// ------------------------------------------------------------ reduce-linear
template <class K>
json do_reduce_linear(const json& req) {
  auto sys = linear_system_from_json<K>(req.at("payload"));
  auto out = reduce_linear_system(sys);
  json ranks = json::array();
  for (auto [b, a] : out.diag.shearing_ranks) ranks.push_back(json::array({b, a}));
  return json{{"rs_form", rs_linear_form_to_json(out.form)},
              {"certificate", certificate_to_json(out.cert)},
              {"diagnostics",
               {{"steps", out.diag.steps},
                {"total_ramification", out.diag.total_ramification},
                {"shearing_ranks", ranks}}}};
}

template <class K>
json do_verify_certificate(const json& req) {
  auto sys = linear_system_from_json<K>(req.at("payload"));
  auto cert = certificate_from_json<K>(req.at("certificate"));
  auto fin = replay_certificate(sys, cert);
  json out{{"final_rank", fin.rank_s}, {"final_order", fin.order()}};
  if (req.contains("rs_form")) {
    const json& jf = req.at("rs_form");
    int p = jf.at("p").get<int>();
    auto dbar = polymatrix_from_json<K>(jf.at("dbar"));
    auto cbar = mat_from_json<K>(jf.at("cbar"));
    int g = fin.rank_s - p;
    bool ok = g >= 0;
    std::string detail;
    if (ok) {
      for (int i = 0; i < fin.dim() && ok; ++i)
        for (int jc = 0; jc < fin.dim() && ok; ++jc)
          if (!divisible_by_power(fin.lambda(i, jc), 0, g)) ok = false;
      if (!ok) detail = "replay not divisible by x^(s-p)";
    } else {
      detail = "negative divisor exponent";
    }
    if (ok) {
      auto reduced = fin.lambda.shifted_down(g);
      for (int i = 0; i < fin.dim() && ok; ++i)
        for (int jc = 0; jc < fin.dim() && ok; ++jc) {
          Jet<K> want = dbar(i, jc).with_order(std::min(reduced.order(), p));
          if (!FT<K>::is_zero(cbar(i, jc)) && p <= want.order())
            want.add_coeff_key(mono_var(0, p), cbar(i, jc));
          Jet<K> got = reduced(i, jc).truncated(std::min(reduced.order(), p));
          Jet<K> diff = got - want.truncated(got.order());
          if constexpr (FT<K>::exact) {
            if (!diff.is_zero()) ok = false;
          } else if (diff.max_abs() > 1e-8 * std::max(1.0, reduced.max_abs())) {
            ok = false;
          }
        }
      if (!ok && detail.empty()) detail = "replay residual nonzero through order p";
    }
    out["replay_matches"] = ok;
    if (!detail.empty()) out["detail"] = detail;
  }
  return out;
}

// ------------------------------------------------------------------- reduce
template <class K>
json do_reduce(const json& req) {
  std::string kind = req.at("payload").value("kind", "");
  json opts = options_of(req);
  int m_extra = opts.value("m_extra", 12);
  if (kind == "vector_field") {
    auto red = reduce_vf_to_rs(vf_of<K>(req), curve_of<K>(req), m_extra);
    json out{{"verdict", "reduced"},
             {"rs_form", rs_vf_to_json(red.form)},
             {"certificate", sequence_to_json(red.sequence)},
             {"validation", validation_report_to_json(validate_rs(red.form))}};
    out["diagnostics"] = json{{"restriction_order", red.diag.restriction_order},
                              {"chosen_m", red.diag.chosen_m},
                              {"linear_p", red.diag.linear_p},
                              {"ramification", red.diag.ramification}};
    return out;
  }
  if (kind == "diffeo") {
    auto spec = spectrum_from_json(req.at("spectrum"));
    auto red = reduce_diffeo_to_rs(diffeo_of<K>(req), curve_of<K>(req), spec, m_extra);
    if (red.verdict == DiffeoVerdict::periodic_curve) {
      return json{{"verdict", "case-i-periodic-curve"},
                  {"checked_order", red.periodicity_checked_order},
                  {"m", red.m}};
    }
    json out{{"verdict", "reduced"},
             {"m", red.m},
             {"rs_form", rs_diffeo_to_json(red.form)},
             {"vf_form", rs_vf_to_json(red.vf_form)},
             {"certificate", sequence_to_json(red.sequence)},
             {"exp_residual", red.exp_residual},
             {"validation", validation_report_to_json(validate_rs(red.form))}};
    return out;
  }
  throw InputError("reduce: payload kind must be vector_field or diffeo");
}

// ------------------------------------------------------------ classify etc.
std::string svg_directions(const std::vector<DirectionReport>& reps, const SectorParams& sp) {
  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='360' height='360' "
         "viewBox='-1.3 -1.3 2.6 2.6'>\n";
  svg << "<circle cx='0' cy='0' r='1' fill='none' stroke='#999' stroke-width='0.01'/>\n";
  // sector wedge around the first direction, schematic
  svg << "<path d='M 0 0 L " << 1.1 * std::cos(-0.25) << " " << 1.1 * std::sin(-0.25) << " A 1.1 1.1 0 0 1 "
      << 1.1 * std::cos(0.25) << " " << 1.1 * std::sin(0.25)
      << " Z' fill='#cde' fill-opacity='0.35' stroke='none'/>\n";
  for (const auto& r : reps) {
    double cx = r.xi.real(), cy = -r.xi.imag();
    bool any_node = false;
    for (bool b : r.node) any_node |= b;
    svg << "<line x1='0' y1='0' x2='" << cx << "' y2='" << cy << "' stroke='"
        << (any_node ? "#2a7" : "#c33") << "' stroke-width='0.02'/>\n";
    svg << "<text x='" << 1.15 * cx << "' y='" << 1.15 * cy
        << "' font-size='0.09' text-anchor='middle'>s=" << r.stable_dim << "</text>\n";
  }
  svg << "<text x='0' y='1.25' font-size='0.08' text-anchor='middle'>sector d=" << sp.d
      << " e=" << sp.e << " eps=" << sp.eps << " c=" << sp.c << "</text>\n";
  svg << "</svg>\n";
  return svg.str();
}

json direction_report_to_json(const DirectionReport& r) {
  json nodes = json::array(), rs = json::array();
  for (bool b : r.node) nodes.push_back(b);
  for (int v : r.r) rs.push_back(v);
  return json{{"dir_index", r.dir_index},
              {"angle", rational_to_string(r.angle)},
              {"node", nodes},
              {"r", rs},
              {"r_max", r.r_max},
              {"t", r.t},
              {"has_node", r.has_node},
              {"stable_dim", r.stable_dim},
              {"exact_signs", r.exact_signs}};
}

template <class K>
EngineResult do_classify(const json& req) {
  auto form = rs_diffeo_from_json<K>(req.at("payload"));
  int m = options_of(req).value("m", form.p + 2);
  std::vector<DirectionReport> reps;
  json jreps = json::array();
  std::ostringstream csv;
  csv << "dir_index,angle,stable_dim,r_max,t,variables(node:r)\n";
  SectorParams sp_first;
  for (int t = 0; t < form.q; ++t) {
    auto rep = classify_direction(form, t);
    auto bm = block_partition(form, rep, 1.0 / 3.0);
    auto sp = synthesize_sector(bm, rep, m);
    if (t == 0) sp_first = sp;
    json jr = direction_report_to_json(rep);
    jr["sector"] = json{{"d", sp.d},     {"e", sp.e},           {"eps", sp.eps},
                        {"c", sp.c},     {"verified", sp.verified},
                        {"halvings", sp.halvings},              {"interval_pass", sp.interval_pass}};
    if (!sp.failure.empty()) jr["sector"]["failure"] = sp.failure;
    jreps.push_back(jr);
    csv << rep.dir_index << "," << rational_to_string(rep.angle) << "," << rep.stable_dim << ","
        << rep.r_max << "," << rep.t << ",";
    for (size_t v = 0; v < rep.node.size(); ++v)
      csv << (v ? ";" : "") << (rep.node[v] ? "node" : "saddle") << ":" << rep.r[v];
    csv << "\n";
    reps.push_back(rep);
  }
  EngineResult res;
  res.body = json{{"directions", jreps}, {"q", form.q}, {"k", form.k}, {"p", form.p}};
  res.artifacts.push_back({"directions.csv", "text/csv", csv.str()});
  res.artifacts.push_back({"directions.svg", "image/svg+xml", svg_directions(reps, sp_first)});
  return res;
}

EngineResult do_stable(const json& req) {
  auto form = rs_diffeo_from_json<CD>(req.at("payload"));
  json opts = options_of(req);
  int m = opts.value("m", form.p + 2);
  double tol = opts.value("tol", 1e-10);
  int max_iter = opts.value("max_iter", 200);
  int grid = opts.value("grid", 64);
  int nw = opts.value("grid_w", 8);
  int dir = opts.value("direction", 0);

  auto rep = classify_direction(form, dir);
  auto bm0 = block_partition(form, rep, 1.0 / 3.0);
  auto sp = synthesize_sector(bm0, rep, m);
  if (!sp.verified)
    throw std::domain_error("stable: sector synthesis failed: " + sp.failure);
  auto bm = shift_to_m_frame(bm0, m);
  GraphDomain dom;
  dom.m = m;
  dom.nx_radial = grid;
  dom.nx_angular = grid;
  dom.nw = nw;
  dom.sector = sp;
  StableGraph graph(bm, dom);
  auto st = graph.solve(tol, max_iter);

  std::ostringstream csv;
  csv << "x_re,x_im";
  int nnode = bm.sdim - 1;
  int nsad = static_cast<int>(bm.dbar.size()) - nnode;
  for (int i = 0; i < nnode; ++i) csv << ",w" << i << "_re,w" << i << "_im";
  for (int i = 0; i < nsad; ++i) csv << ",phi" << i << "_re,phi" << i << "_im";
  csv << "\n";
  for (int idx = 0; idx < graph.nodes(); ++idx) {
    CD x;
    std::vector<CD> w;
    graph.node_coords(idx, x, w);
    csv << x.real() << "," << x.imag();
    for (const auto& c : w) csv << "," << c.real() << "," << c.imag();
    for (const auto& c : graph.node_value(idx)) csv << "," << c.real() << "," << c.imag();
    csv << "\n";
  }

  // SVG: sector outline plus a few orbit projections in the x-plane
  std::ostringstream svg;
  double eps = graph.domain().sector.eps;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='420' height='300' viewBox='"
      << -0.1 * eps << " " << -0.8 * eps << " " << 1.3 * eps << " " << 1.6 * eps << "'>\n";
  svg << "<path d='M 0 0";
  for (int i = 0; i <= 40; ++i) {
    double re = eps * i / 40.0;
    double im = graph.domain().sector.e * std::pow(re, double(sp.r_max + 1));
    svg << " L " << re << " " << -im;
  }
  for (int i = 40; i >= 0; --i) {
    double re = eps * i / 40.0;
    double im = -graph.domain().sector.d * std::pow(re, double(sp.r_max + 1));
    svg << " L " << re << " " << -im;
  }
  svg << " Z' fill='#cde' fill-opacity='0.5' stroke='#69a' stroke-width='" << eps * 0.004
      << "'/>\n";
  for (int t = 0; t < 4; ++t) {
    CD x0(eps * (0.5 + 0.1 * t), 0.0);
    std::vector<CD> w0(nnode, CD(0, 0));
    try {
      auto tr = iterate_orbit_on_graph(graph, x0, w0, 3000);
      for (size_t i = 0; i < tr.points.size(); i += 4)
        svg << "<circle cx='" << tr.points[i][0].real() << "' cy='" << -tr.points[i][0].imag()
            << "' r='" << eps * 0.006 << "' fill='#333'/>\n";
    } catch (const std::exception&) {
    }
  }
  svg << "</svg>\n";

  EngineResult res;
  res.body = json{{"diagnostics",
                   {{"sweeps", st.sweeps},
                    {"final_delta", st.final_delta},
                    {"residual", st.residual},
                    {"sup_norm", st.sup_norm},
                    {"cocycle_excess", st.cocycle_excess},
                    {"converged", st.converged}}},
                  {"sector",
                   {{"d", graph.domain().sector.d},
                    {"e", graph.domain().sector.e},
                    {"eps", graph.domain().sector.eps},
                    {"c", graph.domain().sector.c},
                    {"m", m}}},
                  {"grid", {{"radial", grid}, {"angular", grid}, {"w", nw}}}};
  res.artifacts.push_back({"stable_graph.csv", "text/csv", csv.str()});
  res.artifacts.push_back({"sector.svg", "image/svg+xml", svg.str()});
  return res;
}

EngineResult do_orbit(const json& req) {
  auto f = DiffeoJet<CD>(tuple_from_json<CD>(req.at("payload")));
  json opts = options_of(req);
  int steps = opts.value("steps", 10000);
  int kp = opts.value("k_plus_p", 1);
  int m = opts.value("m", 3);
  std::vector<CD> start;
  for (const auto& c : req.at("start")) start.push_back(cd_from_json(c));
  SectorParams sp;
  sp.d = opts.value("d", 0.5);
  sp.e = opts.value("e", 0.5);
  sp.eps = opts.value("eps", 0.2);
  sp.r_max = opts.value("r_max", 0);
  auto tr = iterate_orbit(f, start, steps, sp, kp, m);
  json est = json::array();
  for (double v : tr.estimate) est.push_back(v);
  std::ostringstream csv;
  csv << "x_re,x_im";
  for (size_t i = 1; i < start.size(); ++i) csv << ",y" << i << "_re,y" << i << "_im";
  csv << "\n";
  for (const auto& p : tr.points) {
    for (size_t i = 0; i < p.size(); ++i) csv << (i ? "," : "") << p[i].real() << "," << p[i].imag();
    csv << "\n";
  }
  EngineResult res;
  res.body = json{{"steps", tr.steps},
                  {"converged", tr.converged},
                  {"escaped", tr.escaped},
                  {"stayed_in_sector", tr.stayed_in_sector},
                  {"estimate_tail", est.empty() ? json() : json(est.back())},
                  {"estimate", est}};
  res.artifacts.push_back({"orbit.csv", "text/csv", csv.str()});
  return res;
}

// ------------------------------------------------------------------- report
template <class K>
EngineResult do_report(const json& req) {
  auto f = diffeo_of<K>(req);
  auto g = curve_of<K>(req);
  auto rest = restrict_to_curve(f, g);
  json out;
  if (rest.tag == RestrictionTag::hyperbolic_attracting) {
    out["verdict"] = "hyperbolic-attracting";
    out["statement"] =
        "the invariant curve is convergent and, minus the origin, is the maximal stable set of "
        "orbits asymptotic to it";
    if constexpr (FT<K>::exact) out["inner_eigenvalue"] = qc_to_json(rest.inner_eigenvalue);
    return {out, {}};
  }
  if (rest.tag == RestrictionTag::other || rest.tag == RestrictionTag::indeterminate) {
    out["verdict"] = "out-of-scope";
    out["statement"] =
        "the inner eigenvalue is neither hyperbolic attracting nor certified rationally neutral; "
        "no stable-manifold family is produced";
    return {out, {}};
  }
  // rationally neutral: reduce and classify
  auto spec = spectrum_from_json(req.at("spectrum"));
  int m_extra = options_of(req).value("m_extra", 12);
  auto red = reduce_diffeo_to_rs(f, g, spec, m_extra);
  if (red.verdict == DiffeoVerdict::periodic_curve) {
    out["verdict"] = "case-i-periodic-curve";
    out["statement"] = "the curve lies in the fixed-point set of the m-th iterate, to order " +
                       std::to_string(red.periodicity_checked_order);
    out["m"] = red.m;
    return {out, {}};
  }
  out["verdict"] = "case-ii-stable-manifolds";
  out["m"] = red.m;
  out["rs_form"] = rs_diffeo_to_json(red.form);
  int m = red.form.p + 2;
  json dirs = json::array();
  std::vector<DirectionReport> reps;
  SectorParams sp0;
  for (int t = 0; t < red.form.q; ++t) {
    auto rep = classify_direction(red.form, t);
    auto bm = block_partition(red.form, rep, 1.0 / 3.0);
    auto sp = synthesize_sector(bm, rep, m);
    if (t == 0) sp0 = sp;
    json jd = direction_report_to_json(rep);
    jd["sector"] = json{
        {"d", sp.d}, {"e", sp.e}, {"eps", sp.eps}, {"c", sp.c}, {"verified", sp.verified}};
    dirs.push_back(jd);
    reps.push_back(rep);
  }
  out["stable_manifolds"] = dirs;
  out["statement"] =
      "finite family of pairwise disjoint stable manifolds, one per attracting direction; every "
      "orbit in them is asymptotic to the invariant curve";
  EngineResult res{out, {}};
  res.artifacts.push_back({"directions.svg", "image/svg+xml", svg_directions(reps, sp0)});
  return res;
}

}  // namespace

std::vector<std::string> command_names() {
  return {"validate",       "exp",     "log",      "infgen", "blowup", "reduce-linear",
          "verify-certificate", "reduce", "classify", "stable", "orbit",  "report"};
}

EngineResult run_command(const std::string& command, const json& request) {
  bool flt = is_float_field(request);
  auto simple = [&](json body) {
    EngineResult r;
    r.body = std::move(body);
    return r;
  };
  if (command == "validate")
    return simple(flt ? do_validate<CD>(request) : do_validate<QC>(request));
  if (command == "exp") return simple(flt ? do_exp<CD>(request) : do_exp<QC>(request));
  if (command == "log") return simple(flt ? do_log<CD>(request) : do_log<QC>(request));
  if (command == "infgen") return simple(flt ? do_infgen<CD>(request) : do_infgen<QC>(request));
  if (command == "blowup") return simple(flt ? do_blowup<CD>(request) : do_blowup<QC>(request));
  if (command == "reduce-linear")
    return simple(flt ? do_reduce_linear<CD>(request) : do_reduce_linear<QC>(request));
  if (command == "verify-certificate")
    return simple(flt ? do_verify_certificate<CD>(request) : do_verify_certificate<QC>(request));
  if (command == "reduce") return simple(flt ? do_reduce<CD>(request) : do_reduce<QC>(request));
  if (command == "classify") return flt ? do_classify<CD>(request) : do_classify<QC>(request);
  if (command == "stable") return do_stable(request);
  if (command == "orbit") return do_orbit(request);
  if (command == "report") return flt ? do_report<CD>(request) : do_report<QC>(request);
  throw InputError("unknown command '" + command + "'");
}

}  // namespace rsnf

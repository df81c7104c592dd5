#pragma once

#include <json.hpp>

#include "core/rspipeline.hpp"

namespace rsnf {

using nlohmann::json;

struct InputError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// scalar encodings: exact values as "p/q" strings, float values as decimal
// strings next to an explicit precision field on the enclosing jet
json qc_to_json(const QC& v);
json cd_to_json(const CD& v);
QC qc_from_json(const json& j);
CD cd_from_json(const json& j);

template <class K>
json jet_to_json(const Jet<K>& a) {
  json terms = json::array();
  for (const auto& [key, c] : a.terms()) {
    json t;
    std::vector<int> e(a.num_vars());
    for (int i = 0; i < a.num_vars(); ++i) e[i] = mono_exp(key, i);
    t["exp"] = e;
    if constexpr (FT<K>::exact) {
      t["re"] = rational_to_string(c.re);
      t["im"] = rational_to_string(c.im);
    } else {
      char buf[64];
      std::snprintf(buf, sizeof buf, "%.17g", c.real());
      t["re"] = std::string(buf);
      std::snprintf(buf, sizeof buf, "%.17g", c.imag());
      t["im"] = std::string(buf);
    }
    terms.push_back(t);
  }
  json out;
  out["vars"] = a.num_vars();
  out["order"] = a.order();
  if constexpr (!FT<K>::exact) out["precision"] = float_precision_bits();
  out["terms"] = terms;
  return out;
}

template <class K>
Jet<K> jet_from_json(const json& j) {
  if (!j.contains("vars") || !j.contains("order") || !j.contains("terms"))
    throw InputError("jet: need vars, order, terms");
  Jet<K> out(j.at("vars").get<int>(), j.at("order").get<int>());
  for (const auto& t : j.at("terms")) {
    std::vector<int> e = t.at("exp").get<std::vector<int>>();
    if (static_cast<int>(e.size()) != out.num_vars())
      throw InputError("jet term: exponent arity mismatch");
    K c;
    if constexpr (FT<K>::exact) {
      c = QC(parse_rational(t.at("re").get<std::string>()),
             parse_rational(t.at("im").get<std::string>()));
    } else {
      c = CD(std::stod(t.at("re").get<std::string>()), std::stod(t.at("im").get<std::string>()));
    }
    out.set_coeff(e, c);
  }
  return out;
}

template <class K>
json tuple_to_json(const JetTuple<K>& t, const std::string& kind) {
  json comps = json::array();
  for (const auto& c : t) comps.push_back(jet_to_json(c));
  json out;
  out["kind"] = kind;
  out["components"] = comps;
  return out;
}

template <class K>
JetTuple<K> tuple_from_json(const json& j) {
  JetTuple<K> out;
  for (const auto& c : j.at("components")) out.push_back(jet_from_json<K>(c));
  return out;
}

std::vector<PolarEigenvalue> spectrum_from_json(const json& j);
json spectrum_to_json(const std::vector<PolarEigenvalue>& spec);
std::vector<VFEigenvalue> vf_spectrum_from_json(const json& j);

template <class K>
json polymatrix_to_json(const PolyMatrix<K>& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int jc = 0; jc < m.cols(); ++jc) row.push_back(jet_to_json(m(i, jc)));
    rows.push_back(row);
  }
  return json{{"rows", m.rows()}, {"cols", m.cols()}, {"order", m.order()}, {"entries", rows}};
}

template <class K>
PolyMatrix<K> polymatrix_from_json(const json& j) {
  PolyMatrix<K> m(j.at("rows").get<int>(), j.at("cols").get<int>(), j.at("order").get<int>());
  const auto& rows = j.at("entries");
  for (int i = 0; i < m.rows(); ++i)
    for (int jc = 0; jc < m.cols(); ++jc) m(i, jc) = jet_from_json<K>(rows.at(i).at(jc));
  return m;
}

template <class K>
json mat_to_json(const Mat<K>& m) {
  json rows = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int jc = 0; jc < m.cols(); ++jc) {
      if constexpr (FT<K>::exact)
        row.push_back(qc_to_json(m(i, jc)));
      else
        row.push_back(cd_to_json(m(i, jc)));
    }
    rows.push_back(row);
  }
  return rows;
}

template <class K>
Mat<K> mat_from_json(const json& j) {
  int r = static_cast<int>(j.size());
  int c = r == 0 ? 0 : static_cast<int>(j.at(0).size());
  Mat<K> m(r, c);
  for (int i = 0; i < r; ++i)
    for (int jc = 0; jc < c; ++jc) {
      if constexpr (FT<K>::exact)
        m(i, jc) = qc_from_json(j.at(i).at(jc));
      else
        m(i, jc) = cd_from_json(j.at(i).at(jc));
    }
  return m;
}

template <class K>
json linear_system_to_json(const LinearSystem<K>& sys) {
  return json{{"kind", "linear-system"},
              {"rank", sys.rank_s},
              {"lambda", polymatrix_to_json(sys.lambda)}};
}

template <class K>
LinearSystem<K> linear_system_from_json(const json& j) {
  LinearSystem<K> sys;
  sys.rank_s = j.at("rank").get<int>();
  sys.lambda = polymatrix_from_json<K>(j.at("lambda"));
  return sys;
}

template <class K>
json certificate_to_json(const GaugeCertificate<K>& cert) {
  json entries = json::array();
  for (const auto& e : cert.entries) {
    json je;
    if (e.kind == GaugeEntry<K>::gauge) {
      je["type"] = "gauge";
      je["p"] = polymatrix_to_json(e.p);
    } else if (e.kind == GaugeEntry<K>::shearing) {
      je["type"] = "shearing";
      je["exponents"] = e.shear;
    } else {
      je["type"] = "ramification";
      je["alpha"] = e.alpha;
    }
    entries.push_back(je);
  }
  json ranks = json::array();
  for (auto [b, a] : cert.shearing_ranks) ranks.push_back(json::array({b, a}));
  return json{{"entries", entries}, {"shearing_ranks", ranks}};
}

template <class K>
GaugeCertificate<K> certificate_from_json(const json& j) {
  GaugeCertificate<K> cert;
  for (const auto& je : j.at("entries")) {
    GaugeEntry<K> e;
    std::string type = je.at("type").get<std::string>();
    if (type == "gauge") {
      e.kind = GaugeEntry<K>::gauge;
      e.p = polymatrix_from_json<K>(je.at("p"));
    } else if (type == "shearing") {
      e.kind = GaugeEntry<K>::shearing;
      e.shear = je.at("exponents").get<std::vector<int>>();
    } else if (type == "ramification") {
      e.kind = GaugeEntry<K>::ramification;
      e.alpha = je.at("alpha").get<int>();
    } else {
      throw InputError("certificate: unknown entry type " + type);
    }
    cert.entries.push_back(std::move(e));
  }
  return cert;
}

template <class K>
json rs_linear_form_to_json(const RSLinearForm<K>& f) {
  return json{{"p", f.p},
              {"dbar", polymatrix_to_json(f.dbar)},
              {"cbar", mat_to_json(f.cbar)},
              {"remainder", polymatrix_to_json(f.remainder)},
              {"working_order", f.working_order}};
}

template <class K>
json map_to_json(const PermissibleMap<K>& m) {
  json out;
  switch (m.kind) {
    case MapKind::change: {
      out["kind"] = "change";
      out["fwd"] = tuple_to_json(m.fwd, "map");
      out["inv"] = tuple_to_json(m.inv, "map");
      break;
    }
    case MapKind::blowup: {
      out["kind"] = "blowup";
      out["center"] = m.center_vars;
      json xs = json::array();
      for (const auto& v : m.xi) {
        if constexpr (FT<K>::exact)
          xs.push_back(qc_to_json(v));
        else
          xs.push_back(cd_to_json(v));
      }
      out["xi"] = xs;
      break;
    }
    case MapKind::ramification: {
      out["kind"] = "ramification";
      out["l"] = m.ram_exp;
      break;
    }
    case MapKind::shearing: {
      out["kind"] = "shearing";
      out["exponents"] = m.shear_exp;
      break;
    }
  }
  out["dim"] = m.n;
  return out;
}

template <class K>
PermissibleMap<K> map_from_json(const json& j) {
  std::string kind = j.at("kind").get<std::string>();
  int n = j.at("dim").get<int>();
  if (kind == "change")
    return PermissibleMap<K>::make_change(tuple_from_json<K>(j.at("fwd")),
                                          tuple_from_json<K>(j.at("inv")));
  if (kind == "blowup") {
    std::vector<K> xi;
    for (const auto& v : j.at("xi")) {
      if constexpr (FT<K>::exact)
        xi.push_back(qc_from_json(v));
      else
        xi.push_back(cd_from_json(v));
    }
    return PermissibleMap<K>::make_blowup(n, j.at("center").get<std::vector<int>>(), xi);
  }
  if (kind == "ramification") return PermissibleMap<K>::make_ramification(n, j.at("l").get<int>());
  if (kind == "shearing")
    return PermissibleMap<K>::make_shearing(n, j.at("exponents").get<std::vector<int>>());
  throw InputError("map: unknown kind " + kind);
}

template <class K>
json sequence_to_json(const TransformSequence<K>& seq) {
  json maps = json::array();
  for (const auto& m : seq.maps) maps.push_back(map_to_json(m));
  return json{{"maps", maps}, {"notes", seq.divisor_log}};
}

template <class K>
json rs_vf_to_json(const RSVectorField<K>& f) {
  json out;
  out["q"] = f.q;
  out["nu"] = f.nu;
  out["p"] = f.p;
  if constexpr (FT<K>::exact) {
    out["lambda"] = qc_to_json(f.lambda);
    out["b"] = qc_to_json(f.b);
  } else {
    out["lambda"] = cd_to_json(f.lambda);
    out["b"] = cd_to_json(f.b);
  }
  out["d"] = polymatrix_to_json(f.d);
  out["c"] = mat_to_json(f.c);
  out["field"] = tuple_to_json(f.field.comp, "vector_field");
  out["curve"] = tuple_to_json(f.curve.comp, "curve");
  return out;
}

template <class K>
json rs_diffeo_to_json(const RSDiffeo<K>& f) {
  json out;
  out["q"] = f.q;
  out["k"] = f.k;
  out["p"] = f.p;
  if constexpr (FT<K>::exact)
    out["b"] = qc_to_json(f.b);
  else
    out["b"] = cd_to_json(f.b);
  out["d"] = polymatrix_to_json(f.d);
  out["c"] = mat_to_json(f.c);
  out["map"] = tuple_to_json(f.map.comp, "diffeo");
  out["curve"] = tuple_to_json(f.curve.comp, "curve");
  return out;
}

template <class K>
RSDiffeo<K> rs_diffeo_from_json(const json& j) {
  RSDiffeo<K> f;
  f.q = j.at("q").get<int>();
  f.k = j.at("k").get<int>();
  f.p = j.at("p").get<int>();
  if constexpr (FT<K>::exact)
    f.b = qc_from_json(j.at("b"));
  else
    f.b = cd_from_json(j.at("b"));
  f.d = polymatrix_from_json<K>(j.at("d"));
  f.c = mat_from_json<K>(j.at("c"));
  f.map = DiffeoJet<K>(tuple_from_json<K>(j.at("map")));
  f.curve = CurveParam<K>(tuple_from_json<K>(j.at("curve")));
  return f;
}

json validation_report_to_json(const ValidationReport& rep);

}  // namespace rsnf

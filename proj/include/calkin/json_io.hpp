#pragma once

#include <json.hpp>

#include <cstdio>
#include <string>

#include "calkin/deltanorm.hpp"
#include "calkin/dyadic.hpp"
#include "calkin/functionals.hpp"
#include "calkin/majorization.hpp"
#include "calkin/opmodel.hpp"
#include "calkin/seqcore.hpp"
#include "calkin/stepfn.hpp"

namespace calkin::json {

using Json = nlohmann::ordered_json;

inline Json rational(const Rational& q) { return to_string(q); }

/// Floats go out as numbers printed with 17 significant digits.
inline Json real(double v) {
  if (!std::isfinite(v)) return v > 0 ? Json("inf") : v < 0 ? Json("-inf") : Json("nan");
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return Json::parse(buf);
}

inline Rational to_rational(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(j.get<long>());
  if (j.is_number()) return from_double(j.get<double>());
  throw Error(ErrorCode::ParseError, "expected a rational, got " + j.dump());
}

inline const Json& field(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains(key)) throw Error(ErrorCode::ParseError, std::string("missing key '") + key + "'");
  return j.at(key);
}

inline long to_long(const Json& j) {
  if (!j.is_number_integer()) throw Error(ErrorCode::ParseError, "expected an integer, got " + j.dump());
  return j.get<long>();
}

inline std::vector<Rational> rationals(const Json& j) {
  if (!j.is_array()) throw Error(ErrorCode::ParseError, "expected an array");
  std::vector<Rational> out;
  for (const auto& e : j) out.push_back(to_rational(e));
  return out;
}

inline Json rationals(const std::vector<Rational>& v) {
  Json a = Json::array();
  for (const auto& q : v) a.push_back(rational(q));
  return a;
}

// ---- sequences

inline Json to_json(const Tail& t) {
  if (t.zero) return {{"kind", "zero"}};
  return {{"kind", "geom"}, {"c", rational(t.c)}, {"r", rational(t.r)}};
}

inline Tail tail_from(const Json& j) {
  if (j.is_null()) return Tail::Zero();
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "zero") return Tail::Zero();
  if (kind == "geom") return Tail::Geometric(to_rational(field(j, "c")), to_rational(field(j, "r")));
  if (kind == "const") return Tail::Constant(to_rational(field(j, "c")));
  throw Error(ErrorCode::ParseError, "unknown tail kind '" + kind + "'");
}

inline Json to_json(const DyadicSequence& x) {
  return {{"lo", x.lo()},
          {"hi", x.hi()},
          {"values", rationals(x.values())},
          {"left", to_json(x.left())},
          {"right", to_json(x.right())},
          {"index_set", index_set_name(x.index_set())}};
}

inline IndexSet index_set_from(const std::string& s) {
  if (s == "Z") return IndexSet::Z;
  if (s == "Z+") return IndexSet::ZPlus;
  if (s == "Z-") return IndexSet::ZMinus;
  throw Error(ErrorCode::ParseError, "unknown index set '" + s + "'");
}

inline DyadicSequence sequence_from(const Json& j) {
  const long lo = to_long(field(j, "lo"));
  std::vector<Rational> v = rationals(field(j, "values"));
  if (j.contains("hi") && to_long(j.at("hi")) != lo + static_cast<long>(v.size()) - 1)
    throw Error(ErrorCode::ParseError, "hi does not match the number of values");
  IndexSet s = j.contains("index_set") ? index_set_from(j.at("index_set").get<std::string>()) : IndexSet::Z;
  return DyadicSequence(lo, std::move(v), tail_from(j.value("left", Json())), tail_from(j.value("right", Json())),
                        s);
}

// ---- step functions

inline Json to_json(const StepFunction& f) {
  Json j;
  if (const auto& z = f.zero_tail())
    j["zero_tail"] = {{"c", rational(z->c)}, {"r", rational(z->r)}, {"lo", z->lo}};
  else
    j["zero_tail"] = nullptr;
  j["breakpoints"] = rationals(f.breakpoints());
  j["values"] = rationals(f.values());
  j["v_inf"] = rational(f.v_inf());
  const InfinityTail& t = f.infinity_tail();
  if (t.geometric) j["inf_tail"] = {{"c", rational(t.c)}, {"r", rational(t.r)}, {"hi", t.hi}};
  return j;
}

inline StepFunction step_from(const Json& j) {
  std::optional<ZeroTail> z;
  if (j.contains("zero_tail") && !j.at("zero_tail").is_null()) {
    const Json& zt = j.at("zero_tail");
    z = ZeroTail{to_rational(field(zt, "c")), to_rational(field(zt, "r")), to_long(field(zt, "lo"))};
  }
  InfinityTail inf = InfinityTail::Constant(j.contains("v_inf") ? to_rational(j.at("v_inf")) : Rational(0));
  if (j.contains("inf_tail") && !j.at("inf_tail").is_null()) {
    const Json& it = j.at("inf_tail");
    inf = InfinityTail::Geometric(to_rational(field(it, "c")), to_rational(field(it, "r")), to_long(field(it, "hi")));
  }
  return StepFunction(z, rationals(field(j, "breakpoints")), rationals(field(j, "values")), inf);
}

// ---- operators

inline Json entry_json(const BlockMatrix& m, long i, long k) {
  if (m.is_exact()) {
    const CRational& e = m.exact()[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)];
    return {{"re", rational(e.re)}, {"im", rational(e.im)}};
  }
  const auto z = m.numeric()(i, k);
  return {{"re", real(z.real())}, {"im", real(z.imag())}};
}

inline Json to_json(const Operator& x) {
  if (x.is_commutative()) return {{"kind", "commutative"}, {"f", to_json(x.function())}};
  Json blocks = Json::array();
  for (std::size_t b = 0; b < x.matrices().size(); ++b) {
    const BlockMatrix& m = x.matrices()[b];
    Json rows = Json::array();
    for (long i = 0; i < m.dim(); ++i) {
      Json row = Json::array();
      for (long k = 0; k < m.dim(); ++k) row.push_back(entry_json(m, i, k));
      rows.push_back(std::move(row));
    }
    blocks.push_back({{"d", x.algebra().blocks()[b].d}, {"w", rational(x.algebra().blocks()[b].w)}, {"matrix", rows}});
  }
  return {{"kind", "block"}, {"blocks", blocks}};
}

inline CRational entry_from(const Json& e) {
  if (e.is_object()) {
    CRational c;
    if (e.contains("re")) c.re = to_rational(e.at("re"));
    if (e.contains("im")) c.im = to_rational(e.at("im"));
    return c;
  }
  return CRational{to_rational(e), Rational(0)};
}

inline Operator operator_from(const Json& j) {
  const std::string kind = field(j, "kind").get<std::string>();
  if (kind == "commutative") return Operator::commutative(step_from(field(j, "f")));
  if (kind != "block") throw Error(ErrorCode::ParseError, "unknown operator kind '" + kind + "'");
  std::vector<BlockSpec> specs;
  std::vector<BlockMatrix> mats;
  for (const auto& b : field(j, "blocks")) {
    const long d = to_long(field(b, "d"));
    const Rational w = b.contains("w") ? to_rational(b.at("w")) : Rational(1);
    specs.push_back({d, w});
    ExactMatrix m = exact_zero(d);
    if (b.contains("diag")) {
      auto diag = rationals(b.at("diag"));
      if (static_cast<long>(diag.size()) != d) throw Error(ErrorCode::ParseError, "diagonal length differs from d");
      m = exact_diag(diag);
    } else {
      const Json& rows = field(b, "matrix");
      if (!rows.is_array() || static_cast<long>(rows.size()) != d)
        throw Error(ErrorCode::ParseError, "matrix must have d rows");
      for (long i = 0; i < d; ++i) {
        const Json& row = rows[static_cast<std::size_t>(i)];
        if (!row.is_array() || static_cast<long>(row.size()) != d)
          throw Error(ErrorCode::ParseError, "matrix rows must have d entries");
        for (long k = 0; k < d; ++k)
          m[static_cast<std::size_t>(i)][static_cast<std::size_t>(k)] = entry_from(row[static_cast<std::size_t>(k)]);
      }
    }
    mats.emplace_back(std::move(m));
  }
  return Operator::block(BlockAlgebra(std::move(specs)), std::move(mats));
}

// ---- results

inline Json to_json(const Extended& e) { return e.str(); }

inline Json to_json(const EvalResult& r) {
  Json j;
  j["defined"] = r.defined;
  if (r.defined) {
    j["value"] = r.exact ? rational(r.value) : real(r.approx);
    j["exact"] = r.exact;
    if (r.imag != 0) j["imag"] = rational(r.imag);
    if (r.representation_dependent) j["representation_dependent"] = true;
  } else {
    j["reason"] = r.reason;
  }
  return j;
}

inline Json to_json(const MajorizationVerdict& v) {
  Json j{{"holds", v.holds}, {"margin", rational(v.margin)}, {"candidates", v.candidates}};
  if (v.witness) j["witness"] = {{"a", rational(v.witness->first)}, {"b", rational(v.witness->second)}};
  return j;
}

inline Json to_json(const DyadicRep& rep) {
  Json j;
  j["subject"] = to_json(rep.subject);
  Json parts = Json::array();
  for (const auto& p : rep.parts) parts.push_back({{"k", p.k}, {"op", to_json(p.op)}});
  j["parts"] = parts;
  Json fams = Json::array();
  for (const auto& f : rep.families) fams.push_back({{"g", to_json(f.g)}, {"shift", f.shift}});
  j["families"] = fams;
  j["residuals"] = to_json(rep.residuals);
  j["coefficients"] = to_json(rep.coefficients);
  j["coefficients_imag"] = to_json(rep.coefficients_imag);
  j["exact"] = rep.exact;
  j["residuals_exact"] = rep.residuals_exact;
  return j;
}

/// Rebuilds a rep from its parts or families. Residuals and coefficients
/// given in the document replace the recomputed ones so they can be checked.
inline DyadicRep rep_from(const Json& j) {
  Operator subject = operator_from(field(j, "subject"));
  DyadicRep rep;
  if (subject.is_commutative()) {
    std::vector<CellFamily> fams;
    for (const auto& f : j.value("families", Json::array()))
      fams.push_back({step_from(field(f, "g")), to_long(field(f, "shift"))});
    rep = rep_from_families(subject.function(), std::move(fams));
  } else {
    std::vector<DyadicPart> parts;
    for (const auto& p : j.value("parts", Json::array()))
      parts.push_back({to_long(field(p, "k")), operator_from(field(p, "op"))});
    rep = rep_from_parts(subject, std::move(parts));
  }
  if (j.contains("residuals")) rep.residuals = sequence_from(j.at("residuals"));
  if (j.contains("coefficients")) rep.coefficients = sequence_from(j.at("coefficients"));
  if (j.contains("coefficients_imag")) rep.coefficients_imag = sequence_from(j.at("coefficients_imag"));
  if (j.contains("residuals_exact")) rep.residuals_exact = j.at("residuals_exact").get<bool>();
  return rep;
}

inline Json to_json(const ValidationReport& r) {
  Json j{{"ok", r.ok()},
         {"support_ok", r.support_ok},
         {"sum_ok", r.sum_ok},
         {"residuals_ok", r.residuals_ok},
         {"support_margin", rational(r.support_margin)}};
  if (r.membership) {
    j["membership"] = *r.membership;
    if (*r.membership) j["membership_witness"] = {{"k", r.membership_k}, {"C", rational(r.membership_C)}};
  }
  j["violations"] = r.violations;
  return j;
}

inline Json to_json(const ClassifyReport& r) {
  return {{"supported_at_plus_inf", r.supported_at_plus_inf},
          {"supported_at_minus_inf", r.supported_at_minus_inf},
          {"positive", r.positive},
          {"normalised", r.normalised},
          {"value_at_chi_z", to_json(r.at_chi_z)}};
}

inline Json to_json(const NormValue& v) {
  if (v.infinite) return {{"value", "inf"}, {"exact", true}};
  if (v.exact) return {{"value", rational(v.value)}, {"exact", true}};
  return {{"value", real(v.to_double())}, {"exact", false}};
}

inline Json to_json(const ConstantsReport& r) {
  Json dil = Json::array();
  for (double d : r.worst_dilation) dil.push_back(real(d));
  return {{"ok", r.ok()},
          {"declared_C", rational(r.declared_C)},
          {"trials", r.trials},
          {"worst_triangle_function", real(r.worst_triangle_function)},
          {"worst_triangle_sequence", real(r.worst_triangle_sequence)},
          {"worst_triangle_operator", real(r.worst_triangle_operator)},
          {"worst_shift", real(r.worst_shift)},
          {"worst_dilation", dil},
          {"min_shift_ratio", real(r.l1_shift_ratio_min)}};
}

inline Json error_json(const Error& e) { return {{"error", error_name(e.code())}, {"message", e.what()}}; }

}  // namespace calkin::json

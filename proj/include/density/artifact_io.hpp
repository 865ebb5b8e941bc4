#pragma once

// On-disk forms of construction artifacts: a versioned JSON document (membership as
// run lengths, the run configuration embedded), JSONL traces with one object per stage,
// and certificate CSV.  Decoding validates shape and raises ArtifactCorrupt.

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include <json.hpp>

#include "density/approximators.hpp"
#include "density/construction.hpp"
#include "density/errors.hpp"
#include "density/prioritysim.hpp"
#include "density/report.hpp"

namespace density::io {

using Json = nlohmann::ordered_json;

inline constexpr std::uint64_t kFormatVersion = 1;

class ArtifactCorrupt : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------
// scalars and run lengths

inline Json rational_json(const Rational& r) { return to_string(r); }

inline Rational rational_from(const Json& j) {
  if (j.is_string()) return parse_rational(j.get<std::string>());
  if (j.is_number_integer()) return Rational(BigInt(j.get<std::int64_t>()));
  throw ArtifactCorrupt("expected a rational, got " + j.dump());
}

/// Alternating run lengths, the first run being 0-bits.
inline Json bits_json(const std::vector<bool>& bits) {
  Json runs = Json::array();
  bool cur = false;
  std::uint64_t len = 0;
  for (bool b : bits) {
    if (b != cur) {
      runs.push_back(len);
      cur = b, len = 0;
    }
    ++len;
  }
  runs.push_back(len);
  return Json{{"length", bits.size()}, {"runs", std::move(runs)}};
}

inline std::vector<bool> bits_from(const Json& j) {
  auto n = j.at("length").get<std::uint64_t>();
  std::vector<bool> bits;
  bits.reserve(n);
  bool cur = false;
  for (const auto& r : j.at("runs")) {
    auto len = r.get<std::uint64_t>();
    if (len > n - bits.size()) throw ArtifactCorrupt("bit runs exceed the declared length");
    bits.insert(bits.end(), len, cur);
    cur = !cur;
  }
  if (bits.size() != n) throw ArtifactCorrupt("bit runs do not cover the declared length");
  return bits;
}

/// [value, count] pairs.
inline Json values_json(const std::vector<std::uint64_t>& v) {
  Json runs = Json::array();
  for (std::size_t i = 0; i < v.size();) {
    std::size_t k = i;
    while (k < v.size() && v[k] == v[i]) ++k;
    runs.push_back(Json::array({v[i], k - i}));
    i = k;
  }
  return Json{{"length", v.size()}, {"runs", std::move(runs)}};
}

inline std::vector<std::uint64_t> values_from(const Json& j) {
  auto n = j.at("length").get<std::uint64_t>();
  std::vector<std::uint64_t> v;
  v.reserve(n);
  for (const auto& r : j.at("runs")) {
    if (!r.is_array() || r.size() != 2) throw ArtifactCorrupt("value run must be [value, count]");
    auto len = r[1].get<std::uint64_t>();
    if (len > n - v.size()) throw ArtifactCorrupt("value runs exceed the declared length");
    v.insert(v.end(), len, r[0].get<std::uint64_t>());
  }
  if (v.size() != n) throw ArtifactCorrupt("value runs do not cover the declared length");
  return v;
}

// ---------------------------------------------------------------------------
// records

inline Rel rel_from(const std::string& s) {
  for (Rel r : {Rel::Ge, Rel::Le, Rel::Eq, Rel::Lt, Rel::Gt})
    if (s == to_string(r)) return r;
  throw ArtifactCorrupt("unknown relation '" + s + "'");
}

inline Json certificate_json(const Certificate& c) {
  return Json{{"family", c.family}, {"index", c.index}, {"at", c.at},     {"lhs", rational_json(c.lhs)},
              {"rel", to_string(c.rel)}, {"rhs", rational_json(c.rhs)}, {"holds", c.holds}};
}

inline Certificate certificate_from(const Json& j) {
  Certificate c;
  c.family = j.at("family").get<std::string>();
  c.index = j.at("index").get<std::uint64_t>();
  c.at = j.at("at").get<std::uint64_t>();
  c.lhs = rational_from(j.at("lhs"));
  c.rel = rel_from(j.at("rel").get<std::string>());
  c.rhs = rational_from(j.at("rhs"));
  c.holds = j.at("holds").get<bool>();
  return c;
}

inline bool same_certificate(const Certificate& a, const Certificate& b) {
  return a.family == b.family && a.index == b.index && a.at == b.at && a.lhs == b.lhs && a.rel == b.rel &&
         a.rhs == b.rhs && a.holds == b.holds;
}

inline Json certificates_json(const std::vector<Certificate>& cs) {
  Json a = Json::array();
  for (const auto& c : cs) a.push_back(certificate_json(c));
  return a;
}

inline std::vector<Certificate> certificates_from(const Json& j) {
  std::vector<Certificate> cs;
  for (const auto& c : j) cs.push_back(certificate_from(c));
  return cs;
}

inline Json diagnostics_json(const std::vector<Diagnostic>& ds) {
  Json a = Json::array();
  for (const auto& d : ds) a.push_back(Json{{"kind", d.kind}, {"where", d.where}, {"message", d.message}});
  return a;
}

inline std::vector<Diagnostic> diagnostics_from(const Json& j) {
  std::vector<Diagnostic> ds;
  for (const auto& d : j)
    ds.push_back({d.at("kind").get<std::string>(), d.at("where").get<std::uint64_t>(), d.at("message").get<std::string>()});
  return ds;
}

inline Json trace_value_json(const TraceValue& v) {
  return std::visit([](const auto& x) { return Json(x); }, v);
}

/// Non-negative integers decode as unsigned.
inline TraceValue trace_value_from(const Json& j) {
  if (j.is_boolean()) return j.get<bool>();
  if (j.is_number_unsigned()) return j.get<std::uint64_t>();
  if (j.is_number_integer()) return j.get<std::int64_t>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_array()) return j.get<std::vector<std::uint64_t>>();
  throw ArtifactCorrupt("unsupported trace value " + j.dump());
}

inline Json event_json(const TraceEvent& e, bool with_stage = true) {
  Json o;
  if (with_stage) o["stage"] = e.stage;
  o["kind"] = e.kind;
  for (const auto& [k, v] : e.fields) o[k] = trace_value_json(v);
  return o;
}

inline TraceEvent event_from(const Json& j, std::uint64_t stage) {
  TraceEvent e;
  e.stage = stage;
  for (const auto& [k, v] : j.items()) {
    if (k == "stage") continue;
    if (k == "kind")
      e.kind = v.get<std::string>();
    else
      e.fields.emplace_back(k, trace_value_from(v));
  }
  return e;
}

/// Events grouped by stage: [{"stage": s, "events": [...]}, ...] in stage order.
inline Json trace_json(const std::vector<TraceEvent>& trace) {
  Json out = Json::array();
  for (std::size_t i = 0; i < trace.size();) {
    Json evs = Json::array();
    std::size_t k = i;
    for (; k < trace.size() && trace[k].stage == trace[i].stage; ++k) evs.push_back(event_json(trace[k], false));
    out.push_back(Json{{"stage", trace[i].stage}, {"events", std::move(evs)}});
    i = k;
  }
  return out;
}

inline std::vector<TraceEvent> trace_from(const Json& j) {
  std::vector<TraceEvent> t;
  for (const auto& st : j) {
    auto s = st.at("stage").get<std::uint64_t>();
    for (const auto& e : st.at("events")) t.push_back(event_from(e, s));
  }
  return t;
}

// ---------------------------------------------------------------------------
// artifacts

inline Json subset_json(const SubsetArtifact& a) {
  Json cps = Json::array();
  for (const auto& c : a.checkpoints) cps.push_back(Json::array({c.s, c.t, c.strong, c.settled}));
  return Json{{"construction", a.construction},
              {"n_max", a.n_max},
              {"stage_max", a.stage_max},
              {"bits", bits_json(a.bits)},
              {"determined_prefix", a.determined_prefix},
              {"checkpoints", std::move(cps)},
              {"n_lo", a.n_lo},
              {"horizon", a.horizon},
              {"s_of_n", values_json(a.s_of_n)},
              {"t_of_k", values_json(a.t_of_k)},
              {"guarantee", a.guarantee},
              {"diagnostics", diagnostics_json(a.diagnostics)},
              {"certificates", certificates_json(a.certificates)}};
}

inline SubsetArtifact subset_from(const Json& j) {
  SubsetArtifact a;
  a.construction = j.at("construction").get<std::string>();
  a.n_max = j.at("n_max").get<std::uint64_t>();
  a.stage_max = j.at("stage_max").get<std::uint64_t>();
  a.bits = bits_from(j.at("bits"));
  a.determined_prefix = j.at("determined_prefix").get<std::uint64_t>();
  for (const auto& c : j.at("checkpoints")) {
    if (!c.is_array() || c.size() != 4) throw ArtifactCorrupt("checkpoint must be [s, t, strong, settled]");
    a.checkpoints.push_back({c[0].get<std::uint64_t>(), c[1].get<std::uint64_t>(), c[2].get<bool>(), c[3].get<bool>()});
  }
  a.n_lo = j.at("n_lo").get<std::uint64_t>();
  a.horizon = j.at("horizon").get<std::uint64_t>();
  a.s_of_n = values_from(j.at("s_of_n"));
  a.t_of_k = values_from(j.at("t_of_k"));
  a.guarantee = j.at("guarantee").get<std::string>();
  a.diagnostics = diagnostics_from(j.at("diagnostics"));
  a.certificates = certificates_from(j.at("certificates"));
  return a;
}

inline Json build_json(const BuildArtifact& a) {
  Json targets = Json::array();
  for (const auto& t : a.targets) targets.push_back(rational_json(t));
  Json series = Json::object();
  for (const auto& [k, v] : a.series) series[k] = values_json(v);
  Json outcomes = Json::array();
  for (const auto& o : a.outcomes)
    outcomes.push_back(Json{{"requirement", o.requirement}, {"outcome", o.outcome}, {"witness", o.witness}, {"detail", o.detail}});
  return Json{{"construction", a.construction},
              {"n_max", a.n_max},
              {"stage_max", a.stage_max},
              {"entry", values_json(a.entry)},
              {"marks", a.marks},
              {"targets", std::move(targets)},
              {"series", std::move(series)},
              {"outcomes", std::move(outcomes)},
              {"diagnostics", diagnostics_json(a.diagnostics)},
              {"certificates", certificates_json(a.certificates)},
              {"trace", trace_json(a.trace)}};
}

inline BuildArtifact build_from(const Json& j) {
  BuildArtifact a;
  a.construction = j.at("construction").get<std::string>();
  a.n_max = j.at("n_max").get<std::uint64_t>();
  a.stage_max = j.at("stage_max").get<std::uint64_t>();
  a.entry = values_from(j.at("entry"));
  if (a.entry.size() != a.n_max) throw ArtifactCorrupt("entry table length differs from n_max");
  a.marks = j.at("marks").get<std::vector<std::uint64_t>>();
  for (const auto& t : j.at("targets")) a.targets.push_back(rational_from(t));
  for (const auto& [k, v] : j.at("series").items()) a.series[k] = values_from(v);
  for (const auto& o : j.at("outcomes"))
    a.outcomes.push_back({o.at("requirement").get<std::string>(), o.at("outcome").get<std::string>(),
                          o.at("witness").get<std::uint64_t>(), o.at("detail").get<std::string>()});
  a.diagnostics = diagnostics_from(j.at("diagnostics"));
  a.certificates = certificates_from(j.at("certificates"));
  a.trace = trace_from(j.at("trace"));
  return a;
}

/// The whole document: {"format_version", "artifact_kind", "config", "artifact"}.
inline Json document(const std::string& kind, Json artifact, const Json& config) {
  return Json{{"format_version", kFormatVersion}, {"artifact_kind", kind}, {"config", config}, {"artifact", std::move(artifact)}};
}

inline Json parse_document(const std::string& text) {
  Json doc;
  try {
    doc = Json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw ArtifactCorrupt(std::string("artifact does not parse: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("format_version") || !doc["format_version"].is_number_unsigned())
    throw ArtifactCorrupt("artifact lacks a format_version header");
  if (doc["format_version"].get<std::uint64_t>() != kFormatVersion)
    throw ArtifactCorrupt("unsupported format_version " + doc["format_version"].dump());
  for (const char* key : {"artifact_kind", "config", "artifact"})
    if (!doc.contains(key)) throw ArtifactCorrupt(std::string("artifact lacks '") + key + "'");
  return doc;
}

// ---------------------------------------------------------------------------
// flat outputs

/// One JSON object per stage carrying events, in stage order.
inline void write_trace_jsonl(std::ostream& os, const std::vector<TraceEvent>& trace) {
  for (const auto& st : trace_json(trace)) os << st.dump() << '\n';
}

/// Columns family,index,at,lhs,rel,rhs,holds; rationals in lowest terms.
inline void write_certificates_csv(std::ostream& os, const std::vector<Certificate>& cs) {
  os << "family,index,at,lhs,rel,rhs,holds\n";
  for (const auto& c : cs)
    os << c.family << ',' << c.index << ',' << c.at << ',' << to_string(c.lhs) << ',' << to_string(c.rel) << ','
       << to_string(c.rhs) << ',' << (c.holds ? 1 : 0) << '\n';
}

}  // namespace density::io

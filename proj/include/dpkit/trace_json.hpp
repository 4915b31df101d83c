#pragma once

#include <cmath>
#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/trace.hpp"
#include "json.hpp"

// Canonical JSON form of a Trace.
//
// Keys are emitted in a fixed order, integral numbers without a fractional
// part, and '<', '>' and '&' as \u escapes so a document can be embedded in
// an HTML <script> block unchanged. Equal traces give identical bytes.

namespace dpkit {

using ojson = nlohmann::ordered_json;

inline constexpr int trace_schema_version = 1;

namespace json_detail {

inline ojson number(double v) {
  constexpr double exact_int_limit = 9007199254740992.0;  // 2^53
  if (std::floor(v) == v && std::fabs(v) <= exact_int_limit) return static_cast<std::int64_t>(v);
  return v;
}

inline ojson index(const CellIndex& idx) {
  ojson out = ojson::array();
  for (std::size_t a = 0; a < idx.dims; ++a) out.push_back(idx.coords[a]);
  return out;
}

inline ojson index_list(const std::vector<CellIndex>& v) {
  ojson out = ojson::array();
  for (const auto& idx : v) out.push_back(index(idx));
  return out;
}

inline std::string escape_html_sensitive(const std::string& text) {
  std::string out;
  out.reserve(text.size());
  for (char c : text) {
    switch (c) {
      case '<': out += "\\u003c"; break;
      case '>': out += "\\u003e"; break;
      case '&': out += "\\u0026"; break;
      default: out += c;
    }
  }
  return out;
}

[[noreturn]] inline void fail(const std::string& path, const std::string& what) {
  throw ParseError(path + ": " + what);
}

inline const ojson& field(const ojson& obj, const char* key, const std::string& path) {
  auto it = obj.find(key);
  if (it == obj.end()) fail(path.empty() ? key : path + "." + key, "missing");
  return *it;
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }
inline std::string at(const std::string& path, std::size_t i) { return path + "[" + std::to_string(i) + "]"; }

inline std::int64_t as_int(const ojson& v, const std::string& path) {
  if (!v.is_number_integer()) fail(path, "expected integer");
  return v.get<std::int64_t>();
}

inline double as_number(const ojson& v, const std::string& path) {
  if (!v.is_number()) fail(path, "expected number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) fail(path, "non-finite number");
  return d;
}

inline const std::string& as_string(const ojson& v, const std::string& path) {
  if (!v.is_string()) fail(path, "expected string");
  return v.get_ref<const std::string&>();
}

inline const ojson& as_array(const ojson& v, const std::string& path) {
  if (!v.is_array()) fail(path, "expected array");
  return v;
}

inline CellIndex parse_index(const ojson& v, const Shape& shape, const std::string& path) {
  as_array(v, path);
  if (v.size() != shape.dims()) {
    fail(path, "index has " + std::to_string(v.size()) + " coordinates, shape has " + std::to_string(shape.dims()));
  }
  std::array<std::size_t, 2> c{0, 0};
  for (std::size_t a = 0; a < v.size(); ++a) {
    const auto x = as_int(v[a], at(path, a));
    if (x < 0) fail(at(path, a), "negative coordinate");
    c[a] = static_cast<std::size_t>(x);
  }
  const CellIndex idx = shape.dims() == 1 ? CellIndex(c[0]) : CellIndex(c[0], c[1]);
  if (!shape.contains(idx)) fail(path, "index " + to_string(idx) + " out of bounds");
  return idx;
}

inline std::vector<CellIndex> parse_index_list(const ojson& v, const Shape& shape, const std::string& path) {
  as_array(v, path);
  std::vector<CellIndex> out;
  for (std::size_t i = 0; i < v.size(); ++i) out.push_back(parse_index(v[i], shape, at(path, i)));
  return out;
}

inline std::optional<std::vector<std::string>> parse_labels(const ojson& labels, const char* key,
                                                            const std::string& path) {
  auto it = labels.find(key);
  if (it == labels.end()) return std::nullopt;
  const std::string p = join(path, key);
  as_array(*it, p);
  std::vector<std::string> out;
  for (std::size_t i = 0; i < it->size(); ++i) out.push_back(as_string((*it)[i], at(p, i)));
  return out;
}

}  // namespace json_detail

inline ojson trace_to_json(const Trace& trace) {
  using namespace json_detail;
  ojson doc;
  doc["schema"] = trace_schema_version;
  doc["name"] = trace.name;
  ojson shape = ojson::array();
  for (std::size_t a = 0; a < trace.shape.dims(); ++a) shape.push_back(trace.shape.extent(a));
  doc["shape"] = shape;
  doc["colors"] = ojson{{"READ", trace.colors.read}, {"WRITE", trace.colors.write}, {"MAXMIN", trace.colors.maxmin}};
  ojson labels = ojson::object();
  if (trace.labels.rows) labels["rows"] = *trace.labels.rows;
  if (trace.labels.cols) labels["cols"] = *trace.labels.cols;
  doc["labels"] = labels;

  ojson frames = ojson::array();
  for (const auto& f : trace.frames) {
    ojson jf;
    jf["t"] = f.t;
    ojson ops = ojson::array();
    for (const auto& op : f.ops) {
      ojson jo;
      jo["seq"] = op.seq;
      jo["kind"] = std::string(to_string(op.kind));
      jo["index"] = index(op.index);
      if (op.value) jo["value"] = number(*op.value);
      ops.push_back(std::move(jo));
    }
    jf["ops"] = std::move(ops);
    jf["written"] = index_list(f.highlights.written);
    jf["read"] = index_list(f.highlights.read);
    jf["maxmin"] = index_list(f.highlights.maxmin);
    ojson deltas = ojson::array();
    for (const auto& [idx, v] : f.deltas) deltas.push_back(ojson::array({index(idx), number(v)}));
    jf["deltas"] = std::move(deltas);
    if (f.annotation) jf["annotation"] = *f.annotation;
    jf["terminal"] = f.terminal;
    frames.push_back(std::move(jf));
  }
  doc["frames"] = std::move(frames);
  if (trace.traceback) doc["traceback"] = index_list(*trace.traceback);
  return doc;
}

inline std::string serialize_trace(const Trace& trace) {
  return json_detail::escape_html_sensitive(
      trace_to_json(trace).dump(-1, ' ', false, nlohmann::detail::error_handler_t::replace));
}

/// Parses and fully validates a trace document. Highlight sets and deltas must
/// agree with the frame's ops, ops must form one coherent log, and the
/// traceback must reference written cells. Errors name the first bad field.
inline Trace trace_from_json(const ojson& doc) {
  using namespace json_detail;
  if (!doc.is_object()) fail("document", "expected object");

  const auto& schema = field(doc, "schema", "");
  if (!schema.is_number_integer() || schema.get<std::int64_t>() != trace_schema_version) {
    fail("schema", "unsupported schema version " + schema.dump());
  }

  Trace trace;
  trace.name = as_string(field(doc, "name", ""), "name");

  const auto& shape = as_array(field(doc, "shape", ""), "shape");
  std::vector<long long> extents;
  for (std::size_t a = 0; a < shape.size(); ++a) extents.push_back(as_int(shape[a], at("shape", a)));
  try {
    trace.shape = Shape::from_extents(extents);
  } catch (const ArgumentError& e) {
    fail("shape", e.what());
  }

  const auto& colors = field(doc, "colors", "");
  if (!colors.is_object()) fail("colors", "expected object");
  for (auto [key, slot] : {std::pair{"READ", &trace.colors.read}, std::pair{"WRITE", &trace.colors.write},
                           std::pair{"MAXMIN", &trace.colors.maxmin}}) {
    const std::string p = join("colors", key);
    const auto& c = as_string(field(colors, key, "colors"), p);
    if (!is_hex_color(c)) fail(p, "not a 6-digit hex color");
    *slot = c;
  }

  if (auto it = doc.find("labels"); it != doc.end()) {
    if (!it->is_object()) fail("labels", "expected object");
    trace.labels.rows = parse_labels(*it, "rows", "labels");
    trace.labels.cols = parse_labels(*it, "cols", "labels");
    try {
      check_labels(trace.shape, trace.labels);
    } catch (const ArgumentError& e) {
      fail("labels", e.what());
    }
  }

  const auto& frames = as_array(field(doc, "frames", ""), "frames");
  Snapshot state(trace.shape.size());
  std::uint64_t next_seq = 0;
  for (std::size_t k = 0; k < frames.size(); ++k) {
    const std::string fp = at("frames", k);
    const auto& jf = frames[k];
    if (!jf.is_object()) fail(fp, "expected object");

    if (as_int(field(jf, "t", fp), join(fp, "t")) != static_cast<std::int64_t>(k + 1)) {
      fail(join(fp, "t"), "expected " + std::to_string(k + 1));
    }

    const std::string opsp = join(fp, "ops");
    const auto& ops = as_array(field(jf, "ops", fp), opsp);
    if (ops.empty()) fail(opsp, "frame has no operations");
    std::vector<OpRecord> records;
    for (std::size_t j = 0; j < ops.size(); ++j) {
      const std::string op_path = at(opsp, j);
      const auto& jo = ops[j];
      if (!jo.is_object()) fail(op_path, "expected object");
      OpRecord rec;
      const auto seq = as_int(field(jo, "seq", op_path), join(op_path, "seq"));
      if (seq < 0 || static_cast<std::uint64_t>(seq) != next_seq) {
        fail(join(op_path, "seq"), "expected " + std::to_string(next_seq));
      }
      rec.seq = next_seq++;
      const auto kind = parse_op_kind(as_string(field(jo, "kind", op_path), join(op_path, "kind")));
      if (!kind) fail(join(op_path, "kind"), "unknown operation kind");
      rec.kind = *kind;
      rec.index = parse_index(field(jo, "index", op_path), trace.shape, join(op_path, "index"));
      auto& cell = state[trace.shape.flat(rec.index)];
      const auto vit = jo.find("value");
      const std::string vp = join(op_path, "value");
      if (rec.kind == OpKind::maxmin) {
        if (vit != jo.end()) fail(vp, "MAXMIN records carry no value");
        if (!cell) fail(join(op_path, "index"), "MAXMIN on unset cell");
      } else {
        if (vit == jo.end()) fail(vp, "missing");
        rec.value = as_number(*vit, vp);
        if (rec.kind == OpKind::read) {
          if (!cell) fail(join(op_path, "index"), "READ of unset cell");
          if (*cell != *rec.value) fail(vp, "READ value disagrees with the current cell");
        } else {
          cell = rec.value;
        }
      }
      records.push_back(rec);
    }

    const std::string tp = join(fp, "terminal");
    const auto& terminal = field(jf, "terminal", fp);
    if (!terminal.is_boolean()) fail(tp, "expected boolean");
    const bool is_terminal = terminal.get<bool>();
    const auto writes = std::count_if(records.begin(), records.end(),
                                      [](const OpRecord& r) { return r.kind == OpKind::write; });
    if (is_terminal) {
      if (writes != 0) fail(tp, "terminal frame contains a WRITE");
      if (k + 1 != frames.size()) fail(tp, "terminal frame must be last");
    } else if (writes != 1 || records.back().kind != OpKind::write) {
      fail(tp, "non-terminal frame must end in its only WRITE");
    }

    Frame f = detail::make_frame(k + 1, records, is_terminal);
    if (parse_index_list(field(jf, "written", fp), trace.shape, join(fp, "written")) != f.highlights.written) {
      fail(join(fp, "written"), "does not match the frame's WRITE operations");
    }
    if (parse_index_list(field(jf, "read", fp), trace.shape, join(fp, "read")) != f.highlights.read) {
      fail(join(fp, "read"), "does not match the frame's READ operations");
    }
    if (parse_index_list(field(jf, "maxmin", fp), trace.shape, join(fp, "maxmin")) != f.highlights.maxmin) {
      fail(join(fp, "maxmin"), "does not match the frame's MAXMIN operations");
    }
    const std::string dp = join(fp, "deltas");
    const auto& deltas = as_array(field(jf, "deltas", fp), dp);
    if (deltas.size() != f.deltas.size()) fail(dp, "does not match the frame's WRITE operations");
    for (std::size_t d = 0; d < deltas.size(); ++d) {
      const std::string p = at(dp, d);
      if (!deltas[d].is_array() || deltas[d].size() != 2) fail(p, "expected [index, value]");
      const Delta parsed{parse_index(deltas[d][0], trace.shape, p + "[0]"), as_number(deltas[d][1], p + "[1]")};
      if (parsed != f.deltas[d]) fail(p, "does not match the frame's WRITE operations");
    }
    if (auto it = jf.find("annotation"); it != jf.end()) f.annotation = as_string(*it, join(fp, "annotation"));
    trace.frames.push_back(std::move(f));
  }

  if (auto it = doc.find("traceback"); it != doc.end()) {
    auto path = parse_index_list(*it, trace.shape, "traceback");
    for (std::size_t i = 0; i < path.size(); ++i) {
      if (!state[trace.shape.flat(path[i])]) fail(at("traceback", i), "cell is never written");
    }
    trace.traceback = std::move(path);
  }
  return trace;
}

inline Trace deserialize_trace(std::string_view bytes) {
  ojson doc;
  try {
    doc = ojson::parse(bytes);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(std::string("document: ") + e.what());
  }
  return trace_from_json(doc);
}

}  // namespace dpkit

#pragma once

#include <algorithm>
#include <cctype>
#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "dpkit/core_array.hpp"
#include "dpkit/errors.hpp"

namespace dpkit {

// Sorted, duplicate-free cell sets highlighted in one frame.
struct HighlightSet {
  std::vector<CellIndex> written;
  std::vector<CellIndex> read;
  std::vector<CellIndex> maxmin;

  friend bool operator==(const HighlightSet&, const HighlightSet&) = default;
};

struct ColorMap {
  std::string read = "B7609A";
  std::string write = "5C53A5";
  std::string maxmin = "EB7F86";

  const std::string& of(OpKind kind) const {
    switch (kind) {
      case OpKind::read: return read;
      case OpKind::write: return write;
      case OpKind::maxmin: return maxmin;
    }
    return read;
  }

  friend bool operator==(const ColorMap&, const ColorMap&) = default;
};

inline bool is_hex_color(std::string_view s) {
  return s.size() == 6 && std::all_of(s.begin(), s.end(), [](char c) {
           return std::isxdigit(static_cast<unsigned char>(c)) != 0;
         });
}

using Delta = std::pair<CellIndex, double>;

// One animation step: a run of operations closed by a single WRITE, or the
// trailing run of non-WRITE operations (terminal frame).
struct Frame {
  std::size_t t = 0;  // 1-based
  std::vector<OpRecord> ops;
  HighlightSet highlights;
  std::vector<Delta> deltas;
  bool terminal = false;
  std::optional<std::string> annotation;

  friend bool operator==(const Frame&, const Frame&) = default;
};

struct Labels {
  std::optional<std::vector<std::string>> rows;
  std::optional<std::vector<std::string>> cols;

  friend bool operator==(const Labels&, const Labels&) = default;
};

struct Trace {
  std::string name;
  Shape shape{1};
  Labels labels;
  std::vector<Frame> frames;
  // Present-but-empty differs from absent.
  std::optional<std::vector<CellIndex>> traceback;
  ColorMap colors;

  friend bool operator==(const Trace&, const Trace&) = default;
};

struct TraceOptions {
  Labels labels;
  std::map<std::size_t, std::string> annotations;  // keyed by frame number t
  std::optional<ColorMap> colors;
};

namespace detail {

inline void sort_unique(std::vector<CellIndex>& v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
}

inline Frame make_frame(std::size_t t, std::span<const OpRecord> ops, bool terminal) {
  Frame f;
  f.t = t;
  f.ops.assign(ops.begin(), ops.end());
  f.terminal = terminal;
  for (const auto& op : ops) {
    switch (op.kind) {
      case OpKind::read:
        f.highlights.read.push_back(op.index);
        break;
      case OpKind::write:
        f.highlights.written.push_back(op.index);
        f.deltas.emplace_back(op.index, op.value.value_or(0.0));
        break;
      case OpKind::maxmin:
        f.highlights.maxmin.push_back(op.index);
        break;
    }
  }
  sort_unique(f.highlights.written);
  sort_unique(f.highlights.read);
  sort_unique(f.highlights.maxmin);
  return f;
}

}  // namespace detail

/// Splits a log into frames. Every WRITE closes a frame; operations after the
/// last WRITE become one terminal frame so that no operation is dropped.
inline std::vector<Frame> segment(std::span<const OpRecord> log) {
  std::vector<Frame> frames;
  std::size_t begin = 0;
  for (std::size_t i = 0; i < log.size(); ++i) {
    if (log[i].kind == OpKind::write) {
      frames.push_back(detail::make_frame(frames.size() + 1, log.subspan(begin, i + 1 - begin), false));
      begin = i + 1;
    }
  }
  if (begin < log.size()) {
    frames.push_back(detail::make_frame(frames.size() + 1, log.subspan(begin), true));
  }
  return frames;
}

inline void check_labels(const Shape& shape, const Labels& labels) {
  if (shape.dims() == 1) {
    if (labels.rows) throw ArgumentError("1D arrays take column labels only");
    if (labels.cols && labels.cols->size() != shape.extent(0)) {
      throw ArgumentError("expected " + std::to_string(shape.extent(0)) + " column labels, got " +
                          std::to_string(labels.cols->size()));
    }
    return;
  }
  if (labels.rows && labels.rows->size() != shape.extent(0)) {
    throw ArgumentError("expected " + std::to_string(shape.extent(0)) + " row labels, got " +
                        std::to_string(labels.rows->size()));
  }
  if (labels.cols && labels.cols->size() != shape.extent(1)) {
    throw ArgumentError("expected " + std::to_string(shape.extent(1)) + " column labels, got " +
                        std::to_string(labels.cols->size()));
  }
}

inline Trace build_trace(std::string name, const Shape& shape, std::span<const OpRecord> log,
                         const TraceOptions& options = {}) {
  check_labels(shape, options.labels);
  Trace trace;
  trace.name = std::move(name);
  trace.shape = shape;
  trace.labels = options.labels;
  trace.frames = segment(log);
  for (const auto& [t, text] : options.annotations) {
    if (t < 1 || t > trace.frames.size()) {
      throw ArgumentError("annotation for frame " + std::to_string(t) + " but trace has " +
                          std::to_string(trace.frames.size()) + " frames");
    }
    trace.frames[t - 1].annotation = text;
  }
  if (options.colors) {
    for (OpKind kind : {OpKind::read, OpKind::write, OpKind::maxmin}) {
      if (!is_hex_color(options.colors->of(kind))) {
        throw ArgumentError("color for " + std::string(to_string(kind)) + " is not a 6-digit hex string");
      }
    }
    trace.colors = *options.colors;
  }
  return trace;
}

template <class T, std::size_t Rank>
Trace build_trace(const DPArray<T, Rank>& arr, const TraceOptions& options = {}) {
  return build_trace(arr.name(), arr.shape(), arr.log(), options);
}

// Trace of a finished recording with default presentation.
template <class T, std::size_t Rank>
Trace display(const DPArray<T, Rank>& arr) {
  return build_trace(arr);
}

/// Array state after applying the WRITE deltas of frames 1..t.
inline Snapshot frame_snapshot(const Trace& trace, std::size_t t) {
  if (t < 1 || t > trace.frames.size()) {
    throw RangeError("frame " + std::to_string(t) + " outside [1, " + std::to_string(trace.frames.size()) + "]");
  }
  Snapshot snap(trace.shape.size());
  for (std::size_t k = 0; k < t; ++k) {
    for (const auto& [idx, v] : trace.frames[k].deltas) snap[trace.shape.flat(idx)] = v;
  }
  return snap;
}

// State after every frame; all unset for a trace without frames.
inline Snapshot final_snapshot(const Trace& trace) {
  if (trace.frames.empty()) return Snapshot(trace.shape.size());
  return frame_snapshot(trace, trace.frames.size());
}

/// Attaches the cells chosen during traceback. Each must be in bounds and set
/// once all frames have been applied.
inline Trace add_traceback_path(Trace trace, std::vector<CellIndex> path) {
  const Snapshot last = final_snapshot(trace);
  for (const auto& idx : path) {
    if (!trace.shape.contains(idx)) {
      throw ArgumentError("traceback index " + to_string(idx) + " out of bounds for shape " +
                          to_string(trace.shape));
    }
    if (!last[trace.shape.flat(idx)]) {
      throw ArgumentError("traceback index " + to_string(idx) + " is never written");
    }
  }
  trace.traceback = std::move(path);
  return trace;
}

inline std::size_t write_count(const Trace& trace) {
  std::size_t n = 0;
  for (const auto& f : trace.frames) n += f.terminal ? 0 : 1;
  return n;
}

}  // namespace dpkit

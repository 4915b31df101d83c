#pragma once

#include <array>
#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <string_view>
#include <type_traits>
#include <utility>
#include <vector>

#include "dpkit/errors.hpp"

namespace dpkit {

// Coordinates of one cell. 1D indices leave the second coordinate at zero so
// that ordering and equality stay well defined; 2D indices are row-major.
struct CellIndex {
  std::uint8_t dims = 1;
  std::array<std::size_t, 2> coords{0, 0};

  constexpr CellIndex() = default;
  constexpr CellIndex(std::size_t i) : dims(1), coords{i, 0} {}  // NOLINT: implicit on purpose
  constexpr CellIndex(std::size_t row, std::size_t col) : dims(2), coords{row, col} {}

  constexpr std::size_t operator[](std::size_t axis) const { return coords[axis]; }

  friend constexpr auto operator<=>(const CellIndex&, const CellIndex&) = default;
  friend constexpr bool operator==(const CellIndex&, const CellIndex&) = default;
};

inline std::string to_string(const CellIndex& idx) {
  std::ostringstream os;
  os << '(' << idx.coords[0];
  if (idx.dims == 2) os << ',' << idx.coords[1];
  os << ')';
  return os.str();
}

class Shape {
 public:
  explicit Shape(std::size_t n) : dims_(1), extents_{n, 1} { validate(); }
  Shape(std::size_t rows, std::size_t cols) : dims_(2), extents_{rows, cols} { validate(); }

  // Builds a shape from a runtime extent list; rejects anything but 1 or 2 positive extents.
  static Shape from_extents(std::span<const long long> extents) {
    if (extents.size() != 1 && extents.size() != 2) {
      throw ArgumentError("shape must have 1 or 2 dimensions, got " + std::to_string(extents.size()));
    }
    for (long long e : extents) {
      if (e <= 0) throw ArgumentError("shape extent must be positive, got " + std::to_string(e));
    }
    if (extents.size() == 1) return Shape(static_cast<std::size_t>(extents[0]));
    return Shape(static_cast<std::size_t>(extents[0]), static_cast<std::size_t>(extents[1]));
  }

  std::size_t dims() const { return dims_; }
  std::size_t extent(std::size_t axis) const { return extents_[axis]; }
  std::size_t size() const { return extents_[0] * extents_[1]; }

  bool contains(const CellIndex& idx) const {
    if (idx.dims != dims_) return false;
    if (idx.coords[0] >= extents_[0]) return false;
    return dims_ == 1 ? idx.coords[1] == 0 : idx.coords[1] < extents_[1];
  }

  std::size_t flat(const CellIndex& idx) const { return idx.coords[0] * extents_[1] + idx.coords[1]; }

  CellIndex unflat(std::size_t offset) const {
    if (dims_ == 1) return CellIndex(offset);
    return CellIndex(offset / extents_[1], offset % extents_[1]);
  }

  friend bool operator==(const Shape&, const Shape&) = default;

 private:
  void validate() const {
    if (extents_[0] == 0 || extents_[1] == 0) throw ArgumentError("shape extent must be positive");
  }

  std::size_t dims_;
  std::array<std::size_t, 2> extents_;
};

inline std::string to_string(const Shape& shape) {
  std::string out = "[" + std::to_string(shape.extent(0));
  if (shape.dims() == 2) out += "," + std::to_string(shape.extent(1));
  return out + "]";
}

enum class OpKind : std::uint8_t { read, write, maxmin };

inline std::string_view to_string(OpKind kind) {
  switch (kind) {
    case OpKind::read: return "READ";
    case OpKind::write: return "WRITE";
    case OpKind::maxmin: return "MAXMIN";
  }
  return "?";
}

inline std::optional<OpKind> parse_op_kind(std::string_view text) {
  if (text == "READ") return OpKind::read;
  if (text == "WRITE") return OpKind::write;
  if (text == "MAXMIN") return OpKind::maxmin;
  return std::nullopt;
}

// One logged array operation. `value` is the written value for WRITE, the
// observed value for READ and empty for MAXMIN.
struct OpRecord {
  std::uint64_t seq = 0;
  OpKind kind = OpKind::read;
  CellIndex index;
  std::optional<double> value;

  friend bool operator==(const OpRecord&, const OpRecord&) = default;
};

// Row-major per-cell state; empty optional means the cell was never written.
using Snapshot = std::vector<std::optional<double>>;

// Candidate of a max/min selection: the value at `index` plus `addend`.
template <class T>
struct Term {
  CellIndex index;
  T addend{};
};

enum class WriteMode : std::uint8_t {
  lenient,  // re-writing a set cell is allowed and logged
  strict,   // each cell may be written at most once
};

/// Subproblem array that records every access.
///
/// Bracket access goes through proxy references, so ordinary DP code such as
///
///     dpkit::DPArray<double> opt(n + 1);
///     opt[0] = 0;
///     opt[i] = opt[i - 1] + w;
///
/// logs WRITE(0), READ(i-1), WRITE(i) without explicit logging calls. To mark
/// the argmax/argmin of a selection use max_of / min_of. Reading a cell that
/// was never written throws EvaluationOrderError.
///
/// Recording is single-threaded. The proxy returned by operator[] reads lazily,
/// so `auto x = opt[i];` captures a reference, not a value.
template <class T = double, std::size_t Rank = 1>
  requires std::is_arithmetic_v<T> && (Rank == 1 || Rank == 2)
class DPArray {
 public:
  using value_type = T;
  static constexpr std::size_t rank = Rank;

  class Ref {
   public:
    Ref(DPArray* owner, CellIndex idx) : owner_(owner), idx_(idx) {}
    Ref(const Ref&) = default;

    operator T() const { return owner_->read(idx_); }  // NOLINT: implicit read

    Ref& operator=(T v) {
      owner_->write(idx_, v);
      return *this;
    }
    Ref& operator=(const Ref& other) {
      const T v = other;
      owner_->write(idx_, v);
      return *this;
    }
    Ref& operator+=(T v) {
      const T cur = *this;
      owner_->write(idx_, static_cast<T>(cur + v));
      return *this;
    }
    Ref& operator-=(T v) {
      const T cur = *this;
      owner_->write(idx_, static_cast<T>(cur - v));
      return *this;
    }

    const CellIndex& index() const { return idx_; }

   private:
    DPArray* owner_;
    CellIndex idx_;
  };

  class RowRef {
   public:
    RowRef(DPArray* owner, std::size_t row) : owner_(owner), row_(row) {}
    Ref operator[](std::size_t col) const { return Ref(owner_, CellIndex(row_, col)); }

   private:
    DPArray* owner_;
    std::size_t row_;
  };

  explicit DPArray(std::size_t n, std::string name = "arr", WriteMode mode = WriteMode::lenient)
    requires(Rank == 1)
      : DPArray(Shape(n), std::move(name), mode) {}

  DPArray(std::size_t rows, std::size_t cols, std::string name = "arr",
          WriteMode mode = WriteMode::lenient)
    requires(Rank == 2)
      : DPArray(Shape(rows, cols), std::move(name), mode) {}

  DPArray(Shape shape, std::string name, WriteMode mode = WriteMode::lenient)
      : shape_(shape), name_(std::move(name)), mode_(mode), cells_(shape_.size()) {
    if (shape_.dims() != Rank) {
      throw ArgumentError("shape " + to_string(shape_) + " does not match array rank " +
                          std::to_string(Rank));
    }
  }

  Ref operator[](std::size_t i)
    requires(Rank == 1)
  {
    return Ref(this, CellIndex(i));
  }

  RowRef operator[](std::size_t row)
    requires(Rank == 2)
  {
    return RowRef(this, row);
  }

  Ref operator()(const CellIndex& idx) { return Ref(this, idx); }
  Ref operator()(std::size_t row, std::size_t col)
    requires(Rank == 2)
  {
    return Ref(this, CellIndex(row, col));
  }

  T read(const CellIndex& idx) {
    const T v = require_set(idx);
    append(OpKind::read, idx, to_cell_value(v));
    return v;
  }

  void write(const CellIndex& idx, T v) {
    check_bounds(idx);
    const double cv = to_cell_value(v);
    if constexpr (std::is_floating_point_v<T>) {
      if (!std::isfinite(v)) {
        throw ValueError("non-finite value written to " + name_ + to_string(idx));
      }
    }
    auto& cell = cells_[shape_.flat(idx)];
    if (mode_ == WriteMode::strict && cell.has_value()) {
      throw StateError("cell " + name_ + to_string(idx) + " already written (strict write-once mode)");
    }
    cell = v;
    append(OpKind::write, idx, cv);
  }

  /// Returns max over terms of (cell + addend). Logs one READ per term in
  /// order, then a MAXMIN marker at the first term attaining the maximum.
  T max_of(std::span<const Term<T>> terms) { return select(terms, true); }
  T max_of(std::initializer_list<Term<T>> terms) { return select({terms.begin(), terms.size()}, true); }

  /// Mirror of max_of with minimisation.
  T min_of(std::span<const Term<T>> terms) { return select(terms, false); }
  T min_of(std::initializer_list<Term<T>> terms) { return select({terms.begin(), terms.size()}, false); }

  // Current cell states; not logged.
  Snapshot snapshot() const {
    Snapshot out(cells_.size());
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      if (cells_[i]) out[i] = to_cell_value(*cells_[i]);
    }
    return out;
  }

  const std::vector<OpRecord>& log() const { return log_; }
  const Shape& shape() const { return shape_; }
  const std::string& name() const { return name_; }
  WriteMode write_mode() const { return mode_; }

 private:
  static double to_cell_value(T v) { return static_cast<double>(v); }

  void check_bounds(const CellIndex& idx) const {
    if (!shape_.contains(idx)) {
      throw IndexError("index " + to_string(idx) + " out of bounds for " + name_ + " with shape " +
                       to_string(shape_));
    }
  }

  T require_set(const CellIndex& idx) const {
    check_bounds(idx);
    const auto& cell = cells_[shape_.flat(idx)];
    if (!cell) {
      throw EvaluationOrderError("read of unset cell " + name_ + to_string(idx) + " after " +
                                 std::to_string(log_.size()) +
                                 " logged operations; is the recurrence evaluated in order?");
    }
    return *cell;
  }

  T select(std::span<const Term<T>> terms, bool maximize) {
    if (terms.empty()) throw ArgumentError(maximize ? "max_of needs at least one term" : "min_of needs at least one term");
    // Validate everything up front so a failing call leaves the log untouched.
    for (const auto& term : terms) require_set(term.index);

    std::size_t best = 0;
    T best_value{};
    for (std::size_t k = 0; k < terms.size(); ++k) {
      const T candidate = static_cast<T>(read(terms[k].index) + terms[k].addend);
      if (k == 0 || (maximize ? candidate > best_value : candidate < best_value)) {
        best = k;
        best_value = candidate;
      }
    }
    append(OpKind::maxmin, terms[best].index, std::nullopt);
    return best_value;
  }

  void append(OpKind kind, const CellIndex& idx, std::optional<double> value) {
    log_.push_back(OpRecord{log_.size(), kind, idx, value});
  }

  Shape shape_;
  std::string name_;
  WriteMode mode_;
  std::vector<std::optional<T>> cells_;
  std::vector<OpRecord> log_;
};

template <class T = double>
using DPArray2D = DPArray<T, 2>;

}  // namespace dpkit

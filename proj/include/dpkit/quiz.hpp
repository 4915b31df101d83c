#pragma once

#include <algorithm>
#include <cmath>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "dpkit/errors.hpp"
#include "dpkit/trace.hpp"

namespace dpkit {

enum class QuestionKind : std::uint8_t { write_cells, read_cells, cell_value };

inline std::string_view to_string(QuestionKind kind) {
  switch (kind) {
    case QuestionKind::write_cells: return "WRITE_CELLS";
    case QuestionKind::read_cells: return "READ_CELLS";
    case QuestionKind::cell_value: return "CELL_VALUE";
  }
  return "?";
}

inline std::optional<QuestionKind> parse_question_kind(std::string_view text) {
  if (text == "WRITE_CELLS") return QuestionKind::write_cells;
  if (text == "READ_CELLS") return QuestionKind::read_cells;
  if (text == "CELL_VALUE") return QuestionKind::cell_value;
  return std::nullopt;
}

using KindSet = std::set<QuestionKind>;

inline const KindSet& all_question_kinds() {
  static const KindSet all{QuestionKind::write_cells, QuestionKind::read_cells, QuestionKind::cell_value};
  return all;
}

using CellSet = std::vector<CellIndex>;  // sorted, unique

struct Question {
  std::string id;
  QuestionKind kind = QuestionKind::write_cells;
  std::size_t t = 0;
  std::optional<CellIndex> target;  // CELL_VALUE only
  std::variant<CellSet, double> truth;

  friend bool operator==(const Question&, const Question&) = default;
};

struct Answer {
  std::variant<CellSet, double> content;

  static Answer cells(CellSet cells) {
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    return Answer{std::move(cells)};
  }
  static Answer value(double v) { return Answer{v}; }
};

// Grading outcome. Feedback describes the shape of a mistake (missing or extra
// cells, or a value mismatch) and never carries the expected value.
struct Verdict {
  bool correct = false;
  CellSet missing;
  CellSet extra;
  bool value_mismatch = false;

  friend bool operator==(const Verdict&, const Verdict&) = default;
};

inline constexpr double value_relative_tolerance = 1e-9;

namespace quiz_detail {

inline std::string question_id(std::size_t t, QuestionKind kind, const std::optional<CellIndex>& target) {
  std::string id = std::to_string(t) + ":" + std::string(to_string(kind));
  if (target) id += ":" + to_string(*target);
  return id;
}

}  // namespace quiz_detail

/// Questions about frame t, in the fixed order WRITE_CELLS, READ_CELLS, then
/// one CELL_VALUE per written cell, restricted to the enabled kinds.
inline std::vector<Question> questions_for_frame(const Trace& trace, std::size_t t, const KindSet& enabled) {
  if (t < 1 || t > trace.frames.size()) {
    throw RangeError("frame " + std::to_string(t) + " outside [1, " + std::to_string(trace.frames.size()) + "]");
  }
  if (enabled.empty()) throw ArgumentError("at least one question kind must be enabled");
  const Frame& frame = trace.frames[t - 1];
  std::vector<Question> out;
  auto add = [&](QuestionKind kind, std::optional<CellIndex> target, std::variant<CellSet, double> truth) {
    out.push_back(Question{quiz_detail::question_id(t, kind, target), kind, t, target, std::move(truth)});
  };
  if (enabled.contains(QuestionKind::write_cells)) add(QuestionKind::write_cells, std::nullopt, frame.highlights.written);
  if (enabled.contains(QuestionKind::read_cells)) add(QuestionKind::read_cells, std::nullopt, frame.highlights.read);
  if (enabled.contains(QuestionKind::cell_value)) {
    for (const auto& idx : frame.highlights.written) {
      double value = 0;
      for (const auto& [d_idx, d_val] : frame.deltas) {
        if (d_idx == idx) value = d_val;
      }
      add(QuestionKind::cell_value, idx, value);
    }
  }
  return out;
}

inline bool value_matches(double truth, double answer) {
  if (!std::isfinite(answer)) return false;
  if (std::floor(truth) == truth) return answer == truth;
  return std::fabs(answer - truth) <= value_relative_tolerance * std::fabs(truth);
}

inline Verdict check_answer(const Question& q, const Answer& a) {
  Verdict v;
  if (const auto* truth = std::get_if<CellSet>(&q.truth)) {
    const auto* given = std::get_if<CellSet>(&a.content);
    if (!given) throw ArgumentError("question " + q.id + " expects a set of cells");
    CellSet cells = *given;
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    std::set_difference(truth->begin(), truth->end(), cells.begin(), cells.end(), std::back_inserter(v.missing));
    std::set_difference(cells.begin(), cells.end(), truth->begin(), truth->end(), std::back_inserter(v.extra));
    v.correct = v.missing.empty() && v.extra.empty();
    return v;
  }
  const auto* given = std::get_if<double>(&a.content);
  if (!given) throw ArgumentError("question " + q.id + " expects a numeric value");
  v.correct = value_matches(std::get<double>(q.truth), *given);
  v.value_mismatch = !v.correct;
  return v;
}

struct VerdictRecord {
  std::string question_id;
  std::size_t t = 0;
  Verdict verdict;

  friend bool operator==(const VerdictRecord&, const VerdictRecord&) = default;
};

/// Self-test session over one trace. Transitions are pure: submit() returns a
/// new state. t == frame count + 1 means the session is complete.
struct SessionState {
  std::shared_ptr<const Trace> trace;
  std::size_t t = 1;
  KindSet enabled;
  std::vector<Question> pending;
  std::vector<VerdictRecord> history;
  std::size_t mistakes = 0;

  std::size_t frame_count() const { return trace->frames.size(); }
  bool complete() const { return t > frame_count(); }

  const Question* find_pending(std::string_view id) const {
    for (const auto& q : pending) {
      if (q.id == id) return &q;
    }
    return nullptr;
  }
};

namespace quiz_detail {

// Moves forward from the current t until a frame yields questions or the
// session completes; frames with nothing to ask are skipped.
inline void load_questions(SessionState& s) {
  while (!s.complete()) {
    s.pending = questions_for_frame(*s.trace, s.t, s.enabled);
    if (!s.pending.empty()) return;
    ++s.t;
  }
  s.pending.clear();
}

}  // namespace quiz_detail

inline SessionState start_session(std::shared_ptr<const Trace> trace, KindSet enabled, std::size_t start_t = 1) {
  if (!trace) throw ArgumentError("session needs a trace");
  if (enabled.empty()) throw ArgumentError("at least one question kind must be enabled");
  const std::size_t frames = trace->frames.size();
  if (start_t < 1 || (frames > 0 && start_t > frames) || (frames == 0 && start_t != 1)) {
    throw RangeError("start frame " + std::to_string(start_t) + " outside [1, " + std::to_string(frames) + "]");
  }
  SessionState s;
  s.trace = std::move(trace);
  s.t = start_t;
  s.enabled = std::move(enabled);
  quiz_detail::load_questions(s);
  return s;
}

/// Grades one pending question. A wrong answer counts a mistake and leaves the
/// question pending; once nothing is pending the session moves to the next frame.
inline SessionState submit(const SessionState& state, std::string_view question_id, const Answer& answer) {
  if (state.complete()) throw StateError("session is complete");
  const Question* q = state.find_pending(question_id);
  if (!q) throw StateError("question " + std::string(question_id) + " is not pending");
  const Verdict verdict = check_answer(*q, answer);

  SessionState next = state;
  next.history.push_back(VerdictRecord{q->id, q->t, verdict});
  if (!verdict.correct) {
    ++next.mistakes;
    return next;
  }
  std::erase_if(next.pending, [&](const Question& p) { return p.id == question_id; });
  if (next.pending.empty()) {
    ++next.t;
    quiz_detail::load_questions(next);
  }
  return next;
}

inline Answer ground_truth_answer(const Question& q) {
  if (const auto* cells = std::get_if<CellSet>(&q.truth)) return Answer::cells(*cells);
  return Answer::value(std::get<double>(q.truth));
}

}  // namespace dpkit

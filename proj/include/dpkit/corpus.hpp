#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <random>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "dpkit/core_array.hpp"
#include "dpkit/errors.hpp"
#include "dpkit/trace.hpp"
#include "json.hpp"

// Reference dynamic programs recorded through DPArray, each paired with an
// exhaustive oracle that shares no code with the DP.

namespace dpkit::corpus {

// ---------------------------------------------------------------------------
// Weighted interval scheduling

struct Interval {
  double s = 0;
  double f = 0;
  double w = 0;

  friend bool operator==(const Interval&, const Interval&) = default;
};

inline void check_interval(const Interval& iv, std::size_t id) {
  if (!std::isfinite(iv.s) || !std::isfinite(iv.f) || !std::isfinite(iv.w)) {
    throw ArgumentError("interval " + std::to_string(id) + " has a non-finite field");
  }
  if (!(iv.f > iv.s)) throw ArgumentError("interval " + std::to_string(id) + " must finish after it starts");
  if (!(iv.w > 0)) throw ArgumentError("interval " + std::to_string(id) + " must have positive weight");
}

// Two intervals are compatible only if one starts strictly after the other finishes.
inline bool overlaps(const Interval& a, const Interval& b) { return !(a.s > b.f || b.s > a.f); }

/// p_i = max{ j : f_j < s_i } over 1-based positions, 0 when none. Input must
/// be sorted by finish time; each lookup is a binary search.
inline std::vector<std::size_t> predecessors(std::span<const Interval> sorted) {
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i].f < sorted[i - 1].f) throw ArgumentError("intervals are not sorted by finish time");
  }
  std::vector<double> finish(sorted.size());
  std::transform(sorted.begin(), sorted.end(), finish.begin(), [](const Interval& iv) { return iv.f; });
  std::vector<std::size_t> p(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i) {
    p[i] = static_cast<std::size_t>(std::lower_bound(finish.begin(), finish.end(), sorted[i].s) - finish.begin());
  }
  return p;
}

struct WisInstance {
  std::vector<Interval> intervals;         // sorted by (f, s, input position)
  std::vector<std::size_t> original_ids;   // 1-based input position of each sorted interval
  std::vector<std::size_t> p;              // predecessor of each sorted interval

  static WisInstance from_intervals(std::vector<Interval> input) {
    for (std::size_t i = 0; i < input.size(); ++i) check_interval(input[i], i + 1);
    std::vector<std::size_t> order(input.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
      if (input[a].f != input[b].f) return input[a].f < input[b].f;
      return input[a].s < input[b].s;
    });
    WisInstance inst;
    for (std::size_t k : order) {
      inst.intervals.push_back(input[k]);
      inst.original_ids.push_back(k + 1);
    }
    inst.p = predecessors(inst.intervals);
    return inst;
  }

  std::size_t size() const { return intervals.size(); }
};

struct WisSolution {
  double value = 0;
  std::vector<std::size_t> chosen;  // original 1-based ids, ascending
  Trace trace;
};

inline WisSolution solve_wis(const WisInstance& inst) {
  const std::size_t n = inst.size();
  if (inst.p.size() != n || inst.original_ids.size() != n) throw ArgumentError("inconsistent WIS instance");
  for (std::size_t i = 0; i < n; ++i) check_interval(inst.intervals[i], i + 1);

  DPArray<double> opt(n + 1, "OPT");
  TraceOptions options;
  options.annotations[1] = "OPT(0) = 0";
  opt[0] = 0;
  for (std::size_t i = 1; i <= n; ++i) {
    const std::size_t pi = inst.p[i - 1];
    opt[i] = opt.max_of({{i - 1}, {pi, inst.intervals[i - 1].w}});
    options.annotations[i + 1] = "OPT(" + std::to_string(i) + ") = max(OPT(" + std::to_string(i - 1) + "), w" +
                                 std::to_string(i) + " + OPT(" + std::to_string(pi) + "))";
  }

  // Interval i is left out iff OPT(i) == OPT(i-1); otherwise take it and jump to p_i.
  WisSolution sol;
  std::vector<CellIndex> path;
  std::size_t i = n;
  while (i > 0) {
    const double here = opt[i];
    const double before = opt[i - 1];
    if (here == before) {
      --i;
    } else {
      path.emplace_back(i);
      sol.chosen.push_back(inst.original_ids[i - 1]);
      i = inst.p[i - 1];
    }
  }
  std::sort(sol.chosen.begin(), sol.chosen.end());
  sol.value = *opt.snapshot()[n];
  sol.trace = add_traceback_path(build_trace(opt, options), std::move(path));
  return sol;
}

inline constexpr std::size_t brute_force_wis_limit = 20;

/// Exact optimum by enumerating every subset and keeping the non-overlapping ones.
inline double brute_force_wis(std::span<const Interval> intervals) {
  const std::size_t n = intervals.size();
  if (n > brute_force_wis_limit) {
    throw RefusalError("brute-force WIS limited to " + std::to_string(brute_force_wis_limit) + " intervals");
  }
  double best = 0;
  for (std::uint32_t mask = 0; mask < (1u << n); ++mask) {
    double total = 0;
    bool ok = true;
    for (std::size_t a = 0; a < n && ok; ++a) {
      if (!(mask >> a & 1u)) continue;
      total += intervals[a].w;
      for (std::size_t b = a + 1; b < n && ok; ++b) {
        if ((mask >> b & 1u) && overlaps(intervals[a], intervals[b])) ok = false;
      }
    }
    if (ok) best = std::max(best, total);
  }
  return best;
}

inline double brute_force_wis(const WisInstance& inst) { return brute_force_wis(inst.intervals); }

// ---------------------------------------------------------------------------
// Edit distance

struct EditCosts {
  double insert = 10;
  double del = 12;
  double replace = 7;
};

inline void check_costs(const EditCosts& c) {
  for (double v : {c.insert, c.del, c.replace}) {
    if (!std::isfinite(v) || v < 0) throw ArgumentError("edit costs must be finite and non-negative");
  }
}

struct EditSolution {
  double cost = 0;
  Trace trace;
};

/// Rows index the source x, columns the target y. Deleting moves down, inserting
/// moves right, matching/replacing moves diagonally.
inline EditSolution solve_edit_distance(const std::string& x, const std::string& y, const EditCosts& costs = {}) {
  check_costs(costs);
  const std::size_t m = x.size();
  const std::size_t n = y.size();
  DPArray2D<double> opt(m + 1, n + 1, "OPT");
  double last = 0;
  for (std::size_t i = 0; i <= m; ++i) {
    for (std::size_t j = 0; j <= n; ++j) {
      if (i == 0) {
        last = static_cast<double>(j) * costs.insert;
      } else if (j == 0) {
        last = static_cast<double>(i) * costs.del;
      } else {
        const double diag = x[i - 1] == y[j - 1] ? 0.0 : costs.replace;
        last = opt.min_of({{{i - 1, j}, costs.del}, {{i, j - 1}, costs.insert}, {{i - 1, j - 1}, diag}});
      }
      opt[i][j] = last;
    }
  }
  TraceOptions options;
  options.labels.rows = std::vector<std::string>{""};
  options.labels.cols = std::vector<std::string>{""};
  for (char c : x) options.labels.rows->emplace_back(1, c);
  for (char c : y) options.labels.cols->emplace_back(1, c);
  return EditSolution{last, build_trace(opt, options)};
}

inline constexpr std::size_t brute_force_edit_limit = 8;

namespace detail {

inline double edit_recursive(const std::string& x, const std::string& y, std::size_t i, std::size_t j,
                             const EditCosts& c) {
  if (i == 0) return static_cast<double>(j) * c.insert;
  if (j == 0) return static_cast<double>(i) * c.del;
  const double del = edit_recursive(x, y, i - 1, j, c) + c.del;
  const double ins = edit_recursive(x, y, i, j - 1, c) + c.insert;
  const double sub = edit_recursive(x, y, i - 1, j - 1, c) + (x[i - 1] == y[j - 1] ? 0.0 : c.replace);
  return std::min({del, ins, sub});
}

}  // namespace detail

/// Unmemoised recursion over all edit scripts; exponential, so bounded.
inline double brute_force_edit_distance(const std::string& x, const std::string& y, const EditCosts& costs = {}) {
  check_costs(costs);
  if (x.size() > brute_force_edit_limit || y.size() > brute_force_edit_limit) {
    throw RefusalError("brute-force edit distance limited to strings of length " +
                       std::to_string(brute_force_edit_limit));
  }
  return detail::edit_recursive(x, y, x.size(), y.size(), costs);
}

// ---------------------------------------------------------------------------
// Study-time allocation: maximise the mean grade over n classes with at most
// H hours in total.

struct TimeAllocInstance {
  std::size_t hours = 0;
  std::vector<std::vector<double>> grades;  // grades[i][h] for h in [0, hours]
};

inline void check_alloc(const TimeAllocInstance& inst) {
  if (inst.grades.empty()) throw ArgumentError("time allocation needs at least one class");
  for (std::size_t i = 0; i < inst.grades.size(); ++i) {
    if (inst.grades[i].size() != inst.hours + 1) {
      throw ArgumentError("grades for class " + std::to_string(i + 1) + " must have " +
                          std::to_string(inst.hours + 1) + " entries");
    }
    for (double g : inst.grades[i]) {
      if (!std::isfinite(g)) throw ArgumentError("grades must be finite");
    }
  }
}

struct AllocSolution {
  double gpa = 0;
  Trace trace;
};

/// OPT[i][h] is the best grade total over classes 1..i using at most h hours:
/// OPT[0][h] = 0, OPT[i][h] = max over k in [0, h] of OPT[i-1][h-k] + g_i[k].
inline AllocSolution solve_time_allocation(const TimeAllocInstance& inst) {
  check_alloc(inst);
  const std::size_t n = inst.grades.size();
  const std::size_t hours = inst.hours;
  DPArray2D<double> opt(n + 1, hours + 1, "OPT");
  double last = 0;
  std::vector<Term<double>> terms;
  for (std::size_t i = 0; i <= n; ++i) {
    for (std::size_t h = 0; h <= hours; ++h) {
      if (i == 0) {
        last = 0;
      } else {
        terms.clear();
        for (std::size_t k = 0; k <= h; ++k) terms.push_back({{i - 1, h - k}, inst.grades[i - 1][k]});
        last = opt.max_of(terms);
      }
      opt[i][h] = last;
    }
  }
  TraceOptions options;
  options.labels.rows = std::vector<std::string>{"none"};
  for (std::size_t i = 1; i <= n; ++i) options.labels.rows->push_back("class " + std::to_string(i));
  options.labels.cols = std::vector<std::string>{};
  for (std::size_t h = 0; h <= hours; ++h) options.labels.cols->push_back(std::to_string(h) + "h");
  return AllocSolution{last / static_cast<double>(n), build_trace(opt, options)};
}

inline constexpr std::size_t brute_force_alloc_limit = 1'000'000;

/// Enumerates every hour vector with sum <= H. Grades are summed in class
/// order so the result is bit-identical to the DP.
inline double brute_force_time_allocation(const TimeAllocInstance& inst) {
  check_alloc(inst);
  const std::size_t n = inst.grades.size();
  const std::size_t base = inst.hours + 1;
  std::size_t space = 1;
  for (std::size_t i = 0; i < n; ++i) {
    if (space > brute_force_alloc_limit / base) throw RefusalError("allocation search space exceeds 10^6");
    space *= base;
  }
  std::vector<std::size_t> h(n, 0);
  double best = 0;
  bool any = false;
  for (std::size_t code = 0; code < space; ++code) {
    std::size_t rest = code;
    std::size_t used = 0;
    for (std::size_t i = 0; i < n; ++i) {
      h[i] = rest % base;
      rest /= base;
      used += h[i];
    }
    if (used > inst.hours) continue;
    double total = 0;
    for (std::size_t i = 0; i < n; ++i) total += inst.grades[i][h[i]];
    if (!any || total > best) best = total;
    any = true;
  }
  return best / static_cast<double>(n);
}

// ---------------------------------------------------------------------------
// Random instances

template <class Rng>
std::vector<Interval> random_intervals(std::size_t n, Rng& rng, int horizon = 20, int max_len = 8, int max_w = 10) {
  std::uniform_int_distribution<int> start(0, horizon);
  std::uniform_int_distribution<int> len(1, max_len);
  std::uniform_int_distribution<int> weight(1, max_w);
  std::vector<Interval> out;
  for (std::size_t i = 0; i < n; ++i) {
    const int s = start(rng);
    const int l = len(rng);
    const int w = weight(rng);
    out.push_back({static_cast<double>(s), static_cast<double>(s + l), static_cast<double>(w)});
  }
  return out;
}

template <class Rng>
std::string random_string(std::size_t len, Rng& rng, std::string_view alphabet = "abc") {
  std::uniform_int_distribution<std::size_t> pick(0, alphabet.size() - 1);
  std::string s;
  for (std::size_t i = 0; i < len; ++i) s += alphabet[pick(rng)];
  return s;
}

template <class Rng>
TimeAllocInstance random_alloc(std::size_t n, std::size_t hours, Rng& rng) {
  std::uniform_int_distribution<int> grade(0, 40);
  TimeAllocInstance inst;
  inst.hours = hours;
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<double> g;
    for (std::size_t h = 0; h <= hours; ++h) g.push_back(grade(rng) / 10.0);
    inst.grades.push_back(std::move(g));
  }
  return inst;
}

// ---------------------------------------------------------------------------
// Instance files: {"problem": "wis" | "edit_distance" | "time_allocation", ...}

struct EditInstance {
  std::string x;
  std::string y;
  EditCosts costs;
};

using Instance = std::variant<std::vector<Interval>, EditInstance, TimeAllocInstance>;

inline Instance parse_instance(const nlohmann::json& doc) {
  auto fail = [](const std::string& what) -> ParseError { return ParseError("instance: " + what); };
  try {
    if (!doc.is_object()) throw fail("expected object");
    const auto problem = doc.at("problem").get<std::string>();
    if (problem == "wis") {
      std::vector<Interval> out;
      for (const auto& iv : doc.at("intervals")) {
        out.push_back({iv.at("s").get<double>(), iv.at("f").get<double>(), iv.at("w").get<double>()});
      }
      return out;
    }
    if (problem == "edit_distance") {
      EditInstance e{doc.at("x").get<std::string>(), doc.at("y").get<std::string>(), {}};
      if (auto it = doc.find("costs"); it != doc.end()) {
        e.costs.insert = it->value("insert", e.costs.insert);
        e.costs.del = it->value("delete", e.costs.del);
        e.costs.replace = it->value("replace", e.costs.replace);
      }
      return e;
    }
    if (problem == "time_allocation") {
      const auto hours = doc.at("H").get<long long>();
      if (hours < 0) throw fail("H must be non-negative");
      TimeAllocInstance t;
      t.hours = static_cast<std::size_t>(hours);
      t.grades = doc.at("g").get<std::vector<std::vector<double>>>();
      return t;
    }
    throw fail("unknown problem '" + problem + "'");
  } catch (const nlohmann::json::exception& e) {
    throw fail(e.what());
  }
}

inline nlohmann::json instance_to_json(const Instance& inst) {
  nlohmann::json doc;
  if (const auto* wis = std::get_if<std::vector<Interval>>(&inst)) {
    doc["problem"] = "wis";
    doc["intervals"] = nlohmann::json::array();
    for (const auto& iv : *wis) doc["intervals"].push_back({{"s", iv.s}, {"f", iv.f}, {"w", iv.w}});
  } else if (const auto* e = std::get_if<EditInstance>(&inst)) {
    doc["problem"] = "edit_distance";
    doc["x"] = e->x;
    doc["y"] = e->y;
    doc["costs"] = {{"insert", e->costs.insert}, {"delete", e->costs.del}, {"replace", e->costs.replace}};
  } else {
    const auto& t = std::get<TimeAllocInstance>(inst);
    doc["problem"] = "time_allocation";
    doc["H"] = t.hours;
    doc["g"] = t.grades;
  }
  return doc;
}

}  // namespace dpkit::corpus

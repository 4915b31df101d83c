// Acceptance suite: one PASS/FAIL line per criterion, non-zero exit on any failure.

#include <chrono>
#include <fstream>
#include <functional>
#include <iostream>
#include <memory>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "dpkit/dpkit.hpp"
#include "test_support.hpp"

namespace {

using nlohmann::json;
using namespace dpkit;
using Clock = std::chrono::steady_clock;

// ---- two-line fixture pair --------------------------------------------------

double wis_reference(const std::vector<corpus::Interval>& intervals, const std::vector<std::size_t>& p) {
#include "fixtures/wis_reference.inc"
}

double wis_recorded(const std::vector<corpus::Interval>& intervals, const std::vector<std::size_t>& p,
                    Trace& trace_out) {
#include "fixtures/wis_recorded.inc"
}

// ---- harness ----------------------------------------------------------------

struct Criterion {
  std::string name;
  double limit_ms;  // 0 = untimed
  std::function<void(std::vector<std::string>&)> body;
};

#define REQUIRE(cond, msg)                        \
  do {                                            \
    if (!(cond)) {                                \
      failures.push_back(msg);                    \
      return;                                     \
    }                                             \
  } while (0)

#define EXPECT(cond, msg)                         \
  do {                                            \
    if (!(cond)) failures.push_back(msg);         \
  } while (0)

std::vector<std::string> read_lines(const std::string& path) {
  std::ifstream in(path);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

std::size_t lcs_length(const std::vector<std::string>& a, const std::vector<std::string>& b) {
  std::vector<std::vector<std::size_t>> t(a.size() + 1, std::vector<std::size_t>(b.size() + 1, 0));
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j) {
      t[i][j] = a[i - 1] == b[j - 1] ? t[i - 1][j - 1] + 1 : std::max(t[i - 1][j], t[i][j - 1]);
    }
  }
  return t[a.size()][b.size()];
}

const std::vector<corpus::Interval> corpus_intervals = {{1, 3, 2}, {2, 5, 4}, {4, 6, 4}};
const corpus::EditCosts costs_10_12_7{10, 12, 7};

std::vector<std::shared_ptr<const Trace>> corpus_traces() {
  return {
      std::make_shared<const Trace>(corpus::solve_wis(corpus::WisInstance::from_intervals(corpus_intervals)).trace),
      std::make_shared<const Trace>(corpus::solve_edit_distance("kitten", "sitting", costs_10_12_7).trace),
      std::make_shared<const Trace>(corpus::solve_time_allocation({2, {{0, 1, 4}, {0, 3, 5}}}).trace),
  };
}

std::vector<Answer> perturbations(const Question& q, const Shape& shape) {
  std::vector<Answer> out;
  if (const auto* truth = std::get_if<CellSet>(&q.truth)) {
    for (std::size_t k = 0; k < truth->size(); ++k) {
      CellSet fewer = *truth;
      fewer.erase(fewer.begin() + static_cast<std::ptrdiff_t>(k));
      out.push_back(Answer::cells(fewer));
    }
    for (std::size_t flat = 0; flat < shape.size(); ++flat) {
      const CellIndex idx = shape.unflat(flat);
      if (std::binary_search(truth->begin(), truth->end(), idx)) continue;
      CellSet more = *truth;
      more.push_back(idx);
      out.push_back(Answer::cells(more));
    }
    return out;
  }
  const double v = std::get<double>(q.truth);
  const double step = 1e-6 * std::max(1.0, std::fabs(v));  // well above the 1e-9 relative tolerance
  out.push_back(Answer::value(v + step));
  out.push_back(Answer::value(v - step));
  out.push_back(Answer::value(v + 1));
  return out;
}

json answer_json(const Question& q, const Answer& a) {
  json body{{"question_id", q.id}};
  if (const auto* cells = std::get_if<CellSet>(&a.content)) {
    body["cells"] = json::array();
    for (const auto& c : *cells) {
      json idx = json::array();
      for (std::size_t d = 0; d < c.dims; ++d) idx.push_back(c.coords[d]);
      body["cells"].push_back(idx);
    }
  } else {
    body["value"] = std::get<double>(a.content);
  }
  return body;
}

// ---- criteria ----------------------------------------------------------------

void two_line_contract(std::vector<std::string>& failures) {
  const auto reference = read_lines(DPKIT_FIXTURE_DIR "/wis_reference.inc");
  const auto recorded = read_lines(DPKIT_FIXTURE_DIR "/wis_recorded.inc");
  REQUIRE(!reference.empty() && !recorded.empty(), "fixtures not found");
  const std::size_t common = lcs_length(reference, recorded);
  const std::size_t changed = recorded.size() - common;
  const std::size_t removed = reference.size() - common;
  EXPECT(changed == 2, "instrumented fixture changes " + std::to_string(changed) + " lines, expected 2");
  EXPECT(removed <= changed, "reference loses more lines than the instrumented version gains");

  const auto inst = corpus::WisInstance::from_intervals(corpus_intervals);
  Trace trace;
  const double plain = wis_reference(inst.intervals, inst.p);
  const double recorded_value = wis_recorded(inst.intervals, inst.p, trace);
  EXPECT(plain == recorded_value, "instrumented fixture computes a different value");
  EXPECT(recorded_value == corpus::brute_force_wis(corpus_intervals), "fixture value differs from oracle");
  EXPECT(write_count(trace) == inst.size() + 1, "fixture trace does not have n+1 frames");
  const auto solver = corpus::solve_wis(inst).trace;
  EXPECT(final_snapshot(trace) == frame_snapshot(solver, inst.size() + 1),
         "fixture trace disagrees with the corpus solver's computation frames");
}

void segmentation(std::vector<std::string>& failures) {
  const auto inst = corpus::WisInstance::from_intervals(corpus_intervals);
  const auto trace = corpus::solve_wis(inst).trace;
  EXPECT(write_count(trace) == 4, "expected 4 computation frames, got " + std::to_string(write_count(trace)));
  for (std::size_t f = 0; f < trace.frames.size(); ++f) {
    const auto& frame = trace.frames[f];
    if (frame.terminal) {
      EXPECT(f + 1 == trace.frames.size(), "terminal frame is not last");
      continue;
    }
    EXPECT(!frame.ops.empty() && frame.ops.back().kind == OpKind::write,
           "frame " + std::to_string(f + 1) + " does not end in WRITE");
  }
  REQUIRE(trace.frames.size() >= 2, "too few frames");
  EXPECT(inst.p[0] == 0, "p_1 should be 0");
  EXPECT(trace.frames[1].highlights.read.size() == 1,
         "frame 2 read set has size " + std::to_string(trace.frames[1].highlights.read.size()));
  EXPECT(std::count_if(trace.frames[1].ops.begin(), trace.frames[1].ops.end(),
                       [](const OpRecord& op) { return op.kind == OpKind::read; }) == 2,
         "frame 2 should hold two READs of the same cell");
}

void oracle_equivalence(std::vector<std::string>& failures) {
  std::mt19937_64 rng(2024);
  std::uniform_int_distribution<std::size_t> wis_n(0, 12);
  std::uniform_int_distribution<std::size_t> len(0, 6);
  std::uniform_int_distribution<std::size_t> classes(1, 3);
  std::uniform_int_distribution<std::size_t> hours(0, 6);
  for (int trial = 0; trial < 100; ++trial) {
    const auto intervals = corpus::random_intervals(wis_n(rng), rng, 20, 8, 10);
    const double dp = corpus::solve_wis(corpus::WisInstance::from_intervals(intervals)).value;
    const double oracle = corpus::brute_force_wis(intervals);
    EXPECT(dp == oracle, "WIS trial " + std::to_string(trial) + ": " + std::to_string(dp) + " vs " +
                             std::to_string(oracle));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const auto x = corpus::random_string(len(rng), rng, "abc");
    const auto y = corpus::random_string(len(rng), rng, "abc");
    const double dp = corpus::solve_edit_distance(x, y, costs_10_12_7).cost;
    const double oracle = corpus::brute_force_edit_distance(x, y, costs_10_12_7);
    EXPECT(dp == oracle, "edit '" + x + "' -> '" + y + "': " + std::to_string(dp) + " vs " + std::to_string(oracle));
  }
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t n = classes(rng);
    const auto inst = corpus::random_alloc(n, hours(rng), rng);
    const double dp = corpus::solve_time_allocation(inst).gpa;
    const double oracle = corpus::brute_force_time_allocation(inst);
    EXPECT(dp == oracle, "allocation trial " + std::to_string(trial));
  }
}

void fixed_values(std::vector<std::string>& failures) {
  const double kitten_oracle = corpus::brute_force_edit_distance("kitten", "sitting", costs_10_12_7);
  EXPECT(kitten_oracle == 24, "oracle gives " + std::to_string(kitten_oracle) + " for kitten/sitting");
  EXPECT(corpus::solve_edit_distance("kitten", "sitting", costs_10_12_7).cost == kitten_oracle, "kitten/sitting");
  EXPECT(corpus::solve_edit_distance("sitting", "sitting", costs_10_12_7).cost == 0, "equal strings");
  EXPECT(corpus::solve_edit_distance("a", "", costs_10_12_7).cost == 12, "(a, '') should cost 12");
  EXPECT(corpus::solve_edit_distance("", "a", costs_10_12_7).cost == 10, "('', a) should cost 10");
}

void replay_round_trip(std::vector<std::string>& failures) {
  std::mt19937_64 rng(77);
  for (int trial = 0; trial < 50; ++trial) {
    const auto rec = testing::random_recording(rng, 60);
    const auto trace = testing::trace_of(rec);
    EXPECT(final_snapshot(trace) == rec.final_state, "replay mismatch in trial " + std::to_string(trial));
    const auto bytes = serialize_trace(trace);
    const auto back = deserialize_trace(bytes);
    EXPECT(back == trace, "round trip changed trial " + std::to_string(trial));
    EXPECT(serialize_trace(back) == bytes, "re-serialization not byte-stable in trial " + std::to_string(trial));
  }
}

void quiz_soundness(std::vector<std::string>& failures) {
  for (const auto& trace : corpus_traces()) {
    for (std::size_t t = 1; t <= trace->frames.size(); ++t) {
      const auto tag = trace->name + " " + to_string(trace->shape) + " frame " + std::to_string(t);
      for (const auto& q : questions_for_frame(*trace, t, all_question_kinds())) {
        EXPECT(check_answer(q, ground_truth_answer(q)).correct, tag + ": truth rejected for " + q.id);
        for (const auto& wrong : perturbations(q, trace->shape)) {
          EXPECT(!check_answer(q, wrong).correct, tag + ": perturbation accepted for " + q.id);
        }
      }
      auto s = start_session(trace, all_question_kinds(), t);
      while (!s.pending.empty() && s.t == t) s = submit(s, s.pending.front().id, ground_truth_answer(s.pending.front()));
      EXPECT(s.t == t + 1, tag + ": all-correct did not advance by one");
    }
  }
}

void colors(std::vector<std::string>& failures) {
  DPArray<double> arr(1);
  const auto doc = json::parse(serialize_trace(build_trace(arr)));
  EXPECT(doc["colors"]["READ"] == "B7609A", "READ color");
  EXPECT(doc["colors"]["WRITE"] == "5C53A5", "WRITE color");
  EXPECT(doc["colors"]["MAXMIN"] == "EB7F86", "MAXMIN color");
}

// Deterministic answer script: first try one wrong answer, then the truth.
struct Step {
  Answer answer;
  bool correct_expected;
};

void http_contract(std::vector<std::string>& failures) {
  for (const auto& trace : corpus_traces()) {
    const std::string tag = trace->name + " " + to_string(trace->shape);
    SessionServer server(*trace);
    const int port = server.start("127.0.0.1", 0);
    httplib::Client client("127.0.0.1", port);

    auto engine = start_session(trace, all_question_kinds(), 1);
    auto created = client.Post("/api/sessions", json{{"start_t", 1}}.dump(), "application/json");
    REQUIRE(created && created->status == 201, tag + ": session creation failed");
    const auto start_body = json::parse(created->body);
    const std::string sid = start_body["session_id"];

    std::vector<std::tuple<bool, std::size_t, std::size_t, bool>> engine_verdicts, api_verdicts;
    std::size_t api_t = start_body["t"];
    int step = 0;
    while (!engine.complete()) {
      const Question q = engine.pending.front();

      // GETs while q is pending must not reveal frame q.t or anything after it.
      const auto full = client.Get("/api/trace");
      REQUIRE(full && full->status == 200, tag + ": GET /api/trace failed");
      const auto doc = json::parse(full->body);
      for (const auto& f : doc["frames"]) {
        EXPECT(f["t"].get<std::size_t>() < q.t, tag + ": /api/trace leaks frame " + f["t"].dump());
      }
      EXPECT(!doc.contains("traceback"), tag + ": traceback visible during session");
      for (std::size_t t = q.t; t <= trace->frames.size(); ++t) {
        const auto fr = client.Get("/api/frames/" + std::to_string(t));
        EXPECT(fr && fr->status != 200, tag + ": /api/frames/" + std::to_string(t) + " served while pending");
      }

      const auto perturbed = perturbations(q, trace->shape);
      const Answer answer = (step++ % 3 == 0) ? perturbed.front() : ground_truth_answer(q);

      const auto before_t = engine.t;
      engine = submit(engine, q.id, answer);
      const auto& v = engine.history.back().verdict;
      engine_verdicts.emplace_back(v.correct, v.missing.size(), v.extra.size(), engine.t > before_t);

      const auto res = client.Post("/api/sessions/" + sid + "/answers", answer_json(q, answer).dump(), "application/json");
      REQUIRE(res && res->status == 200, tag + ": POST answer failed for " + q.id);
      const auto body = json::parse(res->body);
      api_verdicts.emplace_back(body["correct"].get<bool>(), body["missing_count"].get<std::size_t>(),
                                body["extra"].size(), body["advanced"].get<bool>());
      api_t = body["t"];
      for (const auto& pq : body["questions"]) {
        for (const auto& [key, value] : pq.items()) {
          EXPECT(key == "id" || key == "kind" || key == "t" || key == "target",
                 tag + ": question payload carries field '" + key + "'");
        }
      }
    }
    EXPECT(engine_verdicts == api_verdicts, tag + ": verdict sequences differ");
    EXPECT(api_t == engine.t, tag + ": final t differs (" + std::to_string(api_t) + " vs " + std::to_string(engine.t) + ")");
    server.stop();
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"two-line contract (source diff of plain vs recorded WIS)", 1000, two_line_contract},
      {"segmentation of the 3-interval WIS trace", 1000, segmentation},
      {"oracle equivalence (100 WIS, 100 edit, 100 allocation)", 30000, oracle_equivalence},
      {"fixed edit-distance values (kitten/sitting = 24, equal = 0, a/'' = 12, ''/a = 10)", 1000, fixed_values},
      {"replay and serialization round-trip on 50 random logs", 5000, replay_round_trip},
      {"quiz soundness over every frame of the corpus traces", 5000, quiz_soundness},
      {"default colors B7609A / 5C53A5 / EB7F86", 0, colors},
      {"HTTP contract (API/engine equivalence, ground-truth secrecy)", 10000, http_contract},
  };

  int failed = 0;
  for (const auto& c : criteria) {
    std::vector<std::string> failures;
    const auto start = Clock::now();
    try {
      c.body(failures);
    } catch (const std::exception& e) {
      failures.push_back(std::string("exception: ") + e.what());
    }
    const double ms = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    if (c.limit_ms > 0 && ms > c.limit_ms) {
      failures.push_back("took " + std::to_string(ms) + " ms, limit " + std::to_string(c.limit_ms) + " ms");
    }
    std::ostringstream line;
    line << (failures.empty() ? "PASS" : "FAIL") << "  " << c.name << "  (" << static_cast<long>(ms) << " ms)";
    std::cout << line.str() << "\n";
    for (std::size_t i = 0; i < failures.size() && i < 10; ++i) std::cout << "      - " << failures[i] << "\n";
    if (!failures.empty()) ++failed;
  }
  std::cout << (criteria.size() - failed) << "/" << criteria.size() << " criteria passed\n";
  return failed == 0 ? 0 : 1;
}

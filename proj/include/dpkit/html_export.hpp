#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>

#include "dpkit/errors.hpp"
#include "dpkit/trace.hpp"
#include "dpkit/trace_json.hpp"

namespace dpkit {

namespace html_detail {

inline constexpr std::string_view page_head = R"html(<!DOCTYPE html>
<html lang="en">
<head>
<meta charset="utf-8">
<title>dpkit trace viewer</title>
<style>
body { font-family: system-ui, sans-serif; margin: 1.5em; color: #222; }
#banner { display: none; background: #fdd; padding: .5em; margin-bottom: 1em; }
table.grid { border-collapse: collapse; margin: 1em 0; }
table.grid td, table.grid th { border: 1px solid #999; min-width: 2.6em; height: 2em; text-align: center; }
table.grid th { background: #eee; font-weight: normal; }
td.path { outline: 3px solid #222; outline-offset: -3px; font-weight: bold; }
.legend span { display: inline-block; padding: .1em .5em; margin-right: .5em; color: #fff; }
#controls button { min-width: 3em; }
#annotation { font-family: monospace; min-height: 1.2em; }
</style>
</head>
<body>
<h2 id="title">trace</h2>
<div id="banner"></div>
<div class="legend" id="legend"></div>
<div id="controls">
  <button id="first">|&lt;</button>
  <button id="back">&lt;</button>
  <button id="play">play</button>
  <button id="fwd">&gt;</button>
  <button id="last">&gt;|</button>
  <input id="scrub" type="range" min="0" max="0" value="0">
  <span id="position"></span>
</div>
<div id="annotation"></div>
<div id="grid"></div>
)html";

// Viewer logic. Frame 0 shows the empty array; the extra frame after the last
// computation frame shows the traceback path when the trace carries one.
inline constexpr std::string_view page_script = R"html(<script>
(function () {
  var embedded = document.getElementById("dpkit-trace");
  var banner = document.getElementById("banner");
  var trace = null, t = 0, timer = null;

  function showError(msg) { banner.textContent = msg; banner.style.display = "block"; }
  function key(idx) { return idx.join(","); }
  function lastT() { return trace.frames.length + (trace.traceback ? 1 : 0); }
  function fmt(v) { return v === null || v === undefined ? "" : String(Math.round(v * 1e6) / 1e6); }

  function stateAt(upTo) {
    var cells = {};
    for (var k = 0; k < Math.min(upTo, trace.frames.length); ++k) {
      trace.frames[k].deltas.forEach(function (d) { cells[key(d[0])] = d[1]; });
    }
    return cells;
  }

  function render() {
    var rows = trace.shape.length === 2 ? trace.shape[0] : 1;
    var cols = trace.shape.length === 2 ? trace.shape[1] : trace.shape[0];
    var cells = stateAt(t);
    var frame = t >= 1 && t <= trace.frames.length ? trace.frames[t - 1] : null;
    var tint = {};
    if (frame) {
      frame.read.forEach(function (i) { tint[key(i)] = trace.colors.READ; });
      frame.maxmin.forEach(function (i) { tint[key(i)] = trace.colors.MAXMIN; });
      frame.written.forEach(function (i) { tint[key(i)] = trace.colors.WRITE; });
    }
    var onPath = {};
    if (trace.traceback && t === lastT()) trace.traceback.forEach(function (i) { onPath[key(i)] = true; });
    var labels = trace.labels || {};
    var html = "<table class=\"grid\">";
    if (labels.cols) {
      html += "<tr>" + (labels.rows ? "<th></th>" : "");
      labels.cols.forEach(function (c) { html += "<th>" + esc(c) + "</th>"; });
      html += "</tr>";
    }
    for (var r = 0; r < rows; ++r) {
      html += "<tr>" + (labels.rows ? "<th>" + esc(labels.rows[r]) + "</th>" : "");
      for (var c = 0; c < cols; ++c) {
        var k = trace.shape.length === 2 ? r + "," + c : String(c);
        var style = tint[k] ? " style=\"background:#" + tint[k] + ";color:#fff\"" : "";
        html += "<td" + (onPath[k] ? " class=\"path\"" : "") + style + ">" + fmt(cells[k]) + "</td>";
      }
      html += "</tr>";
    }
    document.getElementById("grid").innerHTML = html + "</table>";
    document.getElementById("scrub").value = t;
    document.getElementById("position").textContent = "t = " + t + " / " + lastT();
    document.getElementById("annotation").textContent = frame && frame.annotation ? frame.annotation : "";
  }

  function esc(s) {
    return String(s).replace(/[&<>"]/g, function (ch) {
      return {"&": "&amp;", "<": "&lt;", ">": "&gt;", "\"": "&quot;"}[ch];
    });
  }
  function seek(v) { t = Math.max(0, Math.min(lastT(), v)); render(); }
  function stop() { if (timer) { clearInterval(timer); timer = null; } document.getElementById("play").textContent = "play"; }

  function start(doc) {
    trace = doc;
    document.getElementById("title").textContent = trace.name;
    document.getElementById("legend").innerHTML =
      "<span style=\"background:#" + trace.colors.READ + "\">READ</span>" +
      "<span style=\"background:#" + trace.colors.WRITE + "\">WRITE</span>" +
      "<span style=\"background:#" + trace.colors.MAXMIN + "\">MAX/MIN</span>";
    var scrub = document.getElementById("scrub");
    scrub.max = lastT();
    scrub.oninput = function () { stop(); seek(parseInt(scrub.value, 10)); };
    document.getElementById("first").onclick = function () { stop(); seek(0); };
    document.getElementById("back").onclick = function () { stop(); seek(t - 1); };
    document.getElementById("fwd").onclick = function () { stop(); seek(t + 1); };
    document.getElementById("last").onclick = function () { stop(); seek(lastT()); };
    document.getElementById("play").onclick = function () {
      if (timer) { stop(); return; }
      this.textContent = "pause";
      timer = setInterval(function () { if (t >= lastT()) { stop(); } else { seek(t + 1); } }, 1000);
    };
    seek(trace.frames.length > 0 ? 1 : 0);
  }

  if (embedded) {
    try { start(JSON.parse(embedded.textContent)); } catch (e) { showError("cannot read embedded trace: " + e); }
  } else {
    fetch("/api/trace").then(function (r) {
      if (!r.ok) throw new Error("HTTP " + r.status);
      return r.json();
    }).then(start).catch(function (e) { showError("cannot load trace: " + e.message); });
  }
})();
</script>
</body>
</html>
)html";

inline constexpr std::string_view embed_open = "<script id=\"dpkit-trace\" type=\"application/json\">";
inline constexpr std::string_view embed_close = "</script>\n";

}  // namespace html_detail

// Viewer page that loads its trace from /api/trace.
inline std::string viewer_page() {
  return std::string(html_detail::page_head) + std::string(html_detail::page_script);
}

/// Self-contained page with the canonical trace JSON embedded verbatim.
inline std::string render_static_page(const Trace& trace) {
  std::string page(html_detail::page_head);
  page += html_detail::embed_open;
  page += serialize_trace(trace);
  page += html_detail::embed_close;
  page += html_detail::page_script;
  return page;
}

// Returns the embedded document of a page produced by render_static_page.
inline std::optional<std::string> extract_embedded_trace(std::string_view page) {
  const auto begin = page.find(html_detail::embed_open);
  if (begin == std::string_view::npos) return std::nullopt;
  const auto body = begin + html_detail::embed_open.size();
  const auto end = page.find("</script>", body);
  if (end == std::string_view::npos) return std::nullopt;
  return std::string(page.substr(body, end - body));
}

inline void export_static(const Trace& trace, const std::filesystem::path& out) {
  std::error_code ec;
  if (std::filesystem::is_directory(out, ec)) throw IoError(out.string() + " is a directory");
  std::ofstream file(out, std::ios::binary | std::ios::trunc);
  if (!file) throw IoError("cannot open " + out.string() + " for writing");
  file << render_static_page(trace);
  file.close();
  if (!file) throw IoError("failed writing " + out.string());
}

}  // namespace dpkit

// forestflow Sankey viewer: hover highlighting, tooltips, threshold slider and
// class selection over the embedded flow document. No network access.
(function () {
  "use strict";

  var NODE_WIDTH = 14, PADDING = 10, MARGIN_X = 20, MARGIN_TOP = 20, MARGIN_BOTTOM = 20;
  var VIRIDIS = [[0x44,0x01,0x54],[0x47,0x2d,0x7b],[0x3b,0x52,0x8b],[0x2c,0x72,0x8e],
    [0x21,0x91,0x8c],[0x28,0xae,0x80],[0x5e,0xc9,0x62],[0xad,0xdc,0x30],[0xfd,0xe7,0x25]];

  function $(id) { return document.getElementById(id); }

  function num(v) {
    var s = (Math.round(v * 100) / 100).toFixed(2).replace(/0+$/, "").replace(/\.$/, "");
    return s === "-0" ? "0" : s;
  }

  function esc(s) {
    return String(s).replace(/&/g, "&amp;").replace(/</g, "&lt;").replace(/>/g, "&gt;")
      .replace(/"/g, "&quot;").replace(/'/g, "&#39;");
  }

  function key(g) { return g.rank + ":" + (g.label === "Terminus" ? "T" : g.label); }
  function isTerm(g) { return g.label === "Terminus"; }
  // Terminus sorts before every covariate, as on the Rust side.
  function cmpGroup(a, b) {
    if (a.rank !== b.rank) return a.rank - b.rank;
    if (isTerm(a) !== isTerm(b)) return isTerm(a) ? -1 : 1;
    return isTerm(a) ? 0 : a.label - b.label;
  }

  function applyThreshold(agg, theta, maxRank) {
    var rankSum = {};
    agg.groups.forEach(function (g) { rankSum[g.rank] = (rankSum[g.rank] || 0) + g.total; });
    var removed = {};
    agg.groups.forEach(function (g) {
      if (g.total < theta * rankSum[g.rank]) removed[key(g)] = true;
    });
    var totals = {}, edges = [];
    for (var r = 1; r <= maxRank; r++) {
      if (r === 1) {
        agg.groups.forEach(function (g) {
          if (g.rank === 1 && !removed[key(g)]) totals[key(g)] = g.total;
        });
      }
      if (r < maxRank) {
        agg.edges.forEach(function (e) {
          if (e.from.rank === r && key(e.from) in totals && !removed[key(e.to)]) {
            edges.push(e);
            totals[key(e.to)] = (totals[key(e.to)] || 0) + e.weight;
          }
        });
      }
    }
    var seen = {}, groups = [];
    agg.groups.concat(edges.map(function (e) { return e.to; })).forEach(function (g) {
      var k = key(g);
      if (k in totals && !seen[k]) {
        seen[k] = true;
        groups.push({ rank: g.rank, label: g.label, total: totals[k] });
      }
    });
    groups.sort(cmpGroup);
    var fractions = [];
    for (var q = 1; q <= maxRank; q++) {
      var before = rankSum[q] || 0, after = 0;
      groups.forEach(function (g) { if (g.rank === q) after += g.total; });
      fractions.push(before === 0 ? 0 : (before - after) / before);
    }
    return { class: agg.class, total_paths: agg.total_paths, groups: groups, edges: edges,
      threshold: { theta: theta, removed_fraction: fractions } };
  }

  function shade(mode, d) {
    d = Math.min(1, Math.max(0, d));
    if (mode !== "viridis") {
      var v = Math.round(255 * (1 - d)).toString(16);
      if (v.length < 2) v = "0" + v;
      return "#" + v + v + v;
    }
    var t = (1 - d) * (VIRIDIS.length - 1), i = Math.min(Math.floor(t), VIRIDIS.length - 2), f = t - i;
    return "#" + [0, 1, 2].map(function (k) {
      var c = Math.round(VIRIDIS[i][k] + (VIRIDIS[i + 1][k] - VIRIDIS[i][k]) * f).toString(16);
      return c.length < 2 ? "0" + c : c;
    }).join("");
  }

  function blockColor(mode, label, p) {
    if (label === "Terminus") return "#2b2b2b";
    if (mode !== "viridis") return "#6b6b6b";
    var span = Math.max(p - 1, 1);
    return shade(mode, 0.15 + 0.7 * (1 - label / span));
  }

  function layout(agg, opts) {
    var cols = {}, ranks = [];
    agg.groups.forEach(function (g) {
      if (!cols[g.rank]) { cols[g.rank] = []; ranks.push(g.rank); }
      cols[g.rank].push(g);
    });
    ranks.sort(function (a, b) { return a - b; });
    var lastRank = ranks.length ? ranks[ranks.length - 1] : 1;
    ranks.forEach(function (r) {
      cols[r].sort(function (a, b) {
        if (isTerm(a) !== isTerm(b)) return isTerm(a) ? 1 : -1;
        if (a.total !== b.total) return b.total - a.total;
        return cmpGroup(a, b);
      });
    });
    var innerH = Math.max(opts.height - MARGIN_TOP - MARGIN_BOTTOM, 1);
    var most = 1;
    ranks.forEach(function (r) { most = Math.max(most, cols[r].length); });
    var pad = most > 1 ? Math.min(PADDING, 0.5 * innerH / (most - 1)) : 0;
    var scale = Infinity;
    ranks.forEach(function (r) {
      var sum = 0;
      cols[r].forEach(function (g) { sum += g.total; });
      scale = Math.min(scale, (innerH - pad * (cols[r].length - 1)) / Math.max(sum, 1));
    });
    if (!isFinite(scale)) scale = 0;
    var xStep = lastRank > 1 ? (opts.width - 2 * MARGIN_X - NODE_WIDTH) / (lastRank - 1) : 0;
    var blocks = [], index = {};
    ranks.forEach(function (r) {
      var y = MARGIN_TOP;
      cols[r].forEach(function (g) {
        var h = g.total * scale;
        index[key(g)] = blocks.length;
        blocks.push({ group: g, total: g.total, x: MARGIN_X + (r - 1) * xStep, y: y, width: NODE_WIDTH, height: h });
        y += h + pad;
      });
    });
    var links = agg.edges.map(function (e) {
      var a = blocks[index[key(e.from)]], b = blocks[index[key(e.to)]];
      return { from: e.from, to: e.to, weight: e.weight, thickness: e.weight * scale,
        x0: a.x + a.width, x1: b.x, y0: 0, y1: 0 };
    });
    function stack(end, other, coord) {
      var order = links.map(function (_, i) { return i; });
      order.sort(function (i, j) {
        var d = index[key(links[i][end])] - index[key(links[j][end])];
        return d !== 0 ? d : index[key(links[i][other])] - index[key(links[j][other])];
      });
      var off = {};
      order.forEach(function (i) {
        var b = index[key(links[i][end])];
        links[i][coord] = blocks[b].y + (off[b] || 0);
        off[b] = (off[b] || 0) + links[i].thickness;
      });
    }
    stack("from", "to", "y0");
    stack("to", "from", "y1");
    return { blocks: blocks, links: links };
  }

  function name(doc, label) { return label === "Terminus" ? "Terminus" : doc.covariate_names[label]; }

  function linkTitle(doc, agg, l) {
    return name(doc, l.from.label) + " (Node " + l.from.rank + ") → " + name(doc, l.to.label) +
      " (Node " + l.to.rank + "): " + l.weight + " paths (" + num(100 * l.weight / Math.max(agg.total_paths, 1)) + "%)";
  }

  function svgMarkup(doc, agg, opts) {
    var lay = layout(agg, opts), p = doc.covariate_names.length, out = [];
    out.push('<svg xmlns="http://www.w3.org/2000/svg" width="' + opts.width + '" height="' + opts.height +
      '" viewBox="0 0 ' + opts.width + " " + opts.height + '" font-family="sans-serif" font-size="12">');
    out.push('<rect width="' + opts.width + '" height="' + opts.height + '" fill="#ffffff"/>');
    out.push('<g class="links" fill-opacity="0.45">');
    lay.links.forEach(function (l) {
      var xm = (l.x0 + l.x1) / 2, t = l.thickness;
      var d = "M" + num(l.x0) + "," + num(l.y0) + "C" + num(xm) + "," + num(l.y0) + " " + num(xm) + "," + num(l.y1) +
        " " + num(l.x1) + "," + num(l.y1) + "L" + num(l.x1) + "," + num(l.y1 + t) + "C" + num(xm) + "," + num(l.y1 + t) +
        " " + num(xm) + "," + num(l.y0 + t) + " " + num(l.x0) + "," + num(l.y0 + t) + "Z";
      out.push('<path class="link" data-from="' + key(l.from) + '" data-to="' + key(l.to) + '" data-weight="' + l.weight +
        '" fill="' + blockColor(opts.mode, l.from.label, p) + '" d="' + d + '"><title>' + esc(linkTitle(doc, agg, l)) + "</title></path>");
    });
    out.push('</g>\n<g class="blocks">');
    var lastX = 0;
    lay.blocks.forEach(function (b) { lastX = Math.max(lastX, b.x); });
    lay.blocks.forEach(function (b) {
      var label = opts.labelFormat.split("{rank}").join(String(b.group.rank)).split("{name}").join(name(doc, b.group.label));
      out.push('<rect class="block" data-group="' + key(b.group) + '" data-total="' + b.total + '" x="' + num(b.x) + '" y="' +
        num(b.y) + '" width="' + num(b.width) + '" height="' + num(b.height) + '" fill="' +
        blockColor(opts.mode, b.group.label, p) + '"><title>' + esc(label) + ": " + b.total + " paths</title></rect>");
      var right = b.x < lastX || lay.blocks.length === 1;
      out.push('<text x="' + num(right ? b.x + b.width + 4 : b.x - 4) + '" y="' + num(b.y + b.height / 2 + 4) +
        '" text-anchor="' + (right ? "start" : "end") + '">' + esc(label) + "</text>");
    });
    out.push("</g>\n</svg>");
    return out.join("\n");
  }

  function caption(doc, agg) {
    var t = agg.threshold;
    if (!t || t.theta <= 0) return "theta 0: all paths shown (max rank " + doc.max_rank + ")";
    return "theta " + num(t.theta) + ": removed per rank: " + t.removed_fraction.map(function (f, i) {
      return "Node " + (i + 1) + " " + num(100 * f) + "%";
    }).join(", ");
  }

  function init() {
    var island = $("flow-data"), chart = $("ff-chart"), errBox = $("ff-error");
    var doc;
    try {
      doc = JSON.parse(island.textContent);
    } catch (e) {
      return fail("flow document is not valid JSON: " + e.message);
    }
    if (doc.format_version !== "1") {
      return fail("unsupported flow document format_version \"" + doc.format_version + "\"");
    }
    function fail(msg) {
      chart.innerHTML = "";
      chart.hidden = true;
      errBox.textContent = msg;
      errBox.hidden = false;
    }

    var opts = { width: +chart.dataset.width, height: +chart.dataset.height,
      mode: chart.dataset.colorMode, labelFormat: chart.dataset.labelFormat };
    var initial = { theta: doc.selection.theta, cls: doc.selection.class,
      svg: chart.innerHTML, caption: $("ff-caption").textContent, total: $("ff-total").textContent };
    var state = { theta: initial.theta, cls: initial.cls, agg: doc.aggregate };

    var controls = $("ff-controls");
    controls.innerHTML = '<label>threshold <input id="ff-theta" type="range" min="0" max="1" step="0.01"> ' +
      '<span id="ff-theta-value"></span></label><label>class <select id="ff-select"></select></label>' +
      '<button id="ff-reset" type="button">reset</button>';
    var slider = $("ff-theta"), select = $("ff-select");
    select.innerHTML = '<option value="">all classes</option>' + doc.class_names.map(function (c) {
      return '<option value="' + esc(c) + '">' + esc(c) + "</option>";
    }).join("");

    function syncControls() {
      slider.value = String(state.theta);
      $("ff-theta-value").textContent = num(state.theta);
      select.value = state.cls === null ? "" : state.cls;
    }

    function render() {
      if (state.theta === initial.theta && state.cls === initial.cls) {
        state.agg = doc.aggregate;
        chart.innerHTML = initial.svg;
        $("ff-caption").textContent = initial.caption;
        $("ff-total").textContent = initial.total;
      } else {
        var base = doc.base.filter(function (b) { return b.class === state.cls; })[0] || doc.base[0];
        state.agg = applyThreshold(base, state.theta, doc.max_rank);
        chart.innerHTML = svgMarkup(doc, state.agg, opts);
        $("ff-caption").textContent = caption(doc, state.agg);
        $("ff-total").textContent = String(state.agg.total_paths);
      }
      $("ff-class").textContent = state.cls === null ? "all classes" : state.cls;
      syncControls();
    }

    slider.addEventListener("input", function () {
      state.theta = Math.min(1, Math.max(0, +slider.value));
      render();
    });
    select.addEventListener("change", function () {
      state.cls = select.value === "" ? null : select.value;
      render();
    });
    $("ff-reset").addEventListener("click", function () {
      state.theta = initial.theta;
      state.cls = initial.cls;
      render();
    });

    var tip = $("ff-tooltip");
    function clear() {
      tip.hidden = true;
      Array.prototype.forEach.call(chart.querySelectorAll(".link"), function (l) {
        l.classList.remove("hl");
        l.classList.remove("dim");
      });
    }
    function highlight(pred) {
      Array.prototype.forEach.call(chart.querySelectorAll(".link"), function (l) {
        var on = pred(l);
        l.classList.toggle("hl", on);
        l.classList.toggle("dim", !on);
      });
    }
    chart.addEventListener("mousemove", function (ev) {
      var t = ev.target;
      if (t.classList && t.classList.contains("link")) {
        highlight(function (l) { return l === t; });
        tip.textContent = t.querySelector("title").textContent;
      } else if (t.classList && t.classList.contains("block")) {
        var g = t.getAttribute("data-group");
        highlight(function (l) { return l.getAttribute("data-from") === g || l.getAttribute("data-to") === g; });
        tip.textContent = t.querySelector("title").textContent;
      } else {
        return clear();
      }
      tip.hidden = false;
      tip.style.left = ev.clientX + 12 + "px";
      tip.style.top = ev.clientY + 12 + "px";
    });
    chart.addEventListener("mouseleave", clear);
    syncControls();
  }

  // Outside a browser (tests under node) only expose the pure parts.
  if (typeof document === "undefined") {
    if (typeof module !== "undefined") module.exports = { applyThreshold: applyThreshold, layout: layout, svgMarkup: svgMarkup };
    return;
  }
  if (document.readyState === "loading") document.addEventListener("DOMContentLoaded", init);
  else init();
})();

import init, { hitting_scan, return_curve, cat_approach } from "./pkg/hitlab_web.js";

const $ = (id) => document.getElementById(id);

// Draws each series as a polyline on shared axes.
function plot(canvas, series, labels) {
  const ctx = canvas.getContext("2d");
  const w = canvas.width, h = canvas.height, pad = 40;
  ctx.clearRect(0, 0, w, h);
  const pts = series.flatMap((s) => s.xs.map((x, i) => [x, s.ys[i]])).filter(([x, y]) => isFinite(x) && isFinite(y));
  if (pts.length === 0) return;
  const [x0, x1] = [Math.min(...pts.map((p) => p[0])), Math.max(...pts.map((p) => p[0]))];
  const [y0, y1] = [Math.min(...pts.map((p) => p[1])), Math.max(...pts.map((p) => p[1]))];
  const sx = (x) => pad + ((x - x0) / (x1 - x0 || 1)) * (w - 2 * pad);
  const sy = (y) => h - pad - ((y - y0) / (y1 - y0 || 1)) * (h - 2 * pad);
  ctx.strokeStyle = "#999";
  ctx.strokeRect(pad, pad, w - 2 * pad, h - 2 * pad);
  ctx.fillStyle = "#444";
  ctx.fillText(labels.x, w / 2, h - 10);
  ctx.fillText(labels.y, 5, pad - 10);
  ctx.fillText(x0.toPrecision(3), pad, h - pad + 14);
  ctx.fillText(x1.toPrecision(3), w - pad - 20, h - pad + 14);
  ctx.fillText(y1.toPrecision(3), 2, pad + 4);
  ctx.fillText(y0.toPrecision(3), 2, h - pad);
  for (const s of series) {
    ctx.strokeStyle = s.color;
    ctx.beginPath();
    s.xs.forEach((x, i) => {
      const y = s.ys[i];
      if (!isFinite(x) || !isFinite(y)) return;
      i === 0 ? ctx.moveTo(sx(x), sy(y)) : ctx.lineTo(sx(x), sy(y));
    });
    ctx.stroke();
  }
}

function guarded(out, f) {
  return () => {
    try {
      f();
    } catch (e) {
      $(out).textContent = "error: " + (e.message || e);
    }
  };
}

$("h-run").onclick = guarded("h-out", () => {
  const sys = $("h-sys").value;
  const kLast = sys === "cat" ? 8 : 14;
  const r = JSON.parse(hitting_scan(sys, $("h-target").value, 3, kLast, Number($("h-points").value), 1n));
  const d = r.dimension;
  const line = r.neg_log_r.map((x) => d * (x - r.neg_log_r[0]) + r.median_log_tau[0]);
  plot($("h-plot"), [
    { xs: r.neg_log_r, ys: r.median_log_tau, color: "#c33" },
    { xs: r.neg_log_r, ys: line, color: "#39c" },
  ], { x: "-log r", y: "median log tau (blue: slope d)" });
  $("h-out").textContent =
    `median exponent ${r.exponent.toFixed(3)}, R-upper ${r.r_upper.toFixed(3)}, R-lower ${r.r_lower.toFixed(3)}; d = ${d}`;
});

$("r-run").onclick = guarded("r-out", () => {
  const r = JSON.parse(return_curve($("r-sys").value, $("r-target").value, Number($("r-radius").value), 5000, 1n));
  plot($("r-plot"), [
    { xs: r.t, ys: r.g, color: "#c33" },
    { xs: r.t, ys: r.t.map((t) => Math.exp(-t)), color: "#39c" },
  ], { x: "t", y: "g(t) (blue: exp(-t))" });
  $("r-out").textContent = `sup |g - exp(-t)| = ${r.distance.toFixed(4)}, jump clusters ${r.clusters}`;
});

$("a-run").onclick = guarded("a-out", () => {
  const r = JSON.parse(cat_approach(Number($("a-x").value), Number($("a-y").value), BigInt($("a-n").value), 1n));
  const xs = r.n.map((n) => Math.log(n));
  plot($("a-plot"), [
    { xs, ys: r.d_n.map((d) => -Math.log(d)), color: "#c33" },
    { xs, ys: xs.map((x) => x / 2), color: "#39c" },
  ], { x: "log n", y: "-log d_n (blue: slope 1/2)" });
  const e = r.exponent === null ? "n/a" : r.exponent.toFixed(3);
  $("a-out").textContent = `fitted exponent ${e} over n >= ${r.fit_from}; predicted 0.5`;
});

await init();

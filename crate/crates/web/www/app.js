// Expects the wasm-bindgen output (`--target web`) in ./pkg.
import init, { rauzy_class_json, spectrum_json, certify_json } from "./pkg/twisted_web.js";

const SVG = "http://www.w3.org/2000/svg";
const COLORS = { top: "#1f5fbf", bottom: "#c0561a" };

function el(name, attrs, text) {
  const node = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

function showError(target, err) {
  target.textContent = String(err.message ?? err);
  target.classList.add("error");
}

function run(target, fn) {
  target.classList.remove("error");
  target.textContent = "working…";
  // Let the browser paint the message before the synchronous wasm call.
  setTimeout(() => {
    try {
      fn();
    } catch (err) {
      showError(target, err);
    }
  }, 0);
}

function drawClass(report) {
  const svg = document.getElementById("class-graph");
  svg.replaceChildren();
  const defs = el("defs", {});
  for (const [kind, color] of Object.entries(COLORS)) {
    const marker = el("marker", { id: `arrow-${kind}`, viewBox: "0 0 10 10", refX: 10, refY: 5, markerWidth: 6, markerHeight: 6, orient: "auto" });
    marker.append(el("path", { d: "M0,0 L10,5 L0,10 z", fill: color }));
    defs.append(marker);
  }
  svg.append(defs);
  const n = report.members.length;
  const radius = n === 1 ? 0 : 170;
  const pos = report.members.map((_, i) => {
    const a = (2 * Math.PI * i) / n - Math.PI / 2;
    return [radius * Math.cos(a), radius * Math.sin(a)];
  });
  const node = 18;
  for (const e of report.edges) {
    const [x0, y0] = pos[e.from];
    const [x1, y1] = pos[e.to];
    const stroke = COLORS[e.type];
    if (e.from === e.to) {
      const dy = e.type === "top" ? -1 : 1;
      svg.append(el("circle", { cx: x0, cy: y0 + dy * (node + 10), r: 10, fill: "none", stroke }));
      continue;
    }
    // Offset the two directions of a pair so they do not overlap.
    const len = Math.hypot(x1 - x0, y1 - y0);
    const [ux, uy] = [(x1 - x0) / len, (y1 - y0) / len];
    const [ox, oy] = [-uy * 4, ux * 4];
    svg.append(el("line", {
      x1: x0 + ux * node + ox, y1: y0 + uy * node + oy,
      x2: x1 - ux * node + ox, y2: y1 - uy * node + oy,
      stroke, "marker-end": `url(#arrow-${e.type})`,
    }));
  }
  report.members.forEach((name, i) => {
    const [x, y] = pos[i];
    svg.append(el("circle", { cx: x, cy: y, r: node, fill: i === 0 ? "#ffe9a8" : "#fff", stroke: "#444" }));
    const label = el("text", { x, y: y + node + 14, "text-anchor": "middle" }, name);
    svg.append(label);
    svg.append(el("text", { x, y: y + 4, "text-anchor": "middle" }, String(i)));
  });
}

document.getElementById("class-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  const out = document.getElementById("class-summary");
  const perm = new FormData(ev.target).get("perm");
  run(out, () => {
    const report = JSON.parse(rauzy_class_json(perm));
    out.textContent =
      `genus ${report.genus}, κ = ${report.kappa}, ${report.members.length} members\n` +
      `σ cycles: ${report.sigma_cycles.map((c) => "(" + c.join(" ") + ")").join(" ")}`;
    drawClass(report);
  });
});

function drawSpectrum(est) {
  const svg = document.getElementById("spectrum-plot");
  svg.replaceChildren();
  const [w, h, pad] = [560, 220, 30];
  const top = Math.max(1e-3, ...est.exponents.map((x, i) => Math.abs(x) + 3 * est.stderr[i]));
  const y = (v) => h / 2 - (v / top) * (h / 2 - pad);
  svg.append(el("line", { x1: pad, x2: w - pad, y1: y(0), y2: y(0), stroke: "#999" }));
  const step = (w - 2 * pad) / est.exponents.length;
  est.exponents.forEach((chi, i) => {
    const cx = pad + step * (i + 0.5);
    const s = 3 * est.stderr[i];
    svg.append(el("line", { x1: cx, x2: cx, y1: y(chi - s), y2: y(chi + s), stroke: "#888" }));
    svg.append(el("circle", { cx, cy: y(chi), r: 4, fill: "#1f5fbf" }));
    svg.append(el("text", { x: cx, y: h - 6, "text-anchor": "middle" }, `χ${i + 1}`));
  });
}

document.getElementById("spectrum-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  const out = document.getElementById("spectrum-summary");
  const f = new FormData(ev.target);
  run(out, () => {
    const t0 = performance.now();
    const est = JSON.parse(spectrum_json(
      f.get("perm"), f.get("measure"), Number(f.get("k")),
      Number(f.get("steps")), Number(f.get("seeds")), BigInt(1),
    ));
    const rows = est.exponents.map((x, i) => `χ${i + 1} = ${x.toFixed(6)} ± ${est.stderr[i].toExponential(1)}`);
    out.textContent =
      rows.join("\n") +
      `\nzero exponents: ${est.zero_count} (expected κ + 1 = ${est.expected_zero_count})` +
      `\nsymmetry defect ${est.symmetry_defect.toExponential(2)}, ${((performance.now() - t0) / 1000).toFixed(1)} s`;
    drawSpectrum(est);
  });
});

document.getElementById("certify-form").addEventListener("submit", (ev) => {
  ev.preventDefault();
  const out = document.getElementById("certify-summary");
  const pre = document.getElementById("certify-json");
  const f = new FormData(ev.target);
  pre.textContent = "";
  run(out, () => {
    const cert = JSON.parse(certify_json(f.get("rule"), Number(f.get("nmax")), Number(f.get("mc")), BigInt(0)));
    out.textContent =
      `${cert.verdict} (${cert.branch} branch)\n` +
      (cert.chi_plus_estimate === null || cert.chi_plus_estimate === undefined
        ? cert.reason
        : `χ⁺ ≈ ${cert.chi_plus_estimate.toFixed(6)} ± ${cert.chi_plus_error.toExponential(1)} ` +
          `vs ½ log λ = ${cert.threshold.toFixed(6)}, margin ${cert.margin.toFixed(6)}\nP = ${cert.p}`);
    pre.textContent = JSON.stringify(cert, null, 2);
  });
});

init()
  .then(() => { document.getElementById("status").textContent = "Ready."; })
  .catch((err) => showError(document.getElementById("status"), err));

import init, { risk_curve, rates, lower_bound } from "./pkg/qfe_wasm.js";

const SVG = "http://www.w3.org/2000/svg";

function el(name, attrs = {}, text) {
  const node = document.createElementNS(SVG, name);
  for (const [k, v] of Object.entries(attrs)) node.setAttribute(k, v);
  if (text !== undefined) node.textContent = text;
  return node;
}

// Line plot of several series sharing one x axis. Points with null y are gaps.
function plot(series, { xlabel, ylabel, width = 640, height = 320 }) {
  const pad = { l: 60, r: 20, t: 15, b: 40 };
  const pts = series.flatMap((s) => s.points.filter((p) => p[1] !== null));
  const xs = pts.map((p) => p[0]);
  const ys = pts.map((p) => p[1]);
  const [x0, x1] = [Math.min(...xs), Math.max(...xs)];
  let [y0, y1] = [Math.min(...ys), Math.max(...ys)];
  if (y0 === y1) { y0 -= 0.5; y1 += 0.5; }
  const sx = (x) => pad.l + ((x - x0) / (x1 - x0 || 1)) * (width - pad.l - pad.r);
  const sy = (y) => height - pad.b - ((y - y0) / (y1 - y0)) * (height - pad.t - pad.b);
  const svg = el("svg", { width, height, viewBox: `0 0 ${width} ${height}` });
  for (let i = 0; i <= 4; i++) {
    const x = x0 + (i / 4) * (x1 - x0);
    const y = y0 + (i / 4) * (y1 - y0);
    svg.append(el("text", { x: sx(x), y: height - pad.b + 16, "text-anchor": "middle", "font-size": 11 }, +x.toPrecision(3)));
    svg.append(el("text", { x: pad.l - 6, y: sy(y) + 4, "text-anchor": "end", "font-size": 11 }, +y.toPrecision(3)));
    svg.append(el("line", { x1: pad.l, x2: width - pad.r, y1: sy(y), y2: sy(y), stroke: "#eee" }));
  }
  svg.append(el("text", { x: width / 2, y: height - 6, "text-anchor": "middle", "font-size": 12 }, xlabel));
  svg.append(el("text", { x: 14, y: height / 2, "text-anchor": "middle", "font-size": 12, transform: `rotate(-90 14 ${height / 2})` }, ylabel));
  series.forEach((s, i) => {
    let d = "";
    let pen = false;
    for (const [x, y] of s.points) {
      if (y === null) { pen = false; continue; }
      d += `${pen ? "L" : "M"}${sx(x).toFixed(1)},${sy(y).toFixed(1)}`;
      pen = true;
    }
    svg.append(el("path", { d, fill: "none", stroke: s.color, "stroke-width": 2 }));
    svg.append(el("text", { x: width - pad.r - 4, y: pad.t + 14 * (i + 1), "text-anchor": "end", "font-size": 12, fill: s.color }, s.name));
  });
  return svg;
}

function table(rows) {
  const t = document.createElement("table");
  for (const [k, v] of rows) {
    const tr = t.insertRow();
    tr.insertCell().textContent = k;
    tr.insertCell().textContent = typeof v === "number" ? +v.toPrecision(8) : v;
  }
  return t;
}

function show(target, ...nodes) {
  const box = document.getElementById(target);
  box.replaceChildren(...nodes);
}

function guard(target, f) {
  return (ev) => {
    ev.preventDefault();
    try {
      f(new FormData(ev.target));
    } catch (e) {
      const p = document.createElement("p");
      p.className = "err";
      p.textContent = String(e);
      show(target, p);
    }
  };
}

function curve(form) {
  const r = JSON.parse(risk_curve(
    form.get("name"), +form.get("p"), +form.get("alpha"), +form.get("radius"),
    +form.get("lo"), +form.get("hi"),
  ));
  const points = r.rows.map((row) => [Math.log2(row.n), Math.log2(row.risk)]);
  const note = document.createElement("p");
  note.textContent = `fitted slope of log risk against log n: ${r.slope?.toFixed(4) ?? "n/a"}; ` +
    `minimax slope: ${r.minimax_slope.toFixed(4)}`;
  const last = r.rows[r.rows.length - 1];
  show("curve-out",
    plot([{ name: form.get("name"), color: "#1f6fb2", points }], { xlabel: "log₂ n", ylabel: "log₂ worst-case risk" }),
    note,
    table([["largest n", last.n], ["worst member", last.worst], ["n·risk / 4M²", last.n_risk_over_4m2]]),
  );
}

function exponents(form) {
  const r = JSON.parse(rates(+form.get("p"), 0.05, 0.8, 0.01));
  const at = (key) => r.rows.map((row) => [row.alpha, row[key]]);
  show("rates-out", plot([
    { name: "r* (minimax)", color: "#1f6fb2", points: at("r_star") },
    { name: "r_q* (quadratic rules)", color: "#c0392b", points: at("r_q_star") },
  ], { xlabel: "α", ylabel: "exponent r in n^-r" }));
}

function bounds(form) {
  const r = JSON.parse(lower_bound(+form.get("m"), +form.get("k"), +form.get("n"), +form.get("c")));
  show("lb-out", table([
    ["chi-square affinity", r.affinity],
    ["4(1+(e−1)k/m)^k", r.bound],
    ["4e^(e−1)", r.limit],
    ["Δ = k/n", r.delta],
    ["ε² = c m / n²", r.eps2],
    ["Δ² − 2Δ√(affinity·ε²)", r.lower_bound],
  ]));
}

await init();
const wire = (id, out, f) => {
  const form = document.getElementById(id);
  form.addEventListener("submit", guard(out, f));
  form.requestSubmit();
};
wire("curve-form", "curve-out", curve);
wire("rates-form", "rates-out", exponents);
wire("lb-form", "lb-out", bounds);

import init, { solveTorus, compareModes, blockingCurve } from "./pkg/payload_te_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);

function fail(target, e) {
  target.innerHTML = `<span class="err">${String(e)}</span>`;
}

// Red for saturated edges, grey for idle ones.
function loadColor(u) {
  const t = Math.max(0, Math.min(1, u));
  return `rgb(${Math.round(160 + 95 * t)},${Math.round(160 * (1 - t))},${Math.round(160 * (1 - t))})`;
}

function drawTorus(view) {
  const ctx = $("torus").getContext("2d");
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  const pad = 50;
  const dx = (width - 2 * pad) / Math.max(1, view.cols - 1);
  const dy = (height - 2 * pad) / Math.max(1, view.rows - 1);
  const pos = (n) => [pad + (n % view.cols) * dx, pad + Math.floor(n / view.cols) * dy];
  const wraps = (a, b) => Math.abs(a[0] - b[0]) > dx * 1.5 || Math.abs(a[1] - b[1]) > dy * 1.5;

  for (const e of view.edges) {
    const a = pos(e.from), b = pos(e.to);
    ctx.strokeStyle = loadColor(e.utilization);
    ctx.lineWidth = 1 + 6 * e.utilization;
    // Offset the two directions so both stay visible.
    const nx = (b[1] - a[1]), ny = -(b[0] - a[0]);
    const len = Math.hypot(nx, ny) || 1;
    const ox = 4 * nx / len, oy = 4 * ny / len;
    ctx.beginPath();
    if (wraps(a, b)) {
      ctx.setLineDash([4, 4]);
      const mid = [(a[0] + b[0]) / 2 + (b[1] === a[1] ? 0 : 30), (a[1] + b[1]) / 2 + (b[0] === a[0] ? 0 : 30)];
      ctx.moveTo(a[0] + ox, a[1] + oy);
      ctx.quadraticCurveTo(mid[0], mid[1], b[0] + ox, b[1] + oy);
    } else {
      ctx.setLineDash([]);
      ctx.moveTo(a[0] + ox, a[1] + oy);
      ctx.lineTo(b[0] + ox, b[1] + oy);
    }
    ctx.stroke();
  }
  ctx.setLineDash([]);

  const roles = new Map();
  view.endpoints.forEach(([s, d], k) => {
    roles.set(s, `s${k}`);
    roles.set(d, `d${k}`);
  });
  for (let n = 0; n < view.rows * view.cols; n++) {
    const [x, y] = pos(n);
    ctx.fillStyle = roles.has(n) ? "#2a6" : "#fff";
    ctx.strokeStyle = "#333";
    ctx.lineWidth = 1;
    ctx.beginPath();
    ctx.arc(x, y, 14, 0, 2 * Math.PI);
    ctx.fill();
    ctx.stroke();
    ctx.fillStyle = "#000";
    ctx.font = "11px sans-serif";
    ctx.textAlign = "center";
    ctx.fillText(roles.get(n) ?? String(n), x, y + 4);
  }
}

function onSolve() {
  try {
    const view = JSON.parse(solveTorus(num("rows"), num("cols"), num("link"), num("lambda"), num("count")));
    const maxU = Math.max(...view.edges.map((e) => e.utilization));
    $("solveInfo").textContent =
      `min residual ${(view.objective_bps / 1e6).toFixed(3)} Mbit/s, ` +
      `max utilization ${(100 * maxU).toFixed(2)} %, bottleneck edge ${view.bottleneck}, ${view.pivots} pivots`;
    $("routing").textContent = view.routing_text;
    drawTorus(view);
  } catch (e) {
    fail($("solveInfo"), e);
  }
}

function fmtDelay(m) {
  if (m.mean_delay_s === null) return "n/a";
  return `${(m.mean_delay_s * 1e6).toFixed(2)} ± ${(m.delay_half_width_s * 1e6).toFixed(2)} µs`;
}

function onCompare() {
  $("compareOut").textContent = "running...";
  // Let the status text paint before the blocking call.
  setTimeout(() => {
    try {
      const v = JSON.parse(compareModes(num("buffer"), num("simLink"), num("simLambda"), num("mult"),
        num("horizon"), num("reps"), num("seed")));
      const row = (name, m) =>
        `<tr><th>${name}</th><td>${fmtDelay(m)}</td><td>${m.pli_pct.toFixed(3)} ± ${m.pli_half_width_pct.toFixed(3)} %</td></tr>`;
      $("compareOut").innerHTML =
        `<table><tr><th></th><th>mean delay</th><th>packet loss</th></tr>` +
        row("LP routing", v.proposed) + row(`${v.multiplier}× single bank`, v.baseline) + `</table>`;
    } catch (e) {
      fail($("compareOut"), e);
    }
  }, 10);
}

function onCurve() {
  const ctx = $("plot").getContext("2d");
  const { width, height } = ctx.canvas;
  ctx.clearRect(0, 0, width, height);
  let pts;
  try {
    pts = JSON.parse(blockingCurve(num("rhoMax"), num("capK"), 200));
  } catch (e) {
    ctx.fillStyle = "#b00";
    ctx.fillText(String(e), 10, 20);
    return;
  }
  const pad = 40;
  const rhoMax = pts[pts.length - 1].rho;
  const sx = (r) => pad + (width - 2 * pad) * r / rhoMax;
  const sy = (b) => height - pad - (height - 2 * pad) * b;
  ctx.strokeStyle = "#999";
  ctx.beginPath();
  ctx.moveTo(pad, pad);
  ctx.lineTo(pad, height - pad);
  ctx.lineTo(width - pad, height - pad);
  ctx.stroke();
  ctx.fillStyle = "#333";
  ctx.font = "11px sans-serif";
  ctx.fillText("1", pad - 14, pad + 4);
  ctx.fillText("0", pad - 14, height - pad + 4);
  ctx.fillText(rhoMax.toFixed(2), width - pad - 10, height - pad + 16);
  ctx.fillText("load", width / 2, height - pad + 28);
  ctx.strokeStyle = "#c33";
  ctx.lineWidth = 2;
  ctx.beginPath();
  pts.forEach((p, i) => (i ? ctx.lineTo(sx(p.rho), sy(p.blocking)) : ctx.moveTo(sx(p.rho), sy(p.blocking))));
  ctx.stroke();
}

await init();
$("status").textContent = "Ready.";
$("solve").addEventListener("click", onSolve);
$("compare").addEventListener("click", onCompare);
$("curve").addEventListener("click", onCurve);
onSolve();
onCurve();

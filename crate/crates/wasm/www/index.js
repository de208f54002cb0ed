import init, { Simulation, urnHistogram, betaMasses, loadPmf } from "./pkg/rill_wasm.js";

const $ = (id) => document.getElementById(id);
const fail = (e) => { $("error").textContent = String(e); };

function bars(canvas, values, overlay) {
  const ctx = canvas.getContext("2d");
  const { width: w, height: h } = canvas;
  ctx.clearRect(0, 0, w, h);
  const top = Math.max(...values, ...(overlay ?? [])) || 1;
  const bw = w / values.length;
  ctx.fillStyle = "#6a8caf";
  values.forEach((v, i) => ctx.fillRect(i * bw + 1, h - (v / top) * (h - 10), bw - 2, (v / top) * (h - 10)));
  if (overlay) {
    ctx.strokeStyle = "#c33";
    ctx.lineWidth = 2;
    ctx.beginPath();
    overlay.forEach((v, i) => {
      const x = (i + 0.5) * bw, y = h - (v / top) * (h - 10);
      i ? ctx.lineTo(x, y) : ctx.moveTo(x, y);
    });
    ctx.stroke();
  }
}

let sim = null;
let running = false;

function eta() {
  return 10 ** Number($("lat-eta").value);
}

function reset() {
  try {
    $("lat-eta-out").textContent = eta().toPrecision(3);
    sim = new Simulation(Number($("lat-width").value), Number($("lat-depth").value), eta(), 1);
    $("error").textContent = "";
    draw();
  } catch (e) {
    sim = null;
    fail(e);
  }
}

function draw() {
  const canvas = $("lat-canvas");
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  if (!sim) return;
  const w = Number($("lat-width").value), d = Number($("lat-depth").value);
  const dirs = sim.directions(), loads = sim.loads();
  const dx = canvas.width / (2 * w), dy = canvas.height / (d + 1);
  const peak = Math.max(...loads);
  ctx.strokeStyle = "#1d4f7a";
  for (let row = 1; row <= d; row++) {
    for (let col = 0; col < w; col++) {
      const i = (row - 1) * w + col;
      const x = (2 * col + ((row - 1) % 2) + 0.5) * dx, y = row * dy;
      ctx.lineWidth = 0.4 + 4 * Math.sqrt(loads[i] / peak);
      ctx.beginPath();
      ctx.moveTo(x, y);
      ctx.lineTo(x + (dirs[i] ? -dx : dx), y + dy);
      ctx.stroke();
    }
  }
  $("lat-time").textContent = sim.time();
}

function tick() {
  if (!running || !sim) return;
  try {
    sim.step(1);
    draw();
    requestAnimationFrame(tick);
  } catch (e) {
    running = false;
    fail(e);
  }
}

function sampleUrns() {
  try {
    const e = Number($("urn-eta").value), bins = 40;
    const h = urnHistogram(e, Number($("urn-draws").value), Number($("urn-count").value), bins, 7);
    bars($("urn-canvas"), Array.from(h), Array.from(betaMasses(e, bins)));
  } catch (e) {
    fail(e);
  }
}

function showPmf() {
  try {
    const k = Number($("pmf-depth").value);
    const p = Array.from(loadPmf(k));
    bars($("pmf-canvas"), p);
    const mean = p.reduce((s, v, i) => s + v * (i + 1), 0);
    $("pmf-note").textContent = `loads 1..${p.length}; P(1) = ${p[0].toFixed(4)}, mean = ${mean.toFixed(4)}`;
  } catch (e) {
    fail(e);
  }
}

await init();
for (const id of ["lat-width", "lat-depth", "lat-eta"]) $(id).addEventListener("change", reset);
$("lat-eta").addEventListener("input", reset);
$("lat-reset").addEventListener("click", reset);
$("lat-run").addEventListener("click", () => {
  running = !running;
  $("lat-run").textContent = running ? "pause" : "run";
  tick();
});
$("urn-go").addEventListener("click", sampleUrns);
$("pmf-go").addEventListener("click", showPmf);
reset();
sampleUrns();
showPmf();

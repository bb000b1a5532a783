import init, { gsvd_streams, dd_impulse_response, ber_sweep } from "./pkg/otfs_gsvd_web.js";

const $ = (id) => document.getElementById(id);
const num = (id) => Number($(id).value);
const COLORS = ["#1f77b4", "#d62728", "#2ca02c", "#ff7f0e", "#9467bd", "#8c564b", "#e377c2", "#17becf"];

function fail(canvas, err) {
  const ctx = canvas.getContext("2d");
  ctx.clearRect(0, 0, canvas.width, canvas.height);
  ctx.fillStyle = "#b00";
  ctx.font = "14px sans-serif";
  ctx.fillText(String(err), 10, 24);
}

function drawGsvd() {
  const canvas = $("g-plot");
  try {
    const s = JSON.parse(gsvd_streams(num("g-c"), num("g-g"), num("g-m"), num("g-n"), BigInt(num("g-seed"))));
    $("g-info").textContent =
      `Regime ${s.regime}: ${s.private1} private-1, ${s.common} common, ${s.private2} private-2 streams`;
    const ctx = canvas.getContext("2d");
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const q = s.gains1.length;
    const w = (canvas.width - 40) / q;
    const h = canvas.height - 30;
    for (let j = 0; j < q; j++) {
      const x = 30 + j * w;
      ctx.fillStyle = COLORS[0];
      ctx.fillRect(x, h - s.gains1[j] * h + 10, w / 2 - 1, s.gains1[j] * h);
      ctx.fillStyle = COLORS[1];
      ctx.fillRect(x + w / 2, h - s.gains2[j] * h + 10, w / 2 - 1, s.gains2[j] * h);
    }
    ctx.fillStyle = "black";
    ctx.font = "12px sans-serif";
    ctx.fillText("gain 1", 0, 14);
    ctx.fillText("stream index, user 1 (blue) and user 2 (red)", 30, canvas.height - 4);
  } catch (e) {
    $("g-info").textContent = "";
    fail(canvas, e);
  }
}

function drawImpulse() {
  const canvas = $("d-plot");
  try {
    const g = JSON.parse(dd_impulse_response(num("d-m"), num("d-n"), num("d-v"), BigInt(num("d-seed"))));
    const ctx = canvas.getContext("2d");
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const peak = Math.max(...g.magnitude, 1e-12);
    const cw = canvas.width / g.n;
    const ch = canvas.height / g.m;
    for (let l = 0; l < g.m; l++) {
      for (let k = 0; k < g.n; k++) {
        const v = Math.round(255 * (1 - g.magnitude[l * g.n + k] / peak));
        ctx.fillStyle = `rgb(${v},${v},255)`;
        ctx.fillRect(k * cw, l * ch, cw - 1, ch - 1);
      }
    }
  } catch (e) {
    fail(canvas, e);
  }
}

function drawBer() {
  const canvas = $("b-plot");
  try {
    const [a, step, b] = $("b-snr").value.split(":").map(Number);
    const recs = JSON.parse(ber_sweep($("b-scheme").value, num("b-c"), num("b-g"), a, step, b,
      num("b-frames"), num("b-rho"), BigInt(7)));
    const series = new Map();
    for (const r of recs) {
      const key = `${r.scheme} u${r.user} ${r.stream_class} #${r.stream_idx}`;
      if (!series.has(key)) series.set(key, []);
      series.get(key).push(r);
    }
    const ctx = canvas.getContext("2d");
    ctx.clearRect(0, 0, canvas.width, canvas.height);
    const left = 50, top = 10, pw = canvas.width - 280, ph = canvas.height - 40;
    const decades = 5;
    const x = (s) => left + ((s - a) / Math.max(b - a, 1e-9)) * pw;
    const y = (p) => top + (-Math.log10(p) / decades) * ph;
    ctx.strokeStyle = "#ddd";
    ctx.fillStyle = "black";
    ctx.font = "12px sans-serif";
    for (let d = 0; d <= decades; d++) {
      ctx.beginPath();
      ctx.moveTo(left, top + (d / decades) * ph);
      ctx.lineTo(left + pw, top + (d / decades) * ph);
      ctx.stroke();
      ctx.fillText(`1e-${d}`, 8, top + (d / decades) * ph + 4);
    }
    ctx.fillText("SNR (dB)", left + pw / 2 - 20, canvas.height - 6);
    let i = 0;
    for (const [key, pts] of series) {
      const color = COLORS[i % COLORS.length];
      ctx.strokeStyle = color;
      ctx.beginPath();
      let started = false;
      for (const r of pts) {
        if (r.ber <= 0) continue;
        if (started) ctx.lineTo(x(r.snr_db), y(r.ber));
        else ctx.moveTo(x(r.snr_db), y(r.ber));
        started = true;
      }
      ctx.stroke();
      ctx.fillStyle = color;
      ctx.fillText(key, left + pw + 12, top + 14 * i + 10);
      i++;
    }
    $("b-table").textContent = "scheme user class idx snr ber\n" + recs
      .map((r) => `${r.scheme} ${r.user} ${r.stream_class} ${r.stream_idx} ${r.snr_db} ${r.ber.toExponential(2)}`)
      .join("\n");
  } catch (e) {
    fail(canvas, e);
  }
}

await init();
$("g-run").onclick = drawGsvd;
$("d-run").onclick = drawImpulse;
$("b-run").onclick = drawBer;
drawGsvd();
drawImpulse();

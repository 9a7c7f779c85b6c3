import init, { blur, score, clusterPlanted } from "./pkg/saliency_clusters_web.js";

const N = 32;
let fixations = [];
let pred = new Float64Array(N * N);

function draw(canvas, values, w, h) {
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(w, h);
  values.forEach((v, i) => {
    const g = Math.round(255 * v);
    img.data.set([g, g, g, 255], 4 * i);
  });
  const tmp = new OffscreenCanvas(w, h);
  tmp.getContext("2d").putImageData(img, 0, 0);
  ctx.imageSmoothingEnabled = false;
  ctx.drawImage(tmp, 0, 0, canvas.width, canvas.height);
}

function cell(canvas, ev) {
  const r = canvas.getBoundingClientRect();
  return [
    Math.floor(((ev.clientY - r.top) / r.height) * N),
    Math.floor(((ev.clientX - r.left) / r.width) * N),
  ];
}

function refresh() {
  const sigma = Number(document.getElementById("sigma").value);
  document.getElementById("sigma-v").textContent = sigma;
  const mask = new Float64Array(N * N);
  for (let i = 0; i < fixations.length; i += 2) mask[fixations[i] * N + fixations[i + 1]] = 1;
  draw(document.getElementById("fix"), mask, N, N);
  draw(document.getElementById("pred"), pred, N, N);
  const table = document.getElementById("scores");
  if (fixations.length === 0) {
    draw(document.getElementById("blurred"), new Float64Array(N * N), N, N);
    table.innerHTML = "";
    return;
  }
  const pts = Uint32Array.from(fixations);
  const gt = blur(N, N, pts, sigma);
  draw(document.getElementById("blurred"), gt, N, N);
  try {
    const s = JSON.parse(score(N, N, pred, gt, pts));
    table.innerHTML =
      "<tr><th>CC</th><th>SIM</th><th>AUC-Judd</th><th>NSS</th></tr><tr>" +
      [s.cc, s.sim, s.auc_judd, s.nss].map((v) => `<td>${v.toFixed(4)}</td>`).join("") +
      "</tr>";
  } catch (e) {
    table.innerHTML = `<tr><td>${e.message}</td></tr>`;
  }
}

function paint(ev) {
  const [r, c] = cell(ev.target, ev);
  for (let dr = -2; dr <= 2; dr++) {
    for (let dc = -2; dc <= 2; dc++) {
      const rr = r + dr, cc = c + dc;
      if (rr < 0 || cc < 0 || rr >= N || cc >= N) continue;
      pred[rr * N + cc] = Math.min(1, pred[rr * N + cc] + 0.35 * Math.exp(-(dr * dr + dc * dc) / 4));
    }
  }
  refresh();
}

function runClustering() {
  const v = (id) => Number(document.getElementById(id).value);
  const out = document.getElementById("clusters");
  try {
    const r = JSON.parse(clusterPlanted(v("groups"), v("spg"), v("images"), v("w"), v("seed")));
    const q = r.modularity === null ? "n/a" : r.modularity.toFixed(4);
    out.innerHTML =
      `<p>${r.clusters.length} clusters, modularity ${q}, ` +
      `${r.recovered ? "planted groups recovered" : "groups not fully recovered"}</p>` +
      r.clusters
        .map((m, i) =>
          `<div>cluster ${i}: ` +
          m.map((s) => `<span class="g${s.group % 5}">${s.subject}</span>`).join(" ") +
          "</div>")
        .join("");
    draw(document.getElementById("example"), r.example.subject, r.width, r.height);
  } catch (e) {
    out.textContent = e.message;
  }
}

await init();
document.getElementById("fix").addEventListener("click", (ev) => {
  fixations.push(...cell(ev.target, ev));
  refresh();
});
document.getElementById("pred").addEventListener("click", paint);
document.getElementById("sigma").addEventListener("input", refresh);
document.getElementById("clear").addEventListener("click", () => {
  fixations = [];
  pred = new Float64Array(N * N);
  refresh();
});
document.getElementById("cluster").addEventListener("click", runClustering);
refresh();
runClustering();

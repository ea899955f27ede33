import init, { Demo } from "./pkg/scatter_crypt_web.js";

const $ = (id) => document.getElementById(id);
let demo;
let imageSeed = 1;
let attackSeed = 1;

function draw(id, pixels, w, h) {
  const canvas = $(id);
  canvas.width = w;
  canvas.height = h;
  const ctx = canvas.getContext("2d");
  const img = ctx.createImageData(w, h);
  for (let i = 0; i < w * h; i++) {
    const v = Math.round(255 * pixels[i]);
    img.data.set([v, v, v, 255], 4 * i);
  }
  ctx.putImageData(img, 0, 0);
}

function show(rec) {
  draw("recon", rec.pixels, demo.width, demo.height);
  $("ssim").value = rec.ssim.toFixed(3);
  rec.free();
}

function sliderPhases() {
  return Float64Array.from($("sliders").querySelectorAll("input"), (s) => Number(s.value));
}

function decrypt() {
  show(demo.decrypt_with_phases(sliderPhases()));
  $("sliders").querySelectorAll("output").forEach((o, i) => {
    o.value = sliderPhases()[i].toFixed(2);
  });
}

function buildSliders() {
  const box = $("sliders");
  box.replaceChildren();
  for (const _ of demo.key_phases()) {
    const label = document.createElement("label");
    const input = Object.assign(document.createElement("input"), {
      type: "range", min: -1, max: 1, step: 0.01, value: 0,
    });
    input.addEventListener("input", decrypt);
    label.append(input, " ", document.createElement("output"));
    box.append(label);
  }
  $("subset").textContent = Array.from(demo.subset()).join(", ");
}

function useCorrectKey() {
  const phases = demo.key_phases();
  $("sliders").querySelectorAll("input").forEach((s, i) => { s.value = phases[i]; });
  decrypt();
}

function refresh() {
  draw("plain", demo.plaintext(), demo.width, demo.height);
  draw("cipher", demo.ciphertext(), demo.hologram_width, demo.hologram_height);
  buildSliders();
  decrypt();
  $("attack-result").value = "";
}

function guarded(fn) {
  return () => {
    try {
      $("status").textContent = "";
      fn();
    } catch (e) {
      $("status").textContent = String(e);
    }
  };
}

await init();
try {
  demo = new Demo(7, 8, imageSeed);
  $("status").textContent = "";
  refresh();
} catch (e) {
  $("status").textContent = String(e);
}

$("correct").addEventListener("click", guarded(useCorrectKey));
$("next").addEventListener("click", guarded(() => {
  demo.encrypt(++imageSeed);
  refresh();
}));
$("attack").addEventListener("click", guarded(() => {
  const trials = Math.max(1, Number($("trials").value) | 0);
  const best = demo.random_attack(trials, attackSeed++);
  $("attack-result").value = `best of ${trials}: SSIM ${best.ssim.toFixed(3)}`;
  show(best);
}));

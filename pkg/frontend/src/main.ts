/** DOM wiring: upload, slider, live preview, pin strip, composite export. */

import { fetchModelInfo, httpTransport } from "./api.js";
import {
  DEFAULT_ALPHA,
  DEFAULT_MAX_ALPHA,
  Scheduler,
  StudioController,
  alphaWire,
  stripLayout,
} from "./controller.js";

const EXTENDED_MAX_ALPHA = 30;

const browserScheduler: Scheduler = {
  schedule: (fn, ms) => window.setTimeout(fn, ms),
  cancel: (id) => window.clearTimeout(id),
};

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

function pngUrl(bytes: Uint8Array): string {
  return URL.createObjectURL(new Blob([bytes as BlobPart], { type: "image/png" }));
}

async function loadImageElement(bytes: Uint8Array): Promise<HTMLImageElement> {
  const img = new Image();
  const url = pngUrl(bytes);
  await new Promise<void>((resolve, reject) => {
    img.onload = () => resolve();
    img.onerror = () => reject(new Error("cannot decode pin image"));
    img.src = url;
  });
  return img;
}

function main(): void {
  const base = (window.location.origin && window.location.origin !== "null")
    ? window.location.origin
    : "http://127.0.0.1:8765";
  const controller = new StudioController(httpTransport(base), browserScheduler);

  const upload = el<HTMLInputElement>("upload");
  const slider = el<HTMLInputElement>("alpha-slider");
  const alphaLabel = el<HTMLSpanElement>("alpha-value");
  const extended = el<HTMLInputElement>("extended-range");
  const preview = el<HTMLImageElement>("preview");
  const result = el<HTMLImageElement>("result");
  const banner = el<HTMLDivElement>("error-banner");
  const pinButton = el<HTMLButtonElement>("pin");
  const exportButton = el<HTMLButtonElement>("export");
  const strip = el<HTMLDivElement>("pin-strip");
  const spinner = el<HTMLSpanElement>("busy");
  const modelLine = el<HTMLDivElement>("model-info");

  slider.min = "0";
  slider.max = String(DEFAULT_MAX_ALPHA);
  slider.step = "0.1";
  slider.value = String(DEFAULT_ALPHA);

  fetchModelInfo(base)
    .then((info) => {
      modelLine.textContent =
        `model ${info.checkpoint_crc32}: widths ${info.widths.join("/")}, ` +
        `${info.residual_blocks} residual blocks, trained grid [${info.alpha_min}, ${info.alpha_max}], ` +
        `serving at ${info.image_size}x${info.image_size}`;
    })
    .catch(() => {
      modelLine.textContent = `service not reachable at ${base}`;
    });

  upload.addEventListener("change", () => {
    const file = upload.files && upload.files[0];
    if (!file) return;
    file.arrayBuffer().then((buf) => {
      const bytes = new Uint8Array(buf);
      preview.src = pngUrl(bytes);
      controller.setImage(bytes);
    });
  });

  slider.addEventListener("input", () => {
    controller.setAlpha(parseFloat(slider.value));
  });

  extended.addEventListener("change", () => {
    const max = extended.checked ? EXTENDED_MAX_ALPHA : DEFAULT_MAX_ALPHA;
    slider.max = String(max);
    controller.setMaxAlpha(max);
  });

  pinButton.addEventListener("click", () => controller.pinCurrent());

  exportButton.addEventListener("click", async () => {
    const pins = controller.getPins();
    if (pins.length === 0) return;
    const images = await Promise.all(pins.map((p) => loadImageElement(p.image)));
    const layout = stripLayout(images.map((im) => im.naturalWidth));
    const height = Math.max(...images.map((im) => im.naturalHeight));
    const canvas = document.createElement("canvas");
    canvas.width = layout.totalWidth;
    canvas.height = height;
    const ctx = canvas.getContext("2d");
    if (!ctx) return;
    images.forEach((im, i) => ctx.drawImage(im, layout.offsets[i], 0));
    const link = document.createElement("a");
    link.download = "strength_strip.png";
    link.href = canvas.toDataURL("image/png");
    link.click();
  });

  controller.subscribe(() => {
    alphaLabel.textContent = alphaWire(controller.getAlpha());
    spinner.style.visibility = controller.requestInFlight() ? "visible" : "hidden";
    const err = controller.getError();
    banner.textContent = err ?? "";
    banner.style.display = err ? "block" : "none";
    const shown = controller.getDisplayedImage();
    if (shown) {
      result.src = pngUrl(shown);
      pinButton.disabled = false;
    } else {
      pinButton.disabled = true;
    }
    strip.replaceChildren(
      ...controller.getPins().map((pin) => {
        const cell = document.createElement("figure");
        const img = document.createElement("img");
        img.src = pngUrl(pin.image);
        const cap = document.createElement("figcaption");
        cap.textContent = `alpha ${alphaWire(pin.alpha)}`;
        cell.append(img, cap);
        return cell;
      }),
    );
    exportButton.disabled = controller.getPins().length === 0;
  });
}

window.addEventListener("DOMContentLoaded", main);

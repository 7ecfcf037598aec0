/** HTTP bindings to the stylization service. */

import type { StylizeTransport } from "./controller.js";

export interface ModelInfo {
  widths: number[];
  residual_blocks: number;
  alpha_min: number;
  alpha_max: number;
  image_size: number;
  checkpoint_crc32: string;
  training_seed: number | null;
}

export function httpTransport(baseUrl: string): StylizeTransport {
  return {
    async stylize(image: Uint8Array, alphaWire: string): Promise<Uint8Array> {
      const resp = await fetch(`${baseUrl}/api/stylize?alpha=${alphaWire}`, {
        method: "POST",
        headers: { "Content-Type": "image/png" },
        body: image as BodyInit,
      });
      if (!resp.ok) {
        let message = `service error ${resp.status}`;
        try {
          const body = await resp.json();
          if (body && typeof body.error === "string") message = body.error;
        } catch {
          // non-JSON error body; keep the status message
        }
        throw new Error(message);
      }
      return new Uint8Array(await resp.arrayBuffer());
    },
  };
}

export async function fetchModelInfo(baseUrl: string): Promise<ModelInfo> {
  const resp = await fetch(`${baseUrl}/api/model`);
  if (!resp.ok) throw new Error(`service error ${resp.status}`);
  return (await resp.json()) as ModelInfo;
}

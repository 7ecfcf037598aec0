/**
 * State machine behind the strength studio.
 *
 * All behavior that matters lives here, framework-free: slider values snap
 * to the 0.1 grid, a debounce window collapses a drag into one request,
 * and every response carries its request id so a stale arrival can never
 * overwrite a newer result.  The DOM layer (main.ts) only renders this
 * state; tests drive the controller with a fake clock and transport.
 */

export interface StylizeTransport {
  /** POST the image at the given wire-format strength; resolves to PNG bytes. */
  stylize(image: Uint8Array, alphaWire: string): Promise<Uint8Array>;
}

export interface Scheduler {
  schedule(fn: () => void, delayMs: number): number;
  cancel(id: number): void;
}

export interface Pin {
  alpha: number;
  image: Uint8Array;
}

export interface StudioOptions {
  debounceMs?: number;
  maxAlpha?: number;
}

export const DEFAULT_DEBOUNCE_MS = 150;
export const DEFAULT_MAX_ALPHA = 10;
export const DEFAULT_ALPHA = 1.0;

/** Clamp to [0, maxAlpha] and snap onto the 0.1 training grid. */
export function snapToGrid(raw: number, maxAlpha: number = DEFAULT_MAX_ALPHA): number {
  const clamped = Math.min(Math.max(raw, 0), maxAlpha);
  return Math.round(clamped * 10) / 10;
}

/** Wire format: always an exact tenth, e.g. "2.5" or "10.0". */
export function alphaWire(alpha: number): string {
  return alpha.toFixed(1);
}

/** Side-by-side composite layout; total width is the sum of entry widths. */
export function stripLayout(widths: number[]): { offsets: number[]; totalWidth: number } {
  const offsets: number[] = [];
  let x = 0;
  for (const w of widths) {
    offsets.push(x);
    x += w;
  }
  return { offsets, totalWidth: x };
}

export class StudioController {
  private transport: StylizeTransport;
  private scheduler: Scheduler;
  private debounceMs: number;
  private maxAlpha: number;

  private image: Uint8Array | null = null;
  private alpha: number = DEFAULT_ALPHA;
  private displayedImage: Uint8Array | null = null;
  private displayedAlpha: number | null = null;
  private pins: Pin[] = [];
  private error: string | null = null;

  private debounceId: number | null = null;
  private latestRequestId = 0;
  private settledRequestId = 0;
  private listeners: Array<() => void> = [];

  constructor(transport: StylizeTransport, scheduler: Scheduler, options: StudioOptions = {}) {
    this.transport = transport;
    this.scheduler = scheduler;
    this.debounceMs = options.debounceMs ?? DEFAULT_DEBOUNCE_MS;
    this.maxAlpha = options.maxAlpha ?? DEFAULT_MAX_ALPHA;
  }

  // -- observers -----------------------------------------------------------

  subscribe(listener: () => void): void {
    this.listeners.push(listener);
  }

  private notify(): void {
    for (const fn of this.listeners) fn();
  }

  getAlpha(): number {
    return this.alpha;
  }

  getDisplayedImage(): Uint8Array | null {
    return this.displayedImage;
  }

  getDisplayedAlpha(): number | null {
    return this.displayedAlpha;
  }

  getPins(): readonly Pin[] {
    return this.pins;
  }

  getError(): string | null {
    return this.error;
  }

  hasImage(): boolean {
    return this.image !== null;
  }

  requestInFlight(): boolean {
    return this.latestRequestId > this.settledRequestId;
  }

  setMaxAlpha(maxAlpha: number): void {
    this.maxAlpha = maxAlpha;
    if (this.alpha > maxAlpha) this.setAlpha(maxAlpha);
  }

  // -- inputs ---------------------------------------------------------------

  /** A fresh upload; the previous result and pins no longer apply. */
  setImage(bytes: Uint8Array): void {
    this.image = bytes;
    this.displayedImage = null;
    this.displayedAlpha = null;
    this.pins = [];
    this.error = null;
    this.scheduleSend();
    this.notify();
  }

  /**
   * Slider movement.  Snaps to the grid and (re)arms the debounce window;
   * only the final position of a drag produces a request.
   */
  setAlpha(raw: number): void {
    this.alpha = snapToGrid(raw, this.maxAlpha);
    this.scheduleSend();
    this.notify();
  }

  /** Pin the current result; ascending by alpha, re-pinning replaces. */
  pinCurrent(): void {
    if (this.displayedImage === null || this.displayedAlpha === null) return;
    const pin: Pin = { alpha: this.displayedAlpha, image: this.displayedImage };
    const existing = this.pins.findIndex((p) => p.alpha === pin.alpha);
    if (existing >= 0) {
      this.pins[existing] = pin;
    } else {
      this.pins.push(pin);
      this.pins.sort((a, b) => a.alpha - b.alpha);
    }
    this.notify();
  }

  // -- request pipeline ------------------------------------------------------

  private scheduleSend(): void {
    if (this.image === null) return;
    if (this.debounceId !== null) this.scheduler.cancel(this.debounceId);
    this.debounceId = this.scheduler.schedule(() => {
      this.debounceId = null;
      this.send();
    }, this.debounceMs);
  }

  private send(): void {
    if (this.image === null) return;
    const id = ++this.latestRequestId;
    const requestAlpha = this.alpha;
    this.transport.stylize(this.image, alphaWire(requestAlpha)).then(
      (bytes) => {
        this.settledRequestId = Math.max(this.settledRequestId, id);
        if (id !== this.latestRequestId) return; // stale: a newer request exists
        this.displayedImage = bytes;
        this.displayedAlpha = requestAlpha;
        this.error = null;
        this.notify();
      },
      (err) => {
        this.settledRequestId = Math.max(this.settledRequestId, id);
        if (id !== this.latestRequestId) return;
        // keep the previous image; surface the failure inline
        this.error = err instanceof Error ? err.message : String(err);
        this.notify();
      },
    );
  }
}

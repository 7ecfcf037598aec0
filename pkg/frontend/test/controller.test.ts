import { describe, expect, it } from "vitest";

import {
  DEFAULT_DEBOUNCE_MS,
  Scheduler,
  StudioController,
  StylizeTransport,
  alphaWire,
  snapToGrid,
  stripLayout,
} from "../src/controller.js";

/** Manual clock: timers fire only when advance() crosses their deadline. */
class FakeScheduler implements Scheduler {
  private now = 0;
  private nextId = 1;
  private timers = new Map<number, { due: number; fn: () => void }>();

  schedule(fn: () => void, delayMs: number): number {
    const id = this.nextId++;
    this.timers.set(id, { due: this.now + delayMs, fn });
    return id;
  }

  cancel(id: number): void {
    this.timers.delete(id);
  }

  advance(ms: number): void {
    this.now += ms;
    for (const [id, timer] of [...this.timers.entries()].sort((a, b) => a[1].due - b[1].due)) {
      if (timer.due <= this.now) {
        this.timers.delete(id);
        timer.fn();
      }
    }
  }
}

interface SentRequest {
  image: Uint8Array;
  alphaWire: string;
  resolve: (bytes: Uint8Array) => void;
  reject: (err: Error) => void;
}

/** Captures every request; the test decides when and in what order to answer. */
class FakeTransport implements StylizeTransport {
  calls: SentRequest[] = [];

  stylize(image: Uint8Array, alpha: string): Promise<Uint8Array> {
    return new Promise((resolve, reject) => {
      this.calls.push({ image, alphaWire: alpha, resolve, reject });
    });
  }
}

function setup(options: { debounceMs?: number; maxAlpha?: number } = {}) {
  const transport = new FakeTransport();
  const scheduler = new FakeScheduler();
  const controller = new StudioController(transport, scheduler, options);
  return { transport, scheduler, controller };
}

const IMAGE = new Uint8Array([1, 2, 3, 4]);

const flush = () => new Promise<void>((resolve) => setTimeout(resolve, 0));

describe("grid snapping and wire format", () => {
  it("snaps slider values onto exact tenths", () => {
    expect(snapToGrid(2.4999999)).toBe(2.5);
    expect(snapToGrid(0.049)).toBe(0.0);
    expect(snapToGrid(11.7)).toBe(10.0);
    expect(snapToGrid(-3)).toBe(0.0);
  });

  it("formats wire alphas with one decimal", () => {
    expect(alphaWire(2.5)).toBe("2.5");
    expect(alphaWire(10)).toBe("10.0");
    expect(alphaWire(0)).toBe("0.0");
  });
});

describe("slider-to-wire contract (acceptance 12)", () => {
  it("a drag to 2.5 issues exactly one request after the debounce, with alpha=2.5", async () => {
    const { transport, scheduler, controller } = setup();
    controller.setImage(IMAGE);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    transport.calls[0].resolve(new Uint8Array([9]));
    await flush();
    transport.calls.length = 0;

    // rapid drag: many positions inside one debounce window
    for (const v of [0.3, 0.9, 1.4, 1.9, 2.2, 2.5]) {
      controller.setAlpha(v);
      scheduler.advance(40); // under the 150 ms quiescence threshold
    }
    expect(transport.calls.length).toBe(0);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    expect(transport.calls.length).toBe(1);
    expect(transport.calls[0].alphaWire).toBe("2.5");
  });

  it("a rapid 0 -> 10 drag produces a single request with alpha=10", () => {
    const { transport, scheduler, controller } = setup();
    controller.setImage(IMAGE);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    transport.calls.length = 0;

    for (let v = 0; v <= 10.01; v += 0.1) {
      controller.setAlpha(v);
      scheduler.advance(1);
    }
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    expect(transport.calls.length).toBe(1);
    expect(transport.calls[0].alphaWire).toBe("10.0");
  });

  it("never sends before an image is uploaded", () => {
    const { transport, scheduler, controller } = setup();
    controller.setAlpha(3.0);
    scheduler.advance(10 * DEFAULT_DEBOUNCE_MS);
    expect(transport.calls.length).toBe(0);
  });

  it("stale responses never render (out-of-order delivery)", async () => {
    const { transport, scheduler, controller } = setup();
    controller.setImage(IMAGE);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    transport.calls.length = 0;

    controller.setAlpha(1.0);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    controller.setAlpha(2.0);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    expect(transport.calls.length).toBe(2);

    const older = new Uint8Array([1, 1, 1]);
    const newer = new Uint8Array([2, 2, 2]);
    transport.calls[1].resolve(newer); // later request answers first
    await flush();
    expect(controller.getDisplayedImage()).toBe(newer);

    transport.calls[0].resolve(older); // stale arrival
    await flush();
    expect(controller.getDisplayedImage()).toBe(newer);
    expect(controller.getDisplayedAlpha()).toBe(2.0);
  });
});

describe("displayed bytes equal response bytes (acceptance 13)", () => {
  it("shows exactly the bytes the service returned, for every rendered alpha", async () => {
    const { transport, scheduler, controller } = setup();
    controller.setImage(IMAGE);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);

    const responses = new Map<string, Uint8Array>();
    for (const [i, alpha] of [0.0, 2.5, 10.0].entries()) {
      if (i > 0) {
        controller.setAlpha(alpha);
        scheduler.advance(DEFAULT_DEBOUNCE_MS);
      }
      const call = transport.calls[transport.calls.length - 1];
      const body = new Uint8Array([i, 42, i * 7]);
      responses.set(call.alphaWire, body);
      call.resolve(body);
      await flush();
      const shown = controller.getDisplayedImage();
      expect(shown).toBe(body);
      expect([...shown!]).toEqual([...responses.get(call.alphaWire)!]);
    }
  });

  it("keeps the previous image and raises a banner on service errors", async () => {
    const { transport, scheduler, controller } = setup();
    controller.setImage(IMAGE);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    const good = new Uint8Array([5]);
    transport.calls[0].resolve(good);
    await flush();

    controller.setAlpha(9.9);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    transport.calls[1].reject(new Error("invalid alpha"));
    await flush();
    expect(controller.getDisplayedImage()).toBe(good);
    expect(controller.getError()).toBe("invalid alpha");

    // a later success clears the banner
    controller.setAlpha(1.5);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    transport.calls[2].resolve(new Uint8Array([6]));
    await flush();
    expect(controller.getError()).toBeNull();
  });
});

describe("pinned sweep strip", () => {
  async function renderAt(env: ReturnType<typeof setup>, alpha: number, body: Uint8Array) {
    env.controller.setAlpha(alpha);
    env.scheduler.advance(DEFAULT_DEBOUNCE_MS);
    env.transport.calls[env.transport.calls.length - 1].resolve(body);
    await flush();
  }

  it("orders pins by alpha ascending and replaces duplicates", async () => {
    const env = setup();
    env.controller.setImage(IMAGE);
    env.scheduler.advance(DEFAULT_DEBOUNCE_MS);
    env.transport.calls[0].resolve(new Uint8Array([0]));
    await flush();

    await renderAt(env, 10.0, new Uint8Array([10]));
    env.controller.pinCurrent();
    await renderAt(env, 0.1, new Uint8Array([1]));
    env.controller.pinCurrent();
    await renderAt(env, 1.0, new Uint8Array([2]));
    env.controller.pinCurrent();

    expect(env.controller.getPins().map((p) => p.alpha)).toEqual([0.1, 1.0, 10.0]);

    await renderAt(env, 1.0, new Uint8Array([99]));
    env.controller.pinCurrent(); // re-pin replaces, still 3 entries
    const pins = env.controller.getPins();
    expect(pins.length).toBe(3);
    expect([...pins[1].image]).toEqual([99]);
  });

  it("pinning without a rendered result is a no-op", () => {
    const { controller } = setup();
    controller.pinCurrent();
    expect(controller.getPins().length).toBe(0);
  });

  it("export layout width is the sum of entry widths", () => {
    const { offsets, totalWidth } = stripLayout([48, 48, 64]);
    expect(totalWidth).toBe(160);
    expect(offsets).toEqual([0, 48, 96]);
  });
});

describe("extended range toggle", () => {
  it("clamps to 10 by default and allows more when extended", () => {
    const { transport, scheduler, controller } = setup();
    controller.setImage(IMAGE);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    transport.calls.length = 0;

    controller.setAlpha(14.0);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    expect(transport.calls[0].alphaWire).toBe("10.0");

    controller.setMaxAlpha(30);
    controller.setAlpha(14.0);
    scheduler.advance(DEFAULT_DEBOUNCE_MS);
    expect(transport.calls[1].alphaWire).toBe("14.0");
  });
});

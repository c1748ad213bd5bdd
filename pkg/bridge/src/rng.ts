/**
 * Seeded PRNG used everywhere randomness appears in the bridge.
 * Math.random is never touched, so identical inputs give identical files.
 */

/** FNV-1a 32-bit hash, used to turn string seeds into integer state. */
export function hashString(text: string): number {
  let h = 0x811c9dc5;
  for (let i = 0; i < text.length; i++) {
    h ^= text.charCodeAt(i);
    h = Math.imul(h, 0x01000193);
  }
  return h >>> 0;
}

export class Rng {
  private state: number;

  constructor(seed: number | string) {
    this.state = (typeof seed === "string" ? hashString(seed) : seed) >>> 0;
    // mulberry32 degenerates briefly from state 0; nudge to a fixed odd word
    if (this.state === 0) this.state = 0x9e3779b9;
  }

  /** Uniform draw in [0, 1). mulberry32 core. */
  next(): number {
    this.state = (this.state + 0x6d2b79f5) >>> 0;
    let t = this.state;
    t = Math.imul(t ^ (t >>> 15), t | 1);
    t ^= t + Math.imul(t ^ (t >>> 7), t | 61);
    return ((t ^ (t >>> 14)) >>> 0) / 4294967296;
  }

  /** Integer in [0, bound). */
  int(bound: number): number {
    if (!Number.isInteger(bound) || bound <= 0) {
      throw new Error(`int() needs a positive integer bound, got ${bound}`);
    }
    return Math.floor(this.next() * bound);
  }

  /** Standard normal via Box-Muller; no spare caching, one draw per call. */
  gauss(): number {
    let u = this.next();
    if (u < 1e-12) u = 1e-12;
    const v = this.next();
    return Math.sqrt(-2 * Math.log(u)) * Math.cos(2 * Math.PI * v);
  }

  /** In-place Fisher-Yates shuffle; returns the same array. */
  shuffle<T>(items: T[]): T[] {
    for (let i = items.length - 1; i > 0; i--) {
      const j = this.int(i + 1);
      const tmp = items[i];
      items[i] = items[j];
      items[j] = tmp;
    }
    return items;
  }
}

/**
 * Coalescing rate limiter for outbound pose updates: at most `maxPerSecond`
 * sends, always ending with the newest value.  Bursts collapse to an
 * immediate send plus one trailing send per interval.
 *
 * The clock and timer are injectable so the contract is testable without
 * real time.
 */

export interface TimerHooks {
  now(): number; // milliseconds
  setTimeout(fn: () => void, ms: number): unknown;
  clearTimeout(handle: unknown): void;
}

const REAL_TIMERS: TimerHooks = {
  now: () => Date.now(),
  setTimeout: (fn, ms) => setTimeout(fn, ms),
  clearTimeout: (h) => clearTimeout(h as ReturnType<typeof setTimeout>),
};

export class CoalescingThrottle<T> {
  private readonly intervalMs: number;
  private lastSent = -Infinity;
  private pending: { value: T } | null = null;
  private timer: unknown = null;

  constructor(
    private readonly send: (value: T) => void,
    maxPerSecond = 30,
    private readonly timers: TimerHooks = REAL_TIMERS,
  ) {
    this.intervalMs = 1000 / maxPerSecond;
  }

  push(value: T): void {
    const now = this.timers.now();
    if (now - this.lastSent >= this.intervalMs) {
      this.lastSent = now;
      this.send(value);
      return;
    }
    this.pending = { value };
    if (this.timer === null) {
      const wait = this.lastSent + this.intervalMs - now;
      this.timer = this.timers.setTimeout(() => this.flush(), wait);
    }
  }

  private flush(): void {
    this.timer = null;
    if (this.pending === null) return;
    this.lastSent = this.timers.now();
    const { value } = this.pending;
    this.pending = null;
    this.send(value);
  }

  dispose(): void {
    if (this.timer !== null) {
      this.timers.clearTimeout(this.timer);
      this.timer = null;
    }
    this.pending = null;
  }
}

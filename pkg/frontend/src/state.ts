/**
 * Console state machine, kept free of DOM and network so every contract
 * is unit-testable: pose edits are the only source of outbound messages,
 * stale frames are dropped by id, malformed payloads raise a banner and
 * ask the transport to resubscribe.
 */

import { diceByBranch } from "./dice.js";
import {
  applyManeuver,
  identityPose,
  snapToSweepFrame,
  type Maneuver,
} from "./maneuvers.js";
import {
  parseFrame,
  ProtocolError,
  type Frame,
  type PoseMatrix,
  type ServiceMeta,
} from "./protocol.js";

export interface OverlayToggles {
  prediction: boolean;
  groundTruth: boolean;
  difference: boolean;
}

export interface ConsoleHooks {
  /** Called (already throttled by the caller) for each outbound pose. */
  sendPose(pose: PoseMatrix): void;
  /** Tear down and re-open the stream after a malformed payload. */
  resubscribe(): void;
  /** Re-render whenever displayed frame / banner / status change. */
  onChange(): void;
}

interface FrameHeader {
  id: number;
  pose: PoseMatrix;
}

export class ConsoleState {
  meta: ServiceMeta | null = null;
  connected = false;
  pose: PoseMatrix = identityPose();
  overlays: OverlayToggles = { prediction: true, groundTruth: true, difference: false };
  banner: string | null = null;
  displayed: Frame | null = null;
  /** Pose echoed by the server for the displayed frame. */
  displayedPose: PoseMatrix | null = null;
  dice: number[] | null = null;

  private pendingHeader: FrameHeader | null = null;

  constructor(private readonly hooks: ConsoleHooks) {}

  setMeta(meta: ServiceMeta): void {
    this.meta = meta;
    this.hooks.onChange();
  }

  setConnected(connected: boolean): void {
    this.connected = connected;
    if (connected) this.banner = null;
    this.hooks.onChange();
  }

  /** Steering is ignored while disconnected; otherwise it is the only
   * thing that emits a pose update. */
  steer(m: Maneuver): void {
    if (!this.connected) return;
    this.pose = applyManeuver(this.pose, m);
    this.hooks.sendPose(this.pose);
    this.hooks.onChange();
  }

  snapToFrame(k: number): void {
    if (!this.connected || this.meta === null) return;
    this.pose = snapToSweepFrame(this.meta, k);
    this.hooks.sendPose(this.pose);
    this.hooks.onChange();
  }

  toggleOverlay(name: keyof OverlayToggles): void {
    this.overlays[name] = !this.overlays[name];
    this.hooks.onChange();
  }

  /** JSON half of a stream message: {id, pose} or {error}. */
  onStreamJson(doc: unknown): void {
    const d = doc as { id?: number; pose?: PoseMatrix; error?: string };
    if (typeof d?.error === "string") {
      this.showBanner(`server rejected pose: ${d.error}`);
      return;
    }
    if (typeof d?.id !== "number" || !Array.isArray(d?.pose)) {
      this.malformed("malformed frame header");
      return;
    }
    this.pendingHeader = { id: d.id, pose: d.pose };
  }

  /** Binary half of a stream message; pairs with the preceding header. */
  onStreamBinary(payload: ArrayBuffer): void {
    if (this.meta === null || this.pendingHeader === null) {
      this.malformed("frame payload without a header");
      return;
    }
    const header = this.pendingHeader;
    this.pendingHeader = null;
    let frame: Frame;
    try {
      frame = parseFrame(payload, this.meta);
    } catch (err) {
      if (err instanceof ProtocolError) {
        this.malformed(err.message);
        return;
      }
      throw err;
    }
    if (frame.id !== header.id) {
      this.malformed(`frame id ${frame.id} does not match header id ${header.id}`);
      return;
    }
    if (this.displayed !== null && frame.id < this.displayed.id) {
      return; // stale: an older frame arriving after a newer one
    }
    this.displayed = frame;
    this.displayedPose = header.pose;
    this.dice = diceByBranch(frame.pred, frame.gt);
    this.banner = null;
    this.hooks.onChange();
  }

  private malformed(message: string): void {
    this.pendingHeader = null;
    this.showBanner(message);
    this.hooks.resubscribe();
  }

  private showBanner(message: string): void {
    this.banner = message;
    this.hooks.onChange();
  }
}

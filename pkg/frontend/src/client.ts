/**
 * Transport wiring: fetch /meta, keep one WebSocket to /stream, forward
 * its messages into the ConsoleState, and send throttled pose updates.
 * The socket factory is injectable for tests.
 */

import { poseMessage, type PoseMatrix, parseMeta, type ServiceMeta } from "./protocol.js";
import type { ConsoleState } from "./state.js";
import { CoalescingThrottle } from "./throttle.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onopen: (() => void) | null;
  onclose: (() => void) | null;
  onmessage: ((event: { data: unknown }) => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export async function fetchMeta(baseUrl: string): Promise<ServiceMeta> {
  const response = await fetch(`${baseUrl}/meta`);
  if (!response.ok) {
    throw new Error(`GET /meta failed with ${response.status}`);
  }
  return parseMeta(await response.json());
}

export class StreamClient {
  private socket: SocketLike | null = null;
  private readonly throttle: CoalescingThrottle<PoseMatrix>;

  constructor(
    private readonly wsUrl: string,
    private readonly state: ConsoleState,
    private readonly openSocket: SocketFactory,
    maxMessagesPerSecond = 30,
  ) {
    this.throttle = new CoalescingThrottle(
      (pose) => this.socket?.send(poseMessage(pose)),
      maxMessagesPerSecond,
    );
  }

  connect(): void {
    const socket = this.openSocket(this.wsUrl);
    socket.onopen = () => this.state.setConnected(true);
    socket.onclose = () => this.state.setConnected(false);
    socket.onmessage = (event) => {
      if (typeof event.data === "string") {
        this.state.onStreamJson(JSON.parse(event.data));
      } else if (event.data instanceof ArrayBuffer) {
        this.state.onStreamBinary(event.data);
      }
    };
    this.socket = socket;
  }

  sendPose(pose: PoseMatrix): void {
    this.throttle.push(pose);
  }

  resubscribe(): void {
    this.socket?.close();
    this.connect();
  }

  dispose(): void {
    this.throttle.dispose();
    this.socket?.close();
    this.socket = null;
  }
}

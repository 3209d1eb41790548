// One WebSocket to the game server; messages out are JSON strings,
// messages in are parsed and handed to a single listener. The socket
// factory is injectable so tests can run without a network.

import { parseServerMessage, type ServerMessage } from "./protocol.js";

export interface SocketLike {
  send(data: string): void;
  close(): void;
  onmessage: ((ev: { data: string }) => void) | null;
  onclose: (() => void) | null;
  onopen: (() => void) | null;
}

export type SocketFactory = (url: string) => SocketLike;

export class GameConnection {
  private socket: SocketLike | null = null;

  constructor(
    private url: string,
    private onMessage: (m: ServerMessage) => void,
    private onStatus: (status: "open" | "closed") => void = () => {},
    private factory: SocketFactory = (u) => new WebSocket(u) as unknown as SocketLike,
  ) {}

  connect(): void {
    const socket = this.factory(this.url);
    socket.onopen = () => this.onStatus("open");
    socket.onclose = () => {
      this.socket = null;
      this.onStatus("closed");
    };
    socket.onmessage = (ev) => {
      let message: ServerMessage;
      try {
        message = parseServerMessage(ev.data);
      } catch {
        return; // ignore undecodable frames
      }
      this.onMessage(message);
    };
    this.socket = socket;
  }

  send(payload: string): boolean {
    if (!this.socket) return false;
    this.socket.send(payload);
    return true;
  }

  close(): void {
    this.socket?.close();
  }
}

export function defaultServerUrl(loc: { protocol: string; host: string }): string {
  const scheme = loc.protocol === "https:" ? "wss" : "ws";
  return `${scheme}://${loc.host}/ws`;
}

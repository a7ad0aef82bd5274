// Thin session client. The socket is injectable so tests can drive it with a
// fake; the UI only ever sends gaze samples and mode toggles.

import { ClientMsg, GazeSample, PROTOCOL_VERSION } from "./protocol.js";

export interface SocketLike {
  readyState: number;
  send(data: string): void;
}

const OPEN = 1;

export class SessionClient {
  constructor(private socket: SocketLike, private readOnly: () => boolean = () => false) {}

  private send(msg: ClientMsg): boolean {
    if (this.readOnly() || this.socket.readyState !== OPEN) return false;
    this.socket.send(JSON.stringify(msg));
    return true;
  }

  sendGaze(sample: GazeSample): boolean {
    return this.send({ v: PROTOCOL_VERSION, kind: "gaze", sample });
  }

  sendToggle(t?: number): boolean {
    return this.send({ v: PROTOCOL_VERSION, kind: "toggle", ...(t === undefined ? {} : { t }) });
  }
}

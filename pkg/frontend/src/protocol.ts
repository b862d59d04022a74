// Wire protocol shared with the simulation service: UTF-8 JSON objects with
// a `type` field, framed over TCP as `<decimal byte length>\n<json>\n`.
// Field names and units are documented in ../docs/protocol.md and must stay
// in lockstep with the server.

export interface ObjectState {
  index: number;
  x: number;
  y: number;
  hostility: number;
}

export interface StateSnapshot {
  type: 'state';
  tick: number;
  objects: ObjectState[];
  alarms: number[];
  model_version: number;
}

export interface SteerCommand {
  type: 'steer';
  heading_degrees: number; // 0 = east, counterclockwise
  speed: number;
}

export interface MarkHostile {
  type: 'mark_hostile';
  index: number;
  tick_window: [number, number];
}

export interface RetrainStatus {
  type: 'retrain_status';
  n_objects: number;
  version: number;
  phase: 'idle' | 'training' | 'swapped';
}

export interface ErrorMessage {
  type: 'error';
  code: string;
  text: string;
}

export type ServerMessage = StateSnapshot | RetrainStatus | ErrorMessage;
export type ClientMessage = SteerCommand | MarkHostile;
export type Message = ServerMessage | ClientMessage;

export function parseMessage(text: string): Message {
  let payload: unknown;
  try {
    payload = JSON.parse(text);
  } catch {
    throw new Error(`message is not valid JSON: ${text.slice(0, 80)}`);
  }
  if (typeof payload !== 'object' || payload === null || Array.isArray(payload)) {
    throw new Error('message must be a JSON object');
  }
  const msg = payload as Record<string, unknown>;
  switch (msg.type) {
    case 'state': {
      const objects = msg.objects;
      if (!Array.isArray(objects)) throw new Error('state message without objects');
      return {
        type: 'state',
        tick: asNumber(msg.tick, 'tick'),
        objects: objects.map((o, i) => ({
          index: asNumber(o.index, `objects[${i}].index`),
          x: asNumber(o.x, `objects[${i}].x`),
          y: asNumber(o.y, `objects[${i}].y`),
          hostility: asNumber(o.hostility, `objects[${i}].hostility`),
        })),
        alarms: asNumberArray(msg.alarms, 'alarms'),
        model_version: asNumber(msg.model_version, 'model_version'),
      };
    }
    case 'steer':
      return {
        type: 'steer',
        heading_degrees: asNumber(msg.heading_degrees, 'heading_degrees'),
        speed: asNumber(msg.speed, 'speed'),
      };
    case 'mark_hostile': {
      const window = asNumberArray(msg.tick_window, 'tick_window');
      if (window.length !== 2) throw new Error('tick_window must be [start, end]');
      return { type: 'mark_hostile', index: asNumber(msg.index, 'index'), tick_window: [window[0], window[1]] };
    }
    case 'retrain_status': {
      const phase = msg.phase;
      if (phase !== 'idle' && phase !== 'training' && phase !== 'swapped') {
        throw new Error(`unknown retrain phase ${String(phase)}`);
      }
      return {
        type: 'retrain_status',
        n_objects: asNumber(msg.n_objects, 'n_objects'),
        version: asNumber(msg.version, 'version'),
        phase,
      };
    }
    case 'error':
      return { type: 'error', code: String(msg.code), text: String(msg.text) };
    default:
      throw new Error(`unknown message type ${String(msg.type)}`);
  }
}

export function serializeMessage(msg: Message): string {
  return JSON.stringify(msg);
}

function asNumber(value: unknown, what: string): number {
  if (typeof value !== 'number' || !Number.isFinite(value)) {
    throw new Error(`${what} must be a finite number, got ${String(value)}`);
  }
  return value;
}

function asNumberArray(value: unknown, what: string): number[] {
  if (!Array.isArray(value)) throw new Error(`${what} must be an array`);
  return value.map((v, i) => asNumber(v, `${what}[${i}]`));
}

/** Frame one message body for the TCP side of the protocol. */
export function encodeFrame(body: string): Uint8Array {
  const payload = new TextEncoder().encode(body);
  const prefix = new TextEncoder().encode(`${payload.length}\n`);
  const out = new Uint8Array(prefix.length + payload.length + 1);
  out.set(prefix, 0);
  out.set(payload, prefix.length);
  out[out.length - 1] = 0x0a;
  return out;
}

/**
 * Incremental decoder for the length-delimited TCP stream.  Feed it chunks
 * in whatever sizes the socket delivers; it yields complete JSON bodies.
 */
export class FrameDecoder {
  private buffer = new Uint8Array(0);

  push(chunk: Uint8Array): string[] {
    const merged = new Uint8Array(this.buffer.length + chunk.length);
    merged.set(this.buffer, 0);
    merged.set(chunk, this.buffer.length);
    this.buffer = merged;

    const bodies: string[] = [];
    for (;;) {
      const newline = this.buffer.indexOf(0x0a);
      if (newline < 0) break;
      const prefix = new TextDecoder().decode(this.buffer.subarray(0, newline));
      if (!/^\d+$/.test(prefix)) {
        throw new Error(`bad frame length prefix: ${prefix.slice(0, 32)}`);
      }
      const length = Number(prefix);
      const frameEnd = newline + 1 + length + 1;
      if (this.buffer.length < frameEnd) break;
      const body = this.buffer.subarray(newline + 1, newline + 1 + length);
      if (this.buffer[frameEnd - 1] !== 0x0a) {
        throw new Error('frame missing trailing newline');
      }
      bodies.push(new TextDecoder().decode(body));
      this.buffer = this.buffer.subarray(frameEnd);
    }
    return bodies;
  }
}

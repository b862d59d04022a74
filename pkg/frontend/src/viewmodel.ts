import type { ServerMessage, StateSnapshot } from './protocol.js';

export interface SteeringState {
  headingDegrees: number; // 0 = east, counterclockwise
  speed: number;
}

export interface Banner {
  kind: 'retrain' | 'error' | 'disconnected';
  text: string;
}

/**
 * All state the console keeps between frames.  The render loop reads it;
 * socket events and key handlers write it.  Snapshots arriving out of order
 * are dropped by tick comparison so the display only ever moves forward.
 */
export class ViewModel {
  snapshot: StateSnapshot | null = null;
  selected: number | null = null;
  steering: SteeringState = { headingDegrees: 0, speed: 0 };
  banner: Banner | null = null;
  connected = false;
  staleDrops = 0;

  applyMessage(msg: ServerMessage): void {
    switch (msg.type) {
      case 'state':
        if (this.snapshot !== null && msg.tick <= this.snapshot.tick) {
          this.staleDrops += 1;
          return;
        }
        this.snapshot = msg;
        break;
      case 'retrain_status':
        if (msg.phase === 'swapped') {
          this.banner = { kind: 'retrain', text: `model v${msg.version} live` };
        } else if (msg.phase === 'training') {
          this.banner = { kind: 'retrain', text: `retraining v${msg.version + 1}...` };
        } else {
          this.banner = null;
        }
        break;
      case 'error':
        this.banner = { kind: 'error', text: `${msg.code}: ${msg.text}` };
        break;
    }
  }

  setConnected(connected: boolean): void {
    this.connected = connected;
    if (!connected) {
      this.banner = { kind: 'disconnected', text: 'disconnected - reconnecting' };
    } else if (this.banner?.kind === 'disconnected') {
      this.banner = null;
    }
  }

  select(index: number): void {
    const known = this.snapshot?.objects.some((o) => o.index === index) ?? false;
    this.selected = known ? index : null;
  }

  userObjectIndex(): number | null {
    return this.selected;
  }
}

/**
 * Client-side steering throttle: at most one command per tick interval, and
 * only when the command would change what the server is already holding.
 */
export class SteerThrottle {
  private lastSent: SteeringState | null = null;
  private lastSentAt = -Infinity;

  constructor(private readonly tickMillis: number) {}

  /** The command to send now, or null to stay quiet. */
  next(wanted: SteeringState, nowMillis: number): SteeringState | null {
    if (this.lastSent !== null
        && this.lastSent.headingDegrees === wanted.headingDegrees
        && this.lastSent.speed === wanted.speed) {
      return null;
    }
    if (nowMillis - this.lastSentAt < this.tickMillis) {
      return null;
    }
    this.lastSent = { ...wanted };
    this.lastSentAt = nowMillis;
    return this.lastSent;
  }

  reset(): void {
    this.lastSent = null;
    this.lastSentAt = -Infinity;
  }
}

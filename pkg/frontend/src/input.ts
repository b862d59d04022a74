import type { SteeringState } from './viewmodel.js';

// Arrow keys / WASD pick a compass direction (0 = east, counterclockwise);
// the steered speed is fixed while any key is held and zero otherwise.

export const CRUISE_SPEED = 5;

const DIRECTION_KEYS: Record<string, [number, number]> = {
  ArrowRight: [1, 0], d: [1, 0],
  ArrowLeft: [-1, 0], a: [-1, 0],
  ArrowUp: [0, 1], w: [0, 1],
  ArrowDown: [0, -1], s: [0, -1],
};

export class KeyboardSteering {
  private held = new Set<string>();
  private lastHeading = 0;

  keyDown(key: string): boolean {
    if (!(key in DIRECTION_KEYS)) return false;
    this.held.add(key);
    return true;
  }

  keyUp(key: string): boolean {
    if (!(key in DIRECTION_KEYS)) return false;
    this.held.delete(key);
    return true;
  }

  clear(): void {
    this.held.clear();
  }

  /** Steering implied by the currently held keys. */
  wanted(): SteeringState {
    let dx = 0;
    let dy = 0;
    for (const key of this.held) {
      const [kx, ky] = DIRECTION_KEYS[key];
      dx += kx;
      dy += ky;
    }
    if (dx === 0 && dy === 0) {
      // released: stop, keep the last heading for the HUD
      return { headingDegrees: this.lastHeading, speed: 0 };
    }
    const degrees = (Math.atan2(dy, dx) * 180) / Math.PI;
    this.lastHeading = (degrees + 360) % 360;
    return { headingDegrees: this.lastHeading, speed: CRUISE_SPEED };
  }
}

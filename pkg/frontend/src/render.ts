import type { StateSnapshot } from './protocol.js';
import type { ViewModel } from './viewmodel.js';

// Structural slice of CanvasRenderingContext2D so the renderer is testable
// with a recording stub and usable with a real canvas unchanged.
export interface Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern;
  strokeStyle: string | CanvasGradient | CanvasPattern;
  lineWidth: number;
  font: string;
  textAlign: CanvasTextAlign;
  textBaseline: CanvasTextBaseline;
  fillRect(x: number, y: number, w: number, h: number): void;
  strokeRect(x: number, y: number, w: number, h: number): void;
  beginPath(): void;
  arc(x: number, y: number, r: number, a0: number, a1: number): void;
  fill(): void;
  stroke(): void;
  fillText(text: string, x: number, y: number): void;
}

export interface AreaBounds {
  minX: number;
  minY: number;
  maxX: number;
  maxY: number;
}

export const DEFAULT_BOUNDS: AreaBounds = { minX: 0, minY: 0, maxX: 1000, maxY: 1000 };

const WATER = '#0b2236';
const LAND = '#4a6741';
const DOT = '#d8e6f2';
const ALARM = '#ff5a48';
const USER_BOX = '#ffd23f';
const LANDMASS_FRACTION = 0.04;

export interface Mapping {
  toScreenX(x: number): number;
  toScreenY(y: number): number;
  scale: number;
  offsetX: number;
  offsetY: number;
  mapWidth: number;
  mapHeight: number;
}

/** Letterbox the area bounds into the viewport, preserving aspect ratio. */
export function worldMapping(bounds: AreaBounds, width: number, height: number): Mapping {
  const worldW = bounds.maxX - bounds.minX;
  const worldH = bounds.maxY - bounds.minY;
  const scale = Math.min(width / worldW, height / worldH);
  const mapWidth = worldW * scale;
  const mapHeight = worldH * scale;
  const offsetX = (width - mapWidth) / 2;
  const offsetY = (height - mapHeight) / 2;
  return {
    scale,
    offsetX,
    offsetY,
    mapWidth,
    mapHeight,
    toScreenX: (x) => offsetX + (x - bounds.minX) * scale,
    // screen y grows downward, world y grows northward
    toScreenY: (y) => offsetY + mapHeight - (y - bounds.minY) * scale,
  };
}

export function hostilityLabel(value: number): string {
  return value.toFixed(2);
}

export function render(vm: ViewModel, ctx: Canvas2D, width: number, height: number,
                       bounds: AreaBounds = DEFAULT_BOUNDS): void {
  ctx.fillStyle = '#06141f';
  ctx.fillRect(0, 0, width, height);

  if (vm.snapshot === null) {
    ctx.fillStyle = DOT;
    ctx.font = '16px monospace';
    ctx.textAlign = 'center';
    ctx.textBaseline = 'middle';
    ctx.fillText(vm.connected ? 'waiting for first snapshot...' : 'connecting...',
                 width / 2, height / 2);
    return;
  }

  const map = worldMapping(bounds, width, height);
  ctx.fillStyle = WATER;
  ctx.fillRect(map.offsetX, map.offsetY, map.mapWidth, map.mapHeight);

  // protected landmass along the eastern edge
  const landW = map.mapWidth * LANDMASS_FRACTION;
  ctx.fillStyle = LAND;
  ctx.fillRect(map.offsetX + map.mapWidth - landW, map.offsetY, landW, map.mapHeight);

  drawObjects(vm.snapshot, vm, ctx, map);
  drawStatus(vm, ctx, width, height);
}

function drawObjects(snapshot: StateSnapshot, vm: ViewModel, ctx: Canvas2D, map: Mapping): void {
  const alarms = new Set(snapshot.alarms);
  const user = vm.userObjectIndex();
  for (const obj of snapshot.objects) {
    const sx = map.toScreenX(obj.x);
    const sy = map.toScreenY(obj.y);

    if (alarms.has(obj.index)) {
      // the "encircled" alarm highlight
      ctx.strokeStyle = ALARM;
      ctx.lineWidth = 2;
      ctx.beginPath();
      ctx.arc(sx, sy, 11, 0, Math.PI * 2);
      ctx.stroke();
    }

    ctx.fillStyle = alarms.has(obj.index) ? ALARM : DOT;
    ctx.beginPath();
    ctx.arc(sx, sy, 4, 0, Math.PI * 2);
    ctx.fill();

    if (obj.index === user) {
      ctx.strokeStyle = USER_BOX;
      ctx.lineWidth = 1.5;
      ctx.strokeRect(sx - 8, sy - 8, 16, 16);
    }

    ctx.font = '11px monospace';
    ctx.textAlign = 'center';
    ctx.textBaseline = 'middle';
    ctx.fillStyle = DOT;
    ctx.fillText(hostilityLabel(obj.hostility), sx, sy - 14); // probability above
    ctx.fillText(String(obj.index), sx, sy + 15); // index below
  }
}

function drawStatus(vm: ViewModel, ctx: Canvas2D, width: number, height: number): void {
  ctx.font = '12px monospace';
  ctx.textAlign = 'left';
  ctx.textBaseline = 'top';
  ctx.fillStyle = DOT;
  const snapshot = vm.snapshot!;
  ctx.fillText(
    `tick ${snapshot.tick}  model v${snapshot.model_version}  ` +
    `heading ${vm.steering.headingDegrees}° speed ${vm.steering.speed}`,
    8, 8,
  );
  if (vm.banner !== null) {
    ctx.fillStyle = vm.banner.kind === 'error' ? ALARM : USER_BOX;
    ctx.fillText(vm.banner.text, 8, height - 20);
  }
}

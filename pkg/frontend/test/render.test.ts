import assert from 'node:assert/strict';
import { test } from 'node:test';
import { hostilityLabel, render, worldMapping, type Canvas2D } from '../src/render.js';
import { ViewModel } from '../src/viewmodel.js';

interface Call {
  op: string;
  args: unknown[];
  fillStyle: string;
  strokeStyle: string;
}

/** Recording stub standing in for a real 2D context. */
class StubContext implements Canvas2D {
  fillStyle: string | CanvasGradient | CanvasPattern = '';
  strokeStyle: string | CanvasGradient | CanvasPattern = '';
  lineWidth = 1;
  font = '';
  textAlign: CanvasTextAlign = 'left';
  textBaseline: CanvasTextBaseline = 'alphabetic';
  calls: Call[] = [];

  private record(op: string, ...args: unknown[]) {
    this.calls.push({
      op,
      args,
      fillStyle: String(this.fillStyle),
      strokeStyle: String(this.strokeStyle),
    });
  }

  fillRect(x: number, y: number, w: number, h: number): void { this.record('fillRect', x, y, w, h); }
  strokeRect(x: number, y: number, w: number, h: number): void { this.record('strokeRect', x, y, w, h); }
  beginPath(): void { this.record('beginPath'); }
  arc(x: number, y: number, r: number, a0: number, a1: number): void { this.record('arc', x, y, r, a0, a1); }
  fill(): void { this.record('fill'); }
  stroke(): void { this.record('stroke'); }
  fillText(text: string, x: number, y: number): void { this.record('fillText', text, x, y); }

  texts(): Array<{ text: string; x: number; y: number }> {
    return this.calls
      .filter((c) => c.op === 'fillText')
      .map((c) => ({ text: String(c.args[0]), x: Number(c.args[1]), y: Number(c.args[2]) }));
  }
}

function snapshotWith(hostility: number, alarms: number[] = []) {
  return {
    type: 'state' as const,
    tick: 12,
    objects: [
      { index: 3, x: 500, y: 500, hostility },
      { index: 1, x: 100, y: 900, hostility: 0.01 },
    ],
    alarms,
    model_version: 2,
  };
}

test('hostility labels carry exactly two decimals', () => {
  assert.equal(hostilityLabel(0.97), '0.97');
  assert.equal(hostilityLabel(0.5), '0.50');
  assert.equal(hostilityLabel(0.966666), '0.97');
  assert.equal(hostilityLabel(1), '1.00');
});

test('objects are drawn with index below and hostility above', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshotWith(0.97));
  const ctx = new StubContext();
  render(vm, ctx, 800, 800);
  const texts = ctx.texts();
  const label = texts.find((t) => t.text === '0.97');
  const index = texts.find((t) => t.text === '3');
  assert.ok(label, 'hostility label rendered');
  assert.ok(index, 'index label rendered');
  assert.equal(label.x, index.x);
  assert.ok(label.y < index.y, 'probability sits above the dot, index below');
});

test('alarmed objects get the encircling highlight', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshotWith(0.97, [3]));
  const ctx = new StubContext();
  render(vm, ctx, 800, 800);
  const rings = ctx.calls.filter((c) => c.op === 'arc' && Number(c.args[2]) > 6);
  assert.equal(rings.length, 1);
  const strokes = ctx.calls.filter((c) => c.op === 'stroke' && c.strokeStyle === '#ff5a48');
  assert.ok(strokes.length >= 1);
});

test('no alarms means no highlights', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshotWith(0.2));
  const ctx = new StubContext();
  render(vm, ctx, 800, 800);
  assert.equal(ctx.calls.filter((c) => c.op === 'arc' && Number(c.args[2]) > 6).length, 0);
});

test('the selected user object is boxed', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshotWith(0.2));
  vm.select(3);
  const ctx = new StubContext();
  render(vm, ctx, 800, 800);
  const boxes = ctx.calls.filter((c) => c.op === 'strokeRect' && c.strokeStyle === '#ffd23f');
  assert.equal(boxes.length, 1);
});

test('missing snapshot renders the waiting screen', () => {
  const vm = new ViewModel();
  vm.setConnected(true);
  const ctx = new StubContext();
  render(vm, ctx, 800, 600);
  assert.deepEqual(ctx.texts().map((t) => t.text), ['waiting for first snapshot...']);
});

test('the protected landmass hugs the eastern edge', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshotWith(0.2));
  const ctx = new StubContext();
  render(vm, ctx, 1000, 1000);
  const land = ctx.calls.find((c) => c.op === 'fillRect' && c.fillStyle === '#4a6741');
  assert.ok(land, 'landmass drawn');
  const [x, , w] = land.args as number[];
  assert.ok(x + w >= 999, 'landmass reaches the right edge of the map');
});

test('letterbox mapping preserves aspect and flips y', () => {
  const map = worldMapping({ minX: 0, minY: 0, maxX: 1000, maxY: 500 }, 800, 800);
  assert.equal(map.scale, 0.8);
  assert.equal(map.toScreenX(0), 0);
  assert.equal(map.toScreenX(1000), 800);
  // world north (max y) is screen top of the letterboxed strip
  assert.equal(map.toScreenY(500), map.offsetY);
  assert.equal(map.toScreenY(0), map.offsetY + 400);
});

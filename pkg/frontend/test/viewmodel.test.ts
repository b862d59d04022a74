import assert from 'node:assert/strict';
import { test } from 'node:test';
import type { StateSnapshot } from '../src/protocol.js';
import { SteerThrottle, ViewModel } from '../src/viewmodel.js';

function snapshot(tick: number): StateSnapshot {
  return {
    type: 'state',
    tick,
    objects: [{ index: 1, x: 100, y: 100, hostility: 0.2 }],
    alarms: [],
    model_version: 1,
  };
}

test('snapshots advance the view', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshot(5));
  assert.equal(vm.snapshot?.tick, 5);
  vm.applyMessage(snapshot(6));
  assert.equal(vm.snapshot?.tick, 6);
});

test('stale snapshots are discarded by tick comparison', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshot(10));
  vm.applyMessage(snapshot(9));
  vm.applyMessage(snapshot(10));
  assert.equal(vm.snapshot?.tick, 10);
  assert.equal(vm.staleDrops, 2);
});

test('retrain status drives the banner through its phases', () => {
  const vm = new ViewModel();
  vm.applyMessage({ type: 'retrain_status', n_objects: 5, version: 1, phase: 'training' });
  assert.match(vm.banner?.text ?? '', /retraining v2/);
  vm.applyMessage({ type: 'retrain_status', n_objects: 5, version: 2, phase: 'swapped' });
  assert.match(vm.banner?.text ?? '', /v2 live/);
  vm.applyMessage({ type: 'retrain_status', n_objects: 5, version: 2, phase: 'idle' });
  assert.equal(vm.banner, null);
});

test('disconnect raises a banner that reconnection clears', () => {
  const vm = new ViewModel();
  vm.setConnected(false);
  assert.equal(vm.banner?.kind, 'disconnected');
  vm.setConnected(true);
  assert.equal(vm.banner, null);
});

test('selection only sticks to known object indices', () => {
  const vm = new ViewModel();
  vm.applyMessage(snapshot(1));
  vm.select(1);
  assert.equal(vm.selected, 1);
  vm.select(9);
  assert.equal(vm.selected, null);
});

test('throttle sends at most once per tick interval', () => {
  const throttle = new SteerThrottle(250);
  const wanted = { headingDegrees: 0, speed: 5 };
  assert.deepEqual(throttle.next(wanted, 0), wanted);
  // same command again: the server holds course, nothing to send
  assert.equal(throttle.next(wanted, 100), null);
  assert.equal(throttle.next(wanted, 1000), null);
  // a change arriving inside the tick window waits for the window to pass
  const turn = { headingDegrees: 90, speed: 5 };
  assert.equal(throttle.next(turn, 100), null);
  assert.deepEqual(throttle.next(turn, 251), turn);
});

test('throttle resets on reconnect', () => {
  const throttle = new SteerThrottle(250);
  const wanted = { headingDegrees: 45, speed: 5 };
  assert.deepEqual(throttle.next(wanted, 0), wanted);
  throttle.reset();
  assert.deepEqual(throttle.next(wanted, 1), wanted);
});

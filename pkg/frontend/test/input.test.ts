import assert from 'node:assert/strict';
import { test } from 'node:test';
import { CRUISE_SPEED, KeyboardSteering } from '../src/input.js';

test('holding right steers east at cruise speed', () => {
  const steering = new KeyboardSteering();
  steering.keyDown('ArrowRight');
  assert.deepEqual(steering.wanted(), { headingDegrees: 0, speed: CRUISE_SPEED });
});

test('wasd mirrors the arrows, counterclockwise convention', () => {
  const steering = new KeyboardSteering();
  steering.keyDown('w');
  assert.equal(steering.wanted().headingDegrees, 90);
  steering.keyUp('w');
  steering.keyDown('a');
  assert.equal(steering.wanted().headingDegrees, 180);
  steering.keyUp('a');
  steering.keyDown('s');
  assert.equal(steering.wanted().headingDegrees, 270);
});

test('diagonals combine to 45-degree headings', () => {
  const steering = new KeyboardSteering();
  steering.keyDown('ArrowRight');
  steering.keyDown('ArrowUp');
  assert.deepEqual(steering.wanted(), { headingDegrees: 45, speed: CRUISE_SPEED });
});

test('releasing all keys stops without losing the heading', () => {
  const steering = new KeyboardSteering();
  steering.keyDown('ArrowUp');
  assert.equal(steering.wanted().speed, CRUISE_SPEED);
  steering.keyUp('ArrowUp');
  assert.deepEqual(steering.wanted(), { headingDegrees: 90, speed: 0 });
});

test('opposing keys cancel to a stop', () => {
  const steering = new KeyboardSteering();
  steering.keyDown('ArrowLeft');
  steering.keyDown('ArrowRight');
  assert.equal(steering.wanted().speed, 0);
});

test('unrelated keys are ignored', () => {
  const steering = new KeyboardSteering();
  assert.equal(steering.keyDown('x'), false);
  assert.equal(steering.wanted().speed, 0);
});

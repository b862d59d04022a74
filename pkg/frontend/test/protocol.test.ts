import assert from 'node:assert/strict';
import { test } from 'node:test';
import {
  FrameDecoder,
  encodeFrame,
  parseMessage,
  serializeMessage,
  type Message,
} from '../src/protocol.js';

const VARIANTS: Message[] = [
  {
    type: 'state',
    tick: 7,
    objects: [
      { index: 1, x: 10.5, y: 20.25, hostility: 0.93 },
      { index: 2, x: 600, y: 401, hostility: 0.07 },
    ],
    alarms: [1],
    model_version: 3,
  },
  { type: 'steer', heading_degrees: 90, speed: 5 },
  { type: 'mark_hostile', index: 2, tick_window: [10, 40] },
  { type: 'retrain_status', n_objects: 5, version: 2, phase: 'training' },
  { type: 'error', code: 'parse', text: 'frame is not valid JSON' },
];

test('every message variant round-trips through serialize/parse', () => {
  for (const msg of VARIANTS) {
    assert.deepEqual(parseMessage(serializeMessage(msg)), msg);
  }
});

test('parse rejects unknown types and bad fields', () => {
  assert.throws(() => parseMessage('{"type":"warp"}'), /unknown message type/);
  assert.throws(() => parseMessage('{"type":"steer","speed":1}'), /heading_degrees/);
  assert.throws(() => parseMessage('not json'), /not valid JSON/);
  assert.throws(() => parseMessage('{"type":"state","tick":"x","objects":[],"alarms":[],"model_version":1}'),
                /tick/);
});

test('frames survive arbitrary packetization', () => {
  const decoder = new FrameDecoder();
  const stream = VARIANTS.map((m) => encodeFrame(serializeMessage(m)));
  const joined = new Uint8Array(stream.reduce((n, f) => n + f.length, 0));
  let offset = 0;
  for (const frame of stream) {
    joined.set(frame, offset);
    offset += frame.length;
  }
  const got: Message[] = [];
  for (let i = 0; i < joined.length; i += 3) {
    for (const body of decoder.push(joined.subarray(i, i + 3))) {
      got.push(parseMessage(body));
    }
  }
  assert.deepEqual(got, VARIANTS);
});

test('decoder rejects a corrupt length prefix', () => {
  const decoder = new FrameDecoder();
  assert.throws(() => decoder.push(new TextEncoder().encode('xy\n{}\n')), /length prefix/);
});

test('frame length counts bytes, not characters', () => {
  const body = JSON.stringify({ type: 'error', code: 'x', text: 'éé' });
  const frame = encodeFrame(body);
  const prefix = new TextDecoder().decode(frame).split('\n')[0];
  assert.equal(Number(prefix), new TextEncoder().encode(body).length);
  const decoder = new FrameDecoder();
  assert.deepEqual(decoder.push(frame), [body]);
});

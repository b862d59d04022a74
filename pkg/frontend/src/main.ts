// Browser entry point.  Connects to the bridge WebSocket, renders the area
// of observation to the canvas every animation frame, and turns key presses
// into throttled steer commands.

import { parseMessage, serializeMessage, type ClientMessage } from './protocol.js';
import { ViewModel, SteerThrottle } from './viewmodel.js';
import { render, DEFAULT_BOUNDS, type AreaBounds } from './render.js';
import { KeyboardSteering } from './input.js';

const TICK_MILLIS = 250; // client-side steer throttle; server enforces its own pace
const MARK_WINDOW_TICKS = 30;

function boundsFromQuery(): AreaBounds {
  const raw = new URLSearchParams(location.search).get('bounds');
  if (!raw) return DEFAULT_BOUNDS;
  const parts = raw.split(',').map(Number);
  if (parts.length !== 4 || parts.some((v) => !Number.isFinite(v))) return DEFAULT_BOUNDS;
  return { minX: parts[0], minY: parts[1], maxX: parts[2], maxY: parts[3] };
}

function main(): void {
  const canvas = document.getElementById('map') as HTMLCanvasElement;
  const ctx = canvas.getContext('2d');
  if (!ctx) throw new Error('canvas 2d context unavailable');

  const vm = new ViewModel();
  const steering = new KeyboardSteering();
  const throttle = new SteerThrottle(TICK_MILLIS);
  const bounds = boundsFromQuery();
  let socket: WebSocket | null = null;

  const send = (msg: ClientMessage) => {
    if (socket !== null && socket.readyState === WebSocket.OPEN) {
      socket.send(serializeMessage(msg));
    }
  };

  const connect = () => {
    const ws = new WebSocket(`ws://${location.host}/ws`);
    socket = ws;
    ws.onopen = () => {
      vm.setConnected(true);
      throttle.reset();
    };
    ws.onmessage = (event: MessageEvent) => {
      try {
        const msg = parseMessage(String(event.data));
        if (msg.type === 'state' || msg.type === 'retrain_status' || msg.type === 'error') {
          vm.applyMessage(msg);
        }
      } catch (err) {
        console.error('bad message from bridge:', err);
      }
    };
    ws.onclose = () => {
      vm.setConnected(false);
      steering.clear();
      setTimeout(connect, 1000);
    };
  };
  connect();

  document.addEventListener('keydown', (e) => {
    if (steering.keyDown(e.key)) {
      e.preventDefault();
      return;
    }
    if (/^[1-9]$/.test(e.key)) {
      vm.select(Number(e.key));
    } else if (e.key === 'h' && vm.selected !== null && vm.snapshot !== null) {
      const end = vm.snapshot.tick;
      send({
        type: 'mark_hostile',
        index: vm.selected,
        tick_window: [Math.max(1, end - MARK_WINDOW_TICKS + 1), end],
      });
    }
  });
  document.addEventListener('keyup', (e) => {
    steering.keyUp(e.key);
  });
  window.addEventListener('blur', () => steering.clear());

  // steering commands go out on their own cadence, never faster than a tick
  setInterval(() => {
    if (!vm.connected) return; // disconnected: queue nothing
    const wanted = steering.wanted();
    const command = throttle.next(wanted, performance.now());
    if (command !== null) {
      vm.steering = command;
      send({ type: 'steer', heading_degrees: command.headingDegrees, speed: command.speed });
    }
  }, TICK_MILLIS / 2);

  const frame = () => {
    const width = canvas.clientWidth;
    const height = canvas.clientHeight;
    if (canvas.width !== width || canvas.height !== height) {
      canvas.width = width;
      canvas.height = height;
    }
    render(vm, ctx, width, height, bounds);
    requestAnimationFrame(frame);
  };
  requestAnimationFrame(frame);
}

main();

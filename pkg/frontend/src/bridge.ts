// TCP-to-WebSocket bridge.  Browsers cannot open raw TCP sockets, so this
// small Node process connects to the simulation service, strips the length
// framing, and forwards each JSON payload verbatim over WebSocket (and back
// again for client commands).  It also serves the static console files.
//
// Usage: node dist/src/bridge.js --tcp 127.0.0.1:7600 --listen 8080

import * as http from 'node:http';
import * as net from 'node:net';
import * as fs from 'node:fs';
import * as path from 'node:path';
import { fileURLToPath } from 'node:url';
import { WebSocketServer, WebSocket } from 'ws';
import { FrameDecoder, encodeFrame } from './protocol.js';

interface BridgeOptions {
  tcpHost: string;
  tcpPort: number;
  listenPort: number;
  rootDir: string;
}

export function parseArgs(argv: string[]): BridgeOptions {
  const here = path.dirname(fileURLToPath(import.meta.url));
  const options: BridgeOptions = {
    tcpHost: '127.0.0.1',
    tcpPort: 7600,
    listenPort: 8080,
    rootDir: path.resolve(here, '..', '..'),
  };
  for (let i = 0; i < argv.length; i += 1) {
    const arg = argv[i];
    if (arg === '--tcp') {
      const value = argv[++i];
      const colon = value.lastIndexOf(':');
      if (colon < 0) throw new Error('--tcp expects host:port');
      options.tcpHost = value.slice(0, colon);
      options.tcpPort = Number(value.slice(colon + 1));
    } else if (arg === '--listen') {
      options.listenPort = Number(argv[++i]);
    } else if (arg === '--root') {
      options.rootDir = path.resolve(argv[++i]);
    } else {
      throw new Error(`unknown argument ${arg}`);
    }
  }
  return options;
}

const CONTENT_TYPES: Record<string, string> = {
  '.html': 'text/html; charset=utf-8',
  '.js': 'text/javascript; charset=utf-8',
  '.css': 'text/css; charset=utf-8',
};

function serveStatic(root: string, req: http.IncomingMessage, res: http.ServerResponse): void {
  const url = (req.url ?? '/').split('?')[0];
  const relative = url === '/' ? 'index.html' : url.replace(/^\/+/, '');
  const file = path.resolve(root, relative);
  if (!file.startsWith(root) || !fs.existsSync(file) || !fs.statSync(file).isFile()) {
    res.writeHead(404);
    res.end('not found');
    return;
  }
  res.writeHead(200, { 'content-type': CONTENT_TYPES[path.extname(file)] ?? 'application/octet-stream' });
  res.end(fs.readFileSync(file));
}

export interface Bridge {
  close(): Promise<void>;
  port: number;
}

export function startBridge(options: BridgeOptions): Promise<Bridge> {
  return new Promise((resolve, reject) => {
    const tcp = net.createConnection({ host: options.tcpHost, port: options.tcpPort });
    const decoder = new FrameDecoder();
    const clients = new Set<WebSocket>();

    const server = http.createServer((req, res) => serveStatic(options.rootDir, req, res));
    const wss = new WebSocketServer({ server, path: '/ws' });

    wss.on('connection', (ws) => {
      clients.add(ws);
      ws.on('message', (data) => {
        // each ws message is one JSON payload; reframe it for the TCP side
        tcp.write(encodeFrame(data.toString()));
      });
      ws.on('close', () => clients.delete(ws));
    });

    tcp.on('data', (chunk: Buffer) => {
      let bodies: string[];
      try {
        bodies = decoder.push(chunk);
      } catch (err) {
        console.error('broken TCP stream:', err);
        tcp.destroy();
        return;
      }
      for (const body of bodies) {
        for (const ws of clients) {
          if (ws.readyState === WebSocket.OPEN) ws.send(body);
        }
      }
    });
    tcp.on('error', (err) => {
      console.error('service connection error:', err.message);
      reject(err);
    });
    tcp.on('close', () => {
      for (const ws of clients) ws.close(1011, 'service connection closed');
      server.close();
    });

    tcp.on('connect', () => {
      server.listen(options.listenPort, () => {
        const address = server.address();
        const port = typeof address === 'object' && address !== null ? address.port : options.listenPort;
        resolve({
          port,
          close: () =>
            new Promise<void>((done) => {
              for (const ws of clients) ws.terminate();
              wss.close();
              tcp.destroy();
              server.close(() => done());
            }),
        });
      });
    });
  });
}

const entry = process.argv[1] ? path.resolve(process.argv[1]) : '';
if (entry === fileURLToPath(import.meta.url)) {
  const options = parseArgs(process.argv.slice(2));
  startBridge(options)
    .then((bridge) => {
      console.log(`console on http://127.0.0.1:${bridge.port} (service ${options.tcpHost}:${options.tcpPort})`);
    })
    .catch((err) => {
      console.error(String(err));
      process.exit(1);
    });
}

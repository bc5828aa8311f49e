/** Test plumbing: a cookie-jar fetch (browsers keep cookies; node does not)
 * and a live backend stack spawned from the sibling Python package. */

import { spawn, ChildProcess } from "node:child_process";
import { createHash } from "node:crypto";
import type { FetchLike } from "../src/api.js";

/**
 * Minimal cookie jar over fetch. Stands in for the browser's cookie store
 * in tests; page code still never reads the http-only refresh cookie — the
 * jar lives below the application layer, exactly like a browser's.
 */
export function cookieJarFetch(base?: FetchLike): FetchLike {
  const impl: FetchLike = base ?? ((url, init) => fetch(url, init));
  const jar = new Map<string, string>();
  return async (url, init = {}) => {
    const headers = new Headers(init.headers);
    if (jar.size > 0) {
      headers.set(
        "cookie",
        [...jar.entries()].map(([name, value]) => `${name}=${value}`).join("; "),
      );
    }
    const response = await impl(url, { ...init, headers });
    const setCookies: string[] =
      (response.headers as Headers & { getSetCookie?: () => string[] }).getSetCookie?.() ?? [];
    for (const line of setCookies) {
      const [pair, ...attributes] = line.split(";");
      const equals = pair.indexOf("=");
      const name = pair.slice(0, equals).trim();
      const value = pair.slice(equals + 1).trim();
      const expired = attributes.some((attr) => {
        const [key, attrValue] = attr.trim().toLowerCase().split("=");
        return key === "max-age" && Number(attrValue) <= 0;
      });
      if (expired || value === '""' || value === "") jar.delete(name);
      else jar.set(name, value);
    }
    return response;
  };
}

export interface LiveStack {
  authUrl: string;
  resourceUrl: string;
  stop: () => void;
}

const BOOT_SCRIPT = `
import json, time
from ehrshare.stack import launch_stack
running = launch_stack(cookie_secure=False)
print(json.dumps({"auth": running.auth_url, "resource": running.resource_url}), flush=True)
while True:
    time.sleep(3600)
`;

export async function startStack(timeoutMs = 60_000): Promise<LiveStack> {
  const child: ChildProcess = spawn("python3", ["-c", BOOT_SCRIPT], {
    stdio: ["ignore", "pipe", "pipe"],
  });
  const stderrChunks: string[] = [];
  child.stderr!.on("data", (chunk) => stderrChunks.push(String(chunk)));

  const firstLine = await new Promise<string>((resolve, reject) => {
    let buffer = "";
    const timer = setTimeout(() => {
      child.kill("SIGKILL");
      reject(new Error(`backend stack did not start in time\n${stderrChunks.join("")}`));
    }, timeoutMs);
    child.stdout!.on("data", (chunk) => {
      buffer += String(chunk);
      const newline = buffer.indexOf("\n");
      if (newline >= 0) {
        clearTimeout(timer);
        resolve(buffer.slice(0, newline));
      }
    });
    child.on("exit", (code) => {
      clearTimeout(timer);
      reject(new Error(`backend exited early (code ${code})\n${stderrChunks.join("")}`));
    });
  });

  const urls = JSON.parse(firstLine);
  return {
    authUrl: urls.auth,
    resourceUrl: urls.resource,
    stop: () => child.kill("SIGKILL"),
  };
}

export function randomBytes(length: number): Uint8Array {
  const out = new Uint8Array(length);
  for (let offset = 0; offset < length; offset += 65536) {
    crypto.getRandomValues(out.subarray(offset, Math.min(offset + 65536, length)));
  }
  return out;
}

export async function sha256Hex(bytes: Uint8Array): Promise<string> {
  return createHash("sha256").update(bytes).digest("hex");
}

export function uniqueEmail(prefix: string): string {
  return `${prefix}-${Math.random().toString(36).slice(2, 10)}@example.test`;
}

/**
 * Session-scoped key custody.
 *
 * Secret keys live in sessionStorage (cleared when the browser closes),
 * keyed by account email. Losing them means losing the owner decryption
 * path, so the UI surfaces an explicit "export key file" escape hatch and
 * accepts the same file back at login.
 */

import { KeyMaterial } from "./keys.js";

const STORAGE_PREFIX = "ehrshare/keys/";

export class KeyVault {
  constructor(private storage: Storage) {}

  save(email: string, keys: KeyMaterial): void {
    this.storage.setItem(STORAGE_PREFIX + email, JSON.stringify(keys));
  }

  load(email: string): KeyMaterial | null {
    const raw = this.storage.getItem(STORAGE_PREFIX + email);
    if (!raw) return null;
    const parsed = JSON.parse(raw);
    for (const field of ["secretKey", "publicKey", "signingKey", "verifyingKey"]) {
      if (typeof parsed[field] !== "string") return null;
    }
    return parsed as KeyMaterial;
  }

  forget(email: string): void {
    this.storage.removeItem(STORAGE_PREFIX + email);
  }

  exportKeyFile(email: string): string {
    const keys = this.load(email);
    if (!keys) throw new Error(`no keys stored for ${email}`);
    return JSON.stringify({ email, ...keys }, null, 2);
  }

  importKeyFile(content: string): { email: string; keys: KeyMaterial } {
    const parsed = JSON.parse(content);
    const { email, secretKey, publicKey, signingKey, verifyingKey } = parsed;
    if ([email, secretKey, publicKey, signingKey, verifyingKey].some((v) => typeof v !== "string")) {
      throw new Error("malformed key file");
    }
    const keys = { secretKey, publicKey, signingKey, verifyingKey };
    this.save(email, keys);
    return { email, keys };
  }
}

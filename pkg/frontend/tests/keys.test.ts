import { describe, expect, it } from "vitest";

import { b64ToBytes, bytesToB64, generateKeyMaterial, publicKeyForSecret } from "../src/keys.js";

// Cross-implementation vectors: compressed public keys computed by the
// platform's backend engine for fixed secret scalars.
const VECTORS: Array<{ secretHex: string; publicB64: string }> = [
  {
    secretHex: "01",
    publicB64: "Anm+Zn753LusVaBilc6HCwcCm/zbLc4o2VnygVsW+BeY",
  },
  {
    secretHex: "02",
    publicB64: "AsYEf5RB7X1tMEVAbpXAfNhcd45LjO88p6usCblccJ7l",
  },
  {
    secretHex: "deadbeef",
    publicB64: "AnbS/fEwLR+pVW9N+U7ITO+6bUguVPR8bCojjBuqVg8O",
  },
  {
    secretHex: "1234567890abcdef1234567890abcdef1234567890abcdef1234567890abcde",
    publicB64: "AlCk2uPvBVHDt7BrtfpOs91FsAoWS9o0Dmw4zbFi/L7o",
  },
  {
    // group order minus one: the negation of the generator (odd-y prefix)
    secretHex: "fffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364140",
    publicB64: "A3m+Zn753LusVaBilc6HCwcCm/zbLc4o2VnygVsW+BeY",
  },
];

function secretB64FromHex(hex: string): string {
  const padded = hex.padStart(64, "0");
  const bytes = new Uint8Array(32);
  for (let i = 0; i < 32; i++) bytes[i] = parseInt(padded.slice(i * 2, i * 2 + 2), 16);
  return bytesToB64(bytes);
}

describe("key generation", () => {
  it("matches the backend engine on fixed vectors", () => {
    for (const vector of VECTORS) {
      expect(publicKeyForSecret(secretB64FromHex(vector.secretHex))).toBe(vector.publicB64);
    }
  });

  it("generates well-formed, distinct key material", () => {
    const first = generateKeyMaterial();
    const second = generateKeyMaterial();
    for (const keys of [first, second]) {
      expect(b64ToBytes(keys.secretKey)).toHaveLength(32);
      expect(b64ToBytes(keys.signingKey)).toHaveLength(32);
      const publicBytes = b64ToBytes(keys.publicKey);
      expect(publicBytes).toHaveLength(33);
      expect([0x02, 0x03]).toContain(publicBytes[0]);
      expect(b64ToBytes(keys.verifyingKey)).toHaveLength(33);
      // public halves must be consistent with the secret scalar
      expect(publicKeyForSecret(keys.secretKey)).toBe(keys.publicKey);
      expect(publicKeyForSecret(keys.signingKey)).toBe(keys.verifyingKey);
    }
    expect(first.secretKey).not.toBe(second.secretKey);
    expect(first.publicKey).not.toBe(second.publicKey);
  });

  it("round-trips base64", () => {
    const bytes = new Uint8Array([0, 1, 2, 250, 255, 128, 7]);
    expect(b64ToBytes(bytesToB64(bytes))).toEqual(bytes);
  });

  it("rejects out-of-range secrets", () => {
    expect(() => publicKeyForSecret(bytesToB64(new Uint8Array(32)))).toThrow();
    const tooBig = new Uint8Array(32).fill(0xff);
    expect(() => publicKeyForSecret(bytesToB64(tooBig))).toThrow();
  });
});

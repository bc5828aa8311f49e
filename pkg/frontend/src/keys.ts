/**
 * In-browser key generation over secp256k1.
 *
 * Registration sends only the public halves to the server; the secret
 * scalars stay with the user. Encodings mirror the platform's wire format:
 * 33-byte compressed points and 32-byte big-endian scalars, base64'd.
 */

const P = BigInt("0xfffffffffffffffffffffffffffffffffffffffffffffffffffffffefffffc2f");
const N = BigInt("0xfffffffffffffffffffffffffffffffebaaedce6af48a03bbfd25e8cd0364141");
const GX = BigInt("0x79be667ef9dcbbac55a06295ce870b07029bfcdb2dce28d959f2815b16f81798");
const GY = BigInt("0x483ada7726a3c4655da4fbfc0e1108a8fd17b448a68554199c47d08ffb10d4b8");

type AffinePoint = { x: bigint; y: bigint } | null;

function mod(value: bigint, modulus: bigint): bigint {
  const result = value % modulus;
  return result >= 0n ? result : result + modulus;
}

function invMod(value: bigint, modulus: bigint): bigint {
  let [oldR, r] = [mod(value, modulus), modulus];
  let [oldS, s] = [1n, 0n];
  while (r !== 0n) {
    const quotient = oldR / r;
    [oldR, r] = [r, oldR - quotient * r];
    [oldS, s] = [s, oldS - quotient * s];
  }
  if (oldR !== 1n) throw new Error("no modular inverse");
  return mod(oldS, modulus);
}

function pointDouble(point: AffinePoint): AffinePoint {
  if (point === null || point.y === 0n) return null;
  const slope = mod(3n * point.x * point.x * invMod(2n * point.y, P), P);
  const x = mod(slope * slope - 2n * point.x, P);
  return { x, y: mod(slope * (point.x - x) - point.y, P) };
}

function pointAdd(a: AffinePoint, b: AffinePoint): AffinePoint {
  if (a === null) return b;
  if (b === null) return a;
  if (a.x === b.x) {
    if (mod(a.y + b.y, P) === 0n) return null;
    return pointDouble(a);
  }
  const slope = mod((b.y - a.y) * invMod(b.x - a.x, P), P);
  const x = mod(slope * slope - a.x - b.x, P);
  return { x, y: mod(slope * (a.x - x) - a.y, P) };
}

function pointMul(scalar: bigint, point: AffinePoint): AffinePoint {
  let k = mod(scalar, N);
  let accumulator: AffinePoint = null;
  let addend = point;
  while (k > 0n) {
    if (k & 1n) accumulator = pointAdd(accumulator, addend);
    addend = pointDouble(addend);
    k >>= 1n;
  }
  return accumulator;
}

function scalarToBytes(scalar: bigint): Uint8Array {
  const out = new Uint8Array(32);
  let value = scalar;
  for (let i = 31; i >= 0; i--) {
    out[i] = Number(value & 0xffn);
    value >>= 8n;
  }
  return out;
}

function bytesToScalar(bytes: Uint8Array): bigint {
  let value = 0n;
  for (const byte of bytes) value = (value << 8n) | BigInt(byte);
  return value;
}

function compressPoint(point: AffinePoint): Uint8Array {
  if (point === null) throw new Error("cannot encode the identity");
  const out = new Uint8Array(33);
  out[0] = point.y & 1n ? 0x03 : 0x02;
  out.set(scalarToBytes(point.x), 1);
  return out;
}

export function bytesToB64(bytes: Uint8Array): string {
  let binary = "";
  for (const byte of bytes) binary += String.fromCharCode(byte);
  return btoa(binary);
}

export function b64ToBytes(encoded: string): Uint8Array {
  const binary = atob(encoded);
  const out = new Uint8Array(binary.length);
  for (let i = 0; i < binary.length; i++) out[i] = binary.charCodeAt(i);
  return out;
}

function randomScalar(): bigint {
  // rejection sampling keeps the distribution uniform over [1, N)
  for (let attempt = 0; attempt < 1024; attempt++) {
    const bytes = new Uint8Array(32);
    crypto.getRandomValues(bytes);
    const candidate = bytesToScalar(bytes);
    if (candidate > 0n && candidate < N) return candidate;
  }
  throw new Error("randomness source failed");
}

export interface KeyMaterial {
  secretKey: string; // base64, 32 bytes — never sent except designated fields
  publicKey: string; // base64, 33 bytes compressed
  signingKey: string;
  verifyingKey: string;
}

export function generateKeyMaterial(): KeyMaterial {
  const secret = randomScalar();
  const signing = randomScalar();
  const generator: AffinePoint = { x: GX, y: GY };
  return {
    secretKey: bytesToB64(scalarToBytes(secret)),
    publicKey: bytesToB64(compressPoint(pointMul(secret, generator))),
    signingKey: bytesToB64(scalarToBytes(signing)),
    verifyingKey: bytesToB64(compressPoint(pointMul(signing, generator))),
  };
}

/** Derive the compressed public key for a base64 secret scalar (test hook). */
export function publicKeyForSecret(secretKeyB64: string): string {
  const secret = bytesToScalar(b64ToBytes(secretKeyB64));
  if (secret <= 0n || secret >= N) throw new Error("secret scalar out of range");
  return bytesToB64(compressPoint(pointMul(secret, { x: GX, y: GY })));
}

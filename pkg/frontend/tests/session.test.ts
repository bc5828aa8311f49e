import { beforeEach, describe, expect, it } from "vitest";

import { generateKeyMaterial } from "../src/keys.js";
import { KeyVault } from "../src/session.js";

describe("KeyVault", () => {
  beforeEach(() => window.sessionStorage.clear());

  it("stores and retrieves keys per email", () => {
    const vault = new KeyVault(window.sessionStorage);
    const keys = generateKeyMaterial();
    vault.save("a@example.test", keys);
    expect(vault.load("a@example.test")).toEqual(keys);
    expect(vault.load("other@example.test")).toBeNull();
  });

  it("export/import round-trips through the key file", () => {
    const vault = new KeyVault(window.sessionStorage);
    const keys = generateKeyMaterial();
    vault.save("a@example.test", keys);
    const fileContent = vault.exportKeyFile("a@example.test");

    const fresh = new KeyVault(window.sessionStorage);
    window.sessionStorage.clear(); // simulate a new browser session
    const imported = fresh.importKeyFile(fileContent);
    expect(imported.email).toBe("a@example.test");
    expect(imported.keys).toEqual(keys);
    expect(fresh.load("a@example.test")).toEqual(keys);
  });

  it("rejects malformed key files", () => {
    const vault = new KeyVault(window.sessionStorage);
    expect(() => vault.importKeyFile('{"email": "x"}')).toThrow();
  });

  it("forget removes the material", () => {
    const vault = new KeyVault(window.sessionStorage);
    vault.save("a@example.test", generateKeyMaterial());
    vault.forget("a@example.test");
    expect(vault.load("a@example.test")).toBeNull();
  });
});

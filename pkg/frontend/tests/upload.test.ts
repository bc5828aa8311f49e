import { describe, expect, it, vi } from "vitest";

import { ApiClient } from "../src/api.js";
import { PortalApp } from "../src/app.js";
import { KeyVault } from "../src/session.js";
import { MAX_UPLOAD_BYTES, checkUpload } from "../src/upload.js";

describe("client-side upload validation", () => {
  it("accepts the allow-listed types", () => {
    expect(checkUpload({ name: "scan.pdf", size: 100, type: "application/pdf" })).toMatchObject({
      ok: true,
      mediaType: "pdf",
    });
    expect(checkUpload({ name: "xray.png", size: 100, type: "image/png" })).toMatchObject({
      ok: true,
      mediaType: "png",
    });
    expect(checkUpload({ name: "photo.jpg", size: 100, type: "" })).toMatchObject({
      ok: true,
      mediaType: "jpeg", // extension fallback when the browser reports no MIME
    });
  });

  it("rejects oversize files", () => {
    const verdict = checkUpload({ name: "big.pdf", size: MAX_UPLOAD_BYTES + 1, type: "application/pdf" });
    expect(verdict.ok).toBe(false);
  });

  it("rejects unsupported types", () => {
    expect(checkUpload({ name: "malware.exe", size: 10, type: "application/octet-stream" }).ok).toBe(false);
    expect(checkUpload({ name: "notes.txt", size: 10, type: "text/plain" }).ok).toBe(false);
  });
});

describe("upload flow", () => {
  it("rejects bad files before any network traffic", async () => {
    const fetchSpy = vi.fn();
    const api = new ApiClient({
      authUrl: "http://auth.test",
      resourceUrl: "http://resource.test",
      fetchImpl: fetchSpy,
    });
    const root = document.createElement("div");
    const app = new PortalApp(api, new KeyVault(window.sessionStorage), root, () => undefined);
    app.state.profile = {
      user_id: "u1",
      name: "A",
      email: "a@example.test",
      public_key: "",
      verifying_key: "",
      roles: ["patient"],
    };
    app.state.keys = {
      secretKey: "x",
      publicKey: "x",
      signingKey: "x",
      verifyingKey: "x",
    };

    await expect(
      app.uploadFlow({ name: "huge.pdf", size: MAX_UPLOAD_BYTES + 1, type: "application/pdf" }, new Uint8Array()),
    ).rejects.toThrow();
    await expect(
      app.uploadFlow({ name: "script.exe", size: 10, type: "application/x-dosexec" }, new Uint8Array(10)),
    ).rejects.toThrow();
    expect(fetchSpy).not.toHaveBeenCalled();
    expect(root.querySelector('[data-role="banner"]')).not.toBeNull();
  });
});

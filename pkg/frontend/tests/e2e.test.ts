/**
 * Scripted end-to-end flow against a live backend stack, driven through the
 * portal's own app layer with a jsdom document standing in for the browser:
 * register -> upload -> request -> accept (with expiry) -> download
 * (hash-equal) -> revoke -> blocked download, plus the trusted entity's
 * break-glass download. Cookies (including the http-only refresh token)
 * live in a per-actor jar below the page code, as in a real browser.
 */

import { afterAll, beforeAll, describe, expect, it } from "vitest";

import { ApiClient, ApiError } from "../src/api.js";
import { PortalApp } from "../src/app.js";
import { KeyVault } from "../src/session.js";
import { LiveStack, cookieJarFetch, randomBytes, sha256Hex, startStack, uniqueEmail } from "./helpers.js";

let stack: LiveStack;

interface BrowserTab {
  app: PortalApp;
  root: HTMLElement;
  downloads: Array<{ filename: string; bytes: Uint8Array }>;
}

function openTab(): BrowserTab {
  const root = document.createElement("div");
  document.body.appendChild(root);
  const downloads: BrowserTab["downloads"] = [];
  const api = new ApiClient({
    authUrl: stack.authUrl,
    resourceUrl: stack.resourceUrl,
    fetchImpl: cookieJarFetch(), // per-tab cookie store
  });
  const app = new PortalApp(api, new KeyVault(window.sessionStorage), root, (filename, _type, bytes) =>
    downloads.push({ filename, bytes }),
  );
  app.render();
  return { app, root, downloads };
}

function badges(tab: BrowserTab, section: "shares-incoming" | "shares-outgoing"): string[] {
  return [...tab.root.querySelectorAll(`[data-role="${section}"] [data-role="status-badge"]`)].map(
    (node) => node.textContent ?? "",
  );
}

beforeAll(async () => {
  stack = await startStack();
});

afterAll(() => {
  stack?.stop();
});

describe("portal end-to-end", () => {
  it("runs the full consent lifecycle and break-glass path", async () => {
    const trustedTab = openTab();
    const patientTab = openTab();
    const practitionerTab = openTab();

    const trustedEmail = uniqueEmail("trusted");
    const patientEmail = uniqueEmail("patient");
    const practitionerEmail = uniqueEmail("practitioner");

    // -- registration (keys generated in the page, only public halves sent)
    await trustedTab.app.registerAndLogin("Health Authority", trustedEmail, "trusted-password-1", [
      "trusted_entity",
    ]);
    await patientTab.app.registerAndLogin("Alice Patient", patientEmail, "patient-password-1", [
      "patient",
    ]);
    await practitionerTab.app.registerAndLogin(
      "Bob Practitioner",
      practitionerEmail,
      "practitioner-password-1",
      ["practitioner"],
    );
    expect(trustedTab.root.textContent).toContain("break-glass");
    expect(patientTab.root.textContent).toContain("Alice Patient");

    // -- upload
    const fileBytes = randomBytes(64 * 1024);
    const fileHash = await sha256Hex(fileBytes);
    const meta = await patientTab.app.uploadFlow(
      { name: "mri-scan.pdf", size: fileBytes.length, type: "application/pdf" },
      fileBytes,
    );
    const ownedItems = patientTab.root.querySelectorAll('[data-role="records-owned"] li.record');
    expect(ownedItems).toHaveLength(1);
    expect(ownedItems[0].getAttribute("data-resource-id")).toBe(meta.resource_id);

    // -- share request by the practitioner (resource id shared out of band)
    await practitionerTab.app.requestShareFlow(meta.resource_id);
    expect(badges(practitionerTab, "shares-outgoing")).toEqual(["pending"]);

    // -- patient sees the pending request and accepts with a 7-day expiry
    await patientTab.app.refreshData();
    expect(badges(patientTab, "shares-incoming")).toEqual(["pending"]);
    expect(
      patientTab.root.querySelector('[data-role="shares-incoming"] [data-role="expiry-picker"]'),
    ).not.toBeNull();
    const pendingShareId = patientTab.root
      .querySelector('[data-role="shares-incoming"] li.share')!
      .getAttribute("data-share-id")!;
    const expiry = Date.now() / 1000 + 7 * 24 * 3600;
    await patientTab.app.answerFlow(pendingShareId, "accept", expiry);
    expect(badges(patientTab, "shares-incoming")).toEqual(["accepted"]);
    // no key material anywhere in the rendered page
    const patientKeys = patientTab.app.state.keys!;
    expect(patientTab.root.innerHTML).not.toContain(patientKeys.secretKey);
    expect(patientTab.root.innerHTML).not.toContain(patientKeys.signingKey);

    // -- delegatee download, hash-equal with the upload
    await practitionerTab.app.refreshData();
    expect(badges(practitionerTab, "shares-outgoing")).toEqual(["accepted"]);
    const sharedItem = practitionerTab.root.querySelector(
      '[data-role="records-shared"] li.record',
    );
    expect(sharedItem?.getAttribute("data-resource-id")).toBe(meta.resource_id);
    const downloaded = await practitionerTab.app.retrieveFlow(meta.resource_id);
    expect(await sha256Hex(downloaded)).toBe(fileHash);
    expect(practitionerTab.downloads).toHaveLength(1);
    expect(practitionerTab.downloads[0].filename).toBe("mri-scan.pdf");

    // -- owner download hash-equal as well
    const ownerCopy = await patientTab.app.retrieveFlow(meta.resource_id);
    expect(await sha256Hex(ownerCopy)).toBe(fileHash);

    // -- revoke, then the delegatee is blocked
    await patientTab.app.revokeFlow(pendingShareId);
    expect(badges(patientTab, "shares-incoming")).toEqual(["revoked"]);
    await expect(practitionerTab.app.retrieveFlow(meta.resource_id)).rejects.toSatisfy(
      (error: unknown) => error instanceof ApiError && error.status === 403,
    );
    expect(practitionerTab.root.textContent).toContain("no longer shared");
    // server truth re-rendered: the record left the shared list
    expect(
      practitionerTab.root.querySelectorAll('[data-role="records-shared"] li.record'),
    ).toHaveLength(0);

    // -- trusted-entity break-glass download with zero patient involvement
    await trustedTab.app.refreshData();
    const reachable = trustedTab.root.querySelectorAll('[data-role="records-shared"] li.record');
    expect(
      [...reachable].map((node) => node.getAttribute("data-resource-id")),
    ).toContain(meta.resource_id);
    const breakGlassCopy = await trustedTab.app.retrieveFlow(meta.resource_id);
    expect(await sha256Hex(breakGlassCopy)).toBe(fileHash);
  });

  it("declining a request needs no keys and ends in a declined badge", async () => {
    const patientTab = openTab();
    const practitionerTab = openTab();
    await patientTab.app.registerAndLogin("Carol", uniqueEmail("carol"), "carol-password-1", [
      "patient",
    ]);
    await practitionerTab.app.registerAndLogin("Dan", uniqueEmail("dan"), "dan-password-1", [
      "practitioner",
    ]);

    const bytes = randomBytes(1024);
    const meta = await patientTab.app.uploadFlow(
      { name: "xray.png", size: bytes.length, type: "image/png" },
      bytes,
    );
    const share = await practitionerTab.app.requestShareFlow(meta.resource_id);
    await patientTab.app.refreshData();
    await patientTab.app.answerFlow(share.share_id, "decline");
    expect(badges(patientTab, "shares-incoming")).toEqual(["declined"]);
    await expect(practitionerTab.app.retrieveFlow(meta.resource_id)).rejects.toSatisfy(
      (error: unknown) => error instanceof ApiError && error.status === 403,
    );
  });

  it("login failure shows the uniform banner", async () => {
    const tab = openTab();
    await expect(tab.app.loginFlow(uniqueEmail("ghost"), "wrong-password-1")).rejects.toBeDefined();
    expect(tab.root.querySelector('[data-role="banner"]')?.textContent).toContain("Login failed");
  });
});

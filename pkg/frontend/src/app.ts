/**
 * Portal controller and renderer.
 *
 * Every state-changing action awaits the server call, re-fetches the
 * affected lists, and re-renders from that server truth — status badges
 * are never set optimistically. Secret keys come from the session vault
 * and are handed only to the API client's designated fields; they are
 * never rendered into the DOM.
 */

import { ApiClient, ApiError, RecordMeta, ShareView, UserProfile } from "./api.js";
import { generateKeyMaterial, KeyMaterial } from "./keys.js";
import { KeyVault } from "./session.js";
import { checkUpload } from "./upload.js";

export interface AppState {
  profile: UserProfile | null;
  keys: KeyMaterial | null;
  owned: RecordMeta[];
  shared: RecordMeta[];
  incoming: ShareView[];
  outgoing: ShareView[];
  banner: string | null;
}

export type DownloadSink = (filename: string, contentType: string, bytes: Uint8Array) => void;

function browserDownloadSink(filename: string, contentType: string, bytes: Uint8Array): void {
  const blob = new Blob([bytes as BlobPart], { type: contentType });
  const anchor = document.createElement("a");
  anchor.href = URL.createObjectURL(blob);
  anchor.download = filename;
  anchor.click();
  URL.revokeObjectURL(anchor.href);
}

export class PortalApp {
  state: AppState = {
    profile: null,
    keys: null,
    owned: [],
    shared: [],
    incoming: [],
    outgoing: [],
    banner: null,
  };

  constructor(
    readonly api: ApiClient,
    readonly vault: KeyVault,
    private root: HTMLElement,
    private downloadSink: DownloadSink = browserDownloadSink,
  ) {}

  // -- actions (wired to buttons; also driven directly by the e2e suite) --

  async registerAndLogin(
    name: string,
    email: string,
    password: string,
    roles: string[],
  ): Promise<void> {
    const keys = generateKeyMaterial();
    await this.api.register(name, email, password, keys, roles);
    this.vault.save(email, keys);
    await this.loginFlow(email, password);
  }

  async loginFlow(email: string, password: string): Promise<void> {
    try {
      this.state.profile = await this.api.login(email, password);
    } catch (error) {
      // uniform banner: the server deliberately does not distinguish
      this.state.banner = "Login failed. Check your email and password.";
      this.render();
      throw error;
    }
    this.state.keys = this.vault.load(email);
    this.state.banner = this.state.keys
      ? null
      : "No keys stored in this session. Import your key file to decrypt records.";
    await this.refreshData();
  }

  async logoutFlow(): Promise<void> {
    await this.api.logout();
    this.state = {
      profile: null,
      keys: null,
      owned: [],
      shared: [],
      incoming: [],
      outgoing: [],
      banner: "Logged out.",
    };
    this.render();
  }

  async refreshData(): Promise<void> {
    const [records, incoming, outgoing] = await Promise.all([
      this.api.listRecords(),
      this.api.listShares("incoming"),
      this.api.listShares("outgoing"),
    ]);
    this.state.owned = records.owned;
    this.state.shared = records.shared;
    this.state.incoming = incoming;
    this.state.outgoing = outgoing;
    this.render();
  }

  async uploadFlow(file: { name: string; size: number; type: string }, bytes: Uint8Array): Promise<RecordMeta> {
    const verdict = checkUpload(file);
    if (!verdict.ok) {
      this.state.banner = verdict.reason;
      this.render();
      throw new Error(verdict.reason);
    }
    const keys = this.requireKeys();
    const meta = await this.api.uploadRecord(file.name, verdict.contentType, bytes, keys);
    this.state.banner = `Uploaded ${file.name}.`;
    await this.refreshData();
    return meta;
  }

  async requestShareFlow(resourceId: string): Promise<ShareView> {
    const share = await this.api.requestShare(resourceId);
    await this.refreshData();
    return share;
  }

  async answerFlow(
    shareId: string,
    decision: "accept" | "decline",
    expiryEpochS: number | null = null,
  ): Promise<ShareView> {
    const options =
      decision === "accept"
        ? { expiryEpochS, keys: this.requireKeys() }
        : { expiryEpochS: null };
    const share = await this.api.answerShare(shareId, decision, options);
    await this.refreshData();
    return share;
  }

  async revokeFlow(shareId: string): Promise<ShareView> {
    const share = await this.api.revokeShare(shareId);
    await this.refreshData();
    return share;
  }

  async retrieveFlow(resourceId: string): Promise<Uint8Array> {
    const keys = this.requireKeys();
    try {
      const { bytes, filename, contentType } = await this.api.downloadRecord(resourceId, keys);
      this.downloadSink(filename, contentType, bytes);
      return bytes;
    } catch (error) {
      if (error instanceof ApiError && error.status === 403) {
        this.state.banner = "Access denied: that record is no longer shared with you.";
        await this.refreshData();
      }
      throw error;
    }
  }

  importKeyFile(content: string): void {
    const { email } = this.vault.importKeyFile(content);
    if (this.state.profile && this.state.profile.email === email) {
      this.state.keys = this.vault.load(email);
      this.state.banner = "Keys imported.";
      this.render();
    }
  }

  exportKeyFile(): string {
    if (!this.state.profile) throw new Error("not logged in");
    return this.vault.exportKeyFile(this.state.profile.email);
  }

  private requireKeys(): KeyMaterial {
    if (!this.state.keys) throw new Error("no keys in this session; import your key file");
    return this.state.keys;
  }

  get isTrustedEntity(): boolean {
    return this.state.profile?.roles.includes("trusted_entity") ?? false;
  }

  // -- rendering --

  render(): void {
    this.root.textContent = "";
    if (this.state.banner) {
      const banner = el("div", "banner", this.state.banner);
      banner.setAttribute("data-role", "banner");
      this.root.appendChild(banner);
    }
    if (!this.state.profile) {
      this.root.appendChild(this.renderAuthForms());
      return;
    }
    this.root.appendChild(this.renderDashboard());
  }

  private renderAuthForms(): HTMLElement {
    const container = el("section", "auth");
    container.appendChild(el("h1", "", "ehrshare portal"));

    const loginForm = el("form", "login-form") as HTMLFormElement;
    loginForm.setAttribute("data-role", "login-form");
    const email = input("email", "email", "you@example.org");
    const password = input("password", "password", "password");
    const submit = el("button", "", "Log in") as HTMLButtonElement;
    submit.type = "submit";
    loginForm.append(email, password, submit);
    loginForm.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.loginFlow(email.value, password.value).catch(() => undefined);
    });
    container.appendChild(loginForm);

    const registerForm = el("form", "register-form") as HTMLFormElement;
    registerForm.setAttribute("data-role", "register-form");
    const regName = input("text", "name", "Full name");
    const regEmail = input("email", "reg-email", "you@example.org");
    const regPassword = input("password", "reg-password", "min. 10 characters");
    const roleSelect = el("select") as HTMLSelectElement;
    for (const role of ["patient", "practitioner", "trusted_entity"]) {
      const option = el("option", "", role) as HTMLOptionElement;
      option.value = role;
      roleSelect.appendChild(option);
    }
    const registerButton = el("button", "", "Register (keys are generated in your browser)") as HTMLButtonElement;
    registerButton.type = "submit";
    registerForm.append(regName, regEmail, regPassword, roleSelect, registerButton);
    registerForm.addEventListener("submit", (event) => {
      event.preventDefault();
      void this.registerAndLogin(
        regName.value,
        regEmail.value,
        regPassword.value,
        [roleSelect.value],
      ).catch(() => undefined);
    });
    container.appendChild(registerForm);
    return container;
  }

  private renderDashboard(): HTMLElement {
    const profile = this.state.profile!;
    const container = el("main", "dashboard");
    const heading = this.isTrustedEntity
      ? `${profile.name} — trusted entity (break-glass access)`
      : `${profile.name} — ${profile.roles.join(", ")}`;
    container.appendChild(el("h1", "", heading));

    const keyRow = el("div", "key-tools");
    const exportButton = el("button", "", "Export key file") as HTMLButtonElement;
    exportButton.setAttribute("data-role", "export-keys");
    exportButton.addEventListener("click", () => {
      const content = this.exportKeyFile();
      this.downloadSink("ehrshare-keys.json", "application/json", new TextEncoder().encode(content));
    });
    const logoutButton = el("button", "", "Log out") as HTMLButtonElement;
    logoutButton.addEventListener("click", () => void this.logoutFlow());
    keyRow.append(exportButton, logoutButton);
    container.appendChild(keyRow);

    container.appendChild(this.renderUpload());
    container.appendChild(this.renderRecordList("My records", this.state.owned, "owned"));
    const sharedTitle = this.isTrustedEntity ? "All reachable records (break-glass)" : "Shared with me";
    container.appendChild(this.renderRecordList(sharedTitle, this.state.shared, "shared"));
    container.appendChild(this.renderShares("Requests for my records", this.state.incoming, true));
    container.appendChild(this.renderShares("My requests", this.state.outgoing, false));
    return container;
  }

  private renderUpload(): HTMLElement {
    const section = el("section", "upload");
    section.appendChild(el("h2", "", "Upload a record"));
    const picker = input("file", "file-picker", "");
    picker.setAttribute("data-role", "file-picker");
    const button = el("button", "", "Encrypt & upload") as HTMLButtonElement;
    button.setAttribute("data-role", "upload-button");
    button.addEventListener("click", () => {
      const file = (picker as HTMLInputElement).files?.[0];
      if (!file) return;
      void file.arrayBuffer().then((buffer) =>
        this.uploadFlow(
          { name: file.name, size: file.size, type: file.type },
          new Uint8Array(buffer),
        ).catch(() => undefined),
      );
    });
    section.append(picker, button);
    return section;
  }

  private renderRecordList(title: string, records: RecordMeta[], role: string): HTMLElement {
    const section = el("section", `records-${role}`);
    section.setAttribute("data-role", `records-${role}`);
    section.appendChild(el("h2", "", title));
    const list = el("ul");
    for (const record of records) {
      const item = el("li", "record");
      item.setAttribute("data-resource-id", record.resource_id);
      item.appendChild(
        el("span", "meta", `${record.filename} (${record.media_type}, ${record.size_bytes} B)`),
      );
      if (record.expiry) {
        item.appendChild(el("span", "expiry", ` expires ${new Date(record.expiry * 1000).toISOString()}`));
      }
      const download = el("button", "", "Download") as HTMLButtonElement;
      download.setAttribute("data-role", "download");
      download.addEventListener("click", () => void this.retrieveFlow(record.resource_id).catch(() => undefined));
      item.appendChild(download);
      list.appendChild(item);
    }
    if (!records.length) list.appendChild(el("li", "empty", "none"));
    section.appendChild(list);
    return section;
  }

  private renderShares(title: string, shares: ShareView[], incoming: boolean): HTMLElement {
    const section = el("section", incoming ? "shares-incoming" : "shares-outgoing");
    section.setAttribute("data-role", incoming ? "shares-incoming" : "shares-outgoing");
    section.appendChild(el("h2", "", title));
    const list = el("ul");
    const ordered = [...shares].sort((a, b) =>
      a.status === b.status ? a.created_at - b.created_at : a.status === "pending" ? -1 : 1,
    );
    for (const share of ordered) {
      const item = el("li", "share");
      item.setAttribute("data-share-id", share.share_id);
      const badge = el("span", `badge badge-${share.status}`, share.status);
      badge.setAttribute("data-role", "status-badge");
      item.appendChild(badge);
      item.appendChild(el("span", "", ` record ${share.resource_id.slice(0, 8)}… `));
      if (share.expiry) {
        const remaining = Math.max(0, share.expiry * 1000 - Date.now());
        item.appendChild(el("span", "countdown", `expires in ${Math.round(remaining / 3600_000)} h`));
      }
      if (incoming && share.status === "pending") {
        const expiryPicker = input("datetime-local", `expiry-${share.share_id}`, "");
        expiryPicker.setAttribute("data-role", "expiry-picker");
        const accept = el("button", "", "Accept") as HTMLButtonElement;
        accept.setAttribute("data-role", "accept");
        accept.addEventListener("click", () => {
          const raw = (expiryPicker as HTMLInputElement).value;
          const expiry = raw ? Date.parse(raw) / 1000 : null;
          void this.answerFlow(share.share_id, "accept", expiry).catch(() => undefined);
        });
        const decline = el("button", "", "Decline") as HTMLButtonElement;
        decline.setAttribute("data-role", "decline");
        decline.addEventListener("click", () => void this.answerFlow(share.share_id, "decline").catch(() => undefined));
        item.append(expiryPicker, accept, decline);
      }
      if (incoming && share.status === "accepted" && !share.break_glass) {
        const revoke = el("button", "", "Revoke") as HTMLButtonElement;
        revoke.setAttribute("data-role", "revoke");
        revoke.addEventListener("click", () => void this.revokeFlow(share.share_id).catch(() => undefined));
        item.appendChild(revoke);
      }
      list.appendChild(item);
    }
    if (!shares.length) list.appendChild(el("li", "empty", "none"));
    section.appendChild(list);
    return section;
  }
}

function el(tag: string, className = "", text = ""): HTMLElement {
  const node = document.createElement(tag);
  if (className) node.className = className;
  if (text) node.textContent = text;
  return node;
}

function input(type: string, name: string, placeholder: string): HTMLInputElement {
  const node = document.createElement("input");
  node.type = type;
  node.name = name;
  node.placeholder = placeholder;
  return node;
}

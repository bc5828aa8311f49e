/**
 * Typed client for the auth and resource HTTP APIs.
 *
 * Token handling follows the platform's transport rules: the access token
 * lives in memory only, the refresh token is an http-only cookie the page
 * never reads, and the CSRF token from the last login/refresh is attached
 * to every cookie-authenticated mutation. A 401 on an authenticated call
 * triggers one silent refresh-and-retry.
 *
 * Secret key material is attached exclusively to the designated transport
 * fields: `X-Pre-Secret-Key`/`X-Pre-Signing-Key` headers on upload and
 * download, and the `secret_key`/`signing_key` body fields of an accept.
 */

import { KeyMaterial } from "./keys.js";

export type FetchLike = (url: string, init?: RequestInit) => Promise<Response>;

export interface UserProfile {
  user_id: string;
  name: string;
  email: string;
  public_key: string;
  verifying_key: string;
  roles: string[];
}

export interface RecordMeta {
  resource_id: string;
  owner_id: string;
  filename: string;
  media_type: string;
  size_bytes: number;
  created_at: number;
  share_id?: string;
  expiry?: number | null;
}

export interface ShareView {
  share_id: string;
  resource_id: string;
  delegator_id: string;
  delegatee_id: string;
  status: "pending" | "accepted" | "declined" | "revoked" | "expired";
  expiry: number | null;
  break_glass: boolean;
  created_at: number;
  updated_at: number;
}

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function toApiError(response: Response): Promise<ApiError> {
  let code = "unknown";
  let message = `HTTP ${response.status}`;
  try {
    const body = await response.json();
    if (body?.detail?.code) {
      code = body.detail.code;
      message = body.detail.message ?? message;
    } else if (body?.detail) {
      message = JSON.stringify(body.detail);
    }
  } catch {
    /* non-JSON error body */
  }
  return new ApiError(response.status, code, message);
}

export interface ApiConfig {
  authUrl: string;
  resourceUrl: string;
  fetchImpl?: FetchLike;
}

export class ApiClient {
  private accessToken: string | null = null;
  private csrfToken: string | null = null;
  private fetchImpl: FetchLike;
  readonly authUrl: string;
  readonly resourceUrl: string;

  constructor(config: ApiConfig) {
    this.authUrl = config.authUrl.replace(/\/$/, "");
    this.resourceUrl = config.resourceUrl.replace(/\/$/, "");
    this.fetchImpl = config.fetchImpl ?? ((url, init) => fetch(url, init));
  }

  get isAuthenticated(): boolean {
    return this.accessToken !== null;
  }

  // -- auth endpoints --

  async register(
    name: string,
    email: string,
    password: string,
    keys: KeyMaterial,
    roles: string[],
  ): Promise<UserProfile> {
    const response = await this.fetchImpl(`${this.authUrl}/auth/register`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({
        name,
        email,
        password,
        public_key: keys.publicKey,
        verifying_key: keys.verifyingKey,
        roles,
      }),
    });
    if (!response.ok) throw await toApiError(response);
    return response.json();
  }

  async login(email: string, password: string): Promise<UserProfile> {
    const response = await this.fetchImpl(`${this.authUrl}/auth/login`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      credentials: "include",
      body: JSON.stringify({ email, password }),
    });
    if (!response.ok) throw await toApiError(response);
    const body = await response.json();
    this.accessToken = body.access_token;
    this.csrfToken = body.csrf_token;
    return body.user;
  }

  /** Cookie-based rotation; requires the CSRF header, returns nothing readable. */
  async refresh(): Promise<void> {
    const response = await this.fetchImpl(`${this.authUrl}/auth/refresh`, {
      method: "POST",
      headers: this.csrfToken ? { "X-CSRF-Token": this.csrfToken } : {},
      credentials: "include",
    });
    if (!response.ok) throw await toApiError(response);
    const body = await response.json();
    this.accessToken = body.access_token;
    this.csrfToken = body.csrf_token;
  }

  async logout(): Promise<void> {
    const response = await this.fetchImpl(`${this.authUrl}/auth/logout`, {
      method: "POST",
      headers: this.csrfToken ? { "X-CSRF-Token": this.csrfToken } : {},
      credentials: "include",
    });
    this.accessToken = null;
    this.csrfToken = null;
    if (!response.ok) throw await toApiError(response);
  }

  // -- authenticated plumbing --

  private async authedFetch(url: string, init: RequestInit, retry = true): Promise<Response> {
    if (!this.accessToken) throw new ApiError(401, "not_logged_in", "no session");
    const headers = new Headers(init.headers);
    headers.set("Authorization", `Bearer ${this.accessToken}`);
    const response = await this.fetchImpl(url, { ...init, headers });
    if (response.status === 401 && retry) {
      await this.refresh(); // silent refresh via the http-only cookie
      return this.authedFetch(url, init, false);
    }
    if (!response.ok) throw await toApiError(response);
    return response;
  }

  // -- resource endpoints --

  async listRecords(): Promise<{ owned: RecordMeta[]; shared: RecordMeta[] }> {
    const response = await this.authedFetch(`${this.resourceUrl}/ehr`, { method: "GET" });
    return response.json();
  }

  async listShares(direction: "incoming" | "outgoing"): Promise<ShareView[]> {
    const response = await this.authedFetch(
      `${this.resourceUrl}/shares?direction=${direction}`,
      { method: "GET" },
    );
    return response.json();
  }

  async uploadRecord(
    filename: string,
    contentType: string,
    bytes: Uint8Array,
    keys: KeyMaterial,
  ): Promise<RecordMeta> {
    const { body, contentType: multipartType } = buildMultipart(filename, contentType, bytes);
    const response = await this.authedFetch(`${this.resourceUrl}/ehr`, {
      method: "POST",
      headers: {
        "Content-Type": multipartType,
        "X-Pre-Secret-Key": keys.secretKey,
        "X-Pre-Signing-Key": keys.signingKey,
      },
      body,
    });
    return response.json();
  }

  async downloadRecord(
    resourceId: string,
    keys: KeyMaterial,
  ): Promise<{ bytes: Uint8Array; filename: string; contentType: string }> {
    const response = await this.authedFetch(`${this.resourceUrl}/ehr/${resourceId}`, {
      method: "GET",
      headers: { "X-Pre-Secret-Key": keys.secretKey },
    });
    const buffer = await response.arrayBuffer();
    return {
      bytes: new Uint8Array(buffer),
      filename: response.headers.get("X-Filename") ?? "record",
      contentType: response.headers.get("Content-Type") ?? "application/octet-stream",
    };
  }

  async requestShare(resourceId: string): Promise<ShareView> {
    const response = await this.authedFetch(`${this.resourceUrl}/shares`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify({ resource_id: resourceId }),
    });
    return response.json();
  }

  async answerShare(
    shareId: string,
    decision: "accept" | "decline",
    options: {
      expiryEpochS?: number | null;
      threshold?: number;
      shares?: number;
      keys?: KeyMaterial;
    } = {},
  ): Promise<ShareView> {
    const payload: Record<string, unknown> = {
      decision,
      expiry_epoch_s: options.expiryEpochS ?? null,
      threshold: options.threshold ?? 1,
      shares: options.shares ?? 1,
    };
    if (decision === "accept") {
      if (!options.keys) throw new ApiError(400, "missing_keys", "accepting requires keys");
      payload.secret_key = options.keys.secretKey;
      payload.signing_key = options.keys.signingKey;
    }
    const response = await this.authedFetch(`${this.resourceUrl}/shares/${shareId}/answer`, {
      method: "POST",
      headers: { "Content-Type": "application/json" },
      body: JSON.stringify(payload),
    });
    return response.json();
  }

  async revokeShare(shareId: string): Promise<ShareView> {
    const response = await this.authedFetch(`${this.resourceUrl}/shares/${shareId}/revoke`, {
      method: "POST",
    });
    return response.json();
  }
}

/** Hand-rolled multipart so the same code path works in browsers and tests. */
function buildMultipart(
  filename: string,
  contentType: string,
  bytes: Uint8Array,
): { body: Uint8Array; contentType: string } {
  const boundary = `ehrshare-${Math.random().toString(36).slice(2)}`;
  const encoder = new TextEncoder();
  const head = encoder.encode(
    `--${boundary}\r\n` +
      `Content-Disposition: form-data; name="file"; filename="${filename}"\r\n` +
      `Content-Type: ${contentType}\r\n\r\n`,
  );
  const tail = encoder.encode(`\r\n--${boundary}--\r\n`);
  const body = new Uint8Array(head.length + bytes.length + tail.length);
  body.set(head, 0);
  body.set(bytes, head.length);
  body.set(tail, head.length + bytes.length);
  return { body, contentType: `multipart/form-data; boundary=${boundary}` };
}

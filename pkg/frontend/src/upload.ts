/** Client-side upload validation: reject before any network traffic. */

export const MAX_UPLOAD_BYTES = 50 * 1024 * 1024;

const MEDIA_BY_MIME: Record<string, string> = {
  "application/pdf": "pdf",
  "image/png": "png",
  "image/jpeg": "jpeg",
};

const MEDIA_BY_EXTENSION: Record<string, string> = {
  pdf: "pdf",
  png: "png",
  jpg: "jpeg",
  jpeg: "jpeg",
};

export interface UploadCandidate {
  name: string;
  size: number;
  type: string; // MIME type as reported by the browser
}

export type UploadCheck =
  | { ok: true; mediaType: string; contentType: string }
  | { ok: false; reason: string };

export function checkUpload(candidate: UploadCandidate): UploadCheck {
  if (candidate.size > MAX_UPLOAD_BYTES) {
    return {
      ok: false,
      reason: `file is ${candidate.size} bytes; the limit is ${MAX_UPLOAD_BYTES}`,
    };
  }
  const byMime = MEDIA_BY_MIME[candidate.type];
  const extension = candidate.name.split(".").pop()?.toLowerCase() ?? "";
  const byExtension = MEDIA_BY_EXTENSION[extension];
  const mediaType = byMime ?? byExtension;
  if (!mediaType) {
    return { ok: false, reason: `unsupported file type (allowed: pdf, png, jpeg)` };
  }
  const contentType =
    Object.entries(MEDIA_BY_MIME).find(([, media]) => media === mediaType)?.[0] ??
    "application/octet-stream";
  return { ok: true, mediaType, contentType };
}

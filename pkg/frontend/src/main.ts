import { ApiClient } from "./api.js";
import { PortalApp } from "./app.js";
import { KeyVault } from "./session.js";

declare global {
  interface Window {
    EHRSHARE_CONFIG?: { authUrl: string; resourceUrl: string };
  }
}

const config = window.EHRSHARE_CONFIG ?? {
  authUrl: "http://127.0.0.1:8001",
  resourceUrl: "http://127.0.0.1:8003",
};

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const app = new PortalApp(new ApiClient(config), new KeyVault(window.sessionStorage), root);
app.render();

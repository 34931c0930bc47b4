import { createApp } from "./app.js";

declare global {
  interface Window {
    SIGCOMPOSE_SERVICE_URL?: string;
  }
}

const params = new URLSearchParams(window.location.search);
const serviceUrl =
  params.get("service") ??
  window.SIGCOMPOSE_SERVICE_URL ??
  "http://127.0.0.1:8000";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app root element");
createApp(root, { serviceUrl });

import { HttpClient } from "./api.js";
import { createApp } from "./app.js";

const DEFAULT_SERVICE = "http://127.0.0.1:8600";

function serviceUrl(): string {
  const params = new URLSearchParams(window.location.search);
  return params.get("service") ?? DEFAULT_SERVICE;
}

window.addEventListener("DOMContentLoaded", () => {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app mount point");
  }
  createApp(root, new HttpClient(serviceUrl()));
});

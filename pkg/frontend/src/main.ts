import { ApiClient } from "./api.js";
import { ExplorerApp } from "./app.js";

// Served by `posthoc serve --ui <dist>` the API lives at the same origin;
// opened any other way, point at the service with ?api=http://host:port
function apiBase(): string {
  const override = new URLSearchParams(window.location.search).get("api");
  return override ?? "";
}

window.addEventListener("DOMContentLoaded", () => {
  const mount = document.getElementById("app");
  if (!mount) throw new Error("missing #app mount node");
  new ExplorerApp(mount, new ApiClient(apiBase()));
});

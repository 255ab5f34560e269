/** Browser entry point: mount the operator console against the host that
 * served this page (the ground-control service).
 */

import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (!root) throw new Error("missing #app mount point");

const params = new URLSearchParams(location.search);
const mode = params.get("mode") === "accelerated" ? "accelerated" : "realtime";
const debug = params.get("debug") === "1";

mountApp(
  root,
  { baseUrl: location.origin },
  { mode, config: debug ? { debug: true } : {} },
).catch((err) => {
  root.textContent = `failed to start session: ${err}`;
});

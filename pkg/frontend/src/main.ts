/** Browser entry point: mount the app on #app against the serving origin. */

import { initApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  initApp({ root });
}

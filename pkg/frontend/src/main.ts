import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  // served from the bridge itself, so same-origin API paths just work
  mountApp(root);
}

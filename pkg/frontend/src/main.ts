import { Client } from "./api.js";
import { mountApp } from "./app.js";

const root = document.getElementById("app");
if (root) {
  void mountApp(root, new Client(""));
}

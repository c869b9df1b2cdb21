import { ApiClient } from "./api.js";
import { mountApp } from "./app.js";

const params = new URLSearchParams(window.location.search);
const serverUrl = params.get("server") ?? "http://127.0.0.1:8080";
const client = new ApiClient(serverUrl);

async function boot(): Promise<void> {
  const root = document.getElementById("app");
  if (!root) {
    throw new Error("missing #app mount point");
  }
  const datasourceId =
    params.get("datasource") ?? (await client.listDatasources()).ids[0];
  if (!datasourceId) {
    root.textContent = "No data sources are registered on the server.";
    return;
  }
  mountApp(root, client, datasourceId);
}

void boot();

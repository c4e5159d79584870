import { ApiClient } from "./api.js";
import { OperatorConsole } from "./console.js";

const TICK_MS = 1000;

async function main(): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const base = params.get("api") ?? "";
  const scenarioId = params.get("scenario");
  const root = document.getElementById("console");
  if (!root) throw new Error("missing #console mount point");

  const client = new ApiClient(base);
  const console_ = new OperatorConsole(root, client);
  await console_.init();

  if (scenarioId) {
    // Polling drives the scenario clock: one tick per refresh.
    const loop = async () => {
      await console_.refresh(scenarioId);
      window.setTimeout(() => void loop(), TICK_MS);
    };
    void loop();
  }
}

void main();

import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    // training runs are long synchronous loops; the forks pool tolerates a
    // blocked event loop where the default worker-thread RPC does not
    pool: "forks",
    testTimeout: 300000,
  },
});

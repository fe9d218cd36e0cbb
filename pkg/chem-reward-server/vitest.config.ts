import { defineConfig } from "vitest/config";

// WASM init takes a few seconds and the protocol tests spawn real
// server processes, so the default 5 s timeout is far too tight.
export default defineConfig({
  test: {
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});

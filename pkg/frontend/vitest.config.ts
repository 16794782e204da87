import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 120_000,
    hookTimeout: 60_000,
    // the end-to-end suite owns a real server process; run files serially
    fileParallelism: false,
  },
});

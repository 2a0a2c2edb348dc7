import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    testTimeout: 30_000,
    // integration tests share one spawned service; run files sequentially
    fileParallelism: false,
  },
});

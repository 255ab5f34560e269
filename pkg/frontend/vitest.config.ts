import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    environment: "jsdom",
    include: ["tests/**/*.test.ts"],
    // the e2e test spawns the real ground-control service
    testTimeout: 60_000,
    hookTimeout: 60_000,
    fileParallelism: false,
  },
});

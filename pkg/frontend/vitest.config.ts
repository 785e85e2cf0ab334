import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    // integration tests spawn the backend and wait for real runs
    testTimeout: 60_000,
    hookTimeout: 60_000,
  },
});

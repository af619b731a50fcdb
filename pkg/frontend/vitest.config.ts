import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    environment: "node",
    // every test that spawns the CLI waits on a child process
    testTimeout: 120_000,
    hookTimeout: 120_000,
  },
});

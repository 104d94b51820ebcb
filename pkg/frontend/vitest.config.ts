import { defineConfig } from "vitest/config";

export default defineConfig({
  test: {
    include: ["tests/**/*.test.ts"],
    globalSetup: process.env.SKIP_LIVE ? [] : ["tests/global-setup.ts"],
    testTimeout: 120_000,
    hookTimeout: 300_000,
  },
});

import { defineConfig } from "vitest/config";

export default defineConfig({
  server: {
    // The session service owns all state; the dev server only serves the shell.
    proxy: {
      "/sessions": { target: "http://127.0.0.1:8000", changeOrigin: true },
    },
  },
  test: {
    environment: "jsdom",
  },
});

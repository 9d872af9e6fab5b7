import { beforeAll } from "vitest";

import { enableFastBackend } from "../src/backend";

beforeAll(async () => {
  await enableFastBackend();
});

import { readFileSync } from "node:fs";
import { join } from "node:path";

export function serviceUrl(): string {
  // set by global_setup; the file is a fallback for odd worker setups
  const fromEnv = process.env.SIGCOMPOSE_TEST_SERVICE_URL;
  if (fromEnv) return fromEnv;
  const path = join(process.cwd(), "tests", ".service.json");
  return JSON.parse(readFileSync(path, "utf-8")).url as string;
}

/** Poll until `condition` returns truthy; fails loudly on timeout. */
export async function waitFor<T>(
  condition: () => T | null | undefined | false,
  what: string,
  timeoutMs = 10_000
): Promise<T> {
  const deadline = Date.now() + timeoutMs;
  while (Date.now() < deadline) {
    const value = condition();
    if (value) return value;
    await new Promise((r) => setTimeout(r, 10));
  }
  throw new Error(`timed out waiting for ${what}`);
}

export function type(input: HTMLInputElement, text: string): void {
  input.value = text;
  input.dispatchEvent(new Event("input", { bubbles: true }));
}

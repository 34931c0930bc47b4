// Out-of-order responses must never repaint the UI: the rendered results
// always match the latest submitted (fund, range, k).

import { describe, expect, it } from "vitest";

import { createApp } from "../src/app.js";
import type { FetchFn } from "../src/api.js";
import { waitFor, type } from "./helpers.js";

interface Pending {
  url: string;
  resolve: (body: unknown) => void;
}

function controllableFetch(): { fetchFn: FetchFn; pending: Pending[] } {
  const pending: Pending[] = [];
  const fetchFn = ((url: string) =>
    new Promise((resolvePromise) => {
      pending.push({
        url: String(url),
        resolve: (body: unknown) =>
          resolvePromise({
            ok: true,
            status: 200,
            json: async () => body,
          } as Response),
      });
    })) as unknown as FetchFn;
  return { fetchFn, pending };
}

function similarBody(fundIds: string[], k: number) {
  return {
    query: {
      fund: {
        fund_id: "Q", name: "Query", category: "", domicile: "",
        classifiable: true,
      },
      from: "2000-01",
      to: "2001-12",
      k,
    },
    results: fundIds.map((fund_id) => ({
      fund: { fund_id, name: fund_id, category: "", domicile: "",
              classifiable: true },
      counter: 1,
      slices_in_range: 4,
      r: null,
      benefits: [],
    })),
  };
}

describe("superseded-response discard", () => {
  it("a late earlier response never overwrites the newest one", async () => {
    document.body.innerHTML = "<div id='app'></div>";
    const { fetchFn, pending } = controllableFetch();
    const app = createApp(document.getElementById("app")!, {
      serviceUrl: "http://service.invalid",
      fetchFn,
      debounceMs: 0,
    });

    void app.selectFund("Q"); // request 1 stays pending
    await waitFor(() => pending.length === 1, "first request issued");

    type(document.querySelector<HTMLInputElement>(".k-input")!, "2");
    await waitFor(() => pending.length === 2, "second request issued");

    pending[1].resolve(similarBody(["NEWEST"], 2)); // newest answers first
    await waitFor(
      () => document.querySelectorAll(".result-row").length === 1,
      "newest response rendered"
    );

    pending[0].resolve(similarBody(["STALE-A", "STALE-B"], 6)); // stale arrives late
    await new Promise((r) => setTimeout(r, 50));

    const shown = Array.from(
      document.querySelectorAll<HTMLElement>(".result-row")
    ).map((row) => row.dataset.fundId);
    expect(shown).toEqual(["NEWEST"]);
  });
});

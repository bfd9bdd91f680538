import { mkdtempSync, readFileSync, rmSync, writeFileSync } from "node:fs";
import { tmpdir } from "node:os";
import { join } from "node:path";

import { afterAll, describe, expect, it } from "vitest";

import { main } from "../src/cli.js";
import { summaryCsv } from "./csv.test.js";

const dir = mkdtempSync(join(tmpdir(), "otafl-figures-"));
const csvPath = join(dir, "fl_summary.csv");
writeFileSync(csvPath, summaryCsv());

afterAll(() => rmSync(dir, { recursive: true, force: true }));

describe("cli", () => {
  it("renders a figure and is byte-stable across runs", () => {
    const out = join(dir, "fig.svg");
    expect(main(["render", "--csv", csvPath, "--kind", "per_round", "--out", out])).toBe(0);
    const first = readFileSync(out);
    expect(main(["render", "--csv", csvPath, "--kind", "per_round", "--out", out])).toBe(0);
    expect(readFileSync(out).equals(first)).toBe(true);
    expect(first.toString()).toContain('class="curve"');
  });

  it("rejects usage errors with exit code 2", () => {
    expect(main([])).toBe(2);
    expect(main(["render", "--csv", csvPath, "--out", join(dir, "x.svg")])).toBe(2);
    expect(
      main(["render", "--csv", csvPath, "--kind", "nope", "--out", join(dir, "x.svg")])
    ).toBe(2);
  });

  it("maps data errors to exit code 1", () => {
    const out = join(dir, "y.svg");
    expect(main(["render", "--csv", join(dir, "missing.csv"), "--kind", "per_round", "--out", out])).toBe(1);
    const bare = join(dir, "bare.csv");
    writeFileSync(bare, "a,b\n1,2\n");
    expect(main(["render", "--csv", bare, "--kind", "per_round", "--out", out])).toBe(1);
  });
});

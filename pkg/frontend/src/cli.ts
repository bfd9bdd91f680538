import { writeFileSync } from "node:fs";
import { pathToFileURL } from "node:url";

import { loadCsv } from "./csv.js";
import { FIGURE_KINDS, FigureKind, renderFigure } from "./figures.js";

const USAGE = `usage: cli.js render --csv <path> --kind <${FIGURE_KINDS.join("|")}> --out <path> [--log-y]`;

interface Args {
  csv: string;
  kind: FigureKind;
  out: string;
  logY: boolean;
}

function parseArgs(argv: string[]): Args | null {
  if (argv[0] !== "render") return null;
  const flags = new Map<string, string>();
  let logY = false;
  for (let i = 1; i < argv.length; i++) {
    if (argv[i] === "--log-y") {
      logY = true;
    } else if (argv[i].startsWith("--") && i + 1 < argv.length) {
      flags.set(argv[i].slice(2), argv[++i]);
    } else {
      return null;
    }
  }
  const csv = flags.get("csv");
  const kind = flags.get("kind");
  const out = flags.get("out");
  if (!csv || !kind || !out) return null;
  if (!(FIGURE_KINDS as readonly string[]).includes(kind)) return null;
  return { csv, kind: kind as FigureKind, out, logY };
}

export function main(argv: string[]): number {
  const args = parseArgs(argv);
  if (!args) {
    console.error(USAGE);
    return 2;
  }
  try {
    const svg = renderFigure(loadCsv(args.csv), args.kind, { logY: args.logY });
    writeFileSync(args.out, svg);
  } catch (err) {
    console.error(`error: ${err instanceof Error ? err.message : err}`);
    return 1;
  }
  console.log(`wrote ${args.out}`);
  return 0;
}

if (process.argv[1] && import.meta.url === pathToFileURL(process.argv[1]).href) {
  process.exit(main(process.argv.slice(2)));
}

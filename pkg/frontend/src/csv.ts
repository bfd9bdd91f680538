import { readFileSync } from "node:fs";

export interface Table {
  /** Reproducibility header lines, without the leading "# ". */
  header: string[];
  columns: string[];
  rows: string[][];
}

const CONFIG_LINE = /^\S+\.\S+ = /;

export function parseCsv(text: string): Table {
  const lines = text.split("\n");
  if (lines.length && lines[lines.length - 1] === "") lines.pop();

  const header: string[] = [];
  let i = 0;
  while (i < lines.length && lines[i].startsWith("# ")) {
    header.push(lines[i].slice(2));
    i++;
  }
  if (!header.some((line) => CONFIG_LINE.test(line))) {
    throw new Error("CSV lacks the reproducibility header (# section.key = value lines)");
  }
  if (i >= lines.length) {
    throw new Error("CSV has no column row after the header block");
  }

  const columns = lines[i].split(",");
  const rows = lines.slice(i + 1).map((line) => line.split(","));
  const bad = rows.findIndex((r) => r.length !== columns.length);
  if (bad >= 0) {
    throw new Error(`row ${bad + 1} has ${rows[bad].length} fields, expected ${columns.length}`);
  }
  return { header, columns, rows };
}

export function loadCsv(path: string): Table {
  return parseCsv(readFileSync(path, "utf8"));
}

export function requireColumns(table: Table, names: string[]): void {
  const missing = names.filter((n) => !table.columns.includes(n));
  if (missing.length) {
    throw new Error(`CSV is missing required columns: ${missing.join(", ")}`);
  }
}

export function cell(table: Table, row: string[], column: string): string {
  const idx = table.columns.indexOf(column);
  if (idx < 0) throw new Error(`CSV is missing required columns: ${column}`);
  return row[idx];
}

export function numericCell(table: Table, row: string[], column: string): number {
  const raw = cell(table, row, column);
  const value = Number(raw);
  if (!Number.isFinite(value)) {
    throw new Error(`column ${column} holds non-numeric value ${JSON.stringify(raw)}`);
  }
  return value;
}

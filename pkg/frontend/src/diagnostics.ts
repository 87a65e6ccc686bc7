/**
 * Parse-diagnostic helpers: the service reports one problem at a time
 * with a 1-based line and column; the editor needs character offsets.
 */

import type { ParseResponse } from "./api.js";

export interface Diagnostic {
  line: number;
  column: number;
  message: string;
}

export function fromParseResponse(response: ParseResponse): Diagnostic[] {
  if (response.ok) return [];
  return [
    {
      line: response.line,
      column: response.column,
      message: response.message,
    },
  ];
}

export function describe(diagnostic: Diagnostic): string {
  return `line ${diagnostic.line}, column ${diagnostic.column}: ${diagnostic.message}`;
}

/**
 * Character offset of a 1-based line/column position, clamped to the
 * text. Columns past a line's end land at the end of that line.
 */
export function offsetOf(text: string, line: number, column: number): number {
  const lines = text.split("\n");
  const lineIndex = Math.min(Math.max(line, 1), lines.length) - 1;
  let offset = 0;
  for (let i = 0; i < lineIndex; i++) {
    offset += lines[i].length + 1;
  }
  const columnIndex = Math.min(Math.max(column, 1) - 1, lines[lineIndex].length);
  return offset + columnIndex;
}

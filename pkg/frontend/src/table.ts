/**
 * Result table rendering. Cell text is the record's value verbatim
 * (null shown as NULL); alignment is left to CSS.
 */

import { TableData } from "./api.js";

export function cellText(value: unknown): string {
  return value === null || value === undefined ? "NULL" : String(value);
}

export function renderTable(target: HTMLElement, table: TableData | null): void {
  target.replaceChildren();
  if (table === null) {
    return;
  }
  const element = document.createElement("table");
  element.className = "result-table";

  const head = element.createTHead().insertRow();
  for (const [name, sqlType] of table.columns) {
    const cell = document.createElement("th");
    cell.textContent = name;
    cell.title = sqlType;
    head.appendChild(cell);
  }

  const body = element.createTBody();
  for (const row of table.rows) {
    const tr = body.insertRow();
    for (const value of row) {
      tr.insertCell().textContent = cellText(value);
    }
  }
  target.appendChild(element);

  if (table.truncated) {
    const note = document.createElement("p");
    note.className = "truncated-note";
    note.textContent = "Result truncated at the row limit.";
    target.appendChild(note);
  }
}

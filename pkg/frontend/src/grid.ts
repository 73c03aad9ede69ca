import { Cell, TablePayload } from "./api.js";

export const PAGE_SIZE = 100;

function cellText(v: Cell): string {
  if (v === null) {
    return "∅";
  }
  if (typeof v === "boolean") {
    return v ? "true" : "false";
  }
  return String(v);
}

/**
 * Render one page of a result table into `container`. The full payload stays
 * in memory client-side; only PAGE_SIZE rows are in the DOM at a time.
 */
export function renderGrid(container: HTMLElement, table: TablePayload, page = 0): void {
  container.textContent = "";
  const total = table.cells.length;
  const pages = Math.max(1, Math.ceil(total / PAGE_SIZE));
  const current = Math.min(Math.max(page, 0), pages - 1);

  const grid = document.createElement("table");
  grid.className = "grid";
  const thead = document.createElement("thead");
  const headRow = document.createElement("tr");
  for (let j = 0; j < table.columns.length; j++) {
    const th = document.createElement("th");
    th.textContent = table.columns[j] ?? "";
    th.title = table.types[j] ?? "";
    headRow.appendChild(th);
  }
  thead.appendChild(headRow);
  grid.appendChild(thead);

  const tbody = document.createElement("tbody");
  const start = current * PAGE_SIZE;
  for (const row of table.cells.slice(start, start + PAGE_SIZE)) {
    const tr = document.createElement("tr");
    for (const value of row) {
      const td = document.createElement("td");
      td.textContent = cellText(value);
      if (value === null) {
        td.className = "null-cell";
      }
      tr.appendChild(td);
    }
    tbody.appendChild(tr);
  }
  grid.appendChild(tbody);
  container.appendChild(grid);

  const pager = document.createElement("div");
  pager.className = "pager";
  const prev = document.createElement("button");
  prev.type = "button";
  prev.className = "page-prev";
  prev.textContent = "‹ prev";
  prev.disabled = current === 0;
  const label = document.createElement("span");
  label.className = "page-label";
  const from = total === 0 ? 0 : start + 1;
  const to = Math.min(start + PAGE_SIZE, total);
  label.textContent = `rows ${from}–${to} of ${total}`;
  const next = document.createElement("button");
  next.type = "button";
  next.className = "page-next";
  next.textContent = "next ›";
  next.disabled = current >= pages - 1;

  prev.addEventListener("click", () => renderGrid(container, table, current - 1));
  next.addEventListener("click", () => renderGrid(container, table, current + 1));

  pager.appendChild(prev);
  pager.appendChild(label);
  pager.appendChild(next);
  container.appendChild(pager);
}

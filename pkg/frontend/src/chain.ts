// Splitting chain text into per-command card texts. The timeline must show
// exactly what the service executed, so the split respects quoted strings
// instead of naively cutting at every semicolon; joining the pieces back with
// "; " must re-parse server-side to the same chain.

export function splitChainText(chainText: string): string[] {
  const parts: string[] = [];
  let current = "";
  let quote: string | null = null;
  for (const ch of chainText) {
    if (quote !== null) {
      current += ch;
      if (ch === quote) {
        quote = null;
      }
      continue;
    }
    if (ch === "'" || ch === '"') {
      quote = ch;
      current += ch;
      continue;
    }
    if (ch === ";") {
      parts.push(current);
      current = "";
      continue;
    }
    current += ch;
  }
  if (current.trim() !== "") {
    parts.push(current);
  }
  // Only the edges are trimmed: squeezing interior whitespace could rewrite
  // string literals and break the round-trip guarantee.
  return parts.map((p) => p.trim()).filter((p) => p !== "");
}

export function joinChainText(cards: string[]): string {
  return cards.join("; ");
}

import { Answered } from "./api.js";
import { splitChainText } from "./chain.js";

/**
 * One card per executed command: the command text exactly as the service
 * returned it, plus the row flow through that step. Cards are never invented
 * client-side; if the split and the step logs disagree the raw chain text is
 * shown instead so the user still sees the truth.
 */
export function renderTimeline(container: HTMLElement, answer: Answered): void {
  container.textContent = "";
  const cards = splitChainText(answer.chain_text);

  if (cards.length !== answer.step_logs.length) {
    const fallback = document.createElement("pre");
    fallback.className = "chain-raw";
    fallback.textContent = answer.chain_text;
    container.appendChild(fallback);
    return;
  }

  for (let i = 0; i < cards.length; i++) {
    const log = answer.step_logs[i];
    if (log === undefined) {
      continue;
    }
    const card = document.createElement("div");
    card.className = "chain-card";

    const text = document.createElement("code");
    text.className = "chain-card-text";
    text.textContent = cards[i] ?? "";
    card.appendChild(text);

    const flow = document.createElement("span");
    flow.className = "chain-card-rows";
    flow.textContent = `${log.rows_in} → ${log.rows_out} rows`;
    card.appendChild(flow);

    for (const warning of log.warnings) {
      const w = document.createElement("span");
      w.className = "chain-card-warning";
      w.textContent = warning;
      card.appendChild(w);
    }
    container.appendChild(card);
  }
}

export function timelineCardTexts(container: HTMLElement): string[] {
  return Array.from(container.querySelectorAll(".chain-card-text")).map(
    (node) => node.textContent ?? "",
  );
}

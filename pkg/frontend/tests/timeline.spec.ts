import { beforeEach, describe, expect, it } from "vitest";
import { renderTimeline, timelineCardTexts } from "../src/timeline.js";
import { golden, mount } from "./helpers.js";

describe("renderTimeline", () => {
  let root: HTMLElement;
  beforeEach(() => {
    root = mount();
  });

  it("renders one card per command from the recorded golden answer", () => {
    const answer = golden();
    renderTimeline(root, answer);
    const cards = root.querySelectorAll(".chain-card");
    expect(cards).toHaveLength(3);
    expect(timelineCardTexts(root)).toEqual([
      "DERIVE profit_margin = (box_office - cost) / cost",
      "SORT profit_margin DESC",
      "SLICE TOP 5",
    ]);
    const flows = Array.from(root.querySelectorAll(".chain-card-rows")).map(
      (n) => n.textContent,
    );
    expect(flows).toEqual(["6 → 6 rows", "6 → 6 rows", "6 → 5 rows"]);
  });

  it("joining the cards reproduces an equivalent chain text", () => {
    const answer = golden();
    renderTimeline(root, answer);
    expect(timelineCardTexts(root).join("; ")).toBe(
      answer.chain_text.replace(/;\n/g, "; "),
    );
  });

  it("shows step warnings on the owning card", () => {
    const answer = golden();
    const firstStep = answer.step_logs[0];
    if (!firstStep) throw new Error("fixture lost its steps");
    firstStep.warnings = ["division by zero in 1 row"];
    renderTimeline(root, answer);
    const card = root.querySelectorAll(".chain-card")[0];
    expect(card?.querySelector(".chain-card-warning")?.textContent).toBe(
      "division by zero in 1 row",
    );
  });

  it("falls back to the raw chain text when cards and steps disagree", () => {
    const answer = golden();
    answer.step_logs = answer.step_logs.slice(0, 1);
    renderTimeline(root, answer);
    expect(root.querySelectorAll(".chain-card")).toHaveLength(0);
    expect(root.querySelector(".chain-raw")?.textContent).toBe(answer.chain_text);
  });
});

import {
  Answered,
  ApiClient,
  HistoryEntry,
  QueryOutcome,
  describeError,
  isServiceError,
} from "./api.js";
import { renderGrid } from "./grid.js";
import { renderPlot } from "./plot.js";
import { renderTimeline } from "./timeline.js";

interface LogEntry {
  input: string;
  answer: Answered;
}

export interface AppHandles {
  root: HTMLElement;
  uploadCsv(csv: string, name: string): Promise<void>;
  submitQuery(text: string): Promise<void>;
  /** resolves once the current request (if any) has settled and rendered */
  idle(): Promise<void>;
  tableId(): string | null;
}

const SHELL = `
  <header class="app-header">
    <h1>tablechain</h1>
    <span class="table-info">no table loaded</span>
  </header>
  <div class="banner error-banner" hidden>
    <span class="error-text"></span>
    <button type="button" class="error-dismiss">dismiss</button>
  </div>
  <div class="banner clarify-banner" hidden>
    <p class="clarify-question"></p>
    <ul class="clarify-candidates"></ul>
  </div>
  <section class="upload-panel">
    <label>
      load a CSV
      <input type="file" class="csv-file" accept=".csv,text/csv">
    </label>
  </section>
  <form class="query-form">
    <input type="text" class="query-input" placeholder="ask about the table…" disabled>
    <button type="submit" class="query-submit" disabled>Ask</button>
  </form>
  <section class="timeline"></section>
  <section class="result-panel">
    <p class="reply"></p>
    <ul class="rationale"></ul>
    <p class="corrections"></p>
    <div class="grid-panel"></div>
  </section>
  <section class="plot-panel"></section>
  <aside class="history-panel">
    <h2>history</h2>
    <ol class="history-list"></ol>
    <div class="playback-controls">
      <button type="button" class="playback-start" disabled>replay session</button>
      <button type="button" class="playback-prev" hidden>‹ back</button>
      <span class="playback-label" hidden></span>
      <button type="button" class="playback-next" hidden>forward ›</button>
      <button type="button" class="playback-exit" hidden>resume live</button>
    </div>
  </aside>
`;

export function createApp(root: HTMLElement, client: ApiClient): AppHandles {
  root.classList.add("app");
  root.innerHTML = SHELL;

  const pick = <T extends Element>(selector: string): T => {
    const node = root.querySelector<T>(selector);
    if (!node) {
      throw new Error(`app shell is missing ${selector}`);
    }
    return node;
  };

  const tableInfo = pick<HTMLElement>(".table-info");
  const errorBanner = pick<HTMLElement>(".error-banner");
  const errorText = pick<HTMLElement>(".error-text");
  const clarifyBanner = pick<HTMLElement>(".clarify-banner");
  const clarifyQuestion = pick<HTMLElement>(".clarify-question");
  const clarifyCandidates = pick<HTMLElement>(".clarify-candidates");
  const fileInput = pick<HTMLInputElement>(".csv-file");
  const form = pick<HTMLFormElement>(".query-form");
  const input = pick<HTMLInputElement>(".query-input");
  const submit = pick<HTMLButtonElement>(".query-submit");
  const timeline = pick<HTMLElement>(".timeline");
  const reply = pick<HTMLElement>(".reply");
  const rationale = pick<HTMLElement>(".rationale");
  const corrections = pick<HTMLElement>(".corrections");
  const gridPanel = pick<HTMLElement>(".grid-panel");
  const plotPanel = pick<HTMLElement>(".plot-panel");
  const historyList = pick<HTMLElement>(".history-list");
  const playStart = pick<HTMLButtonElement>(".playback-start");
  const playPrev = pick<HTMLButtonElement>(".playback-prev");
  const playNext = pick<HTMLButtonElement>(".playback-next");
  const playExit = pick<HTMLButtonElement>(".playback-exit");
  const playLabel = pick<HTMLElement>(".playback-label");

  let tableId: string | null = null;
  let busy = false;
  let pending: Promise<void> = Promise.resolve();
  const sessionLog: LogEntry[] = [];
  let playbackIndex: number | null = null;
  let liveAnswer: Answered | null = null;

  function showError(message: string): void {
    errorText.textContent = message;
    errorBanner.hidden = false;
  }

  function hideError(): void {
    errorBanner.hidden = true;
    errorText.textContent = "";
  }

  function hideClarify(): void {
    clarifyBanner.hidden = true;
    clarifyQuestion.textContent = "";
    clarifyCandidates.textContent = "";
  }

  function showClarify(question: string, candidates: string[]): void {
    clarifyQuestion.textContent = question;
    clarifyCandidates.textContent = "";
    for (const name of candidates) {
      const item = document.createElement("li");
      const button = document.createElement("button");
      button.type = "button";
      button.className = "candidate";
      button.dataset.name = name;
      button.textContent = name;
      button.addEventListener("click", () => {
        const value = input.value;
        input.value = value === "" || value.endsWith(" ") ? value + name : `${value} ${name}`;
        input.focus();
      });
      item.appendChild(button);
      clarifyCandidates.appendChild(item);
    }
    clarifyBanner.hidden = false;
  }

  function setBusy(value: boolean): void {
    busy = value;
    submit.disabled = value || tableId === null;
  }

  function renderAnswer(answer: Answered): void {
    renderTimeline(timeline, answer);
    reply.textContent = answer.reply;
    rationale.textContent = "";
    for (const note of answer.rationale) {
      const li = document.createElement("li");
      li.textContent = note;
      rationale.appendChild(li);
    }
    corrections.textContent = answer.corrections
      .map((c) => `read '${c.original}' as '${c.replacement}' (${c.method})`)
      .join("; ");
    renderGrid(gridPanel, answer.result_table);
    plotPanel.textContent = "";
    const plotted = [...answer.step_logs].reverse().find((log) => log.extra?.plot);
    if (plotted?.extra?.plot) {
      plotPanel.appendChild(renderPlot(plotted.extra.plot, answer.result_table));
    }
  }

  function renderHistory(entries: HistoryEntry[]): void {
    historyList.textContent = "";
    for (const entry of entries) {
      const li = document.createElement("li");
      li.className = "history-entry";
      li.dataset.outcome = entry.outcome;
      li.textContent = `#${entry.seq} ${entry.outcome}: ${entry.summary}`;
      li.title = entry.input;
      historyList.appendChild(li);
    }
  }

  async function refreshHistory(): Promise<void> {
    if (tableId === null) {
      return;
    }
    const res = await client.history(tableId);
    if (res.status === 200 && Array.isArray(res.body)) {
      renderHistory(res.body);
    }
  }

  function renderPlayback(): void {
    const inPlayback = playbackIndex !== null;
    root.classList.toggle("playback", inPlayback);
    playStart.hidden = inPlayback;
    playStart.disabled = sessionLog.length === 0;
    playPrev.hidden = !inPlayback;
    playNext.hidden = !inPlayback;
    playExit.hidden = !inPlayback;
    playLabel.hidden = !inPlayback;
    if (playbackIndex === null) {
      return;
    }
    const entry = sessionLog[playbackIndex];
    if (!entry) {
      return;
    }
    playLabel.textContent = `step ${playbackIndex + 1} of ${sessionLog.length}: ${entry.input}`;
    playPrev.disabled = playbackIndex === 0;
    playNext.disabled = playbackIndex === sessionLog.length - 1;
    renderAnswer(entry.answer);
  }

  function exitPlayback(): void {
    if (playbackIndex === null) {
      return;
    }
    playbackIndex = null;
    renderPlayback();
    if (liveAnswer) {
      renderAnswer(liveAnswer);
    } else {
      timeline.textContent = "";
      reply.textContent = "";
      rationale.textContent = "";
      corrections.textContent = "";
      gridPanel.textContent = "";
      plotPanel.textContent = "";
    }
  }

  async function doUpload(csv: string, name: string): Promise<void> {
    hideError();
    hideClarify();
    try {
      const res = await client.upload(csv, name);
      if (res.status !== 201 || isServiceError(res.body)) {
        showError(describeError(res.status, res.body));
        return;
      }
      tableId = res.body.table_id;
      liveAnswer = null;
      sessionLog.length = 0;
      playbackIndex = null;
      const cols = res.body.schema.columns.map((c) => c.name).join(", ");
      tableInfo.textContent =
        `${res.body.schema.table_name} · ${res.body.row_count} rows · ${cols}`;
      input.disabled = false;
      submit.disabled = false;
      timeline.textContent = "";
      reply.textContent = "";
      rationale.textContent = "";
      corrections.textContent = "";
      gridPanel.textContent = "";
      plotPanel.textContent = "";
      renderPlayback();
      await refreshHistory();
    } catch (error) {
      showError(`upload failed: ${error}`);
    }
  }

  async function doQuery(text: string): Promise<void> {
    if (tableId === null || busy || text.trim() === "") {
      return;
    }
    exitPlayback();
    hideError();
    setBusy(true);
    try {
      const res = await client.query(tableId, text);
      if (res.status === 200 && !isServiceError(res.body)) {
        const outcome = res.body as QueryOutcome;
        if (outcome.kind === "clarification") {
          // the result panel keeps showing the previous answer on purpose
          showClarify(outcome.question, outcome.candidates);
        } else {
          hideClarify();
          liveAnswer = outcome;
          sessionLog.push({ input: text, answer: outcome });
          renderAnswer(outcome);
          input.value = "";
        }
      } else {
        showError(describeError(res.status, res.body));
      }
      await refreshHistory();
    } catch (error) {
      showError(`query failed: ${error}`);
    } finally {
      setBusy(false);
      renderPlayback();
    }
  }

  fileInput.addEventListener("change", () => {
    const file = fileInput.files?.[0];
    if (!file) {
      return;
    }
    const name = file.name.replace(/\.csv$/i, "");
    pending = file.text().then((text) => doUpload(text, name));
  });

  form.addEventListener("submit", (event) => {
    event.preventDefault();
    if (busy) {
      return;
    }
    // doQuery flips `busy` before its first await, so a second submit
    // dispatched in the same tick is already rejected here
    pending = doQuery(input.value);
  });

  pick<HTMLButtonElement>(".error-dismiss").addEventListener("click", hideError);

  playStart.addEventListener("click", () => {
    if (sessionLog.length === 0) {
      return;
    }
    playbackIndex = 0;
    renderPlayback();
  });
  playPrev.addEventListener("click", () => {
    if (playbackIndex !== null && playbackIndex > 0) {
      playbackIndex -= 1;
      renderPlayback();
    }
  });
  playNext.addEventListener("click", () => {
    if (playbackIndex !== null && playbackIndex < sessionLog.length - 1) {
      playbackIndex += 1;
      renderPlayback();
    }
  });
  playExit.addEventListener("click", exitPlayback);

  return {
    root,
    uploadCsv(csv: string, name: string) {
      pending = doUpload(csv, name);
      return pending;
    },
    submitQuery(text: string) {
      input.value = text;
      pending = doQuery(text);
      return pending;
    },
    idle() {
      return pending;
    },
    tableId() {
      return tableId;
    },
  };
}

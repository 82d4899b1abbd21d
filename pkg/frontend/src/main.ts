/**
 * Entry point: reads the test id and participant id from the query string,
 * fetches the session-specific page plan, restores any saved progress from
 * localStorage, and walks one page per submission until a thank-you screen
 * shows the completion code.
 */

import { ApiError, fetchTestConfig, postSubmission } from "./api.js";
import type { ClientConfig, MushraSubmission, QuestionnaireSubmission } from "./schema.js";
import type { SessionState } from "./state.js";
import { loadState, saveState } from "./state.js";
import { renderMushraPage } from "./mushra.js";
import { renderQuestionnairePage } from "./questionnaire.js";

function renderStartForm(root: HTMLElement): void {
  root.textContent = "";
  const form = document.createElement("form");
  form.className = "start-form";
  const intro = document.createElement("p");
  intro.textContent = "Enter the test id and your participant id to begin.";
  const testInput = document.createElement("input");
  testInput.name = "test";
  testInput.placeholder = "test id";
  testInput.required = true;
  const pidInput = document.createElement("input");
  pidInput.name = "pid";
  pidInput.placeholder = "participant id";
  pidInput.required = true;
  const go = document.createElement("button");
  go.type = "submit";
  go.textContent = "Start";
  form.addEventListener("submit", (event) => {
    event.preventDefault();
    const params = new URLSearchParams({ test: testInput.value.trim(), pid: pidInput.value.trim() });
    window.location.search = params.toString();
  });
  form.append(intro, testInput, pidInput, go);
  root.appendChild(form);
}

function renderThankYou(root: HTMLElement, config: ClientConfig): void {
  root.textContent = "";
  const done = document.createElement("section");
  done.className = "thank-you";
  const heading = document.createElement("h2");
  heading.textContent = "All pages submitted — thank you!";
  const code = document.createElement("p");
  code.className = "completion-code";
  code.textContent = `Your completion code: ${config.session_seed}`;
  done.append(heading, code);
  root.appendChild(done);
}

function renderShell(root: HTMLElement, config: ClientConfig): HTMLElement {
  root.textContent = "";
  const header = document.createElement("header");
  const title = document.createElement("h1");
  title.textContent = "Listening session";
  const progress = document.createElement("p");
  progress.className = "progress";
  header.append(title, progress);

  const instructions = document.createElement("section");
  instructions.className = "instructions";
  instructions.textContent = config.instructions;

  const pageHost = document.createElement("main");
  pageHost.className = "page-host";

  root.append(header, instructions, pageHost);
  return pageHost;
}

export function runSession(root: HTMLElement, config: ClientConfig, judgerId: string): void {
  const state: SessionState = loadState(config.test_id, judgerId);
  if (state.pageIndex >= config.pages.length) {
    renderThankYou(root, config);
    return;
  }
  const pageHost = renderShell(root, config);
  const persist = (): void => saveState(config.test_id, judgerId, state);

  const showPage = (): void => {
    if (state.pageIndex >= config.pages.length) {
      renderThankYou(root, config);
      return;
    }
    const page = config.pages[state.pageIndex];
    if (!page) return;
    const progress = root.querySelector(".progress");
    if (progress) progress.textContent = `Page ${state.pageIndex + 1} of ${config.pages.length}`;

    const advance = (): void => {
      state.pageIndex += 1;
      persist();
      showPage();
    };
    const submit = async (payload: MushraSubmission | QuestionnaireSubmission): Promise<void> => {
      try {
        await postSubmission(payload);
      } catch (err) {
        // An already-recorded page is settled, not an error worth blocking on.
        if (err instanceof ApiError && err.status === 409) {
          advance();
          return;
        }
        throw err;
      }
      advance();
    };

    const ctx = {
      testId: config.test_id,
      judgerId,
      state,
      scaleStages: config.scale_stages,
      onStateChange: persist,
      onSubmit: submit,
    };
    if (config.kind === "mushra") {
      renderMushraPage(pageHost, page, ctx);
    } else {
      renderQuestionnairePage(pageHost, page, { ...ctx, requireJustification: config.require_justification });
    }
  };

  showPage();
}

async function boot(root: HTMLElement): Promise<void> {
  const params = new URLSearchParams(window.location.search);
  const testId = params.get("test");
  const judgerId = params.get("pid");
  if (!testId || !judgerId) {
    renderStartForm(root);
    return;
  }
  try {
    const config = await fetchTestConfig(testId, judgerId);
    runSession(root, config, judgerId);
  } catch (err) {
    root.textContent = "";
    const failure = document.createElement("p");
    failure.className = "page-status";
    failure.setAttribute("role", "alert");
    failure.textContent = err instanceof Error ? `Could not load the test: ${err.message}` : "Could not load the test.";
    root.appendChild(failure);
  }
}

const appRoot = document.getElementById("app");
if (appRoot) void boot(appRoot);

/**
 * Questionnaire page: a player per stimulus followed by one block per
 * question. Scale questions render as five labeled radio stages, counting
 * questions as a non-negative number field (or labeled radios when the
 * question ships fixed choices), and every answer carries a free-text
 * justification. Submitting with any justification blank is rejected
 * client-side with an inline message next to the offending question.
 */

import type { Answer, ClientPage, ClientQuestion, QuestionnaireSubmission } from "./schema.js";
import { validateQuestionnairePayload } from "./schema.js";
import type { SessionState } from "./state.js";
import { allQuestionsAnswered, missingJustifications, setAnswer } from "./state.js";
import { PlaybackManager } from "./player.js";

export interface QuestionnaireContext {
  testId: string;
  judgerId: string;
  state: SessionState;
  scaleStages: string[];
  requireJustification: boolean;
  onStateChange: () => void;
  onSubmit: (payload: QuestionnaireSubmission) => Promise<void>;
}

function currentAnswer(ctx: QuestionnaireContext, pageId: string, questionId: string): Answer {
  return ctx.state.answers[pageId]?.[questionId] ?? { choice: "", justification: "" };
}

function radioRow(name: string, value: string, label: string, checked: boolean, onPick: () => void): HTMLElement {
  const row = document.createElement("label");
  row.className = "choice";
  const radio = document.createElement("input");
  radio.type = "radio";
  radio.name = name;
  radio.value = value;
  radio.checked = checked;
  radio.addEventListener("change", () => {
    if (radio.checked) onPick();
  });
  row.appendChild(radio);
  row.appendChild(document.createTextNode(" " + label));
  return row;
}

function renderQuestion(page: ClientPage, question: ClientQuestion, ctx: QuestionnaireContext, refreshSubmit: () => void): HTMLElement {
  const qid = question.question_id;
  const block = document.createElement("fieldset");
  block.className = "question";
  block.dataset["question"] = qid;

  const legend = document.createElement("legend");
  legend.textContent = question.text;
  block.appendChild(legend);

  const saved = currentAnswer(ctx, page.page_id, qid);
  const store = (choice: Answer["choice"]): void => {
    const previous = currentAnswer(ctx, page.page_id, qid);
    setAnswer(ctx.state, page.page_id, qid, { choice, justification: previous.justification });
    ctx.onStateChange();
    refreshSubmit();
  };

  const group = `${page.page_id}:${qid}`;
  if (question.type === "scale") {
    ctx.scaleStages.forEach((stage, index) => {
      const value = index + 1;
      block.appendChild(radioRow(group, String(value), `${value} — ${stage}`, saved.choice === value, () => store(value)));
    });
  } else if (question.choices && question.choices.length > 0) {
    for (const choice of question.choices) {
      block.appendChild(radioRow(group, choice, choice, saved.choice === choice, () => store(choice)));
    }
  } else {
    const count = document.createElement("input");
    count.type = "number";
    count.min = "0";
    count.step = "1";
    if (typeof saved.choice === "number") count.value = String(saved.choice);
    count.addEventListener("input", () => {
      if (count.value === "") return;
      const value = Math.max(0, Math.round(Number(count.value)));
      count.value = String(value);
      store(value);
    });
    const row = document.createElement("label");
    row.className = "choice";
    row.appendChild(document.createTextNode("Count: "));
    row.appendChild(count);
    block.appendChild(row);
  }

  const whyLabel = document.createElement("label");
  whyLabel.className = "justification-label";
  whyLabel.textContent = ctx.requireJustification ? "In your own words, why? (required)" : "In your own words, why?";
  const why = document.createElement("textarea");
  why.className = "justification";
  why.rows = 2;
  why.value = saved.justification;
  const fieldError = document.createElement("span");
  fieldError.className = "field-error";
  fieldError.hidden = true;
  why.addEventListener("input", () => {
    const previous = currentAnswer(ctx, page.page_id, qid);
    setAnswer(ctx.state, page.page_id, qid, { choice: previous.choice, justification: why.value });
    if (why.value.trim() !== "") fieldError.hidden = true;
    ctx.onStateChange();
  });
  whyLabel.appendChild(why);
  block.appendChild(whyLabel);
  block.appendChild(fieldError);

  return block;
}

export function renderQuestionnairePage(container: HTMLElement, page: ClientPage, ctx: QuestionnaireContext): void {
  container.textContent = "";
  const player = new PlaybackManager();
  const form = document.createElement("section");
  form.className = "page questionnaire-page";

  page.stimuli.forEach((stimulus, index) => {
    const label = page.stimuli.length === 1 ? "Episode excerpt" : `Excerpt ${index + 1}`;
    form.appendChild(player.createPlayer(stimulus.stimulus_id, label));
  });

  const status = document.createElement("p");
  status.className = "page-status";
  status.setAttribute("role", "alert");

  const submit = document.createElement("button");
  submit.type = "button";
  submit.className = "submit";
  submit.textContent = "Submit answers";

  const refreshSubmit = (): void => {
    submit.disabled = !allQuestionsAnswered(ctx.state, page);
  };

  for (const question of page.questions ?? []) {
    form.appendChild(renderQuestion(page, question, ctx, refreshSubmit));
  }

  submit.addEventListener("click", () => {
    if (ctx.requireJustification) {
      const missing = missingJustifications(ctx.state, page);
      if (missing.length > 0) {
        for (const qid of missing) {
          const block = form.querySelector(`[data-question="${qid}"] .field-error`);
          if (block instanceof HTMLElement) {
            block.textContent = "A justification is required.";
            block.hidden = false;
          }
        }
        status.textContent = "Please justify every answer before submitting.";
        return;
      }
    }
    const payload: QuestionnaireSubmission = {
      test_id: ctx.testId,
      judger_id: ctx.judgerId,
      page_id: page.page_id,
      answers: { ...(ctx.state.answers[page.page_id] ?? {}) },
    };
    const problems = validateQuestionnairePayload(payload, page, ctx.requireJustification);
    if (problems.length > 0) {
      status.textContent = problems[0] ?? "please finish the page";
      return;
    }
    submit.disabled = true;
    status.textContent = "";
    ctx.onSubmit(payload).catch((err: unknown) => {
      status.textContent = err instanceof Error ? err.message : "submission failed";
      refreshSubmit();
    });
  });

  refreshSubmit();
  form.appendChild(submit);
  form.appendChild(status);
  container.appendChild(form);
}

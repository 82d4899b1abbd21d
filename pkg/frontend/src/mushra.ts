/**
 * Slider comparison page: every stimulus on the page gets a player and a
 * 0-100 integer slider with five labeled stage bands, next to a visible
 * labeled reference. A slider unlocks only after its stimulus has been
 * played; the submit button unlocks only after every stimulus is rated
 * and no player is in a failed state.
 */

import type { ClientPage, MushraSubmission } from "./schema.js";
import { validateMushraPayload } from "./schema.js";
import type { SessionState } from "./state.js";
import { canSubmitMushra, hasPlayed, markPlayed, setRating } from "./state.js";
import { PlaybackManager } from "./player.js";

export interface MushraContext {
  testId: string;
  judgerId: string;
  state: SessionState;
  scaleStages: string[];
  onStateChange: () => void;
  onSubmit: (payload: MushraSubmission) => Promise<void>;
}

function stageBands(stages: string[]): HTMLElement {
  const bands = document.createElement("div");
  bands.className = "stage-bands";
  for (const stage of stages) {
    const band = document.createElement("span");
    band.className = "stage-band";
    band.textContent = stage;
    bands.appendChild(band);
  }
  return bands;
}

export function renderMushraPage(container: HTMLElement, page: ClientPage, ctx: MushraContext): void {
  container.textContent = "";
  const player = new PlaybackManager();
  const failed = new Set<string>();
  const form = document.createElement("section");
  form.className = "page mushra-page";

  const status = document.createElement("p");
  status.className = "page-status";
  status.setAttribute("role", "alert");

  const submit = document.createElement("button");
  submit.type = "button";
  submit.className = "submit";
  submit.textContent = "Next";

  const refreshSubmit = (): void => {
    submit.disabled = failed.size > 0 || !canSubmitMushra(ctx.state, page);
  };

  if (page.reference) {
    const reference = document.createElement("div");
    reference.className = "reference";
    reference.appendChild(player.createPlayer(page.reference.stimulus_id, "Reference"));
    form.appendChild(reference);
  }

  page.stimuli.forEach((stimulus, index) => {
    const sid = stimulus.stimulus_id;
    const block = document.createElement("div");
    block.className = "stimulus";
    block.dataset["stimulus"] = sid;

    const callbacks = {
      onFirstPlay: (id: string) => {
        markPlayed(ctx.state, id);
        slider.disabled = false;
        ctx.onStateChange();
      },
      onPlay: (id: string) => {
        if (failed.delete(id)) refreshSubmit();
      },
      onError: (id: string) => {
        failed.add(id);
        refreshSubmit();
      },
    };
    block.appendChild(player.createPlayer(sid, `Sample ${index + 1}`, callbacks));

    const slider = document.createElement("input");
    slider.type = "range";
    slider.min = "0";
    slider.max = "100";
    slider.step = "1";
    const readout = document.createElement("output");
    readout.className = "rating-value";

    const saved = ctx.state.ratings[page.page_id]?.[sid];
    if (typeof saved === "number") {
      slider.value = String(saved);
      readout.textContent = String(saved);
    } else {
      slider.value = "50";
      readout.textContent = "unrated";
    }
    if (hasPlayed(ctx.state, sid)) {
      player.restorePlayed(sid);
      slider.disabled = false;
    } else {
      slider.disabled = true;
      slider.title = "Play this sample before rating it";
    }

    slider.addEventListener("input", () => {
      const value = Math.round(Number(slider.value));
      setRating(ctx.state, page.page_id, sid, value);
      readout.textContent = String(value);
      ctx.onStateChange();
      refreshSubmit();
    });

    block.appendChild(slider);
    block.appendChild(readout);
    block.appendChild(stageBands(ctx.scaleStages));
    form.appendChild(block);
  });

  submit.addEventListener("click", () => {
    const payload: MushraSubmission = {
      test_id: ctx.testId,
      judger_id: ctx.judgerId,
      page_id: page.page_id,
      ratings: { ...(ctx.state.ratings[page.page_id] ?? {}) },
    };
    const problems = validateMushraPayload(payload, page);
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

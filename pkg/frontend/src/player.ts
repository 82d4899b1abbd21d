/**
 * Audio playback for stimulus players: at most one element plays at a
 * time, each successful start marks its stimulus as heard (which is what
 * unlocks the slider), and a load failure swaps in a retry affordance
 * that keeps the page unsubmittable until the audio actually plays.
 */

import { audioUrl } from "./api.js";

export interface PlayerCallbacks {
  onFirstPlay?: (stimulusId: string) => void;
  onPlay?: (stimulusId: string) => void;
  onError?: (stimulusId: string) => void;
}

export class PlaybackManager {
  private readonly elements = new Map<string, HTMLAudioElement>();
  private readonly playedOnce = new Set<string>();

  /** Build a labeled player block for one stimulus. */
  createPlayer(stimulusId: string, label: string, callbacks: PlayerCallbacks = {}): HTMLElement {
    const wrap = document.createElement("div");
    wrap.className = "player";

    const caption = document.createElement("span");
    caption.className = "player-label";
    caption.textContent = label;
    wrap.appendChild(caption);

    const audio = document.createElement("audio");
    audio.controls = true;
    audio.preload = "none";
    audio.src = audioUrl(stimulusId);
    wrap.appendChild(audio);

    const failure = document.createElement("span");
    failure.className = "player-error";
    failure.hidden = true;
    failure.textContent = "Audio failed to load.";
    const retry = document.createElement("button");
    retry.type = "button";
    retry.className = "player-retry";
    retry.textContent = "Retry";
    retry.addEventListener("click", () => {
      failure.hidden = true;
      retry.hidden = true;
      audio.load();
      void startPlayback(audio);
    });
    retry.hidden = true;
    wrap.appendChild(failure);
    wrap.appendChild(retry);

    audio.addEventListener("play", () => {
      this.pauseOthers(stimulusId);
      failure.hidden = true;
      retry.hidden = true;
      if (!this.playedOnce.has(stimulusId)) {
        this.playedOnce.add(stimulusId);
        callbacks.onFirstPlay?.(stimulusId);
      }
      callbacks.onPlay?.(stimulusId);
    });
    audio.addEventListener("error", () => {
      failure.hidden = false;
      retry.hidden = false;
      callbacks.onError?.(stimulusId);
    });

    this.elements.set(stimulusId, audio);
    return wrap;
  }

  /** Mark a stimulus as already heard (restored from a saved session). */
  restorePlayed(stimulusId: string): void {
    this.playedOnce.add(stimulusId);
  }

  hasPlayed(stimulusId: string): boolean {
    return this.playedOnce.has(stimulusId);
  }

  private pauseOthers(playingId: string): void {
    for (const [sid, el] of this.elements) {
      if (sid !== playingId && !el.paused) el.pause();
    }
  }
}

/** play() returns a promise in browsers but not in every test double. */
export function startPlayback(audio: HTMLAudioElement): Promise<void> {
  const result = audio.play() as Promise<void> | undefined;
  return result && typeof result.catch === "function" ? result.catch(() => undefined) : Promise.resolve();
}

import { HttpRatingApi } from "./api.js";
import { SessionController, type SessionViewState } from "./session.js";

function el<T extends HTMLElement>(id: string): T {
  const node = document.getElementById(id);
  if (!node) throw new Error(`missing element #${id}`);
  return node as T;
}

const api = new HttpRatingApi("");
const controller = new SessionController(api, render);

const startView = el<HTMLElement>("start-view");
const ratingView = el<HTMLElement>("rating-view");
const doneView = el<HTMLElement>("done-view");
const errorBanner = el<HTMLElement>("error-banner");
const errorMessage = el<HTMLElement>("error-message");

const raterInput = el<HTMLInputElement>("rater-id");
const pairSetInput = el<HTMLInputElement>("pair-set");
const startButton = el<HTMLButtonElement>("start-button");

const frameImage = el<HTMLImageElement>("frame-image");
const referencePlayer = el<HTMLAudioElement>("reference-player");
const candidatePlayer = el<HTMLAudioElement>("candidate-player");
const progressText = el<HTMLElement>("progress");
const submitButton = el<HTMLButtonElement>("submit-button");
const playHint = el<HTMLElement>("play-hint");
const mosButtons = Array.from(
  document.querySelectorAll<HTMLButtonElement>("button[data-mos]"),
);

const doneTotal = el<HTMLElement>("done-total");
const retryButton = el<HTMLButtonElement>("retry-button");

startButton.addEventListener("click", () => {
  const raterId = raterInput.value.trim();
  if (!raterId) {
    raterInput.focus();
    return;
  }
  const pairSet = pairSetInput.value.trim() || "default";
  void controller.start(raterId, undefined, pairSet);
});

candidatePlayer.addEventListener("play", () => controller.markCandidatePlayed());

for (const button of mosButtons) {
  button.addEventListener("click", () => {
    controller.selectMos(Number(button.dataset.mos));
  });
}

submitButton.addEventListener("click", () => {
  void controller.submitAndAdvance();
});

retryButton.addEventListener("click", () => {
  void controller.retry();
});

function show(node: HTMLElement, visible: boolean): void {
  node.hidden = !visible;
}

function render(state: SessionViewState): void {
  show(startView, state.phase === "idle" || state.phase === "loading");
  show(ratingView, state.phase === "rating");
  show(doneView, state.phase === "done");
  show(errorBanner, state.phase === "error");

  startButton.disabled = state.phase === "loading";

  if (state.phase === "rating" && state.item) {
    // only reload the media when the item actually changed, so replays
    // don't restart mid-listen
    if (frameImage.dataset.frameId !== state.item.frame_id + state.item.audio_id) {
      frameImage.dataset.frameId = state.item.frame_id + state.item.audio_id;
      frameImage.src = state.item.frame_url;
      referencePlayer.src = state.item.reference_audio_url;
      candidatePlayer.src = state.item.audio_url;
    }
    progressText.textContent = `${state.progress.done + 1} / ${state.progress.total}`;
    for (const button of mosButtons) {
      button.classList.toggle("selected", Number(button.dataset.mos) === state.selectedMos);
    }
    submitButton.disabled = !controller.canSubmit;
    show(playHint, !state.candidatePlayed);
  }

  if (state.phase === "done") {
    doneTotal.textContent = String(state.progress.total);
  }
  if (state.phase === "error" && state.error) {
    errorMessage.textContent = state.error;
  }
}

render(controller.getState());

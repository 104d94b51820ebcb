// Blind rating view: one item at a time, looping clip, explanation text,
// and five score buttons. No back-navigation after a rating is submitted;
// the page never receives or shows who wrote an explanation.

import { ApiClient, ApiError } from "./api.js";
import { ClipPlayer } from "./player.js";
import { ConsoleState } from "./state.js";

export class StudyView {
  readonly root: HTMLElement;
  private readonly raterInput: HTMLInputElement;
  private readonly startButton: HTMLButtonElement;
  private readonly progressEl: HTMLElement;
  private readonly explanationEl: HTMLElement;
  private readonly scoreBar: HTMLElement;
  private readonly notice: HTMLElement;
  private readonly player: ClipPlayer;
  private submitting = false;

  constructor(
    private api: ApiClient,
    private state: ConsoleState,
    doc: Document,
  ) {
    this.root = doc.createElement("section");
    this.root.className = "study-view";

    const gate = doc.createElement("div");
    gate.className = "rater-gate";
    this.raterInput = doc.createElement("input");
    this.raterInput.type = "text";
    this.raterInput.placeholder = "rater code";
    this.startButton = doc.createElement("button");
    this.startButton.textContent = "Start rating";
    this.startButton.addEventListener("click", () => {
      void this.start(this.raterInput.value.trim());
    });
    gate.appendChild(this.raterInput);
    gate.appendChild(this.startButton);
    this.root.appendChild(gate);

    this.notice = doc.createElement("div");
    this.notice.className = "notice hidden";
    this.root.appendChild(this.notice);

    this.progressEl = doc.createElement("div");
    this.progressEl.className = "progress";
    this.root.appendChild(this.progressEl);

    this.player = new ClipPlayer(api, doc);
    this.root.appendChild(this.player.element);

    this.explanationEl = doc.createElement("blockquote");
    this.explanationEl.className = "explanation";
    this.root.appendChild(this.explanationEl);

    this.scoreBar = doc.createElement("div");
    this.scoreBar.className = "score-bar";
    for (let score = 1; score <= 5; score++) {
      const button = doc.createElement("button");
      button.textContent = String(score);
      button.className = "score-button";
      button.addEventListener("click", () => {
        void this.submit(score);
      });
      this.scoreBar.appendChild(button);
    }
    this.root.appendChild(this.scoreBar);
  }

  async start(raterId: string): Promise<void> {
    if (!raterId) return;
    this.state.raterId = raterId;
    this.state.completedRatings = 0;
    await this.nextItem();
  }

  async nextItem(): Promise<void> {
    if (!this.state.raterId) return;
    try {
      const item = await this.api.studyNext(this.state.raterId);
      this.state.currentItem = item;
      if (item === null) {
        this.renderCompletion();
        return;
      }
      const clipId = item.clip_url.split("/").pop() ?? "";
      await this.player.load(clipId);
      this.explanationEl.textContent = item.explanation;
      this.progressEl.textContent =
        `item ${this.state.completedRatings + 1}/${this.state.itemsPerRater}`;
      this.hideNotice();
    } catch (err) {
      this.showNotice(err instanceof ApiError ? err.detail : "service unreachable");
    }
  }

  async submit(score: number): Promise<void> {
    const item = this.state.currentItem;
    if (!item || !this.state.raterId || this.submitting) return;
    this.submitting = true;
    try {
      await this.api.submitRating(this.state.raterId, item.item_index, score);
      this.state.completedRatings += 1;
      await this.nextItem();
    } catch (err) {
      if (err instanceof ApiError && err.status === 409) {
        this.showNotice("already rated; moving on");
        await this.nextItem();
      } else {
        this.showNotice(err instanceof ApiError ? err.detail : "service unreachable");
      }
    } finally {
      this.submitting = false;
    }
  }

  private renderCompletion(): void {
    this.player.stop();
    this.explanationEl.textContent = "";
    this.progressEl.textContent =
      `all done: ${this.state.completedRatings} ratings recorded, thank you`;
  }

  private showNotice(text: string | unknown): void {
    this.notice.textContent = typeof text === "string" ? text : "something went wrong";
    this.notice.classList.remove("hidden");
  }

  private hideNotice(): void {
    this.notice.classList.add("hidden");
  }

  deactivate(): void {
    this.player.stop();
  }
}

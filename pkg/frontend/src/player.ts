// Frame-cycling clip player. Clips loop automatically with no time limit,
// mirroring the rating protocol; raters can watch as often as they like.

import { ApiClient, ClipInfo } from "./api.js";

export class ClipPlayer {
  private timer: ReturnType<typeof setInterval> | null = null;
  private frame = 0;
  private info: ClipInfo | null = null;
  readonly element: HTMLImageElement;

  constructor(
    private api: ApiClient,
    doc: Document,
    private intervalMs = 160,
  ) {
    this.element = doc.createElement("img");
    this.element.className = "clip-frame";
    this.element.alt = "clip playback";
  }

  async load(clipId: string): Promise<void> {
    this.stop();
    this.info = await this.api.clipInfo(clipId);
    this.frame = 0;
    this.element.src = this.api.frameUrl(clipId, 0);
    this.timer = setInterval(() => this.advance(), this.intervalMs);
  }

  private advance(): void {
    if (!this.info) return;
    this.frame = (this.frame + 1) % this.info.n_frames;
    this.element.src = this.api.frameUrl(this.info.clip_id, this.frame);
  }

  stop(): void {
    if (this.timer !== null) {
      clearInterval(this.timer);
      this.timer = null;
    }
  }
}

// Chat view: pick a clip, watch it loop, ask questions, read answers.
// The predictions badge shows the classifier labels injected into the
// model's prompt, for transparency. One request in flight at a time.

import { ApiClient, ApiError } from "./api.js";
import { ClipPlayer } from "./player.js";
import { ConsoleState } from "./state.js";

export class ChatView {
  readonly root: HTMLElement;
  private readonly select: HTMLSelectElement;
  private readonly badge: HTMLElement;
  private readonly transcriptEl: HTMLElement;
  private readonly input: HTMLInputElement;
  private readonly sendButton: HTMLButtonElement;
  private readonly banner: HTMLElement;
  private readonly player: ClipPlayer;

  constructor(
    private api: ApiClient,
    private state: ConsoleState,
    doc: Document,
  ) {
    this.root = doc.createElement("section");
    this.root.className = "chat-view";

    this.banner = doc.createElement("div");
    this.banner.className = "banner hidden";
    this.root.appendChild(this.banner);

    const picker = doc.createElement("div");
    picker.className = "clip-picker";
    this.select = doc.createElement("select");
    this.select.addEventListener("change", () => {
      void this.selectClip(this.select.value);
    });
    picker.appendChild(this.select);
    this.root.appendChild(picker);

    this.player = new ClipPlayer(api, doc);
    this.root.appendChild(this.player.element);

    this.badge = doc.createElement("div");
    this.badge.className = "predictions-badge";
    this.root.appendChild(this.badge);

    this.transcriptEl = doc.createElement("div");
    this.transcriptEl.className = "transcript";
    this.root.appendChild(this.transcriptEl);

    const composer = doc.createElement("div");
    composer.className = "composer";
    this.input = doc.createElement("input");
    this.input.type = "text";
    this.input.placeholder = "Ask about this clip";
    this.sendButton = doc.createElement("button");
    this.sendButton.textContent = "Send";
    this.sendButton.addEventListener("click", () => {
      void this.send();
    });
    composer.appendChild(this.input);
    composer.appendChild(this.sendButton);
    this.root.appendChild(composer);
  }

  async init(): Promise<void> {
    try {
      const { clips } = await this.api.listClips();
      this.select.innerHTML = "";
      const doc = this.select.ownerDocument;
      const placeholder = doc.createElement("option");
      placeholder.value = "";
      placeholder.textContent = "pick a clip";
      this.select.appendChild(placeholder);
      for (const id of clips) {
        const option = doc.createElement("option");
        option.value = id;
        option.textContent = id;
        this.select.appendChild(option);
      }
      this.renderTranscript();
      this.hideBanner();
    } catch (err) {
      this.showBanner(err);
    }
  }

  async selectClip(clipId: string): Promise<void> {
    if (!clipId) return;
    try {
      this.state.clipId = clipId;
      this.state.resetSession();
      const session = await this.api.createSession(clipId);
      this.state.sessionId = session.session_id;
      this.state.predictions = {
        foul: session.predicted_foul,
        severity: session.predicted_severity,
      };
      this.badge.textContent = `${session.predicted_foul} · ${session.predicted_severity}`;
      await this.player.load(clipId);
      this.renderTranscript();
      this.hideBanner();
    } catch (err) {
      this.showBanner(err);
    }
  }

  async send(): Promise<void> {
    const message = this.input.value.trim();
    if (!message || !this.state.sessionId || this.sendButton.disabled) {
      return;
    }
    this.sendButton.disabled = true;
    try {
      this.state.appendTurn("user", message);
      this.renderTranscript();
      const { answer } = await this.api.chat(this.state.sessionId, message);
      this.state.appendTurn("assistant", answer);
      this.input.value = "";
      this.renderTranscript();
      this.hideBanner();
    } catch (err) {
      if (err instanceof ApiError && err.status === 413) {
        this.showBanner("The conversation is too long for the current session; pick the clip again to start fresh.");
      } else {
        this.showBanner(err);
      }
    } finally {
      this.sendButton.disabled = false;
    }
  }

  renderTranscript(): void {
    this.transcriptEl.innerHTML = "";
    const doc = this.transcriptEl.ownerDocument;
    for (const turn of this.state.transcript) {
      const bubble = doc.createElement("div");
      bubble.className = `bubble bubble-${turn.role}`;
      bubble.textContent = turn.text;
      this.transcriptEl.appendChild(bubble);
    }
  }

  private showBanner(err: unknown): void {
    this.banner.textContent =
      typeof err === "string" ? err : "Service unreachable; check the connection and retry.";
    this.banner.classList.remove("hidden");
  }

  private hideBanner(): void {
    this.banner.classList.add("hidden");
  }

  deactivate(): void {
    this.player.stop();
  }
}

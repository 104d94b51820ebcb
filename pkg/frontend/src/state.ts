// Console-wide state. The transcript is append-only and owned here, so it
// survives switches between the chat and study views. Nothing in this state
// ever holds source attribution for study items; the server never sends it.

import { HistoryEntry, StudyItemView } from "./api.js";

export type ViewName = "chat" | "study";

export interface Predictions {
  foul: string;
  severity: string;
}

export class ConsoleState {
  activeView: ViewName = "chat";
  clipId: string | null = null;
  sessionId: string | null = null;
  predictions: Predictions | null = null;
  readonly transcript: HistoryEntry[] = [];

  raterId: string | null = null;
  currentItem: StudyItemView | null = null;
  completedRatings = 0;
  itemsPerRater = 20;

  appendTurn(role: string, text: string): void {
    this.transcript.push({ role, text });
  }

  resetSession(): void {
    this.sessionId = null;
    this.predictions = null;
    this.transcript.length = 0;
  }
}

import { ApiError, type RatingApi } from "./api.js";
import type { SessionItem } from "./types.js";

export type Phase = "idle" | "loading" | "rating" | "done" | "error";

export interface SessionViewState {
  phase: Phase;
  sessionId: string | null;
  item: SessionItem | null;
  progress: { done: number; total: number };
  selectedMos: number | null;
  candidatePlayed: boolean;
  submitting: boolean;
  error: string | null;
}

const MOS_VALUES = [1, 2, 3, 4, 5];

/**
 * Rating session state machine, independent of the DOM.
 *
 * Invariants enforced here rather than in the markup:
 *  - a rating can only be submitted after a MOS value is selected AND the
 *    candidate audio has been played at least once;
 *  - only integers 1..5 are accepted as MOS;
 *  - double submits are swallowed (one in-flight request at a time, and
 *    the gate re-arms only when the next item arrives);
 *  - an out-of-order rejection recovers by refetching the service cursor,
 *    so the UI can never skip or repeat an item.
 */
export class SessionController {
  private state: SessionViewState = {
    phase: "idle",
    sessionId: null,
    item: null,
    progress: { done: 0, total: 0 },
    selectedMos: null,
    candidatePlayed: false,
    submitting: false,
    error: null,
  };

  constructor(
    private readonly api: RatingApi,
    private readonly onChange: (state: SessionViewState) => void = () => {},
  ) {}

  getState(): SessionViewState {
    return { ...this.state, progress: { ...this.state.progress } };
  }

  private update(patch: Partial<SessionViewState>): void {
    this.state = { ...this.state, ...patch };
    this.onChange(this.getState());
  }

  async start(raterId: string, pairs?: [string, string][], pairSet?: string, seed = 0): Promise<void> {
    this.update({ phase: "loading", error: null });
    try {
      const created = await this.api.createSession({
        rater_id: raterId,
        pairs,
        pair_set: pairSet,
        seed,
      });
      this.update({
        sessionId: created.session_id,
        progress: { done: 0, total: created.total },
      });
      await this.fetchNext();
    } catch (err) {
      this.fail(err);
    }
  }

  /** Re-attach to an existing session (page refresh mid-session). */
  async resume(sessionId: string): Promise<void> {
    this.update({ phase: "loading", sessionId, error: null });
    await this.fetchNext();
  }

  selectMos(mos: number): void {
    if (!MOS_VALUES.includes(mos)) {
      throw new RangeError(`MOS must be an integer in 1..5, got ${mos}`);
    }
    if (this.state.phase !== "rating") return;
    this.update({ selectedMos: mos });
  }

  markCandidatePlayed(): void {
    if (this.state.phase !== "rating" || this.state.candidatePlayed) return;
    this.update({ candidatePlayed: true });
  }

  get canSubmit(): boolean {
    return (
      this.state.phase === "rating" &&
      this.state.selectedMos !== null &&
      this.state.candidatePlayed &&
      !this.state.submitting
    );
  }

  /**
   * Submit the selected MOS for the current item and advance.
   * Returns false when the gate is closed (nothing selected, candidate
   * not played yet, or a submit already in flight).
   */
  async submitAndAdvance(): Promise<boolean> {
    if (!this.canSubmit) return false;
    const { sessionId, item, selectedMos } = this.state;
    if (sessionId === null || item === null || selectedMos === null) return false;
    this.update({ submitting: true });
    try {
      await this.api.submitRating(sessionId, item.frame_id, item.audio_id, selectedMos);
      await this.fetchNext();
      return true;
    } catch (err) {
      if (err instanceof ApiError && err.code === "OutOfOrder") {
        // someone (another tab, a retry) already rated this item:
        // resynchronize with the service cursor instead of failing
        await this.fetchNext();
        return false;
      }
      this.fail(err);
      return false;
    }
  }

  /** Retry after a transient failure: refetch the cursor. */
  async retry(): Promise<void> {
    if (this.state.sessionId === null) {
      this.update({ phase: "idle", error: null });
      return;
    }
    this.update({ phase: "loading", error: null });
    await this.fetchNext();
  }

  private async fetchNext(): Promise<void> {
    const sessionId = this.state.sessionId;
    if (sessionId === null) return;
    try {
      const next = await this.api.nextItem(sessionId);
      if (next.done) {
        this.update({
          phase: "done",
          item: null,
          progress: { done: next.total, total: next.total },
          selectedMos: null,
          candidatePlayed: false,
          submitting: false,
        });
      } else {
        this.update({
          phase: "rating",
          item: next.item,
          progress: { done: next.index, total: next.total },
          selectedMos: null,
          candidatePlayed: false,
          submitting: false,
        });
      }
    } catch (err) {
      this.fail(err);
    }
  }

  private fail(err: unknown): void {
    const message =
      err instanceof ApiError
        ? `${err.code}: ${err.message}`
        : err instanceof Error
          ? err.message
          : String(err);
    this.update({ phase: "error", error: message, submitting: false });
  }
}

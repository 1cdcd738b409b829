// Wire types of the rating service HTTP API.

export interface SessionCreated {
  session_id: string;
  total: number;
}

export interface SessionItem {
  frame_id: string;
  audio_id: string;
  frame_url: string;
  audio_url: string;
  reference_audio_url: string;
}

export interface NextPending {
  done: false;
  index: number;
  total: number;
  item: SessionItem;
}

export interface NextDone {
  done: true;
  index: number;
  total: number;
}

export type NextResponse = NextPending | NextDone;

export interface RatingAck {
  status: string;
  recorded: number;
}

export interface CreateSessionRequest {
  rater_id: string;
  pairs?: [string, string][];
  pair_set?: string;
  seed?: number;
}

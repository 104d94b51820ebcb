"""Server-side state: model handles, clip index, chat sessions, study stores.

Chat sessions cache the visual tokens and predictions computed on creation,
so the encoder runs exactly once per session regardless of how many turns
follow. Study sessions and ratings persist to disk immediately; a restart
loses chat sessions but never a rating.
"""

from __future__ import annotations

import threading
import time
import uuid
from dataclasses import dataclass, field
from pathlib import Path
from typing import Dict, List, Optional, Tuple

from ..data.manifest import load_dataset
from ..data.records import ClipRecord
from ..data.sampling import sample_frames
from ..eval.study import (
    DuplicateRatingError,
    RatingRecord,
    RatingStore,
    SessionStore,
    StudyItem,
    StudySession,
    create_study,
    make_rating,
)
from ..model.pipeline import InferencePipeline
from ..model.types import ClassifierBundle, PromptSequence, VideoClip, VisualTokens
from ..training.checkpoint import CheckpointManifest, load_stage1_handles, load_stage2_handles
from .config import ServiceConfig


class SessionBusyError(RuntimeError):
    pass


@dataclass
class ChatSession:
    session_id: str
    clip_id: str
    visual: VisualTokens
    bundle: ClassifierBundle
    prompt: Optional[PromptSequence] = None      # running history as one sequence
    history: List[Tuple[str, str]] = field(default_factory=list)
    created_at: float = field(default_factory=time.time)
    last_used: float = field(default_factory=time.time)
    lock: threading.Lock = field(default_factory=threading.Lock)


class AppState:
    def __init__(self, config: ServiceConfig):
        self.config = config
        self.pipeline: Optional[InferencePipeline] = None
        self.clips: Dict[str, ClipRecord] = {}
        self.media_root: Path = Path(".")
        self.sessions: Dict[str, ChatSession] = {}
        self._sessions_lock = threading.Lock()
        self._clip_cache: Dict[str, VideoClip] = {}

        stores = Path(config.stores_dir)
        self.session_store = SessionStore(stores / "study_sessions.json")
        self.rating_store = RatingStore(stores / "ratings.jsonl")
        self.study_sessions: List[StudySession] = self.session_store.load()
        self.ratings: List[RatingRecord] = self.rating_store.load()
        self._study_lock = threading.Lock()

        if config.dataset_manifest is not None:
            clips, _triplets = load_dataset(config.dataset_manifest)
            self.clips = {c.clip_id: c for c in clips}
            self.media_root = config.media_root or Path(config.dataset_manifest).parent
        if config.model_manifest is not None:
            self.load_model(config.model_manifest)

    # --- model -------------------------------------------------------------

    def load_model(self, manifest_path: Path) -> None:
        manifest = CheckpointManifest.load(manifest_path)
        if manifest.stage == 2:
            encoder, heads, projection, lm = load_stage2_handles(manifest)
            self.pipeline = InferencePipeline(encoder, heads, projection, lm)
        else:
            encoder, heads = load_stage1_handles(manifest)
            self.pipeline = InferencePipeline(encoder, heads)

    @property
    def model_loaded(self) -> bool:
        return self.pipeline is not None and self.pipeline.generative

    # --- clips ---------------------------------------------------------------

    def get_clip(self, clip_id: str) -> Optional[VideoClip]:
        if clip_id not in self.clips:
            return None
        if clip_id not in self._clip_cache:
            self._clip_cache[clip_id] = sample_frames(
                self.clips[clip_id],
                frames_per_clip=self.config.frames_per_clip,
                media_root=self.media_root,
            )
        return self._clip_cache[clip_id]

    # --- chat sessions -------------------------------------------------------

    def create_session(self, clip_id: str) -> ChatSession:
        clip = self.get_clip(clip_id)
        if clip is None:
            raise KeyError(clip_id)
        visual, bundle = self.pipeline.encode_clip(clip)
        session = ChatSession(
            session_id=uuid.uuid4().hex[:12], clip_id=clip_id, visual=visual, bundle=bundle,
        )
        with self._sessions_lock:
            self.sessions[session.session_id] = session
        return session

    def get_session(self, session_id: str) -> Optional[ChatSession]:
        with self._sessions_lock:
            session = self.sessions.get(session_id)
            if session is None:
                return None
            if time.time() - session.last_used > self.config.session_idle_timeout:
                del self.sessions[session_id]
                return None
            return session

    def acquire_session(self, session: ChatSession) -> None:
        """One in-flight generation per session; reject or queue per config."""
        if self.config.busy_policy == "queue":
            session.lock.acquire()
            return
        if not session.lock.acquire(blocking=False):
            raise SessionBusyError(session.session_id)

    # --- study -----------------------------------------------------------------

    def create_study(self, items: List[StudyItem], raters: List[str],
                     items_per_rater: int, seed: int) -> List[StudySession]:
        with self._study_lock:
            sessions = create_study(items, raters, items_per_rater=items_per_rater, seed=seed)
            self.study_sessions = sessions
            self.session_store.save(sessions)
            # ratings are append-only; separate studies belong in separate stores_dir
            return sessions

    def study_session_for(self, rater_id: str) -> Optional[StudySession]:
        for s in self.study_sessions:
            if s.rater_id == rater_id:
                return s
        return None

    def rated_indices(self, rater_id: str) -> set:
        return {r.item_index for r in self.ratings if r.rater_id == rater_id}

    def next_study_item(self, rater_id: str) -> Optional[dict]:
        session = self.study_session_for(rater_id)
        if session is None:
            raise KeyError(rater_id)
        done = self.rated_indices(rater_id)
        for idx, item in enumerate(session.items):
            if idx not in done:
                return {
                    "item_index": idx,
                    "clip_url": f"/v1/clips/{item.clip_id}",
                    "explanation": item.explanation,
                }
        return None

    def record_rating(self, rater_id: str, item_index: int, score: int) -> RatingRecord:
        with self._study_lock:
            session = self.study_session_for(rater_id)
            if session is None:
                raise KeyError(rater_id)
            if not (0 <= item_index < len(session.items)):
                raise IndexError(item_index)
            if item_index in self.rated_indices(rater_id):
                raise DuplicateRatingError(f"{rater_id} already rated item {item_index}")
            record = make_rating(rater_id, item_index, score)
            self.rating_store.append(record)
            self.ratings.append(record)
            return record

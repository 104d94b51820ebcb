"""HTTP facade: inference, multi-turn chat, clip media, and the study workflow.

All endpoints live under /v1. Rater-facing study payloads never carry the
source field; the summary endpoint (which does reveal per-source numbers)
requires the admin token in the X-Admin-Token header.
"""

from __future__ import annotations

import io
import logging
import time
from pathlib import Path
from typing import List, Optional

import numpy as np
from fastapi import FastAPI, Header, HTTPException, Response
from pydantic import BaseModel, Field

from ..eval.study import DuplicateRatingError, InsufficientItemsError, StudyItem, study_summary
from ..eval.tables import format_study_table, study_rows_from_report
from ..eval.extraction import extract_labels
from ..model.lm import ContextOverflowError, generate_answer
from ..model.prompt import append_answer, append_follow_up
from .config import ServiceConfig
from .state import AppState, SessionBusyError

logger = logging.getLogger(__name__)


class InferRequest(BaseModel):
    clip_id: str
    question: str


class SessionRequest(BaseModel):
    clip_id: str


class ChatRequest(BaseModel):
    session_id: str
    message: str


class StudyItemIn(BaseModel):
    clip_id: str
    explanation: str
    source: str


class StudyCreateRequest(BaseModel):
    items: List[StudyItemIn]
    raters: List[str]
    items_per_rater: int = Field(default=20, ge=1)
    seed: int = 0


class RatingRequest(BaseModel):
    item_index: int = Field(ge=0)
    score: int = Field(ge=1, le=5)


def create_app(state: AppState) -> FastAPI:
    app = FastAPI(title="refvlm service", version="0.1.0")
    app.state.app_state = state
    config = state.config

    def require_model():
        if not state.model_loaded:
            raise HTTPException(status_code=409, detail="model not loaded")

    def require_admin(token: Optional[str]):
        if token != config.admin_token:
            raise HTTPException(status_code=403, detail="admin token required")

    @app.get("/v1/health")
    def health():
        return {
            "status": "ok",
            "model_loaded": state.model_loaded,
            "clips": len(state.clips),
            "encoder_calls": state.pipeline.encoder_calls if state.pipeline else 0,
        }

    # --- clips -----------------------------------------------------------

    @app.get("/v1/clips")
    def list_clips():
        return {"clips": sorted(state.clips)}

    @app.get("/v1/clips/{clip_id}")
    def clip_info(clip_id: str):
        clip = state.get_clip(clip_id)
        if clip is None:
            raise HTTPException(status_code=404, detail=f"unknown clip {clip_id!r}")
        return {
            "clip_id": clip_id,
            "n_frames": clip.n_frames,
            "fps": clip.fps,
            "frame_url_template": f"/v1/clips/{clip_id}/frames/{{index}}",
        }

    @app.get("/v1/clips/{clip_id}/frames/{index}")
    def clip_frame(clip_id: str, index: int):
        from PIL import Image

        clip = state.get_clip(clip_id)
        if clip is None:
            raise HTTPException(status_code=404, detail=f"unknown clip {clip_id!r}")
        if not (0 <= index < clip.n_frames):
            raise HTTPException(status_code=404, detail=f"frame {index} out of range")
        frame = (np.asarray(clip.frames[index]) * 255.0).astype(np.uint8)
        buf = io.BytesIO()
        Image.fromarray(frame).save(buf, format="PNG")
        return Response(content=buf.getvalue(), media_type="image/png")

    # --- inference ---------------------------------------------------------

    @app.post("/v1/infer")
    def infer(req: InferRequest):
        require_model()
        if not req.question.strip():
            raise HTTPException(status_code=422, detail="question must be non-empty")
        clip = state.get_clip(req.clip_id)
        if clip is None:
            raise HTTPException(status_code=404, detail=f"unknown clip {req.clip_id!r}")
        result = state.pipeline.infer(clip, req.question, max_new_tokens=config.max_new_tokens)
        extracted = extract_labels(result.answer).severity if result.answer.strip() else None
        return {
            "answer": result.answer,
            "predicted_foul": result.predicted_foul.display,
            "predicted_severity": result.predicted_severity.display,
            "extracted_severity": extracted.display if extracted else None,
        }

    # --- chat ----------------------------------------------------------------

    @app.post("/v1/sessions")
    def create_session(req: SessionRequest):
        require_model()
        try:
            session = state.create_session(req.clip_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown clip {req.clip_id!r}")
        return {
            "session_id": session.session_id,
            "clip_id": session.clip_id,
            "predicted_foul": session.bundle.predicted_foul.display,
            "predicted_severity": session.bundle.predicted_severity.display,
        }

    @app.get("/v1/sessions/{session_id}")
    def session_history(session_id: str):
        session = state.get_session(session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown or expired session")
        return {
            "session_id": session.session_id,
            "clip_id": session.clip_id,
            "history": [{"role": role, "text": text} for role, text in session.history],
        }

    @app.post("/v1/chat")
    def chat(req: ChatRequest):
        require_model()
        if not req.message.strip():
            raise HTTPException(status_code=422, detail="message must be non-empty")
        session = state.get_session(req.session_id)
        if session is None:
            raise HTTPException(status_code=404, detail="unknown or expired session")
        try:
            state.acquire_session(session)
        except SessionBusyError:
            raise HTTPException(status_code=429, detail="a generation is already running for this session")
        try:
            lm = state.pipeline.lm
            if session.prompt is None:
                # first turn: predictions and visual tokens enter here, once
                session.prompt = state.pipeline.build_prompt(req.message, session.visual, session.bundle)
            else:
                append_follow_up(session.prompt, req.message, lm.tokenizer)
            try:
                answer = generate_answer(session.prompt, lm, max_new_tokens=config.max_new_tokens)
            except ContextOverflowError:
                raise HTTPException(
                    status_code=413,
                    detail="conversation exceeds the model context window; start a new session",
                )
            append_answer(session.prompt, answer, lm.tokenizer)
            session.history.append(("user", req.message))
            session.history.append(("assistant", answer))
            session.last_used = time.time()
            return {"answer": answer}
        finally:
            session.lock.release()

    # --- study -----------------------------------------------------------------

    @app.post("/v1/study")
    def study_create(req: StudyCreateRequest, x_admin_token: Optional[str] = Header(default=None)):
        require_admin(x_admin_token)
        try:
            items = [StudyItem(clip_id=i.clip_id, explanation=i.explanation, source=i.source)
                     for i in req.items]
        except ValueError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        try:
            sessions = state.create_study(items, req.raters, req.items_per_rater, req.seed)
        except InsufficientItemsError as exc:
            raise HTTPException(status_code=422, detail=str(exc))
        return {"raters": [s.rater_id for s in sessions], "items_per_rater": req.items_per_rater}

    @app.get("/v1/study/{rater_id}/next")
    def study_next(rater_id: str):
        try:
            item = state.next_study_item(rater_id)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown rater {rater_id!r}")
        if item is None:
            return Response(status_code=204)
        return item

    @app.post("/v1/study/{rater_id}/rating")
    def study_rating(rater_id: str, req: RatingRequest):
        try:
            state.record_rating(rater_id, req.item_index, req.score)
        except KeyError:
            raise HTTPException(status_code=404, detail=f"unknown rater {rater_id!r}")
        except IndexError:
            raise HTTPException(status_code=404, detail=f"item {req.item_index} out of range")
        except DuplicateRatingError as exc:
            raise HTTPException(status_code=409, detail=str(exc))
        return {"recorded": True}

    @app.get("/v1/study/summary")
    def study_summary_endpoint(x_admin_token: Optional[str] = Header(default=None)):
        require_admin(x_admin_token)
        report = study_summary(state.ratings, state.study_sessions)
        return {
            "per_source": {
                src: {
                    "n_ratings": s.n_ratings,
                    "mean": s.mean,
                    "distribution_counts": list(s.distribution_counts),
                    "distribution_pct": list(s.distribution_pct),
                }
                for src, s in report.per_source.items()
            },
            "model_outscored_fraction": report.model_outscored_fraction,
            "n_paired_clips": report.n_paired_clips,
            "table": format_study_table(study_rows_from_report(report), footer=report.rounding_note),
        }

    # console static files, when a build exists next to the package
    console_dist = Path(__file__).resolve().parents[3] / "frontend" / "dist"
    if console_dist.exists():
        from fastapi.staticfiles import StaticFiles

        app.mount("/console", StaticFiles(directory=console_dist, html=True), name="console")

    return app


def build_app(config: Optional[ServiceConfig] = None) -> FastAPI:
    return create_app(AppState(config or ServiceConfig()))

"""HTTP generation service.

Endpoints (JSON request/response bodies):

* ``POST /api/generate`` -- lyrics + nine optional controls + optional seed
  and checkpoint id; returns the melody, realized style features, and a
  generation id.
* ``GET /api/generations/{gid}/midi`` -- the generation as a MIDI file.
* ``GET /api/generations/{gid}/pianoroll`` -- piano-roll JSON (onsets and
  offsets in quarter notes, pitch, syllable labels).
* ``GET /api/checkpoints`` -- available checkpoint ids.
* ``GET /api/health`` -- liveness.

The service is stateless between requests apart from an in-memory
generation cache keyed by generation id, optionally persisted to disk.
Models are immutable once loaded; each request gets its own RNG stream.
"""

from __future__ import annotations

import hashlib
import json
from pathlib import Path

from fastapi import FastAPI, HTTPException, Response
from fastapi.middleware.cors import CORSMiddleware
from fastapi.staticfiles import StaticFiles
from pydantic import BaseModel, Field, field_validator

from .checkpoint import canonical_json
from .lyrics import LyricsSequence
from .midi import midi_bytes
from .notes import MelodySequence
from .pipeline import GenerationResult, MelodyComposer, pianoroll_dict
from .style import FEATURE_KEYS

CHECKPOINT_SUFFIX = ".ckpt"


class GenerateRequest(BaseModel):
    lyrics: str = Field(min_length=1)
    controls: dict[str, float] | None = None
    seed: int | None = None
    checkpoint: str | None = None
    tempo_bpm: float = 120.0

    @field_validator("controls")
    @classmethod
    def _check_controls(cls, controls):
        if controls is None:
            return None
        for key, value in controls.items():
            if key not in FEATURE_KEYS:
                raise ValueError(f"unknown style control {key!r}")
            if not 0.0 <= value <= 1.0:
                raise ValueError(f"control {key}={value} outside [0, 1]")
        return controls


class ServiceState:
    def __init__(self, checkpoint_dir: str | Path, persist_dir: str | Path | None = None):
        self.checkpoint_dir = Path(checkpoint_dir)
        self.persist_dir = Path(persist_dir) if persist_dir else None
        self._models: dict[str, MelodyComposer] = {}
        self._cache: dict[str, dict] = {}

    def checkpoint_ids(self) -> list[str]:
        if not self.checkpoint_dir.is_dir():
            return []
        return sorted(p.stem for p in self.checkpoint_dir.glob(f"*{CHECKPOINT_SUFFIX}"))

    def default_checkpoint(self) -> str | None:
        ids = self.checkpoint_ids()
        return ids[-1] if ids else None

    def model(self, checkpoint_id: str) -> MelodyComposer:
        if checkpoint_id not in self._models:
            path = self.checkpoint_dir / f"{checkpoint_id}{CHECKPOINT_SUFFIX}"
            if not path.exists():
                raise HTTPException(status_code=404, detail=f"unknown checkpoint {checkpoint_id!r}")
            try:
                self._models[checkpoint_id] = MelodyComposer.load(path)
            except Exception as exc:
                raise HTTPException(status_code=503, detail=f"checkpoint load failed: {exc}")
        return self._models[checkpoint_id]

    def remember(self, gid: str, record: dict) -> None:
        self._cache[gid] = record
        if self.persist_dir is not None:
            self.persist_dir.mkdir(parents=True, exist_ok=True)
            (self.persist_dir / f"{gid}.json").write_text(
                json.dumps(record, sort_keys=True), encoding="utf-8"
            )

    def recall(self, gid: str) -> dict:
        if gid in self._cache:
            return self._cache[gid]
        if self.persist_dir is not None:
            path = self.persist_dir / f"{gid}.json"
            if path.exists():
                record = json.loads(path.read_text(encoding="utf-8"))
                self._cache[gid] = record
                return record
        raise HTTPException(status_code=404, detail=f"unknown generation {gid!r}")


def _record(result: GenerationResult, request: GenerateRequest, checkpoint_id: str, gid: str) -> dict:
    return {
        "generation_id": gid,
        "checkpoint": checkpoint_id,
        "seed": result.seed,
        "lyrics": {
            "syllables": list(result.lyrics.syllables),
            "word_spans": [list(s) for s in result.lyrics.word_spans],
        },
        "controls": result.controls,
        "melody": [list(n.as_tuple()) for n in result.melody.notes],
        "tokens": {a: list(v) for a, v in result.tokens.items()},
        "realized_style": result.realized_style.as_dict(),
        "tempo_bpm": request.tempo_bpm,
        "request": request.model_dump(),
    }


def create_app(
    checkpoint_dir: str | Path,
    persist_dir: str | Path | None = None,
    static_dir: str | Path | None = None,
) -> FastAPI:
    state = ServiceState(checkpoint_dir, persist_dir)
    app = FastAPI(title="stylemelody generation service")
    app.add_middleware(
        CORSMiddleware, allow_origins=["*"], allow_methods=["*"], allow_headers=["*"]
    )
    app.state.service = state

    @app.get("/api/health")
    def health():
        return {"status": "ok", "checkpoints": len(state.checkpoint_ids())}

    @app.get("/api/checkpoints")
    def checkpoints():
        return {"checkpoints": state.checkpoint_ids(), "default": state.default_checkpoint()}

    @app.post("/api/generate")
    def generate(request: GenerateRequest):
        checkpoint_id = request.checkpoint or state.default_checkpoint()
        if checkpoint_id is None:
            raise HTTPException(status_code=503, detail="no checkpoints available")
        model = state.model(checkpoint_id)
        try:
            result = model.generate(request.lyrics, controls=request.controls, seed=request.seed)
        except ValueError as exc:
            raise HTTPException(status_code=400, detail=str(exc))
        # id is a content hash, so an identical seeded request maps to the
        # same generation record
        gid = hashlib.sha256(
            canonical_json(
                {"r": request.model_dump(), "seed": result.seed, "ckpt": checkpoint_id}
            ).encode()
        ).hexdigest()[:16]
        record = _record(result, request, checkpoint_id, gid)
        state.remember(gid, record)
        return record

    @app.get("/api/generations/{gid}/midi")
    def generation_midi(gid: str):
        record = state.recall(gid)
        melody = MelodySequence.from_triplets(record["melody"])
        data = midi_bytes(melody, tempo_bpm=record.get("tempo_bpm", 120.0))
        return Response(
            content=data,
            media_type="audio/midi",
            headers={"Content-Disposition": f'attachment; filename="{gid}.mid"'},
        )

    @app.get("/api/generations/{gid}/pianoroll")
    def generation_pianoroll(gid: str):
        record = state.recall(gid)
        melody = MelodySequence.from_triplets(record["melody"])
        lyrics = LyricsSequence(
            tuple(record["lyrics"]["syllables"]),
            tuple(tuple(s) for s in record["lyrics"]["word_spans"]),
        )
        roll = pianoroll_dict(melody, lyrics, record.get("tempo_bpm", 120.0))
        roll["generation_id"] = gid
        return roll

    if static_dir is not None and Path(static_dir).is_dir():
        app.mount("/studio", StaticFiles(directory=str(static_dir), html=True), name="studio")

    return app

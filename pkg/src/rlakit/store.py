"""File-backed session store: one append-only JSONL log per session.

The log is the only persistence — state is always derived by replay, so
deleting everything except the logs loses nothing.  Appends are
serialized per session (single-writer); reads replay an immutable
prefix and need no lock.
"""

from __future__ import annotations

import re
import threading
from pathlib import Path

from .model import ModelError
from .session import LogEntry, Session, dump_log, parse_log, replay

_ID_RE = re.compile(r"^[A-Za-z0-9._-]+$")


class StoreError(ModelError):
    pass


class SessionStore:
    def __init__(self, root: str | Path):
        self.root = Path(root)
        self.root.mkdir(parents=True, exist_ok=True)
        self._locks: dict[str, threading.Lock] = {}
        self._locks_guard = threading.Lock()

    def _lock(self, session_id: str) -> threading.Lock:
        with self._locks_guard:
            return self._locks.setdefault(session_id, threading.Lock())

    def path(self, session_id: str) -> Path:
        if not _ID_RE.match(session_id):
            raise StoreError("BAD_SESSION_ID", session_id)
        return self.root / f"{session_id}.jsonl"

    def list_sessions(self) -> list[str]:
        return sorted(p.stem for p in self.root.glob("*.jsonl"))

    def exists(self, session_id: str) -> bool:
        return self.path(session_id).exists()

    def load(self, session_id: str) -> Session:
        p = self.path(session_id)
        if not p.exists():
            raise StoreError("NO_SUCH_SESSION", session_id)
        return replay(parse_log(p.read_text("utf-8")), session_id)

    def append(self, session_id: str, kind: str, payload: dict, actor: str, ts: str) -> LogEntry:
        """Replay, validate the new event, then append one line."""
        with self._lock(session_id):
            p = self.path(session_id)
            if kind == "contest" and not p.exists():
                session = Session(id=session_id)
            else:
                session = self.load(session_id)
            entry = session.append(kind, payload, actor, ts)
            with p.open("a", encoding="utf-8") as fh:
                fh.write(entry.to_line() + "\n")
            return entry

    def write_session(self, session: Session):
        with self._lock(session.id):
            self.path(session.id).write_text(dump_log(session.entries), "utf-8")

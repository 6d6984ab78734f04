# board/store.py
"""
In-memory message store.
"""
import threading
from typing import Dict, List, Optional, Tuple

from .models import MessageEnvelope, StoredMessage


class MessageBoard:
    """Thread-safe per-session message store keyed by (message type, sender)."""

    def __init__(self):
        self._sessions: Dict[str, Dict[Tuple[str, str], StoredMessage]] = {}
        self._lock = threading.RLock()

    def post(self, session_id: str, envelope: MessageEnvelope) -> Optional[StoredMessage]:
        """Store a message; returns None if this sender already posted this type."""
        with self._lock:
            session = self._sessions.setdefault(session_id, {})
            key = (envelope.message_type, envelope.sender)
            if key in session:
                return None
            stored = StoredMessage(**envelope.model_dump(), sequence=len(session))
            session[key] = stored
            return stored

    def messages(self, session_id: str, message_type: str) -> Optional[List[StoredMessage]]:
        """Messages of one type in arrival order, or None for an unknown session."""
        with self._lock:
            session = self._sessions.get(session_id)
            if session is None:
                return None
            found = [m for (kind, _), m in session.items() if kind == message_type]
            return sorted(found, key=lambda m: m.sequence)

    def delete_session(self, session_id: str) -> bool:
        with self._lock:
            return self._sessions.pop(session_id, None) is not None

    def session_count(self) -> int:
        with self._lock:
            return len(self._sessions)

    def clear(self) -> None:
        """Drop every session (for testing)."""
        with self._lock:
            self._sessions.clear()


# Global board instance
message_board = MessageBoard()

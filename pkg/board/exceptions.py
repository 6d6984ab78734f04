# board/exceptions.py
"""
HTTP errors raised by the message board.
"""
from fastapi import HTTPException


class SessionNotFoundError(HTTPException):
    """Raised when a session has no messages."""
    def __init__(self, session_id: str):
        super().__init__(
            status_code=404,
            detail=f"Session '{session_id}' not found."
        )


class MessageConflictError(HTTPException):
    """Raised when a party posts the same message type twice."""
    def __init__(self, sender: str, message_type: str):
        super().__init__(
            status_code=409,
            detail=f"Party '{sender}' already posted a '{message_type}' message in this session."
        )


class DigestMismatchError(HTTPException):
    """Raised when a message body does not match its digest."""
    def __init__(self, sender: str):
        super().__init__(
            status_code=422,
            detail=f"Message body from party '{sender}' does not match its digest."
        )


class SimulatedFaultError(HTTPException):
    """Raised to simulate an unavailable board."""
    def __init__(self):
        super().__init__(status_code=503, detail="Service Unavailable - Simulated failure")

# board/routes.py
"""
Message board route definitions.
"""
import base64
import binascii
import hashlib
import logging

from fastapi import APIRouter, Query

from .exceptions import DigestMismatchError, MessageConflictError, SessionNotFoundError
from .models import HealthResponse, MessageEnvelope, MessageList, MessageReceipt
from .store import message_board

logger = logging.getLogger(__name__)

router = APIRouter()


@router.post(
    "/sessions/{session_id}/messages",
    response_model=MessageReceipt,
    status_code=201,
    summary="Post a protocol message",
)
async def post_message(session_id: str, envelope: MessageEnvelope) -> MessageReceipt:
    """
    Store a framed message for the other parties of a session.

    - **sender**: Posting party id
    - **message_type**: Protocol message type
    - **body**: Base64-encoded frame
    - **digest**: Hex SHA-256 of the decoded frame
    """
    try:
        body = base64.b64decode(envelope.body, validate=True)
    except (binascii.Error, ValueError):
        raise DigestMismatchError(envelope.sender)
    if hashlib.sha256(body).hexdigest() != envelope.digest:
        raise DigestMismatchError(envelope.sender)

    stored = message_board.post(session_id, envelope)
    if stored is None:
        logger.warning(f"Duplicate {envelope.message_type} from party {envelope.sender} in session {session_id}")
        raise MessageConflictError(envelope.sender, envelope.message_type)

    logger.info(f"Session {session_id}: stored {envelope.message_type} from party {envelope.sender}")
    return MessageReceipt(
        session_id=session_id,
        sender=stored.sender,
        message_type=stored.message_type,
        sequence=stored.sequence,
    )


@router.get("/sessions/{session_id}/messages", response_model=MessageList, summary="List messages of a type")
async def get_messages(
    session_id: str,
    message_type: str = Query(..., description="Protocol message type"),
) -> MessageList:
    """
    Retrieve every message of one type posted so far in a session.
    """
    messages = message_board.messages(session_id, message_type)
    if messages is None:
        raise SessionNotFoundError(session_id)
    return MessageList(session_id=session_id, message_type=message_type, messages=messages)


@router.delete("/sessions/{session_id}", status_code=204, summary="Delete a session")
async def delete_session(session_id: str) -> None:
    """
    Drop a finished session and all its messages.
    """
    if not message_board.delete_session(session_id):
        raise SessionNotFoundError(session_id)


@router.get("/health", response_model=HealthResponse, summary="Health check")
async def health_check() -> HealthResponse:
    """Health check endpoint."""
    return HealthResponse(status="healthy", sessions=message_board.session_count())

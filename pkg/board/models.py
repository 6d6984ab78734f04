# board/models.py
"""
Pydantic models for the message board API.
"""
from datetime import datetime
from typing import List

from pydantic import BaseModel, Field


class MessageEnvelope(BaseModel):
    """A framed protocol message as posted by a party."""
    sender: str = Field(..., min_length=1, description="Sending party id")
    message_type: str = Field(..., min_length=1, description="Protocol message type")
    body: str = Field(..., description="Base64-encoded frame")
    digest: str = Field(..., min_length=64, max_length=64, description="Hex SHA-256 of the decoded body")


class StoredMessage(MessageEnvelope):
    """A message as kept by the board."""
    sequence: int = Field(..., ge=0, description="Arrival order within the session")
    received: datetime = Field(default_factory=datetime.now)


class MessageReceipt(BaseModel):
    """Acknowledgement of a posted message."""
    session_id: str
    sender: str
    message_type: str
    sequence: int


class MessageList(BaseModel):
    """Messages of one type in a session, in arrival order."""
    session_id: str
    message_type: str
    messages: List[StoredMessage] = Field(default_factory=list)


class HealthResponse(BaseModel):
    status: str = "healthy"
    sessions: int = 0

"""
Tests for the message board API.
"""
import base64
import hashlib

import pytest
from fastapi.testclient import TestClient

from board.main import app

pytestmark = pytest.mark.unit


@pytest.fixture
def client():
    return TestClient(app)


def _envelope(sender="1", message_type="payload/0", body=b"frame"):
    return {
        "sender": sender,
        "message_type": message_type,
        "body": base64.b64encode(body).decode("ascii"),
        "digest": hashlib.sha256(body).hexdigest(),
    }


def test_post_message(client):
    response = client.post("/sessions/a/messages", json=_envelope())
    assert response.status_code == 201
    assert response.json() == {"session_id": "a", "sender": "1", "message_type": "payload/0", "sequence": 0}


def test_sequence_follows_arrival(client):
    client.post("/sessions/a/messages", json=_envelope(sender="2"))
    client.post("/sessions/a/messages", json=_envelope(sender="1"))
    listed = client.get("/sessions/a/messages", params={"message_type": "payload/0"}).json()
    assert [m["sender"] for m in listed["messages"]] == ["2", "1"]
    assert [m["sequence"] for m in listed["messages"]] == [0, 1]


def test_duplicate_conflicts(client):
    client.post("/sessions/a/messages", json=_envelope())
    response = client.post("/sessions/a/messages", json=_envelope(body=b"other"))
    assert response.status_code == 409
    assert "already posted" in response.json()["detail"]


def test_digest_mismatch(client):
    envelope = _envelope()
    envelope["digest"] = hashlib.sha256(b"something else").hexdigest()
    assert client.post("/sessions/a/messages", json=envelope).status_code == 422


def test_invalid_base64(client):
    envelope = _envelope()
    envelope["body"] = "not base64!"
    assert client.post("/sessions/a/messages", json=envelope).status_code == 422


def test_missing_fields(client):
    assert client.post("/sessions/a/messages", json={"sender": "1"}).status_code == 422


def test_filter_by_type(client):
    client.post("/sessions/a/messages", json=_envelope(message_type="payload/0"))
    client.post("/sessions/a/messages", json=_envelope(message_type="verdict/0"))
    listed = client.get("/sessions/a/messages", params={"message_type": "verdict/0"}).json()
    assert len(listed["messages"]) == 1
    assert listed["message_type"] == "verdict/0"


def test_unknown_session(client):
    response = client.get("/sessions/missing/messages", params={"message_type": "payload/0"})
    assert response.status_code == 404


def test_delete_session(client):
    client.post("/sessions/a/messages", json=_envelope())
    assert client.delete("/sessions/a").status_code == 204
    assert client.delete("/sessions/a").status_code == 404


def test_health(client):
    client.post("/sessions/a/messages", json=_envelope())
    response = client.get("/health")
    assert response.status_code == 200
    assert response.json() == {"status": "healthy", "sessions": 1}

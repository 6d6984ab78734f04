# bidprice/channel.py
"""
Message channels between protocol parties.

A channel delivers framed byte messages keyed by (message type, sender) and
offers barrier collection: wait until every expected sender has published.
Loss shows up as a timeout, duplication as a rejected publish; neither is
retried.
"""
import base64
import hashlib
import logging
import threading
import time
from abc import ABC, abstractmethod
from typing import Any, Dict, Iterable, Optional, Tuple

import requests

from config.settings import board_settings
from .exceptions import ChannelError

logger = logging.getLogger(__name__)


class Channel(ABC):
    """Publish/collect interface shared by every transport."""

    @abstractmethod
    def publish(self, sender: str, message_type: str, body: bytes) -> None:
        """Publish one message. Publishing the same (sender, type) twice is an error."""

    @abstractmethod
    def collect(self, message_type: str, senders: Iterable[str],
                timeout: Optional[float] = None) -> Dict[str, bytes]:
        """Block until every sender has published a message of this type."""

    def close(self) -> None:
        """Release transport resources."""


class InProcessChannel(Channel):
    """Thread-safe in-memory channel for actors running in one process."""

    def __init__(self, timeout: float = board_settings.timeout):
        self.timeout = timeout
        self._messages: Dict[Tuple[str, str], bytes] = {}
        self._condition = threading.Condition()

    def publish(self, sender: str, message_type: str, body: bytes) -> None:
        with self._condition:
            key = (message_type, sender)
            if key in self._messages:
                logger.error(f"Duplicate {message_type} message from party {sender}")
                raise ChannelError(f"Duplicate {message_type} message from party {sender}")
            self._messages[key] = bytes(body)
            self._condition.notify_all()
        logger.debug(f"Party {sender} published {message_type} ({len(body)} bytes)")

    def collect(self, message_type: str, senders: Iterable[str],
                timeout: Optional[float] = None) -> Dict[str, bytes]:
        senders = list(senders)
        timeout = self.timeout if timeout is None else timeout
        with self._condition:
            complete = self._condition.wait_for(
                lambda: all((message_type, s) in self._messages for s in senders), timeout=timeout
            )
            if not complete:
                missing = [s for s in senders if (message_type, s) not in self._messages]
                raise ChannelError(f"Timed out after {timeout}s waiting for {message_type} from parties {missing}")
            return {s: self._messages[(message_type, s)] for s in senders}


class HttpChannel(Channel):
    """
    Channel backed by the message board service.

    Any object with requests-style ``post``/``get``/``delete`` methods can be
    injected as the client, e.g. a FastAPI TestClient.
    """

    def __init__(
        self,
        base_url: str,
        session_id: str,
        client: Optional[Any] = None,
        poll_interval: float = board_settings.poll_interval,
        timeout: float = board_settings.timeout,
    ):
        self.base_url = base_url.rstrip("/")
        self.session_id = session_id
        self._injected = client
        self._local = threading.local()
        self.poll_interval = poll_interval
        self.timeout = timeout
        logger.info(f"Initialized HTTP channel for {self.base_url} session {session_id}")

    @property
    def client(self) -> Any:
        """The injected client, or one requests session per thread."""
        if self._injected is not None:
            return self._injected
        if not hasattr(self._local, "session"):
            self._local.session = requests.Session()
        return self._local.session

    def _url(self, suffix: str = "") -> str:
        return f"{self.base_url}/sessions/{self.session_id}{suffix}"

    def publish(self, sender: str, message_type: str, body: bytes) -> None:
        envelope = {
            "sender": sender,
            "message_type": message_type,
            "body": base64.b64encode(body).decode("ascii"),
            "digest": hashlib.sha256(body).hexdigest(),
        }
        try:
            response = self.client.post(self._url("/messages"), json=envelope)
        except requests.exceptions.RequestException as e:
            logger.error(f"Publish from party {sender} failed: {e}")
            raise ChannelError(f"Publish from party {sender} failed: {e}") from e
        if response.status_code == 409:
            raise ChannelError(f"Duplicate {message_type} message from party {sender}")
        if response.status_code >= 300:
            raise ChannelError(f"Board rejected {message_type} from party {sender}: "
                               f"{response.status_code} {response.text}")
        logger.debug(f"Party {sender} posted {message_type} ({len(body)} bytes)")

    def _fetch(self, message_type: str) -> Dict[str, bytes]:
        try:
            response = self.client.get(self._url("/messages"), params={"message_type": message_type})
        except requests.exceptions.RequestException as e:
            raise ChannelError(f"Polling the board failed: {e}") from e
        if response.status_code == 404:
            return {}
        if response.status_code >= 300:
            raise ChannelError(f"Board returned {response.status_code} while polling: {response.text}")

        messages: Dict[str, bytes] = {}
        for item in response.json()["messages"]:
            body = base64.b64decode(item["body"])
            if hashlib.sha256(body).hexdigest() != item["digest"]:
                raise ChannelError(f"Corrupted {message_type} message from party {item['sender']}")
            messages[item["sender"]] = body
        return messages

    def collect(self, message_type: str, senders: Iterable[str],
                timeout: Optional[float] = None) -> Dict[str, bytes]:
        senders = list(senders)
        deadline = time.monotonic() + (self.timeout if timeout is None else timeout)
        while True:
            messages = self._fetch(message_type)
            missing = [s for s in senders if s not in messages]
            if not missing:
                return {s: messages[s] for s in senders}
            if time.monotonic() >= deadline:
                raise ChannelError(f"Timed out waiting for {message_type} from parties {missing}")
            time.sleep(self.poll_interval)

    def close(self) -> None:
        try:
            self.client.delete(self._url())
        except requests.exceptions.RequestException as e:
            logger.warning(f"Could not delete board session {self.session_id}: {e}")

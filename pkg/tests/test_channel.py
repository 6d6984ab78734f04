"""
Tests for the in-process and HTTP channels.
"""
import threading

import pytest
from fastapi.testclient import TestClient

from board.main import app
from bidprice.channel import HttpChannel, InProcessChannel
from bidprice.exceptions import ChannelError

pytestmark = pytest.mark.unit


class TestInProcessChannel:
    def test_collect_returns_every_sender(self):
        channel = InProcessChannel(timeout=1.0)
        channel.publish("1", "payload/0", b"one")
        channel.publish("2", "payload/0", b"two")
        assert channel.collect("payload/0", ["1", "2"]) == {"1": b"one", "2": b"two"}

    def test_collect_waits_for_late_sender(self):
        channel = InProcessChannel(timeout=5.0)
        channel.publish("1", "payload/0", b"one")
        late = threading.Timer(0.05, channel.publish, args=("2", "payload/0", b"two"))
        late.start()
        try:
            assert channel.collect("payload/0", ["1", "2"])["2"] == b"two"
        finally:
            late.join()

    def test_duplicate_is_rejected(self):
        channel = InProcessChannel()
        channel.publish("1", "payload/0", b"one")
        with pytest.raises(ChannelError, match="Duplicate"):
            channel.publish("1", "payload/0", b"again")

    def test_missing_sender_times_out(self):
        channel = InProcessChannel()
        channel.publish("1", "payload/0", b"one")
        with pytest.raises(ChannelError, match=r"Timed out.*\['2'\]"):
            channel.collect("payload/0", ["1", "2"], timeout=0.05)


class TestHttpChannel:
    @pytest.fixture
    def channel(self):
        return HttpChannel("http://testserver", "s1", client=TestClient(app), poll_interval=0.01, timeout=0.2)

    def test_publish_and_collect(self, channel):
        channel.publish("1", "payload/0", b"\x00\x01binary")
        channel.publish("2", "payload/0", b"other")
        assert channel.collect("payload/0", ["1", "2"]) == {"1": b"\x00\x01binary", "2": b"other"}

    def test_types_are_separate(self, channel):
        channel.publish("1", "payload/0", b"a")
        channel.publish("1", "verdict/0", b"b")
        assert channel.collect("verdict/0", ["1"]) == {"1": b"b"}

    def test_duplicate_is_rejected(self, channel):
        channel.publish("1", "payload/0", b"a")
        with pytest.raises(ChannelError, match="Duplicate"):
            channel.publish("1", "payload/0", b"a")

    def test_unknown_session_times_out(self, channel):
        with pytest.raises(ChannelError, match="Timed out"):
            channel.collect("payload/0", ["1"])

    def test_close_deletes_session(self, channel):
        channel.publish("1", "payload/0", b"a")
        channel.close()
        assert channel.client.get("/sessions/s1/messages", params={"message_type": "payload/0"}).status_code == 404

    def test_board_failure_is_a_channel_error(self, channel, mocker):
        mocker.patch("board.middleware.board_settings.failure_rate", 1.0)
        with pytest.raises(ChannelError, match="503"):
            channel.publish("1", "payload/0", b"a")

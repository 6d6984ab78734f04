# board/main.py
"""
Message board FastAPI application.
"""
import logging
import threading
import time
from contextlib import asynccontextmanager
from typing import Optional

import requests
import uvicorn
from fastapi import FastAPI

from bidprice.exceptions import ChannelError
from config.settings import board_settings
from .middleware import ChannelFaultMiddleware
from .routes import router
from .store import message_board

logger = logging.getLogger(__name__)


@asynccontextmanager
async def lifespan(app: FastAPI):
    """Manage application lifespan events."""
    yield
    message_board.clear()


def create_app() -> FastAPI:
    """Create and configure the FastAPI application."""
    app = FastAPI(
        title=board_settings.title,
        description=board_settings.description,
        version=board_settings.version,
        lifespan=lifespan,
        docs_url="/docs",
        redoc_url="/redoc",
    )
    app.add_middleware(ChannelFaultMiddleware)
    app.include_router(router, prefix="", tags=["messages"])
    return app


# Create the app instance
app = create_app()


class BoardServer:
    """A uvicorn server for the board running on a background thread."""

    def __init__(self, host: str = board_settings.host, port: int = board_settings.port):
        self.host = host
        self.port = port
        config = uvicorn.Config(app, host=host, port=port, log_level="warning")
        self.server = uvicorn.Server(config)
        self.thread: Optional[threading.Thread] = None

    @property
    def url(self) -> str:
        return f"http://{self.host}:{self.port}"

    def start(self, timeout: float = 10.0) -> "BoardServer":
        self.thread = threading.Thread(target=self.server.run, daemon=True)
        self.thread.start()
        deadline = time.monotonic() + timeout
        while time.monotonic() < deadline:
            try:
                if requests.get(f"{self.url}/health", timeout=1.0).status_code == 200:
                    logger.info(f"Message board listening on {self.url}")
                    return self
            except requests.exceptions.RequestException:
                pass
            time.sleep(0.05)
        raise ChannelError(f"Message board did not start on {self.url}")

    def stop(self) -> None:
        self.server.should_exit = True
        if self.thread is not None:
            self.thread.join(timeout=5.0)

    def __enter__(self) -> "BoardServer":
        return self.start()

    def __exit__(self, *exc) -> None:
        self.stop()


def main(host: str = board_settings.host, port: int = board_settings.port):
    """Run the application."""
    uvicorn.run(
        "board.main:app",
        host=host,
        port=port,
        reload=board_settings.debug,
    )


if __name__ == "__main__":
    main()

# board/middleware.py
"""
Middleware for injecting channel faults.
"""
import asyncio
import random
from typing import Awaitable, Callable

from fastapi import Request, Response
from fastapi.responses import JSONResponse
from starlette.middleware.base import BaseHTTPMiddleware

from config.settings import board_settings
from .exceptions import SimulatedFaultError


class ChannelFaultMiddleware(BaseHTTPMiddleware):
    """Delay requests and fail a share of them, as configured in board settings."""

    async def dispatch(self, request: Request, call_next: Callable[[Request], Awaitable[Response]]) -> Response:
        if request.url.path in ["/health", "/docs", "/openapi.json", "/redoc"]:
            return await call_next(request)

        if board_settings.max_latency > 0:
            await asyncio.sleep(random.uniform(board_settings.min_latency, board_settings.max_latency))

        if board_settings.failure_rate > 0 and random.random() < board_settings.failure_rate:
            fault = SimulatedFaultError()
            return JSONResponse(status_code=fault.status_code, content={"detail": fault.detail})

        return await call_next(request)

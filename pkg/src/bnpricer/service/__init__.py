"""FastAPI service exposing the pricing package over HTTP."""

from .app import app, create_app

__all__ = ["app", "create_app"]

"""FastAPI service wrapping the lightweight library operations."""

from volminer.service.app import app

__all__ = ["app"]

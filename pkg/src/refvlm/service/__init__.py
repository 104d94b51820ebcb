from .config import ServiceConfig, load_service_config
from .state import AppState, ChatSession, SessionBusyError
from .app import build_app, create_app

__all__ = [
    "ServiceConfig",
    "load_service_config",
    "AppState",
    "ChatSession",
    "SessionBusyError",
    "build_app",
    "create_app",
]

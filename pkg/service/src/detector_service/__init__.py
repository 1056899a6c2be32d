"""HTTP inference service speaking the detection-exchange wire protocol."""

from detector_service.app import (
    ModelBackend,
    ServiceConfig,
    StubBackend,
    create_app,
)

__all__ = ["ModelBackend", "ServiceConfig", "StubBackend", "create_app"]

__version__ = "0.1.0"

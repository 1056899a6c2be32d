"""Command-line entry point: serve the detection-exchange API.

    detector-service --port 8000 --host 0.0.0.0

Exit codes: 0 clean shutdown, 2 usage/config error.
"""

from __future__ import annotations

import argparse
import sys

import uvicorn

from detector_service.app import ServiceConfig, StubBackend, create_app


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="detector-service",
        description="HTTP inference service for the detection-exchange protocol",
    )
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8000)
    parser.add_argument(
        "--score-floor", type=float, default=0.0,
        help="drop detections scoring below this value",
    )
    return parser


def main(argv=None) -> int:
    args = build_parser().parse_args(argv)
    try:
        config = ServiceConfig(
            host=args.host, port=args.port, score_floor=args.score_floor
        )
    except ValueError as e:
        print(f"error: {e}", file=sys.stderr)
        return 2
    app = create_app(config, backend=StubBackend())
    uvicorn.run(app, host=config.host, port=config.port, log_level="warning")
    return 0


if __name__ == "__main__":
    sys.exit(main())

import argparse
import logging

import uvicorn

from app.config import settings


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(description="Start the Wick algebra workbench API server.")
    parser.add_argument("--host", type=str, default=settings.host, help="Host to bind the server to (WICK_HOST).")
    parser.add_argument("--port", type=int, default=settings.port, help="Port to bind the server to (WICK_PORT).")
    parser.add_argument("--reload", action="store_true", help="Enable auto-reload for development.")
    return parser


def main():
    args = build_parser().parse_args()

    logging.basicConfig(level=settings.log_level.upper(), format="%(asctime)s %(levelname)s %(name)s: %(message)s")
    logging.getLogger(__name__).info("Starting server on %s:%s", args.host, args.port)
    uvicorn.run("app.api.server:app", host=args.host, port=args.port, reload=args.reload)


if __name__ == "__main__":
    main()

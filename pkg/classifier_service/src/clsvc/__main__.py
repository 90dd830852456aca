"""Serve the classifier over HTTP: ``python -m clsvc --port 8571``."""

import argparse

import uvicorn

from .service import create_app


def main(argv=None):
    parser = argparse.ArgumentParser(prog="clsvc")
    parser.add_argument("--host", default="127.0.0.1")
    parser.add_argument("--port", type=int, default=8571)
    parser.add_argument(
        "--model",
        default=None,
        help="model file (.npz); loaded at startup if present, rewritten after training",
    )
    args = parser.parse_args(argv)
    uvicorn.run(create_app(args.model), host=args.host, port=args.port)


if __name__ == "__main__":
    main()

"""Command-line entry point: load a model and serve the /v1 API."""

from __future__ import annotations

import argparse
import sys

from .service import ServiceConfig, build_state, create_app


def _parse_listen(address: str) -> tuple[str, int]:
    host, _, port = address.rpartition(":")
    if not host or not port.isdigit():
        raise ValueError(f"listen address must be host:port, got {address!r}")
    return host, int(port)


def build_config(args) -> ServiceConfig:
    config = ServiceConfig.from_file(args.config) if args.config else ServiceConfig()
    config.apply_env()
    if args.model:
        config.model_path = args.model
    if args.format:
        config.model_format = args.format
    if args.max_vocab is not None:
        config.max_vocab = args.max_vocab
    if args.listen:
        config.listen_address = args.listen
    return config


def main(argv=None) -> int:
    parser = argparse.ArgumentParser(
        prog="refitlab",
        description="Serve a word2vec model for interactive search and refitting.",
    )
    parser.add_argument("--config", help="JSON config file")
    parser.add_argument("--model", help="path to the embedding model file")
    parser.add_argument("--format", choices=["binary", "text"], help="model file format")
    parser.add_argument(
        "--max-vocab", type=int, default=None, help="load only the first N vocabulary rows"
    )
    parser.add_argument("--listen", help="host:port to listen on")
    args = parser.parse_args(argv)

    try:
        config = build_config(args)
        host, port = _parse_listen(config.listen_address)
        state = build_state(config)
    except Exception as exc:
        print(f"refitlab: error: {exc}", file=sys.stderr)
        return 2

    print(
        f"refitlab: serving {len(state.model)} x {state.model.dims} model "
        f"from {config.model_path} on {host}:{port}",
        file=sys.stderr,
    )
    import uvicorn

    uvicorn.run(create_app(state), host=host, port=port, log_level="info")
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Command-line entry point: ``storychains {ingest,cluster,eval,stats,run}``.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import logging
import sys
from dataclasses import fields

from . import pipeline
from .analysis import LabelError
from .config import ConfigError, PipelineConfig, load_config
from .corpus import CorpusError

EXIT_OK, EXIT_USAGE, EXIT_DATA = 0, 1, 2

log = logging.getLogger("storychains")


class _Parser(argparse.ArgumentParser):
    def error(self, message: str):  # argparse would exit 2, which we reserve for data errors
        self.print_usage(sys.stderr)
        self.exit(EXIT_USAGE, f"{self.prog}: error: {message}\n")


def _add_config_flags(p: argparse.ArgumentParser) -> None:
    p.add_argument("-c", "--config", help="flat key = value config file")
    group = p.add_argument_group("config overrides")
    for f in fields(PipelineConfig):
        flag = "--" + f.name.replace("_", "-")
        group.add_argument(flag, dest=f"cfg_{f.name}", metavar=f.name.upper(),
                           help=f"(default: {f.default})")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="storychains", description="Detect news story chains in a timestamped corpus.")
    parser.add_argument("-v", "--verbose", action="store_true")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)
    for name, text in [
        ("ingest", "load and validate the corpus, build and cache the index"),
        ("cluster", "score windowed pairs, build the similarity network and cluster it"),
        ("eval", "evaluate the three pair classifiers against labelled pairs"),
        ("stats", "story size, source-association and follow-up delay reports"),
        ("run", "all stages in order (eval only when labels are configured)"),
    ]:
        _add_config_flags(sub.add_parser(name, help=text, description=text))
    return parser


def _config(args: argparse.Namespace) -> PipelineConfig:
    overrides = {k[4:]: v for k, v in vars(args).items() if k.startswith("cfg_") and v is not None}
    return load_config(args.config, overrides)


def _report_rejects(loaded: pipeline.Loaded) -> None:
    rejects = loaded.corpus.rejects
    if rejects:
        print(f"{len(rejects)} record(s) rejected", file=sys.stderr)
        for r in rejects:
            print(f"  line {r.line}: {r.reason}", file=sys.stderr)


def _ingest(config: PipelineConfig) -> pipeline.Loaded:
    loaded = pipeline.ingest(config)
    _report_rejects(loaded)
    print(f"ingested {len(loaded.corpus)} articles ({len(loaded.corpus.rejects)} rejected)"
          + (" [index cache hit]" if loaded.from_cache else ""))
    return loaded


def _cluster(config: PipelineConfig, loaded: pipeline.Loaded | None) -> None:
    res = pipeline.cluster(config, loaded)
    s = res.tree.summary()
    print(f"{len(res.network.edges)} directed edges, {s['modules']} top-level modules "
          f"({s['non_singleton_modules']} with 2+ articles), depth {s['depth']}, "
          f"codelength {s['codelength']:.4f} bits")


def _eval(config: PipelineConfig, loaded: pipeline.Loaded | None) -> None:
    report = pipeline.evaluate(config, loaded)
    print(report.to_text(), end="")


def _stats(config: PipelineConfig, loaded: pipeline.Loaded | None) -> None:
    res = pipeline.stats(config, loaded.corpus if loaded else None)
    print(res.association.to_text(), end="")
    print(res.sizes.to_text(), end="")


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(level=logging.INFO if args.verbose else logging.WARNING,
                        format="%(levelname)s: %(message)s", stream=sys.stderr)
    try:
        config = _config(args)
    except ConfigError as exc:
        print(f"storychains: {exc}", file=sys.stderr)
        return EXIT_USAGE

    try:
        cmd = args.command
        if cmd == "ingest":
            _ingest(config)
        elif cmd == "cluster":
            _cluster(config, _ingest(config))
        elif cmd == "eval":
            _eval(config, None)
        elif cmd == "stats":
            _stats(config, None)
        elif cmd == "run":
            loaded = _ingest(config)
            _cluster(config, loaded)
            if config.labels:
                _eval(config, loaded)
            _stats(config, loaded)
    except (CorpusError, LabelError, ConfigError) as exc:
        print(f"storychains: {exc}", file=sys.stderr)
        return EXIT_DATA
    except OSError as exc:
        print(f"storychains: {exc}", file=sys.stderr)
        return EXIT_DATA
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

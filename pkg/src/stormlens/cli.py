"""Command line entry point.

    stormlens run-all --config configs/mini.yaml
    stormlens lda-sweep --config my.yaml --sentiment negative --seed 3

Exit codes: 0 success, 1 invalid configuration or arguments, 2 a stage
started but failed, 3 missing files or other I/O trouble.
"""

from __future__ import annotations

import argparse
import logging
import sys

from .pipeline import (
    STAGE_ORDER,
    ArtifactMissingError,
    ConfigError,
    Pipeline,
    StageError,
    load_config,
)

log = logging.getLogger("stormlens")


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="stormlens",
        description="Batch tweet analysis: sentiment partitions, topics, "
        "graph-refined embeddings, clustering, event naming.",
    )
    parser.add_argument(
        "stage",
        choices=STAGE_ORDER + ["run-all"],
        help="pipeline stage to execute (run-all runs every stage in order)",
    )
    parser.add_argument("--config", required=True, help="YAML config file")
    parser.add_argument(
        "--sentiment",
        default=None,
        help="restrict per-partition stages to one sentiment label",
    )
    parser.add_argument(
        "--seed", type=int, default=None, help="override the config seed"
    )
    parser.add_argument(
        "--out", default=None, help="override the config output directory"
    )
    parser.add_argument(
        "--verbose", action="store_true", help="debug-level logging"
    )
    return parser


def main(argv: list[str] | None = None) -> int:
    args = build_parser().parse_args(argv)
    logging.basicConfig(
        level=logging.DEBUG if args.verbose else logging.INFO,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    overrides: dict = {}
    if args.seed is not None:
        overrides["seed"] = args.seed
    if args.out is not None:
        overrides["output_dir"] = args.out
    try:
        config = load_config(args.config, overrides=overrides)
        pipeline = Pipeline(config)
        if args.stage == "run-all":
            pipeline.run_all(sentiment=args.sentiment)
        else:
            pipeline.run_stage(args.stage, sentiment=args.sentiment)
    except ConfigError as exc:
        log.error("%s", exc)
        return 1
    except ArtifactMissingError as exc:
        log.error("%s", exc)
        return 3
    except StageError as exc:
        log.error("%s", exc)
        return 2
    except OSError as exc:
        log.error("I/O failure: %s", exc)
        return 3
    except Exception as exc:  # noqa: BLE001 - any other stage-level failure
        log.error("stage %s failed: %s", args.stage, exc)
        return 2
    return 0


if __name__ == "__main__":
    sys.exit(main())

"""Stage orchestration: config, seeds, artifacts, manifest, report.

Every stage reads its inputs from files written by upstream stages and
writes its own artifacts under the output directory, so any stage can be
re-run in isolation. A manifest records content digests of everything
written; wall-clock fields live next to the digests but are never part of
them, so reruns of a deterministic config produce identical digests.
"""

from __future__ import annotations

import csv
import hashlib
import json
import logging
import os
import tempfile
import time
from dataclasses import dataclass, field
from importlib import resources
from pathlib import Path

import numpy as np
import yaml

from . import cluster as cl
from . import graphs, naming, topics
from .ingest import (
    EMOTION_VALUES,
    CleaningConfig,
    StopwordSet,
    TweetRecord,
    apply_cleaning,
    load_corpus,
)
from .sentiment import (
    ValenceLexicon,
    apply_labels,
    emotion_distribution,
    partition_by_emotion,
    top_words_by_sentiment,
)
from .vectorize import (
    SparseDocTermMatrix,
    Vocabulary,
    build_vocabulary,
    docs_as_term_ids,
    tfidf_matrix,
)

log = logging.getLogger("stormlens")

ENV_PREFIX = "STORMLENS_"
BUNDLED_PREFIX = "bundled:"

STAGE_ORDER = [
    "clean", "emotions", "vectorize", "lda-sweep", "lda-fit",
    "graph", "gnn-train", "cluster", "compare", "name", "report",
]

# stage -> stages whose artifacts it reads
STAGE_DEPS = {
    "clean": [],
    "emotions": ["clean"],
    "vectorize": ["emotions"],
    "lda-sweep": ["vectorize"],
    "lda-fit": ["lda-sweep"],
    "graph": ["vectorize"],
    "gnn-train": ["graph"],
    "cluster": ["gnn-train"],
    "compare": ["gnn-train", "vectorize"],
    "name": ["cluster"],
    "report": [],
}


class ConfigError(ValueError):
    """Invalid configuration; the message lists every problem found."""


class ArtifactMissingError(FileNotFoundError):
    """An upstream artifact is absent; the message names the stage to run."""


class StageError(RuntimeError):
    """A stage started but could not finish."""


# ---------------------------------------------------------------------------
# configuration
# ---------------------------------------------------------------------------

DEFAULT_CONFIG = {
    "seed": 0,
    "output_dir": "runs/out",
    "input": {
        "corpus": None,
        "format": "csv",
        "text_column": "text",
        "id_column": "id",
        "time_column": None,
        "emotion_column": None,
        "labels": None,
        "strict": False,
    },
    "cleaning": {
        "strip_urls": True,
        "lowercase": True,
        "min_token_len": 2,
        "stemmer": True,
    },
    "stopwords": {
        "files": ["bundled:stopwords_en.txt"],
        "domain": [],
    },
    "sentiment": {
        "lexicon": None,
        "threshold": 0.5,
        "partitions": list(EMOTION_VALUES),
    },
    "vectorize": {
        "min_df": 2,
        "max_df_ratio": 0.95,
        "smooth_idf": False,
    },
    "topics": {
        "k_values": [5, 10, 15, 20],
        "iterations": 200,
        "sweep_iterations": 100,
        "alpha": None,
        "beta": 0.01,
        "top_n": 10,
        "k_override": None,
    },
    "graph": {
        "embeddings": None,
        "fallback_rank": 64,
        "knn_k": 10,
    },
    "gnn": {
        "hidden_dim": 32,
        "out_dim": 16,
        "epochs": 200,
        "step_size": 0.01,
        "momentum": 0.9,
    },
    "cluster": {
        "k_min": 2,
        "k_max": 10,
    },
    "naming": {
        "endpoint": None,
        "timeout": 10.0,
        "auth_token": None,
        "policy": "fallback",
        "template": None,
        "max_words": 8,
        "n_terms": 10,
        "n_representatives": 3,
    },
}


def _deep_merge(base: dict, override: dict) -> dict:
    out = dict(base)
    for key, value in override.items():
        if isinstance(value, dict) and isinstance(out.get(key), dict):
            out[key] = _deep_merge(out[key], value)
        else:
            out[key] = value
    return out


def _env_overrides(environ=None) -> dict:
    """STORMLENS_TOPICS__ITERATIONS=300 -> {"topics": {"iterations": 300}}.

    Values go through the YAML scalar parser, so numbers, booleans, null
    and lists all work from the shell.
    """
    environ = os.environ if environ is None else environ
    out: dict = {}
    for key, raw in environ.items():
        if not key.startswith(ENV_PREFIX):
            continue
        path = [p.lower() for p in key[len(ENV_PREFIX):].split("__") if p]
        if not path:
            continue
        try:
            value = yaml.safe_load(raw)
        except yaml.YAMLError:
            value = raw
        node = out
        for part in path[:-1]:
            node = node.setdefault(part, {})
        node[path[-1]] = value
    return out


def resolve_path(value: str) -> Path:
    """Resolve a config path, expanding the bundled-data prefix."""
    if isinstance(value, str) and value.startswith(BUNDLED_PREFIX):
        name = value[len(BUNDLED_PREFIX):]
        return Path(str(resources.files("stormlens").joinpath("data", name)))
    return Path(value)


@dataclass
class PipelineConfig:
    raw: dict

    def __getitem__(self, key):
        return self.raw[key]

    @property
    def seed(self) -> int:
        return int(self.raw["seed"])

    @property
    def output_dir(self) -> Path:
        return Path(self.raw["output_dir"])

    @property
    def partitions(self) -> list[str]:
        return list(self.raw["sentiment"]["partitions"])

    def digest(self) -> str:
        blob = json.dumps(self.raw, sort_keys=True, default=str).encode("utf-8")
        return hashlib.sha256(blob).hexdigest()


def _validate(raw: dict) -> list[str]:
    errors: list[str] = []

    def check(cond: bool, message: str) -> None:
        if not cond:
            errors.append(message)

    inp = raw["input"]
    check(bool(inp.get("corpus")), "input.corpus: a corpus path is required")
    check(inp.get("format") in ("csv", "jsonl"),
          f"input.format: expected csv or jsonl, got {inp.get('format')!r}")

    clean = raw["cleaning"]
    check(isinstance(clean.get("min_token_len"), int) and clean["min_token_len"] >= 1,
          "cleaning.min_token_len: must be an integer >= 1")

    sent = raw["sentiment"]
    check(isinstance(sent.get("threshold"), (int, float)) and sent["threshold"] > 0,
          "sentiment.threshold: must be a positive number")
    parts = sent.get("partitions") or []
    check(bool(parts), "sentiment.partitions: at least one partition is required")
    for p in parts:
        check(p in EMOTION_VALUES,
              f"sentiment.partitions: unknown label {p!r}")

    vec = raw["vectorize"]
    check(isinstance(vec.get("min_df"), int) and vec["min_df"] >= 1,
          "vectorize.min_df: must be an integer >= 1")
    check(isinstance(vec.get("max_df_ratio"), (int, float))
          and 0 < vec["max_df_ratio"] <= 1,
          "vectorize.max_df_ratio: must be in (0, 1]")

    top = raw["topics"]
    kv = top.get("k_values") or []
    check(bool(kv), "topics.k_values: at least one K is required")
    for k in kv:
        check(isinstance(k, int) and k >= 2, f"topics.k_values: K must be an integer >= 2, got {k!r}")
    check(isinstance(top.get("iterations"), int) and top["iterations"] >= 1,
          "topics.iterations: must be an integer >= 1")
    check(isinstance(top.get("sweep_iterations"), int) and top["sweep_iterations"] >= 1,
          "topics.sweep_iterations: must be an integer >= 1")
    if top.get("alpha") is not None:
        check(isinstance(top["alpha"], (int, float)) and top["alpha"] > 0,
              "topics.alpha: must be positive or null")
    check(isinstance(top.get("beta"), (int, float)) and top["beta"] > 0,
          "topics.beta: must be positive")
    if top.get("k_override") is not None:
        check(isinstance(top["k_override"], int) and top["k_override"] >= 2,
              "topics.k_override: must be an integer >= 2 or null")

    gr = raw["graph"]
    check(isinstance(gr.get("fallback_rank"), int) and gr["fallback_rank"] >= 1,
          "graph.fallback_rank: must be an integer >= 1")
    check(isinstance(gr.get("knn_k"), int) and gr["knn_k"] >= 1,
          "graph.knn_k: must be an integer >= 1")

    gnn = raw["gnn"]
    for key in ("hidden_dim", "out_dim", "epochs"):
        check(isinstance(gnn.get(key), int) and gnn[key] >= 1,
              f"gnn.{key}: must be an integer >= 1")
    check(isinstance(gnn.get("step_size"), (int, float)) and gnn["step_size"] > 0,
          "gnn.step_size: must be positive")
    check(isinstance(gnn.get("momentum"), (int, float)) and 0 <= gnn["momentum"] < 1,
          "gnn.momentum: must be in [0, 1)")

    clu = raw["cluster"]
    check(isinstance(clu.get("k_min"), int) and clu["k_min"] >= 2,
          "cluster.k_min: must be an integer >= 2")
    check(isinstance(clu.get("k_max"), int) and clu["k_max"] >= clu.get("k_min", 2),
          "cluster.k_max: must be an integer >= k_min")

    nm = raw["naming"]
    check(nm.get("policy") in ("fallback", "fail"),
          f"naming.policy: expected fallback or fail, got {nm.get('policy')!r}")
    check(isinstance(nm.get("timeout"), (int, float)) and nm["timeout"] > 0,
          "naming.timeout: must be positive")
    check(isinstance(nm.get("max_words"), int) and nm["max_words"] >= 1,
          "naming.max_words: must be an integer >= 1")

    check(isinstance(raw.get("seed"), int), "seed: must be an integer")
    check(bool(raw.get("output_dir")), "output_dir: required")
    return errors


def load_config(
    path: str | None = None,
    overrides: dict | None = None,
    environ=None,
) -> PipelineConfig:
    """Build the effective config: defaults <- file <- env <- CLI overrides.

    All validation problems are reported at once rather than one per run.
    """
    raw = DEFAULT_CONFIG
    if path is not None:
        file_path = Path(path)
        if not file_path.exists():
            raise ArtifactMissingError(f"config file not found: {path}")
        loaded = yaml.safe_load(file_path.read_text(encoding="utf-8"))
        if loaded is None:
            loaded = {}
        if not isinstance(loaded, dict):
            raise ConfigError(f"{path}: top level must be a mapping")
        unknown = set(loaded) - set(DEFAULT_CONFIG)
        if unknown:
            raise ConfigError(f"{path}: unknown config sections: {sorted(unknown)}")
        raw = _deep_merge(raw, loaded)
    raw = _deep_merge(raw, _env_overrides(environ))
    if overrides:
        raw = _deep_merge(raw, overrides)
    errors = _validate(raw)
    if errors:
        raise ConfigError("invalid configuration:\n  " + "\n  ".join(errors))
    return PipelineConfig(raw=raw)


def stage_seed(master_seed: int, stage: str, sentiment: str | None = None) -> int:
    """Distinct deterministic seed per (stage, partition) pair."""
    tag = f"{master_seed}|{stage}|{sentiment or ''}".encode("utf-8")
    return int.from_bytes(hashlib.sha256(tag).digest()[:4], "little")


# ---------------------------------------------------------------------------
# manifest
# ---------------------------------------------------------------------------


def _sha256_file(path: Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 16), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _atomic_write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    fd, tmp = tempfile.mkstemp(dir=path.parent, prefix=path.name, suffix=".tmp")
    try:
        with os.fdopen(fd, "w", encoding="utf-8") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


@dataclass
class RunManifest:
    path: Path
    data: dict = field(default_factory=dict)

    @classmethod
    def load_or_create(cls, out_dir: Path, config: PipelineConfig) -> "RunManifest":
        path = out_dir / "manifest.json"
        if path.exists():
            data = json.loads(path.read_text(encoding="utf-8"))
            if data.get("config_digest") != config.digest():
                log.warning("config changed since the last run; resetting manifest")
                data = {}
        else:
            data = {}
        if not data:
            data = {
                "config_digest": config.digest(),
                "seed": config.seed,
                "stages": {},
            }
        return cls(path=path, data=data)

    def record_stage(
        self,
        stage: str,
        artifacts: list[Path],
        out_dir: Path,
        started: float,
        notes: str = "",
    ) -> None:
        entry = {
            "artifacts": {
                str(p.relative_to(out_dir)): _sha256_file(p) for p in sorted(artifacts)
            },
            "status": "ok",
            "notes": notes,
            # wall-clock fields: informational only, never part of any digest
            "started_unix": round(started, 3),
            "elapsed_s": round(time.time() - started, 3),
        }
        self.data["stages"][stage] = entry
        self.save()

    def save(self) -> None:
        _atomic_write_text(
            self.path, json.dumps(self.data, indent=2, sort_keys=True) + "\n"
        )

    def completed(self, stage: str) -> bool:
        return self.data.get("stages", {}).get(stage, {}).get("status") == "ok"


# ---------------------------------------------------------------------------
# record serialization between stages
# ---------------------------------------------------------------------------


def _dump_records(records: list[TweetRecord], path: Path) -> None:
    lines = []
    for rec in records:
        lines.append(json.dumps({
            "id": rec.id,
            "text": rec.raw_text,
            "time": rec.timestamp.isoformat() if rec.timestamp else None,
            "tokens": rec.tokens,
            "emotion": rec.emotion,
        }, sort_keys=True))
    _atomic_write_text(path, "\n".join(lines) + "\n")


def _load_records(path: Path, needed_by: str) -> list[TweetRecord]:
    if not path.exists():
        raise ArtifactMissingError(
            f"{path} is missing; run the '{needed_by}' stage first"
        )
    from datetime import datetime

    records = []
    for line in path.read_text(encoding="utf-8").splitlines():
        if not line.strip():
            continue
        obj = json.loads(line)
        records.append(TweetRecord(
            id=obj["id"],
            raw_text=obj["text"],
            timestamp=datetime.fromisoformat(obj["time"]) if obj.get("time") else None,
            tokens=list(obj.get("tokens") or []),
            emotion=obj.get("emotion"),
        ))
    return records


def _require(path: Path, producer: str) -> Path:
    if not path.exists():
        raise ArtifactMissingError(
            f"{path} is missing; run the '{producer}' stage first"
        )
    return path


def _load_vocab_csv(path: Path, n_docs: int) -> Vocabulary:
    index_to_term: list[str] = []
    freqs: list[int] = []
    with open(path, newline="", encoding="utf-8") as fh:
        for row in csv.DictReader(fh):
            index_to_term.append(row["term"])
            freqs.append(int(row["doc_freq"]))
    return Vocabulary(
        term_to_index={t: i for i, t in enumerate(index_to_term)},
        index_to_term=index_to_term,
        doc_freq=np.array(freqs, dtype=np.int64),
        n_docs=n_docs,
    )


# ---------------------------------------------------------------------------
# the pipeline
# ---------------------------------------------------------------------------


class Pipeline:
    """Runs stages against one output directory.

    Construct it with a validated config; each run_* method is independent
    and fails with ArtifactMissingError when upstream outputs are absent.
    """

    def __init__(self, config: PipelineConfig, out_dir: Path | None = None):
        self.config = config
        self.out = Path(out_dir) if out_dir is not None else config.output_dir
        self.out.mkdir(parents=True, exist_ok=True)
        self.manifest = RunManifest.load_or_create(self.out, config)

    # -- helpers ---------------------------------------------------------

    def _partitions(self, only: str | None) -> list[str]:
        if only is None:
            return self.config.partitions
        if only not in self.config.partitions:
            raise ConfigError(
                f"sentiment {only!r} is not in the configured partitions "
                f"{self.config.partitions}"
            )
        return [only]

    def _partition_records(self, sentiment: str) -> list[TweetRecord]:
        records = _load_records(self.out / "emotions" / "labeled.jsonl", "emotions")
        return [r for r in records if r.emotion == sentiment]

    def _seed(self, stage: str, sentiment: str | None = None) -> int:
        return stage_seed(self.config.seed, stage, sentiment)

    def _skip_empty(self, stage: str, sentiment: str) -> bool:
        """Partitions with no records produce no artifacts in any stage."""
        if self._partition_records(sentiment):
            return False
        log.warning("%s: partition %r is empty, skipping", stage, sentiment)
        return True

    def _stage_dir(self, stage: str, sentiment: str | None = None) -> Path:
        d = self.out / stage if sentiment is None else self.out / stage / sentiment
        d.mkdir(parents=True, exist_ok=True)
        return d

    def _load_matrix(self, sentiment: str) -> tuple[SparseDocTermMatrix, Vocabulary, list[TweetRecord]]:
        records = self._partition_records(sentiment)
        vec_dir = self.out / "vectorize" / sentiment
        matrix_path = _require(vec_dir / "matrix.csv", "vectorize")
        vocab_path = _require(vec_dir / "vocab.csv", "vectorize")
        vocab = _load_vocab_csv(vocab_path, n_docs=len(records))
        matrix = SparseDocTermMatrix.load_csv(
            matrix_path, shape=(len(records), len(vocab)), kind="tfidf"
        )
        return matrix, vocab, records

    def _load_refined(self, sentiment: str) -> graphs.EmbeddingMatrix:
        path = _require(self.out / "gnn-train" / sentiment / "refined.csv", "gnn-train")
        return graphs.load_embeddings(str(path))

    # -- stages ----------------------------------------------------------

    def run_clean(self) -> list[Path]:
        cfg = self.config.raw
        inp = cfg["input"]
        column_map = {
            "text": inp["text_column"],
            "id": inp["id_column"],
            "time": inp["time_column"],
            "emotion": inp["emotion_column"],
        }
        corpus_path = resolve_path(inp["corpus"])
        if not corpus_path.exists():
            raise ArtifactMissingError(f"corpus file not found: {corpus_path}")
        result = load_corpus(
            corpus_path, format=inp["format"], column_map=column_map,
            strict=inp["strict"],
        )
        if result.skips:
            log.info("skipped %d malformed rows", len(result.skips))
        clean_cfg = CleaningConfig(
            strip_urls=cfg["cleaning"]["strip_urls"],
            lowercase=cfg["cleaning"]["lowercase"],
            min_token_len=cfg["cleaning"]["min_token_len"],
            stemmer_enabled=cfg["cleaning"]["stemmer"],
        )
        stop_files = [resolve_path(p) for p in cfg["stopwords"]["files"]]
        for p in stop_files:
            if not p.exists():
                raise ArtifactMissingError(f"stopword file not found: {p}")
        stops = StopwordSet.from_files(stop_files, extra=cfg["stopwords"]["domain"])
        apply_cleaning(result.records, clean_cfg, stops)
        out_path = self._stage_dir("clean") / "tweets.jsonl"
        _dump_records(result.records, out_path)
        log.info("clean: %d records", len(result.records))
        return [out_path]

    def run_emotions(self) -> list[Path]:
        records = _load_records(self.out / "clean" / "tweets.jsonl", "clean")
        cfg = self.config.raw
        labels_path = cfg["input"]["labels"]
        lexicon = None
        if cfg["sentiment"]["lexicon"]:
            lexicon = ValenceLexicon.from_csv(
                resolve_path(cfg["sentiment"]["lexicon"]),
                threshold=cfg["sentiment"]["threshold"],
            )
        else:
            lexicon = ValenceLexicon.bundled(threshold=cfg["sentiment"]["threshold"])
        report = apply_labels(
            records,
            labels_path=resolve_path(labels_path) if labels_path else None,
            lexicon=lexicon,
        )
        if report.unmatched_record_ids:
            log.info(
                "%d records had no external label and used the lexicon",
                len(report.unmatched_record_ids),
            )
        stage_dir = self._stage_dir("emotions")
        labeled = stage_dir / "labeled.jsonl"
        _dump_records(records, labeled)

        dist = emotion_distribution(records)
        dist_path = stage_dir / "distribution.csv"
        lines = ["emotion,count"]
        lines.extend(f"{label},{dist[label]}" for label in EMOTION_VALUES)
        _atomic_write_text(dist_path, "\n".join(lines) + "\n")

        top_path = stage_dir / "top_words.csv"
        top = top_words_by_sentiment(records, n=20, ranking="frequency")
        rows = ["emotion,rank,term,count"]
        for label in EMOTION_VALUES:
            for rank, (term, count) in enumerate(top.get(label, [])):
                rows.append(f"{label},{rank},{term},{count}")
        _atomic_write_text(top_path, "\n".join(rows) + "\n")
        log.info("emotions: %s", dist)
        return [labeled, dist_path, top_path]

    def run_vectorize(self, sentiment: str | None = None) -> list[Path]:
        cfg = self.config.raw["vectorize"]
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            records = self._partition_records(part)
            if not records:
                log.warning("vectorize: partition %r is empty, skipping", part)
                continue
            docs = [r.tokens for r in records]
            vocab = build_vocabulary(
                docs, min_df=cfg["min_df"], max_df_ratio=cfg["max_df_ratio"]
            )
            matrix = tfidf_matrix(docs, vocab, smooth_idf=cfg["smooth_idf"])
            stage_dir = self._stage_dir("vectorize", part)
            matrix_path = stage_dir / "matrix.csv"
            vocab_path = stage_dir / "vocab.csv"
            matrix.save_csv(matrix_path, vocab=vocab, vocab_path=vocab_path)
            log.info("vectorize[%s]: %d docs, %d terms", part, len(docs), len(vocab))
            artifacts.extend([matrix_path, vocab_path])
        return artifacts

    def _term_id_docs(
        self, records: list[TweetRecord], vocab: Vocabulary
    ) -> tuple[list[np.ndarray], list[int]]:
        """Per-doc term-id arrays plus the indices of docs that kept tokens."""
        ids = docs_as_term_ids([r.tokens for r in records], vocab)
        keep = [i for i, d in enumerate(ids) if len(d)]
        return ids, keep

    def run_lda_sweep(self, sentiment: str | None = None) -> list[Path]:
        cfg = self.config.raw["topics"]
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            if self._skip_empty("lda-sweep", part):
                continue
            matrix, vocab, records = self._load_matrix(part)
            ids, keep = self._term_id_docs(records, vocab)
            fit_docs = [ids[i] for i in keep]
            report = topics.coherence_sweep(
                fit_docs,
                cfg["k_values"],
                alpha=cfg["alpha"],
                beta=cfg["beta"],
                iterations=cfg["sweep_iterations"],
                seed=self._seed("lda-sweep", part),
                top_n=cfg["top_n"],
            )
            selected = topics.elbow_select(report, override=cfg["k_override"])
            stage_dir = self._stage_dir("lda-sweep", part)
            curve_path = stage_dir / "coherence.csv"
            report.save_csv(curve_path)
            sel_path = stage_dir / "selection.json"
            _atomic_write_text(sel_path, json.dumps({
                "selected_k": selected,
                "rule": report.selection_rule,
                "k_values": report.k_values,
                "scores": report.scores,
            }, indent=2, sort_keys=True) + "\n")
            log.info("lda-sweep[%s]: selected K=%d (%s)", part, selected,
                     report.selection_rule)
            artifacts.extend([curve_path, sel_path])
        return artifacts

    def run_lda_fit(self, sentiment: str | None = None) -> list[Path]:
        cfg = self.config.raw["topics"]
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            if self._skip_empty("lda-fit", part):
                continue
            matrix, vocab, records = self._load_matrix(part)
            sel_path = _require(
                self.out / "lda-sweep" / part / "selection.json", "lda-sweep"
            )
            selected = json.loads(sel_path.read_text(encoding="utf-8"))["selected_k"]
            ids, keep = self._term_id_docs(records, vocab)
            fit_docs = [ids[i] for i in keep]
            model = topics.lda_fit(
                fit_docs,
                len(vocab),
                selected,
                alpha=cfg["alpha"],
                beta=cfg["beta"],
                iterations=cfg["iterations"],
                seed=self._seed("lda-fit", part),
            )
            stage_dir = self._stage_dir("lda-fit", part)
            assign_path = stage_dir / "assignments.csv"
            model.save_assignments(assign_path)
            terms_path = stage_dir / "top_terms.csv"
            topics.save_top_terms_csv(model, vocab, terms_path, n=cfg["top_n"])
            fit_path = stage_dir / "fit.json"
            _atomic_write_text(fit_path, json.dumps({
                "k": model.n_topics,
                "alpha": model.alpha,
                "beta": model.beta,
                "iterations": model.iterations,
                "docs_fit": len(fit_docs),
                "docs_dropped": len(ids) - len(fit_docs),
                "perplexity": model.perplexity_history,
            }, indent=2, sort_keys=True) + "\n")
            log.info("lda-fit[%s]: K=%d on %d docs", part, selected, len(fit_docs))
            artifacts.extend([assign_path, terms_path, fit_path])
        return artifacts

    def run_graph(self, sentiment: str | None = None) -> list[Path]:
        cfg = self.config.raw["graph"]
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            if self._skip_empty("graph", part):
                continue
            matrix, vocab, records = self._load_matrix(part)
            if cfg["embeddings"]:
                emb = graphs.load_embeddings(str(resolve_path(cfg["embeddings"])))
                if emb.n_rows != len(records):
                    raise StageError(
                        f"external embeddings have {emb.n_rows} rows but the "
                        f"{part} partition has {len(records)} documents"
                    )
            else:
                emb = graphs.fallback_embeddings(
                    matrix,
                    rank=cfg["fallback_rank"],
                    seed=self._seed("graph", part),
                )
            emb.ids = [r.id for r in records]
            graph = graphs.build_knn_graph(emb, k=cfg["knn_k"])
            stage_dir = self._stage_dir("graph", part)
            emb_path = stage_dir / "embeddings.csv"
            graphs.save_embeddings_csv(emb, emb_path)
            edge_path = stage_dir / "edges.csv"
            graph.save_csv(edge_path)
            log.info("graph[%s]: %d nodes, %d edges (%s embeddings)",
                     part, graph.n_nodes, len(graph.edges), emb.source)
            artifacts.extend([emb_path, edge_path])
        return artifacts

    def run_gnn_train(self, sentiment: str | None = None) -> list[Path]:
        cfg = self.config.raw["gnn"]
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            if self._skip_empty("gnn-train", part):
                continue
            gdir = self.out / "graph" / part
            emb = graphs.load_embeddings(str(_require(gdir / "embeddings.csv", "graph")))
            graph = graphs.SimilarityGraph.load_csv(
                str(_require(gdir / "edges.csv", "graph")), n_nodes=emb.n_rows
            )
            result = graphs.gae_train(
                graph,
                emb.values,
                hidden_dim=cfg["hidden_dim"],
                out_dim=cfg["out_dim"],
                epochs=cfg["epochs"],
                step_size=cfg["step_size"],
                momentum=cfg["momentum"],
                seed=self._seed("gnn-train", part),
            )
            refined = graphs.EmbeddingMatrix(
                result.embeddings, source="fallback", ids=emb.ids
            )
            stage_dir = self._stage_dir("gnn-train", part)
            refined_path = stage_dir / "refined.csv"
            graphs.save_embeddings_csv(refined, refined_path)
            train_path = stage_dir / "train.json"
            _atomic_write_text(train_path, json.dumps({
                "epochs": cfg["epochs"],
                "loss_first": result.loss_history[0],
                "loss_last": result.loss_history[-1],
                "loss_history": result.loss_history,
            }, indent=2, sort_keys=True) + "\n")
            log.info("gnn-train[%s]: loss %.4f -> %.4f", part,
                     result.loss_history[0], result.loss_history[-1])
            artifacts.extend([refined_path, train_path])
        return artifacts

    def run_cluster(self, sentiment: str | None = None) -> list[Path]:
        cfg = self.config.raw["cluster"]
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            if self._skip_empty("cluster", part):
                continue
            refined = self._load_refined(part)
            n = refined.n_rows
            k_hi = min(cfg["k_max"], n - 1)
            ks = [k for k in range(cfg["k_min"], k_hi + 1)]
            if not ks:
                raise StageError(
                    f"partition {part!r} has {n} documents, too few to sweep "
                    f"k in [{cfg['k_min']}, {cfg['k_max']}]"
                )
            sweep = cl.sweep_k(refined.values, ks, seed=self._seed("cluster", part))
            ids = refined.ids or [str(i) for i in range(n)]
            stage_dir = self._stage_dir("cluster", part)
            assign_path = stage_dir / "assignments.csv"
            cl.save_assignments_csv(ids, sweep.best_labels, assign_path)
            sweep_path = stage_dir / "sweep.json"
            _atomic_write_text(sweep_path, json.dumps({
                "k_values": sweep.k_values,
                "scores": sweep.scores,
                "best_k": sweep.best_k,
            }, indent=2, sort_keys=True) + "\n")
            log.info("cluster[%s]: best k=%d", part, sweep.best_k)
            artifacts.extend([assign_path, sweep_path])
        return artifacts

    def run_compare(self, sentiment: str | None = None) -> list[Path]:
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            if self._skip_empty("compare", part):
                continue
            refined = self._load_refined(part)
            matrix, vocab, records = self._load_matrix(part)
            graph = graphs.SimilarityGraph.load_csv(
                str(_require(self.out / "graph" / part / "edges.csv", "graph")),
                n_nodes=refined.n_rows,
            )
            sweep_path = _require(
                self.out / "cluster" / part / "sweep.json", "cluster"
            )
            best_k = json.loads(sweep_path.read_text(encoding="utf-8"))["best_k"]
            rows = cl.compare_algorithms(
                refined.values,
                matrix,
                graph,
                best_k,
                seed=self._seed("compare", part),
            )
            stage_dir = self._stage_dir("compare", part)
            out_path = stage_dir / "comparison.csv"
            cl.save_comparison_csv(rows, out_path)
            log.info("compare[%s]: %d algorithms", part, len(rows))
            artifacts.append(out_path)
        return artifacts

    def run_name(self, sentiment: str | None = None) -> list[Path]:
        cfg = self.config.raw["naming"]
        naming_config = naming.NamingConfig(
            endpoint=cfg["endpoint"],
            timeout=cfg["timeout"],
            auth_token=cfg["auth_token"],
            policy=cfg["policy"],
            template=cfg["template"] or naming.DEFAULT_TEMPLATE,
            max_words=cfg["max_words"],
            n_terms=cfg["n_terms"],
            n_representatives=cfg["n_representatives"],
        )
        artifacts: list[Path] = []
        for part in self._partitions(sentiment):
            if self._skip_empty("name", part):
                continue
            refined = self._load_refined(part)
            matrix, vocab, records = self._load_matrix(part)
            assign_path = _require(
                self.out / "cluster" / part / "assignments.csv", "cluster"
            )
            labels_by_id: dict[str, int] = {}
            with open(assign_path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    labels_by_id[row["id"]] = int(row["cluster"])
            labels = np.array([labels_by_id[r.id] for r in records], dtype=np.int64)
            contexts = naming.build_cluster_contexts(
                labels,
                matrix,
                vocab,
                refined.values,
                [r.raw_text for r in records],
                n_terms=naming_config.n_terms,
                n_representatives=naming_config.n_representatives,
            )
            names = naming.name_all_clusters(contexts, naming_config)
            stage_dir = self._stage_dir("name", part)
            md_path = stage_dir / "names.md"
            naming.save_naming_markdown(names, md_path)
            json_path = stage_dir / "names.json"
            _atomic_write_text(json_path, json.dumps([
                {
                    "cluster": e.cluster,
                    "name": e.name,
                    "provenance": e.provenance,
                    "top_terms": e.top_terms,
                }
                for e in names
            ], indent=2, sort_keys=True) + "\n")
            log.info("name[%s]: %d clusters named", part, len(names))
            artifacts.extend([md_path, json_path])
        return artifacts

    def run_report(self) -> list[Path]:
        """Assemble the run summary; missing stages become a gaps section."""
        lines = ["# Storm event analysis report", ""]
        gaps: list[str] = []

        dist_path = self.out / "emotions" / "distribution.csv"
        lines.append("## Corpus")
        if (self.out / "clean" / "tweets.jsonl").exists():
            n = sum(
                1 for line in
                (self.out / "clean" / "tweets.jsonl").read_text(encoding="utf-8").splitlines()
                if line.strip()
            )
            lines.extend([f"- documents after cleaning: {n}", ""])
        else:
            gaps.append("clean")
            lines.extend(["- not available", ""])

        lines.append("## Sentiment distribution")
        if dist_path.exists():
            lines.append("")
            lines.append("| emotion | count |")
            lines.append("| --- | --- |")
            with open(dist_path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    lines.append(f"| {row['emotion']} | {row['count']} |")
            lines.append("")
        else:
            gaps.append("emotions")
            lines.extend(["- not available", ""])

        lines.append("## Topics")
        for part in self.config.partitions:
            sel_path = self.out / "lda-sweep" / part / "selection.json"
            terms_path = self.out / "lda-fit" / part / "top_terms.csv"
            if not sel_path.exists():
                gaps.append(f"lda-sweep[{part}]")
                continue
            sel = json.loads(sel_path.read_text(encoding="utf-8"))
            lines.append(f"### {part}")
            lines.append(f"- selected topic count: {sel['selected_k']} ({sel['rule']})")
            if terms_path.exists():
                by_topic: dict[str, list[str]] = {}
                with open(terms_path, newline="", encoding="utf-8") as fh:
                    for row in csv.DictReader(fh):
                        by_topic.setdefault(row["topic"], []).append(row["term"])
                for topic_id in sorted(by_topic, key=int):
                    lines.append(
                        f"- topic {topic_id}: {', '.join(by_topic[topic_id][:10])}"
                    )
            else:
                gaps.append(f"lda-fit[{part}]")
            lines.append("")

        lines.append("## Clustering")
        for part in self.config.partitions:
            sweep_path = self.out / "cluster" / part / "sweep.json"
            if not sweep_path.exists():
                gaps.append(f"cluster[{part}]")
                continue
            sweep = json.loads(sweep_path.read_text(encoding="utf-8"))
            best = sweep["best_k"]
            idx = sweep["k_values"].index(best)
            lines.append(
                f"- {part}: k={best}, mean silhouette {sweep['scores'][idx]:.4f}"
            )
        lines.append("")

        lines.append("## Algorithm comparison")
        for part in self.config.partitions:
            cmp_path = self.out / "compare" / part / "comparison.csv"
            if not cmp_path.exists():
                gaps.append(f"compare[{part}]")
                continue
            lines.append(f"### {part}")
            lines.append("")
            lines.append("| algorithm | median silhouette | k | notes |")
            lines.append("| --- | --- | --- | --- |")
            with open(cmp_path, newline="", encoding="utf-8") as fh:
                for row in csv.DictReader(fh):
                    sil = row["median_silhouette"]
                    sil = f"{float(sil):.4f}" if sil else "-"
                    lines.append(
                        f"| {row['algorithm']} | {sil} | {row['k'] or '-'} "
                        f"| {row['notes']} |"
                    )
            lines.append("")

        lines.append("## Event names")
        for part in self.config.partitions:
            names_path = self.out / "name" / part / "names.json"
            if not names_path.exists():
                gaps.append(f"name[{part}]")
                continue
            lines.append(f"### {part}")
            for entry in json.loads(names_path.read_text(encoding="utf-8")):
                lines.append(
                    f"- cluster {entry['cluster']}: {entry['name']} "
                    f"({entry['provenance']})"
                )
            lines.append("")

        if gaps:
            lines.append("## Gaps")
            lines.append("The following stages have not produced artifacts yet:")
            lines.extend(f"- {g}" for g in gaps)
            lines.append("")

        report_path = self.out / "report.md"
        _atomic_write_text(report_path, "\n".join(lines) + "\n")
        log.info("report: %s (%d gaps)", report_path, len(gaps))
        return [report_path]

    # -- driver ----------------------------------------------------------

    def run_stage(self, stage: str, sentiment: str | None = None) -> list[Path]:
        runners = {
            "clean": lambda: self.run_clean(),
            "emotions": lambda: self.run_emotions(),
            "vectorize": lambda: self.run_vectorize(sentiment),
            "lda-sweep": lambda: self.run_lda_sweep(sentiment),
            "lda-fit": lambda: self.run_lda_fit(sentiment),
            "graph": lambda: self.run_graph(sentiment),
            "gnn-train": lambda: self.run_gnn_train(sentiment),
            "cluster": lambda: self.run_cluster(sentiment),
            "compare": lambda: self.run_compare(sentiment),
            "name": lambda: self.run_name(sentiment),
            "report": lambda: self.run_report(),
        }
        if stage not in runners:
            raise ConfigError(f"unknown stage: {stage!r}")
        started = time.time()
        artifacts = runners[stage]()
        self.manifest.record_stage(stage, artifacts, self.out, started)
        return artifacts

    def run_all(self, sentiment: str | None = None) -> None:
        for stage in STAGE_ORDER:
            self.run_stage(stage, sentiment=sentiment)

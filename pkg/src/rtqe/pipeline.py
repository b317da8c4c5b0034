"""Staged evaluation runs driven by one declarative config file.

A run walks ingest, roundtrip, embed, score, correlate, report in order,
persisting every stage's output under the run directory. Each stage
records the config hash it ran under; re-runs reuse any stage whose
recorded hash still matches, whose outputs still exist, and whose
upstream stages were not recomputed, so deleting one output recomputes
only that stage and everything after it.
"""
from __future__ import annotations

import json
import re
from dataclasses import asdict, dataclass, field
from datetime import datetime, timezone
from pathlib import Path

import yaml

from . import analysis
from .analysis import failure_flags, group_distribution
from .dataset import QEDataset, load_qe_tsv, serialize_qe_tsv
from .embeddings import (
    EmbeddingBackend,
    EmbeddingVector,
    MissingEmbedding,
    ZeroVector,
    cosine_similarity,
    embed_batch,
    load_embedding_store,
    save_embedding_store,
)
from .errors import ConfigError, DataError, RtqeError
from .metrics import (
    DEFAULT_BLEU,
    DEFAULT_CHRF,
    chrf,
    metric_config_hashes,
    sentence_bleu,
    ter,
    tf_cosine,
)
from .roundtrip import MTClient, TranslationCache, round_trip
from .textprep import tokenize
from .util import canonical_hash, sentence_key

STAGE_INGEST = "ingest"
STAGE_ROUNDTRIP = "roundtrip"
STAGE_EMBED = "embed"
STAGE_SCORE = "score"
STAGE_CORRELATE = "correlate"
STAGE_REPORT = "report"

STAGES = (
    STAGE_INGEST,
    STAGE_ROUNDTRIP,
    STAGE_EMBED,
    STAGE_SCORE,
    STAGE_CORRELATE,
    STAGE_REPORT,
)

LEXICAL_METRICS = ("bleu", "chrf", "ter", "tf_cosine")
EMBED_METRIC_PREFIX = "embed_cosine:"

STATUS_COMPUTED = "computed"
STATUS_REUSED = "reused"
STATUS_SKIPPED = "skipped"
STATUS_FAILED = "failed"

_ROUNDTRIPS_HEADER = "record_id\tback_translation\tsource"
_SCORES_HEADER = "record_id\tmetric_id\tvalue"
_FLAGS_HEADER = "record_id\tfailed_forward\tcode_switched"


def embed_metric_models(metrics) -> list[str]:
    """Model ids named by enabled embed_cosine metrics, in metric order."""
    return [m[len(EMBED_METRIC_PREFIX):] for m in metrics if m.startswith(EMBED_METRIC_PREFIX)]


@dataclass(frozen=True)
class PipelineConfig:
    dataset_path: str
    source_lang: str
    target_lang: str
    output_dir: str
    metrics: tuple[str, ...]
    mt_client: MTClient = MTClient(kind="identity")
    backends: tuple[EmbeddingBackend, ...] = ()
    mt_cache_path: str | None = None
    ingest_mode: str = "strict"

    def validate(self) -> None:
        if not self.metrics:
            raise ConfigError("no metrics enabled")
        backend_models = [b.model_id for b in self.backends]
        if len(set(backend_models)) != len(backend_models):
            raise ConfigError("duplicate model_id among embedding backends")
        for m in self.metrics:
            if m in LEXICAL_METRICS:
                continue
            if m.startswith(EMBED_METRIC_PREFIX):
                model_id = m[len(EMBED_METRIC_PREFIX):]
                if model_id not in backend_models:
                    raise ConfigError(
                        f"metric {m!r} has no embedding backend for model {model_id!r}"
                    )
                continue
            valid = ", ".join(LEXICAL_METRICS + (EMBED_METRIC_PREFIX + "<model_id>",))
            raise ConfigError(f"unknown metric {m!r}; valid metrics: {valid}")
        if len(set(self.metrics)) != len(self.metrics):
            raise ConfigError("duplicate metric in config")
        if self.ingest_mode not in ("strict", "lenient"):
            raise ConfigError(f"ingest_mode must be strict or lenient, not {self.ingest_mode!r}")

    def config_hash(self) -> str:
        return canonical_hash(asdict(self))


def _require(obj: dict, key: str, context: str):
    if key not in obj:
        raise ConfigError(f"{context}: missing required key {key!r}")
    return obj[key]


def _resolve(base: Path, path: str) -> str:
    p = Path(path)
    return str(p if p.is_absolute() else base / p)


def _build_mt_client(obj: dict, base: Path) -> MTClient:
    kind = _require(obj, "kind", "mt_client")
    kwargs = {k: obj[k] for k in
              ("locator", "batch_size", "max_retries", "max_in_flight", "backoff_base")
              if k in obj}
    unknown = set(obj) - {"kind", "locator", "batch_size", "max_retries",
                          "max_in_flight", "backoff_base"}
    if unknown:
        raise ConfigError(f"mt_client: unknown keys {sorted(unknown)}")
    if kind == "file" and "locator" in kwargs:
        kwargs["locator"] = _resolve(base, kwargs["locator"])
    try:
        return MTClient(kind=kind, **kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"mt_client: {exc}") from exc


def _build_backend(obj: dict, base: Path) -> EmbeddingBackend:
    kind = _require(obj, "kind", "embeddings entry")
    model_id = _require(obj, "model_id", "embeddings entry")
    locator = _require(obj, "locator", "embeddings entry")
    unknown = set(obj) - {"kind", "model_id", "locator", "batch_size", "max_in_flight"}
    if unknown:
        raise ConfigError(f"embeddings entry: unknown keys {sorted(unknown)}")
    if kind == "file":
        locator = _resolve(base, locator)
    kwargs = {k: obj[k] for k in ("batch_size", "max_in_flight") if k in obj}
    try:
        return EmbeddingBackend(kind=kind, model_id=model_id, locator=locator, **kwargs)
    except (ValueError, TypeError) as exc:
        raise ConfigError(f"embeddings entry for {model_id!r}: {exc}") from exc


def load_config(path) -> PipelineConfig:
    """Parse a YAML run config, resolving relative paths against its directory."""
    cfg_path = Path(path)
    try:
        raw = cfg_path.read_text(encoding="utf-8")
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from exc
    try:
        obj = yaml.safe_load(raw)
    except yaml.YAMLError as exc:
        raise ConfigError(f"{path}: invalid YAML: {exc}") from exc
    if not isinstance(obj, dict):
        raise ConfigError(f"{path}: config must be a mapping")

    known = {"dataset", "mt_client", "embeddings", "metrics", "output_dir", "mt_cache"}
    unknown = set(obj) - known
    if unknown:
        raise ConfigError(f"{path}: unknown keys {sorted(unknown)}")

    base = cfg_path.parent
    dataset = _require(obj, "dataset", str(path))
    if not isinstance(dataset, dict):
        raise ConfigError("dataset: must be a mapping")
    ds_unknown = set(dataset) - {"path", "source_lang", "target_lang", "mode"}
    if ds_unknown:
        raise ConfigError(f"dataset: unknown keys {sorted(ds_unknown)}")

    metrics = _require(obj, "metrics", str(path))
    if not isinstance(metrics, list) or not all(isinstance(m, str) for m in metrics):
        raise ConfigError("metrics: must be a list of metric names")

    backends = []
    for entry in obj.get("embeddings", []) or []:
        if not isinstance(entry, dict):
            raise ConfigError("embeddings: every entry must be a mapping")
        backends.append(_build_backend(entry, base))

    mt_obj = obj.get("mt_client", {"kind": "identity"})
    if not isinstance(mt_obj, dict):
        raise ConfigError("mt_client: must be a mapping")

    cache = obj.get("mt_cache")
    cfg = PipelineConfig(
        dataset_path=_resolve(base, str(_require(dataset, "path", "dataset"))),
        source_lang=str(_require(dataset, "source_lang", "dataset")),
        target_lang=str(_require(dataset, "target_lang", "dataset")),
        output_dir=_resolve(base, str(_require(obj, "output_dir", str(path)))),
        metrics=tuple(metrics),
        mt_client=_build_mt_client(mt_obj, base),
        backends=tuple(backends),
        mt_cache_path=_resolve(base, cache) if cache else None,
        ingest_mode=dataset.get("mode", "strict"),
    )
    cfg.validate()
    return cfg


@dataclass(frozen=True)
class RunManifest:
    """One run's record of what executed, what was reused, and what it wrote."""

    config_hash: str
    started_at: str
    finished_at: str
    stages: dict[str, dict]
    warnings: tuple[str, ...]
    metric_configs: dict[str, str]
    completed: bool

    def to_json(self) -> str:
        payload = {
            "config_hash": self.config_hash,
            "started_at": self.started_at,
            "finished_at": self.finished_at,
            "stages": self.stages,
            "warnings": list(self.warnings),
            "metric_configs": self.metric_configs,
            "completed": self.completed,
        }
        return json.dumps(payload, indent=2, sort_keys=True) + "\n"


@dataclass
class _StageResult:
    outputs: list[str]
    records: int
    warnings: list[str] = field(default_factory=list)


def _now() -> str:
    return datetime.now(timezone.utc).isoformat(timespec="seconds")


def _write_text(path: Path, text: str) -> None:
    path.parent.mkdir(parents=True, exist_ok=True)
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(text)


def _sanitize_cell(text: str) -> tuple[str, bool]:
    if "\t" in text or "\n" in text or "\r" in text:
        return re.sub(r"[\t\n\r]+", " ", text), True
    return text, False


def _model_file(model_id: str) -> str:
    return re.sub(r"[^A-Za-z0-9._-]", "_", model_id) + ".jsonl"


def _load_records(cfg: PipelineConfig, out: Path) -> QEDataset:
    ds, _ = load_qe_tsv(out / "records.tsv", cfg.source_lang, cfg.target_lang)
    return ds


def _read_roundtrips(out: Path) -> dict[int, str]:
    back: dict[int, str] = {}
    with open(out / "roundtrips.tsv", "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if lineno == 1 and line == _ROUNDTRIPS_HEADER:
                continue
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"roundtrips.tsv line {lineno}: expected 3 fields")
            back[int(parts[0])] = parts[1]
    return back


def _read_score_columns(out: Path, metrics, n: int) -> dict[str, list[float | None]]:
    columns: dict[str, list[float | None]] = {m: [None] * n for m in metrics}
    with open(out / "scores.tsv", "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if lineno == 1 and line == _SCORES_HEADER:
                continue
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"scores.tsv line {lineno}: expected 3 fields")
            record_id, metric_id, value = int(parts[0]), parts[1], float(parts[2])
            if metric_id in columns and 0 <= record_id < n:
                columns[metric_id][record_id] = value
    return columns


def _read_flags(out: Path) -> list[tuple[int, bool, bool]]:
    rows = []
    with open(out / "flags.tsv", "r", encoding="utf-8") as fh:
        for lineno, raw in enumerate(fh, start=1):
            line = raw.rstrip("\n")
            if lineno == 1 and line == _FLAGS_HEADER:
                continue
            if not line:
                continue
            parts = line.split("\t")
            if len(parts) != 3:
                raise DataError(f"flags.tsv line {lineno}: expected 3 fields")
            rows.append((int(parts[0]), parts[1] == "true", parts[2] == "true"))
    return rows


def _stage_ingest(cfg: PipelineConfig, out: Path, transports) -> _StageResult:
    ds, report = load_qe_tsv(
        cfg.dataset_path, cfg.source_lang, cfg.target_lang, cfg.ingest_mode
    )
    if len(ds) == 0:
        raise DataError(f"{cfg.dataset_path}: no valid records")
    _write_text(out / "records.tsv", serialize_qe_tsv(ds))
    _write_text(out / "ingest_report.txt", report.to_text())
    warnings = []
    if report.rejected_count:
        warnings.append(f"ingest: rejected {report.rejected_count} malformed rows")
    return _StageResult(["records.tsv", "ingest_report.txt"], len(ds), warnings)


def _stage_roundtrip(cfg: PipelineConfig, out: Path, transports) -> _StageResult:
    ds = _load_records(cfg, out)
    cache = TranslationCache(cfg.mt_cache_path)
    results = round_trip(cfg.mt_client, ds, cache, transports.get("mt"))

    warnings = []
    sanitized = 0
    empty = sum(1 for r in results if not r.back_translation)
    lines = [_ROUNDTRIPS_HEADER]
    for r in results:
        text, changed = _sanitize_cell(r.back_translation)
        sanitized += changed
        lines.append(f"{r.record_id}\t{text}\t{r.source}")
    _write_text(out / "roundtrips.tsv", "\n".join(lines) + "\n")
    if empty:
        warnings.append(f"roundtrip: {empty} empty back-translations")
    if sanitized:
        warnings.append(
            f"roundtrip: control characters replaced in {sanitized} back-translations"
        )
    return _StageResult(["roundtrips.tsv"], len(results), warnings)


def _stage_embed(cfg: PipelineConfig, out: Path, transports) -> _StageResult:
    models = embed_metric_models(cfg.metrics)
    if not models:
        return _StageResult([], 0, [])
    ds = _load_records(cfg, out)
    back = _read_roundtrips(out)
    sentences = list(
        dict.fromkeys(
            [r.original for r in ds.records] + [back[r.id] for r in ds.records]
        )
    )
    sentences = [s for s in sentences if s]

    backends = {b.model_id: b for b in cfg.backends}
    outputs = []
    for model_id in models:
        vectors = embed_batch(backends[model_id], sentences, transports.get("embed"))
        store = {sentence_key(text): vec for text, vec in zip(sentences, vectors)}
        rel = str(Path("embeddings") / _model_file(model_id))
        save_path = out / rel
        save_path.parent.mkdir(parents=True, exist_ok=True)
        save_embedding_store(save_path, store)
        outputs.append(rel)
    return _StageResult(outputs, len(sentences), [])


def _score_lexical(metric_id: str, original: str, back: str):
    if metric_id == "bleu":
        return sentence_bleu(tokenize(back, "simple"), tokenize(original, "simple"), DEFAULT_BLEU)
    if metric_id == "chrf":
        return chrf(back, original, DEFAULT_CHRF)
    if metric_id == "ter":
        return ter(tokenize(back, "simple"), tokenize(original, "simple"))
    if metric_id == "tf_cosine":
        return tf_cosine(original, back)
    raise ValueError(f"not a lexical metric: {metric_id!r}")


def _stage_score(cfg: PipelineConfig, out: Path, transports) -> _StageResult:
    ds = _load_records(cfg, out)
    back = _read_roundtrips(out)
    stores: dict[str, dict[str, EmbeddingVector]] = {}
    for model_id in embed_metric_models(cfg.metrics):
        stores[model_id] = load_embedding_store(
            out / "embeddings" / _model_file(model_id)
        )

    warning_counts: dict[str, int] = {}

    def count(tag: str) -> None:
        warning_counts[tag] = warning_counts.get(tag, 0) + 1

    score_lines = [_SCORES_HEADER]
    flag_lines = [_FLAGS_HEADER]
    for record in ds.records:
        bt = back[record.id]
        for metric_id in cfg.metrics:
            if metric_id in LEXICAL_METRICS:
                score = _score_lexical(metric_id, record.original, bt)
                for w in score.warnings:
                    count(f"{metric_id}:{w}")
                value = score.value
            else:
                model_id = metric_id[len(EMBED_METRIC_PREFIX):]
                store = stores[model_id]
                pair = []
                for text in (record.original, bt):
                    key = sentence_key(text)
                    if key not in store:
                        raise MissingEmbedding(key)
                    pair.append(store[key])
                try:
                    value = cosine_similarity(pair[0], pair[1], record.id).value
                except ZeroVector:
                    count(f"{metric_id}:zero_vector")
                    value = 0.0
            score_lines.append(f"{record.id}\t{metric_id}\t{value!r}")

        flags = failure_flags(record.id, record.original, record.translation)
        flag_lines.append(
            f"{record.id}"
            f"\t{'true' if flags.failed_forward else 'false'}"
            f"\t{'true' if flags.code_switched else 'false'}"
        )

    _write_text(out / "scores.tsv", "\n".join(score_lines) + "\n")
    _write_text(out / "flags.tsv", "\n".join(flag_lines) + "\n")
    warnings = [
        f"score: {tag} on {n} records" for tag, n in sorted(warning_counts.items())
    ]
    return _StageResult(["scores.tsv", "flags.tsv"], len(ds), warnings)


def _stage_correlate(cfg: PipelineConfig, out: Path, transports) -> _StageResult:
    ds = _load_records(cfg, out)
    columns = _read_score_columns(out, cfg.metrics, len(ds))
    report = analysis.correlate(ds, columns)
    _write_text(out / "correlations.json", report.to_json())
    _write_text(out / "correlations.tsv", report.to_tsv())
    undefined = sum(1 for v in report.per_metric.values() if v is None)
    warnings = []
    if undefined:
        warnings.append(f"correlate: {undefined} metrics with undefined correlation")
    return _StageResult(["correlations.json", "correlations.tsv"], report.n, warnings)


def _fmt(value: float | None, digits: int = 6) -> str:
    return "n/a" if value is None else f"{value:.{digits}f}"


def _stage_report(cfg: PipelineConfig, out: Path, transports) -> _StageResult:
    ds = _load_records(cfg, out)
    flags = _read_flags(out)
    with open(out / "correlations.json", "r", encoding="utf-8") as fh:
        corr = json.load(fh)

    failed = {record_id: ff for record_id, ff, _ in flags}
    switched = {record_id: cs for record_id, _, cs in flags}
    z_means = [r.z_mean for r in ds.records]
    failed_flags = [failed.get(r.id, False) for r in ds.records]
    dist = group_distribution(z_means, failed_flags)
    _write_text(out / "plot_failed_forward.csv", dist.to_csv())

    lines = [
        "quality estimation run",
        "======================",
        "",
        f"language pair: {cfg.source_lang}-{cfg.target_lang}",
        f"records: {len(ds)}",
        "",
        f"correlation with human z-mean (n = {corr['n']}):",
    ]
    for metric_id in cfg.metrics:
        r = corr["per_metric"].get(metric_id)
        mark = _fmt(r) if r is not None else "n/a (undefined)"
        excluded = corr["excluded"].get(metric_id, 0)
        suffix = f"  [{excluded} records excluded]" if excluded else ""
        lines.append(f"  {metric_id}: {mark}{suffix}")

    lines += [
        "",
        "failure flags:",
        f"  failed_forward: {sum(failed.values())} of {len(flags)}",
        f"  code_switched: {sum(switched.values())} of {len(flags)}",
        "",
        "human z-mean by failed_forward flag:",
    ]
    for name, g in (("flagged", dist.flagged), ("unflagged", dist.unflagged)):
        if g.count == 0:
            lines.append(f"  {name}: count 0")
            continue
        lines.append(
            f"  {name}: count {g.count}, mean {_fmt(g.mean)}, std {_fmt(g.std)}, "
            f"quartiles {_fmt(g.q1)} / {_fmt(g.median)} / {_fmt(g.q3)}"
        )
    lines += [
        "",
        "full correlation matrix: correlations.tsv",
        "histogram plot data: plot_failed_forward.csv",
        "",
    ]
    _write_text(out / "report.txt", "\n".join(lines))
    return _StageResult(["plot_failed_forward.csv", "report.txt"], len(ds), [])


_STAGE_RUNNERS = {
    STAGE_INGEST: _stage_ingest,
    STAGE_ROUNDTRIP: _stage_roundtrip,
    STAGE_EMBED: _stage_embed,
    STAGE_SCORE: _stage_score,
    STAGE_CORRELATE: _stage_correlate,
    STAGE_REPORT: _stage_report,
}


def _check_inputs_exist(cfg: PipelineConfig) -> None:
    if not Path(cfg.dataset_path).is_file():
        raise ConfigError(f"dataset file not found: {cfg.dataset_path}")
    if cfg.mt_client.kind == "file" and not Path(cfg.mt_client.locator).is_file():
        raise ConfigError(f"translation store not found: {cfg.mt_client.locator}")
    for backend in cfg.backends:
        if backend.kind == "file" and not Path(backend.locator).is_file():
            raise ConfigError(f"embedding store not found: {backend.locator}")


class _StageState:
    """Per-stage completion markers under <output_dir>/.stages."""

    def __init__(self, out: Path, config_hash: str):
        self.dir = out / ".stages"
        self.out = out
        self.config_hash = config_hash

    def load_valid(self, stage: str) -> dict | None:
        path = self.dir / f"{stage}.json"
        if not path.is_file():
            return None
        try:
            state = json.loads(path.read_text(encoding="utf-8"))
        except (OSError, json.JSONDecodeError):
            return None
        if state.get("config_hash") != self.config_hash:
            return None
        if not all((self.out / rel).is_file() for rel in state.get("outputs", [])):
            return None
        return state

    def mark(self, stage: str, result: _StageResult) -> None:
        self.dir.mkdir(parents=True, exist_ok=True)
        state = {
            "config_hash": self.config_hash,
            "outputs": result.outputs,
            "records": result.records,
            "warnings": result.warnings,
        }
        _write_text(self.dir / f"{stage}.json",
                    json.dumps(state, indent=2, sort_keys=True) + "\n")


def run_pipeline(
    cfg: PipelineConfig,
    through: str = STAGE_REPORT,
    mt_transport=None,
    embed_transport=None,
) -> RunManifest:
    """Execute pipeline stages up to and including `through`.

    Stage outputs land in cfg.output_dir. Valid prior outputs are reused;
    a stage that does run invalidates everything after it. The manifest is
    written to manifest.json exactly once, also when a stage fails, in
    which case the failing stage is recorded and the error re-raised.
    """
    if through not in STAGES:
        raise ConfigError(f"unknown stage {through!r}")
    cfg.validate()
    _check_inputs_exist(cfg)
    out = Path(cfg.output_dir)
    try:
        out.mkdir(parents=True, exist_ok=True)
        probe = out / ".writable"
        probe.touch()
        probe.unlink()
    except OSError as exc:
        raise ConfigError(f"output directory not writable: {out}: {exc}") from exc

    transports = {"mt": mt_transport, "embed": embed_transport}
    config_hash = cfg.config_hash()
    state = _StageState(out, config_hash)
    started = _now()
    stages: dict[str, dict] = {}
    warnings: list[str] = []
    upstream_fresh = False
    error: RtqeError | None = None

    for stage in STAGES[: STAGES.index(through) + 1]:
        if stage == STAGE_EMBED and not embed_metric_models(cfg.metrics):
            stages[stage] = {"status": STATUS_SKIPPED, "records": 0, "outputs": []}
            continue
        prior = None if upstream_fresh else state.load_valid(stage)
        if prior is not None:
            stages[stage] = {
                "status": STATUS_REUSED,
                "records": prior["records"],
                "outputs": prior["outputs"],
            }
            warnings.extend(prior.get("warnings", []))
            continue
        try:
            result = _STAGE_RUNNERS[stage](cfg, out, transports)
        except RtqeError as exc:
            stages[stage] = {"status": STATUS_FAILED, "error": str(exc)}
            error = exc
            break
        state.mark(stage, result)
        stages[stage] = {
            "status": STATUS_COMPUTED,
            "records": result.records,
            "outputs": result.outputs,
        }
        warnings.extend(result.warnings)
        upstream_fresh = True

    manifest = RunManifest(
        config_hash=config_hash,
        started_at=started,
        finished_at=_now(),
        stages=stages,
        warnings=tuple(warnings),
        metric_configs=metric_config_hashes(),
        completed=error is None,
    )
    _write_text(out / "manifest.json", manifest.to_json())
    if error is not None:
        raise error
    return manifest

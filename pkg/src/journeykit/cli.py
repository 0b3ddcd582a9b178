"""Command-line entry points for the desk-scale experiments.

Subcommands: gen, extract, train-cooc, eval-e2, stats-e1, name,
compare-naming. Every command is deterministic given its inputs, config,
and seeds. Exit codes: 0 success, 1 usage error, 2 data error, 3 backend
error.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

from . import baselines, io
from .concepts import Item, UserHistory, aggregate
from .evaluation import EvalReport, build_report, mix_playlists
from .extraction import ExtractionResult, ExtractorConfig, extract_journeys
from .naming import (
    BackendError,
    JourneyText,
    NamingRequest,
    OfflineBackend,
    PromptTemplate,
    RemoteBackend,
    compare_naming_modes,
    load_exemplars,
    name_journey,
)
from .synth import SynthSpec, generate, save_corpus

TOKEN_ENV_VAR = "JOURNEYKIT_TOKEN"

EXIT_OK = 0
EXIT_USAGE = 1
EXIT_DATA = 2
EXIT_BACKEND = 3


class UsageError(Exception):
    pass


@dataclass
class CoocSettings:
    dim: int = 16
    k: int = 50
    iters: int = 20
    seed: int = 0


@dataclass
class MultimodalSettings:
    eps_dist: float | None = None  # None -> median pairwise distance default
    merge_conflicts: int = 3
    sample_seed: int = 0


@dataclass
class NamingSettings:
    endpoint: str | None = None
    template: str = "natural_titles"
    max_items: int | None = None
    exemplars: str | None = None


@dataclass
class IoSettings:
    items: str | None = None
    histories: str | None = None
    playlists: str | None = None


@dataclass
class Config:
    epsilon: float = 0.1
    min_cluster_size: int = 1
    cooc: CoocSettings = field(default_factory=CoocSettings)
    multimodal: MultimodalSettings = field(default_factory=MultimodalSettings)
    naming: NamingSettings = field(default_factory=NamingSettings)
    io: IoSettings = field(default_factory=IoSettings)
    workers: int = 1


def _merge_section(cls, record: dict, path: str):
    known = set(cls.__dataclass_fields__)
    unknown = set(record) - known
    if unknown:
        raise UsageError(f"{path}: unknown config key(s) {sorted(unknown)}")
    return cls(**record)


def load_config(path: str | None) -> Config:
    if path is None:
        return Config()
    try:
        with open(path, encoding="utf-8") as handle:
            record = json.load(handle)
    except FileNotFoundError as exc:
        raise UsageError(f"config file not found: {path}") from exc
    except json.JSONDecodeError as exc:
        raise UsageError(f"{path}: malformed config JSON ({exc.msg})") from exc
    if not isinstance(record, dict):
        raise UsageError(f"{path}: config must be a JSON object")
    known = set(Config.__dataclass_fields__)
    unknown = set(record) - known
    if unknown:
        raise UsageError(f"{path}: unknown config key(s) {sorted(unknown)}")
    sections = {
        "cooc": CoocSettings,
        "multimodal": MultimodalSettings,
        "naming": NamingSettings,
        "io": IoSettings,
    }
    kwargs = {}
    for key, value in record.items():
        if key in sections:
            if not isinstance(value, dict):
                raise UsageError(f"{path}: config section {key!r} must be an object")
            kwargs[key] = _merge_section(sections[key], value, path)
        else:
            kwargs[key] = value
    return Config(**kwargs)


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # argparse would exit(2); we reserve 2 for data errors
        raise UsageError(message)


def _extractor_config(cfg: Config, args) -> ExtractorConfig:
    epsilon = cfg.epsilon if args.epsilon is None else args.epsilon
    min_size = cfg.min_cluster_size if args.min_cluster_size is None else args.min_cluster_size
    try:
        return ExtractorConfig(epsilon=epsilon, min_cluster_size=min_size)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _load_items(path: str | None, cfg: Config) -> dict[str, Item]:
    resolved = path or cfg.io.items
    if not resolved:
        raise UsageError("an items file is required (--items or config io.items)")
    return io.read_items(resolved)


def _run_extraction(
    method: str,
    histories: list[UserHistory],
    items: dict[str, Item],
    cfg: Config,
    ex_cfg: ExtractorConfig,
    assignment=None,
) -> list[ExtractionResult]:
    if method == "icpc":
        runner = lambda h: extract_journeys(h, ex_cfg)
    elif method == "cooc":
        if assignment is None:
            raise UsageError(
                "--method cooc needs a trained assignment (--assignment; see train-cooc)"
            )
        runner = lambda h: baselines.cooc_extract(h, assignment, ex_cfg.min_cluster_size)
    elif method == "multimodal":
        pool = [it for it in items.values() if it.dense is not None]
        missing = len(items) - len(pool)
        if missing:
            raise io.DataError(
                f"--method multimodal needs dense embeddings; {missing} item(s) have none"
            )
        eps = cfg.multimodal.eps_dist
        if eps is None:
            eps = baselines.default_eps_dist(pool, seed=cfg.multimodal.sample_seed)
        runner = lambda h: baselines.multimodal_extract(
            h.items,
            eps_dist=eps,
            merge_conflicts=cfg.multimodal.merge_conflicts,
            min_cluster_size=ex_cfg.min_cluster_size,
            user_id=h.user_id,
        )
    else:
        raise UsageError(f"unknown method {method!r}")

    if cfg.workers > 1:
        with ThreadPoolExecutor(max_workers=cfg.workers) as pool_:
            results = list(pool_.map(runner, histories))
    else:
        results = [runner(h) for h in histories]
    return results


def cmd_gen(args) -> int:
    try:
        with open(args.spec, encoding="utf-8") as handle:
            record = json.load(handle)
    except json.JSONDecodeError as exc:
        raise io.DataError(f"{args.spec}: malformed JSON ({exc.msg})") from exc
    try:
        spec = SynthSpec.from_dict(record)
    except (TypeError, ValueError) as exc:
        raise io.DataError(f"{args.spec}: {exc}") from exc
    corpus = generate(spec)
    save_corpus(corpus, args.out_dir)
    print(
        f"wrote {len(corpus.items)} items, {len(corpus.playlists)} playlists, "
        f"{len(corpus.histories)} histories to {args.out_dir}"
    )
    return EXIT_OK


def cmd_extract(args) -> int:
    cfg = load_config(args.config)
    ex_cfg = _extractor_config(cfg, args)
    items = _load_items(args.items, cfg)
    histories = io.read_histories(args.infile, items)
    assignment = io.read_assignment(args.assignment) if args.assignment else None
    if args.method == "cooc" and assignment is None:
        raise UsageError(
            "--method cooc needs a trained assignment (--assignment; see train-cooc)"
        )
    results = _run_extraction(args.method, histories, items, cfg, ex_cfg, assignment)
    io.write_journeys(args.out, results)
    cold = sum(r.cold_items for r in results)
    if cold:
        print(f"warning: {cold} cold item(s) not covered by the assignment", file=sys.stderr)
    return EXIT_OK


def cmd_train_cooc(args) -> int:
    cfg = load_config(args.config)
    items = _load_items(args.items, cfg)
    histories = io.read_histories(args.infile, items)
    matrix = baselines.build_cooccurrence(histories)
    if not matrix.ids:
        raise io.DataError("no items seen in the histories; nothing to train on")
    dim = args.dim if args.dim is not None else cfg.cooc.dim
    k = args.k if args.k is not None else cfg.cooc.k
    iters = args.iters if args.iters is not None else cfg.cooc.iters
    seed = args.seed if args.seed is not None else cfg.cooc.seed
    try:
        embeddings = baselines.factorize(matrix, dim=dim, iters=iters, seed=seed)
        assignment = baselines.kmeans(embeddings, k=k, seed=seed)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    io.write_assignment(args.out, assignment)
    print(f"trained {assignment.K}-cluster assignment over {len(assignment.assignment)} items")
    return EXIT_OK


def _format_table(report: EvalReport) -> str:
    rows = [
        ("method", report.method),
        ("mean_recall", _fmt(report.mean_recall)),
        ("mean_precision", _fmt(report.mean_precision)),
        ("total_journeys", str(report.total_journeys)),
        ("clusters_per_journey", _fmt(report.clusters_per_journey)),
        ("journeys_per_user", _fmt(report.journeys_per_user)),
        ("singleton_fraction", _fmt(report.singleton_fraction)),
        (
            "items_per_journey",
            "min={min:g} median={median:g} mean={mean:.2f} max={max:g}".format(
                **report.items_per_journey
            ),
        ),
    ]
    width = max(len(name) for name, _ in rows)
    return "\n".join(f"{name:<{width}}  {value}" for name, value in rows)


def _fmt(value: float | None) -> str:
    return "-" if value is None else f"{value:.4f}"


def _emit_report(report: EvalReport, out: str | None) -> None:
    payload = json.dumps(report.to_dict(), ensure_ascii=False, separators=(",", ":"))
    if out:
        Path(out).write_text(payload + "\n", encoding="utf-8")
    print(_format_table(report))


def cmd_eval_e2(args) -> int:
    cfg = load_config(args.config)
    ex_cfg = _extractor_config(cfg, args)
    items = _load_items(args.items, cfg)
    playlist_records = io.read_playlists(args.playlists)
    if len(playlist_records) < args.per_user:
        raise io.DataError(
            f"need at least {args.per_user} playlists, got {len(playlist_records)}"
        )
    pool = []
    for playlist in playlist_records:
        resolved = []
        for item_id in playlist.item_ids:
            item = items.get(item_id)
            if item is None:
                raise io.DataError(f"playlist {playlist.playlist_id!r}: unknown item {item_id!r}")
            resolved.append(item)
        pool.append((playlist.playlist_id, resolved))
    try:
        instances = mix_playlists(pool, per_user=args.per_user, seed=args.seed)
    except ValueError as exc:
        raise io.DataError(str(exc)) from exc

    histories = [inst.mixed_history for inst in instances]
    assignment = None
    if args.method == "cooc":
        matrix = baselines.build_cooccurrence(histories)
        embeddings = baselines.factorize(
            matrix, dim=cfg.cooc.dim, iters=cfg.cooc.iters, seed=cfg.cooc.seed
        )
        assignment = baselines.kmeans(embeddings, k=cfg.cooc.k, seed=cfg.cooc.seed)
    results = _run_extraction(args.method, histories, items, cfg, ex_cfg, assignment)
    report = build_report(
        args.method, [(inst.golden, res) for inst, res in zip(instances, results)]
    )
    _emit_report(report, args.out)
    return EXIT_OK


def cmd_stats_e1(args) -> int:
    cfg = load_config(args.config)
    ex_cfg = _extractor_config(cfg, args)
    items = _load_items(args.items, cfg)
    histories = io.read_histories(args.infile, items)
    if not histories:
        raise io.DataError(f"{args.infile}: no histories to analyze")
    assignment = io.read_assignment(args.assignment) if args.assignment else None
    if args.method == "cooc" and assignment is None:
        raise UsageError(
            "--method cooc needs a trained assignment (--assignment; see train-cooc)"
        )
    results = _run_extraction(args.method, histories, items, cfg, ex_cfg, assignment)
    from .evaluation import granularity_stats

    report = granularity_stats(results, min_size=args.min_size, method=args.method)
    _emit_report(report, args.out)
    return EXIT_OK


def _build_template(cfg: Config, args) -> PromptTemplate:
    kind = args.template if getattr(args, "template", None) else cfg.naming.template
    max_items = args.max_items if getattr(args, "max_items", None) else cfg.naming.max_items
    exemplar_path = (
        args.exemplars if getattr(args, "exemplars", None) else cfg.naming.exemplars
    )
    exemplars = []
    if exemplar_path:
        try:
            exemplars = load_exemplars(exemplar_path)
        except (OSError, ValueError) as exc:
            raise io.DataError(str(exc)) from exc
    try:
        return PromptTemplate(kind=kind, max_items=max_items, exemplars=exemplars)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc


def _build_backend(cfg: Config, args):
    if args.backend == "offline":
        return OfflineBackend()
    endpoint = args.endpoint or cfg.naming.endpoint
    if not endpoint:
        raise UsageError("remote backend needs an endpoint (--endpoint or config naming.endpoint)")
    return RemoteBackend(endpoint, auth_token=os.environ.get(TOKEN_ENV_VAR))


def cmd_name(args) -> int:
    cfg = load_config(args.config)
    items = _load_items(args.items, cfg)
    records = io.read_journeys(args.infile)
    template = _build_template(cfg, args)
    backend = _build_backend(cfg, args)

    def name_one(journey: dict):
        member_items = []
        for item_id in journey["item_ids"]:
            item = items.get(str(item_id))
            if item is None:
                raise io.DataError(f"unknown item id {item_id!r} in {args.infile}")
            member_items.append(item)
        text = JourneyText(
            titles=[it.title for it in member_items],
            representation=aggregate(it.concepts for it in member_items),
        )
        return name_journey(NamingRequest(text, template), backend)

    had_backend_error = False
    out_records = []
    for record in records:
        named = []
        journeys = record["journeys"]
        if cfg.workers > 1 and args.backend == "remote":
            with ThreadPoolExecutor(max_workers=cfg.workers) as pool:
                futures = [pool.submit(name_one, j) for j in journeys]
                outcomes = []
                for future in futures:
                    try:
                        outcomes.append(future.result())
                    except BackendError as exc:
                        outcomes.append(exc)
        else:
            outcomes = []
            for journey in journeys:
                try:
                    outcomes.append(name_one(journey))
                except BackendError as exc:
                    outcomes.append(exc)
        for journey, outcome in zip(journeys, outcomes):
            if isinstance(outcome, BackendError):
                had_backend_error = True
                named.append({"idx": journey["idx"], "name": None, "error": str(outcome)})
            else:
                named.append({"idx": journey["idx"], "name": outcome.name})
        out_records.append(
            {"user_id": record["user_id"], "journeys": named, "backend": backend.tag}
        )
    with open(args.out, "w", encoding="utf-8") as handle:
        for record in out_records:
            handle.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
    if had_backend_error:
        print("warning: one or more journeys failed to name", file=sys.stderr)
        return EXIT_BACKEND
    return EXIT_OK


def cmd_compare_naming(args) -> int:
    cfg = load_config(args.config)
    ex_cfg = _extractor_config(cfg, args)
    items = _load_items(args.items, cfg)
    histories = io.read_histories(args.infile, items)
    template = _build_template(cfg, args)
    backend = _build_backend(cfg, args)
    extractor = lambda h: extract_journeys(h, ex_cfg)
    out_records = []
    partial = False
    for history in histories:
        report = compare_naming_modes(history, extractor, template, backend)
        modes = {
            "whole_history": report.whole_history,
            "concatenated_groups": report.concatenated_groups,
            "per_journey": report.per_journey,
        }
        partial = partial or report.per_journey.partial
        out_records.append(
            {
                "user_id": history.user_id,
                "modes": {
                    label: {
                        "names": mode.names,
                        "score": mode.score,
                        "calls": mode.calls,
                        "partial": mode.partial,
                        "errors": mode.errors,
                    }
                    for label, mode in modes.items()
                },
            }
        )
    with open(args.out, "w", encoding="utf-8") as handle:
        for record in out_records:
            handle.write(json.dumps(record, ensure_ascii=False, separators=(",", ":")) + "\n")
    return EXIT_BACKEND if partial else EXIT_OK


def build_parser() -> _Parser:
    parser = _Parser(prog="journeykit", description=__doc__)
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--config", help="JSON config file; flags override it")
        p.add_argument("--epsilon", type=float, default=None, help="similarity threshold")
        p.add_argument("--min-cluster-size", dest="min_cluster_size", type=int, default=None)

    p = sub.add_parser("gen", help="generate a synthetic corpus")
    p.add_argument("--spec", required=True, help="SynthSpec JSON file")
    p.add_argument("--out-dir", required=True)
    p.set_defaults(func=cmd_gen)

    p = sub.add_parser("extract", help="extract journeys from histories")
    common(p)
    p.add_argument("--method", required=True, choices=("icpc", "cooc", "multimodal"))
    p.add_argument("--in", dest="infile", required=True, help="histories.jsonl")
    p.add_argument("--items", help="items.jsonl")
    p.add_argument("--out", required=True, help="journeys.jsonl")
    p.add_argument("--assignment", help="trained assignment JSON (cooc)")
    p.set_defaults(func=cmd_extract)

    p = sub.add_parser("train-cooc", help="train the co-occurrence cluster assignment")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="histories.jsonl")
    p.add_argument("--items", help="items.jsonl")
    p.add_argument("--out", required=True, help="assignment JSON")
    p.add_argument("--dim", type=int, default=None)
    p.add_argument("--k", type=int, default=None)
    p.add_argument("--iters", type=int, default=None)
    p.add_argument("--seed", type=int, default=None)
    p.set_defaults(func=cmd_train_cooc)

    p = sub.add_parser("eval-e2", help="mixed-playlist extraction benchmark")
    common(p)
    p.add_argument("--playlists", required=True, help="playlists.jsonl")
    p.add_argument("--items", help="items.jsonl")
    p.add_argument("--method", required=True, choices=("icpc", "cooc", "multimodal"))
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("--per-user", dest="per_user", type=int, default=2)
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_eval_e2)

    p = sub.add_parser("stats-e1", help="granularity statistics over histories")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="histories.jsonl")
    p.add_argument("--items", help="items.jsonl")
    p.add_argument("--min-size", dest="min_size", type=int, default=2)
    p.add_argument("--method", default="icpc", choices=("icpc", "cooc", "multimodal"))
    p.add_argument("--assignment", help="trained assignment JSON (cooc)")
    p.add_argument("--out", help="write the report JSON here")
    p.set_defaults(func=cmd_stats_e1)

    def naming_common(p):
        p.add_argument("--backend", required=True, choices=("offline", "remote"))
        p.add_argument("--endpoint", help="remote completion endpoint URL")
        p.add_argument("--template", choices=("natural_titles", "structured_titles", "structured_keywords", "structured_titles_keywords"))
        p.add_argument("--max-items", dest="max_items", type=int)
        p.add_argument("--exemplars", help="few-shot exemplar JSONL")

    p = sub.add_parser("name", help="name extracted journeys")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="journeys.jsonl")
    p.add_argument("--items", help="items.jsonl")
    p.add_argument("--out", required=True, help="names.jsonl")
    naming_common(p)
    p.set_defaults(func=cmd_name)

    p = sub.add_parser("compare-naming", help="score whole-history vs grouped vs per-journey naming")
    common(p)
    p.add_argument("--in", dest="infile", required=True, help="histories.jsonl")
    p.add_argument("--items", help="items.jsonl")
    p.add_argument("--out", required=True, help="results JSONL")
    naming_common(p)
    p.set_defaults(func=cmd_compare_naming)

    return parser


def main(argv=None) -> int:
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        return args.func(args)
    except UsageError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_USAGE
    except io.DataError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except FileNotFoundError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except ValueError as exc:
        print(f"data error: {exc}", file=sys.stderr)
        return EXIT_DATA
    except BackendError as exc:
        print(f"backend error: {exc}", file=sys.stderr)
        return EXIT_BACKEND


if __name__ == "__main__":
    sys.exit(main())

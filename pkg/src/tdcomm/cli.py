"""Command-line pipeline: synth, ingest, build, detect, analyze, report, run.

Exit codes: 0 success, 1 usage error, 2 data error.
"""

from __future__ import annotations

import argparse
import json
import logging
import sys
from collections import Counter
from dataclasses import asdict, dataclass, field, fields
from datetime import date, timedelta
from pathlib import Path

import numpy as np

from . import __version__, formats, plotting
from .ingest import (
    PostFormatError,
    Stoplist,
    apply_stoplist,
    bin_by_day,
    default_stoplist_text,
    parse_utc_offset,
    read_posts,
    write_posts_jsonl,
)
from .mapeq import OptimizeConfig, codelength, optimize
from .synth import PlantedSpec, generate_planted, write_truth_tsv
from .tdnet import build_network, degree_distribution, graph_stats, validate_block_structure
from .temporal import (
    TopicMap,
    build_timelines,
    community_user_ratio,
    count_communities,
    coverage_top_k,
    cumulative_size_curve,
    frame_ratio_analysis,
    hashtag_usage,
    label_topics,
    lifespan_distribution,
    rank_communities,
)

logger = logging.getLogger("tdcomm")

USAGE_ERROR = 1
DATA_ERROR = 2

# RunConfig keys that never change data files
VOLATILE = ("threads", "workdir")


@dataclass
class RunConfig:
    start: str = "2015-05-11"
    end: str = "2015-10-18"
    utc_offset: str = "+00:00"
    input_format: str | None = None
    stoplist: str | None = None
    query_keywords: list[str] = field(default_factory=lambda: ["expo2015"])
    mode: str = "binary"
    max_group: int | None = None
    seed: int = 0
    trials: int = 10
    tolerance: float = 1e-10
    max_sweeps: int = 100
    size_floor: int = 3
    frames: list[int] = field(default_factory=lambda: [2, 4, 8, 16, 32, 64, 128])
    topic_map: str | None = None
    top_k: int | None = None
    coverage: float = 0.5
    lifespan_mode: str = "span"
    clustering_sample: int | None = None
    threads: int = 1
    workdir: str = "tdcomm-out"

    def stable(self) -> dict:
        return {k: v for k, v in asdict(self).items() if k not in VOLATILE}

    def optimizer(self) -> OptimizeConfig:
        return OptimizeConfig(self.trials, self.seed, self.max_sweeps, self.tolerance)

    def meta(self, **extra) -> dict:
        return formats.make_meta(self.stable(), **extra)


class UsageError(Exception):
    pass


class DataError(Exception):
    pass


class Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(USAGE_ERROR, f"{self.prog}: error: {message}\n")


def _csv_ints(text: str) -> list[int]:
    return [int(x) for x in text.split(",") if x.strip()]


def _add_config_flags(p: argparse.ArgumentParser, groups: set[str]) -> None:
    p.add_argument("--config", help="JSON config file; explicit flags override it")
    p.add_argument("--workdir", "-o", help="directory holding pipeline files")
    p.add_argument("--threads", type=int, help="worker cap; outputs do not depend on it")
    p.add_argument("-v", "--verbose", action="store_true")
    if "ingest" in groups:
        p.add_argument("--start", help="first day of the window (YYYY-MM-DD)")
        p.add_argument("--end", help="last day of the window, inclusive")
        p.add_argument("--utc-offset", help="fixed offset for day boundaries, e.g. +02:00")
        p.add_argument("--format", dest="input_format", choices=["jsonl", "csv"])
        p.add_argument("--stoplist", help="stoplist file (default: built-in 11 generic hashtags)")
        p.add_argument("--query-keyword", dest="query_keywords", action="append",
                       help="query keyword removed from every post (repeatable; default expo2015)")
        p.add_argument("--keep-query-keywords", action="store_true", help="do not remove query keywords")
    if "build" in groups:
        p.add_argument("--mode", choices=["binary", "weighted"])
        p.add_argument("--max-group", type=int, help="cap on users per (day, hashtag) clique")
        p.add_argument("--clustering-sample", type=int, help="estimate clustering on this many nodes")
    if "detect" in groups:
        p.add_argument("--seed", type=int)
        p.add_argument("--trials", type=int)
        p.add_argument("--tolerance", type=float)
        p.add_argument("--max-sweeps", type=int)
    if "analyze" in groups:
        p.add_argument("--size-floor", type=int)
        p.add_argument("--frames", type=_csv_ints, help="comma-separated frame lengths in days")
        p.add_argument("--topic-map", help="JSON topic map (default: bundled example)")
        p.add_argument("--top-k", type=int, help="communities in the evolution figure")
        p.add_argument("--coverage", type=float, help="user coverage that picks top-k (default 0.5)")
        p.add_argument("--lifespan-mode", choices=["span", "active"])


def load_config(args: argparse.Namespace) -> RunConfig:
    cfg = RunConfig()
    names = {f.name for f in fields(RunConfig)}
    if getattr(args, "config", None):
        try:
            with open(args.config, encoding="utf-8") as fh:
                data = json.load(fh)
        except OSError as exc:
            raise DataError(f"cannot read config: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise UsageError(f"config is not valid JSON: {exc}") from exc
        unknown = set(data) - names
        if unknown:
            raise UsageError(f"unknown config keys: {sorted(unknown)}")
        for k, v in data.items():
            setattr(cfg, k, v)
    for k in names:
        v = getattr(args, k, None)
        if v is not None:
            setattr(cfg, k, v)
    if getattr(args, "keep_query_keywords", False):
        cfg.query_keywords = []
    return cfg


def _workdir(cfg: RunConfig) -> Path:
    return formats.ensure_dir(cfg.workdir)


def _need(path: Path) -> Path:
    if not path.exists():
        raise DataError(f"missing input file: {path}")
    return path


# stages --------------------------------------------------------------------

def cmd_synth(args) -> int:
    spec = PlantedSpec(
        n_communities=args.communities,
        users_per_community=args.users,
        n_days=args.days,
        pool_size=args.pool,
        activity=args.activity,
        posts_per_day=args.posts_per_day,
        cross_talk=args.cross_talk,
        lifespan=args.lifespan,
        start_date=date.fromisoformat(args.start_date),
        seed=args.seed,
    )
    records, truth = generate_planted(spec)
    out = Path(args.out)
    out.parent.mkdir(parents=True, exist_ok=True)
    with open(out, "w", encoding="utf-8", newline="\n") as fh:
        write_posts_jsonl(records, fh)
    if args.truth:
        Path(args.truth).parent.mkdir(parents=True, exist_ok=True)
        spec_dict = {k: str(v) if isinstance(v, date) else v for k, v in asdict(spec).items()}
        with open(args.truth, "w", encoding="utf-8", newline="\n") as fh:
            fh.write(formats.meta_line(formats.make_meta(spec_dict)))
            write_truth_tsv(truth, fh)
    logger.info("wrote %d posts to %s", len(records), out)
    return 0


def cmd_ingest(args, cfg: RunConfig) -> int:
    wd = _workdir(cfg)
    try:
        parsed = read_posts(args.input, cfg.input_format)
    except OSError as exc:
        raise DataError(f"cannot read {args.input}: {exc}") from exc
    if cfg.stoplist:
        try:
            stoplist = Stoplist.from_file(cfg.stoplist, cfg.query_keywords)
        except OSError as exc:
            raise DataError(f"cannot read stoplist: {exc}") from exc
    else:
        stoplist = Stoplist.from_lines(default_stoplist_text().splitlines(), cfg.query_keywords)
    kept, dropped = apply_stoplist(parsed.records, stoplist)
    try:
        start, end = date.fromisoformat(cfg.start), date.fromisoformat(cfg.end)
        offset = parse_utc_offset(cfg.utc_offset)
    except ValueError as exc:
        raise UsageError(str(exc)) from exc
    if start > end:
        raise UsageError(f"inverted window: {start} > {end}")
    binning, per_day = bin_by_day(kept, start, end, offset)
    retained = sum(len(d) for d in per_day)
    meta = cfg.meta(n_days=binning.n_days, day0=binning.epoch_day0.isoformat())
    formats.write_records(per_day, wd / "records.jsonl", meta)
    report = {
        "records_read": len(parsed.records),
        "records_malformed": parsed.skipped,
        "dropped_empty_after_stoplist": dropped,
        "dropped_outside_window": len(kept) - retained,
        "records_kept": retained,
        "n_days": binning.n_days,
        "stoplist": sorted(stoplist.all),
    }
    formats.write_json(wd / "ingest_report.json", report, meta)
    logger.info("ingest: kept %d of %d records", retained, len(parsed.records))
    return 0


def _load_records(cfg: RunConfig):
    path = _need(Path(cfg.workdir) / "records.jsonl")
    try:
        return formats.read_records(path)
    except (ValueError, KeyError) as exc:
        raise DataError(f"{path}: {exc}") from exc


def _build(cfg: RunConfig):
    rmeta, per_day = _load_records(cfg)
    g = build_network(per_day, mode=cfg.mode, max_group=cfg.max_group, threads=cfg.threads)
    report = validate_block_structure(g)
    if not report.ok:
        raise DataError(str(report))
    return rmeta, per_day, g


def cmd_build(args, cfg: RunConfig) -> int:
    wd = _workdir(cfg)
    rmeta, _, g = _build(cfg)
    meta = cfg.meta(n_days=g.n_days, day0=rmeta.get("day0"))
    formats.write_graph(g, wd / "graph.tsv", meta)
    sample = (cfg.clustering_sample, cfg.seed) if cfg.clustering_sample else None
    formats.write_json(wd / "stats.json", graph_stats(g, sample), meta)
    logger.info("build: %d nodes, %d edges", g.n_nodes, g.n_edges)
    return 0


def cmd_detect(args, cfg: RunConfig) -> int:
    wd = _workdir(cfg)
    rmeta, _, g = _build(cfg)
    meta = cfg.meta(n_days=g.n_days, day0=rmeta.get("day0"))
    formats.write_graph(g, wd / "graph.tsv", meta)
    opt = cfg.optimizer()
    if g.n_edges == 0:
        logger.warning("network has no edges; every node is its own community")
        labels = np.arange(g.n_nodes)
        result = {"L": 0.0, "index_term": 0.0, "module_term": 0.0, "n_modules": g.n_nodes}
    else:
        res = optimize(g, opt, threads=cfg.threads)
        labels = res.partition.labels
        result = {
            "L": res.codelength.L,
            "index_term": res.codelength.index_term,
            "module_term": res.codelength.module_term,
            "n_modules": res.partition.n_modules,
            "best_trial": res.trial,
        }
    result.update(n_trials=opt.n_trials, seed=opt.seed)
    formats.write_partition(g, rank_communities(labels), wd / "partition.tsv", meta)
    formats.write_json(wd / "codelength.json", result, meta)
    logger.info("detect: %d modules", result["n_modules"])
    return 0


def _analyze(cfg: RunConfig, plots: bool) -> int:
    wd = _workdir(cfg)
    part_path = _need(wd / "partition.tsv")
    rmeta, per_day, g = _build(cfg)
    try:
        labels = formats.labels_for_graph(g, formats.read_partition(part_path))
    except ValueError as exc:
        raise DataError(f"{part_path}: {exc}") from exc
    meta = cfg.meta(n_days=g.n_days, day0=rmeta.get("day0"))
    day0 = date.fromisoformat(rmeta["day0"]) if rmeta.get("day0") else None

    try:
        topic_map = TopicMap.load(cfg.topic_map) if cfg.topic_map else TopicMap.example()
    except (OSError, json.JSONDecodeError) as exc:
        raise DataError(f"cannot read topic map: {exc}") from exc
    usage = hashtag_usage(per_day)
    timelines = label_topics(
        build_timelines(g, labels, usage, min_size=cfg.size_floor, lifespan_mode=cfg.lifespan_mode), topic_map
    )
    formats.write_jsonl(wd / "timelines.jsonl", (t.to_json() for t in timelines), meta)

    hist = degree_distribution(g)
    formats.write_csv(wd / "fig1a_degree.csv", ["degree", "count"], sorted(hist.items()), meta)
    curve = cumulative_size_curve(timelines)
    formats.write_csv(wd / "fig1b_cumulative.csv", ["rank", "cumulative_fraction"], curve, meta)

    frames = [n for n in cfg.frames if 1 <= n <= g.n_days]
    if len(frames) < len(cfg.frames):
        logger.warning("frames beyond %d days skipped", g.n_days)
    ratios = frame_ratio_analysis(
        per_day, frames, cfg.optimizer(), mode=cfg.mode, min_size=cfg.size_floor,
        threads=cfg.threads, full_labels=labels,
    ) if frames else {}
    formats.write_csv(wd / "fig2_frame_ratio.csv", ["frame_days", "ratio"], sorted(ratios.items()), meta)

    series = community_user_ratio(g, labels)
    off = g.day_offsets
    rows4 = []
    for d, r in enumerate(series):
        n_users = int(off[d + 1] - off[d])
        n_comm = len(np.unique(labels[off[d]:off[d + 1]]))
        rows4.append([d, (day0 + timedelta(days=d)).isoformat() if day0 else "", n_users, n_comm, r])
    formats.write_csv(wd / "fig4_ratio.csv", ["day", "date", "n_users", "n_communities", "ratio"], rows4, meta)

    top_k = cfg.top_k if cfg.top_k is not None else coverage_top_k(timelines, cfg.coverage)
    dist_all = lifespan_distribution(timelines)
    dist_top = lifespan_distribution(timelines, top_k)
    spans = sorted(set(dist_all) | set(dist_top))
    formats.write_csv(
        wd / "fig5_lifespan.csv", ["lifespan", "count_all", "count_top"],
        [[d, dist_all.get(d, 0), dist_top.get(d, 0)] for d in spans], meta,
    )

    top = sorted(timelines, key=lambda t: (-t.total_users, t.id))[:top_k]
    days = list(range(g.n_days))
    totals = [int(off[d + 1] - off[d]) for d in days]
    formats.write_csv(
        wd / "fig3_evolution.csv",
        ["day", "total_users"] + [f"c{t.id}:{t.topic}" for t in top],
        [[d, totals[d]] + [t.daily_counts.get(d, 0) for t in top] for d in days],
        meta,
    )

    n_users = len(set(g.users))
    big = np.bincount(labels)[labels] >= cfg.size_floor if g.n_nodes else np.zeros(0, bool)
    covered = {g.users[i] for i in np.flatnonzero(big)}
    summary = {
        "n_nodes": g.n_nodes,
        "n_edges": g.n_edges,
        "n_users": n_users,
        "n_days": g.n_days,
        "n_communities": count_communities(labels, cfg.size_floor),
        "n_communities_all": int(len(np.unique(labels))),
        "size_floor": cfg.size_floor,
        "user_fraction_in_communities": len(covered) / n_users if n_users else None,
        "top_k": top_k,
        "top_k_user_fraction": dict(curve).get(top_k) if top_k else None,
        "lifespan_ge_4_fraction": (sum(c for d, c in dist_all.items() if d >= 4) / len(timelines)) if timelines else None,
        "codelength": codelength(g, labels).L if g.n_edges else 0.0,
        "topics": dict(sorted(Counter(t.topic for t in timelines).items())),
        "ratio_range": [min(r for r in series if r is not None), max(r for r in series if r is not None)]
        if any(r is not None for r in series) else None,
    }
    formats.write_json(wd / "summary.json", summary, meta)

    if plots:
        plotting.degree_distribution(hist, wd / "fig1a_degree.svg")
        plotting.cumulative_sizes(curve, wd / "fig1b_cumulative.svg")
        plotting.frame_ratio(ratios, wd / "fig2_frame_ratio.svg")
        plotting.ratio_series(series, wd / "fig4_ratio.svg")
        plotting.lifespans(dist_all, dist_top, top_k, wd / "fig5_lifespan.svg")
        plotting.evolution(days, totals, [(t.id, t.topic, [t.daily_counts.get(d, 0) for d in days]) for t in top],
                           wd / "fig3_evolution.svg")
    logger.info("analyze: %d communities at size >= %d", summary["n_communities"], cfg.size_floor)
    return 0


def cmd_analyze(args, cfg: RunConfig) -> int:
    return _analyze(cfg, plots=False)


def cmd_report(args, cfg: RunConfig) -> int:
    return _analyze(cfg, plots=True)


def cmd_run(args, cfg: RunConfig) -> int:
    for step in (cmd_ingest, cmd_detect, cmd_build):
        step(args, cfg)
    return _analyze(cfg, plots=True)


def make_parser() -> argparse.ArgumentParser:
    parser = Parser(prog="tdcomm", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"tdcomm {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=Parser)

    p = sub.add_parser("synth", help="generate a planted post stream")
    p.add_argument("--out", required=True, help="posts JSONL to write")
    p.add_argument("--truth", help="ground-truth TSV to write")
    p.add_argument("--communities", type=int, default=4)
    p.add_argument("--users", type=int, default=25, help="users per community")
    p.add_argument("--days", type=int, default=14)
    p.add_argument("--pool", type=int, default=5, help="hashtags per community pool")
    p.add_argument("--activity", type=float, default=1.0, help="daily posting probability")
    p.add_argument("--posts-per-day", type=int, default=1)
    p.add_argument("--cross-talk", type=float, default=0.0)
    p.add_argument("--lifespan", type=int, help="days each community is active (default: all)")
    p.add_argument("--start-date", default="2015-05-11")
    p.add_argument("--seed", type=int, default=0)
    p.add_argument("-v", "--verbose", action="store_true")
    p.set_defaults(func=cmd_synth, needs_config=False)

    p = sub.add_parser("ingest", help="parse, filter and day-bin posts")
    p.add_argument("input", help="posts file (.jsonl or .csv)")
    _add_config_flags(p, {"ingest"})
    p.set_defaults(func=cmd_ingest, needs_config=True)

    p = sub.add_parser("build", help="build the time-dependent network and its statistics")
    _add_config_flags(p, {"build"})
    p.set_defaults(func=cmd_build, needs_config=True)

    p = sub.add_parser("detect", help="map-equation community detection")
    _add_config_flags(p, {"build", "detect"})
    p.set_defaults(func=cmd_detect, needs_config=True)

    for name, func, text in (("analyze", cmd_analyze, "timelines and figure data"),
                             ("report", cmd_report, "figure data, SVG plots and summary")):
        p = sub.add_parser(name, help=text)
        _add_config_flags(p, {"build", "detect", "analyze"})
        p.set_defaults(func=func, needs_config=True)

    p = sub.add_parser("run", help="ingest, detect, build and report in one go")
    p.add_argument("input", help="posts file (.jsonl or .csv)")
    _add_config_flags(p, {"ingest", "build", "detect", "analyze"})
    p.set_defaults(func=cmd_run, needs_config=True)
    return parser


def main(argv=None) -> int:
    parser = make_parser()
    args = parser.parse_args(argv)
    logging.basicConfig(
        level=logging.INFO if getattr(args, "verbose", False) else logging.WARNING,
        format="%(levelname)s %(name)s: %(message)s",
        stream=sys.stderr,
    )
    try:
        if args.needs_config:
            return args.func(args, load_config(args))
        return args.func(args)
    except UsageError as exc:
        print(f"tdcomm: error: {exc}", file=sys.stderr)
        return USAGE_ERROR
    except (DataError, PostFormatError, OSError) as exc:
        print(f"tdcomm: error: {exc}", file=sys.stderr)
        return DATA_ERROR
    except ValueError as exc:
        print(f"tdcomm: error: {exc}", file=sys.stderr)
        return DATA_ERROR


if __name__ == "__main__":
    sys.exit(main())

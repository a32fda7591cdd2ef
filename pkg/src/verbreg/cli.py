"""Command-line interface: counting, tables, comparisons, county analysis,
verb maps, the synthetic-sampling experiment, and demographic correlations.

Every command that writes outputs also writes a manifest JSON capturing the
resolved config, its hash, the seed, and sha256 digests of the inputs, so a
run can be audited and reproduced.  Outputs contain no timestamps: the same
config, inputs, and seed produce byte-identical files.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
from dataclasses import dataclass, field, fields
from pathlib import Path
from typing import Optional

from . import __version__, experiment, geo, ingest, spatial, stats
from .lexicon import default_lexicon_path, load_lexicon


class CliError(ValueError):
    """User-facing configuration or input error."""


@dataclass
class RunConfig:
    lexicon: Optional[str] = None        # None -> shipped default
    corpus: list[str] = field(default_factory=list)
    gazetteer: Optional[str] = None
    counties: Optional[str] = None
    regions: Optional[str] = None        # None -> shipped default
    mode: str = "all"
    min_tokens_county: int = spatial.DEFAULT_MIN_TOKENS_COUNTY
    min_tokens_verb: int = spatial.DEFAULT_MIN_TOKENS_VERB
    fuzzy_confidence: int = geo.DEFAULT_FUZZY_CONFIDENCE
    smoothing_s: int = 5
    alpha: float = 0.05
    seed: int = 0
    workers: int = 1
    out: str = "."
    synth_sizes: int = experiment.DEFAULT_SYNTH_SIZES
    synth_size_min: int = experiment.DEFAULT_SYNTH_SIZE_RANGE[0]
    synth_size_max: int = experiment.DEFAULT_SYNTH_SIZE_RANGE[1]
    synth_replicates: int = experiment.DEFAULT_SYNTH_REPLICATES

    _INT_KEYS = {"min_tokens_county", "min_tokens_verb", "fuzzy_confidence",
                 "smoothing_s", "seed", "workers", "synth_sizes",
                 "synth_size_min", "synth_size_max", "synth_replicates"}
    _FLOAT_KEYS = {"alpha"}

    @classmethod
    def from_file(cls, path: str | Path) -> "RunConfig":
        """Parse a `key = value` config file; `corpus` lines accumulate."""
        config = cls()
        known = {f.name for f in fields(cls)}
        with open(path, encoding="utf-8") as fh:
            for lineno, line in enumerate(fh, start=1):
                line = line.split("#", 1)[0].strip()
                if not line:
                    continue
                if "=" not in line:
                    raise CliError(f"{path}:{lineno}: expected key = value")
                key, _, value = line.partition("=")
                key, value = key.strip(), value.strip()
                if key not in known:
                    raise CliError(f"{path}:{lineno}: unknown key {key!r}")
                config.set_key(key, value)
        return config

    def set_key(self, key: str, value: str) -> None:
        try:
            if key == "corpus":
                self.corpus.append(value)
            elif key in self._INT_KEYS:
                setattr(self, key, int(value))
            elif key in self._FLOAT_KEYS:
                setattr(self, key, float(value))
            else:
                setattr(self, key, value)
        except ValueError as exc:
            raise CliError(f"bad value for {key}: {value!r}") from exc

    def apply_args(self, args: argparse.Namespace) -> None:
        """Command-line flags win over config-file values."""
        for key in ("lexicon", "gazetteer", "counties", "regions", "mode",
                    "min_tokens_county", "min_tokens_verb", "fuzzy_confidence",
                    "smoothing_s", "alpha", "seed", "workers", "out",
                    "synth_sizes", "synth_size_min", "synth_size_max",
                    "synth_replicates"):
            value = getattr(args, key, None)
            if value is not None:
                setattr(self, key, value)
        corpus = getattr(args, "corpus", None)
        if corpus:
            self.corpus = list(corpus)

    def validate(self, need: set[str]) -> None:
        for key in ("min_tokens_county", "min_tokens_verb", "smoothing_s",
                    "workers", "synth_sizes", "synth_replicates",
                    "synth_size_min", "synth_size_max"):
            if getattr(self, key) < (0 if key == "smoothing_s" else 1):
                raise CliError(f"{key} must be positive")
        if not 0 <= self.fuzzy_confidence <= 100:
            raise CliError("fuzzy_confidence must be in [0, 100]")
        if not 0.0 < self.alpha < 1.0:
            raise CliError("alpha must be in (0, 1)")
        if self.mode not in geo.MODES:
            raise CliError(f"mode must be one of {geo.MODES}")
        if "corpus" in need and not self.corpus:
            raise CliError("no corpus files configured")
        for key in need & {"gazetteer", "counties"}:
            if getattr(self, key) is None:
                raise CliError(f"mode/command requires a {key} file")
        for path in self.referenced_paths(need):
            if not Path(path).exists():
                raise CliError(f"input file not found: {path}")

    def referenced_paths(self, need: set[str]) -> list[str]:
        paths = list(self.corpus) if "corpus" in need else []
        for key in ("lexicon", "gazetteer", "counties", "regions"):
            if key in need and getattr(self, key) is not None:
                paths.append(getattr(self, key))
        return paths

    def as_dict(self) -> dict:
        return {f.name: getattr(self, f.name) for f in fields(self)}


def _sha256(path: str | Path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            digest.update(chunk)
    return digest.hexdigest()


def _write_json(path: Path, obj) -> None:
    with open(path, "w", encoding="utf-8") as fh:
        json.dump(obj, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _write_manifest(out_dir: Path, command: str, config: RunConfig,
                    inputs: list[str], outputs: list[str],
                    extra: Optional[dict] = None) -> None:
    # out and workers never change output content, so they stay out of the
    # recorded config: identical data gets an identical manifest
    resolved = {k: v for k, v in config.as_dict().items()
                if k not in ("out", "workers")}
    config_hash = hashlib.sha256(
        json.dumps(resolved, sort_keys=True).encode()).hexdigest()
    manifest = {
        "command": command,
        "version": __version__,
        "seed": config.seed,
        "config": resolved,
        "config_hash": config_hash,
        "inputs": {str(p): _sha256(p) for p in sorted(set(inputs))},
        "outputs": sorted(outputs),
    }
    if extra:
        manifest.update(extra)
    _write_json(out_dir / f"{command}_manifest.json", manifest)


def _out_dir(config: RunConfig) -> Path:
    out = Path(config.out)
    out.mkdir(parents=True, exist_ok=True)
    return out


def _load_geo(config: RunConfig, need_gazetteer: bool, need_counties: bool,
              need_regions: bool):
    gazetteer = geo.load_gazetteer(config.gazetteer) if need_gazetteer else None
    counties = geo.load_counties(config.counties) if need_counties else None
    regions = geo.load_regions(config.regions) if need_regions else None
    return gazetteer, counties, regions


def cmd_count(config: RunConfig) -> int:
    need = {"corpus", "lexicon"}
    if config.mode == "county":
        need |= {"gazetteer", "counties"}
    elif config.mode in ("us_geo", "uk_geo"):
        if config.regions is not None:
            need |= {"regions"}
    config.validate(need)
    lexicon = load_lexicon(config.lexicon)
    gazetteer, counties, regions = _load_geo(
        config, config.mode == "county", config.mode == "county",
        config.mode in ("us_geo", "uk_geo"))
    scoper = geo.make_scoper(config.mode, regions=regions,
                             gazetteer=gazetteer, counties=counties,
                             confidence=config.fuzzy_confidence)
    report = ingest.LoadReport()

    def records():
        for path in config.corpus:
            yield from ingest.iter_jsonl_records(path, report)

    scope_map = ingest.count_sharded(records(), lexicon, scoper,
                                     shards=config.workers, report=report)
    out = _out_dir(config)
    ingest.write_counts_csv(scope_map, out / "counts.csv")
    _write_json(out / "load_report.json", report.as_dict())
    if report.tokens_matched == 0:
        print("warning: no tokens matched the lexicon", file=sys.stderr)
    _write_manifest(out, "count", config, config.referenced_paths(need),
                    ["counts.csv", "load_report.json"])
    return 0


def _scope_tables(config: RunConfig, args) -> dict[str, stats.RegularizationTable]:
    lexicon = load_lexicon(config.lexicon)
    verbs = None
    if args.t_subset_only:
        verbs = [e.lemma for e in lexicon.t_subset()]
    if args.counts:
        scope_map = ingest.read_counts_csv(args.counts)
        wanted = [args.scope] if args.scope else sorted(scope_map)
        tables = {}
        for scope in wanted:
            if scope not in scope_map:
                raise CliError(f"scope {scope!r} not present in {args.counts}")
            tables[scope] = stats.build_table(scope_map[scope], verbs=verbs)
        return tables
    series = ingest.load_frequency_series(args.ngrams)
    weights = ingest.ngram_weights(series, lexicon, config.smoothing_s,
                                   args.year)
    if verbs is not None:
        weights = {k: v for k, v in weights.items() if k in set(verbs)}
    scope = args.scope or Path(args.ngrams).stem
    return {scope: stats.build_table(weights, scope_id=scope)}


def cmd_table(config: RunConfig, args) -> int:
    if bool(args.counts) == bool(args.ngrams):
        raise CliError("give exactly one of --counts or --ngrams")
    if args.ngrams and args.year is None:
        raise CliError("--ngrams requires --year")
    config.validate({"lexicon"})
    for path in (args.counts, args.ngrams):
        if path and not Path(path).exists():
            raise CliError(f"input file not found: {path}")
    out = _out_dir(config)
    outputs = []
    for scope, table in _scope_tables(config, args).items():
        safe = scope.replace("/", "_")
        stats.write_table_csv(table, out / f"table_{safe}.csv")
        _write_json(out / f"table_{safe}.json", stats.table_to_json(table))
        outputs += [f"table_{safe}.csv", f"table_{safe}.json"]
    inputs = [p for p in (args.counts, args.ngrams) if p]
    inputs += config.referenced_paths({"lexicon"})
    _write_manifest(out, "table", config, inputs, outputs)
    return 0


def cmd_compare(config: RunConfig, args) -> int:
    for path in (args.table_a, args.table_b):
        if not Path(path).exists():
            raise CliError(f"input file not found: {path}")
    table_a = stats.read_table_csv(args.table_a)
    table_b = stats.read_table_csv(args.table_b)
    report = stats.comparison_report(table_a, table_b)
    out = _out_dir(config)
    _write_json(out / "compare_report.json", report)
    import csv

    with open(out / "compare_scatter.csv", "w", newline="",
              encoding="utf-8") as fh:
        writer = csv.writer(fh)
        writer.writerow(["lemma", "fraction_a", "fraction_b", "difference"])
        for point in report["scatter"]:
            writer.writerow([point["lemma"], repr(point["fraction_a"]),
                             repr(point["fraction_b"]),
                             repr(point["fraction_a"] - point["fraction_b"])])
    _write_manifest(out, "compare", config, [args.table_a, args.table_b],
                    ["compare_report.json", "compare_scatter.csv"])
    return 0


def _county_counts(config: RunConfig, counts_path: str):
    if not Path(counts_path).exists():
        raise CliError(f"input file not found: {counts_path}")
    return ingest.read_counts_csv(counts_path)


def cmd_counties(config: RunConfig, args) -> int:
    config.validate({"counties"})
    counts = _county_counts(config, args.counts)
    counties = geo.load_counties(config.counties)
    panel = spatial.county_pipeline(counts, counties,
                                    min_tokens=config.min_tokens_county,
                                    alpha=config.alpha)
    out = _out_dir(config)
    spatial.write_panel_csv(panel, out / "county_panel.csv")
    _write_json(out / "county_panel.geojson",
                spatial.panel_geojson(panel, counties))
    _write_manifest(out, "counties", config,
                    [args.counts] + config.referenced_paths({"counties"}),
                    ["county_panel.csv", "county_panel.geojson"],
                    extra={"n_counties": panel.n_tests,
                           "fit": {"slope": panel.fit.slope,
                                   "intercept": panel.fit.intercept}})
    return 0


def cmd_verbmap(config: RunConfig, args) -> int:
    config.validate({"counties", "lexicon"})
    lexicon = load_lexicon(config.lexicon)
    if args.lemma not in lexicon:
        raise CliError(f"lemma {args.lemma!r} not in lexicon")
    counts = _county_counts(config, args.counts)
    counties = geo.load_counties(config.counties)
    panel = spatial.verb_pipeline(counts, args.lemma, counties,
                                  min_tokens=config.min_tokens_verb,
                                  alpha=config.alpha)
    out = _out_dir(config)
    csv_name = f"verbmap_{args.lemma}.csv"
    geojson_name = f"verbmap_{args.lemma}.geojson"
    spatial.write_panel_csv(panel, out / csv_name)
    _write_json(out / geojson_name, spatial.panel_geojson(panel, counties))
    _write_manifest(out, "verbmap", config,
                    [args.counts] + config.referenced_paths({"counties",
                                                             "lexicon"}),
                    [csv_name, geojson_name],
                    extra={"lemma": args.lemma, "n_counties": panel.n_tests})
    return 0


def cmd_synth(config: RunConfig, args) -> int:
    config.validate(set())
    counts = _county_counts(config, args.counts)
    pool = experiment.build_pool(counts.values())
    sizes = experiment.log_spaced_sizes(config.synth_size_min,
                                        config.synth_size_max,
                                        config.synth_sizes)
    synths = experiment.sample_synthetic(pool, sizes,
                                         replicates=config.synth_replicates,
                                         seed=config.seed)
    out = _out_dir(config)
    experiment.write_synthetic_csv(synths, out / "synthetic.csv")
    _write_json(out / "synth_meta.json", {
        "seed": config.seed,
        "sizes": {"count": config.synth_sizes,
                  "min": config.synth_size_min,
                  "max": config.synth_size_max},
        "replicates": config.synth_replicates,
        "pool_total_tokens": pool.total_tokens,
        "pool_average_fraction": experiment.pool_average_fraction(pool),
    })
    _write_manifest(out, "synth", config, [args.counts],
                    ["synthetic.csv", "synth_meta.json"])
    return 0


def cmd_correlate(config: RunConfig, args) -> int:
    config.validate(set())
    counts = _county_counts(config, args.counts)
    if not Path(args.acs).exists():
        raise CliError(f"input file not found: {args.acs}")
    panel = spatial.county_pipeline(counts, counties=None,
                                    min_tokens=config.min_tokens_county,
                                    alpha=config.alpha)
    variables = experiment.load_acs_csv(args.acs)
    if not variables:
        raise CliError(f"{args.acs}: no Estimate/Percent variable columns")
    ranked = experiment.rank_variables(variables, panel,
                                       workers=config.workers)
    out = _out_dir(config)
    experiment.write_partials_csv(ranked, out / "partials.csv")
    _write_manifest(out, "correlate", config, [args.counts, args.acs],
                    ["partials.csv"],
                    extra={"n_counties": panel.n_tests,
                           "failed_variables": {
                               r.id: r.error for r in ranked
                               if r.error is not None}})
    return 0


def cmd_lexicon_validate(config: RunConfig) -> int:
    config.validate({"lexicon"})
    lexicon = load_lexicon(config.lexicon)
    summary = {
        "path": config.lexicon or str(default_lexicon_path()),
        "lemmas": len(lexicon),
        "surface_forms": len(lexicon.form_index),
        "t_subset": len(lexicon.t_subset()),
    }
    print(json.dumps(summary, indent=2, sort_keys=True))
    return 0


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(
        prog="verbreg",
        description="Measure English verb regularization in corpora.")
    parser.add_argument("--config", help="key = value config file")
    parser.add_argument("--workers", type=int, help="worker/shard count")
    parser.add_argument("--seed", type=int, help="seed for all randomness")
    parser.add_argument("--out", help="output directory")
    parser.add_argument("--lexicon", help="verb lexicon CSV (default shipped)")
    sub = parser.add_subparsers(dest="command", required=True)

    p = sub.add_parser("count", help="count past-tense tokens per scope")
    p.add_argument("--corpus", action="append", help="JSONL[.gz] corpus file")
    p.add_argument("--mode", choices=geo.MODES)
    p.add_argument("--gazetteer")
    p.add_argument("--counties")
    p.add_argument("--regions")
    p.add_argument("--fuzzy-confidence", dest="fuzzy_confidence", type=int)

    p = sub.add_parser("table", help="build regularization tables")
    p.add_argument("--counts", help="counts CSV from `count`")
    p.add_argument("--ngrams", help="frequency-series CSV")
    p.add_argument("--year", type=int, help="query year for --ngrams")
    p.add_argument("--smoothing", dest="smoothing_s", type=int)
    p.add_argument("--scope", help="scope to tabulate (default: all present)")
    p.add_argument("--t-subset-only", action="store_true",
                   help="restrict to the -t verb subset")

    p = sub.add_parser("compare", help="compare two regularization tables")
    p.add_argument("table_a")
    p.add_argument("table_b")

    p = sub.add_parser("counties", help="county residual + Gi* panel")
    p.add_argument("--counts", required=True)
    p.add_argument("--counties", dest="counties")
    p.add_argument("--min-tokens", dest="min_tokens_county", type=int)
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("verbmap", help="per-county Gi* map data for one verb")
    p.add_argument("--counts", required=True)
    p.add_argument("--lemma", required=True)
    p.add_argument("--counties", dest="counties")
    p.add_argument("--min-tokens", dest="min_tokens_verb", type=int)
    p.add_argument("--alpha", type=float)

    p = sub.add_parser("synth", help="synthetic-county sampling experiment")
    p.add_argument("--counts", required=True)
    p.add_argument("--sizes", dest="synth_sizes", type=int)
    p.add_argument("--size-min", dest="synth_size_min", type=int)
    p.add_argument("--size-max", dest="synth_size_max", type=int)
    p.add_argument("--replicates", dest="synth_replicates", type=int)

    p = sub.add_parser("correlate",
                       help="demographic simple vs partial correlations")
    p.add_argument("--counts", required=True)
    p.add_argument("--acs", required=True, help="wide census CSV")
    p.add_argument("--min-tokens", dest="min_tokens_county", type=int)

    sub.add_parser("lexicon-validate", help="validate a lexicon file")

    return parser


def main(argv: Optional[list[str]] = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        config = (RunConfig.from_file(args.config) if args.config
                  else RunConfig())
        config.apply_args(args)
        if args.command == "count":
            return cmd_count(config)
        if args.command == "table":
            return cmd_table(config, args)
        if args.command == "compare":
            return cmd_compare(config, args)
        if args.command == "counties":
            return cmd_counties(config, args)
        if args.command == "verbmap":
            return cmd_verbmap(config, args)
        if args.command == "synth":
            return cmd_synth(config, args)
        if args.command == "correlate":
            return cmd_correlate(config, args)
        if args.command == "lexicon-validate":
            return cmd_lexicon_validate(config)
        raise CliError(f"unknown command {args.command!r}")
    except (CliError, ValueError, OSError) as exc:
        print(json.dumps({"error": type(exc).__name__, "message": str(exc)}),
              file=sys.stderr)
        return 1


if __name__ == "__main__":
    sys.exit(main())

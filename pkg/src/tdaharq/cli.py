"""Batch experiment runner.

Subcommands::

    tdaharq extract   --config exp.toml --out results/
    tdaharq calibrate --config exp.toml
    tdaharq sweep     --config exp.toml
    tdaharq dump-pd   --image img.png --filtration "height(1,0)"
    tdaharq synth     --out corpus/ --count 100 --seed 0

The config file is flat TOML; command-line flags override its values. Every
output embeds the resolved config: CSV files start with a ``# config=`` line,
JSONL files with a ``{"config": ...}`` record, JSON files carry a ``config``
key. Exit codes: 0 ok, 1 config error, 2 runtime error.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import os
import sys
from concurrent.futures import ProcessPoolExecutor
from dataclasses import asdict, dataclass, fields
from functools import partial
from pathlib import Path

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from . import __version__
from .channel import CHANNEL_KINDS, ChannelSpec
from .codec import CODECS, CodecBudget, get_codec
from .cubical import compute_persistence, diagram_to_jsonl
from .detector import MIN_CORPUS, DetectorModel, calibrate
from .filtration import DEFAULT_CENTERS, DEFAULT_DIRECTIONS, grayscale_filtration
from .harq import HarqConfig, run_session
from .imageio import ImageFormatError, list_corpus, load_image, to_grayscale
from .signatures import SignatureConfig
from .synthetic import write_corpus
from .tda import SELECTED_FEATURES, TdaEncoder

WORKERS_ENV = "TDAHARQ_WORKERS"
EXIT_OK, EXIT_CONFIG, EXIT_RUNTIME = 0, 1, 2


class ConfigError(ValueError):
    pass


@dataclass(frozen=True)
class ExperimentConfig:
    """Everything a run needs; ``seed`` has no default on purpose."""

    seed: int | None = None
    corpus: str = "corpus"
    out: str = "results"
    channels: tuple[str, ...] = ("awgn",)
    snr_db: tuple[float, ...] = (0.0, 3.0, 10.0, 20.0)
    compression_dims: tuple[int, ...] = (32,)
    n_max: int = 3
    threshold: float = 128.0
    directions: tuple[tuple[float, float], ...] = DEFAULT_DIRECTIONS
    centers: tuple[tuple[int, int], ...] = DEFAULT_CENTERS
    wasserstein_p: tuple[float, ...] = (1.0, 2.0)
    landscape_layers: tuple[int, ...] = (1, 2)
    heat_kappa: tuple[float, ...] = (10.0, 15.0)
    k_select: int = SELECTED_FEATURES
    quality_target: float = 25.0
    acceptance: float = 0.95
    calibration_channel: str = "awgn"
    calibration_snr_db: float = 10.0
    calibration_dim: int = 32
    codec: str = "dct-ref"
    model: str = ""
    workers: int = 1

    def __post_init__(self):
        if self.seed is None:
            raise ConfigError("seed is required")
        for name in ("channels", "snr_db", "compression_dims", "directions", "centers"):
            if not getattr(self, name):
                raise ConfigError(f"{name} must not be empty")
        for kind in (*self.channels, self.calibration_channel):
            if kind not in CHANNEL_KINDS:
                raise ConfigError(f"unknown channel {kind!r}; expected one of {CHANNEL_KINDS}")
        if self.codec not in CODECS:
            raise ConfigError(f"unknown codec {self.codec!r}")
        if self.n_max < 1:
            raise ConfigError("n_max must be >= 1")
        if self.workers < 1:
            raise ConfigError("workers must be >= 1")
        if not 0 < self.acceptance <= 1:
            raise ConfigError("acceptance must lie in (0, 1]")
        try:
            self.signature_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from exc

    @classmethod
    def from_mapping(cls, data: dict) -> "ExperimentConfig":
        known = {f.name: f for f in fields(cls)}
        unknown = sorted(set(data) - set(known))
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        kw = {}
        for key, value in data.items():
            default = known[key].default
            try:
                if isinstance(default, tuple):
                    if not isinstance(value, (list, tuple)):
                        value = [value]
                    if default and isinstance(default[0], tuple):
                        value = tuple(tuple(v) for v in value)
                    else:
                        cast = type(default[0]) if default else str
                        value = tuple(cast(v) for v in value)
                elif key == "seed":
                    value = int(value)
                elif default is not None and not isinstance(value, type(default)):
                    value = type(default)(value)
            except (TypeError, ValueError) as exc:
                raise ConfigError(f"bad value for {key}: {value!r}") from exc
            kw[key] = value
        return cls(**kw)

    def to_dict(self) -> dict:
        """Resolved config for embedding in outputs; the output location is left out
        so a rerun elsewhere yields identical files."""
        d = asdict(self)
        d.pop("out")
        d.pop("workers")
        return d

    def signature_config(self) -> SignatureConfig:
        return SignatureConfig(wasserstein_orders=self.wasserstein_p, landscape_layers=self.landscape_layers,
                               heat_bandwidths=self.heat_kappa)

    def encoder(self) -> TdaEncoder:
        return TdaEncoder(self.directions, self.centers, self.threshold, self.signature_config())

    def model_path(self) -> Path:
        return Path(self.model) if self.model else Path(self.out) / "model.json"


# -- config resolution ---------------------------------------------------------

def _csv_list(cast):
    def parse(text):
        try:
            return [cast(t) for t in text.split(",") if t.strip()]
        except ValueError as exc:
            raise argparse.ArgumentTypeError(str(exc)) from exc
    return parse


OVERRIDES = {
    # flag -> (config key, argparse kwargs)
    "--seed": ("seed", dict(type=int)),
    "--corpus": ("corpus", {}),
    "--out": ("out", {}),
    "--channels": ("channels", dict(type=_csv_list(str), help="comma list of awgn/rayleigh")),
    "--snr-db": ("snr_db", dict(type=_csv_list(float), help="comma list, dB")),
    "--compression-dims": ("compression_dims", dict(type=_csv_list(int), help="comma list of C")),
    "--n-max": ("n_max", dict(type=int)),
    "--threshold": ("threshold", dict(type=float)),
    "--k-select": ("k_select", dict(type=int)),
    "--quality-target": ("quality_target", dict(type=float)),
    "--acceptance": ("acceptance", dict(type=float)),
    "--calibration-channel": ("calibration_channel", {}),
    "--calibration-snr-db": ("calibration_snr_db", dict(type=float)),
    "--calibration-dim": ("calibration_dim", dict(type=int)),
    "--codec": ("codec", {}),
    "--model": ("model", {}),
    "--workers": ("workers", dict(type=int)),
}


def resolve_config(args: argparse.Namespace) -> ExperimentConfig:
    data = {}
    if args.config:
        try:
            with open(args.config, "rb") as fh:
                data = tomllib.load(fh)
        except FileNotFoundError as exc:
            raise ConfigError(f"config file not found: {args.config}") from exc
        except tomllib.TOMLDecodeError as exc:
            raise ConfigError(f"cannot parse {args.config}: {exc}") from exc
    env = os.environ.get(WORKERS_ENV)
    if env:
        try:
            data["workers"] = int(env)
        except ValueError as exc:
            raise ConfigError(f"{WORKERS_ENV} must be an integer, got {env!r}") from exc
    for key, _ in OVERRIDES.values():
        value = getattr(args, key, None)
        if value is not None:
            data[key] = value
    return ExperimentConfig.from_mapping(data)


# -- output helpers --------------------------------------------------------------

def _config_line(cfg: ExperimentConfig) -> str:
    return "# config=" + json.dumps(cfg.to_dict(), sort_keys=True) + "\n"


def _fmt(x) -> str:
    return repr(float(x))


def write_csv(path: Path, cfg: ExperimentConfig, header, rows) -> None:
    buf = io.StringIO()
    buf.write(_config_line(cfg))
    writer = csv.writer(buf, lineterminator="\n")
    writer.writerow(header)
    writer.writerows(rows)
    path.write_text(buf.getvalue())


def write_jsonl(path: Path, cfg: ExperimentConfig, records) -> None:
    lines = [json.dumps({"config": cfg.to_dict()}, sort_keys=True)]
    lines += [json.dumps(r, sort_keys=True) for r in records]
    path.write_text("\n".join(lines) + "\n")


def read_csv(path: str | Path) -> tuple[dict, list[str], list[list[str]]]:
    """Inverse of :func:`write_csv`: ``(config, header, rows)``."""
    lines = Path(path).read_text().splitlines()
    if not lines or not lines[0].startswith("# config="):
        raise ValueError(f"{path} has no config line")
    config = json.loads(lines[0][len("# config="):])
    rows = list(csv.reader(lines[1:]))
    return config, rows[0], rows[1:]


def _pool_map(fn, items, workers: int):
    """Ordered map over ``items``; results come back in input order whatever the worker count."""
    items = list(items)
    if workers <= 1 or len(items) < 2:
        return [fn(x) for x in items]
    chunk = max(1, len(items) // (8 * workers))
    with ProcessPoolExecutor(max_workers=workers) as ex:
        return list(ex.map(fn, items, chunksize=chunk))


def _load_corpus(cfg: ExperimentConfig) -> list[Path]:
    try:
        paths = list_corpus(cfg.corpus)
    except FileNotFoundError as exc:
        raise ConfigError(str(exc)) from exc
    if not paths:
        raise ConfigError(f"corpus {cfg.corpus} contains no images")
    return paths


def _features_of(path, encoder):
    return encoder.features(load_image(path))


def _corpus_features(paths, cfg: ExperimentConfig) -> np.ndarray:
    return np.array(_pool_map(partial(_features_of, encoder=cfg.encoder()), paths, cfg.workers))


def _common_shape(images) -> tuple[int, int]:
    shapes = {img.shape[:2] for img in images}
    if len(shapes) != 1:
        raise RuntimeError(f"corpus images must share one size, found {sorted(shapes)}")
    return shapes.pop()


# -- subcommands -------------------------------------------------------------------

def run_extract(cfg: ExperimentConfig) -> Path:
    """Write ``features.csv``: one row of topological features per corpus image."""
    paths = _load_corpus(cfg)
    encoder = cfg.encoder()
    header = ["image_id", *encoder.encode(np.zeros((32, 32, 3), np.uint8)).header()]
    features = _corpus_features(paths, cfg)
    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    target = out / "features.csv"
    write_csv(target, cfg, header, ([p.name, *map(_fmt, row)] for p, row in zip(paths, features)))
    return target


def run_calibrate(cfg: ExperimentConfig) -> Path:
    """Fit the selection mask, standardization and ``chi``; write ``model.json`` and ``mask.json``."""
    paths = _load_corpus(cfg)
    if len(paths) < MIN_CORPUS:
        raise RuntimeError(f"calibration needs at least {MIN_CORPUS} images, got {len(paths)}")
    images = [load_image(p) for p in paths]
    h, w = _common_shape(images)
    features = _corpus_features(paths, cfg)
    budget = CodecBudget.from_compression_dim(h, w, cfg.calibration_dim)
    channel = ChannelSpec(cfg.calibration_channel, cfg.calibration_snr_db, cfg.seed)
    report: dict = {}
    model = calibrate(images, budget, channel, encoder=cfg.encoder(), codec=get_codec(cfg.codec),
                      k=cfg.k_select, quality_target=cfg.quality_target, acceptance=cfg.acceptance,
                      features=features, report=report)
    target = cfg.model_path()
    target.parent.mkdir(parents=True, exist_ok=True)
    good = np.asarray(report["psnrs"]) >= cfg.quality_target
    model.save(target, extra={"config": cfg.to_dict(), "n_images": len(paths),
                              "n_good": int(good.sum()), "version": __version__})
    mask_doc = {"config": cfg.to_dict(), **json.loads(model.mask.to_json())}
    (target.parent / "mask.json").write_text(json.dumps(mask_doc, indent=1, sort_keys=True) + "\n")
    return target


def _sweep_image(task, cfg: ExperimentConfig, model: DetectorModel):
    index, path = task
    img = load_image(path)
    encoder, codec = cfg.encoder(), get_codec(cfg.codec)
    features = encoder.features(img)
    h, w = img.shape[:2]
    records = []
    for kind in cfg.channels:
        for snr in cfg.snr_db:
            for c in cfg.compression_dims:
                budget = CodecBudget.from_compression_dim(h, w, c)
                hc = HarqConfig(ChannelSpec(kind, snr, cfg.seed), budget, cfg.n_max)
                # the same image sees the same noise stream in every cell
                res = run_session(img, hc, model, encoder=encoder, codec=codec, key=(index,),
                                  image_id=path.name, features=features)
                records.append({**res.to_record(), "C": c})
    return records


def _task_key(record) -> tuple:
    return record["channel"], record["snr_db"], record["C"], record["image_id"]


SUMMARY_METRICS = ("psnr", "ms_ssim", "attempts")


def summarize(records) -> list[dict]:
    """Mean final PSNR, final MS-SSIM and attempts per (channel, snr, C) cell."""
    cells: dict[tuple, list] = {}
    for r in records:
        cells.setdefault((r["channel"], r["snr_db"], r["C"], r["R"]), []).append(r)
    rows = []
    for (kind, snr, c, rate), group in sorted(cells.items()):
        rows.append({
            "channel": kind, "snr_db": snr, "C": c, "R": rate, "n": len(group),
            "psnr": float(np.mean([g["psnr"][-1] for g in group])),
            "ms_ssim": float(np.mean([g["ms_ssim"][-1] for g in group])),
            "attempts": float(np.mean([g["attempts"] for g in group])),
        })
    return rows


def run_sweep(cfg: ExperimentConfig) -> tuple[Path, Path]:
    """Run HARQ sessions over the (channel, snr, C) grid for every corpus image.

    Writes ``results.jsonl`` (one record per image and cell, sorted by task key),
    ``summary.csv`` (one row per cell) and ``summary_long.csv`` (one row per
    cell and metric, plot-ready).
    """
    model_path = cfg.model_path()
    if not model_path.exists():
        raise RuntimeError(f"no calibrated model at {model_path}; run calibrate first")
    model = DetectorModel.load(model_path)
    paths = _load_corpus(cfg)
    worker = partial(_sweep_image, cfg=cfg, model=model)
    records = [r for batch in _pool_map(worker, list(enumerate(paths)), cfg.workers) for r in batch]
    records.sort(key=_task_key)

    out = Path(cfg.out)
    out.mkdir(parents=True, exist_ok=True)
    results = out / "results.jsonl"
    write_jsonl(results, cfg, records)
    rows = summarize(records)
    cols = ["channel", "snr_db", "C", "R", "n", *SUMMARY_METRICS]
    summary = out / "summary.csv"
    write_csv(summary, cfg, cols, ([r[c] if c in ("channel", "C", "n") else _fmt(r[c]) for c in cols]
                                   for r in rows))
    long_rows = ([r["channel"], _fmt(r["snr_db"]), _fmt(r["R"]), m, _fmt(r[m])]
                 for r in rows for m in SUMMARY_METRICS)
    write_csv(out / "summary_long.csv", cfg, ["channel", "snr_db", "R", "metric", "value"], long_rows)
    return results, summary


def run_dump_pd(image: str, filtration: str, cfg: ExperimentConfig, out=None) -> str:
    """Persistence diagram of one filtration of one image as JSONL."""
    img = load_image(image)
    encoder = cfg.encoder()
    if filtration == "grayscale":
        fm = grayscale_filtration(to_grayscale(img))
    else:
        maps = {fm.name: fm for fm in encoder.filtrations(encoder.mask(img))}
        if filtration not in maps:
            raise ConfigError(f"unknown filtration {filtration!r}; choose from grayscale, {', '.join(maps)}")
        fm = maps[filtration]
    pd = compute_persistence(fm)
    head = json.dumps({"config": cfg.to_dict(), "image": Path(image).name, "filtration": fm.name,
                       "ceiling": fm.ceiling}, sort_keys=True)
    text = head + "\n" + diagram_to_jsonl(pd)
    if out:
        Path(out).write_text(text)
    return text


# -- argument parsing ---------------------------------------------------------------

class _Parser(argparse.ArgumentParser):
    def error(self, message):
        self.print_usage(sys.stderr)
        self.exit(EXIT_CONFIG, f"{self.prog}: error: {message}\n")


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="tdaharq", description="TDA-checked HARQ image transmission experiments.")
    parser.add_argument("--version", action="version", version=f"%(prog)s {__version__}")
    sub = parser.add_subparsers(dest="command", required=True, parser_class=_Parser)

    def with_config(p):
        p.add_argument("--config", help="TOML config file")
        for flag, (key, kw) in OVERRIDES.items():
            p.add_argument(flag, dest=key, default=None, **kw)
        return p

    with_config(sub.add_parser("extract", help="write the feature CSV of a corpus"))
    with_config(sub.add_parser("calibrate", help="fit feature selection and detector threshold"))
    with_config(sub.add_parser("sweep", help="run HARQ sessions over the SNR x rate x channel grid"))
    dump = with_config(sub.add_parser("dump-pd", help="emit one persistence diagram as JSONL"))
    dump.add_argument("--image", required=True)
    dump.add_argument("--filtration", required=True, help='e.g. "height(1,0)", "radial(6,6)" or grayscale')
    dump.add_argument("--output", help="file to write instead of stdout")
    synth = sub.add_parser("synth", help="write a synthetic PNG corpus")
    synth.add_argument("--out", required=True)
    synth.add_argument("--count", type=int, default=100)
    synth.add_argument("--seed", type=int, required=True)
    synth.add_argument("--size", type=int, default=32)
    return parser


def main(argv=None) -> int:
    try:
        args = build_parser().parse_args(argv)
    except SystemExit as exc:  # usage errors and --help
        return int(exc.code or 0)
    try:
        if args.command == "synth":
            if args.count < 1 or args.size < 1:
                raise ConfigError("count and size must be positive")
            write_corpus(args.out, args.count, args.seed, args.size)
            return EXIT_OK
        if args.command == "dump-pd" and args.seed is None and not args.config:
            args.seed = 0  # no randomness involved
        cfg = resolve_config(args)
        if args.command == "extract":
            print(run_extract(cfg))
        elif args.command == "calibrate":
            print(run_calibrate(cfg))
        elif args.command == "sweep":
            for path in run_sweep(cfg):
                print(path)
        elif args.command == "dump-pd":
            text = run_dump_pd(args.image, args.filtration, cfg, args.output)
            if not args.output:
                sys.stdout.write(text)
    except ConfigError as exc:
        print(f"config error: {exc}", file=sys.stderr)
        return EXIT_CONFIG
    except (RuntimeError, ValueError, OSError, ImageFormatError) as exc:
        print(f"error: {exc}", file=sys.stderr)
        return EXIT_RUNTIME
    return EXIT_OK


if __name__ == "__main__":
    sys.exit(main())

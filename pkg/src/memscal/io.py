"""
Run configuration, range-stream CSV, point clouds and cost-surface export.

Config documents are TOML::

    [scene]                       # or: file = "scene.toml"
    background_range = 30.0       # optional
    [[scene.plane]]
    normal = [0.0, 0.0, 1.0]
    offset = 12.0
    [[scene.box]]
    min = [-1.8, -1.2, 6.0]
    max = [-0.5, 0.8, 7.0]

    [pattern]       rows, k_design, theta_range, phi_range, delta_t, serpentine, frame_period_laser
    [misalignment]  m_start, drift_pulses_per_frame, k_true
    [noise]         range_sigma, range_sigma_rel, dropout_prob, seed
    [search]        m_max, k_min, k_max, min_valid_pairs, degeneracy_ratio
    [run]           n_frames, output_dir

A standalone scene file uses the same keys as ``[scene]`` at top level.
Unknown sections or keys are rejected.
"""

from __future__ import annotations

import json
import math
import re
import sys
from dataclasses import asdict, dataclass
from pathlib import Path
from typing import Any, Dict, Iterable, List

import numpy as np

if sys.version_info >= (3, 11):
    import tomllib
else:
    import tomli as tomllib

from .calibration import CalibrationResult, CostSurface, DriftEstimate, SearchSpec
from .errors import ConfigError, StreamFormatError
from .geometry import ScanPattern
from .scene import Box, Plane, Scene
from .simulator import MisalignmentSpec, NoiseSpec, RangeStream

STREAM_HEADER = "frame,pulse,range_m"
SURFACE_HEADER = "m,k,cost,valid_pairs"

PATTERN_DEFAULTS = dict(
    rows=64,
    k_design=450,
    theta_range=[-0.35, 0.35],
    phi_range=[-0.25, 0.25],
    delta_t=1e-6,
    serpentine=True,
    frame_period_laser=None,
)
MISALIGNMENT_DEFAULTS = dict(m_start=0, drift_pulses_per_frame=0.0, k_true=None)
NOISE_DEFAULTS = dict(range_sigma=0.0, range_sigma_rel=0.02, dropout_prob=0.01, seed=0)
SEARCH_DEFAULTS = dict(m_max=49, k_min=None, k_max=None, min_valid_pairs=1, degeneracy_ratio=0.02)
RUN_DEFAULTS = dict(n_frames=1, output_dir="out")
SCENE_KEYS = {"file", "background_range", "plane", "box"}
SECTIONS = {
    "scene": SCENE_KEYS,
    "pattern": set(PATTERN_DEFAULTS),
    "misalignment": set(MISALIGNMENT_DEFAULTS),
    "noise": set(NOISE_DEFAULTS),
    "search": set(SEARCH_DEFAULTS),
    "run": set(RUN_DEFAULTS),
}


@dataclass
class RunConfig:
    scene: Scene
    pattern: ScanPattern
    misalignment: MisalignmentSpec
    noise: NoiseSpec
    search: SearchSpec
    n_frames: int = 1
    output_dir: Path = Path("out")
    scene_file: Path | None = None


def _fmt(v: float) -> str:
    """Fixed 9-significant-digit formatting; negative zero is printed as 0."""
    return format(float(v) + 0.0, ".9g")


# ---------------------------------------------------------------- config


def _key_line(text: str | None, section: str, key: str | None) -> int | None:
    """Best-effort line number of ``key`` inside ``[section]`` (or of the section header)."""
    if not text:
        return None
    current = None
    header_line = None
    for no, raw in enumerate(text.splitlines(), 1):
        line = raw.split("#", 1)[0].strip()
        m = re.match(r"^\[\[?\s*([\w.]+)\s*\]\]?$", line)
        if m:
            current = m.group(1).split(".")[0]
            if current == section and header_line is None:
                header_line = no
            continue
        if current == section and key and re.match(rf"^{re.escape(key)}\s*=", line):
            return no
    return header_line


def _toml_error_line(exc: Exception) -> int | None:
    line = getattr(exc, "lineno", None)
    if line is None:
        m = re.search(r"line (\d+)", str(exc))
        line = int(m.group(1)) if m else None
    return line


def _parse_value(raw: str) -> Any:
    try:
        return tomllib.loads(f"v = {raw}")["v"]
    except tomllib.TOMLDecodeError:
        return raw


def apply_overrides(doc: Dict[str, Any], overrides: Iterable[str]) -> Dict[str, Any]:
    """Apply ``section.key=value`` overrides (values parsed as TOML literals)."""
    for item in overrides:
        if "=" not in item or "." not in item.split("=", 1)[0]:
            raise ConfigError(f"override {item!r} must look like section.key=value")
        path, raw = item.split("=", 1)
        section, key = path.strip().split(".", 1)
        doc.setdefault(section, {})[key] = _parse_value(raw.strip())
    return doc


def _check_keys(doc, text):
    for section, body in doc.items():
        if section not in SECTIONS:
            raise ConfigError(f"unknown section '{section}'", field=section, line=_key_line(text, section, None))
        if not isinstance(body, dict):
            raise ConfigError("expected a table", field=section)
        for key in body:
            if key not in SECTIONS[section]:
                raise ConfigError(f"unknown key '{key}' in [{section}]", field=f"{section}.{key}",
                                  line=_key_line(text, section, key))


def _triple(value, name):
    if not isinstance(value, (list, tuple)) or len(value) != 3:
        raise ConfigError("expected a list of 3 numbers", field=name)
    return tuple(float(v) for v in value)


def scene_from_dict(body: Dict[str, Any], text: str | None = None, section: str = "scene") -> Scene:
    prims = []
    for i, p in enumerate(body.get("plane", [])):
        name = f"{section}.plane[{i}]"
        extra = set(p) - {"normal", "offset"}
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)}", field=name, line=_key_line(text, section, sorted(extra)[0]))
        try:
            prims.append(Plane(_triple(p["normal"], name + ".normal"), float(p["offset"])))
        except KeyError as exc:
            raise ConfigError(f"missing key {exc}", field=name) from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), field=name) from None
    for i, b in enumerate(body.get("box", [])):
        name = f"{section}.box[{i}]"
        extra = set(b) - {"min", "max"}
        if extra:
            raise ConfigError(f"unknown key(s) {sorted(extra)}", field=name, line=_key_line(text, section, sorted(extra)[0]))
        try:
            prims.append(Box(_triple(b["min"], name + ".min"), _triple(b["max"], name + ".max")))
        except KeyError as exc:
            raise ConfigError(f"missing key {exc}", field=name) from None
        except (TypeError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc), field=name) from None
    bg = body.get("background_range")
    try:
        return Scene(tuple(prims), None if bg is None else float(bg))
    except ValueError as exc:
        raise ConfigError(str(exc), field=f"{section}.background_range") from None


def load_scene(path) -> Scene:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read scene file {path}: {exc}", field="scene.file") from None
    try:
        body = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(f"{path}: {exc}", line=_toml_error_line(exc)) from None
    extra = set(body) - (SCENE_KEYS - {"file"})
    if extra:
        raise ConfigError(f"{path}: unknown key(s) {sorted(extra)}", field=sorted(extra)[0])
    return scene_from_dict(body, text)


def _build(ctor, section, kwargs, text):
    """Construct a component, mapping its ValueError onto the offending field."""
    try:
        return ctor(**kwargs)
    except (TypeError, ValueError) as exc:
        msg = str(exc)
        name = next((k for k in kwargs if re.match(rf"^{re.escape(k)}\b", msg)), None)
        if name is None:
            name = next((k for k in kwargs if k in msg), None)
        raise ConfigError(msg, field=f"{section}.{name}" if name else section,
                          line=_key_line(text, section, name)) from None


def config_from_dict(doc: Dict[str, Any], text: str | None = None, base_dir=None) -> RunConfig:
    """Validate a config mapping into a :class:`RunConfig`."""
    _check_keys(doc, text)
    base = Path(base_dir) if base_dir is not None else Path.cwd()

    scene_body = doc.get("scene", {})
    scene_file = None
    if "file" in scene_body:
        if set(scene_body) - {"file"}:
            raise ConfigError("scene.file cannot be combined with inline primitives", field="scene.file",
                              line=_key_line(text, "scene", "file"))
        scene_file = (base / scene_body["file"]).resolve()
        if not scene_file.is_file():
            raise ConfigError(f"scene file {scene_file} does not exist", field="scene.file",
                              line=_key_line(text, "scene", "file"))
        scene = load_scene(scene_file)
    else:
        scene = scene_from_dict(scene_body, text)

    p = {**PATTERN_DEFAULTS, **doc.get("pattern", {})}
    pattern = _build(ScanPattern, "pattern", p, text)

    mis = {**MISALIGNMENT_DEFAULTS, **doc.get("misalignment", {})}
    misalignment = _build(MisalignmentSpec, "misalignment", mis, text)

    nz = {**NOISE_DEFAULTS, **doc.get("noise", {})}
    nz["rng_seed"] = nz.pop("seed")
    try:
        noise = _build(NoiseSpec, "noise", nz, text)
    except ConfigError as exc:
        if exc.field == "noise.rng_seed":
            raise ConfigError(str(exc).split("] ", 1)[-1], field="noise.seed") from None
        raise

    s = {**SEARCH_DEFAULTS, **doc.get("search", {})}
    k_min = pattern.k_design - 5 if s["k_min"] is None else s["k_min"]
    k_max = pattern.k_design + 5 if s["k_max"] is None else s["k_max"]
    if k_max > pattern.pulses_per_frame:
        raise ConfigError("k_max exceeds pulses per frame", field="search.k_max", line=_key_line(text, "search", "k_max"))
    checks = [
        ("m_max", s["m_max"] >= 0, "m_max must be >= 0"),
        ("k_min", k_min >= 2, "k_min must be >= 2"),
        ("k_max", k_max >= k_min, "k_max must be >= k_min"),
        ("min_valid_pairs", s["min_valid_pairs"] >= 1, "min_valid_pairs must be >= 1"),
        ("degeneracy_ratio", s["degeneracy_ratio"] >= 0, "degeneracy_ratio must be >= 0"),
    ]
    for name, ok, msg in checks:
        if not ok:
            raise ConfigError(msg, field=f"search.{name}", line=_key_line(text, "search", name))
    search = SearchSpec((0, s["m_max"]), (k_min, k_max), s["min_valid_pairs"], s["degeneracy_ratio"])

    run = {**RUN_DEFAULTS, **doc.get("run", {})}
    if not isinstance(run["n_frames"], int) or run["n_frames"] < 1:
        raise ConfigError("n_frames must be an integer >= 1", field="run.n_frames", line=_key_line(text, "run", "n_frames"))
    return RunConfig(scene, pattern, misalignment, noise, search, run["n_frames"],
                     Path(run["output_dir"]), scene_file)


def parse_config(text: str, base_dir=None, overrides: Iterable[str] = ()) -> RunConfig:
    """Parse and validate a TOML config document. Relative paths resolve against ``base_dir``."""
    try:
        doc = tomllib.loads(text)
    except tomllib.TOMLDecodeError as exc:
        raise ConfigError(str(exc), line=_toml_error_line(exc)) from None
    return config_from_dict(apply_overrides(doc, overrides), text, base_dir)


def load_config(path, overrides: Iterable[str] = ()) -> RunConfig:
    path = Path(path)
    try:
        text = path.read_text()
    except OSError as exc:
        raise ConfigError(f"cannot read config {path}: {exc}") from None
    return parse_config(text, path.parent, overrides)


# ---------------------------------------------------------------- range streams


def write_range_stream(stream: RangeStream, path) -> None:
    """CSV with one row per pulse; an empty ``range_m`` is an invalid echo.

    Ranges use shortest round-trip float formatting so reading back is lossless.
    """
    lines = [
        "# memscal range stream",
        f"# delta_t={stream.delta_t!r}",
        f"# pulses_per_frame={stream.pulses_per_frame}",
        STREAM_HEADER,
    ]
    for j, frame in enumerate(stream.frames):
        lines.extend(f"{j},{i}," if math.isnan(r) else f"{j},{i},{r!r}" for i, r in enumerate(frame.tolist()))
    Path(path).write_text("\n".join(lines) + "\n")


def read_range_stream(path) -> RangeStream:
    meta: Dict[str, str] = {}
    rows: List[float] = []
    header_seen = False
    expected = (0, 0)
    ppf = None
    with open(path) as fh:
        for no, raw in enumerate(fh, 1):
            line = raw.strip()
            if not line:
                continue
            if line.startswith("#"):
                if "=" in line:
                    k, v = line[1:].split("=", 1)
                    meta[k.strip()] = v.strip()
                continue
            if not header_seen:
                if line != STREAM_HEADER:
                    raise StreamFormatError(f"expected header {STREAM_HEADER!r}", no)
                header_seen = True
                try:
                    ppf = int(meta["pulses_per_frame"])
                    delta_t = float(meta["delta_t"])
                except (KeyError, ValueError):
                    raise StreamFormatError("missing or invalid delta_t / pulses_per_frame comment", no) from None
                if ppf < 1:
                    raise StreamFormatError("pulses_per_frame must be >= 1", no)
                continue
            parts = line.split(",")
            if len(parts) != 3:
                raise StreamFormatError(f"expected 3 fields, got {len(parts)}", no)
            try:
                j, i = int(parts[0]), int(parts[1])
                r = float(parts[2]) if parts[2] else math.nan
            except ValueError:
                raise StreamFormatError(f"non-numeric field in {line!r}", no) from None
            if (j, i) != expected:
                raise StreamFormatError(f"expected frame {expected[0]} pulse {expected[1]}, got {j},{i}", no)
            if r < 0 or math.isinf(r):
                raise StreamFormatError(f"invalid range {parts[2]!r}", no)
            rows.append(r)
            expected = (j, i + 1) if i + 1 < ppf else (j + 1, 0)
    if not header_seen:
        raise StreamFormatError("missing header")
    if expected[1] != 0 or not rows:
        raise StreamFormatError("stream ends with an incomplete frame")
    return RangeStream(np.asarray(rows).reshape(-1, ppf), delta_t)


# ---------------------------------------------------------------- point clouds

CLOUD_FORMATS = {"xyz": ".xyz", "ply": ".ply"}


def write_point_cloud(points, path, fmt: str | None = None) -> None:
    """Write an (N, 3) cloud as plain ``x y z`` lines or ASCII PLY."""
    path = Path(path)
    suffix = path.suffix.lower()
    if fmt is None:
        fmt = suffix.lstrip(".")
    if fmt not in CLOUD_FORMATS:
        raise ValueError(f"unsupported point cloud format {fmt!r}")
    if suffix != CLOUD_FORMATS[fmt]:
        raise ValueError(f"path {path} does not end in {CLOUD_FORMATS[fmt]}")
    pts = np.asarray(points, dtype=float).reshape(-1, 3)
    body = [f"{_fmt(x)} {_fmt(y)} {_fmt(z)}" for x, y, z in pts.tolist()]
    if fmt == "ply":
        body = [
            "ply",
            "format ascii 1.0",
            f"element vertex {len(pts)}",
            "property float x",
            "property float y",
            "property float z",
            "end_header",
        ] + body
    try:
        path.write_text("\n".join(body) + ("\n" if body else ""))
    except OSError as exc:
        raise OSError(f"cannot write point cloud {path}: {exc}") from exc


def read_point_cloud(path) -> np.ndarray:
    """Read back a cloud written by :func:`write_point_cloud`."""
    lines = Path(path).read_text().splitlines()
    if lines and lines[0] == "ply":
        end = lines.index("end_header")
        lines = lines[end + 1:]
    if not lines:
        return np.zeros((0, 3))
    return np.array([[float(v) for v in ln.split()] for ln in lines]).reshape(-1, 3)


# ---------------------------------------------------------------- cost surfaces


def write_cost_surface(surface: CostSurface, path) -> None:
    lines = [SURFACE_HEADER]
    for a, m in enumerate(surface.m_values):
        for b, k in enumerate(surface.k_values):
            c = surface.cost[a, b]
            lines.append(f"{m},{k},{'' if math.isnan(c) else _fmt(c)},{int(surface.valid_pairs[a, b])}")
    try:
        Path(path).write_text("\n".join(lines) + "\n")
    except OSError as exc:
        raise OSError(f"cannot write cost surface {path}: {exc}") from exc


def read_cost_surface(path) -> CostSurface:
    entries = {}
    with open(path) as fh:
        header = fh.readline().strip()
        if header != SURFACE_HEADER:
            raise StreamFormatError(f"expected header {SURFACE_HEADER!r}", 1)
        for no, raw in enumerate(fh, 2):
            line = raw.strip()
            if not line:
                continue
            parts = line.split(",")
            try:
                m, k, c, n = int(parts[0]), int(parts[1]), parts[2], int(parts[3])
                entries[m, k] = (float(c) if c else math.nan, n)
            except (ValueError, IndexError):
                raise StreamFormatError(f"malformed row {line!r}", no) from None
    ms = np.array(sorted({m for m, _ in entries}))
    ks = np.array(sorted({k for _, k in entries}))
    if len(entries) != ms.size * ks.size:
        raise StreamFormatError("cost surface is not a full (m, k) grid")
    cost = np.array([[entries[m, k][0] for k in ks] for m in ms])
    pairs = np.array([[entries[m, k][1] for k in ks] for m in ms], dtype=np.int64)
    return CostSurface(ms, ks, cost, pairs)


# ---------------------------------------------------------------- reports


def write_truth(cfg: RunConfig, path) -> None:
    """Ground-truth sidecar for a simulated stream."""
    k_true = cfg.misalignment.resolve_k(cfg.pattern)
    offsets = [cfg.misalignment.offset(j) for j in range(cfg.n_frames)]
    truth = {
        "m_start": cfg.misalignment.m_start,
        "k_true": k_true,
        "drift_pulses_per_frame": cfg.misalignment.drift_pulses_per_frame,
        "t_s": cfg.misalignment.m_start * cfg.pattern.delta_t,
        "t_e": cfg.misalignment.drift_pulses_per_frame * cfg.pattern.delta_t,
        "offsets": offsets,
        "delta_t": cfg.pattern.delta_t,
        "pulses_per_frame": cfg.pattern.pulses_per_frame,
        "noise": asdict(cfg.noise),
    }
    Path(path).write_text(json.dumps(truth, indent=2) + "\n")


def calibration_summary(result: CalibrationResult) -> Dict[str, Any]:
    return {
        "m_star": result.m_star,
        "k_star": result.k_star,
        "t_s": result.t_s,
        "degenerate": result.degenerate,
        "best_cost": result.best_cost,
        "runner_up_cost": None if math.isnan(result.runner_up_cost) else result.runner_up_cost,
    }


def write_drift_report(est: DriftEstimate, path) -> None:
    lines = [
        f"t_e = {_fmt(est.t_e)}",
        f"signed_slope = {_fmt(est.signed_slope)}",
        f"k_star = {est.k_star}",
        "m_track = " + " ".join(str(m) for m in est.m_track),
        "frames = " + " ".join(str(j) for j in est.frames),
        "excluded_frames = " + " ".join(str(j) for j in est.excluded_frames),
        "degenerate_frames = " + " ".join(str(j) for j in est.degenerate_frames),
    ]
    Path(path).write_text("\n".join(lines) + "\n")

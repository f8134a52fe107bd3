"""Experiment harness: config parsing, sweeps, CSV/JSON/SVG artifacts.

Config files are UTF-8 ``key = value`` lines; ``#`` starts a comment.
Lists are comma separated. Background terms are written ``const:<v>``,
``re:<k>:<coef>`` (coef * Re z^k) and ``im:<k>:<coef>`` (coef * Im z^k).

Keys and defaults::

    r1 = 1.0                 r2 = 1.0
    eps = 0.0156             eps_list = ...      (mutually exclusive)
    M = 256                  M_list = ...        (mutually exclusive)
    conductivity = perfect   (perfect | insulated)
    method = augmented       (standard | augmented | oracle)
    H = re:1:1.0             (empty value means H = 0)
    series_tol = 1e-13       series_max_terms = 10000
    oversample = 1           (positive int, or auto)
    bbox = auto              (x1min, x1max, x2min, x2max)
    resolution = 241         contours = 30       svd_count = 20
    name = run
"""

from __future__ import annotations

import csv
import json
import math
import time
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import asdict, dataclass, field, fields
from pathlib import Path

import numpy as np

from .background import HarmonicPolynomial
from .geometry import GeometryError, axis_config
from .images import (SeriesTruncationWarning, flux_from_densities, reference_flux,
                     relative_L2_error, relative_Linf_error, series_densities)
from .singular import stress_intensity
from .solver import (AUGMENTED, INSULATED, PERFECT, STANDARD, SolutionField, assemble,
                     boundary_flux, eval_u, rhs_augmented, rhs_standard, solve_field,
                     svd_projections)

ORACLE = "oracle"

EPS_SWEEP_COLUMNS = ("eps", "M", "rel_err_standard", "rel_err_augmented")
GRID_SWEEP_COLUMNS = ("M", "rel_l2_std", "rel_l2_aug", "rel_inf_std", "rel_inf_aug",
                      "argmax_node_std", "argmax_node_aug")
CONDITION_COLUMNS = ("eps", "sigma_min", "sigma_max", "cond")
PROJECTION_COLUMNS = ("rank_from_smallest", "sigma", "proj_rhs_std", "proj_rhs_aug",
                      "proj_res_std", "proj_res_aug")
FIELD_COLUMNS = ("x1", "x2", "u", "masked")


class ConfigError(ValueError):
    def __init__(self, message: str, line: int | None = None):
        self.line = line
        super().__init__(f"line {line}: {message}" if line is not None else message)


# ---------------------------------------------------------------- config

@dataclass(frozen=True)
class ExperimentConfig:
    r1: float = 1.0
    r2: float = 1.0
    eps: tuple[float, ...] = (0.0156,)
    M: tuple[int, ...] = (256,)
    conductivity: str = PERFECT
    method: str = AUGMENTED
    H: HarmonicPolynomial = HarmonicPolynomial.linear(1.0, 0.0)
    series_tol: float = 1e-13
    series_max_terms: int = 10_000
    oversample: int | str = 1
    bbox: tuple[float, float, float, float] | None = None
    resolution: int = 241
    contours: int = 30
    svd_count: int = 20
    name: str = "run"

    def __post_init__(self):
        validate_config(self)

    def box(self) -> tuple[float, float, float, float]:
        """Explicit bbox, or one reaching a radius beyond both disks at the largest eps."""
        if self.bbox is not None:
            return self.bbox
        cfg = axis_config(self.r1, self.r2, max(self.eps))
        pad = max(self.r1, self.r2)
        return (float(cfg.c1[0] - self.r1 - pad), float(cfg.c2[0] + self.r2 + pad),
                -(max(self.r1, self.r2) + pad), max(self.r1, self.r2) + pad)

    def to_dict(self) -> dict:
        d = {f.name: getattr(self, f.name) for f in fields(self)}
        d["H"] = format_H(self.H)
        d["eps"], d["M"] = list(self.eps), list(self.M)
        d["bbox"] = list(self.bbox) if self.bbox is not None else None
        return d

    @classmethod
    def from_dict(cls, d: dict) -> "ExperimentConfig":
        d = dict(d)
        d["H"] = parse_H(d["H"])
        d["eps"] = tuple(float(v) for v in d["eps"])
        d["M"] = tuple(int(v) for v in d["M"])
        if d.get("bbox") is not None:
            d["bbox"] = tuple(float(v) for v in d["bbox"])
        return cls(**d)


def validate_config(c: ExperimentConfig):
    if not (c.r1 > 0 and c.r2 > 0):
        raise ConfigError("radii must be positive")
    if not c.eps:
        raise ConfigError("at least one eps is required")
    for e in c.eps:
        if not (e > 0 and math.isfinite(e)):
            raise ConfigError(f"eps must be positive and finite, got {e!r}")
    if not c.M:
        raise ConfigError("at least one M is required")
    for m in c.M:
        if m < 8 or m % 2:
            raise ConfigError(f"M must be even and >= 8, got {m}")
    if c.conductivity not in (PERFECT, INSULATED):
        raise ConfigError(f"unknown conductivity {c.conductivity!r}")
    if c.method not in (STANDARD, AUGMENTED, ORACLE):
        raise ConfigError(f"unknown method {c.method!r}")
    if c.method == ORACLE and c.conductivity != PERFECT:
        raise ConfigError("the image-series oracle covers the perfect conductor only")
    if not (0 < c.series_tol < 1):
        raise ConfigError("series_tol must lie in (0, 1)")
    if c.series_max_terms < 1:
        raise ConfigError("series_max_terms must be >= 1")
    if not (c.oversample == "auto" or (isinstance(c.oversample, int) and c.oversample >= 1)):
        raise ConfigError(f"oversample must be a positive integer or 'auto', got {c.oversample!r}")
    if c.resolution < 2 or c.contours < 1 or c.svd_count < 1:
        raise ConfigError("resolution >= 2, contours >= 1 and svd_count >= 1 are required")
    if c.bbox is not None:
        x0, x1, y0, y1 = c.bbox
        if not (x0 < x1 and y0 < y1):
            raise ConfigError("bbox must be (x1min, x1max, x2min, x2max) with min < max")
        for e in c.eps:
            cfg = axis_config(c.r1, c.r2, e)
            for d in cfg.disks:
                cx, cy = d.center
                if cx - d.radius < x0 or cx + d.radius > x1 or cy - d.radius < y0 or cy + d.radius > y1:
                    raise ConfigError(f"bbox does not enclose both disks at eps={e!r}")


def parse_H(text: str) -> HarmonicPolynomial:
    """'re:1:2.0, re:2:1.0' -> 2 x1 + (x1^2 - x2^2); empty text -> H = 0."""
    const, terms = 0.0, {}
    for tok in filter(None, (t.strip() for t in text.split(","))):
        parts = [p.strip() for p in tok.split(":")]
        try:
            if parts[0] == "const" and len(parts) == 2:
                const += float(parts[1])
                continue
            if parts[0] not in ("re", "im") or len(parts) != 3:
                raise ValueError
            k, coef = int(parts[1]), float(parts[2])
        except ValueError:
            raise ValueError(f"malformed H term {tok!r}") from None
        if k < 1:
            raise ValueError(f"degree must be >= 1 in {tok!r}")
        re, im = terms.get(k, (0.0, 0.0))
        terms[k] = (re + coef, im) if parts[0] == "re" else (re, im + coef)
    return HarmonicPolynomial(const, tuple((k, a, b) for k, (a, b) in sorted(terms.items())))


def format_H(H: HarmonicPolynomial) -> str:
    out = [f"const:{H.constant!r}"] if H.constant != 0.0 else []
    for k, a, b in H.terms:
        if a != 0.0:
            out.append(f"re:{k}:{a!r}")
        if b != 0.0:
            out.append(f"im:{k}:{b!r}")
    return ", ".join(out)


def _floats(v: str) -> tuple[float, ...]:
    return tuple(float(s) for s in v.split(",") if s.strip())


def _ints(v: str) -> tuple[int, ...]:
    return tuple(int(s) for s in v.split(",") if s.strip())


def _oversample(v: str):
    return "auto" if v.strip() == "auto" else int(v)


def _bbox(v: str):
    if v.strip() == "auto":
        return None
    b = _floats(v)
    if len(b) != 4:
        raise ValueError("bbox needs four numbers")
    return b


_PARSERS = {
    "r1": ("r1", float), "r2": ("r2", float),
    "eps": ("eps", lambda v: (float(v),)), "eps_list": ("eps", _floats),
    "M": ("M", lambda v: (int(v),)), "M_list": ("M", _ints),
    "conductivity": ("conductivity", str.strip), "method": ("method", str.strip),
    "H": ("H", parse_H),
    "series_tol": ("series_tol", float), "series_max_terms": ("series_max_terms", int),
    "oversample": ("oversample", _oversample), "bbox": ("bbox", _bbox),
    "resolution": ("resolution", int), "contours": ("contours", int),
    "svd_count": ("svd_count", int), "name": ("name", str.strip),
}


def parse_config(text: str) -> ExperimentConfig:
    values, origin = {}, {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"expected 'key = value', got {line!r}", lineno)
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _PARSERS:
            raise ConfigError(f"unknown key {key!r}", lineno)
        target, conv = _PARSERS[key]
        if target in values:
            prev = origin[target]
            what = "conflicts with" if prev[1] != key else "repeats"
            raise ConfigError(f"{key!r} {what} {prev[1]!r} from line {prev[0]}", lineno)
        try:
            values[target] = conv(value)
        except ValueError as exc:
            raise ConfigError(f"bad value for {key!r}: {exc}", lineno) from None
        origin[target] = (lineno, key)
    try:
        return ExperimentConfig(**values)
    except (ConfigError, GeometryError) as exc:
        # attribute invariant failures to the most relevant line when possible
        line = None
        msg = str(exc)
        for target in ("bbox", "eps", "M", "oversample", "conductivity", "method"):
            if target in origin and (target in msg or target.lower() in msg.lower()):
                line = origin[target][0]
                break
        raise ConfigError(msg, line) from None


def load_config(path) -> ExperimentConfig:
    return parse_config(Path(path).read_text(encoding="utf-8"))


# ---------------------------------------------------------------- records

@dataclass
class RunRecord:
    kind: str
    inputs: dict
    columns: list[str]
    rows: list[list] = field(default_factory=list)
    extra: dict = field(default_factory=dict)
    failures: list[str] = field(default_factory=list)
    timings: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return not self.failures

    def to_json(self) -> str:
        return json.dumps(asdict(self), indent=1, allow_nan=True, default=_plain)

    @classmethod
    def from_json(cls, text: str) -> "RunRecord":
        return cls(**json.loads(text))


def _plain(o):
    if isinstance(o, (np.generic, np.ndarray)):
        return o.tolist()
    raise TypeError(f"cannot serialize {type(o).__name__}")


def _num(v):
    """Python scalars for JSON; keeps exact float values."""
    if isinstance(v, (np.floating, float)):
        return float(v)
    if isinstance(v, (np.integer, int)) and not isinstance(v, bool):
        return int(v)
    return v


def write_csv(path, columns, rows):
    path = Path(path)
    path.parent.mkdir(parents=True, exist_ok=True)
    with path.open("w", newline="", encoding="utf-8") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(columns)
        for row in rows:
            # repr gives the shortest string that round-trips a float
            w.writerow([repr(float(v)) if isinstance(v, float) else v for v in row])


def read_csv(path) -> tuple[list[str], list[list[str]]]:
    with Path(path).open(newline="", encoding="utf-8") as fh:
        r = list(csv.reader(fh))
    return r[0], r[1:]


def _map(fn, items, threads: int):
    if threads <= 1 or len(items) <= 1:
        return [fn(it) for it in items]
    with ThreadPoolExecutor(max_workers=threads) as pool:
        return list(pool.map(fn, items))  # map preserves input order


def _guarded(fn):
    def run(arg):
        try:
            with warnings.catch_warnings():
                warnings.simplefilter("error", SeriesTruncationWarning)
                return fn(arg), None
        except (ValueError, ArithmeticError, np.linalg.LinAlgError, SeriesTruncationWarning) as exc:
            return None, f"{arg!r}: {type(exc).__name__}: {exc}"
    return run


def _flux_pair(fld: SolutionField):
    return boundary_flux(fld, 1), boundary_flux(fld, 2)


def _reference(c: ExperimentConfig, cfg, M):
    a = stress_intensity(cfg, c.H).a_perfect
    ref, reports = reference_flux(cfg, c.H, a, M, c.series_tol, c.series_max_terms)
    return ref, reports


# ---------------------------------------------------------------- runs

def run_eps_error_sweep(c: ExperimentConfig, threads: int = 1) -> RunRecord:
    """Relative L2 flux error of both representations against the image series."""
    M = c.M[0]
    rec = RunRecord("sweep-eps", c.to_dict(), list(EPS_SWEEP_COLUMNS))

    def one(eps):
        t0 = time.perf_counter()
        cfg = axis_config(c.r1, c.r2, eps)
        ref, reports = _reference(c, cfg, M)
        errs = []
        for mode in (STANDARD, AUGMENTED):
            fld, _ = solve_field(cfg, c.H, M, PERFECT, mode, oversample=c.oversample)
            errs.append(relative_L2_error(_flux_pair(fld), ref))
        return [eps, M, errs[0], errs[1]], [asdict(r) for r in reports], time.perf_counter() - t0

    for eps, (res, err) in zip(c.eps, _map(_guarded(one), list(c.eps), threads)):
        if err:
            rec.failures.append(err)
            rec.rows.append([eps, M, math.nan, math.nan])
            continue
        row, reports, dt = res
        rec.rows.append([_num(v) for v in row])
        rec.extra.setdefault("series_reports", {})[repr(eps)] = reports
        rec.timings[repr(eps)] = dt
    return rec


def run_grid_error_sweep(c: ExperimentConfig, threads: int = 1) -> RunRecord:
    eps = c.eps[0]
    cfg = axis_config(c.r1, c.r2, eps)
    rec = RunRecord("sweep-grid", c.to_dict(), list(GRID_SWEEP_COLUMNS))

    def one(M):
        t0 = time.perf_counter()
        ref, _ = _reference(c, cfg, M)
        l2, linf, arg = [], [], []
        for mode in (STANDARD, AUGMENTED):
            fld, _ = solve_field(cfg, c.H, M, PERFECT, mode, oversample=c.oversample)
            flux = _flux_pair(fld)
            l2.append(relative_L2_error(flux, ref))
            e, k = relative_Linf_error(flux, ref)
            linf.append(e)
            arg.append(k)
        return [M, l2[0], l2[1], linf[0], linf[1], arg[0], arg[1]], time.perf_counter() - t0

    for M, (res, err) in zip(c.M, _map(_guarded(one), list(c.M), threads)):
        if err:
            rec.failures.append(err)
            rec.rows.append([M] + [math.nan] * 4 + [-1, -1])
            continue
        row, dt = res
        rec.rows.append([_num(v) for v in row])
        rec.timings[str(M)] = dt
    # stacked node index -> (circle, node) for readers of the CSV
    rec.extra["gap_nodes"] = {str(M): [0, M + M // 2] for M in c.M}
    return rec


def run_condition_sweep(c: ExperimentConfig, threads: int = 1,
                        spectrum_eps: float = 0.002) -> RunRecord:
    M = c.M[0]
    rec = RunRecord("condition", c.to_dict(), list(CONDITION_COLUMNS))

    def one(eps):
        s = assemble(axis_config(c.r1, c.r2, eps), M, c.conductivity, c.oversample).singular_values
        return [eps, s[-1], s[0], s[0] / s[-1]]

    for eps, (res, err) in zip(c.eps, _map(_guarded(one), list(c.eps), threads)):
        if err:
            rec.failures.append(err)
            rec.rows.append([eps, math.nan, math.nan, math.nan])
        else:
            rec.rows.append([_num(v) for v in res])
    s = assemble(axis_config(c.r1, c.r2, spectrum_eps), M, c.conductivity, c.oversample).singular_values
    rec.extra["spectrum_eps"] = spectrum_eps
    rec.extra["singular_values"] = [float(v) for v in s]
    return rec


def run_projection_study(c: ExperimentConfig, threads: int = 1) -> RunRecord:
    """Projections of both right-hand sides, and of A x - Y with the series densities
    as x, onto the left singular vectors of the smallest singular values."""
    eps, M = c.eps[0], c.M[0]
    cfg = axis_config(c.r1, c.r2, eps)
    rec = RunRecord("projections", c.to_dict(), list(PROJECTION_COLUMNS))
    system = assemble(cfg, M, PERFECT, c.oversample)
    a = stress_intensity(cfg, c.H).a_perfect
    out = {}
    for mode, intensity in ((STANDARD, 0.0), (AUGMENTED, a)):
        rhs = rhs_standard(system, c.H) if mode == STANDARD else rhs_augmented(system, c.H, a, PERFECT)
        dens, _ = series_densities(cfg, c.H, intensity, M, c.series_tol, c.series_max_terms)
        x = np.concatenate([d.values for d in dens])
        out[mode] = svd_projections(system, rhs, c.svd_count, system.matrix @ x - rhs)
    for i, (std, aug) in enumerate(zip(out[STANDARD], out[AUGMENTED])):
        rec.rows.append([i, std[0], std[1], aug[1], std[2], aug[2]])
    rec.extra["intensity"] = a
    return rec


def field_grid(c: ExperimentConfig):
    x0, x1, y0, y1 = c.box()
    xs = np.linspace(x0, x1, c.resolution)
    ys = np.linspace(y0, y1, c.resolution)
    return xs, ys


def sample_field(fld: SolutionField, xs, ys, margin: float = 2.0):
    """u on the tensor grid; masked where inside a disk or within ``margin`` spacings."""
    X, Y = np.meshgrid(xs, ys)
    pts = np.stack([X, Y], axis=-1).reshape(-1, 2)
    masked = np.zeros(len(pts), dtype=bool)
    for dens in fld.densities:
        g = dens.grid
        inside = np.hypot(*(pts - g.disk.center).T) < g.disk.radius
        masked |= inside | (g.distance(pts) < margin * g.spacing)
    u = np.full(len(pts), np.nan)
    u[~masked] = eval_u(fld, pts[~masked], margin)
    shape = (len(ys), len(xs))
    return u.reshape(shape), masked.reshape(shape)


def contour_levels(u, masked, count: int) -> np.ndarray:
    """``count`` levels evenly spaced strictly between the unmasked min and max."""
    vals = u[~masked]
    return np.linspace(vals.min(), vals.max(), count + 2)[1:-1]


def trace_contours(u, masked, levels, xs, ys):
    from skimage.measure import find_contours
    img = np.where(masked, 0.0, u)
    out = []
    for lev in levels:
        for path in find_contours(img, lev, mask=~masked):
            # (row, col) -> physical (x1, x2)
            px = np.interp(path[:, 1], np.arange(len(xs)), xs)
            py = np.interp(path[:, 0], np.arange(len(ys)), ys)
            out.append((float(lev), np.column_stack([px, py])))
    return out


def write_svg(path, box, disks, curves, size: int = 600):
    x0, x1, y0, y1 = box
    s = size / max(x1 - x0, y1 - y0)
    W, Hh = (x1 - x0) * s, (y1 - y0) * s

    def tx(p):
        return (p[..., 0] - x0) * s, (y1 - p[..., 1]) * s

    lines = [
        '<?xml version="1.0" encoding="UTF-8"?>',
        f'<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{W:.1f}" height="{Hh:.1f}" '
        f'viewBox="0 0 {W:.3f} {Hh:.3f}">',
        f'<rect width="{W:.3f}" height="{Hh:.3f}" fill="white"/>',
    ]
    for d in disks:
        cx, cy = tx(np.asarray(d.center))
        lines.append(f'<circle cx="{cx:.3f}" cy="{cy:.3f}" r="{d.radius * s:.3f}" '
                     'fill="#dddddd" stroke="black" stroke-width="1"/>')
    for lev, pts in curves:
        px, py = tx(pts)
        coords = " ".join(f"{a:.2f},{b:.2f}" for a, b in zip(px, py))
        lines.append(f'<polyline data-level="{lev!r}" points="{coords}" fill="none" '
                     'stroke="#1f4e9c" stroke-width="0.8"/>')
    lines.append("</svg>")
    Path(path).parent.mkdir(parents=True, exist_ok=True)
    Path(path).write_text("\n".join(lines) + "\n", encoding="utf-8")


def run_level_curves(c: ExperimentConfig, out_dir=None) -> tuple[RunRecord, dict]:
    """Field samples and contour polylines for one panel.

    Returns the record plus the arrays (xs, ys, u, masked, curves); files are
    written when ``out_dir`` is given.
    """
    eps, M = c.eps[0], c.M[0]
    cfg = axis_config(c.r1, c.r2, eps)
    t0 = time.perf_counter()
    fld, report = solve_field(cfg, c.H, M, c.conductivity, AUGMENTED, oversample=c.oversample)
    xs, ys = field_grid(c)
    u, masked = sample_field(fld, xs, ys)
    levels = contour_levels(u, masked, c.contours)
    curves = trace_contours(u, masked, levels, xs, ys)
    rec = RunRecord("levels", c.to_dict(), list(FIELD_COLUMNS))
    rec.extra.update(levels=[float(v) for v in levels], box=list(c.box()),
                     n_masked=int(masked.sum()), n_curves=len(curves),
                     intensity=fld.intensity, residual=report.residual)
    if report.constants is not None:
        rec.extra["constants"] = list(report.constants)
    rec.timings["total"] = time.perf_counter() - t0
    arrays = dict(xs=xs, ys=ys, u=u, masked=masked, curves=curves, field=fld)
    if out_dir is not None:
        X, Y = np.meshgrid(xs, ys)
        rows = ([float(a), float(b), float(v), int(m)]
                for a, b, v, m in zip(X.ravel(), Y.ravel(), u.ravel(), masked.ravel()))
        write_csv(Path(out_dir) / f"{c.name}_field.csv", FIELD_COLUMNS, rows)
        write_svg(Path(out_dir) / f"{c.name}.svg", c.box(), cfg.disks, curves)
    return rec, arrays


def run_solve(c: ExperimentConfig) -> tuple[RunRecord, list[list]]:
    """One configuration: densities, boundary flux, constants and diagnostics.

    The second return value holds per-node rows (circle, node, theta, density, flux).
    """
    eps, M = c.eps[0], c.M[0]
    cfg = axis_config(c.r1, c.r2, eps)
    si = stress_intensity(cfg, c.H)
    rec = RunRecord("solve", c.to_dict(), ["circle", "node", "theta", "density", "flux"])
    t0 = time.perf_counter()
    if c.method == ORACLE:
        dens, reports = series_densities(cfg, c.H, si.a_perfect, M, c.series_tol, c.series_max_terms)
        flux = flux_from_densities(cfg, dens, si.a_perfect)
        rec.extra["series_reports"] = [asdict(r) for r in reports]
    else:
        fld, report = solve_field(cfg, c.H, M, c.conductivity, c.method, compute_svd=True,
                                  oversample=c.oversample)
        dens = fld.densities
        flux = _flux_pair(fld)
        rec.extra.update(residual=report.residual, condition_number=report.condition_number,
                         sigma_min=float(report.singular_values[-1]),
                         mean_removed=list(report.mean_removed), oversample=fld.system.oversample)
        if report.constants is not None:
            rec.extra["constants"] = list(report.constants)
        if c.conductivity == PERFECT:
            ref, _ = _reference(c, cfg, M)
            rec.extra["rel_err_vs_oracle"] = relative_L2_error(flux, ref)
    rec.extra.update(a_perfect=si.a_perfect, a_insulated=si.a_insulated,
                     p1=list(map(float, cfg.p1)), p2=list(map(float, cfg.p2)))
    rec.timings["total"] = time.perf_counter() - t0
    rows = []
    for j, (d, f) in enumerate(zip(dens, flux), start=1):
        for k in range(M):
            rows.append([j, k, float(d.grid.theta[k]), float(d.values[k]), float(f[k])])
    return rec, rows

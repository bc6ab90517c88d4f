"""lambda-sweeps: measured threshold eigenvalues against predicted rates."""

from __future__ import annotations

import csv
import io
import json
import math
import os
import warnings
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from pathlib import Path

import numpy as np

from .errors import ConditionsViolated, ConfigError, InsufficientData, NotFound, ThresholdLabError
from .potential import PiecewisePotential, ScalingFamily, alpha_at, load_json
from .quasimode import Quasimode, build_quasimode
from .resonance import DEFAULT_TOL, HalfBoundState, detect_resonance
from .spectrum import ScaledProblem, threshold_eigenvalue
from .threshold import ThresholdPrediction, predict

CSV_COLUMNS = ("lambda", "alpha", "e_measured", "e_predicted", "ratio", "omega", "residual_ratio", "status")
DEFAULT_K_TOL = 0.05
TREND_SLACK = 1e-3


# configuration ---------------------------------------------------------------------


@dataclass(frozen=True)
class Experiment:
    U: PiecewisePotential
    V: PiecewisePotential
    scaling: ScalingFamily
    lambdas: tuple[float, ...]
    case: str = "auto"
    k_tol: float = DEFAULT_K_TOL
    resonance_tol: float = DEFAULT_TOL
    output: str | None = None
    output_format: str = "json"
    force: bool = False
    name: str = ""

    @classmethod
    def from_config(cls, source, **overrides) -> Experiment:
        cfg = load_json(source)
        base = Path(source).parent if not isinstance(source, dict) else Path(".")
        if not isinstance(cfg, dict):
            raise ConfigError("experiment config must be a JSON object")

        def part(key, loader):
            if key not in cfg:
                raise ConfigError(f"experiment config lacks {key!r}")
            val = cfg[key]
            if isinstance(val, str):
                val = load_json(base / val)
            return loader(val)

        U = part("U", PiecewisePotential.from_dict)
        V = part("V", PiecewisePotential.from_dict)
        scaling_cfg = cfg.get("scaling")
        if isinstance(scaling_cfg, str):
            scaling_cfg = load_json(base / scaling_cfg)
        if scaling_cfg is None:
            raise ConfigError("experiment config lacks 'scaling'")
        if "epsilon" in cfg:
            scaling_cfg = dict(scaling_cfg, epsilon=cfg["epsilon"])
        F = ScalingFamily.from_dict(scaling_cfg)
        lambdas = lambda_grid(cfg.get("lambda_grid", {}))
        tol = cfg.get("tolerances", {}) or {}
        out = cfg.get("output", {}) or {}
        if isinstance(out, str):
            out = {"path": out}
        fmt = out.get("format") or (Path(out["path"]).suffix.lstrip(".") if out.get("path") else "json")
        case = str(cfg.get("case", "auto")).lower()
        if case not in ("auto", "t1", "t2", "t3", "t4"):
            raise ConfigError(f"unknown case {case!r}")
        try:
            exp = cls(U, V, F, lambdas, case, float(tol.get("k_relative", DEFAULT_K_TOL)),
                      float(tol.get("resonance", DEFAULT_TOL)), out.get("path"), fmt,
                      bool(cfg.get("force", False)), str(cfg.get("name", "")))
        except (TypeError, ValueError) as exc:
            raise ConfigError(str(exc)) from exc
        exp = exp.with_overrides(**overrides)
        if exp.output_format not in ("json", "csv"):
            raise ConfigError(f"unknown output format {exp.output_format!r}")
        return exp

    def with_overrides(self, **kw) -> Experiment:
        kw = {k: v for k, v in kw.items() if v is not None}
        if not kw:
            return self
        d = dict(self.__dict__)
        d.update(kw)
        return Experiment(**d)


def lambda_grid(spec: dict) -> tuple[float, ...]:
    """Geometric grid from lambda max down to min (default 8 points per decade)."""
    try:
        hi = float(spec.get("max", 1e-2))
        lo = float(spec.get("min", 1e-5))
        if not (0 < lo < hi):
            raise ConfigError(f"lambda grid needs 0 < min < max, got min={lo}, max={hi}")
        if "points" in spec:
            n = int(spec["points"])
        else:
            n = int(round(float(spec.get("points_per_decade", 8)) * math.log10(hi / lo))) + 1
    except (TypeError, ValueError, AttributeError) as exc:
        raise ConfigError(f"bad lambda grid: {exc}") from exc
    if n < 3:
        raise ConfigError("lambda grid needs at least 3 points")
    return tuple(float(x) for x in np.geomspace(hi, lo, n))


# reports ---------------------------------------------------------------------------


@dataclass
class SweepRow:
    lam: float
    alpha: float
    e_measured: float = math.nan
    e_predicted: float = math.nan
    ratio: float = math.nan
    omega: float = math.nan
    residual_ratio: float = math.nan
    status: str = "ok"
    k_lambda: float = math.nan
    certificate_radius: float = math.nan
    message: str = ""
    diagnostics: dict = field(default_factory=dict)

    @property
    def ok(self) -> bool:
        return self.status == "ok"

    def csv_values(self) -> list:
        return [self.lam, self.alpha, self.e_measured, self.e_predicted, self.ratio, self.omega,
                self.residual_ratio, self.status]

    def to_dict(self) -> dict:
        d = dict(zip(CSV_COLUMNS, self.csv_values()))
        d.update(k_lambda=self.k_lambda, certificate_radius=self.certificate_radius)
        if self.message:
            d["message"] = self.message
        if self.diagnostics:
            d["diagnostics"] = dict(self.diagnostics)
        return d


@dataclass
class SweepReport:
    rows: list
    prediction: ThresholdPrediction
    fitted_k: float = math.nan
    k_predicted: float = math.nan
    relative_error: float = math.nan
    verdict: str = "fail"
    reasons: list = field(default_factory=list)
    fit: dict = field(default_factory=dict)
    warnings: list = field(default_factory=list)
    checks: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool:
        return self.verdict == "pass"

    def to_dict(self) -> dict:
        return to_jsonable({
            "prediction": self.prediction.to_dict(),
            "rows": [r.to_dict() for r in self.rows],
            "fitted_k": self.fitted_k,
            "k_predicted": self.k_predicted,
            "relative_error": self.relative_error,
            "fit": self.fit,
            "checks": self.checks,
            "verdict": self.verdict,
            "reasons": self.reasons,
            "warnings": self.warnings,
        })

    def to_json(self) -> str:
        return json.dumps(self.to_dict(), indent=2, sort_keys=True, allow_nan=False) + "\n"

    def to_csv(self) -> str:
        buf = io.StringIO()
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for r in self.rows:
            w.writerow([_fmt(v) for v in r.csv_values()])
        return buf.getvalue()

    def write(self, path, fmt: str | None = None) -> None:
        path = Path(path)
        fmt = fmt or (path.suffix.lstrip(".") or "json")
        path.write_text(self.to_csv() if fmt == "csv" else self.to_json())


def _fmt(v):
    if isinstance(v, float):
        return "" if math.isnan(v) else repr(v)
    return v


def to_jsonable(obj):
    """NaN/inf -> None so the JSON output is strict."""
    if isinstance(obj, float):
        return obj if math.isfinite(obj) else None
    if isinstance(obj, dict):
        return {k: to_jsonable(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [to_jsonable(v) for v in obj]
    if isinstance(obj, (np.floating, np.integer)):
        return to_jsonable(obj.item())
    return obj


# operations ------------------------------------------------------------------------


def _threads() -> int:
    try:
        n = int(os.environ.get("THRESHOLD_LAB_THREADS", "0"))
    except ValueError:
        n = 0
    return n if n > 0 else min(4, os.cpu_count() or 1)


def _measure_row(E: Experiment, pred: ThresholdPrediction, h: HalfBoundState, lam: float,
                 quasimodes: bool) -> SweepRow:
    row = SweepRow(lam, alpha_at(E.scaling, lam))
    row.e_predicted = pred.predicted_e(lam)
    try:
        e = threshold_eigenvalue(ScaledProblem(E.U, E.V, E.scaling, lam))
        row.e_measured = e
        row.omega = math.sqrt(-e)
        row.ratio = e / row.e_predicted if row.e_predicted != 0 else math.nan
    except NotFound as exc:
        row.status, row.message = "not-found", str(exc)
    except ThresholdLabError as exc:
        row.status, row.message = "solver-error", f"{type(exc).__name__}: {exc}"
    if quasimodes:
        try:
            qm = build_quasimode(pred.case, E.U, E.V, E.scaling, lam, h)
            row.k_lambda = qm.k_lambda
            row.residual_ratio = qm.accuracy_ratio
            row.certificate_radius = qm.certificate_radius
            row.diagnostics = dict(qm.diagnostics)
            if row.ok and not qm.certifies(row.e_measured):
                row.status = "cert-fail"
                row.message = f"|e + omega^2| = {abs(row.e_measured + qm.omega**2):.3e} > {qm.certificate_radius:.3e}"
        except ConditionsViolated as exc:
            qm = exc.prediction
            row.k_lambda = qm.k_lambda if isinstance(qm, Quasimode) else math.nan
            if row.ok:
                row.status = "no-quasimode"
            row.message = (row.message + "; " if row.message else "") + f"quasimode: {exc}"
        except ThresholdLabError as exc:
            if row.ok:
                row.status = "solver-error"
            row.message = (row.message + "; " if row.message else "") + f"quasimode: {exc}"
    return row


def fit_rate(rows, rate=None) -> tuple[float, float]:
    """Least-squares fit log|e| = exponent * log(scale) + log(constant).

    ``rows`` holds SweepRows or (scale, e) pairs; for SweepRows the scale is
    ``rate(lambda)`` (default: lambda itself).
    """
    pts = []
    for r in rows:
        if isinstance(r, SweepRow):
            if not r.ok or not r.e_measured < 0:
                continue
            pts.append((rate(r.lam) if rate else r.lam, r.e_measured))
        else:
            s, e = r
            if e < 0 and s > 0:
                pts.append((float(s), float(e)))
    if len(pts) < 3:
        raise InsufficientData(f"need at least 3 successful rows, got {len(pts)}")
    x = np.log([p[0] for p in pts])
    y = np.log([-p[1] for p in pts])
    slope, intercept = np.polyfit(x, y, 1)
    return float(slope), float(math.exp(intercept))


def _trend_ok(values: list[float], slack: float = TREND_SLACK) -> bool:
    """Each of the last three values is no farther from 1 than its predecessor (up to slack)."""
    if len(values) < 3:
        return False
    d = [abs(v - 1.0) for v in values[-3:]]
    return d[1] <= d[0] + slack and d[2] <= d[1] + slack


def _decreasing(values: list[float]) -> bool:
    if len(values) < 3:
        return False
    a, b, c = values[-3:]
    return a > b > c


def _run(E: Experiment, quasimodes: bool) -> SweepReport:
    h = detect_resonance(E.U, E.resonance_tol)
    with warnings.catch_warnings(record=True) as caught:
        warnings.simplefilter("always")
        pred = predict(E.U, E.V, E.scaling, E.case, h, strict=False)
    report = SweepReport([], pred, warnings=[str(w.message) for w in caught])
    if not pred.ok:
        msg = "conditions violated: " + ", ".join(pred.failed)
        (report.warnings if E.force else report.reasons).append(msg)
    quasimodes = quasimodes and pred.case in ("T2", "T3", "T4")
    with ThreadPoolExecutor(max_workers=_threads()) as pool:
        rows = list(pool.map(lambda lam: _measure_row(E, pred, h, lam, quasimodes), E.lambdas))
    rows.sort(key=lambda r: -r.lam)
    report.rows = rows
    report.k_predicted = abs(pred.k)
    good = [r for r in rows if r.ok]
    if not any(r.e_measured < 0 for r in rows if not math.isnan(r.e_measured)):
        report.reasons.append("no-bound-state")
    if good:
        last = good[-1]
        report.fitted_k = math.sqrt(-last.e_measured) / pred.rate(last.lam)
        if report.k_predicted > 0:
            report.relative_error = abs(report.fitted_k - report.k_predicted) / report.k_predicted
        if last is not rows[-1]:
            report.reasons.append(f"smallest lambda {rows[-1].lam:g} failed: {rows[-1].status}")
    try:
        exponent, const = fit_rate(rows, pred.rate)
        report.fit = {"exponent": exponent, "constant": const, "k_from_fit": math.sqrt(const)}
    except InsufficientData as exc:
        report.fit = {"error": str(exc)}
    report.checks["relative_error_within_tol"] = bool(report.relative_error <= E.k_tol)
    report.checks["ratio_trending_to_one"] = _trend_ok([r.ratio for r in good])
    if quasimodes:
        report.checks["certificate_every_lambda"] = all(r.status == "ok" for r in rows)
        report.checks["accuracy_ratio_decreasing"] = _decreasing([r.residual_ratio for r in rows])
    for name, ok in report.checks.items():
        if not ok:
            report.reasons.append(f"check failed: {name}")
    report.verdict = "pass" if not report.reasons else "fail"
    return report


def sweep(E: Experiment) -> SweepReport:
    """Measure e_lambda on the grid and compare with the predicted rate."""
    return _run(E, quasimodes=False)


def verify(E: Experiment) -> tuple[int, SweepReport]:
    """Sweep plus quasimode certificates for the higher-order cases; returns (exit status, report)."""
    report = _run(E, quasimodes=True)
    return (0 if report.passed else 1), report

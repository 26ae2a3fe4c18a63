"""Power-law fits of K and the coefficient-to-runtime extrapolation."""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import asdict, dataclass
from importlib import resources
from pathlib import Path

import numpy as np

from .errors import InputError, ParseError, PreconditionError
from .estimator import DEFAULT_EPSILON, measurement_count

QUBITS_PER_ELECTRON = 13
GATE_TIME = 1e-7  # seconds per two-qubit gate layer
SECONDS_PER_DAY = 86400.0


@dataclass(frozen=True)
class ScalingFit:
    a: float
    b: float
    rms_log_residual: float = 0.0
    n_points: int = 0

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class RuntimeEstimate:
    molecule: str
    n_el: int
    n_qubits: int
    k: float
    m: float
    t_seconds: float
    t_days: float

    def to_dict(self) -> dict:
        return asdict(self)


@dataclass(frozen=True)
class CoefficientRow:
    molecule: str
    n_el: int
    a: float
    b: float


def fit_power_law(points) -> ScalingFit:
    """Least squares fit of ``ln K = ln a + b ln N`` (unweighted)."""
    pts = [(float(n), float(k)) for n, k in points]
    if len(pts) < 2:
        raise PreconditionError("a power-law fit needs at least two points")
    n = np.array([p[0] for p in pts])
    k = np.array([p[1] for p in pts])
    if np.any(~np.isfinite(n)) or np.any(~np.isfinite(k)):
        raise InputError("fit points must be finite")
    if np.any(k <= 0):
        raise InputError("K must be positive for a log-log fit")
    if np.any(n < 2):
        raise InputError("qubit counts must be at least 2")
    if len(np.unique(n)) < 2:
        raise PreconditionError("a power-law fit needs at least two distinct qubit counts")
    # sort so the result does not depend on input order at the last bit
    order = np.lexsort((k, n))
    x, y = np.log(n[order]), np.log(k[order])
    design = np.column_stack([np.ones_like(x), x])
    (intercept, slope), *_ = np.linalg.lstsq(design, y, rcond=None)
    resid = y - design @ np.array([intercept, slope])
    rms = float(np.sqrt(np.mean(resid**2)))
    return ScalingFit(float(math.exp(intercept)), float(slope), rms, len(pts))


def extrapolate_k(fit, n_qubits: float) -> float:
    a, b = (fit.a, fit.b) if isinstance(fit, ScalingFit) else fit
    if n_qubits < 1:
        raise InputError("qubit count must be at least 1")
    return a * float(n_qubits) ** b


def qubit_count(n_el: int) -> int:
    """Active-space size from the electron count, 13 spin-orbitals per electron."""
    if n_el < 1:
        raise InputError("need at least one active electron")
    return QUBITS_PER_ELECTRON * int(n_el)


def circuit_depth(n_qubits: int) -> int:
    return 5 * n_qubits - 3


def runtime_seconds(m: float, n_qubits: int) -> float:
    if m <= 0:
        raise InputError("measurement count must be positive")
    if n_qubits < 1:
        raise InputError("qubit count must be at least 1")
    return GATE_TIME * m * circuit_depth(n_qubits)


def table2_pipeline(
    rows, epsilon: float = DEFAULT_EPSILON, rdmc_factor: float = 2.0
) -> list[RuntimeEstimate]:
    out = []
    for row in rows:
        if not isinstance(row, CoefficientRow):
            row = CoefficientRow(*row)
        if row.a <= 0:
            raise InputError(f"{row.molecule}: prefactor must be positive")
        nq = qubit_count(row.n_el)
        k = extrapolate_k((row.a, row.b), nq)
        m = measurement_count(k, epsilon, rdmc_factor)
        t = runtime_seconds(m, nq)
        out.append(RuntimeEstimate(row.molecule, row.n_el, nq, k, m, t, t / SECONDS_PER_DAY))
    return out


def _csv_rows(text: str, source: str) -> list[dict]:
    reader = csv.DictReader(io.StringIO(text))
    if reader.fieldnames is None:
        raise ParseError(f"{source}: empty CSV")
    rows = [r for r in reader if any((v or "").strip() for v in r.values())]
    if not rows:
        raise ParseError(f"{source}: no data rows")
    return rows


def _number(row: dict, key: str, line: int, source: str, kind=float):
    if key not in row or row[key] is None:
        raise ParseError(f"{source}: missing column {key!r}", line=line)
    try:
        return kind(row[key].strip())
    except ValueError:
        raise ParseError(f"{source}: bad {key} value {row[key]!r}", line=line) from None


def parse_coefficients(text: str, source: str = "<coefficients>") -> list[CoefficientRow]:
    """Rows of ``molecule,n_el,a,b``."""
    out = []
    for i, r in enumerate(_csv_rows(text, source), start=2):
        name = (r.get("molecule") or "").strip()
        if not name:
            raise ParseError(f"{source}: missing molecule name", line=i)
        out.append(
            CoefficientRow(
                name,
                _number(r, "n_el", i, source, int),
                _number(r, "a", i, source),
                _number(r, "b", i, source),
            )
        )
    return out


def parse_points(text: str, source: str = "<points>") -> list[tuple[float, float]]:
    """Rows of ``n_qubits,k``."""
    return [
        (_number(r, "n_qubits", i, source), _number(r, "k", i, source))
        for i, r in enumerate(_csv_rows(text, source), start=2)
    ]


def _read(path) -> str:
    try:
        return Path(path).read_text()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from None


def load_coefficients(path=None) -> list[CoefficientRow]:
    """Coefficient table from ``path``, or the bundled per-molecule table."""
    if path is None:
        text = resources.files("vqecost.data").joinpath("table1.csv").read_text()
        return parse_coefficients(text, "table1.csv")
    return parse_coefficients(_read(path), str(path))


def load_points(path) -> list[tuple[float, float]]:
    return parse_points(_read(path), str(path))


def report_json(estimates: list[RuntimeEstimate]) -> str:
    return json.dumps([e.to_dict() for e in estimates], indent=1)

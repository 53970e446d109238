"""Desk-scale reproductions: Monte Carlo statistics, the two-qutrit closed form,
and the comparison against error-correcting codes under depolarizing noise.

Report files come in two formats.

JSON
    One object with a ``kind`` field (``"montecarlo"`` or ``"qecc"``); the
    remaining keys mirror the dataclass fields.

CSV
    ``qecc``: header ``p,F_qepc,F_<code>...`` followed by one row per grid
    point. ``montecarlo``: leading ``# key=<json>`` lines carry the summary,
    then a table ``sample,fidelity,feasible,re_00,im_00,re_01,...`` with one
    row per sample (row-major target entries).

Floats are written with ``repr`` so both formats round-trip exactly.
"""

from __future__ import annotations

import csv
import io
import json
from dataclasses import dataclass, field
from pathlib import Path
from typing import Callable

import numpy as np

from .channels import (
    KrausChannel,
    PauliChannelParams,
    as_density,
    channel_to_json,
    random_density,
    to_bloch,
)
from .errors import AmbiguousCrossover, ClassificationMismatch, NoSignChange
from .precomp import PSD_CLIP_TOL, solve_exact_many
from .sdp.programs import feasibility_batch, max_fidelity_batch

PERFECT_TOL = 1e-6
DEFAULT_THRESHOLDS = (0.99, 0.90)
BOUNDARY_MARGIN = 1e-6
CODES = {"shor": 9, "five": 5}


# -- Monte Carlo ---------------------------------------------------------------


@dataclass(frozen=True, eq=False)
class SampleRecord:
    index: int
    target: np.ndarray
    fidelity: float
    feasible: bool


@dataclass(frozen=True, eq=False)
class MonteCarloReport:
    channel: dict
    ensemble: str
    n_samples: int
    seed: int
    fraction_perfect: float
    fraction_feasible: float
    fraction_above: dict
    records: tuple = field(repr=False)

    @property
    def standard_error(self) -> float:
        """Binomial standard error of ``fraction_perfect``."""
        f = self.fraction_perfect
        return float(np.sqrt(f * (1 - f) / self.n_samples))

    def summary(self) -> str:
        above = " ".join(f"F>={t:g}: {v:.6f}" for t, v in self.fraction_above.items())
        return (f"samples={self.n_samples} ensemble={self.ensemble} seed={self.seed} "
                f"perfect: {self.fraction_perfect:.6f} (se {self.standard_error:.6f}) {above}")


def sample_targets(dim: int, n_samples: int, ensemble: str, seed: int) -> list:
    """Sample ``i`` is drawn from its own generator seeded by ``(seed, i)``."""
    return [random_density(dim, ensemble, np.random.default_rng([seed, i]))
            for i in range(n_samples)]


def monte_carlo(ch: KrausChannel, n_samples: int, ensemble: str = "hilbert-schmidt",
                seed: int = 0, thresholds=DEFAULT_THRESHOLDS,
                boundary_margin: float = BOUNDARY_MARGIN, *, feasibility_opts=None,
                fidelity_opts=None) -> MonteCarloReport:
    """Sample targets, classify each analytically and by SDP, and tabulate fidelities.

    The analytic verdict is cross-checked against the phase-I feasibility
    program; a disagreement on a sample whose phase-I optimum lies farther
    than ``boundary_margin`` from zero raises :class:`ClassificationMismatch`.
    Solver options default to the program-specific ones in :mod:`qepc.sdp.programs`.
    """
    if n_samples < 1:
        raise ValueError("n_samples must be at least 1")
    seed = int(seed)
    thresholds = tuple(sorted((float(t) for t in thresholds), reverse=True))
    targets = sample_targets(ch.dim, n_samples, ensemble, seed)

    analytic = np.array([r.feasible for r in solve_exact_many(ch, targets)])
    sdp = feasibility_batch(ch, targets, opts=feasibility_opts)
    sdp_ok = np.array([r.feasible for r in sdp])
    t_star = np.array([r.t_star for r in sdp])
    clash = np.flatnonzero((analytic != sdp_ok) & (np.abs(t_star) > boundary_margin))
    if clash.size:
        i = int(clash[0])
        raise ClassificationMismatch(
            f"sample {i}: analytic feasible={bool(analytic[i])}, SDP t*={t_star[i]:.3e}",
            sdp[i].solution,
        )

    fids, _, _ = max_fidelity_batch(ch, targets, fidelity_opts)
    records = tuple(SampleRecord(i, np.asarray(t.matrix), float(f), bool(a))
                    for i, (t, f, a) in enumerate(zip(targets, fids, analytic)))
    return MonteCarloReport(
        channel=channel_to_json(ch),
        ensemble=ensemble,
        n_samples=n_samples,
        seed=seed,
        fraction_perfect=float(np.mean(fids >= 1 - PERFECT_TOL)),
        fraction_feasible=float(np.mean(analytic)),
        fraction_above={t: float(np.mean(fids >= t)) for t in thresholds},
        records=records,
    )


def pauli_perfect_condition(params, rho_t, rtol: float = 1e-10) -> bool:
    """Whether a Pauli channel can reach the qubit target exactly.

    With ``R_i = r_i / q_i``: every component with ``q_k = 0`` needs
    ``r_k = 0``, and the remaining ``R`` must lie in the unit ball.
    """
    if not isinstance(params, PauliChannelParams):
        params = PauliChannelParams(tuple(params))
    r = to_bloch(as_density(rho_t).matrix)
    q = params.q
    zero = np.abs(q[1:]) <= rtol * np.max(np.abs(q))
    if np.any(np.abs(r[zero]) > 1e-8):
        return False
    R = r[~zero] / q[1:][~zero]
    return bool((1 - np.linalg.norm(R)) / 2 >= -PSD_CLIP_TOL)


# -- error-correcting codes ----------------------------------------------------


def qecc_fidelity(n: int, p):
    """``sqrt((1-p)^(n-1) (1 - p + n p))`` for an ``n``-qubit code under depolarizing noise."""
    if int(n) != n or n < 1:
        raise ValueError("n must be a positive integer")
    p = _probability(p)
    return np.sqrt((1 - p) ** (n - 1) * (1 - p + n * p))


def qepc_depolarizing_fidelity(p):
    """Best fidelity with ``|0>`` reachable through the depolarizing channel."""
    p = _probability(p)
    return np.sqrt(0.5 + np.abs(0.5 - 2 * p / 3))


def _probability(p):
    arr = np.asarray(p, dtype=float)
    if np.any((arr < 0) | (arr > 1)) or not np.all(np.isfinite(arr)):
        raise ValueError("p must lie in [0, 1]")
    return arr if arr.ndim else float(arr)


def find_crossover(f: Callable, g: Callable, interval=(0.001, 0.5), *,
                   samples: int = 2000, tol: float = 1e-6) -> float:
    """The unique ``p`` in ``interval`` where ``f - g`` changes sign, to ``tol``.

    The interval is scanned on ``samples`` points first; exact zeros on the
    scan are skipped. No sign change raises :class:`NoSignChange`, more than
    one raises :class:`AmbiguousCrossover`.
    """
    lo, hi = map(float, interval)
    if not lo < hi:
        raise ValueError("interval must have lo < hi")
    h = lambda x: float(f(x)) - float(g(x))  # noqa: E731
    xs = np.linspace(lo, hi, samples)
    hs = np.array([h(x) for x in xs])
    keep = hs != 0
    xs, sg = xs[keep], np.sign(hs[keep])
    flips = np.flatnonzero(sg[1:] != sg[:-1])
    if flips.size == 0:
        raise NoSignChange(f"f - g has no sign change on [{lo}, {hi}]")
    if flips.size > 1:
        raise AmbiguousCrossover(f"f - g changes sign {flips.size} times on [{lo}, {hi}]")
    a, b = xs[flips[0]], xs[flips[0] + 1]
    sa = sg[flips[0]]
    while b - a > tol:
        mid = (a + b) / 2
        hm = h(mid)
        if hm == 0:
            return float(mid)
        if np.sign(hm) == sa:
            a = mid
        else:
            b = mid
    return float((a + b) / 2)


@dataclass(frozen=True, eq=False)
class QeccCurve:
    code: str
    n: int
    p: np.ndarray
    fidelity: np.ndarray
    crossover_p: float | None


@dataclass(frozen=True, eq=False)
class QeccComparison:
    """Pre-compensation fidelity against one or more codes on a common grid."""

    p: np.ndarray
    qepc: np.ndarray
    curves: tuple

    def columns(self) -> list:
        return ["p", "F_qepc"] + [f"F_{c.code}" for c in self.curves]


def parse_pgrid(spec: str) -> np.ndarray:
    """``"a:b:step"`` to the inclusive grid ``a, a + step, ..., b``."""
    try:
        a, b, step = (float(x) for x in spec.split(":"))
    except ValueError:
        raise ValueError(f"grid must look like a:b:step, got {spec!r}") from None
    if step <= 0 or b < a:
        raise ValueError("grid needs step > 0 and a <= b")
    n = int(np.floor((b - a) / step + 1e-9)) + 1
    return np.round(a + step * np.arange(n), 12)


def qecc_compare(pgrid, codes=("shor", "five")) -> QeccComparison:
    """Tabulate the curves and locate each crossover inside the grid's range.

    A code whose curve does not cross the pre-compensation curve exactly once
    on the grid gets ``crossover_p = None``.
    """
    p = _probability(np.asarray(pgrid, dtype=float)).reshape(-1)
    if p.size < 2:
        raise ValueError("grid needs at least two points")
    curves = []
    for code in codes:
        if code not in CODES:
            raise ValueError(f"unknown code {code!r}; choose from {sorted(CODES)}")
        n = CODES[code]
        try:
            x = find_crossover(qepc_depolarizing_fidelity, lambda q, n=n: qecc_fidelity(n, q),
                               (p[0], p[-1]), samples=max(p.size, 2000))
        except (NoSignChange, AmbiguousCrossover):
            x = None
        curves.append(QeccCurve(code, n, p, qecc_fidelity(n, p), x))
    return QeccComparison(p, qepc_depolarizing_fidelity(p), tuple(curves))


# -- two-qutrit amplitude damping ----------------------------------------------


def example2_target(p: float):
    """``p |psi+><psi+| + (1 - p) 1/9`` with ``|psi+> = (|00> + |11>)/sqrt(2)`` on two qutrits."""
    p = _probability(p)
    psi = np.zeros(9)
    psi[0] = psi[4] = 1 / np.sqrt(2)
    return as_density(p * np.outer(psi, psi) + (1 - p) * np.eye(9) / 9)


def example2_closed_form(gamma: float, p: float):
    """Closed-form pre-compensated input for :func:`example2_target` when only B is damped.

    Returns ``(matrix, valid)``; ``valid`` is ``gamma <= 1/3`` together with
    ``p <= (2 - 6 g' g) / (2 + 3 g' g)``, ``g' = 1 - gamma``.
    """
    if not 0.0 <= gamma < 1.0:
        raise ValueError("gamma must lie in [0, 1)")
    p = _probability(p)
    g, gb, pb = gamma, 1 - gamma, 1 - p
    a = np.empty(9)
    a[0] = 2 - 6 * gb * g + p * (7 - 12 * g + 3 * g * g)
    a[1] = a[7] = 2 * pb * (1 - 3 * g)
    a[2] = a[5] = a[8] = 2 * pb
    a[3] = 2 - 6 * gb * g - p * (2 + 3 * gb * g)
    a[4] = 2 + 7 * p - 3 * (2 + p) * g
    a[6] = 2 * pb * (1 - 3 * gb * g)
    b = 9 * p * gb ** 1.5
    c = 18 * gb ** 2
    rho = np.diag(a).astype(complex)
    rho[0, 4] = rho[4, 0] = b
    valid = g <= 1 / 3 and p <= (2 - 6 * gb * g) / (2 + 3 * gb * g)
    return rho / c, bool(valid)


# -- report I/O ----------------------------------------------------------------


def _report_json(obj) -> dict:
    if isinstance(obj, MonteCarloReport):
        return {
            "kind": "montecarlo",
            "channel": obj.channel,
            "ensemble": obj.ensemble,
            "n_samples": obj.n_samples,
            "seed": obj.seed,
            "fraction_perfect": obj.fraction_perfect,
            "fraction_feasible": obj.fraction_feasible,
            "standard_error": obj.standard_error,
            "fraction_above": [[t, v] for t, v in obj.fraction_above.items()],
            "records": [
                {"sample": r.index, "fidelity": r.fidelity, "feasible": r.feasible,
                 "target": [[[z.real, z.imag] for z in row] for row in r.target.tolist()]}
                for r in obj.records
            ],
        }
    if isinstance(obj, QeccComparison):
        return {
            "kind": "qecc",
            "p": obj.p.tolist(),
            "F_qepc": obj.qepc.tolist(),
            "curves": [{"code": c.code, "n": c.n, "fidelity": c.fidelity.tolist(),
                        "crossover_p": c.crossover_p} for c in obj.curves],
        }
    raise TypeError(f"cannot emit {type(obj).__name__}")


def _report_from_json(data: dict):
    kind = data.get("kind")
    if kind == "montecarlo":
        records = tuple(
            SampleRecord(r["sample"], np.array(r["target"])[..., 0] + 1j * np.array(r["target"])[..., 1],
                         r["fidelity"], r["feasible"])
            for r in data["records"]
        )
        return MonteCarloReport(
            channel=data["channel"], ensemble=data["ensemble"], n_samples=data["n_samples"],
            seed=data["seed"], fraction_perfect=data["fraction_perfect"],
            fraction_feasible=data["fraction_feasible"],
            fraction_above={float(t): v for t, v in data["fraction_above"]}, records=records,
        )
    if kind == "qecc":
        p = np.array(data["p"])
        curves = tuple(QeccCurve(c["code"], c["n"], p, np.array(c["fidelity"]), c["crossover_p"])
                       for c in data["curves"])
        return QeccComparison(p, np.array(data["F_qepc"]), curves)
    raise ValueError(f"unknown report kind {kind!r}")


def _fmt(x) -> str:
    if isinstance(x, (bool, np.bool_)):
        return "1" if x else "0"
    return repr(float(x))


_MC_META = ("channel", "ensemble", "n_samples", "seed", "fraction_perfect",
            "fraction_feasible", "standard_error", "fraction_above")


def _report_csv(obj) -> str:
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    if isinstance(obj, QeccComparison):
        w.writerow(obj.columns())
        for row in zip(obj.p, obj.qepc, *(c.fidelity for c in obj.curves)):
            w.writerow([_fmt(x) for x in row])
        return buf.getvalue()
    if isinstance(obj, MonteCarloReport):
        meta = _report_json(obj)
        for key in _MC_META:
            buf.write(f"# {key}={json.dumps(meta[key], separators=(',', ':'))}\n")
        d = int(obj.channel["dim"])
        cols = ["sample", "fidelity", "feasible"]
        cols += [f"{part}_{i}{j}" for i in range(d) for j in range(d) for part in ("re", "im")]
        w.writerow(cols)
        for r in obj.records:
            entries = [x for z in r.target.reshape(-1) for x in (z.real, z.imag)]
            w.writerow([str(r.index), _fmt(r.fidelity), _fmt(r.feasible)] + [_fmt(x) for x in entries])
        return buf.getvalue()
    raise TypeError(f"cannot emit {type(obj).__name__}")


def _report_from_csv(text: str):
    lines = text.splitlines()
    meta = {}
    while lines and lines[0].startswith("# "):
        key, _, value = lines.pop(0)[2:].partition("=")
        meta[key] = json.loads(value)
    rows = list(csv.reader(lines))
    if not rows:
        raise ValueError("empty CSV report")
    header, body = rows[0], rows[1:]
    if header[:2] == ["p", "F_qepc"]:
        table = np.array(body, dtype=float).reshape(-1, len(header))
        p = table[:, 0]
        curves = []
        for k, name in enumerate(header[2:], start=2):
            code = name.removeprefix("F_")
            n = CODES.get(code)
            if n is None:
                raise ValueError(f"unknown code column {name!r}")
            curves.append(QeccCurve(code, n, p, table[:, k], None))
        # crossovers are not part of the table; recompute them from the grid
        cmp = qecc_compare(p, [c.code for c in curves]) if p.size >= 2 else None
        if cmp is not None:
            curves = [QeccCurve(c.code, c.n, p, c.fidelity, x.crossover_p)
                      for c, x in zip(curves, cmp.curves)]
        return QeccComparison(p, table[:, 1], tuple(curves))
    if header[:3] == ["sample", "fidelity", "feasible"] and set(_MC_META) <= meta.keys():
        d = int(meta["channel"]["dim"])
        records = []
        for row in body:
            vals = np.array(row[3:], dtype=float)
            target = (vals[0::2] + 1j * vals[1::2]).reshape(d, d)
            records.append(SampleRecord(int(row[0]), target, float(row[1]), row[2] == "1"))
        meta = {k: v for k, v in meta.items() if k != "standard_error"}
        meta["fraction_above"] = {float(t): v for t, v in meta["fraction_above"]}
        return MonteCarloReport(records=tuple(records), **meta)
    raise ValueError("unrecognized CSV report header")


def render_report(obj, fmt: str = "json") -> str:
    if fmt == "json":
        return json.dumps(_report_json(obj), separators=(",", ":")) + "\n"
    if fmt == "csv":
        return _report_csv(obj)
    raise ValueError(f"unknown format {fmt!r}; choose json or csv")


def emit_report(obj, fmt: str, path) -> None:
    """Write a :class:`MonteCarloReport` or :class:`QeccComparison` as JSON or CSV."""
    Path(path).write_text(render_report(obj, fmt))


def load_report(path, fmt: str | None = None):
    """Inverse of :func:`emit_report`; the format defaults to the file suffix."""
    path = Path(path)
    fmt = fmt or path.suffix.lstrip(".").lower()
    text = path.read_text()
    if fmt == "json":
        return _report_from_json(json.loads(text))
    if fmt == "csv":
        return _report_from_csv(text)
    raise ValueError(f"unknown format {fmt!r}; choose json or csv")

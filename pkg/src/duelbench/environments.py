"""Stochastic duel environments: construction, file I/O, sampling, diagnostics."""

from __future__ import annotations

import os
import tempfile
from pathlib import Path
from typing import Sequence

import numpy as np

from .core import (
    PROB_TOL,
    DuelOutcome,
    EnvDiagnostics,
    EnvironmentSpec,
    PreferenceMatrix,
    borda_scores,
    condorcet_winner,
    copeland_scores,
)
from .errors import DegenerateInputError, InvalidParameterError, MatrixValidationError

__all__ = [
    "EnvironmentSpec",
    "generate_cycle",
    "generate_utility",
    "load_matrix",
    "save_matrix",
    "format_matrix",
    "parse_matrix",
    "build_environment",
    "duel",
    "diagnose",
]


def generate_cycle(n_suboptimal: int, p_condorcet: float, p_cycle: float) -> PreferenceMatrix:
    """Condorcet winner at index 0 plus a ring of cyclically ordered rankers.

    Ranker 0 beats everyone with ``p_condorcet``. Rankers 1..n sit on a ring;
    each beats the ``n // 2`` rankers that follow it (wrapping) with
    ``p_cycle`` and loses to the ``n // 2`` preceding it.

    ``generate_cycle(19, 0.51, 1.0)`` is the Cycle dataset and
    ``generate_cycle(19, 0.6, 0.51)`` is Cycle2.
    """
    n = int(n_suboptimal)
    if n < 3 or n % 2 == 0:
        raise DegenerateInputError(f"n_suboptimal must be odd and >= 3, got {n_suboptimal}")
    for name, v in (("p_condorcet", p_condorcet), ("p_cycle", p_cycle)):
        if not 0.5 < v <= 1.0:
            raise InvalidParameterError(f"{name} must be in (0.5, 1], got {v}")
    k = n + 1
    p = np.full((k, k), 0.5)
    p[0, 1:] = p_condorcet
    p[1:, 0] = 1.0 - p_condorcet
    half = n // 2
    for q in range(n):
        for d in range(1, half + 1):
            r = (q + d) % n
            p[1 + q, 1 + r] = p_cycle
            p[1 + r, 1 + q] = 1.0 - p_cycle
    return PreferenceMatrix(p)


def generate_utility(utilities: Sequence[float]) -> PreferenceMatrix:
    """Logistic link: p_ij = 1 / (1 + exp(u_j - u_i))."""
    u = np.asarray(utilities, dtype=float)
    if u.ndim != 1 or len(u) < 1:
        raise DegenerateInputError("need at least one utility")
    diff = u[:, None] - u[None, :]
    p = 0.5 * (1.0 + np.tanh(0.5 * diff))  # numerically stable logistic
    return PreferenceMatrix(p)


# ---------------------------------------------------------------------------
# file format: "# k=<int>" header, k rows of k comma-separated decimals


def format_matrix(p: PreferenceMatrix) -> str:
    lines = [f"# k={p.k}"]
    for row in p.p:
        lines.append(",".join(f"{x:.12g}" for x in row))
    return "\n".join(lines) + "\n"


def parse_matrix(text: str) -> PreferenceMatrix:
    declared_k = None
    rows = []
    for lineno, raw in enumerate(text.splitlines(), 1):
        line = raw.strip()
        if not line:
            continue
        if line.startswith("#"):
            body = line[1:].strip()
            if body.startswith("k=") and declared_k is None and not rows:
                try:
                    declared_k = int(body[2:])
                except ValueError:
                    raise MatrixValidationError(f"line {lineno}: bad header {raw!r}") from None
            continue
        try:
            rows.append([float(x) for x in line.split(",")])
        except ValueError:
            raise MatrixValidationError(f"line {lineno}: cannot parse {raw!r}") from None
    if declared_k is None:
        raise MatrixValidationError("missing '# k=<int>' header")
    if len(rows) != declared_k or any(len(r) != declared_k for r in rows):
        raise MatrixValidationError(
            f"expected {declared_k} rows of {declared_k} values, got {[len(r) for r in rows]}"
        )
    return PreferenceMatrix(np.array(rows, dtype=float))


def load_matrix(path) -> PreferenceMatrix:
    return parse_matrix(Path(path).read_text())


def atomic_write_text(path, text: str) -> None:
    """Write via a temp file in the target directory, then rename over the target."""
    path = Path(path)
    fd, tmp = tempfile.mkstemp(dir=path.parent or ".", prefix=f".{path.name}.", suffix=".tmp")
    try:
        with os.fdopen(fd, "w", newline="\n") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def save_matrix(p: PreferenceMatrix, path) -> None:
    atomic_write_text(path, format_matrix(p))


def build_environment(spec: EnvironmentSpec) -> PreferenceMatrix:
    if spec.kind == "file":
        return load_matrix(spec.path)
    if spec.kind == "cycle":
        return generate_cycle(spec.n_suboptimal, spec.p_condorcet, spec.p_cycle)
    return generate_utility(spec.utilities)


# ---------------------------------------------------------------------------


def duel(p: PreferenceMatrix, i: int, j: int, rng: np.random.Generator, step: int = 0) -> DuelOutcome:
    """Play i against j; i wins with probability p[i][j]. Uses one uniform draw."""
    k = p.k
    if not (0 <= i < k and 0 <= j < k):
        raise IndexError(f"ranker index out of range for k={k}: ({i}, {j})")
    winner = i if rng.random() < p.p[i, j] else j
    return DuelOutcome(step, int(i), int(j), int(winner))


def diagnose(p: PreferenceMatrix) -> EnvDiagnostics:
    k = p.k
    arr = p.p
    gaps = np.abs(arr - 0.5)
    if k >= 2:
        cope = copeland_scores(p)
    else:
        cope = np.ones(1)  # a lone ranker vacuously beats everyone
    off = ~np.eye(k, dtype=bool)
    distinguishable = (gaps > PROB_TOL) & off
    delta_min = float(gaps[distinguishable].min()) if distinguishable.any() else None

    tied = (~distinguishable) & off
    beats_any = ((arr > 0.5 + PROB_TOL) & off).any(axis=1)
    uninformative = tied.any(axis=1) & ~beats_any
    # every indistinguishable pair must consist of two uninformative rankers
    ti, tj = np.nonzero(tied)
    a1 = bool(np.all(uninformative[ti] & uninformative[tj]))
    n_uninf = int(uninformative.sum())
    return EnvDiagnostics(
        condorcet=condorcet_winner(p),
        copeland_scores=cope,
        copeland_value=float(cope.max()),
        borda_scores=borda_scores(p),
        gaps=gaps,
        delta_min=delta_min,
        uninformative_count=n_uninf,
        assumption1_holds=a1,
        assumption2_holds=3 * n_uninf <= k,
    )


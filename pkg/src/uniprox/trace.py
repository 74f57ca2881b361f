"""Run traces and their CSV serialization.

One :class:`InnerRecord` is written per inner iteration. Serious steps
additionally keep a :class:`SeriousRecord` holding the model snapshot, so
the checkers can re-solve the prox subproblem offline.
"""

import csv
from dataclasses import dataclass, field
from typing import List, Optional

import numpy as np

NULL = "null"
SERIOUS = "serious"
RESET = "reset"
STOP = "stop"
EVENTS = (NULL, SERIOUS, RESET, STOP)

CSV_HEADER = ["run_id", "j", "k", "N", "event", "lambda", "t_j", "phi_xj", "barphi", "gap", "halvings", "elapsed_ns"]


@dataclass
class InnerRecord:
    """State summary after one inner iteration.

    ``N`` is the position of the iteration inside its cycle (1-based) and
    ``halvings`` the cumulative number of stepsize halvings so far.
    """

    j: int
    k: int
    N: int
    lam: float
    t_j: float
    phi_xj: float
    barphi: float
    event: str
    gap: float = 0.0
    halvings: int = 0
    elapsed_ns: int = 0


@dataclass
class SeriousRecord:
    """Everything needed to replay one serious step offline."""

    k: int
    lam_k: float
    center_prev: np.ndarray
    x_hat: np.ndarray
    y_hat: np.ndarray
    model_snapshot: object
    weights: np.ndarray
    aggregate: object
    j: int = 0


@dataclass
class RunTrace:
    run_id: str
    method: str
    records: List[InnerRecord] = field(default_factory=list)
    points: List[np.ndarray] = field(default_factory=list)
    serious: List[SeriousRecord] = field(default_factory=list)
    flags: dict = field(default_factory=dict)

    def __len__(self):
        return len(self.records)

    def cycles(self):
        """Split the records into cycles; a trailing open cycle is included."""
        out, cur = [], []
        for rec in self.records:
            cur.append(rec)
            if rec.event != NULL:
                out.append(cur)
                cur = []
        if cur:
            out.append(cur)
        return out

    @property
    def lambdas(self):
        return np.array([r.lam for r in self.records])

    def count(self, event):
        return sum(1 for r in self.records if r.event == event)


def _fmt(v):
    return format(float(v), ".17g")


def write_trace_csv(trace, path_or_file):
    """Write ``trace`` in the stable CSV schema (17 significant digits)."""
    own = isinstance(path_or_file, (str, bytes)) or hasattr(path_or_file, "__fspath__")
    fh = open(path_or_file, "w", newline="") if own else path_or_file
    try:
        w = csv.writer(fh)
        w.writerow(CSV_HEADER)
        for r in trace.records:
            w.writerow(
                [
                    trace.run_id,
                    r.j,
                    r.k,
                    r.N,
                    r.event,
                    _fmt(r.lam),
                    _fmt(r.t_j),
                    _fmt(r.phi_xj),
                    _fmt(r.barphi),
                    _fmt(r.gap),
                    r.halvings,
                    r.elapsed_ns,
                ]
            )
    finally:
        if own:
            fh.close()


def read_trace_csv(path):
    """Return ``(run_id, records)`` from a trace CSV.

    Raises
    ------
    ValueError
        On a wrong header, an unknown event label or a malformed row.
    """
    with open(path, newline="") as fh:
        rows = list(csv.reader(fh))
    if not rows or rows[0] != CSV_HEADER:
        raise ValueError(f"{path}: unexpected trace header")
    run_id: Optional[str] = None
    records = []
    for lineno, row in enumerate(rows[1:], start=2):
        if len(row) != len(CSV_HEADER):
            raise ValueError(f"{path}:{lineno}: expected {len(CSV_HEADER)} fields, got {len(row)}")
        if row[4] not in EVENTS:
            raise ValueError(f"{path}:{lineno}: unknown event {row[4]!r}")
        run_id = row[0] if run_id is None else run_id
        try:
            records.append(
                InnerRecord(
                    j=int(row[1]),
                    k=int(row[2]),
                    N=int(row[3]),
                    lam=float(row[5]),
                    t_j=float(row[6]),
                    phi_xj=float(row[7]),
                    barphi=float(row[8]),
                    event=row[4],
                    gap=float(row[9]),
                    halvings=int(row[10]),
                    elapsed_ns=int(row[11]),
                )
            )
        except ValueError as exc:
            raise ValueError(f"{path}:{lineno}: {exc}") from None
    return run_id, records

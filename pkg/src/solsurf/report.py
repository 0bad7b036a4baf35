"""Residual reports: the common currency of every verification check."""

from __future__ import annotations

from dataclasses import dataclass, field

import numpy as np


@dataclass
class ResidualReport:
    """Summary statistics of one named residual field.

    ``order`` is an estimated convergence order when a refinement study was
    run, else None.  ``excluded`` counts nodes left out of the statistics
    (singular nodes, exclusion disks, branch-cut neighbourhoods).
    """

    name: str
    max: float
    mean: float
    tol: float | None = None
    order: float | None = None
    excluded: int = 0
    total: int = 0
    notes: dict = field(default_factory=dict)

    @property
    def passed(self) -> bool | None:
        if self.tol is None:
            return None
        return bool(self.max <= self.tol)

    def as_dict(self) -> dict:
        d = {
            "name": self.name,
            "max": float(self.max),
            "mean": float(self.mean),
            "excluded": int(self.excluded),
            "total": int(self.total),
        }
        if self.tol is not None:
            d["tol"] = float(self.tol)
            d["passed"] = self.passed
        if self.order is not None:
            d["order"] = float(self.order)
        if self.notes:
            d["notes"] = {k: _plain(v) for k, v in self.notes.items()}
        return d

    def __str__(self) -> str:
        s = f"{self.name}: max={self.max:.3e} mean={self.mean:.3e}"
        if self.tol is not None:
            s += f" tol={self.tol:.1e} [{'PASS' if self.passed else 'FAIL'}]"
        if self.excluded:
            s += f" (excluded {self.excluded}/{self.total})"
        return s


def _plain(v):
    if isinstance(v, (np.floating, np.integer)):
        return v.item()
    if isinstance(v, complex):
        return [v.real, v.imag]
    if isinstance(v, np.ndarray):
        return v.tolist()
    return v


def summarize(name: str, residual: np.ndarray, mask: np.ndarray | None = None,
              tol: float | None = None, **notes) -> ResidualReport:
    """Build a report from a node-wise residual magnitude field.

    ``mask`` selects the nodes that enter the statistics; the rest are
    counted as excluded.  Non-finite residual values are always excluded.
    """
    r = np.asarray(residual, dtype=float)
    if mask is None:
        mask = np.ones(r.shape, dtype=bool)
    mask = mask & np.isfinite(r)
    total = r.size
    n = int(mask.sum())
    if n == 0:
        return ResidualReport(name, np.inf, np.inf, tol=tol,
                              excluded=total, total=total, notes=notes)
    vals = r[mask]
    return ResidualReport(name, float(vals.max()), float(vals.mean()), tol=tol,
                          excluded=total - n, total=total, notes=notes)


def convergence_order(errors, factors=None) -> float:
    """Least-squares slope of log(error) against log(h) for a refinement run.

    ``errors`` are max residuals at successively halved spacings (factor 2
    unless ``factors`` given).
    """
    e = np.asarray(errors, dtype=float)
    if factors is None:
        logh = -np.arange(len(e)) * np.log(2.0)
    else:
        logh = np.log(np.asarray(factors, dtype=float))
    slope = np.polyfit(logh, np.log(e), 1)[0]
    return float(slope)

"""Plain-text persistence: field snapshots, distance curves, contraction reports.

Snapshot format::

    # nu=<float> N=<int>
    # <optional extra comment lines, e.g. config hash>
    k1,k2,re,im
    1,0,<re>,<im>
    ...

one row per half-lattice mode in lexicographic order, floats written with 17
significant digits so that reading back reproduces every bit.
"""

from __future__ import annotations

import csv
from pathlib import Path

import numpy as np

from .lattice import SpectralField, lattice


def _num(x: float) -> str:
    return f"{float(x):.16e}"


def snapshot_text(u: SpectralField, nu: float, comments: tuple[str, ...] = ()) -> str:
    lat = u.lattice
    lines = [f"# nu={float(nu)!r} N={u.N}"]
    lines += [f"# {c}" for c in comments]
    lines.append("k1,k2,re,im")
    for k1, k2, c in zip(lat.k1, lat.k2, u.coeffs):
        lines.append(f"{k1},{k2},{_num(c.real)},{_num(c.imag)}")
    return "\n".join(lines) + "\n"


def write_snapshot(path: Path | str, u: SpectralField, nu: float, comments: tuple[str, ...] = ()) -> Path:
    path = Path(path)
    path.write_text(snapshot_text(u, nu, comments), encoding="utf-8")
    return path


def read_snapshot(path: Path | str) -> tuple[SpectralField, float]:
    lines = Path(path).read_text(encoding="utf-8").splitlines()
    if not lines or not lines[0].startswith("# "):
        raise ValueError(f"{path}: missing '# nu=.. N=..' header")
    try:
        header = dict(item.split("=", 1) for item in lines[0][2:].split())
        nu, N = float(header["nu"]), int(header["N"])
    except (KeyError, ValueError) as exc:
        raise ValueError(f"{path}: malformed header {lines[0]!r}") from exc
    body = [ln for ln in lines[1:] if not ln.startswith("#")]
    lat = lattice(N)
    rows = list(csv.DictReader(body))
    if len(rows) != lat.size:
        raise ValueError(f"{path}: expected {lat.size} modes for N={N}, found {len(rows)}")
    coeffs = np.empty(lat.size, dtype=complex)
    for i, rec in enumerate(rows):
        if (int(rec["k1"]), int(rec["k2"])) != (lat.k1[i], lat.k2[i]):
            raise ValueError(f"{path}: row {i + 1} has mode ({rec['k1']},{rec['k2']}), "
                             f"expected ({lat.k1[i]},{lat.k2[i]})")
        coeffs[i] = complex(float(rec["re"]), float(rec["im"]))
    return SpectralField(N, coeffs), nu


def write_curve(path: Path | str, times, distance, comments: tuple[str, ...] = ()) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["t", "distance"])
        for t, d in zip(times, distance):
            w.writerow([repr(float(t)), repr(float(d))])
    return path


def write_contraction(path: Path | str, reports, comments: tuple[str, ...] = ()) -> Path:
    path = Path(path)
    with path.open("w", encoding="utf-8", newline="") as fh:
        for c in comments:
            fh.write(f"# {c}\n")
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(["T", "C1", "C2", "N_T", "T_star", "measured_factor"])
        for r in reports:
            w.writerow([repr(float(x)) for x in (r.T, r.C1, r.C2, r.N_T, r.T_star, r.measured_factor)])
    return path


def read_table(path: Path | str) -> dict[str, np.ndarray]:
    """Numeric CSV with a header row (comment lines skipped) as column arrays."""
    body = [ln for ln in Path(path).read_text(encoding="utf-8").splitlines() if not ln.startswith("#")]
    rows = list(csv.reader(body))
    return {name: np.array([float(r[i]) for r in rows[1:]]) for i, name in enumerate(rows[0])}

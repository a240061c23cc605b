"""CSV + JSON-sidecar persistence and run manifests.

Every tabular artifact is a plain CSV with a `<name>.meta.json` sidecar
carrying the physics metadata (beta, kind, conventions) and provenance
hashes.  Floats are written with 17 significant digits so identical
runs produce byte-identical files.
"""

from __future__ import annotations

import csv
import hashlib
import json
import math
from pathlib import Path

import numpy as np

from .blocking import MeanEstimate
from .effective_potential import EffectivePotentialCurve
from .pimd import ForceTable
from .series import CorrelationSeries, SpectralLines, SpectrumEstimate

FLOAT_FMT = "%.17g"


def _fmt(x) -> str:
    return FLOAT_FMT % float(x)


def sidecar_path(path) -> Path:
    path = Path(path)
    return path.with_name(path.stem + ".meta.json")


def _write_rows(path, header, rows):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh)
        writer.writerow(header)
        writer.writerows(rows)


def _write_sidecar(path, meta: dict):
    with open(sidecar_path(path), "w") as fh:
        json.dump(meta, fh, indent=2, sort_keys=True)
        fh.write("\n")


def _read_sidecar(path) -> dict:
    with open(sidecar_path(path)) as fh:
        return json.load(fh)


def file_sha256(path) -> str:
    digest = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(65536), b""):
            digest.update(chunk)
    return digest.hexdigest()


def config_hash(config: dict) -> str:
    blob = json.dumps(config, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()


def _beta_str(beta: float) -> str:
    return "inf" if beta == math.inf else _fmt(beta)


def _beta_from(value) -> float:
    return math.inf if value == "inf" else float(value)


def write_force_table(path, table: ForceTable, extra_meta: dict = None):
    rows = [
        (_fmt(q), _fmt(f), _fmt(e), int(n))
        for q, f, e, n in zip(
            table.centroids, table.force, table.stderr, table.n_samples
        )
    ]
    _write_rows(path, ["q_c", "force", "stderr", "n_samples"], rows)
    meta = {
        "beta": _beta_str(table.beta),
        "trotter_number": table.trotter_number,
        "seed": table.seed,
    }
    meta.update(extra_meta or {})
    _write_sidecar(path, meta)


def read_force_table(path) -> ForceTable:
    data = np.genfromtxt(path, delimiter=",", names=True)
    meta = _read_sidecar(path)
    return ForceTable(
        centroids=np.atleast_1d(data["q_c"]),
        force=np.atleast_1d(data["force"]),
        stderr=np.atleast_1d(data["stderr"]),
        n_samples=np.atleast_1d(data["n_samples"]).astype(int),
        beta=_beta_from(meta["beta"]),
        trotter_number=int(meta["trotter_number"]),
        seed=meta.get("seed"),
    )


def write_curve(path, curve: EffectivePotentialCurve, extra_meta: dict = None):
    err = curve.stderr if curve.stderr is not None else np.zeros(curve.grid.size)
    rows = [
        (_fmt(q), _fmt(v), _fmt(e))
        for q, v, e in zip(curve.grid, curve.values, err)
    ]
    _write_rows(path, ["q", "value", "stderr"], rows)
    meta = {
        "kind": curve.kind,
        "beta": _beta_str(curve.beta),
        "anchor": curve.anchor,
        "has_stderr": curve.stderr is not None,
    }
    if curve.force_poly is not None:
        meta["force_coefficients"] = [float(c) for c in curve.force_poly.coef]
        meta["force_domain"] = [float(x) for x in curve.force_poly.domain]
    meta.update(extra_meta or {})
    _write_sidecar(path, meta)


def read_curve(path) -> EffectivePotentialCurve:
    from numpy.polynomial import Polynomial

    data = np.genfromtxt(path, delimiter=",", names=True)
    meta = _read_sidecar(path)
    poly = force_poly = None
    if "force_coefficients" in meta:
        force_poly = Polynomial(
            meta["force_coefficients"], domain=meta["force_domain"]
        )
        poly = -force_poly.integ()
        grid = np.atleast_1d(data["q"])
        # re-anchor the polynomial onto the stored values
        poly -= poly(grid[0]) - float(np.atleast_1d(data["value"])[0])
    stderr = np.atleast_1d(data["stderr"]) if meta.get("has_stderr") else None
    return EffectivePotentialCurve(
        kind=meta["kind"],
        beta=_beta_from(meta["beta"]),
        grid=np.atleast_1d(data["q"]),
        values=np.atleast_1d(data["value"]),
        stderr=stderr,
        poly=poly,
        force_poly=force_poly,
        anchor=meta.get("anchor", ""),
    )


def write_correlation(path, series: CorrelationSeries, extra_meta: dict = None):
    err = series.stderr if series.stderr is not None else np.zeros(series.times.size)
    rows = [
        (_fmt(t), _fmt(v.real), _fmt(v.imag), _fmt(e))
        for t, v, e in zip(series.times, series.values, err)
    ]
    _write_rows(path, ["t", "re", "im", "stderr"], rows)
    meta = {
        "kind": series.kind,
        "beta": _beta_str(series.beta),
        "has_stderr": series.stderr is not None,
    }
    meta.update(extra_meta or {})
    _write_sidecar(path, meta)


def read_correlation(path) -> CorrelationSeries:
    data = np.genfromtxt(path, delimiter=",", names=True)
    meta = _read_sidecar(path)
    values = np.atleast_1d(data["re"]) + 1j * np.atleast_1d(data["im"])
    stderr = np.atleast_1d(data["stderr"]) if meta.get("has_stderr") else None
    return CorrelationSeries(
        times=np.atleast_1d(data["t"]),
        values=values,
        kind=meta["kind"],
        beta=_beta_from(meta["beta"]),
        stderr=stderr,
    )


def write_lines(path, lines: SpectralLines, extra_meta: dict = None):
    rows = [
        (_fmt(f), _fmt(w), lines.kind)
        for f, w in zip(lines.frequencies, lines.weights)
    ]
    _write_rows(path, ["omega", "weight", "kind"], rows)
    meta = {"kind": lines.kind, "beta": _beta_str(lines.beta)}
    meta.update(extra_meta or {})
    _write_sidecar(path, meta)


def read_lines(path) -> SpectralLines:
    meta = _read_sidecar(path)
    freqs, weights = [], []
    with open(path, newline="") as fh:
        reader = csv.reader(fh)
        next(reader)
        for row in reader:
            freqs.append(float(row[0]))
            weights.append(float(row[1]))
    return SpectralLines(
        frequencies=np.array(freqs),
        weights=np.array(weights),
        kind=meta["kind"],
        beta=_beta_from(meta["beta"]),
    )


def write_spectrum(path, spec: SpectrumEstimate, extra_meta: dict = None):
    rows = [
        (_fmt(f), _fmt(v.real), _fmt(v.imag))
        for f, v in zip(spec.frequencies, spec.values)
    ]
    _write_rows(path, ["omega", "re", "im"], rows)
    meta = {
        "window": spec.window,
        "dt": float(spec.dt),
        "time_span": float(spec.time_span),
    }
    meta.update(extra_meta or {})
    _write_sidecar(path, meta)


def read_spectrum(path) -> SpectrumEstimate:
    data = np.genfromtxt(path, delimiter=",", names=True)
    meta = _read_sidecar(path)
    return SpectrumEstimate(
        frequencies=np.atleast_1d(data["omega"]),
        values=np.atleast_1d(data["re"]) + 1j * np.atleast_1d(data["im"]),
        window=meta["window"],
        dt=meta["dt"],
        time_span=meta["time_span"],
    )


def write_mean_estimate(path, estimate: MeanEstimate, meta: dict = None):
    payload = {
        "value": estimate.value,
        "stderr": estimate.stderr,
        "n_samples": estimate.n_samples,
    }
    payload.update(meta or {})
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def write_manifest(out_dir, stage: str, config: dict, seed: int, outputs):
    """Provenance record: config hash, seed, output hashes.

    Deliberately timestamp-free so identical reruns are byte-identical.
    """
    out_dir = Path(out_dir)
    manifest = {
        "stage": stage,
        "config_hash": config_hash(config),
        "seed": seed,
        "package_version": _package_version(),
        "outputs": {
            Path(p).name: file_sha256(p) for p in sorted(map(str, outputs))
        },
    }
    path = out_dir / f"manifest_{stage}.json"
    with open(path, "w") as fh:
        json.dump(manifest, fh, indent=2, sort_keys=True)
        fh.write("\n")
    return path


def _package_version() -> str:
    from importlib.metadata import PackageNotFoundError, version

    try:
        return version("epac")
    except PackageNotFoundError:
        return "unknown"

"""On-disk formats: instance directories, trace/report files, PGM images.

Complex vectors go to CSV with one value per row as (index, re, im); masks
are index lists; specs, summaries and reports are JSON.  Floats are written
with ``repr`` so every file round-trips bit-exactly, and regeneration with
the same seed is byte-identical.
"""

from __future__ import annotations

import csv
import json
from pathlib import Path

import numpy as np

from .errors import FileFormatError
from .grid import (
    ComplexImage,
    GridShape,
    KSpaceMask,
    MeasurementSet,
    MeasurementVector,
    SensitivityModel,
)
from .operators import LinearForward
from .phantoms import GroundTruth, Instance, InstanceSpec
from .solvers import IterationTrace
from .transform import make_plan

FORMAT_VERSION = 1

_SPEC_FIELDS = {
    "p_hor",
    "p_ver",
    "r_num",
    "basis_family",
    "b_num",
    "mask_family",
    "mask_fraction",
    "p_proj",
    "phantom_family",
    "deltas",
    "delta_mode",
    "seed",
}


def _fmt(x: float) -> str:
    return repr(float(x))


def _open_rows(path, expected_header):
    try:
        fh = open(path, newline="")
    except OSError as exc:
        raise FileFormatError(path, f"cannot open: {exc.strerror}") from exc
    with fh:
        reader = csv.reader(fh)
        try:
            header = next(reader)
        except StopIteration:
            raise FileFormatError(path, "empty file", line=1) from None
        if header != list(expected_header):
            raise FileFormatError(
                path, f"expected header {list(expected_header)}, got {header}", line=1
            )
        rows = []
        for lineno, row in enumerate(reader, start=2):
            if len(row) != len(expected_header):
                raise FileFormatError(
                    path, f"expected {len(expected_header)} fields, got {len(row)}", line=lineno
                )
            rows.append((lineno, row))
    return rows


def _parse(path, lineno, text, kind, what):
    try:
        return kind(text)
    except ValueError:
        raise FileFormatError(path, f"bad {what} value {text!r}", line=lineno) from None


def write_complex_csv(path, values: np.ndarray):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index", "re", "im"])
        for i, v in enumerate(values):
            writer.writerow([i, _fmt(v.real), _fmt(v.imag)])


def read_complex_csv(path) -> np.ndarray:
    rows = _open_rows(path, ["index", "re", "im"])
    out = np.empty(len(rows), dtype=np.complex128)
    for pos, (lineno, row) in enumerate(rows):
        idx = _parse(path, lineno, row[0], int, "index")
        if idx != pos:
            raise FileFormatError(path, f"expected index {pos}, got {idx}", line=lineno)
        out[pos] = complex(
            _parse(path, lineno, row[1], float, "re"), _parse(path, lineno, row[2], float, "im")
        )
    return out


def write_mask_csv(path, mask: KSpaceMask):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["index"])
        for idx in mask.indices:
            writer.writerow([int(idx)])


def read_mask_csv(path, shape: GridShape) -> KSpaceMask:
    rows = _open_rows(path, ["index"])
    indices = [_parse(path, lineno, row[0], int, "index") for lineno, row in rows]
    try:
        return KSpaceMask(shape, np.asarray(indices, dtype=np.int64))
    except ValueError as exc:
        raise FileFormatError(path, str(exc)) from None


def write_measurements_csv(path, vector: MeasurementVector):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["t", "index", "re", "im"])
        for t, (idx, v) in enumerate(zip(vector.mask.indices, vector.values)):
            writer.writerow([t, int(idx), _fmt(v.real), _fmt(v.imag)])


def read_measurements_csv(path, mask: KSpaceMask) -> MeasurementVector:
    rows = _open_rows(path, ["t", "index", "re", "im"])
    if len(rows) != mask.p_proj:
        raise FileFormatError(path, f"expected {mask.p_proj} rows, got {len(rows)}")
    values = np.empty(mask.p_proj, dtype=np.complex128)
    for pos, (lineno, row) in enumerate(rows):
        t = _parse(path, lineno, row[0], int, "t")
        idx = _parse(path, lineno, row[1], int, "index")
        if t != pos or idx != int(mask.indices[pos]):
            raise FileFormatError(
                path, f"row disagrees with mask: t={t}, index={idx}", line=lineno
            )
        values[pos] = complex(
            _parse(path, lineno, row[2], float, "re"), _parse(path, lineno, row[3], float, "im")
        )
    return MeasurementVector(mask, values)


def write_coefficients_csv(path, coefficients: np.ndarray):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        writer.writerow(["receiver", "n", "re", "im"])
        for j in range(coefficients.shape[0]):
            for n in range(coefficients.shape[1]):
                v = coefficients[j, n]
                writer.writerow([j, n, _fmt(v.real), _fmt(v.imag)])


def read_coefficients_csv(path, r_num: int, b_num: int) -> np.ndarray:
    rows = _open_rows(path, ["receiver", "n", "re", "im"])
    if len(rows) != r_num * b_num:
        raise FileFormatError(path, f"expected {r_num * b_num} rows, got {len(rows)}")
    out = np.empty((r_num, b_num), dtype=np.complex128)
    for pos, (lineno, row) in enumerate(rows):
        j = _parse(path, lineno, row[0], int, "receiver")
        n = _parse(path, lineno, row[1], int, "n")
        if j != pos // b_num or n != pos % b_num:
            raise FileFormatError(path, f"rows out of order at ({j}, {n})", line=lineno)
        out[j, n] = complex(
            _parse(path, lineno, row[2], float, "re"), _parse(path, lineno, row[3], float, "im")
        )
    return out


def write_pgm(path, image: ComplexImage):
    """8-bit ASCII PGM of the image modulus, scaled linearly from [0, max]."""
    mags = np.abs(image.as_grid())
    peak = mags.max()
    levels = np.zeros(mags.shape, dtype=int) if peak == 0 else np.rint(mags / peak * 255).astype(int)
    with open(path, "w") as fh:
        fh.write(f"P2\n{image.shape.p_hor} {image.shape.p_ver}\n255\n")
        for row in levels:
            fh.write(" ".join(str(v) for v in row) + "\n")


def write_json(path, payload: dict):
    with open(path, "w") as fh:
        json.dump(payload, fh, indent=2, sort_keys=True)
        fh.write("\n")


def read_json(path) -> dict:
    try:
        with open(path) as fh:
            return json.load(fh)
    except OSError as exc:
        raise FileFormatError(path, f"cannot open: {exc.strerror}") from exc
    except json.JSONDecodeError as exc:
        raise FileFormatError(path, exc.msg, line=exc.lineno) from None


def spec_to_dict(spec: InstanceSpec) -> dict:
    return {
        "p_hor": spec.p_hor,
        "p_ver": spec.p_ver,
        "r_num": spec.r_num,
        "basis_family": spec.basis_family,
        "b_num": spec.b_num,
        "mask_family": spec.mask_family,
        "mask_fraction": spec.mask_fraction,
        "p_proj": spec.p_proj,
        "phantom_family": spec.phantom_family,
        "deltas": list(spec.deltas),
        "delta_mode": spec.delta_mode,
        "seed": spec.seed,
    }


def spec_from_dict(payload: dict, path="<spec>") -> InstanceSpec:
    if not isinstance(payload, dict):
        raise FileFormatError(path, "spec must be a JSON object")
    unknown = set(payload) - _SPEC_FIELDS
    if unknown:
        raise FileFormatError(path, f"unknown spec fields: {sorted(unknown)}")
    try:
        return InstanceSpec(**payload)
    except (TypeError, ValueError) as exc:
        raise FileFormatError(path, f"invalid spec: {exc}") from None


def read_instance_spec(path) -> InstanceSpec:
    return spec_from_dict(read_json(path), path)


def write_instance(instance: Instance, out_dir) -> list[Path]:
    """Write a generated instance as the documented directory layout."""
    out = Path(out_dir)
    out.mkdir(parents=True, exist_ok=True)
    spec = instance.spec
    written = []

    def _w(name, writer, *args):
        p = out / name
        writer(p, *args)
        written.append(p)

    metadata = {
        "format_version": FORMAT_VERSION,
        "p_num": spec.grid.p_num,
        "p_proj": instance.mask.p_proj,
        "deltas_absolute": [float(d) for d in instance.measurements.deltas],
        "exact_data_norms": [float(np.linalg.norm(v.values)) for v in instance.truth.exact.vectors],
        "rho": instance.truth.rho,
        "initial_guess": "zero image",
        "flattening": "row-major, flat = (row-1)*p_hor + (col-1)",
        "noise_model": "complex Gaussian rescaled so ||noisy - exact|| = delta exactly",
    }
    _w("instance.json", write_json, {"spec": spec_to_dict(spec), "metadata": metadata})
    _w("ground_truth.csv", write_complex_csv, instance.truth.image.values)
    _w("mask.csv", write_mask_csv, instance.mask)
    _w("coefficients.csv", write_coefficients_csv, instance.model.coefficients)
    for n, b in enumerate(instance.model.basis):
        _w(f"basis_{n}.csv", write_complex_csv, b.values)
    for i in range(spec.r_num):
        _w(f"measurements_{i}.csv", write_measurements_csv, instance.measurements.vectors[i])
        _w(f"measurements_exact_{i}.csv", write_measurements_csv, instance.truth.exact.vectors[i])
    return written


def load_instance(instance_dir) -> Instance:
    """Rebuild an :class:`Instance` from a directory written by ``write_instance``."""
    d = Path(instance_dir)
    payload = read_json(d / "instance.json")
    if "spec" not in payload or "metadata" not in payload:
        raise FileFormatError(d / "instance.json", "missing 'spec' or 'metadata' section")
    spec = spec_from_dict(payload["spec"], d / "instance.json")
    meta = payload["metadata"]
    shape = spec.grid

    truth_values = read_complex_csv(d / "ground_truth.csv")
    if truth_values.size != shape.p_num:
        raise FileFormatError(d / "ground_truth.csv", "ground truth length does not match grid")
    image = ComplexImage(shape, truth_values)
    mask = read_mask_csv(d / "mask.csv", shape)
    coeff = read_coefficients_csv(d / "coefficients.csv", spec.r_num, spec.b_num)
    basis = []
    for n in range(spec.b_num):
        vals = read_complex_csv(d / f"basis_{n}.csv")
        if vals.size != shape.p_num:
            raise FileFormatError(d / f"basis_{n}.csv", "basis length does not match grid")
        basis.append(ComplexImage(shape, vals))
    model = SensitivityModel(tuple(basis), coeff)
    plan = make_plan(shape.p_num)
    operators = tuple(LinearForward(model, mask, plan, i) for i in range(spec.r_num))

    deltas = np.asarray(meta["deltas_absolute"], dtype=np.float64)
    noisy = MeasurementSet(
        tuple(read_measurements_csv(d / f"measurements_{i}.csv", mask) for i in range(spec.r_num)),
        deltas,
    )
    exact = MeasurementSet(
        tuple(
            read_measurements_csv(d / f"measurements_exact_{i}.csv", mask)
            for i in range(spec.r_num)
        ),
        np.zeros(spec.r_num),
    )
    truth = GroundTruth(
        image=image,
        coefficients=coeff,
        exact=exact,
        rho=float(meta["rho"]),
        initial_image=ComplexImage.zero(shape),
    )
    return Instance(
        spec=spec, truth=truth, model=model, mask=mask, operators=operators, measurements=noisy
    )


def write_trace_csv(path, trace: IterationTrace):
    with open(path, "w", newline="") as fh:
        writer = csv.writer(fh, lineterminator="\n")
        header = ["k", "receiver", "omega", "alpha", "residual"]
        if trace.errors is not None:
            header.append("error_to_truth")
        writer.writerow(header)
        for t in range(trace.n_steps):
            row = [
                int(trace.steps[t]),
                int(trace.receivers[t]),
                int(trace.omegas[t]),
                _fmt(trace.alphas[t]),
                _fmt(trace.residuals[t]),
            ]
            if trace.errors is not None:
                row.append(_fmt(trace.errors[t]))
            writer.writerow(row)

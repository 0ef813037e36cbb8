"""JSON and CSV serialization for states, channels, ensembles, and reports.

Complex numbers are encoded as two-element [re, im] lists so every file is
plain JSON.  Emitters produce canonical text (sorted keys, two-space indent,
trailing newline) so identical inputs yield byte-identical artifacts.
"""
from __future__ import annotations

import json
from typing import Any

import numpy as np

from .capacity import CapacityReport, Slope
from .channels import QuantumChannel, channel_from_name
from .errors import ValidationError
from .information import CQEnsemble
from .ki import KIDecomposition
from .spaces import TensorSpace
from .states import DensityMatrix
from .tradeoff import TradeoffCurve


def dumps_canonical(obj: Any) -> str:
    """Deterministic JSON text for any tree of plain Python values."""
    return json.dumps(obj, indent=2, sort_keys=True) + "\n"


def load_json(path: str) -> Any:
    try:
        with open(path, "r", encoding="utf-8") as fh:
            return json.load(fh)
    except OSError as exc:
        raise ValidationError(f"cannot read {path}: {exc}") from exc
    except json.JSONDecodeError as exc:
        raise ValidationError(f"malformed JSON in {path}: {exc}") from exc


def save_text(path: str, text: str) -> None:
    with open(path, "w", encoding="utf-8", newline="") as fh:
        fh.write(text)


def _require(obj: Any, key: str, context: str) -> Any:
    if not isinstance(obj, dict):
        raise ValidationError(f"{context}: expected a JSON object, got {type(obj).__name__}")
    if key not in obj:
        raise ValidationError(f"{context}: missing required key {key!r}")
    return obj[key]


def _as_complex_matrix(data: Any, context: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 3 or arr.shape[-1] != 2:
        raise ValidationError(
            f"{context}: expected rows of [re, im] pairs, got shape {arr.shape}")
    return arr[..., 0] + 1j * arr[..., 1]


def _as_complex_vector(data: Any, context: str) -> np.ndarray:
    arr = np.asarray(data, dtype=float)
    if arr.ndim != 2 or arr.shape[-1] != 2:
        raise ValidationError(
            f"{context}: expected a list of [re, im] pairs, got shape {arr.shape}")
    return arr[:, 0] + 1j * arr[:, 1]


def matrix_to_json(matrix: np.ndarray) -> list:
    m = np.asarray(matrix, dtype=complex)
    return np.stack([m.real, m.imag], axis=-1).tolist()


def vector_to_json(vector: np.ndarray) -> list:
    v = np.asarray(vector, dtype=complex)
    return np.stack([v.real, v.imag], axis=-1).tolist()


def state_to_json(state: DensityMatrix) -> dict:
    return {"dims": [[label, dim] for label, dim in state.space.subsystems],
            "matrix": matrix_to_json(state.matrix)}


def state_from_json(data: Any) -> DensityMatrix:
    dims = _require(data, "dims", "state")
    if not isinstance(dims, list) or not dims:
        raise ValidationError("state: 'dims' must be a non-empty list of [label, dim]")
    subsystems = []
    for item in dims:
        if (not isinstance(item, (list, tuple)) or len(item) != 2
                or not isinstance(item[0], str)):
            raise ValidationError(f"state: bad subsystem entry {item!r}")
        subsystems.append((item[0], int(item[1])))
    space = TensorSpace.of(*subsystems)
    matrix = _as_complex_matrix(_require(data, "matrix", "state"), "state.matrix")
    return DensityMatrix(space, matrix)


def channel_to_json(channel: QuantumChannel) -> dict:
    return {"dim_in": channel.dim_in, "dim_out": channel.dim_out,
            "kraus": [matrix_to_json(k) for k in channel.kraus]}


def channel_from_json(data: Any) -> QuantumChannel:
    dim_in = int(_require(data, "dim_in", "channel"))
    dim_out = int(_require(data, "dim_out", "channel"))
    kraus_raw = _require(data, "kraus", "channel")
    if not isinstance(kraus_raw, list) or not kraus_raw:
        raise ValidationError("channel: 'kraus' must be a non-empty list")
    kraus = [_as_complex_matrix(k, f"channel.kraus[{i}]")
             for i, k in enumerate(kraus_raw)]
    return QuantumChannel(dim_in=dim_in, dim_out=dim_out, kraus=tuple(kraus))


def ensemble_to_json(ensemble: CQEnsemble) -> dict:
    return {"dim_A": ensemble.dim_a, "dim_R": ensemble.dim_r,
            "entries": [{"p": float(p), "vector": vector_to_json(v)}
                        for p, v in zip(ensemble.probs, ensemble.vectors)]}


def ensemble_from_json(data: Any) -> CQEnsemble:
    dim_a = int(_require(data, "dim_A", "ensemble"))
    dim_r = int(_require(data, "dim_R", "ensemble"))
    entries = _require(data, "entries", "ensemble")
    if not isinstance(entries, list) or not entries:
        raise ValidationError("ensemble: 'entries' must be a non-empty list")
    probs = []
    vectors = []
    for i, entry in enumerate(entries):
        probs.append(float(_require(entry, "p", f"ensemble.entries[{i}]")))
        vec = _as_complex_vector(_require(entry, "vector", f"ensemble.entries[{i}]"),
                                 f"ensemble.entries[{i}].vector")
        if vec.size != dim_a * dim_r:
            raise ValidationError(
                f"ensemble.entries[{i}]: vector length {vec.size} differs "
                f"from dim_A * dim_R = {dim_a * dim_r}")
        vectors.append(vec)
    return CQEnsemble(dim_a=dim_a, dim_r=dim_r, probs=np.asarray(probs),
                      vectors=np.stack(vectors, axis=0))


def resolve_channel(text: str) -> QuantumChannel:
    """A channel from either a name string like 'dephasing(0.1)' or a JSON path."""
    if "(" in text:
        return channel_from_name(text)
    return channel_from_json(load_json(text))


def slope_to_json(slope: Slope) -> dict:
    if slope.degenerate:
        return {"kind": "degenerate"}
    if slope.infinite:
        return {"kind": "infinite"}
    return {"kind": "finite", "value": float(slope.value)}


def kid_to_json(kid: KIDecomposition) -> dict:
    return {
        "system": list(kid.system_labels),
        "reference": list(kid.ref_labels),
        "dim_system": kid.dim_a,
        "dim_reference": kid.dim_r,
        "dead_dim": kid.dead_dim,
        "blocks": [{"prob": float(b.prob), "dim_q": b.dim_q, "dim_n": b.dim_n}
                   for b in kid.blocks],
        "entropy_classical": kid.s_c,
        "entropy_quantum_given_classical": kid.s_q_given_c,
        "entropy_joint": kid.s_cq,
        "reconstruction_error": kid.reconstruction_error,
    }


def curve_to_json(curve: TradeoffCurve) -> dict:
    return {
        "level_l": curve.level_l,
        "c_q_endpoint": float(curve.c_q_endpoint),
        "c_c_endpoint": float(curve.c_c_endpoint),
        "points": [{"r_q": float(p.r_q), "r_c": float(p.r_c),
                    "weight_t": (None if p.synthetic else float(p.weight_t)),
                    "synthetic": bool(p.synthetic)}
                   for p in curve.points],
    }


def curve_to_csv(curve: TradeoffCurve) -> str:
    lines = ["r_q,r_c,weight_t,synthetic"]
    for p in curve.points:
        t_text = "" if p.synthetic else format(float(p.weight_t), ".17g")
        lines.append(f"{float(p.r_q):.17g},{float(p.r_c):.17g},{t_text},"
                     f"{int(p.synthetic)}")
    return "\n".join(lines) + "\n"


def report_to_json(report: CapacityReport) -> dict:
    return {
        "slope": slope_to_json(report.slope),
        "level_l": report.level_l,
        "r_q_star": float(report.r_q_star),
        "r_c_star": float(report.r_c_star),
        "c_g": float(report.c_g),
        "copies_per_use": (None if report.copies_per_use is None
                           else float(report.copies_per_use)),
        "entropy_classical": report.s_c,
        "entropy_quantum_given_classical": report.s_q_given_c,
        "entropy_joint": report.s_cq,
        "curve": curve_to_json(report.curve),
    }

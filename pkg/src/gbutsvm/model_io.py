"""Versioned flat-file model serialization.

Format (line oriented, UTF-8):

    gbutsvm-model 1
    kind <tsvm|utsvm|gbutsvm>
    kernel <linear|rbf>
    sigma <real>
    c1 <real> ... (all hyperparameters)
    n_features <int>
    theta_plus <comma-joined reals>
    ...
    reference <n_rows>      (kernel models only; rows follow)

Reals are printed with 17 significant digits, which round-trips IEEE
doubles bit-exactly. Writes are atomic (temp file + rename).
"""

from __future__ import annotations

from pathlib import Path

import numpy as np

from ._fsio import atomic_write_text
from .errors import ModelFormatError
from .models import Hyperparams, TrainedModel

_MAGIC = "gbutsvm-model"
_VERSION = 1


def _fmt(x):
    return "%.17g" % float(x)


def _fmt_vec(v):
    return "-" if v.size == 0 else ",".join(_fmt(x) for x in v)


def _parse_vec(text, where):
    if text == "-":
        return np.zeros(0)
    try:
        return np.array([float(x) for x in text.split(",")], dtype=np.float64)
    except ValueError as exc:
        raise ModelFormatError(f"bad vector in {where}: {exc}") from None


def save_model(model: TrainedModel, path):
    h = model.params
    lines = [
        f"{_MAGIC} {_VERSION}",
        f"kind {model.kind}",
        f"kernel {h.kernel}",
        f"sigma {_fmt(h.sigma)}",
        f"c1 {_fmt(h.c1)}",
        f"c2 {_fmt(h.c2)}",
        f"cu {_fmt(h.cu)}",
        f"epsilon {_fmt(h.epsilon)}",
        f"n_features {model.n_features}",
        f"theta_plus {_fmt_vec(model.theta_plus)}",
        f"theta_minus {_fmt_vec(model.theta_minus)}",
        f"alpha {_fmt_vec(model.alpha)}",
        f"mu {_fmt_vec(model.mu)}",
        f"lam {_fmt_vec(model.lam)}",
        f"nu {_fmt_vec(model.nu)}",
    ]
    if model.reference is None:
        lines.append("reference 0")
    else:
        lines.append(f"reference {model.reference.shape[0]}")
        for row in model.reference:
            lines.append(",".join(_fmt(x) for x in row))
    atomic_write_text(path, "\n".join(lines) + "\n")


def load_model(path) -> TrainedModel:
    path = Path(path)
    lines = path.read_text(encoding="utf-8").splitlines()
    if not lines:
        raise ModelFormatError(f"{path}: empty model file")
    head = lines[0].split()
    if len(head) != 2 or head[0] != _MAGIC:
        raise ModelFormatError(f"{path}: not a {_MAGIC} file")
    try:
        version = int(head[1])
    except ValueError:
        raise ModelFormatError(f"{path}: bad version {head[1]!r}") from None
    if version != _VERSION:
        raise ModelFormatError(
            f"{path}: unsupported model version {version} (supported: {_VERSION})"
        )

    fields = {}
    i = 1
    reference = None
    while i < len(lines):
        line = lines[i].rstrip("\n")
        if not line.strip():
            i += 1
            continue
        key, _, value = line.partition(" ")
        if key == "reference":
            try:
                n_rows = int(value)
            except ValueError:
                raise ModelFormatError(f"{path}: bad reference count {value!r}") from None
            if n_rows:
                rows = lines[i + 1 : i + 1 + n_rows]
                if len(rows) != n_rows:
                    raise ModelFormatError(f"{path}: truncated reference block")
                reference = np.array(
                    [_parse_vec(r, f"{path} reference row") for r in rows]
                )
                i += n_rows
        else:
            fields[key] = value
        i += 1

    required = ["kind", "kernel", "sigma", "c1", "c2", "cu", "epsilon",
                "n_features", "theta_plus", "theta_minus", "alpha", "mu", "lam", "nu"]
    missing = [k for k in required if k not in fields]
    if missing:
        raise ModelFormatError(f"{path}: missing fields {missing}")
    try:
        params = Hyperparams(
            c1=float(fields["c1"]),
            c2=float(fields["c2"]),
            cu=float(fields["cu"]),
            epsilon=float(fields["epsilon"]),
            kernel=fields["kernel"],
            sigma=float(fields["sigma"]),
        )
        n_features = int(fields["n_features"])
    except ValueError as exc:
        raise ModelFormatError(f"{path}: {exc}") from None
    if fields["kind"] not in ("tsvm", "utsvm", "gbutsvm"):
        raise ModelFormatError(f"{path}: unknown kind {fields['kind']!r}")
    return TrainedModel(
        kind=fields["kind"],
        params=params,
        n_features=n_features,
        theta_plus=_parse_vec(fields["theta_plus"], f"{path} theta_plus"),
        theta_minus=_parse_vec(fields["theta_minus"], f"{path} theta_minus"),
        reference=reference,
        alpha=_parse_vec(fields["alpha"], f"{path} alpha"),
        mu=_parse_vec(fields["mu"], f"{path} mu"),
        lam=_parse_vec(fields["lam"], f"{path} lam"),
        nu=_parse_vec(fields["nu"], f"{path} nu"),
        diagnostics={},
    )

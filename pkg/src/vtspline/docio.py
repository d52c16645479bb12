"""Problem and result documents, atom CSV tables.

Documents are JSON with a ``schema_version``. Every float is written with 17
significant digits so that ``parse`` followed by ``dump`` reproduces a
canonical document byte for byte.
"""

from __future__ import annotations

import csv
import io
import json
import math
from dataclasses import dataclass, field
from typing import Any

import numpy as np

from .measurements import DiracSample, ForwardOperator, SeparableBox
from .multidim import GreenFactor, MultiAtom, MultiFunctional, MultiSpline, PolyFactor
from .odo_core import Interval, Odo, SystemKind
from .tensor_spline import Family, TensorAtom, TensorSpline, fundamental_pair

__all__ = [
    "SCHEMA_VERSION",
    "DocumentError",
    "ProblemDocument",
    "dumps",
    "loads",
    "spline_to_record",
    "spline_from_record",
    "multi_to_record",
    "multi_from_record",
    "atoms_csv",
    "fmt",
]

SCHEMA_VERSION = 1
CSV_HEADER = ("family", "n", "n'", "weight", "x1", "x2")
FAMILY_TAGS = {
    Family.TENSOR_GREEN: "tensor_green",
    Family.POLY_GREEN: "poly_green",
    Family.GREEN_POLY: "green_poly",
    Family.POLY_POLY: "poly_poly",
}
TAG_FAMILIES = {v: k for k, v in FAMILY_TAGS.items()}


class DocumentError(ValueError):
    pass


# ---------------------------------------------------------------- text


def fmt(x: float) -> str:
    """17 significant digits; integral values keep a decimal point so they stay floats."""
    x = float(x)
    if not math.isfinite(x):
        raise DocumentError(f"non-finite number {x} cannot be written")
    s = "%.17g" % x
    if "e" not in s and "." not in s and "n" not in s:
        s += ".0"
    return s


def _emit(obj: Any, indent: int, out: list[str]) -> None:
    pad = "  " * indent
    if isinstance(obj, dict):
        if not obj:
            out.append("{}")
            return
        out.append("{\n")
        items = list(obj.items())
        for i, (k, v) in enumerate(items):
            out.append(f"{pad}  {json.dumps(str(k))}: ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i + 1 < len(items) else "\n")
        out.append(pad + "}")
    elif isinstance(obj, (list, tuple)):
        if not obj:
            out.append("[]")
            return
        if all(isinstance(v, (int, float, np.integer, np.floating)) and not isinstance(v, bool) for v in obj):
            out.append("[" + ", ".join(_scalar(v) for v in obj) + "]")
            return
        out.append("[\n")
        for i, v in enumerate(obj):
            out.append(pad + "  ")
            _emit(v, indent + 1, out)
            out.append(",\n" if i + 1 < len(obj) else "\n")
        out.append(pad + "]")
    else:
        out.append(_scalar(obj))


def _scalar(v: Any) -> str:
    if v is None or isinstance(v, (bool, str)):
        return json.dumps(v)
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return fmt(v)
    raise DocumentError(f"cannot serialize {type(v).__name__}")


def dumps(doc: dict) -> str:
    out: list[str] = []
    _emit(doc, 0, out)
    return "".join(out) + "\n"


def loads(text: str) -> dict:
    try:
        doc = json.loads(text)
    except json.JSONDecodeError as exc:
        raise DocumentError(f"invalid document: {exc}") from exc
    if not isinstance(doc, dict):
        raise DocumentError("document must be an object")
    version = doc.get("schema_version")
    if version != SCHEMA_VERSION:
        raise DocumentError(f"unsupported schema_version {version!r}")
    return doc


# ---------------------------------------------------------------- splines


def _knot(x: float) -> float | None:
    return None if not np.isfinite(x) else float(x)


def spline_to_record(spline: TensorSpline) -> dict:
    return {
        "atoms": [
            {
                "family": FAMILY_TAGS[a.family],
                "n": a.n1,
                "n'": a.n2,
                "weight": a.weight,
                "x1": _knot(a.x1),
                "x2": _knot(a.x2),
            }
            for a in spline.atoms
        ]
    }


def _atom_from(rec: dict) -> TensorAtom:
    try:
        family = TAG_FAMILIES[rec["family"]]
    except KeyError as exc:
        raise DocumentError(f"unknown atom family {rec.get('family')!r}") from exc
    x1 = float("nan") if rec.get("x1") is None else float(rec["x1"])
    x2 = float("nan") if rec.get("x2") is None else float(rec["x2"])
    return TensorAtom(family, float(rec["weight"]), int(rec.get("n", 0)), int(rec.get("n'", 0)), x1, x2)


def spline_from_record(rec: dict, systems, domain) -> TensorSpline:
    return TensorSpline(systems, domain, tuple(_atom_from(r) for r in rec.get("atoms", [])))


def multi_to_record(spline: MultiSpline) -> dict:
    def factor(f):
        return {"green": float(f.x)} if isinstance(f, GreenFactor) else {"poly": int(f.n)}

    return {
        "atoms": [{"weight": a.weight, "factors": [factor(f) for f in a.factors]} for a in spline.atoms],
        "null": [float(v) for v in spline.null.ravel()],
    }


def multi_from_record(rec: dict, D: int, N: int) -> MultiSpline:
    atoms = []
    for r in rec.get("atoms", []):
        fs = tuple(GreenFactor(float(f["green"])) if "green" in f else PolyFactor(int(f["poly"])) for f in r["factors"])
        atoms.append(MultiAtom(float(r["weight"]), fs))
    null = np.asarray(rec.get("null", np.zeros(N**D)), dtype=float).reshape((N,) * D)
    return MultiSpline(D, N, atoms, null)


def atoms_csv(spline: TensorSpline | MultiSpline) -> str:
    """Atom table. Multi-spline rows hold ``;``-joined per-axis monomial degrees in ``n``
    and Green knots in ``x1``; null-tensor entries follow as ``null`` rows."""
    buf = io.StringIO()
    w = csv.writer(buf, lineterminator="\n")
    w.writerow(CSV_HEADER)
    if isinstance(spline, TensorSpline):
        for a in spline.atoms:
            w.writerow([
                FAMILY_TAGS[a.family],
                a.n1,
                a.n2,
                fmt(a.weight),
                "" if not np.isfinite(a.x1) else fmt(a.x1),
                "" if not np.isfinite(a.x2) else fmt(a.x2),
            ])
    else:
        for a in spline.atoms:
            knots = ";".join(fmt(f.x) if isinstance(f, GreenFactor) else "" for f in a.factors)
            degs = ";".join("" if isinstance(f, GreenFactor) else str(f.n) for f in a.factors)
            w.writerow(["multi", degs, "", fmt(a.weight), knots, ""])
        for idx in zip(*np.nonzero(spline.null)):
            w.writerow(["null", ";".join(str(int(n)) for n in idx), "", fmt(spline.null[idx]), "", ""])
    return buf.getvalue()


# ---------------------------------------------------------------- problem documents


def _functional_from(rec: dict, multi: bool):
    kind = rec.get("type")
    if not multi and kind == "box":
        return SeparableBox(tuple(float(v) for v in rec["rect"]))
    if not multi and kind == "dirac":
        return DiracSample(tuple(float(v) for v in rec["t"]))
    if kind == "box":
        return MultiFunctional.box(rec["lo"], rec["hi"])
    if kind == "dirac":
        return MultiFunctional.dirac(rec["t"])
    raise DocumentError(f"unknown functional type {kind!r}")


@dataclass
class ProblemDocument:
    """Parsed view of a problem document; ``raw`` keeps the original mapping."""

    raw: dict
    multi: bool
    alpha: tuple[float, float] = (0.0, 0.0)
    order: tuple[int, int] = (1, 1)
    D: int = 2
    N: int = 1
    domain: tuple[Interval, Interval] = (Interval(0.0, 1.0), Interval(0.0, 1.0))
    functionals: list = field(default_factory=list)
    seed: int = 0

    @classmethod
    def parse(cls, doc: dict) -> "ProblemDocument":
        if doc.get("kind", "problem") != "problem":
            raise DocumentError("not a problem document")
        ops = doc.get("operators")
        if not isinstance(ops, dict):
            raise DocumentError("missing operators")
        if doc.get("fidelity", "quadratic") != "quadratic":
            raise DocumentError(f"unsupported fidelity {doc.get('fidelity')!r}")
        sigma = float(doc.get("noise_sigma", 0.0))
        if not sigma >= 0.0:
            raise DocumentError("noise_sigma must be non-negative")
        kind = doc.get("system", SystemKind.K_FUNDAMENTAL.value)
        if kind != SystemKind.K_FUNDAMENTAL.value:
            raise DocumentError(f"documents support the {SystemKind.K_FUNDAMENTAL.value} system only, got {kind!r}")
        seed = int(doc.get("seed", 0))
        if "dimension" in ops:
            D, N = int(ops["dimension"]), int(ops["N"])
            fns = [_functional_from(r, True) for r in doc.get("functionals", [])]
            out = cls(doc, True, D=D, N=N, functionals=fns, seed=seed)
        else:
            rect = [float(v) for v in doc.get("domain", [0.0, 1.0, 0.0, 1.0])]
            domain = (Interval(rect[0], rect[1]), Interval(rect[2], rect[3]))
            fns = [_functional_from(r, False) for r in doc.get("functionals", [])]
            out = cls(
                doc,
                False,
                alpha=(float(ops["alpha1"]), float(ops["alpha2"])),
                order=(int(ops["N1"]), int(ops["N2"])),
                domain=domain,
                functionals=fns,
                seed=seed,
            )
        out._check_knots()
        return out

    @property
    def odos(self) -> tuple[Odo, Odo]:
        return Odo(self.alpha[0], self.order[0]), Odo(self.alpha[1], self.order[1])

    @property
    def systems(self):
        return fundamental_pair(*self.odos, self.domain)

    @property
    def forward(self) -> ForwardOperator:
        return ForwardOperator(tuple(self.functionals), self.domain)

    @property
    def y(self) -> np.ndarray | None:
        y = self.raw.get("y")
        return None if y is None else np.asarray(y, dtype=float)

    @property
    def sigma(self) -> float:
        return float(self.raw.get("noise_sigma", 0.0))

    def setting(self, key: str, default):
        return self.raw.get(key, default)

    def truth(self):
        rec = self.raw.get("ground_truth")
        if rec is None:
            return None
        if self.multi:
            return multi_from_record(rec, self.D, self.N)
        return spline_from_record(rec, self.systems, self.domain)

    def _check_knots(self) -> None:
        truth = self.truth()
        if truth is None:
            return
        if self.multi:
            bad = [f.x for a in truth.atoms for f in a.factors if isinstance(f, GreenFactor) and not 0.0 <= f.x <= 1.0]
        else:
            K1, K2 = self.domain
            bad = [a.x1 for a in truth.atoms if a.family.green1 and not K1.contains(a.x1)]
            bad += [a.x2 for a in truth.atoms if a.family.green2 and not K2.contains(a.x2)]
        if bad:
            raise DocumentError(f"ground-truth knots outside the domain: {bad}")

# src/calculus/serialization.py
"""
JSON documents for coefficient fields, symbols and normal-form results.

Expression nodes are tagged by "op". A node reached a second time is written
as {"op": "ref", "id": n} pointing at the first occurrence, so shared
subtrees stay shared after a round trip. Complex numbers are [re, im].
"""
from __future__ import annotations

from typing import TYPE_CHECKING, Any

from calculus.coefficients import (
    CoefficientField,
    Composition,
    Conjugate,
    Constant,
    FiniteDifference,
    Harmonic,
    LinearCombination,
    Polynomial,
    Product,
    Shift,
    constant,
)
from calculus.symbols import FourierSymbol, symbol_sup_norm
from core.context import SemiclassicalContext

if TYPE_CHECKING:
    from normal_form.iteration import NormalFormResult

SCHEMA = 1


def _c(z: complex) -> list[float]:
    z = complex(z)
    return [z.real, z.imag]


def _z(pair) -> complex:
    return complex(pair[0], pair[1])


class _Encoder:
    def __init__(self):
        self.ids: dict[int, int] = {}

    def node(self, f: CoefficientField) -> dict[str, Any]:
        key = id(f)
        if key in self.ids:
            return {"op": "ref", "id": self.ids[key]}
        out = self._body(f)
        if f.children:
            self.ids[key] = len(self.ids)
            out["id"] = self.ids[key]
        return out

    def _body(self, f: CoefficientField) -> dict[str, Any]:
        if isinstance(f, Constant):
            return {"op": "constant", "value": _c(f.value)}
        if isinstance(f, Polynomial):
            return {
                "op": "polynomial",
                "constant": _c(f.constant),
                "linear": [_c(v) for v in f.linear],
                "quadratic": [[_c(v) for v in row] for row in f.quadratic],
            }
        if isinstance(f, Harmonic):
            return {"op": "harmonic", "amplitude": _c(f.amplitude), "frequency": list(f.frequency), "phase": f.phase}
        if isinstance(f, LinearCombination):
            return {"op": "sum", "terms": [{"coef": _c(c), "field": self.node(g)} for c, g in f.terms]}
        if isinstance(f, Product):
            return {"op": "product", "factors": [self.node(g) for g in f.factors]}
        if isinstance(f, Conjugate):
            return {"op": "conj", "inner": self.node(f.inner)}
        if isinstance(f, Shift):
            return {"op": "shift", "offset": list(f.offset), "inner": self.node(f.inner)}
        if isinstance(f, Composition):
            return {"op": "compose", "profile": f.profile, "order": f.order, "inner": self.node(f.inner)}
        if isinstance(f, FiniteDifference):
            return {"op": "fd", "axes": list(f.axes), "step": f.step, "inner": self.node(f.inner)}
        raise TypeError(f"Cannot serialize coefficient node {type(f).__name__}")


class _Decoder:
    def __init__(self):
        self.nodes: dict[int, CoefficientField] = {}

    def node(self, doc: dict[str, Any]) -> CoefficientField:
        op = doc["op"]
        if op == "ref":
            return self.nodes[doc["id"]]
        f = self._build(op, doc)
        if "id" in doc:
            self.nodes[doc["id"]] = f
        return f

    def _build(self, op: str, doc: dict[str, Any]) -> CoefficientField:
        if op == "constant":
            return constant(_z(doc["value"]))
        if op == "polynomial":
            return Polynomial(
                _z(doc["constant"]),
                tuple(_z(v) for v in doc["linear"]),
                tuple(tuple(_z(v) for v in row) for row in doc["quadratic"]),
            )
        if op == "harmonic":
            return Harmonic(_z(doc["amplitude"]), tuple(doc["frequency"]), doc["phase"])
        if op == "sum":
            return LinearCombination(tuple((_z(t["coef"]), self.node(t["field"])) for t in doc["terms"]))
        if op == "product":
            return Product(tuple(self.node(g) for g in doc["factors"]))
        if op == "conj":
            return Conjugate(self.node(doc["inner"]))
        if op == "shift":
            return Shift(self.node(doc["inner"]), tuple(doc["offset"]))
        if op == "compose":
            return Composition(doc["profile"], doc["order"], self.node(doc["inner"]))
        if op == "fd":
            return FiniteDifference(self.node(doc["inner"]), tuple(doc["axes"]), doc["step"])
        raise ValueError(f"Unknown expression node: {op}")


def field_to_json(f: CoefficientField) -> dict[str, Any]:
    return _Encoder().node(f)


def field_from_json(doc: dict[str, Any]) -> CoefficientField:
    return _Decoder().node(doc)


def symbol_to_json(P: FourierSymbol) -> dict[str, Any]:
    enc = _Encoder()
    ctx = P.ctx
    return {
        "schema": SCHEMA,
        "dims": ctx.d,
        "hbar": ctx.hbar,
        "kappa": ctx.kappa,
        "gamma": ctx.gamma,
        "delta": ctx.delta,
        "modes": [{"k": list(k), "coeff": enc.node(f)} for k, f in P.coeffs.items()],
    }


def symbol_from_json(doc: dict[str, Any]) -> FourierSymbol:
    ctx = SemiclassicalContext(
        d=doc["dims"], hbar=doc["hbar"], kappa=doc["kappa"], gamma=doc["gamma"], delta=doc["delta"]
    )
    dec = _Decoder()
    return FourierSymbol(ctx, {tuple(m["k"]): dec.node(m["coeff"]) for m in doc["modes"]})


def normal_form_to_json(nf: "NormalFormResult", include_symbols: bool = True) -> dict[str, Any]:
    out: dict[str, Any] = {
        "schema": SCHEMA,
        "hamiltonian": {"name": nf.H.name, "params": nf.H.params},
        "N": nf.N,
        "M": nf.M,
        "scale": nf.scale,
        "band_limit": nf.band_limit,
        "alpha": nf.ctx.alpha,
        "K0": symbol_to_json(nf.K0),
        "effective_average_norm": symbol_sup_norm(nf.effective_average),
        "diagnostics": [vars(d).copy() for d in nf.diagnostics],
    }
    if include_symbols:
        out["steps"] = [
            {"P": symbol_to_json(s.P), "A": symbol_to_json(s.A), "K_next": symbol_to_json(s.K_next)}
            for s in nf.steps
        ]
    return out

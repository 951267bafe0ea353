import json
from unittest.mock import MagicMock, patch

import numpy as np
import pytest

from calculus.coefficients import compose, cosine, multiply, polynomial, shift
from calculus.serialization import (
    field_from_json,
    field_to_json,
    normal_form_to_json,
    symbol_from_json,
    symbol_to_json,
)
from calculus.symbols import FourierSymbol, coefficient_distance
from normal_form.iteration import normal_form_iterate


def test_field_document_evaluates_identically():
    """A decoded expression evaluates like the original."""
    f = compose("phi", shift(polynomial(1, 0.2, [1.5]), [0.1])) * cosine([2.0], amplitude=1j)
    g = field_from_json(json.loads(json.dumps(field_to_json(f))))
    xi = np.linspace(-2.0, 2.0, 9).reshape(-1, 1)
    np.testing.assert_allclose(g.evaluate(xi), f.evaluate(xi))


def test_shared_nodes_stay_shared(ctx1):
    """A subtree used twice is written once and referenced after."""
    h = multiply(cosine([1.0]), polynomial(1, 0.0, [1.0]))
    P = FourierSymbol(ctx1, {(1,): h, (2,): h + cosine([3.0])})
    doc = symbol_to_json(P)
    assert '"op": "ref"' in json.dumps(doc)

    Q = symbol_from_json(json.loads(json.dumps(doc)))
    shared = Q.coefficient((1,))
    assert any(g is shared for _, g in Q.coefficient((2,)).terms)
    assert coefficient_distance(P, Q) < 1e-14


def test_symbol_document_header(cos_perturbation):
    """Documents carry the schema and the context."""
    doc = symbol_to_json(cos_perturbation)
    assert doc["schema"] == 1
    assert doc["dims"] == 1
    assert doc["hbar"] == cos_perturbation.ctx.hbar
    assert [m["k"] for m in doc["modes"]] == [[-1], [1]]


def test_unknown_node_rejected():
    """Unknown ops do not decode."""
    with pytest.raises(ValueError, match="Unknown expression node"):
        field_from_json({"op": "bessel"})


@patch('normal_form.iteration.get_client')
def test_normal_form_document(mock_get_client, H1, cos_perturbation):
    """Step symbols are optional; diagnostics are always written."""
    mock_get_client.return_value = MagicMock()
    nf = normal_form_iterate(H1, cos_perturbation, N=1, M=2)

    full = normal_form_to_json(nf)
    brief = normal_form_to_json(nf, include_symbols=False)

    assert len(full["steps"]) == 1
    assert "steps" not in brief
    assert brief["N"] == 1
    assert brief["hamiltonian"]["name"] == "quadratic"
    assert len(brief["diagnostics"]) == 1
    json.dumps(brief)

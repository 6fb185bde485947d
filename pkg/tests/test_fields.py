import numpy as np
import pytest

from gktwist.core.errors import DomainError, StructureError
from gktwist.models.geometry import Chart
from gktwist.services import jets
from gktwist.services.fields import (
    Form,
    Section,
    StructureField,
    VectorField,
    add_forms,
    b_transform_field,
    courant_bracket,
    exterior_derivative,
    interior_product,
    lie_bracket,
    lie_derivative_form,
    nijenhuis_field,
    nijenhuis_tensor,
    structure_from_complex,
    structure_from_symplectic,
    tensoriality_check,
)

PLANE = Chart(("u", "v"), ((0.5, 1.5), (0.5, 1.5)))
SPACE = Chart(("x", "y", "z"), ((0.5, 1.5),) * 3)
FOUR = Chart(("u1", "u2", "u3", "u4"), ((0.5, 1.5),) * 4)


def _symplectic(first: str) -> StructureField:
    return structure_from_symplectic(Form.of(FOUR, 2, {("u1", "u2"): first, ("u3", "u4"): "1"}))


def _form_values(form: Form, point) -> dict:
    return {k: v for k, v in form.evaluate(point).items() if abs(v) > 1e-14}


def test_u_dv_bracket_is_half_du():
    bracket = courant_bracket(Section.of(PLANE, vector=["0", "u"]), Section.of(PLANE, covector=["0", "1"]))
    for point in [(0.7, 1.2), (1.4, 0.6)]:
        np.testing.assert_allclose(bracket.evaluate(point), [0.0, 0.0, 0.5, 0.0], atol=1e-14)


def test_courant_bracket_is_antisymmetric():
    a = Section.of(PLANE, vector=["u*v", "v^2"], covector=["sin(u)", "u*v^3"])
    b = Section.of(PLANE, vector=["exp(v)", "u"], covector=["v", "u^2"])
    point = (0.9, 1.1)
    np.testing.assert_allclose(
        courant_bracket(a, b).evaluate(point), -courant_bracket(b, a).evaluate(point), atol=1e-12
    )


def test_lie_bracket_of_coordinate_fields():
    x = VectorField.of(PLANE, ["1", "0"])
    y = VectorField.of(PLANE, ["0", "u"])
    bracket = lie_bracket(x, y)
    env = {"u": 1.0, "v": 1.0}
    assert [jets.value(c.evaluate(env)) for c in bracket.components] == pytest.approx([0.0, 1.0])


def test_cartan_formula_on_one_and_two_forms():
    x = VectorField.of(SPACE, ["y*z", "x^2", "sin(x) + z"])
    forms = [
        Form.of(SPACE, 1, {"x": "y*z^2", "y": "exp(x)", "z": "x*y"}),
        Form.of(SPACE, 2, {("x", "y"): "z^2", ("y", "z"): "x*y", ("x", "z"): "cos(y)"}),
    ]
    point = (0.8, 1.3, 1.1)
    for omega in forms:
        rhs = add_forms(interior_product(x, exterior_derivative(omega)), exterior_derivative(interior_product(x, omega)))
        gap = add_forms(lie_derivative_form(x, omega), rhs, signs=[1, -1])
        assert all(abs(v) <= 1e-12 for v in gap.evaluate(point).values())


def test_d_squared_vanishes():
    f = Form.of(SPACE, 0, {(): "x*y^2*sin(z)"})
    one = Form.of(SPACE, 1, {"x": "y*z^2", "y": "exp(x)", "z": "x*y"})
    point = (1.2, 0.6, 0.9)
    assert _form_values(exterior_derivative(exterior_derivative(f)), point) == {}
    assert _form_values(exterior_derivative(exterior_derivative(one)), point) == {}


def test_unordered_form_names_pick_up_a_sign():
    form = Form.of(PLANE, 2, {("v", "u"): "1"})
    assert form.evaluate((1.0, 1.0)) == {(0, 1): -1.0}
    with pytest.raises(DomainError):
        exterior_derivative(Form.of(SPACE, 3, {("x", "y", "z"): "1"}))


@pytest.mark.parametrize(
    "field",
    [
        structure_from_complex(PLANE, [["0", "-1"], ["1", "0"]]),
        structure_from_complex(PLANE, [["u", "-(1 + u^2)"], ["1", "-u"]]),
        b_transform_field(structure_from_complex(PLANE, [["0", "-1"], ["1", "0"]]), Form.of(PLANE, 2, {("u", "v"): "u^2 + v"})),
    ],
    ids=["constant-complex", "varying-complex", "closed-b-transform"],
)
def test_integrable_plane_structures(field):
    for point in [(0.6, 0.7), (1.0, 1.0), (1.3, 0.9)]:
        assert np.max(np.abs(nijenhuis_tensor(field, point))) < 1e-9


def test_closed_symplectic_is_integrable_and_open_one_is_not():
    point = FOUR.center()
    assert np.max(np.abs(nijenhuis_tensor(_symplectic("1 + u1^2"), point))) < 1e-9
    assert np.max(np.abs(nijenhuis_tensor(_symplectic("u3"), point))) > 1e-6


def test_nijenhuis_is_tensorial_and_antisymmetric():
    j = _symplectic("u3")
    point = (0.9, 1.1, 1.2, 0.7)
    assert tensoriality_check(j, point) <= 1e-9
    a = Section.of(FOUR, vector=["u2", "1", "0", "u1*u3"], covector=["0", "u4", "1", "0"])
    b = Section.of(FOUR, vector=["0", "u3^2", "1", "0"], covector=["u1", "0", "0", "u2"])
    np.testing.assert_allclose(nijenhuis_field(j, a, b, point), -nijenhuis_field(j, b, a, point), atol=1e-10)


def test_nijenhuis_rejects_non_structures():
    doubled = StructureField.of(PLANE, [["2" if i == k else "0" for k in range(4)] for i in range(4)])
    with pytest.raises(StructureError):
        nijenhuis_tensor(doubled, (1.0, 1.0))


def test_b_transform_needs_two_form():
    with pytest.raises(DomainError):
        b_transform_field(structure_from_complex(PLANE, [["0", "-1"], ["1", "0"]]), Form.of(PLANE, 1, {"u": "1"}))

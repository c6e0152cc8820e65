import numpy as np
import pytest

from app.transform.models import (
    LevelNotConfiguredError,
    LevelScheme,
    ScaleRule,
    SchemeDefinitionError,
    ShiftRule,
    integer_part,
)


def test_from_rules_geometric_proportional():
    scheme = LevelScheme.from_rules((1, 3), c=2.0, count=16)

    assert scheme.scales == (2.0, 4.0, 8.0)
    assert scheme.shifts == (1.0, 2.0, 4.0)
    assert scheme.counts == (16, 16, 16)
    assert scheme.levels == range(1, 4)


def test_from_rules_linear_constant_with_count_exponent():
    scheme = LevelScheme.from_rules(
        (2, 4),
        scale_rule=ScaleRule.LINEAR,
        base=4.0,
        shift_rule=ShiftRule.CONSTANT,
        shift_step=0.5,
        count_exponent=0.5,
    )

    assert scheme.scales == (8.0, 12.0, 16.0)
    assert scheme.shifts == (0.5, 0.5, 0.5)
    assert scheme.counts == (2, 3, 4)
    assert scheme.a(3) == 12.0


def test_from_rules_accepts_plain_strings():
    scheme = LevelScheme.from_rules(
        (1, 2), scale_rule="linear", shift_rule="constant", count=4
    )

    assert scheme.scales == (2.0, 4.0)
    assert scheme.shifts == (1.0, 1.0)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"levels": (3, 2), "count": 4},
        {"levels": (1, 2)},
        {"levels": (1, 2), "count": 4, "count_exponent": 1.0},
    ],
)
def test_from_rules_rejects_bad_input(kwargs):
    options = {key: value for key, value in kwargs.items() if key != "levels"}
    with pytest.raises(SchemeDefinitionError):
        LevelScheme.from_rules(kwargs["levels"], **options)


@pytest.mark.parametrize(
    "kwargs",
    [
        {"scales": (), "shifts": (), "counts": ()},
        {"scales": (1.0, 2.0), "shifts": (1.0,), "counts": (1, 1)},
        {"scales": (2.0, 2.0), "shifts": (1.0, 1.0), "counts": (1, 1)},
        {"scales": (1.0, 2.0), "shifts": (1.0, 0.0), "counts": (1, 1)},
        {"scales": (1.0, 2.0), "shifts": (1.0, 1.0), "counts": (1, 0)},
        {"scales": (1.0, 2.0), "shifts": (1.0, 1.0), "counts": (1, 1), "c": 0.0},
        {"scales": (1.0, 2.0), "shifts": (1.0, 1.0), "counts": (1, 1), "M_cap": 0},
        {"scales": (1.0,), "shifts": (1.0,), "counts": (1,), "first_level": 0},
    ],
)
def test_level_scheme_validation(kwargs):
    arguments = {"first_level": 1, "c": 1.0, **kwargs}
    with pytest.raises(SchemeDefinitionError):
        LevelScheme(**arguments)


def test_level_lookup_outside_scheme(small_scheme):
    with pytest.raises(LevelNotConfiguredError) as excinfo:
        small_scheme.a(4)

    assert excinfo.value.details == {"level": 4}


def test_shift_positions(small_scheme):
    np.testing.assert_array_equal(small_scheme.b(2, np.arange(1, 4)), [3.0, 6.0, 9.0])


@pytest.mark.parametrize(
    ("x", "expected"),
    [(2.7, 2), (3.0, 3), (2.9999999999999996, 3), (1152.0000000000002, 1152), (0.5, 0)],
)
def test_integer_part(x, expected):
    assert integer_part(x) == expected

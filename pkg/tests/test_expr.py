import cmath

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from jetq import expr as E
from jetq.expr import KernelExpr, KernelSyntaxError, parse_kernel, serialize


class TestParseExamples:
    def test_weighted_disc_kernel(self):
        e = parse_kernel("(1 - z1*wb1)^(-l)", 1)
        expected = E.pow(E.sub(E.const(1), E.mul(E.z(1), E.wb(1))),
                         E.neg(E.param("l")))
        assert e == expected

    def test_constant_one(self):
        assert parse_kernel("1", 2) == E.const(1)

    def test_unbalanced_paren_offset(self):
        text = "(1 - z1*wb1"
        with pytest.raises(KernelSyntaxError) as err:
            parse_kernel(text, 1)
        assert err.value.offset == len(text)

    def test_variable_index_exceeds_dimension(self):
        with pytest.raises(KernelSyntaxError):
            parse_kernel("z3", 2)
        with pytest.raises(KernelSyntaxError):
            parse_kernel("wb2", 1)

    def test_zero_index_rejected(self):
        with pytest.raises(KernelSyntaxError):
            parse_kernel("z0", 1)

    def test_unknown_character(self):
        with pytest.raises(KernelSyntaxError) as err:
            parse_kernel("1 + @", 1)
        assert err.value.offset == 4

    def test_reserved_function_name(self):
        with pytest.raises(KernelSyntaxError):
            parse_kernel("log", 1)
        assert parse_kernel("log(2)", 1) == E.log(E.const(2))

    def test_complex_literal(self):
        e = parse_kernel("2 + 3i", 1)
        assert e == E.add(E.const(2), E.const(3j))

    def test_signed_numeric_exponent(self):
        e = parse_kernel("(1 - z1*wb1)^-2", 1)
        assert e.args[1] == E.const(-2)
        e2 = parse_kernel("(1 - z1*wb1)^(-2)", 1)
        assert e2.args[1] == E.const(-2)

    def test_precedence(self):
        e = parse_kernel("1 + 2*z1", 1)
        assert e == E.add(E.const(1), E.mul(E.const(2), E.z(1)))
        e2 = parse_kernel("-z1^2", 1)
        assert e2 == E.neg(E.pow(E.z(1), E.const(2)))


class TestSerializeExamples:
    def test_canonical_pow(self):
        e = E.pow(E.sub(E.const(1), E.mul(E.z(1), E.wb(1))), E.const(-2))
        assert serialize(e) == "(1 - z1*wb1)^(-2)"

    def test_constant(self):
        assert serialize(E.const(1)) == "1"

    def test_product_of_powers(self):
        e = E.mul(
            E.pow(E.sub(E.const(1), E.mul(E.z(1), E.wb(1))), E.neg(E.param("l"))),
            E.pow(E.sub(E.const(1), E.mul(E.z(2), E.wb(2))), E.neg(E.param("m"))),
        )
        assert serialize(e) == "(1 - z1*wb1)^(-l)*(1 - z2*wb2)^(-m)"


# ---------------------------------------------------------------------------
# round-trip property over the parser image

_name = st.sampled_from(["l", "m", "lam", "mu", "alpha", "t_1"])
_number = st.one_of(
    st.integers(min_value=0, max_value=9).map(float),
    st.floats(min_value=0.0, max_value=8.0, allow_nan=False, width=32).map(
        lambda x: round(x, 4)),
)


def _atoms(m: int):
    return st.one_of(
        _number.map(E.const),
        _number.map(lambda x: E.const(x * 1j)),
        st.integers(1, m).map(E.z),
        st.integers(1, m).map(E.wb),
        _name.map(E.param),
    )


_exponents = st.one_of(
    st.integers(-6, 6).map(lambda n: E.const(float(n))),
    _number.map(lambda x: E.const(-x)),
    _name.map(E.param),
    _name.map(lambda n: E.neg(E.param(n))),
)


def _trees(m: int):
    def extend(children):
        pair = st.tuples(children, children)
        return st.one_of(
            pair.map(lambda ab: E.add(*ab)),
            pair.map(lambda ab: E.sub(*ab)),
            pair.map(lambda ab: E.mul(*ab)),
            pair.map(lambda ab: E.div(*ab)),
            children.map(E.neg),
            st.tuples(children, _exponents).map(lambda be: E.pow(*be)),
            children.map(E.log),
            children.map(E.exp),
        )
    return st.recursive(_atoms(m), extend, max_leaves=40)


@given(_trees(3))
@settings(max_examples=300, deadline=None)
def test_serialize_parse_round_trip(tree: KernelExpr):
    assert parse_kernel(serialize(tree), 3) == tree


@given(st.text(alphabet="@#$%&!?~`|", min_size=1, max_size=3))
@settings(max_examples=50, deadline=None)
def test_rejection_of_foreign_tokens(junk):
    with pytest.raises(KernelSyntaxError):
        parse_kernel("1 + " + junk, 1)


# ---------------------------------------------------------------------------
# canonicalization

class TestCanonical:
    def test_constant_folding(self):
        e = parse_kernel("2*3 + 1 - 1", 1)
        assert E.canonicalize(e) == E.const(6)

    def test_zero_one_elimination(self):
        e = parse_kernel("0*z1 + 1*wb1 + z1^1", 1)
        c = E.canonicalize(e)
        assert c == E.cadd(E.wb(1), E.z(1))

    def test_sorted_products_merge_signs(self):
        a = E.cmul(E.cneg(E.param("l")), E.cneg(E.wb(1)))
        b = E.cmul(E.param("l"), E.wb(1))
        assert a == b

    def test_idempotent(self):
        e = parse_kernel("(1 - z1*wb1)^(-l) * exp(z1) / (2 + z2)", 2)
        c = E.canonicalize(e)
        assert E.canonicalize(c) == c

    def test_pow_exponent_must_be_variable_free(self):
        with pytest.raises(ValueError):
            E.pow(E.z(1), E.z(1))


# ---------------------------------------------------------------------------
# affine substitution

class TestSubstitution:
    def test_linear_map_on_variables(self):
        # z1 -> v1 + v2 under the diagonal-coordinates map
        e = E.z(1)
        out = E.substitute_affine(e, [[1, 1], [-1, 1]])
        assert out == E.cadd(E.z(1), E.z(2))

    def test_wb_gets_conjugated_coefficients(self):
        e = E.wb(1)
        out = E.substitute_affine(e, [[1j, 0], [0, 1]])
        assert out == E.cmul(E.const(-1j), E.wb(1))

    def test_shift(self):
        out = E.substitute_affine(E.z(1), [[1]], shift=[0.5])
        assert out == E.cadd(E.const(0.5), E.z(1))


# ---------------------------------------------------------------------------
# kernel spec files

class TestKernelFile:
    def test_full_file(self):
        text = "dim = 2\nkernel = (1 - z1*wb1)^(-l)\nparams = l=2, extra=0.5\n"
        expr, dim, params = E.parse_kernel_file(text)
        assert dim == 2
        assert params == {"l": 2.0, "extra": 0.5}
        assert expr.kind == "pow"

    def test_missing_kernel_line(self):
        with pytest.raises(ValueError):
            E.parse_kernel_file("dim = 1\n")

    def test_unknown_key(self):
        with pytest.raises(ValueError):
            E.parse_kernel_file("dim = 1\nkernel = 1\nbogus = 3\n")

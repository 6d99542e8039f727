from hypothesis import given
from hypothesis import strategies as st

from molbench.hashing import (
    code_bytes, derive_seed, fnv1a64, hash_code, splitmix64,
)


class TestFnv:
    def test_published_vectors(self):
        assert fnv1a64(b"") == 0xCBF29CE484222325
        assert fnv1a64(b"a") == 0xAF63DC4C8601EC8C
        assert fnv1a64(b"foobar") == 0x85944171F73967E8

    def test_output_is_64_bit(self):
        assert 0 <= fnv1a64(b"anything at all") < 2**64


class TestCodeBytes:
    def test_type_tags_prevent_collisions(self):
        assert code_bytes(1) != code_bytes("1")
        assert code_bytes(True) != code_bytes(1)
        assert code_bytes(None) != code_bytes(0)
        assert code_bytes((1, 2)) != code_bytes((1, (2,)))
        assert code_bytes(()) != code_bytes(None)

    def test_negative_ints_encode(self):
        assert code_bytes(-1) != code_bytes(2**64 - 2)
        assert hash_code(-5) == hash_code(-5)

    def test_nesting(self):
        a = hash_code(("C", 0, (1, 2)))
        b = hash_code(("C", 0, (1, 2)))
        c = hash_code(("C", 0, (2, 1)))
        assert a == b != c

    def test_unsupported_type_rejected(self):
        import pytest

        with pytest.raises(TypeError):
            code_bytes(3.14)

    @given(st.recursive(
        st.one_of(st.integers(-2**63, 2**63 - 1), st.text(max_size=8),
                  st.booleans(), st.none()),
        lambda inner: st.tuples(inner, inner), max_leaves=8))
    def test_deterministic(self, value):
        assert code_bytes(value) == code_bytes(value)


class TestSeeds:
    def test_splitmix_reference_values(self):
        # first three outputs of the reference sequence seeded with 0
        assert splitmix64(0) == 0xE220A8397B1DCDAF

    def test_derive_seed_separates_tags(self):
        seeds = {derive_seed(0), derive_seed(0, "grid"), derive_seed(0, "final"),
                 derive_seed(0, "grid", 1), derive_seed(1, "grid"),
                 derive_seed(0, "tree", 0), derive_seed(0, "tree", 1)}
        assert len(seeds) == 7

    def test_stable_across_calls(self):
        assert derive_seed(42, "cv", 3) == derive_seed(42, "cv", 3)

    def test_range(self):
        for seed in (0, 1, 2**63, 2**64 - 1):
            assert 0 <= derive_seed(seed, "x") < 2**64

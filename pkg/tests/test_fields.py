from fractions import Fraction
from itertools import product

import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from gibbsfields.fields import (
    FLOAT,
    FiniteDistribution,
    ValidationError,
    check_marginal_consistency,
    is_positive,
    marginalize,
    read_distribution_file,
    seeded_positive_table,
    table_field,
    write_distribution_file,
)
from gibbsfields.lattice import (
    Configuration,
    DomainError,
    Volume,
    binary_alphabet,
    enumerate_configurations,
    line_window,
    spin_alphabet,
    volume,
)
from gibbsfields.models import example1_pair, example2_model


BIN = binary_alphabet()


def uniform_table(vol):
    configs = enumerate_configurations(vol, BIN)
    p = Fraction(1, len(configs))
    return FiniteDistribution(vol, BIN, {c: p for c in configs})


def test_distribution_validates_sum():
    vol = volume(0)
    bad = {Configuration(vol, (0,)): Fraction(1, 2),
           Configuration(vol, (1,)): Fraction(1, 3)}
    with pytest.raises(ValidationError, match="sum"):
        FiniteDistribution(vol, BIN, bad)


def test_distribution_requires_full_enumeration():
    vol = volume(0, 1)
    partial = {Configuration(vol, (0, 0)): Fraction(1)}
    with pytest.raises(ValidationError):
        FiniteDistribution(vol, BIN, partial)


def test_distribution_rejects_negative():
    vol = volume(0)
    bad = {Configuration(vol, (0,)): Fraction(3, 2),
           Configuration(vol, (1,)): Fraction(-1, 2)}
    with pytest.raises(ValidationError, match="negative"):
        FiniteDistribution(vol, BIN, bad)


def test_marginalize_identity_and_uniform():
    p = uniform_table(volume(0, 1))
    assert marginalize(p, p.volume) is p
    m = marginalize(p, volume(0))
    assert all(v == Fraction(1, 2) for v in m.probs.values())
    with pytest.raises(DomainError):
        marginalize(p, volume(7))


def test_marginal_tower_on_seeded_table():
    m = seeded_positive_table(line_window(5), BIN, seed=11)
    S, T, V = volume(-2, -1, 0, 1), volume(-1, 0, 1), volume(0)
    via_T = marginalize(marginalize(m.marginal(S), T), V)
    direct = marginalize(m.marginal(S), V)
    assert all(via_T[c] == direct[c] for c in direct)
    # independent summation oracle over the raw window table
    from gibbsfields.lattice import restrict

    for target in (V, T):
        sums = {}
        for cfg, p in m.table.items():
            key = restrict(cfg, target)
            sums[key] = sums.get(key, Fraction(0)) + p
        table = m.marginal(target)
        assert all(table[c] == sums[c] for c in sums)


def brute_force_chain_table(model, n):
    """Independent oracle: multiply initial law and transition probabilities."""
    sign = model.sign
    k, c = model.k, model.c
    vol = Volume.of(range(1, n + 1))
    table = {}
    for symbols in product((-1, 1), repeat=n):
        p = Fraction(1 + sign * symbols[0] * k[1], 2)
        for j in range(2, n + 1):
            prev, cur = symbols[j - 2], symbols[j - 1]
            p *= (Fraction(1 + c[j - 2] * prev * cur, 2)
                  * (1 + sign * cur * k[j]) / (1 + sign * prev * k[j - 1]))
        table[Configuration(vol, symbols)] = p
    return FiniteDistribution(vol, spin_alphabet(), table)


@pytest.mark.parametrize("sign_index", [0, 1])
def test_example1_prefix_marginalization_oracle(sign_index):
    """Summing site m+1 out of the (m+1)-prefix table gives the m-prefix,
    and both match the transition-product oracle exactly."""
    model = example1_pair(6, Fraction(1, 2), Fraction(1, 2))[sign_index]
    for m in range(1, 6):
        prefix = Volume.of(range(1, m + 1))
        bigger = Volume.of(range(1, m + 2))
        direct = model.marginal(prefix)
        summed = marginalize(model.marginal(bigger), prefix)
        oracle = brute_force_chain_table(model, m)
        for cfg in direct:
            assert direct[cfg] == summed[cfg] == oracle[cfg]


def test_is_positive():
    p = uniform_table(volume(0, 1))
    assert is_positive(p)
    vol = volume(0)
    half = {Configuration(vol, (0,)): Fraction(1), Configuration(vol, (1,)): Fraction(0)}
    assert not is_positive(FiniteDistribution(vol, BIN, half))


def exact_mixture_prob(tau, size, ones):
    """Oracle: expand (1-p)^m binomially and integrate term by term."""
    total = Fraction(0)
    from math import comb

    a = ones + tau - 1
    m = size - ones
    for j in range(m + 1):
        total += Fraction(comb(m, j) * (-1) ** j, a + j + 1)
    return tau * total


def test_example2_positivity_via_integral_oracle():
    model = example2_model(1, 13)
    for size in range(1, 7):
        vol = Volume.of(range(size))
        table = model.marginal(vol)
        assert is_positive(table)
        for cfg in table:
            assert table[cfg] == exact_mixture_prob(1, size, cfg.count(1))


def test_table_field_one_site_and_product():
    vol = volume(0)
    law = {Configuration(vol, (0,)): Fraction(1, 3),
           Configuration(vol, (1,)): Fraction(2, 3)}
    m = table_field(vol, BIN, law)
    assert m.marginal(vol)[Configuration(vol, (0,))] == Fraction(1, 3)

    pair = volume(0, 1)
    prod = {}
    for c in enumerate_configurations(pair, BIN):
        p = Fraction(1)
        for s in c.symbols:
            p *= Fraction(1, 3) if s == 0 else Fraction(2, 3)
        prod[c] = p
    m2 = table_field(pair, BIN, prod)
    for site in pair:
        single = m2.marginal(Volume.of([site]))
        assert single[Configuration(Volume.of([site]), (0,))] == Fraction(1, 3)


@given(st.integers(0, 500))
@settings(max_examples=25, deadline=None)
def test_random_tables_marginal_consistent(seed):
    m = seeded_positive_table(line_window(4), BIN, seed)
    S = volume(-1, 0, 1)
    for site in S:
        assert check_marginal_consistency(m, S, Volume.of([site]))


def test_check_marginal_consistency_negative_control():
    class Corrupted:
        def __init__(self, inner):
            self.inner = inner
            self.window = inner.window
            self.alphabet = inner.alphabet
            self.mode = inner.mode
            self.tol = inner.tol

        def marginal(self, V):
            table = self.inner.marginal(V)
            if len(V) == 1:
                probs = dict(table.items())
                keys = list(probs)
                probs[keys[0]] += Fraction(1, 100)
                probs[keys[1]] -= Fraction(1, 100)
                return FiniteDistribution(V, self.alphabet, probs)
            return table

    m = Corrupted(seeded_positive_table(line_window(4), BIN, 3))
    assert not check_marginal_consistency(m, volume(-1, 0), volume(0))


def test_example2_marginal_consistency():
    model = example2_model(2, 9)
    assert check_marginal_consistency(model, volume(1, 2, 3), volume(1))


def test_distribution_file_roundtrip_bit_exact(tmp_path):
    m = seeded_positive_table(line_window(3), BIN, 17)
    path = tmp_path / "table.tbl"
    write_distribution_file(m.table, path)
    again = read_distribution_file(path)
    assert again.volume == m.table.volume
    assert all(again[c] == m.table[c] for c in m.table)
    # byte-for-byte stable across a second write
    second = tmp_path / "second.tbl"
    write_distribution_file(again, second)
    assert path.read_text() == second.read_text()


def test_float_mode_tolerance():
    vol = volume(0)
    probs = {Configuration(vol, (0,)): 0.5 + 4e-13, Configuration(vol, (1,)): 0.5}
    dist = FiniteDistribution(vol, BIN, probs, FLOAT)
    assert is_positive(dist)
    bad = {Configuration(vol, (0,)): 0.51, Configuration(vol, (1,)): 0.5}
    with pytest.raises(ValidationError):
        FiniteDistribution(vol, BIN, bad, FLOAT)

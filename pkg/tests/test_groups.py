"""Group presets, membership checks, and hash-to-group derivation."""

import random

import pytest
import sympy

from ivxvsim.groups import (
    MAX_CANDIDATE_BOUND,
    UnknownPreset,
    hash_to_element,
    setup,
)


def test_toy_preset_values():
    params = setup("toy", 8)
    assert (params.p, params.q, params.g) == (23, 11, 2)
    assert params.candidate_bound == 8
    assert pow(params.g, params.q, params.p) == 1


def test_toy_bound_exceeds_group_order():
    with pytest.raises(ValueError, match="C <= q"):
        setup("toy", 12)


def test_standard_preset_is_a_schnorr_group():
    # Independent primality/structure oracle for the 2048-bit parameters.
    params = setup("standard", 10)
    assert sympy.isprime(params.p)
    assert sympy.isprime(params.q)
    assert (params.p - 1) % params.q == 0
    assert params.p.bit_length() == 2048
    assert params.g != 1
    assert pow(params.g, params.q, params.p) == 1


def test_unknown_preset_rejected():
    with pytest.raises(UnknownPreset):
        setup("medium", 4)


def test_candidate_bound_validation():
    with pytest.raises(ValueError):
        setup("toy", 0)
    with pytest.raises(ValueError):
        setup("toy", -3)
    with pytest.raises(ValueError):
        setup("standard", MAX_CANDIDATE_BOUND + 1)
    params = setup("standard", MAX_CANDIDATE_BOUND)
    assert params.candidate_bound == MAX_CANDIDATE_BOUND


def test_toy_bound_at_group_order_is_allowed():
    assert setup("toy", 11).candidate_bound == 11


def test_is_element_matches_enumerated_subgroup():
    params = setup("toy", 4)
    members = {pow(params.g, i, params.p) for i in range(params.q)}
    assert len(members) == params.q
    for x in range(params.p):
        assert params.is_element(x) == (x in members)
    assert not params.is_element(params.p)
    assert not params.is_element(-1)


def test_random_scalar_range():
    params = setup("toy", 4)
    rng = random.Random(0)
    seen = {params.random_scalar(rng) for _ in range(300)}
    assert seen == set(range(params.q))


def test_hash_to_element_is_deterministic_and_in_group():
    params = setup("toy", 4)
    xs = [hash_to_element(params, b"commit-gen", i) for i in range(16)]
    assert xs == [hash_to_element(params, b"commit-gen", i) for i in range(16)]
    for x in xs:
        assert params.is_element(x)
        assert x != 1  # derived generators must not be the identity


def test_hash_to_element_separates_inputs_in_large_group():
    # In the toy group collisions are expected (only 11 elements), so the
    # distinctness check runs on the standard parameters.
    params = setup("standard", 4)
    a = hash_to_element(params, b"commit-gen", 0)
    b = hash_to_element(params, b"commit-gen", 1)
    c = hash_to_element(params, b"commit-base", 0)
    assert len({a, b, c}) == 3
    for x in (a, b, c):
        assert params.is_element(x)

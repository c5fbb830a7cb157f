"""Answer evaluation and store file format tests."""

import itertools
import random
import struct

import pytest

from mpirlab.ratemath import SchemeParams
from mpirlab.server import (
    MAGIC,
    MessageStore,
    answer,
    generate_store,
    read_store,
    write_store,
)


def sp(K, D, L, q=3, m=None):
    return SchemeParams(num_messages=K, num_demands=D, subpacket_count=L,
                        field_order=q, message_len=m)


def small_store():
    params = sp(4, 2, 2, q=7, m=4)
    messages = (
        (1, 2, 3, 4),
        (5, 6, 0, 1),
        (2, 2, 4, 4),
        (6, 5, 3, 0),
    )
    return MessageStore(params=params, messages=messages)


def test_store_validation():
    params = sp(2, 1, 1, q=3, m=2)
    with pytest.raises(ValueError):
        MessageStore(params=params, messages=((0, 1),))
    with pytest.raises(ValueError):
        MessageStore(params=params, messages=((0, 1), (2, 3)))
    with pytest.raises(ValueError):
        MessageStore(params=params, messages=((0, 1), (2,)))


def test_subpacket_view():
    store = small_store()
    assert store.subpacket(1, 1) == (1, 2)
    assert store.subpacket(1, 2) == (3, 4)
    assert store.subpacket(4, 2) == (3, 0)


def test_zero_query_gets_empty_share():
    store = small_store()
    assert answer(store, (0,) * 8) == ()


def test_unit_query_returns_subpacket():
    store = small_store()
    query = [0] * 8
    query[2 * 2 + 1] = 1  # message 3, physical subpacket 2
    assert answer(store, query) == store.subpacket(3, 2)


def test_worked_example_combination():
    # Coefficient a on (message 1, subpacket 1) plus h on (message 3,
    # subpacket 1) must return a*X[1,1] + h*X[3,1] symbol for symbol.
    store = small_store()
    a, h = 3, 2
    query = [a, 0, 0, 0, h, 0, 0, 0]
    want = tuple((a * x + h * y) % 7
                 for x, y in zip(store.subpacket(1, 1), store.subpacket(3, 1)))
    assert answer(store, query) == want


def test_answer_validation():
    store = small_store()
    with pytest.raises(ValueError):
        answer(store, (0,) * 7)
    with pytest.raises(ValueError):
        answer(store, (7,) + (0,) * 7)


def test_answer_length_and_determinism():
    params = sp(3, 2, 2, q=5, m=6)
    store = generate_store(params, random.Random(21))
    rng = random.Random(22)
    for _ in range(50):
        query = tuple(rng.randrange(5) for _ in range(6))
        share = answer(store, query)
        assert share == answer(store, query)
        assert len(share) == (0 if not any(query) else 3)


def test_answer_linearity_exhaustive():
    params = sp(2, 1, 1, q=3, m=2)
    store = generate_store(params, random.Random(1))

    def as_vec(share):
        return share if share else (0, 0)

    for q1, q2 in itertools.product(itertools.product(range(3), repeat=2), repeat=2):
        merged = tuple((a + b) % 3 for a, b in zip(q1, q2))
        lhs = as_vec(answer(store, merged))
        rhs = tuple((a + b) % 3
                    for a, b in zip(as_vec(answer(store, q1)), as_vec(answer(store, q2))))
        assert lhs == rhs


# ---------------------------------------------------------------------------
# file format
# ---------------------------------------------------------------------------

def test_store_round_trip(tmp_path):
    params = sp(4, 2, 2, q=13, m=6)
    store = generate_store(params, random.Random(77))
    path = tmp_path / "store.mpir"
    write_store(store, path)
    loaded = read_store(path, num_demands=2)
    assert loaded == store


def test_store_header_layout(tmp_path):
    store = small_store()
    path = tmp_path / "store.mpir"
    write_store(store, path)
    raw = path.read_bytes()
    assert raw[:4] == MAGIC
    assert raw[4] == 1
    assert struct.unpack_from("<5I", raw, 5) == (7, 4, 4, 2, 0)
    assert struct.unpack_from("<I", raw, 25)[0] == store.messages[0][0]
    assert len(raw) == 25 + 4 * 16


def test_store_rejects_malformed_files(tmp_path):
    store = small_store()
    path = tmp_path / "store.mpir"
    write_store(store, path)
    good = bytearray(path.read_bytes())

    def expect_reject(raw, hint):
        bad = tmp_path / "bad.mpir"
        bad.write_bytes(bytes(raw))
        with pytest.raises(ValueError, match=hint):
            read_store(bad, num_demands=2)

    expect_reject(b"RIPM" + good[4:], "magic")
    expect_reject(good[:4] + bytes([9]) + good[5:], "version")
    corrupted = bytearray(good)
    struct.pack_into("<I", corrupted, 21, 5)  # reserved word
    expect_reject(corrupted, "reserved")
    corrupted = bytearray(good)
    struct.pack_into("<I", corrupted, 25, 7)  # symbol == q is out of range
    expect_reject(corrupted, "out of range")
    expect_reject(good[:-4], "symbols")
    expect_reject(good + b"\x00" * 4, "symbols")
    expect_reject(good[:10], "truncated")

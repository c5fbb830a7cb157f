"""Server side: replicated message storage and answer evaluation.

Servers are honest-but-curious and stateless: one query in, one linear
combination out.  A store holds K messages of m symbols each over GF(q),
viewed as K*L physical subpackets of m/L symbols (subpacket (k, l) is the
symbol range [(l-1)*m/L, l*m/L) of message k).  The user's secret
subpacket relabeling never reaches this module.

Store file format (bit-exact):
    magic "MPIR" | version byte 0x01 | five u32 LE: q, K, m, L, reserved=0
    | K*m symbols, each a u32 LE < q, message-major then symbol-major.
Loaders reject bad magic/version, nonzero reserved words, out-of-range
symbols, and truncated or oversized payloads.
"""

from __future__ import annotations

import random
import struct
from dataclasses import dataclass
from pathlib import Path

from .ratemath import SchemeParams

MAGIC = b"MPIR"
VERSION = 1


@dataclass
class MessageStore:
    """K messages of m symbols over GF(q), identically replicated."""

    params: SchemeParams
    messages: tuple[tuple[int, ...], ...]

    def __post_init__(self):
        p = self.params
        if len(self.messages) != p.num_messages:
            raise ValueError(
                f"store must hold {p.num_messages} messages, got {len(self.messages)}")
        for k, message in enumerate(self.messages, start=1):
            if len(message) != p.message_len:
                raise ValueError(
                    f"message {k} has {len(message)} symbols, expected {p.message_len}")
            if any(not 0 <= s < p.field_order for s in message):
                raise ValueError(f"message {k} has symbols outside GF({p.field_order})")

    def subpacket(self, message: int, physical: int) -> tuple[int, ...]:
        """Physical subpacket ``physical`` (1-based) of message ``message``."""
        spl = self.params.subpacket_len
        return self.messages[message - 1][(physical - 1) * spl:physical * spl]


def generate_store(params: SchemeParams, rng: random.Random) -> MessageStore:
    """Store filled with uniform random symbols."""
    q, m = params.field_order, params.message_len
    messages = tuple(
        tuple(rng.randrange(q) for _ in range(m))
        for _ in range(params.num_messages)
    )
    return MessageStore(params=params, messages=messages)


def answer(store: MessageStore, query) -> tuple[int, ...]:
    """Evaluate one query: the coefficient-weighted sum of subpackets.

    An all-zero query gets an explicitly empty share (length 0), so a
    silent server still shows up in download accounting.  Any other query
    yields exactly m/L symbols.
    """
    p = store.params
    expected = p.num_messages * p.subpacket_count
    if len(query) != expected:
        raise ValueError(f"query must have {expected} coefficients, got {len(query)}")
    if any(not 0 <= c < p.field_order for c in query):
        raise ValueError(f"query coefficients must lie in GF({p.field_order})")
    if not any(query):
        return ()
    q, spl, L = p.field_order, p.subpacket_len, p.subpacket_count
    out = [0] * spl
    for pos, c in enumerate(query):
        if c:
            k, l = divmod(pos, L)
            segment = store.messages[k][l * spl:(l + 1) * spl]
            for s, symbol in enumerate(segment):
                out[s] = (out[s] + c * symbol) % q
    return tuple(out)


def write_store(store: MessageStore, path) -> None:
    p = store.params
    header = MAGIC + bytes([VERSION]) + struct.pack(
        "<5I", p.field_order, p.num_messages, p.message_len, p.subpacket_count, 0)
    flat = [s for message in store.messages for s in message]
    Path(path).write_bytes(header + struct.pack(f"<{len(flat)}I", *flat))


def read_store(path, num_demands: int) -> MessageStore:
    """Load a store file; the demand count is protocol state, not stored."""
    raw = Path(path).read_bytes()
    head = struct.calcsize("<4sB5I")
    if len(raw) < head:
        raise ValueError(f"store file {path} is truncated")
    magic, version, q, K, m, L, reserved = struct.unpack_from("<4sB5I", raw)
    if magic != MAGIC:
        raise ValueError(f"bad magic {magic!r} in {path}")
    if version != VERSION:
        raise ValueError(f"unsupported store version {version}")
    if reserved != 0:
        raise ValueError("reserved header word must be zero")
    params = SchemeParams(num_messages=K, num_demands=num_demands,
                          subpacket_count=L, field_order=q, message_len=m)
    body = raw[head:]
    if len(body) != 4 * K * m:
        raise ValueError(f"expected {K * m} symbols, found {len(body) // 4}")
    flat = struct.unpack(f"<{K * m}I", body)
    if any(s >= q for s in flat):
        raise ValueError(f"symbol out of range for GF({q})")
    messages = tuple(tuple(flat[k * m:(k + 1) * m]) for k in range(K))
    return MessageStore(params=params, messages=messages)

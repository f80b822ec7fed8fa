"""Shared source/target vocabulary with reserved low ids."""

from __future__ import annotations

from typing import Iterable

from .graphs import Sample

__all__ = ["Vocabulary", "build_vocabulary", "PAD", "SOS", "EOS", "UNK", "SUPER", "START", "END", "RESERVED"]

PAD = "<PAD>"
SOS = "<SOS>"
EOS = "<EOS>"
UNK = "<UNK>"
SUPER = "<SUPER>"
START = "START"
END = "END"

# Always present, always at ids 0..6 in this order.
RESERVED = (PAD, SOS, EOS, UNK, SUPER, START, END)


class Vocabulary:
    """Bijective token <-> id map; ids 0..6 are reserved tokens."""

    def __init__(self, tokens: Iterable[str]):
        self.id_to_token = list(RESERVED)
        seen = set(RESERVED)
        for tok in tokens:
            if tok in seen:
                continue
            seen.add(tok)
            self.id_to_token.append(tok)
        self.token_to_id = {t: i for i, t in enumerate(self.id_to_token)}

    def __len__(self) -> int:
        return len(self.id_to_token)

    def __contains__(self, token: str) -> bool:
        return token in self.token_to_id

    def __eq__(self, other):
        return isinstance(other, Vocabulary) and self.id_to_token == other.id_to_token

    def lookup(self, token: str) -> int:
        """Token id, falling back to the unknown-token id."""
        return self.token_to_id.get(token, self.token_to_id[UNK])

    def encode(self, tokens: Iterable[str]) -> list[int]:
        return [self.lookup(t) for t in tokens]

    def decode(self, ids: Iterable[int]) -> list[str]:
        return [self.id_to_token[i] for i in ids]

    @property
    def sos_id(self) -> int:
        return self.token_to_id[SOS]

    @property
    def eos_id(self) -> int:
        return self.token_to_id[EOS]

    def emittable_ids(self) -> list[int]:
        """Ids decoding may emit: every regular token plus end-of-sequence."""
        return [self.eos_id] + list(range(len(RESERVED), len(self.id_to_token)))

    def __repr__(self):
        return f"Vocabulary(size={len(self)})"


def _attr_tokens(attr):
    return [attr] if isinstance(attr, str) else list(attr)


def build_vocabulary(samples: Iterable[Sample]) -> Vocabulary:
    """Union of node-attribute and target tokens, sorted after the reserved ids.

    Sorting makes the assignment independent of sample order.
    """
    samples = list(samples)
    if not samples:
        raise ValueError("cannot build a vocabulary from zero samples")
    tokens = set()
    for s in samples:
        for attr in s.graph.attrs:
            tokens.update(_attr_tokens(attr))
        tokens.update(s.target)
    return Vocabulary(sorted(tokens - set(RESERVED)))

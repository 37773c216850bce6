"""Feature extraction for the sequence labeller.

Eleven templates fire on the current token and six on each of the two
neighbours to either side, all emitted as "name=value" strings so every
position carries the same template set. Offsets past the document edge emit a
single BOS or EOS sentinel instead.
"""

from __future__ import annotations

import re
from typing import Sequence

from ..corpus import LabeledDocument, Token, fallback_pos

FeatureSequence = list[list[str]]

YEAR_PATTERN = re.compile(r"(19|20)\d\d[^\w\s]?")
PAGE_RANGE_PATTERN = re.compile(r"\d+(?:[:–—-]\d+)+")

NEIGHBOR_OFFSETS = (-2, -1, 1, 2)


def _is_punct_token(text: str) -> bool:
    return all(not ch.isalnum() and not ch.isspace() for ch in text)


def _pos_tag(token: Token) -> str:
    return token.pos if token.pos is not None else fallback_pos(token.text)


def _current_features(token: Token) -> list[str]:
    text = token.text
    low = text.lower()
    return [
        f"w={low}",
        f"suf3={low[-3:]}",
        f"suf2={low[-2:]}",
        f"upper={int(text.isupper())}",
        f"title={int(text.istitle())}",
        f"digit={int(text.isdigit())}",
        f"hasdigit={int(any(ch.isdigit() for ch in text))}",
        f"punct={int(_is_punct_token(text))}",
        f"pos={_pos_tag(token)}",
        f"year={int(bool(YEAR_PATTERN.fullmatch(text)))}",
        f"pages={int(bool(PAGE_RANGE_PATTERN.fullmatch(text)))}",
    ]


def _neighbor_features(token: Token, offset: int) -> list[str]:
    text = token.text
    tag = f"{offset:+d}"
    return [
        f"{tag}:w={text.lower()}",
        f"{tag}:title={int(text.istitle())}",
        f"{tag}:upper={int(text.isupper())}",
        f"{tag}:digit={int(text.isdigit())}",
        f"{tag}:pos={_pos_tag(token)}",
        f"{tag}:year={int(bool(YEAR_PATTERN.fullmatch(text)))}",
    ]


def extract_features(doc: LabeledDocument) -> FeatureSequence:
    return features_for_tokens(doc.tokens)


def features_for_tokens(tokens: Sequence[Token]) -> FeatureSequence:
    sequence: FeatureSequence = []
    n = len(tokens)
    for i in range(n):
        feats = _current_features(tokens[i])
        for offset in NEIGHBOR_OFFSETS:
            j = i + offset
            if j < 0:
                feats.append(f"{offset:+d}:BOS")
            elif j >= n:
                feats.append(f"{offset:+d}:EOS")
            else:
                feats.extend(_neighbor_features(tokens[j], offset))
        sequence.append(feats)
    return sequence

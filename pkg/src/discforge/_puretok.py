"""Pure-Python tokenizer kernels.

discforge.textproc prefers the compiled twins in discforge._speedups and
falls back to these when the extension is unavailable. The two
implementations must stay behaviorally identical; tests compare them
token-for-token on randomized inputs.
"""

from __future__ import annotations


def code_tokenize(text: str) -> list[str]:
    """Split text into word tokens and standalone punctuation tokens.

    Word characters are alphanumerics plus underscore; every other
    non-space character becomes its own single-character token.
    """
    tokens = []
    i = 0
    n = len(text)
    while i < n:
        ch = text[i]
        if ch.isspace():
            i += 1
            continue
        if ch.isalnum() or ch == "_":
            j = i + 1
            while j < n and (text[j].isalnum() or text[j] == "_"):
                j += 1
            tokens.append(text[i:j])
            i = j
        else:
            tokens.append(ch)
            i += 1
    return tokens


def refine_token(token: str) -> list[str]:
    """Split one token at underscores and case/digit boundaries.

    Underscores are dropped; a boundary falls between lower->Upper,
    letter->digit, digit->letter, and before the last capital of a capital
    run that is followed by lowercase (HTMLParser -> HTML, Parser). Tokens
    with no alphanumerics pass through unchanged, so joining the pieces
    always reconstructs the token minus its underscores.
    """
    if not any(c.isalnum() for c in token):
        return [token]
    parts = []
    for run in token.split("_"):
        if not run:
            continue
        n = len(run)
        start = 0
        for k in range(1, n):
            prev = run[k - 1]
            cur = run[k]
            if (
                (prev.islower() and cur.isupper())
                or (prev.isalpha() and cur.isdigit())
                or (prev.isdigit() and cur.isalpha())
                or (
                    prev.isupper()
                    and cur.isupper()
                    and k + 1 < n
                    and run[k + 1].islower()
                )
            ):
                parts.append(run[start:k])
                start = k
        parts.append(run[start:])
    return parts


def subtokenize(text: str) -> list[str]:
    """code_tokenize, then refine every token."""
    out = []
    for tok in code_tokenize(text):
        out.extend(refine_token(tok))
    return out

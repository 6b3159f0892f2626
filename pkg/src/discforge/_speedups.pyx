# cython: language_level=3
"""Compiled tokenizer kernels.

Behaviorally identical to discforge._puretok; keep the two in lockstep.
The character predicates below are the C versions of the single-character
str.isalnum/isalpha/isdigit/islower/isupper/isspace methods.
"""

from cpython.unicode cimport (
    Py_UNICODE_ISALNUM,
    Py_UNICODE_ISALPHA,
    Py_UNICODE_ISDIGIT,
    Py_UNICODE_ISLOWER,
    Py_UNICODE_ISSPACE,
    Py_UNICODE_ISUPPER,
)


cdef inline bint _is_word(Py_UCS4 ch):
    return Py_UNICODE_ISALNUM(ch) or ch == u'_'


def code_tokenize(text):
    """Split text into word tokens and standalone punctuation tokens."""
    cdef str s = text
    cdef Py_ssize_t i = 0, j, n = len(s)
    cdef Py_UCS4 ch
    tokens = []
    while i < n:
        ch = s[i]
        if Py_UNICODE_ISSPACE(ch):
            i += 1
            continue
        if _is_word(ch):
            j = i + 1
            while j < n and _is_word(s[j]):
                j += 1
            tokens.append(s[i:j])
            i = j
        else:
            tokens.append(s[i:i + 1])
            i += 1
    return tokens


def refine_token(token):
    """Split one token at underscores and case/digit boundaries."""
    cdef str s = token
    cdef Py_ssize_t n = len(s), i = 0, k, start, run_end
    cdef Py_UCS4 prev, cur
    cdef bint has_alnum = False
    for k in range(n):
        if Py_UNICODE_ISALNUM(s[k]):
            has_alnum = True
            break
    if not has_alnum:
        return [s]
    parts = []
    while i < n:
        if s[i] == u'_':
            i += 1
            continue
        start = i
        run_end = i
        while run_end < n and s[run_end] != u'_':
            run_end += 1
        for k in range(i + 1, run_end):
            prev = s[k - 1]
            cur = s[k]
            if ((Py_UNICODE_ISLOWER(prev) and Py_UNICODE_ISUPPER(cur))
                    or (Py_UNICODE_ISALPHA(prev) and Py_UNICODE_ISDIGIT(cur))
                    or (Py_UNICODE_ISDIGIT(prev) and Py_UNICODE_ISALPHA(cur))
                    or (Py_UNICODE_ISUPPER(prev) and Py_UNICODE_ISUPPER(cur)
                        and k + 1 < run_end and Py_UNICODE_ISLOWER(s[k + 1]))):
                parts.append(s[start:k])
                start = k
        parts.append(s[start:run_end])
        i = run_end
    return parts


def subtokenize(text):
    """code_tokenize, then refine every token."""
    out = []
    for tok in code_tokenize(text):
        out.extend(refine_token(tok))
    return out

"""Response functions as partitions of the database space.

A database state is an integer in base ``alphabet_size`` with ``M * beta``
digits, file 1 in the most significant positions.  A response function is
fully described by the partition of all states it induces plus one
reconstruction per part and file.
"""
from __future__ import annotations

import heapq
import itertools
from dataclasses import dataclass
from fractions import Fraction
from functools import cached_property
from typing import Callable, Sequence

DIGITS = "0123456789abcdefghijklmnopqrstuvwxyz"


def huffman_lengths(pmf: Sequence):
    """Codeword lengths of a binary Huffman code and the average length.

    Ties between equal probabilities are broken by the smallest symbol index
    in the merged subtree.  A single symbol gets length 0.
    """
    pmf = list(pmf)
    if not pmf:
        raise ValueError("empty pmf")
    if any(p < 0 for p in pmf):
        raise ValueError("negative probability")
    n = len(pmf)
    if n == 1:
        return [0], pmf[0] * 0
    lengths = [0] * n
    heap = [(p, i, (i,)) for i, p in enumerate(pmf)]
    heapq.heapify(heap)
    while len(heap) > 1:
        p1, i1, s1 = heapq.heappop(heap)
        p2, i2, s2 = heapq.heappop(heap)
        for s in s1 + s2:
            lengths[s] += 1
        heapq.heappush(heap, (p1 + p2, min(i1, i2), s1 + s2))
    avg = sum(p * l for p, l in zip(pmf, lengths))
    return lengths, avg


def huffman_average_length(pmf):
    """Average Huffman length via the sum of merged weights (no tree)."""
    pmf = list(pmf)
    if len(pmf) <= 1:
        return pmf[0] * 0 if pmf else 0
    heap = [(p, i) for i, p in enumerate(pmf)]
    heapq.heapify(heap)
    total = pmf[0] * 0
    counter = len(pmf)
    while len(heap) > 1:
        p1, _ = heapq.heappop(heap)
        p2, _ = heapq.heappop(heap)
        total += p1 + p2
        heapq.heappush(heap, (p1 + p2, counter))
        counter += 1
    return total


def huffman_average_length_counts(weights):
    """Average Huffman length for a pmf given as {probability: multiplicity}.

    Equal weights are merged in bulk, so product pmfs with few distinct
    values and astronomically many symbols stay cheap.
    """
    counts = {}
    for w, c in dict(weights).items():
        if c:
            counts[w] = counts.get(w, 0) + c
    if sum(counts.values()) <= 1:
        return next(iter(counts)) * 0 if counts else 0
    heap = list(counts)
    heapq.heapify(heap)
    total = heap[0] * 0

    def push(w, c):
        if w in counts:
            counts[w] += c
        else:
            counts[w] = c
            heapq.heappush(heap, w)

    def pop_one():
        w = heap[0]
        counts[w] -= 1
        if counts[w] == 0:
            del counts[w]
            heapq.heappop(heap)
        return w

    while True:
        w = heap[0]
        c = counts[w]
        if c >= 2:
            pairs = c // 2
            counts[w] -= 2 * pairs
            if counts[w] == 0:
                del counts[w]
                heapq.heappop(heap)
            total += 2 * w * pairs
            push(2 * w, pairs)
        else:
            if sum(counts.values()) == 1:
                return total
            a = pop_one()
            b = pop_one()
            total += a + b
            push(a + b, 1)


def hamming(x, y):
    return 0 if x == y else 1


def state_to_digits(state, q, n):
    out = [0] * n
    for i in range(n - 1, -1, -1):
        state, out[i] = divmod(state, q)
    return tuple(out)


def digits_to_state(digits, q):
    s = 0
    for d in digits:
        s = s * q + d
    return s


def state_to_str(state, q, n):
    return "".join(DIGITS[d] for d in state_to_digits(state, q, n))


def str_to_state(text, q):
    return digits_to_state([DIGITS.index(c) for c in text.lower()], q)


@dataclass(frozen=True)
class ResponseFunction:
    """Deterministic server response for one query, held as a partition."""

    alphabet_size: int
    num_files: int
    file_len: int
    parts: tuple
    reconstructions: tuple

    def __post_init__(self):
        parts = tuple(frozenset(p) for p in self.parts)
        object.__setattr__(self, "parts", parts)
        recs = tuple(tuple(tuple(f) for f in r) for r in self.reconstructions)
        object.__setattr__(self, "reconstructions", recs)
        if self.alphabet_size < 2 or self.num_files < 1 or self.file_len < 1:
            raise ValueError("invalid dimensions")
        if len(recs) != len(parts):
            raise ValueError("one reconstruction per part is required")
        seen = 0
        for p in parts:
            if not p:
                raise ValueError("empty part")
            seen += len(p)
        union = frozenset().union(*parts)
        if seen != len(union) or len(union) != self.num_states or min(union) < 0 or max(union) >= self.num_states:
            raise ValueError("parts must be disjoint and cover the database space")
        for r in recs:
            if len(r) != self.num_files:
                raise ValueError("reconstruction needs one vector per file")
            for f in r:
                if len(f) != self.file_len or any(not 0 <= s < self.alphabet_size for s in f):
                    raise ValueError("reconstruction symbol out of range")

    @property
    def num_states(self):
        return self.alphabet_size ** (self.num_files * self.file_len)

    @property
    def num_symbols(self):
        return self.num_files * self.file_len

    @cached_property
    def part_of(self):
        """Lookup table from state to part index."""
        table = [0] * self.num_states
        for i, p in enumerate(self.parts):
            for s in p:
                table[s] = i
        return table

    @cached_property
    def part_pmf(self):
        n = self.num_states
        return tuple(Fraction(len(p), n) for p in self.parts)

    @cached_property
    def code_lengths(self):
        return tuple(huffman_lengths(self.part_pmf)[0])

    @cached_property
    def rate(self):
        return response_rate(self)

    @cached_property
    def position_errors(self):
        return _position_errors(self, hamming)

    @cached_property
    def distortions(self):
        return response_distortions(self)

    @property
    def point(self):
        """The vector (R_q, D_q^(1), ..., D_q^(M))."""
        return (self.rate,) + tuple(self.distortions)

    def answer(self, state):
        return self.part_of[state]

    def canonical_key(self):
        return frozenset(self.parts)

    # construction helpers

    @classmethod
    def from_partition(cls, parts, alphabet_size, num_files, file_len):
        return ml_reconstruct(parts, alphabet_size, num_files, file_len)

    @classmethod
    def from_strings(cls, parts, alphabet_size, num_files, file_len, reconstructions=None, fill_rest=False):
        """Build from member strings such as ``["00", "11"]``.

        With ``fill_rest`` the states not listed form one extra part.
        """
        q = alphabet_size
        n = num_files * file_len
        sets = [frozenset(str_to_state(s, q) for s in p) for p in parts]
        if fill_rest:
            rest = frozenset(range(q ** n)) - frozenset().union(*sets)
            if rest:
                sets.append(rest)
        if reconstructions is None:
            return ml_reconstruct(sets, q, num_files, file_len)
        recs = []
        for r in reconstructions:
            digits = [DIGITS.index(c) for c in "".join(r).lower()]
            recs.append(tuple(tuple(digits[m * file_len:(m + 1) * file_len]) for m in range(num_files)))
        if fill_rest and len(recs) < len(sets):
            recs.append(ml_symbols(sets[-1], q, num_files, file_len))
        return cls(q, num_files, file_len, tuple(sets), tuple(recs))

    @classmethod
    def identity(cls, alphabet_size, num_files, file_len):
        n = alphabet_size ** (num_files * file_len)
        return ml_reconstruct([[s] for s in range(n)], alphabet_size, num_files, file_len)

    @classmethod
    def trivial(cls, alphabet_size, num_files, file_len):
        n = alphabet_size ** (num_files * file_len)
        return ml_reconstruct([range(n)], alphabet_size, num_files, file_len)

    def to_json(self):
        q, n, b = self.alphabet_size, self.num_symbols, self.file_len
        parts = []
        for p, r in zip(self.parts, self.reconstructions):
            parts.append({
                "members": [state_to_str(s, q, n) for s in sorted(p)],
                "reconstructions": ["".join(DIGITS[d] for d in f) for f in r],
            })
        return {"alphabet_size": q, "num_files": self.num_files, "file_len": b, "parts": parts}

    @classmethod
    def from_json(cls, obj):
        q = obj["alphabet_size"]
        parts = [[str_to_state(s, q) for s in p["members"]] for p in obj["parts"]]
        b = obj["file_len"]
        recs = []
        for p in obj["parts"]:
            recs.append(tuple(tuple(DIGITS.index(c) for c in f.lower()) for f in p["reconstructions"]))
        return cls(q, obj["num_files"], b, tuple(parts), tuple(recs))


def ml_symbols(part, alphabet_size, num_files, file_len):
    """Per-symbol ML reconstruction of one part (ties to the smallest symbol)."""
    q, n = alphabet_size, num_files * file_len
    counts = [[0] * q for _ in range(n)]
    for s in part:
        for i, d in enumerate(state_to_digits(s, q, n)):
            counts[i][d] += 1
    best = [max(range(q), key=lambda v, c=c: (c[v], -v)) for c in counts]
    return tuple(tuple(best[m * file_len:(m + 1) * file_len]) for m in range(num_files))


def ml_reconstruct(parts, alphabet_size, num_files, file_len):
    """Attach per-symbol maximum-likelihood reconstructions to a partition.

    Under a uniform source the ML symbol at a position is the most frequent
    value among the part's members.
    """
    parts = [frozenset(p) for p in parts]
    recs = [ml_symbols(p, alphabet_size, num_files, file_len) for p in parts]
    return ResponseFunction(alphabet_size, num_files, file_len, tuple(parts), tuple(recs))


def response_rate(rf: ResponseFunction):
    """Average optimal codeword length of the answer per file symbol."""
    _, avg = huffman_lengths(rf.part_pmf)
    return Fraction(avg) / rf.file_len


def _position_errors(rf, distortion):
    q, n, b = rf.alphabet_size, rf.num_symbols, rf.file_len
    total = [[0] * b for _ in range(rf.num_files)]
    for p, r in zip(rf.parts, rf.reconstructions):
        flat = [s for f in r for s in f]
        for s in p:
            digits = state_to_digits(s, q, n)
            for i in range(n):
                e = distortion(digits[i], flat[i])
                if e:
                    total[i // b][i % b] += e
    N = rf.num_states
    return tuple(tuple(Fraction(t, N) for t in row) for row in total)


def response_distortions(rf: ResponseFunction, distortion: Callable | None = None):
    """Per-file expected distortion (D^(1), ..., D^(M)) of a response."""
    if distortion is None:
        pos = rf.position_errors
    else:
        pos = _position_errors(rf, distortion)
    return tuple(sum(row, Fraction(0)) / rf.file_len for row in pos)


def all_states(alphabet_size, n):
    return range(alphabet_size ** n)


def relabel_parts(rf: ResponseFunction, order):
    """Same response with its parts listed in a different order."""
    return ResponseFunction(
        rf.alphabet_size, rf.num_files, rf.file_len,
        tuple(rf.parts[i] for i in order), tuple(rf.reconstructions[i] for i in order),
    )


def permute_coordinates(rf: ResponseFunction, perm):
    """Apply a coordinate permutation: new digit i is old digit ``perm[i]``."""
    q, n = rf.alphabet_size, rf.num_symbols
    new_parts = []
    for p in rf.parts:
        new_parts.append(frozenset(
            digits_to_state([state_to_digits(s, q, n)[perm[i]] for i in range(n)], q) for s in p
        ))
    new_recs = []
    for r in rf.reconstructions:
        flat = [s for f in r for s in f]
        nf = [flat[perm[i]] for i in range(n)]
        new_recs.append(tuple(tuple(nf[m * rf.file_len:(m + 1) * rf.file_len]) for m in range(rf.num_files)))
    return ResponseFunction(q, rf.num_files, rf.file_len, tuple(new_parts), tuple(new_recs))


def file_permutation_coords(num_files, file_len, file_perm):
    """Coordinate permutation placing old file ``file_perm[m]`` in slot m."""
    return [file_perm[i // file_len] * file_len + i % file_len for i in range(num_files * file_len)]


def product_response(components, alphabet_size):
    """Concatenate responses over disjoint files: file blocks in order.

    Each component acts on its own files; the answer is the tuple of
    component answers.  Only practical for small total state spaces.
    """
    b = components[0].file_len
    if any(c.file_len != b for c in components):
        raise ValueError("components need equal file length")
    M = sum(c.num_files for c in components)
    groups = {}
    for combo in itertools.product(*[range(len(c.parts)) for c in components]):
        groups[combo] = None
    parts = []
    recs = []
    for combo in groups:
        member_lists = [sorted(c.parts[i]) for c, i in zip(components, combo)]
        sizes = [c.num_states for c in components]
        members = []
        for tup in itertools.product(*member_lists):
            s = 0
            for v, size in zip(tup, sizes):
                s = s * size + v
            members.append(s)
        parts.append(frozenset(members))
        recs.append(tuple(f for c, i in zip(components, combo) for f in c.reconstructions[i]))
    return ResponseFunction(alphabet_size, M, b, tuple(parts), tuple(recs))

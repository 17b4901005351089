"""
Polynomials in a_1..a_d, a_1*..a_d*: parsing, Wick ordering, the closed commutation
formula for a single a_i*, and evaluation in the truncated Fock representation.

A word is a tuple of letters ``(index, starred)`` with 1-based generator indices; the
empty word is the unit. Polynomials are sparse ``{word: coefficient}`` maps kept in
canonical graded-lexicographic order.
"""
import logging
import re
from dataclasses import dataclass
from typing import Dict, Iterable, List, Literal, NamedTuple, Optional, Sequence, Tuple

import numpy as np

from app.algebra.coefficients import WickCoefficients, build_T, format_complex
from app.algebra.fock import FockTruncation, RepMatrices, TensorVector, mu_star_matrix
from app.algebra.operators import Operator, build_R, lift, one_plus_T_kernel
from app.config import settings
from app.errors import ExprSyntaxError, IndexRangeError
from app.numerics import check_dimension, identity

logger = logging.getLogger(__name__)

Letter = Tuple[int, bool]
Word = Tuple[Letter, ...]
Strategy = Literal["leftmost", "rightmost"]

UNIT: Word = ()


def word_key(word: Word):
    """Graded lex: length first, then letters with unstarred < starred and ascending index."""
    return len(word), tuple((starred, index) for index, starred in word)


def word_text(word: Word) -> str:
    return " ".join(f"a{index}{'*' if starred else ''}" for index, starred in word)


def inversion_measure(word: Word) -> int:
    """Sum over starred letters of the number of unstarred letters to their right."""
    unstarred_right = 0
    measure = 0
    for _, starred in reversed(word):
        if starred:
            measure += unstarred_right
        else:
            unstarred_right += 1
    return measure


def is_normal_word(word: Word) -> bool:
    return inversion_measure(word) == 0


def _is_negative(z: complex) -> bool:
    return z.real < 0 or (z.real == 0 and z.imag < 0)


def render_terms(pairs: Iterable[Tuple[Word, complex]]) -> str:
    """Render (word, coefficient) pairs in the given order; coefficient 1 is implicit."""
    parts = []
    for word, coeff in pairs:
        coeff = complex(coeff)
        negative = _is_negative(coeff)
        magnitude = -coeff if negative else coeff
        if word == UNIT:
            body = format_complex(magnitude)
        elif magnitude == 1:
            body = word_text(word)
        else:
            body = f"{format_complex(magnitude)} {word_text(word)}"
        if not parts:
            parts.append(f"-{body}" if negative else body)
        else:
            parts.append(f"{'-' if negative else '+'} {body}")
    return " ".join(parts) if parts else "0"


@dataclass(frozen=True, eq=False)
class StarPolynomial:
    terms: Dict[Word, complex]

    @classmethod
    def from_terms(cls, terms: Dict[Word, complex], prune_tol: Optional[float] = 0.0) -> "StarPolynomial":
        tol = 0.0 if prune_tol is None else prune_tol
        kept = {w: complex(c) for w, c in terms.items() if abs(c) > tol}
        return cls({w: kept[w] for w in sorted(kept, key=word_key)})

    @classmethod
    def zero(cls) -> "StarPolynomial":
        return cls({})

    @classmethod
    def unit(cls, coeff: complex = 1.0) -> "StarPolynomial":
        return cls.from_terms({UNIT: coeff})

    @classmethod
    def monomial(cls, word: Sequence[Letter], coeff: complex = 1.0) -> "StarPolynomial":
        return cls.from_terms({tuple(word): coeff})

    def __iter__(self):
        return iter(self.terms.items())

    def __len__(self):
        return len(self.terms)

    def __add__(self, other: "StarPolynomial") -> "StarPolynomial":
        merged = dict(self.terms)
        for word, coeff in other.terms.items():
            merged[word] = merged.get(word, 0j) + coeff
        return StarPolynomial.from_terms(merged)

    def __neg__(self) -> "StarPolynomial":
        return StarPolynomial({w: -c for w, c in self.terms.items()})

    def __sub__(self, other: "StarPolynomial") -> "StarPolynomial":
        return self + (-other)

    def __mul__(self, other) -> "StarPolynomial":
        if not isinstance(other, StarPolynomial):
            return StarPolynomial.from_terms({w: c * other for w, c in self.terms.items()})
        product: Dict[Word, complex] = {}
        for w1, c1 in self.terms.items():
            for w2, c2 in other.terms.items():
                word = w1 + w2
                product[word] = product.get(word, 0j) + c1 * c2
        return StarPolynomial.from_terms(product)

    __rmul__ = __mul__

    def is_normal_ordered(self) -> bool:
        return all(is_normal_word(w) for w in self.terms)

    def max_index(self) -> int:
        return max((i for w in self.terms for i, _ in w), default=0)

    def max_length(self) -> int:
        return max((len(w) for w in self.terms), default=0)

    def pruned(self, tol: float) -> "StarPolynomial":
        return StarPolynomial.from_terms(self.terms, tol)

    def to_text(self) -> str:
        return render_terms(self.terms.items())

    def __repr__(self):
        return f"StarPolynomial({self.to_text()!r})"


def same_normal_form(p: StarPolynomial, q: StarPolynomial, tol: float = 1e-12) -> bool:
    """Equal word sets after pruning and coefficients agreeing within tol."""
    prune = settings.prune_tol
    p, q = p.pruned(prune), q.pruned(prune)
    if set(p.terms) != set(q.terms):
        return False
    return all(abs(p.terms[w] - q.terms[w]) <= tol for w in p.terms)


# Parsing

_NUMBER = re.compile(r"(?:\d+\.?\d*|\.\d+)(?:[eE][+-]?\d+)?")
_FACTOR = re.compile(r"a(\d+)(\*?)")


class _ExprParser:
    """
    expr    := [sign] term (("+" | "-") term)*
    term    := literal factor* | factor+
    literal := number | "(" [sign] number ("+" | "-") number "i" ")"
    factor  := "a" digits ["*"]
    """

    def __init__(self, text: str, d: int):
        self.text = text
        self.d = d
        self.pos = 0

    def _skip(self):
        while self.pos < len(self.text) and self.text[self.pos].isspace():
            self.pos += 1

    def _peek(self) -> str:
        self._skip()
        return self.text[self.pos] if self.pos < len(self.text) else ""

    def _expect(self, char: str):
        if self._peek() != char:
            found = self._peek() or "end of input"
            raise ExprSyntaxError(f"expected {char!r}, found {found!r}", self.pos)
        self.pos += 1

    def _sign(self) -> float:
        head = self._peek()
        if head in ("+", "-"):
            self.pos += 1
            return -1.0 if head == "-" else 1.0
        return 1.0

    def _number(self) -> float:
        self._skip()
        match = _NUMBER.match(self.text, self.pos)
        if not match:
            raise ExprSyntaxError("expected a number", self.pos)
        self.pos = match.end()
        return float(match.group())

    def _literal(self) -> complex:
        if self._peek() != "(":
            return complex(self._number())
        self.pos += 1
        real = self._sign() * self._number()
        op = self._peek()
        if op not in ("+", "-"):
            raise ExprSyntaxError("expected '+' or '-' inside a complex literal", self.pos)
        self.pos += 1
        imag = self._number()
        self._expect("i")
        self._expect(")")
        return complex(real, imag if op == "+" else -imag)

    def _factor(self) -> Letter:
        self._skip()
        start = self.pos
        match = _FACTOR.match(self.text, self.pos)
        if not match:
            raise ExprSyntaxError("expected a generator such as a1 or a1*", start)
        index = int(match.group(1))
        if not 1 <= index <= self.d:
            raise IndexRangeError(f"generator a{index} at position {start} outside a1..a{self.d}")
        self.pos = match.end()
        return index, bool(match.group(2))

    def _term(self) -> Tuple[Word, complex]:
        coeff = 1.0 + 0j
        letters: List[Letter] = []
        head = self._peek()
        if head == "(" or head.isdigit() or head == ".":
            coeff = self._literal()
        elif head != "a":
            found = head or "end of input"
            raise ExprSyntaxError(f"expected a term, found {found!r}", self.pos)
        while self._peek() == "a":
            letters.append(self._factor())
        return tuple(letters), coeff

    def parse(self) -> StarPolynomial:
        terms: Dict[Word, complex] = {}
        sign = self._sign()
        while True:
            word, coeff = self._term()
            terms[word] = terms.get(word, 0j) + sign * coeff
            head = self._peek()
            if head == "":
                break
            if head not in "+-":
                raise ExprSyntaxError(f"unexpected {head!r}", self.pos)
            sign = -1.0 if head == "-" else 1.0
            self.pos += 1
        return StarPolynomial.from_terms(terms)


def parse_expr(text: str, d: int) -> StarPolynomial:
    """Parse an expression such as ``2 a1 a2 - (0+1i) a2 a1*``; words are kept as written."""
    if not text.strip():
        raise ExprSyntaxError("empty expression", 0)
    return _ExprParser(text, d).parse()


def parse_scalar(text: str) -> complex:
    """A signed complex literal such as ``0.5``, ``-1`` or ``(0+1i)``."""
    parser = _ExprParser(text, 0)
    if not text.strip():
        raise ExprSyntaxError("empty scalar", 0)
    value = parser._sign() * parser._literal()
    if parser._peek():
        raise ExprSyntaxError(f"unexpected {parser._peek()!r} after scalar", parser.pos)
    return value


# Wick ordering

class WickRewriter:
    """
    Memoized normal forms of single words under a_i* a_j -> delta_ij + sum T_ij^kl a_l a_k*.
    The strategy picks the leftmost or the rightmost starred-unstarred adjacent pair.
    """

    def __init__(self, c: WickCoefficients, strategy: Strategy = "leftmost", prune_tol: Optional[float] = None):
        if strategy not in ("leftmost", "rightmost"):
            raise ValueError(f"unknown rewriting strategy {strategy!r}")
        self.c = c
        self.strategy = strategy
        self.prune_tol = settings.prune_tol if prune_tol is None else prune_tol
        self._cache: Dict[Word, Dict[Word, complex]] = {}
        coeff = c.coeff
        self._expansions = {
            (i + 1, j + 1): [((l + 1, False), (k + 1, True), coeff[i, j, k, l])
                             for k in range(c.d) for l in range(c.d) if coeff[i, j, k, l] != 0]
            for i in range(c.d) for j in range(c.d)
        }

    def _site(self, word: Word) -> Optional[int]:
        sites = [p for p in range(len(word) - 1) if word[p][1] and not word[p + 1][1]]
        if not sites:
            return None
        return sites[0] if self.strategy == "leftmost" else sites[-1]

    def normal_form(self, word: Word) -> Dict[Word, complex]:
        cached = self._cache.get(word)
        if cached is not None:
            return cached
        p = self._site(word)
        if p is None:
            result = {word: 1.0 + 0j}
        else:
            prefix, suffix = word[:p], word[p + 2:]
            i, j = word[p][0], word[p + 1][0]
            measure = inversion_measure(word)
            replacements = []
            if i == j:
                replacements.append((prefix + suffix, 1.0))
            for unstarred, starred, t in self._expansions[(i, j)]:
                replacements.append((prefix + (unstarred, starred) + suffix, t))
            result: Dict[Word, complex] = {}
            for new_word, factor in replacements:
                assert inversion_measure(new_word) < measure, "rewrite did not decrease the inversion measure"
                for w, coeff in self.normal_form(new_word).items():
                    result[w] = result.get(w, 0j) + factor * coeff
            result = {w: v for w, v in result.items() if abs(v) > self.prune_tol}
        self._cache[word] = result
        return result

    def order(self, p: StarPolynomial) -> StarPolynomial:
        total: Dict[Word, complex] = {}
        for word, coeff in p:
            for w, v in self.normal_form(word).items():
                total[w] = total.get(w, 0j) + coeff * v
        return StarPolynomial.from_terms(total, self.prune_tol)


def _check_indices(p: StarPolynomial, d: int):
    if p.max_index() > d:
        raise IndexRangeError(f"polynomial uses a{p.max_index()} but the algebra has d={d}")


def wick_order(p: StarPolynomial, c: WickCoefficients, strategy: Strategy = "leftmost") -> StarPolynomial:
    _check_indices(p, c.d)
    result = WickRewriter(c, strategy).order(p)
    logger.debug("wick_order: %d terms -> %d terms", len(p), len(result))
    return result


# Tensor vectors and polynomials

def word_from_flat(flat: int, degree: int, d: int) -> Word:
    digits = []
    for _ in range(degree):
        flat, digit = divmod(flat, d)
        digits.append((digit + 1, False))
    return tuple(reversed(digits))


def flat_from_word(word: Word, d: int) -> int:
    flat = 0
    for index, _ in word:
        flat = flat * d + (index - 1)
    return flat


def polynomial_from_vector(vector, degree: int, d: int, tail: Word = UNIT,
                           prune_tol: Optional[float] = None) -> StarPolynomial:
    """sum_x v[x] a_{x_1}...a_{x_n} followed by an optional tail word."""
    vector = np.asarray(vector).reshape(-1)
    terms = {word_from_flat(x, degree, d) + tail: complex(v) for x, v in enumerate(vector) if v != 0}
    return StarPolynomial.from_terms(terms, settings.prune_tol if prune_tol is None else prune_tol)


def prop1_rhs(i: int, x: Word, c: WickCoefficients, dim_cap: Optional[int] = None) -> StarPolynomial:
    """
    mu(e_i*) R_n X + sum_k mu(e_i*) T_1...T_n (X (x) e_k) a_k*, evaluated with matrices.
    For X = 1 the empty product leaves a_i*.
    """
    d = c.d
    if not 1 <= i <= d:
        raise IndexRangeError(f"generator index {i} outside 1..{d}")
    if any(starred for _, starred in x):
        raise ValueError("prop1_rhs needs an unstarred monomial")
    n = len(x)
    t = build_T(c)
    check_dimension(d ** (n + 1), dim_cap)
    x_vec = TensorVector.basis([index for index, _ in x], d).data
    result = StarPolynomial.zero()
    if n >= 1:
        head = mu_star_matrix(i, n, d, dim_cap) @ (build_R(t, n, dim_cap).matrix @ x_vec)
        result = result + polynomial_from_vector(head, n - 1, d)
    chain = identity(d ** (n + 1))
    for k in range(1, n + 1):
        chain = chain @ lift(t, n + 1, k, dim_cap).matrix
    project = mu_star_matrix(i, n + 1, d, dim_cap)
    for k in range(1, d + 1):
        e_k = TensorVector.basis([k], d).data
        tail_vec = project @ (chain @ np.kron(x_vec, e_k))
        result = result + polynomial_from_vector(tail_vec, n, d, tail=((k, True),))
    return result


def annihilation_by_rewriting(i: int, m: int, c: WickCoefficients, dim_cap: Optional[int] = None) -> np.ndarray:
    """a_i* on H^{(x)m} obtained by Wick-ordering a_i* a_{x_1}...a_{x_m} and acting on the vacuum."""
    d = c.d
    check_dimension(d ** m, dim_cap)
    rewriter = WickRewriter(c)
    matrix = np.zeros((d ** (m - 1), d ** m), dtype=np.complex128)
    for column in range(d ** m):
        word = ((i, True),) + word_from_flat(column, m, d)
        for w, coeff in rewriter.normal_form(word).items():
            if any(starred for _, starred in w):
                continue
            if len(w) != m - 1:
                raise AssertionError(f"unstarred remainder {word_text(w)} has the wrong degree")
            matrix[flat_from_word(w, d), column] += coeff
    return matrix


# Fock evaluation

class FockEvaluation(NamedTuple):
    matrix: np.ndarray
    exact_degrees: List[int]
    overflow: bool

    def restricted(self, offsets: Sequence[int]) -> np.ndarray:
        """Columns of the input degrees on which no term left the truncation."""
        columns = np.concatenate([np.arange(offsets[n], offsets[n + 1]) for n in self.exact_degrees]) \
            if self.exact_degrees else np.zeros(0, dtype=int)
        return self.matrix[:, columns]


def evaluate_in_fock(p: StarPolynomial, trunc: FockTruncation, rep: RepMatrices) -> FockEvaluation:
    """
    Matrix of p on the direct sum of quotients, letters applied right to left. a_i* on
    the vacuum kills a term exactly; a_i above degree N drops it and marks the input
    degree inexact.
    """
    _check_indices(p, trunc.d)
    dims = rep.quotient_dims
    offsets = trunc.offsets()
    matrix = np.zeros((offsets[-1], offsets[-1]), dtype=np.complex128)
    exact = []
    for n in range(trunc.N + 1):
        inexact = False
        for word, coeff in p:
            block = identity(dims[n])
            degree = n
            for index, starred in reversed(word):
                if starred:
                    if degree == 0:
                        block = None
                        break
                    block = rep.annihilation[(index, degree - 1)] @ block
                    degree -= 1
                else:
                    if degree == trunc.N:
                        block = None
                        inexact = True
                        break
                    block = rep.creation[(index, degree)] @ block
                    degree += 1
            if block is not None:
                matrix[offsets[degree]:offsets[degree + 1], offsets[n]:offsets[n + 1]] += coeff * block
        if not inexact:
            exact.append(n)
    overflow = len(exact) < trunc.N + 1
    if overflow:
        logger.debug("evaluation of %s overflows the truncation on degrees %s",
                     p.to_text(), sorted(set(range(trunc.N + 1)) - set(exact)))
    return FockEvaluation(matrix, exact, overflow)


# Generators of ker(1+T)

def _reduced_echelon_from_top(basis: np.ndarray, tol: float = 1e-12) -> np.ndarray:
    """Rows spanning the column space of `basis`, each with pivot 1 on its highest nonzero index."""
    rows = basis.T[:, ::-1].copy()
    pivot_row = 0
    n_rows, n_cols = rows.shape
    for col in range(n_cols):
        if pivot_row == n_rows:
            break
        candidate = pivot_row + int(np.argmax(np.abs(rows[pivot_row:, col])))
        if abs(rows[candidate, col]) <= tol:
            continue
        rows[[pivot_row, candidate]] = rows[[candidate, pivot_row]]
        rows[pivot_row] = rows[pivot_row] / rows[pivot_row, col]
        for r in range(n_rows):
            if r != pivot_row:
                rows[r] = rows[r] - rows[r, col] * rows[pivot_row]
        pivot_row += 1
    rows = rows[:pivot_row, ::-1]
    real, imag = rows.real.copy(), rows.imag.copy()
    real[np.abs(real) < tol] = 0.0
    imag[np.abs(imag) < tol] = 0.0
    return real + 1j * imag


def kernel_generator_vectors(t: Operator, tol: Optional[float] = None) -> np.ndarray:
    """Canonical basis of ker(1+T), one row per generator, ordered by pivot index."""
    kernel = one_plus_T_kernel(t, tol)
    if kernel.dim == 0:
        return np.zeros((0, t.dim), dtype=np.complex128)
    rows = _reduced_echelon_from_top(kernel.basis)
    pivots = [int(np.flatnonzero(row)[-1]) for row in rows]
    return rows[np.argsort(pivots)]


def kernel_generator_polynomials(t: Operator, tol: Optional[float] = None) -> List[StarPolynomial]:
    """Each v in ker(1+T) as the degree-2 polynomial sum_{a,b} v[a*d+b] a_a a_b."""
    return [polynomial_from_vector(row, 2, t.dim_per_leg) for row in kernel_generator_vectors(t, tol)]


def render_kernel_generators(t: Operator, tol: Optional[float] = None) -> List[str]:
    """Kernel generators with terms in descending tensor-index order, e.g. ``a2 a1 - (0+1i) a1 a2``."""
    d = t.dim_per_leg
    rendered = []
    for row in kernel_generator_vectors(t, tol):
        pairs = [(word_from_flat(x, 2, d), row[x]) for x in range(d * d - 1, -1, -1) if row[x] != 0]
        rendered.append(render_terms(pairs))
    return rendered

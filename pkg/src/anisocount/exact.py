"""Exact arithmetic over Q and Q(sqrt(d)), plus small integer-matrix algorithms.

Matrices are plain tuples of row tuples.  Integer matrices hold Python ints,
exact matrices hold ``int``/``Fraction``/:class:`QuadScalar` entries.  Nothing
here ever touches floating point except the ``float()`` mirrors.
"""

from __future__ import annotations

import math
import re
from fractions import Fraction
from numbers import Rational

__all__ = [
    "QuadScalar",
    "parse_scalar",
    "to_field",
    "is_exact_number",
    "egcd",
    "hnf",
    "integer_kernel",
    "field_kernel",
    "field_rank",
    "field_inverse",
    "field_det",
    "gram",
    "dual_basis",
    "covolume_sq",
    "transpose",
    "matmul",
    "identity",
    "columns",
    "from_columns",
    "is_squarefree",
]


def is_squarefree(d: int) -> bool:
    if d < 2:
        return False
    k = 2
    while k * k <= d:
        if d % (k * k) == 0:
            return False
        k += 1
    return True


class QuadScalar:
    """A number ``a + b*sqrt(d)`` with rational ``a``, ``b``.

    ``d`` is a square-free integer >= 2, or 0 for a purely rational value.
    Values with ``b == 0`` are normalised to ``d == 0`` so they mix freely
    with any discriminant.  Mixing two different nonzero discriminants raises.
    """

    __slots__ = ("a", "b", "d")

    def __init__(self, a=0, b=0, d=0):
        a = Fraction(a)
        b = Fraction(b)
        if b == 0:
            d = 0
        elif not is_squarefree(d):
            raise ValueError(f"discriminant must be square-free and >= 2, got {d}")
        self.a = a
        self.b = b
        self.d = d

    @property
    def rational_part(self) -> Fraction:
        return self.a

    @property
    def surd_part(self) -> Fraction:
        return self.b

    @property
    def discriminant(self) -> int:
        return self.d

    def is_rational(self) -> bool:
        return self.b == 0

    @staticmethod
    def _lift(x):
        if isinstance(x, QuadScalar):
            return x
        if isinstance(x, (int, Fraction)):
            return QuadScalar(x)
        return NotImplemented

    @staticmethod
    def _common(d1, d2):
        if d1 == 0:
            return d2
        if d2 == 0 or d1 == d2:
            return d1
        raise ValueError(f"cannot mix Q(sqrt({d1})) and Q(sqrt({d2}))")

    def __add__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadScalar(self.a + o.a, self.b + o.b, self._common(self.d, o.d))

    __radd__ = __add__

    def __neg__(self):
        return QuadScalar(-self.a, -self.b, self.d)

    def __pos__(self):
        return self

    def __sub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return QuadScalar(self.a - o.a, self.b - o.b, self._common(self.d, o.d))

    def __rsub__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o - self

    def __mul__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        d = self._common(self.d, o.d)
        return QuadScalar(self.a * o.a + self.b * o.b * d, self.a * o.b + self.b * o.a, d)

    __rmul__ = __mul__

    def conjugate(self) -> "QuadScalar":
        return QuadScalar(self.a, -self.b, self.d)

    def norm(self) -> Fraction:
        """Field norm ``a^2 - b^2 d``; zero only for the zero element."""
        return self.a * self.a - self.b * self.b * self.d

    def __truediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        nrm = o.norm()
        if nrm == 0:
            raise ZeroDivisionError("division by zero in Q(sqrt(d))")
        num = self * o.conjugate()
        return QuadScalar(num.a / nrm, num.b / nrm, num.d)

    def __rtruediv__(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            return o
        return o / self

    def __pow__(self, k):
        if not isinstance(k, int) or k < 0:
            return NotImplemented
        out = QuadScalar(1)
        base = self
        while k:
            if k & 1:
                out = out * base
            base = base * base
            k >>= 1
        return out

    def sign(self) -> int:
        a, b = self.a, self.b
        sa = (a > 0) - (a < 0)
        sb = (b > 0) - (b < 0)
        if sb == 0:
            return sa
        if sa == 0 or sa == sb:
            return sb
        # opposite signs: compare a^2 against b^2 d (never equal for d square-free)
        return sa if a * a > b * b * self.d else sb

    def __abs__(self):
        return -self if self.sign() < 0 else self

    def _cmp(self, other):
        o = self._lift(other)
        if o is NotImplemented:
            if isinstance(other, float):
                return float(self) - other
            return None
        return (self - o).sign()

    def __eq__(self, other):
        c = self._cmp(other)
        if c is None:
            return NotImplemented
        return c == 0

    def __lt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c < 0

    def __le__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c <= 0

    def __gt__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c > 0

    def __ge__(self, other):
        c = self._cmp(other)
        return NotImplemented if c is None else c >= 0

    def __hash__(self):
        if self.b == 0:
            return hash(self.a)
        return hash((self.a, self.b, self.d))

    def __bool__(self):
        return self.a != 0 or self.b != 0

    def __float__(self):
        if self.b == 0:
            return float(self.a)
        return float(self.a) + float(self.b) * math.sqrt(self.d)

    def __reduce__(self):
        return (QuadScalar, (self.a, self.b, self.d))

    def __repr__(self):
        if self.b == 0:
            return f"QuadScalar({self.a})"
        return f"QuadScalar({self.a}, {self.b}, {self.d})"

    def __str__(self):
        if self.b == 0:
            return str(self.a)
        surd = f"{self.b}*sqrt({self.d})"
        if self.a == 0:
            return surd
        sep = "+" if self.b > 0 else "-"
        return f"{self.a}{sep}{abs(self.b)}*sqrt({self.d})"


def is_exact_number(x) -> bool:
    return isinstance(x, (int, Fraction, QuadScalar)) and not isinstance(x, bool)


def to_field(x, d: int):
    """Coerce an exact number into the working field.

    Returns a ``Fraction`` when ``d == 0`` (fast path) and a ``QuadScalar``
    otherwise.  Floats are refused: they are not exact input.
    """
    if isinstance(x, QuadScalar):
        if x.b == 0:
            return x.a if d == 0 else x
        if d == 0 or x.d != d:
            raise ValueError(f"{x} does not lie in Q(sqrt({d}))")
        return x
    if isinstance(x, (int, Fraction)):
        return Fraction(x) if d == 0 else QuadScalar(x)
    if isinstance(x, Rational):
        return to_field(Fraction(x.numerator, x.denominator), d)
    raise TypeError(f"not an exact number: {x!r}")


_TERM = re.compile(
    r"""\s*(?P<sign>[+-])?\s*
        (?:(?P<coef>\d+(?:/\d+)?)\s*(?P<star>\*\s*)?)?
        (?:sqrt\(\s*(?P<rad>\d+)\s*\)(?:\s*/\s*(?P<div>\d+))?)?\s*""",
    re.VERBOSE,
)


def parse_scalar(text: str) -> Fraction | QuadScalar:
    """Parse literals such as ``"1/8"``, ``"-3"``, ``"sqrt(2)"``, ``"1+1*sqrt(2)"``.

    Decimal literals (``"0.1"``) are read exactly as the decimal they spell.
    Returns a ``Fraction`` for rational input, else a ``QuadScalar``.
    """
    s = text.strip()
    if not s:
        raise ValueError("empty scalar literal")
    if re.fullmatch(r"[+-]?\d+\.\d*(?:[eE][+-]?\d+)?|[+-]?\d*\.\d+(?:[eE][+-]?\d+)?", s):
        return Fraction(s)
    rational = Fraction(0)
    surd = Fraction(0)
    d = 0
    pos = 0
    first = True
    while pos < len(s):
        m = _TERM.match(s, pos)
        if m is None or m.end() == pos:
            raise ValueError(f"cannot parse scalar literal {text!r}")
        if not first and m.group("sign") is None:
            raise ValueError(f"missing operator in {text!r}")
        if (m.group("coef") is None and m.group("rad") is None) or (
            m.group("star") and m.group("rad") is None
        ):
            raise ValueError(f"cannot parse scalar literal {text!r}")
        sign = -1 if m.group("sign") == "-" else 1
        coef = Fraction(m.group("coef")) if m.group("coef") else Fraction(1)
        if m.group("rad") is None:
            rational += sign * coef
        else:
            rad = int(m.group("rad"))
            r = math.isqrt(rad)
            div = Fraction(int(m.group("div"))) if m.group("div") else Fraction(1)
            if r * r == rad:
                rational += sign * coef * r / div
            else:
                # pull square factors out so the discriminant is square-free
                k = 2
                mult = 1
                while k * k <= rad:
                    while rad % (k * k) == 0:
                        rad //= k * k
                        mult *= k
                    k += 1
                if d not in (0, rad):
                    raise ValueError(f"mixed discriminants in {text!r}")
                d = rad
                surd += sign * coef * mult / div
        pos = m.end()
        first = False
    if surd == 0:
        return rational
    return QuadScalar(rational, surd, d)


# ---------------------------------------------------------------- matrices

def transpose(m):
    if not m:
        return ()
    return tuple(zip(*m))


def matmul(a, b):
    bt = transpose(b)
    return tuple(tuple(sum((x * y for x, y in zip(row, col)), 0) for col in bt) for row in a)


def identity(n: int, one=1):
    return tuple(tuple(one if i == j else 0 * one for j in range(n)) for i in range(n))


def columns(m, ncols: int | None = None):
    """Column vectors of an n x k matrix given as rows."""
    if not m:
        return ()
    return tuple(tuple(row[j] for row in m) for j in range(len(m[0])))


def from_columns(cols, n: int):
    """Build an n x k row-tuple matrix from k column vectors (k may be 0)."""
    if not cols:
        return tuple(() for _ in range(n))
    return tuple(tuple(c[i] for c in cols) for i in range(n))


def egcd(a: int, b: int):
    """Return ``(g, x, y)`` with ``a*x + b*y == g == gcd(a, b) >= 0``."""
    x0, y0, x1, y1 = 1, 0, 0, 1
    while b:
        q, r = divmod(a, b)
        a, b = b, r
        x0, x1 = x1, x0 - q * x1
        y0, y1 = y1, y0 - q * y1
    if a < 0:
        a, x0, y0 = -a, -x0, -y0
    return a, x0, y0


def hnf(m):
    """Column Hermite normal form.

    Returns ``(H, U)`` with ``H == M @ U``, ``U`` unimodular, and ``H`` in
    lower column echelon form: each nonzero column has a positive pivot
    strictly below the previous column's pivot, and entries to the left of
    a pivot in its row lie in ``[0, pivot)``.  Zero columns come last.
    """
    rows = len(m)
    cols = len(m[0]) if rows else 0
    h = [list(map(int, row)) for row in m]
    u = [[1 if i == j else 0 for j in range(cols)] for i in range(cols)]

    def colop(j, k, a, b, c, d):
        # (col_j, col_k) <- (a col_j + b col_k, c col_j + d col_k)
        for mat in (h, u):
            for row in mat:
                x, y = row[j], row[k]
                row[j] = a * x + b * y
                row[k] = c * x + d * y

    piv = 0
    for i in range(rows):
        if piv >= cols:
            break
        for k in range(piv + 1, cols):
            b = h[i][k]
            if b == 0:
                continue
            a = h[i][piv]
            g, x, y = egcd(a, b)
            colop(piv, k, x, y, -b // g, a // g)
        p = h[i][piv]
        if p == 0:
            continue
        if p < 0:
            for mat in (h, u):
                for row in mat:
                    row[piv] = -row[piv]
            p = -p
        for j in range(piv):
            f = h[i][j] // p
            if f:
                for mat in (h, u):
                    for row in mat:
                        row[j] -= f * row[piv]
        piv += 1
    return tuple(map(tuple, h)), tuple(map(tuple, u))


def _split_rows(m, d):
    """Turn rows over Q(sqrt d) into integer rows with the same integer kernel."""
    out = []
    for row in m:
        parts = [[], []]
        for x in row:
            x = QuadScalar(x) if not isinstance(x, QuadScalar) else x
            if x.d not in (0, d):
                raise ValueError("matrix entries use a different discriminant")
            parts[0].append(x.a)
            parts[1].append(x.b)
        for part in parts:
            if any(part):
                den = math.lcm(*(f.denominator for f in part))
                out.append(tuple(int(f * den) for f in part))
    return out


def integer_kernel(m, n: int | None = None, d: int = 0):
    """Basis of ``{k in Z^n : M k = 0}`` as an n x r integer matrix.

    Each equation over Q(sqrt d) is split into its rational and surd halves;
    the resulting integer system is column-reduced and the trailing columns
    of the unimodular transform give a saturated kernel basis, which is then
    put in Hermite normal form so the answer is canonical.
    """
    if n is None:
        n = len(m[0])
    rows = _split_rows(m, d)
    if not rows:
        return identity(n)
    h, u = hnf(rows)
    rank = sum(1 for j in range(n) if any(row[j] for row in h))
    kern = tuple(tuple(row[rank:]) for row in u)
    if rank == n:
        return tuple(() for _ in range(n))
    kh, _ = hnf(kern)
    return kh


def _rref(m):
    """Reduced row echelon form over an exact field; returns (rows, pivots)."""
    a = [list(row) for row in m]
    nrows = len(a)
    ncols = len(a[0]) if nrows else 0
    pivots = []
    r = 0
    for c in range(ncols):
        p = next((i for i in range(r, nrows) if a[i][c] != 0), None)
        if p is None:
            continue
        a[r], a[p] = a[p], a[r]
        inv = Fraction(1) / a[r][c]
        a[r] = [x * inv for x in a[r]]
        for i in range(nrows):
            if i != r and a[i][c] != 0:
                f = a[i][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[r])]
        pivots.append(c)
        r += 1
        if r == nrows:
            break
    return a, pivots


def field_rank(m) -> int:
    if not m or not m[0]:
        return 0
    return len(_rref(m)[1])


def field_kernel(m, n: int):
    """Basis (list of vectors) of the right kernel of ``m`` over its field."""
    if not m:
        return [tuple(Fraction(int(i == j)) for j in range(n)) for i in range(n)]
    a, pivots = _rref(m)
    free = [c for c in range(n) if c not in pivots]
    basis = []
    for f in free:
        v = [Fraction(0)] * n
        v[f] = Fraction(1)
        for row, pc in zip(a, pivots):
            v[pc] = -row[f]
        basis.append(tuple(v))
    return basis


def field_inverse(m):
    n = len(m)
    aug = [list(row) + [Fraction(int(i == j)) for j in range(n)] for i, row in enumerate(m)]
    a, pivots = _rref(aug)
    if pivots[:n] != list(range(n)):
        raise ZeroDivisionError("matrix is singular")
    return tuple(tuple(row[n:]) for row in a[:n])


def field_det(m):
    """Determinant by exact Gaussian elimination."""
    n = len(m)
    if n == 0:
        return Fraction(1)
    a = [list(row) for row in m]
    det = Fraction(1)
    for c in range(n):
        p = next((i for i in range(c, n) if a[i][c] != 0), None)
        if p is None:
            return Fraction(0)
        if p != c:
            a[c], a[p] = a[p], a[c]
            det = -det
        det = det * a[c][c]
        for i in range(c + 1, n):
            if a[i][c] != 0:
                f = a[i][c] / a[c][c]
                a[i] = [x - f * y for x, y in zip(a[i], a[c])]
    return det


def gram(b):
    """Gram matrix ``B^T B`` of the columns of an n x k matrix."""
    cols = columns(b)
    return tuple(tuple(sum((x * y for x, y in zip(ci, cj)), Fraction(0)) for cj in cols) for ci in cols)


def dual_basis(b):
    """Dual basis ``B (B^T B)^{-1}`` of the column lattice of ``b``.

    Raises ``ValueError`` when the columns are dependent.
    """
    n = len(b)
    cols = columns(b)
    if not cols:
        return tuple(() for _ in range(n))
    g = gram(b)
    try:
        ginv = field_inverse(g)
    except ZeroDivisionError:
        raise ValueError("dependent input basis: singular Gram matrix") from None
    return matmul(b, ginv)


def covolume_sq(b) -> Fraction:
    """``det(B^T B)``; 1 for an empty basis (trivial lattice convention)."""
    if not columns(b):
        return Fraction(1)
    return field_det(gram(b))

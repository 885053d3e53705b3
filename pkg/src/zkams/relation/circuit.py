"""A small R1CS builder that records constraints and the assignment together."""

from .r1cs import make_shape

ONE = ("1",)


class LC:
    """Linear combination of wires with coefficients mod p."""

    __slots__ = ("terms", "p")

    def __init__(self, terms, p):
        self.terms = {k: v % p for k, v in terms.items() if v % p}
        self.p = p

    def __add__(self, other):
        other = self._lift(other)
        terms = dict(self.terms)
        for k, v in other.terms.items():
            terms[k] = terms.get(k, 0) + v
        return LC(terms, self.p)

    __radd__ = __add__

    def __neg__(self):
        return LC({k: -v for k, v in self.terms.items()}, self.p)

    def __sub__(self, other):
        return self + (-self._lift(other))

    def __rsub__(self, other):
        return self._lift(other) - self

    def __mul__(self, c):
        return LC({k: v * c for k, v in self.terms.items()}, self.p)

    __rmul__ = __mul__

    def _lift(self, other):
        return other if isinstance(other, LC) else LC({ONE: other}, self.p)


class ConstraintSystem:
    def __init__(self, p):
        self.p = p
        self.w_values = []
        self.x_values = []
        self.constraints = []
        self.groups = {}
        self._group = None

    # wires
    def witness(self, value):
        self.w_values.append(int(value) % self.p)
        return LC({("w", len(self.w_values) - 1): 1}, self.p)

    def public(self, value):
        self.x_values.append(int(value) % self.p)
        return LC({("x", len(self.x_values) - 1): 1}, self.p)

    def const(self, c):
        return LC({ONE: c}, self.p)

    def value(self, lc):
        acc = 0
        for (kind, *idx), coef in lc.terms.items():
            if kind == "w":
                acc += coef * self.w_values[idx[0]]
            elif kind == "x":
                acc += coef * self.x_values[idx[0]]
            else:
                acc += coef
        return acc % self.p

    # constraints
    def enforce(self, a, b, c):
        lift = LC({}, self.p)._lift
        self.constraints.append((lift(a), lift(b), lift(c)))

    def mul(self, a, b):
        out = self.witness(self.value(a) * self.value(b))
        self.enforce(a, b, out)
        return out

    def bits(self, lc, width):
        """Little-endian boolean decomposition of the canonical value of ``lc``."""
        v = self.value(lc)
        out = []
        for i in range(width):
            b = self.witness((v >> i) & 1)
            self.enforce(b, b, b)
            out.append(b)
        self.enforce(sum((b * (1 << i) for i, b in enumerate(out)), LC({}, self.p)), 1, lc)
        return out

    def begin_group(self, name):
        self._group = name
        self.groups[name] = [len(self.constraints), len(self.constraints)]

    def end_group(self):
        self.groups[self._group][1] = len(self.constraints)
        self._group = None

    # output
    def assignment(self):
        return list(self.x_values), list(self.w_values)

    def shape(self):
        num_w, num_x = len(self.w_values), len(self.x_values)

        def col(key):
            if key[0] == "w":
                return key[1]
            if key[0] == "x":
                return num_w + key[1]
            return num_w + num_x

        mats = ([], [], [])
        for row, triple in enumerate(self.constraints):
            for mat, lc in zip(mats, triple):
                mat.extend((row, col(k), v) for k, v in lc.terms.items())
        return make_shape(*mats, num_w, num_x, self.p, m_c=len(self.constraints),
                          groups={k: tuple(v) for k, v in self.groups.items()})

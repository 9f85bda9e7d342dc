"""Continuous-logic formulas over finite-dimensional algebras.

Formulas are built from norms of *-polynomial terms by rational-polynomial
connectives, the lattice connectives max/min/monus, and sup/inf quantifiers
over norm balls.  Quantifier-free formulas evaluate exactly up to the
operator-norm tolerance; quantified values are one-sided bounds produced by
a seeded multi-start search with coordinatewise refinement, so every result
is reproducible bit for bit from its configuration.
"""

from __future__ import annotations

from dataclasses import dataclass, field
from fractions import Fraction

import numpy as np

from .exact import QI, as_qi
from .presentations import (
    BlockElement,
    FDAlgebra,
    ParseError,
    Term,
    TAdd,
    TAdj,
    TConst,
    TMul,
    TScale,
    TVar,
    UnboundVariableError,
    ValidationError,
    eval_term_numpy,
    _np_norm,
)


# ---------------------------------------------------------------------------
# Formula AST


class Formula:
    def free_vars(self):
        out = set()
        _free(self, out, ())
        return out

    @property
    def is_sentence(self):
        return not self.free_vars()


@dataclass(frozen=True)
class FConst(Formula):
    value: Fraction


@dataclass(frozen=True)
class FNorm(Formula):
    term: Term


@dataclass(frozen=True)
class FAdd(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class FSub(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class FMul(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class FMax(Formula):
    parts: tuple


@dataclass(frozen=True)
class FMin(Formula):
    parts: tuple


@dataclass(frozen=True)
class FMonus(Formula):
    left: Formula
    right: Formula


@dataclass(frozen=True)
class FSup(Formula):
    var: int
    bound: Fraction
    body: Formula


@dataclass(frozen=True)
class FInf(Formula):
    var: int
    bound: Fraction
    body: Formula


def _free(f, out, bound):
    if isinstance(f, FNorm):
        out.update(v for v in f.term.free_vars() if v not in bound)
    elif isinstance(f, (FAdd, FSub, FMul, FMonus)):
        _free(f.left, out, bound)
        _free(f.right, out, bound)
    elif isinstance(f, (FMax, FMin)):
        for p in f.parts:
            _free(p, out, bound)
    elif isinstance(f, (FSup, FInf)):
        _free(f.body, out, bound + (f.var,))


def _has_quantifier(f):
    if isinstance(f, (FSup, FInf)):
        return True
    if isinstance(f, (FAdd, FSub, FMul, FMonus)):
        return _has_quantifier(f.left) or _has_quantifier(f.right)
    if isinstance(f, (FMax, FMin)):
        return any(_has_quantifier(p) for p in f.parts)
    return False


LATTICE_NODES = (FMax, FMin, FMonus)


def check_strict_fragment(f: Formula):
    """Reject connectives outside rational polynomials (the countable core
    fragment); the lattice connectives are continuous but not polynomial."""
    if isinstance(f, LATTICE_NODES):
        raise ValidationError("lattice connectives are outside the strict fragment")
    if isinstance(f, (FAdd, FSub, FMul)):
        check_strict_fragment(f.left)
        check_strict_fragment(f.right)
    elif isinstance(f, (FSup, FInf)):
        check_strict_fragment(f.body)
    return f


# ---------------------------------------------------------------------------
# Parsing (.clf)


_TWO_CHAR = ("||", "<=")
_ONE_CHAR = "+-*/(){},"


def _tokenize(text):
    toks = []
    line, col = 1, 1
    i = 0
    while i < len(text):
        ch = text[i]
        if ch == "\n":
            line += 1
            col = 1
            i += 1
            continue
        if ch in " \t\r":
            i += 1
            col += 1
            continue
        if ch == "#":
            while i < len(text) and text[i] != "\n":
                i += 1
            continue
        two = text[i:i + 2]
        if two in _TWO_CHAR:
            toks.append((two, two, line, col))
            i += 2
            col += 2
            continue
        if ch.isdigit():
            j = i
            while j < len(text) and text[j].isdigit():
                j += 1
            toks.append(("INT", int(text[i:j]), line, col))
            col += j - i
            i = j
            continue
        if ch.isalpha() or ch == "_":
            j = i
            while j < len(text) and (text[j].isalnum() or text[j] == "_"):
                j += 1
            toks.append(("IDENT", text[i:j], line, col))
            col += j - i
            i = j
            continue
        if ch in _ONE_CHAR:
            toks.append((ch, ch, line, col))
            i += 1
            col += 1
            continue
        raise ParseError(f"unexpected character {ch!r}", line=line, col=col)
    toks.append(("EOF", None, line, col))
    return toks


class _Parser:
    def __init__(self, text):
        self.toks = _tokenize(text)
        self.pos = 0

    def peek(self, ahead=0):
        return self.toks[min(self.pos + ahead, len(self.toks) - 1)]

    def next(self):
        tok = self.toks[self.pos]
        if tok[0] != "EOF":
            self.pos += 1
        return tok

    def expect(self, kind):
        tok = self.next()
        if tok[0] != kind:
            raise ParseError(f"expected {kind!r}, got {tok[1]!r}", line=tok[2], col=tok[3])
        return tok

    def error(self, msg):
        tok = self.peek()
        raise ParseError(msg, line=tok[2], col=tok[3])

    # ---- formula level

    def parse_formula(self):
        f = self.formula_expr()
        if self.peek()[0] != "EOF":
            self.error(f"trailing input {self.peek()[1]!r}")
        return f

    def formula_expr(self):
        f = self.formula_term()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            g = self.formula_term()
            f = FAdd(f, g) if op == "+" else FSub(f, g)
        return f

    def formula_term(self):
        f = self.formula_factor()
        while self.peek()[0] == "*":
            self.next()
            f = FMul(f, self.formula_factor())
        return f

    def formula_factor(self):
        kind, val, line, col = self.peek()
        if kind == "-":
            self.next()
            return FSub(FConst(Fraction(0)), self.formula_factor())
        if kind == "INT":
            return FConst(self.rational())
        if kind == "(":
            self.next()
            f = self.formula_expr()
            self.expect(")")
            return f
        if kind == "IDENT":
            if val == "norm":
                self.next()
                self.expect("(")
                t = self._lift(self.term_expr())
                self.expect(")")
                return FNorm(t)
            if val in ("max", "min"):
                self.next()
                self.expect("(")
                parts = [self.formula_expr()]
                while self.peek()[0] == ",":
                    self.next()
                    parts.append(self.formula_expr())
                self.expect(")")
                return FMax(tuple(parts)) if val == "max" else FMin(tuple(parts))
            if val == "monus":
                self.next()
                self.expect("(")
                a = self.formula_expr()
                self.expect(",")
                b = self.formula_expr()
                self.expect(")")
                return FMonus(a, b)
            if val in ("sup", "inf"):
                self.next()
                self.expect("{")
                self.expect("||")
                var = self.variable()
                self.expect("||")
                self.expect("<=")
                bound = self.rational()
                if bound < 1:
                    self.error("quantifier bound must be at least 1")
                self.expect("}")
                body = self.formula_expr()  # the body extends maximally
                return FSup(var, bound, body) if val == "sup" else FInf(var, bound, body)
        self.error(f"cannot start a formula with {val!r}")

    def rational(self):
        tok = self.expect("INT")
        p = tok[1]
        if self.peek()[0] == "/":
            self.next()
            q = self.expect("INT")[1]
            if q == 0:
                raise ParseError("zero denominator", line=tok[2], col=tok[3])
            return Fraction(p, q)
        return Fraction(p)

    def variable(self):
        tok = self.expect("IDENT")
        name = tok[1]
        if not (name.startswith("x") and name[1:].isdigit()):
            raise ParseError(f"expected a variable x<k>, got {name!r}", line=tok[2], col=tok[3])
        return int(name[1:])

    # ---- term level (inside norm)

    def term_expr(self):
        t = self.term_product()
        while self.peek()[0] in ("+", "-"):
            op = self.next()[0]
            u = self.term_product()
            t = self._tadd(t, u) if op == "+" else self._tadd(t, self._tscale(-1, u))
        return t

    def term_product(self):
        factors = [self.term_factor()]
        while True:
            kind = self.peek()[0]
            if kind == "*":
                nxt = self.peek(1)[0]
                if nxt in ("INT", "IDENT", "("):
                    self.next()
                    factors.append(self.term_factor())
                    continue
                # postfix adjoint: the star closes the previous factor
                self.next()
                factors[-1] = self._tadj(factors[-1])
                continue
            break
        out = factors[0]
        for f in factors[1:]:
            out = self._tmul(out, f)
        return out

    def term_factor(self):
        kind, val, line, col = self.peek()
        if kind == "-":
            self.next()
            return self._tscale(-1, self.term_factor())
        if kind == "INT":
            return self._postfix(self.rational())
        if kind == "(":
            self.next()
            t = self.term_expr()
            self.expect(")")
            return self._postfix(t)
        if kind == "IDENT":
            if val == "i":
                self.next()
                return self._postfix(QI(0, 1))
            if val == "adj":
                self.next()
                self.expect("(")
                t = self.term_expr()
                self.expect(")")
                return self._postfix(self._tadj(t))
            if val.startswith("x") and val[1:].isdigit():
                self.next()
                return self._postfix(TVar(int(val[1:])))
        self.error(f"cannot start a term with {val!r}")

    def _postfix(self, t):
        # a star that cannot begin a new factor is an adjoint
        while self.peek()[0] == "*" and self.peek(1)[0] not in ("INT", "IDENT", "("):
            self.next()
            t = self._tadj(t)
        return t

    # scalar-aware combinators: scalars stay exact until they must touch a term
    @staticmethod
    def _is_scalar(x):
        return isinstance(x, (Fraction, QI))

    def _tadd(self, a, b):
        if self._is_scalar(a) and self._is_scalar(b):
            return as_qi(a) + as_qi(b)
        return TAdd(self._lift(a), self._lift(b))

    def _tmul(self, a, b):
        if self._is_scalar(a) and self._is_scalar(b):
            return as_qi(a) * as_qi(b)
        if self._is_scalar(a):
            return TScale(as_qi(a), self._lift(b))
        if self._is_scalar(b):
            return TScale(as_qi(b), self._lift(a))
        return TMul(a, b)

    def _tscale(self, c, t):
        if self._is_scalar(t):
            return as_qi(c) * as_qi(t)
        return TScale(as_qi(c), t)

    def _tadj(self, t):
        if self._is_scalar(t):
            return as_qi(t).conj()
        return TAdj(t)

    @staticmethod
    def _lift(x):
        if isinstance(x, (Fraction, QI)):
            return TConst(as_qi(x))
        return x


def parse_formula(text: str, strict: bool = False) -> Formula:
    """Parse a formula in the .clf grammar.

    Postfix '*' is an adjoint exactly when the next token cannot begin a
    factor, so x0*x0 is a product while x0* * x0 (or adj(x0)*x0) conjugates.
    With strict=True only rational-polynomial connectives are admitted.
    """
    f = _Parser(text).parse_formula()
    if strict:
        check_strict_fragment(f)
    return f


# ---------------------------------------------------------------------------
# Evaluation


@dataclass(frozen=True)
class EvalConfig:
    seed: int = 0
    restarts: int = 64
    refine: int = 200
    pool: int = 8
    tol: float = 1e-6
    margin: float = 1e-2


@dataclass(frozen=True)
class EvalResult:
    value: float
    certificate: str  # "exact" | "lower" | "upper"

    def __iter__(self):
        return iter((self.value, self.certificate))


def truncation_scale(r: float, bound: float) -> float:
    """The clamping factor: identity inside the ball, reciprocal outside."""
    return 1.0 if r <= bound else 1.0 / r


def rescale_into_ball(blocks, bound):
    r = _blocks_norm(blocks)
    s = truncation_scale(r, float(bound))
    if s == 1.0:
        return blocks
    return [s * b for b in blocks]


def _blocks_norm(blocks):
    return max(_np_norm(b) for b in blocks)


def evaluate(formula: Formula, algebra: FDAlgebra, assignment=None,
             cfg: EvalConfig = None, extra_witnesses=None) -> EvalResult:
    """Evaluate a formula on an algebra.

    `assignment` maps free-variable indices to BlockElements.  Supplied
    `extra_witnesses` (a list of BlockElements) join the candidate pool of
    every quantifier, clamped into the ball, so the reported sup is never
    below the formula's value at any of them.
    """
    cfg = cfg or EvalConfig()
    env = {}
    for k, v in (assignment or {}).items():
        env[k] = v.to_numpy() if isinstance(v, BlockElement) else [np.asarray(b, dtype=complex) for b in v]
    missing = formula.free_vars() - set(env)
    if missing:
        raise UnboundVariableError(f"unbound variables {sorted(missing)}")
    extras = []
    for w in extra_witnesses or []:
        extras.append(w.to_numpy() if isinstance(w, BlockElement) else [np.asarray(b, dtype=complex) for b in w])
    value = _eval(formula, algebra, env, cfg, 0, extras)
    return EvalResult(float(value), _certificate(formula))


def _certificate(formula):
    if not _has_quantifier(formula):
        return "exact"
    outer = _outermost_quantifier(formula)
    return "lower" if isinstance(outer, FSup) else "upper"


def _outermost_quantifier(f):
    queue = [f]
    while queue:
        node = queue.pop(0)
        if isinstance(node, (FSup, FInf)):
            return node
        if isinstance(node, (FAdd, FSub, FMul, FMonus)):
            queue.extend([node.left, node.right])
        elif isinstance(node, (FMax, FMin)):
            queue.extend(node.parts)
    raise AssertionError("no quantifier found")


def _eval(f, algebra, env, cfg, depth, extras):
    if isinstance(f, FConst):
        return float(f.value)
    if isinstance(f, FNorm):
        blocks = eval_term_numpy(f.term, env, algebra.blocks)
        return _blocks_norm(blocks)
    if isinstance(f, FAdd):
        return _eval(f.left, algebra, env, cfg, depth, extras) + _eval(f.right, algebra, env, cfg, depth, extras)
    if isinstance(f, FSub):
        return _eval(f.left, algebra, env, cfg, depth, extras) - _eval(f.right, algebra, env, cfg, depth, extras)
    if isinstance(f, FMul):
        return _eval(f.left, algebra, env, cfg, depth, extras) * _eval(f.right, algebra, env, cfg, depth, extras)
    if isinstance(f, FMax):
        return max(_eval(p, algebra, env, cfg, depth, extras) for p in f.parts)
    if isinstance(f, FMin):
        return min(_eval(p, algebra, env, cfg, depth, extras) for p in f.parts)
    if isinstance(f, FMonus):
        return max(
            _eval(f.left, algebra, env, cfg, depth, extras)
            - _eval(f.right, algebra, env, cfg, depth, extras),
            0.0,
        )
    if isinstance(f, (FSup, FInf)):
        return _optimize(f, algebra, env, cfg, depth, extras)
    raise TypeError(f"not a formula: {f!r}")


def _collapse_prefix(f):
    """Merge consecutive same-direction quantifiers into one joint search."""
    kind = type(f)
    group = []
    node = f
    while isinstance(node, kind):
        group.append((node.var, float(node.bound)))
        node = node.body
    return group, node, kind is FSup


def _optimize(f, algebra, env, cfg, depth, extras):
    group, body, maximize = _collapse_prefix(f)
    restarts = cfg.restarts if depth == 0 else max(4, cfg.restarts // 16)
    refine = cfg.refine if depth == 0 else max(8, cfg.refine // 16)
    sign = 1.0 if maximize else -1.0

    def score(witnesses):
        local = dict(env)
        for (var, bound), w in zip(group, witnesses):
            local[var] = w
        return sign * _eval(body, algebra, local, cfg, depth + 1, extras)

    structured = _structured_candidates(algebra)
    best_val = None
    best_wit = None
    history = []

    for r in range(restarts):
        rng = np.random.Generator(np.random.PCG64((cfg.seed, depth, r)))
        wit = []
        for slot, (var, bound) in enumerate(group):
            if r < len(extras):
                cand = extras[r]
            elif r < len(extras) + len(structured):
                cand = structured[(r - len(extras) + slot) % len(structured)]
            else:
                cand = _random_element(algebra, rng, bound)
            wit.append(rescale_into_ball(cand, bound))
        val = score(wit)
        wit, val = _refine(wit, val, score, group, algebra, rng, refine)
        history.append((val, wit))
        if best_val is None or val > best_val:
            best_val, best_wit = val, wit

    # mix the best witnesses with *-polynomial combinations of each other
    history.sort(key=lambda t: -t[0])
    pool = [slot for _, w in history[: max(2, cfg.pool // 2)] for slot in w]
    rng = np.random.Generator(np.random.PCG64((cfg.seed, depth, 999983)))
    for cand in _combination_candidates(pool):
        wit = [rescale_into_ball(cand, bound) for _, bound in group]
        val = score(wit)
        wit, val = _refine(wit, val, score, group, algebra, rng, max(4, refine // 4))
        if val > best_val:
            best_val, best_wit = val, wit
    return sign * best_val


def _refine(wit, val, score, group, algebra, rng, steps):
    k = algebra.num_blocks
    for t in range(steps):
        sigma = max(0.35 * (0.975 ** t), 2e-3)
        slot = int(rng.integers(len(wit)))
        block = int(rng.integers(k))
        n = algebra.blocks[block]
        i, j = int(rng.integers(n)), int(rng.integers(n))
        delta = sigma * complex(rng.standard_normal(), rng.standard_normal())
        trial = [b.copy() for b in wit[slot]]
        trial[block][i, j] += delta
        trial = rescale_into_ball(trial, group[slot][1])
        new_wit = list(wit)
        new_wit[slot] = trial
        new_val = score(new_wit)
        if new_val > val:
            wit, val = new_wit, new_val
    return wit, val


def _structured_candidates(algebra):
    """Deterministic seeds: scaled units and diagonal rank patterns."""
    out = []
    unit = [np.eye(n, dtype=complex) for n in algebra.blocks]
    out.append(unit)
    out.append([-b for b in unit])
    out.append([1j * b for b in unit])
    # single diagonal projections, ordered by (block, position)
    for b, n in enumerate(algebra.blocks):
        for d in range(n):
            cand = [np.zeros((m, m), dtype=complex) for m in algebra.blocks]
            cand[b][d, d] = 1.0
            out.append(cand)
    out.append([np.zeros((n, n), dtype=complex) for n in algebra.blocks])
    return out


def _random_element(algebra, rng, bound):
    blocks = []
    for n in algebra.blocks:
        m = rng.standard_normal((n, n)) + 1j * rng.standard_normal((n, n))
        blocks.append(m)
    r = _blocks_norm(blocks)
    target = float(rng.uniform(0.1, bound))
    if r > 0:
        blocks = [target / r * b for b in blocks]
    return blocks


def _combination_candidates(pool):
    """*-polynomial mixes of prior witnesses (one element per recipe)."""
    out = []
    for w in pool:
        out.append([b @ b for b in w])
        out.append([b.conj().T @ b for b in w])
        out.append([b.conj().T for b in w])
    for w1 in pool:
        for w2 in pool:
            if w1 is w2:
                continue
            out.append([a + b for a, b in zip(w1, w2)])
            out.append([a @ b for a, b in zip(w1, w2)])
    return out[:32]


# ---------------------------------------------------------------------------
# Theory fingerprints


@dataclass(frozen=True)
class TheoryFingerprint:
    entries: tuple  # (sentence id, value, certificate)


def theory_fingerprint(algebra: FDAlgebra, sentences, cfg: EvalConfig = None) -> TheoryFingerprint:
    cfg = cfg or EvalConfig()
    entries = []
    for idx, s in enumerate(sentences):
        if not s.is_sentence:
            raise ValidationError(f"formula {idx} has free variables {sorted(s.free_vars())}")
        res = evaluate(s, algebra, None, cfg)
        entries.append((idx, res.value, res.certificate))
    return TheoryFingerprint(tuple(entries))


# ---------------------------------------------------------------------------
# Stable and real rank


@dataclass(frozen=True)
class RankCertificate:
    samples: int
    epsilon: float
    max_perturbation: float
    min_singular: float
    max_residual: float


@dataclass(frozen=True)
class RankVerdict:
    detected: bool
    mode: str = ""  # "exact" | "numeric"
    certificate: RankCertificate = None

    @property
    def label(self):
        return f"TRUE({self.mode})" if self.detected else "NOT_DETECTED"

    def __bool__(self):
        return self.detected


def stable_rank_leq(algebra: FDAlgebra, n: int, cfg: EvalConfig = None,
                    method: str = "exact") -> RankVerdict:
    """Are the left-invertible n-tuples dense?

    The exact path perturbs the small singular values of sampled tuples:
    lifting every singular value of the first coordinate to at least eps/2
    moves the tuple by at most eps/2 and lands it among the left-invertible
    tuples, with the inverse as the certificate.  The numeric path estimates
    the density condition as a sup-inf sentence.
    """
    if n < 1:
        raise ValidationError("stable rank queries need n >= 1")
    cfg = cfg or EvalConfig()
    if method == "numeric":
        return _rank_numeric(algebra, n, cfg, selfadjoint=False)

    eps = 0.25
    rng = np.random.Generator(np.random.PCG64((cfg.seed, 71, n)))
    max_pert = 0.0
    min_sv = np.inf
    max_res = 0.0
    for _ in range(cfg.pool):
        tup = [_random_element(algebra, rng, 1.0) for _ in range(n)]
        first = tup[0]
        pert_blocks = []
        inv_blocks = []
        for b in first:
            u, s, vh = np.linalg.svd(b)
            s2 = np.maximum(s, eps / 2)
            nb = u @ np.diag(s2) @ vh
            pert_blocks.append(nb)
            inv_blocks.append(np.linalg.inv(nb))
        pert = max(_np_norm(nb - b) for nb, b in zip(pert_blocks, first))
        if pert > eps:
            return RankVerdict(False)
        sv = min(np.linalg.svd(nb, compute_uv=False)[-1] for nb in pert_blocks)
        res = max(
            _np_norm(ib @ nb - np.eye(nb.shape[0]))
            for ib, nb in zip(inv_blocks, pert_blocks)
        )
        if res >= 1:
            return RankVerdict(False)
        max_pert = max(max_pert, pert)
        min_sv = min(min_sv, sv)
        max_res = max(max_res, res)
    cert = RankCertificate(cfg.pool, eps, max_pert, float(min_sv), max_res)
    return RankVerdict(True, "exact", cert)


def real_rank_leq(algebra: FDAlgebra, n: int, cfg: EvalConfig = None,
                  method: str = "exact") -> RankVerdict:
    """Self-adjoint analogue over (n+1)-tuples; the perturbation shifts the
    near-zero eigenvalues of a sampled self-adjoint element off zero."""
    if n < 0:
        raise ValidationError("real rank queries need n >= 0")
    cfg = cfg or EvalConfig()
    if method == "numeric":
        return _rank_numeric(algebra, n + 1, cfg, selfadjoint=True)

    eps = 0.25
    rng = np.random.Generator(np.random.PCG64((cfg.seed, 72, n)))
    max_pert = 0.0
    min_gap = np.inf
    max_res = 0.0
    for _ in range(cfg.pool):
        raw = _random_element(algebra, rng, 1.0)
        sa = [(b + b.conj().T) / 2 for b in raw]
        pert_blocks = []
        inv_blocks = []
        for b in sa:
            lam, vecs = np.linalg.eigh(b)
            lam2 = np.where(np.abs(lam) < eps / 2, np.where(lam >= 0, eps / 2, -eps / 2), lam)
            nb = vecs @ np.diag(lam2) @ vecs.conj().T
            pert_blocks.append(nb)
            inv_blocks.append(np.linalg.inv(nb))
        pert = max(_np_norm(nb - b) for nb, b in zip(pert_blocks, sa))
        if pert > eps:
            return RankVerdict(False)
        gap = min(np.abs(np.linalg.eigvalsh(nb)).min() for nb in pert_blocks)
        sa_defect = max(_np_norm(ib - ib.conj().T) for ib in inv_blocks)
        res = max(
            _np_norm(ib @ nb - np.eye(nb.shape[0]))
            for ib, nb in zip(inv_blocks, pert_blocks)
        )
        if res >= 1 or sa_defect > cfg.tol:
            return RankVerdict(False)
        max_pert = max(max_pert, pert)
        min_gap = min(min_gap, gap)
        max_res = max(max_res, res)
    cert = RankCertificate(cfg.pool, eps, max_pert, float(min_gap), max_res)
    return RankVerdict(True, "exact", cert)


def _rank_numeric(algebra, n, cfg, selfadjoint):
    """Density of the invertibility set as a sup-inf sentence estimate."""
    a_vars = list(range(n))
    ap_vars = list(range(n, 2 * n))
    b_vars = list(range(2 * n, 3 * n))

    def sa(v):
        t = TVar(v)
        half = QI(Fraction(1, 2))
        return TScale(half, TAdd(t, TAdj(t))) if selfadjoint else t

    closeness = [FNorm(TAdd(sa(a), TScale(QI(-1), sa(p)))) for a, p in zip(a_vars, ap_vars)]
    prod = None
    for p, b in zip(ap_vars, b_vars):
        term = TMul(sa(b), sa(p))
        prod = term if prod is None else TAdd(prod, term)
    defect = FNorm(TAdd(prod, TScale(QI(-1), TConst(QI(1)))))
    inner = FMax(tuple(closeness) + (FMonus(defect, FConst(Fraction(1, 2))),))
    body = inner
    for v in reversed(ap_vars + b_vars):
        body = FInf(v, Fraction(2), body)
    sent = body
    for v in reversed(a_vars):
        sent = FSup(v, Fraction(1), sent)
    est = evaluate(sent, algebra, None, cfg)
    if est.value <= cfg.margin:
        return RankVerdict(True, "numeric")
    return RankVerdict(False)

"""Holomorphic functional calculus for graph operators.

Three routes to g(T) live here and deliberately stay independent of each
other, so each can serve as an oracle for the others:

* ``contour_apply`` evaluates the Cauchy-integral definition
  g(T) = -1/(2 pi i) * integral of g(z) (T - z Id)^-1 dz over a circle
  enclosing the spectrum, by trapezoidal quadrature (exponentially accurate
  for analytic integrands).
* ``build_bank`` constructs filter-bank atoms in closed form: discounted
  monomials gamma^k T^k for a circular spectral domain, or resolvent powers
  (T - y Id)^-k for functions decaying at complex infinity.
* ``spectral_response`` evaluates the generalized-eigenspace form
  g(T) = sum_l g(l) P_l + sum_l sum_n g^(n)(l)/n! (T - l Id)^n P_l,
  a test-only oracle restricted to small, well-conditioned spectra.
"""

import cmath
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field

import numpy as np
import scipy.linalg
import scipy.sparse as sp
import scipy.sparse.linalg as spla

from .digraph import CharacteristicOperator
from .errors import (
    ConfigError,
    IllConditionedSpectrumError,
    NonRealBankError,
    PoleOnSpectrumError,
    ShapeMismatchError,
    SingularResolventError,
)

DEFAULT_QUADRATURE_NODES = 256


@dataclass(frozen=True)
class Contour:
    """Circular integration path z(t) = center + radius * e^(it).

    The radius must exceed max |lambda - center| over the spectrum of the
    target operator; this is the caller's responsibility (checked only where
    a dense eigensolve is affordable).
    """

    center: complex = 0.0
    radius: float = 1.0
    n_quadrature: int = DEFAULT_QUADRATURE_NODES

    def __post_init__(self):
        if self.radius <= 0:
            raise ValueError("contour radius must be positive")
        if self.n_quadrature < 16:
            raise ValueError("need at least 16 quadrature nodes")

    def nodes(self) -> np.ndarray:
        t = 2 * np.pi * np.arange(self.n_quadrature) / self.n_quadrature
        return self.center + self.radius * np.exp(1j * t)

    def encloses(self, point: complex, strictly_outside=False) -> bool:
        d = abs(complex(point) - complex(self.center))
        return d > self.radius if strictly_outside else d < self.radius


def spectral_radius_bound(t) -> float:
    """Cheap upper bound on the spectral radius: min of inf-norm and 1-norm."""
    a = np.abs(t.toarray() if sp.issparse(t) else np.asarray(t))
    return float(min(a.sum(axis=1).max(initial=0.0), a.sum(axis=0).max(initial=0.0)))


def default_contour(t, margin=1.1, n_quadrature=DEFAULT_QUADRATURE_NODES) -> Contour:
    """Circle at the origin guaranteed to enclose the spectrum of ``t``."""
    t = _as_matrix(t)
    radius = max(margin * spectral_radius_bound(t), 1.0)
    return Contour(center=0.0, radius=radius, n_quadrature=n_quadrature)


def _as_matrix(t):
    if isinstance(t, CharacteristicOperator):
        t = t.matrix
    return t


def _as_dense(t) -> np.ndarray:
    t = _as_matrix(t)
    return t.toarray() if sp.issparse(t) else np.asarray(t)


def contour_apply(fn, t, contour: Contour | None = None, threads: int = 1) -> np.ndarray:
    """Trapezoidal approximation of the operator contour integral of ``fn``.

    The quadrature solves are independent; with ``threads > 1`` they run in a
    pool, but the final reduction always sums in node order so results are
    bit-reproducible at a fixed thread count.

    Raises SingularResolventError when a quadrature node hits the spectrum.
    """
    t = _as_dense(t)
    if contour is None:
        contour = default_contour(t)
    n = t.shape[0]
    eye = np.eye(n)
    nodes = contour.nodes()
    m = contour.n_quadrature
    phases = np.exp(2j * np.pi * np.arange(m) / m)

    def term(k):
        z = nodes[k]
        try:
            res = np.linalg.solve(t - z * eye, eye)
        except np.linalg.LinAlgError as exc:
            raise SingularResolventError(
                f"quadrature node {z} hits the spectrum; enlarge the contour"
            ) from exc
        return fn(z) * phases[k] * res

    if threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            terms = list(pool.map(term, range(m)))
    else:
        terms = [term(k) for k in range(m)]
    acc = np.zeros((n, n), dtype=complex)
    for piece in terms:
        acc += piece
    out = -(contour.radius / m) * acc
    if not np.all(np.isfinite(out)):
        raise SingularResolventError("non-finite quadrature result; invalid contour")
    return out


def matrix_polynomial(coefficients, t) -> np.ndarray:
    """Horner evaluation of sum_k c_k T^k (coefficients in ascending order)."""
    t = _as_dense(t)
    n = t.shape[0]
    out = np.zeros((n, n), dtype=np.result_type(t.dtype, np.asarray(coefficients).dtype))
    for c in list(coefficients)[::-1]:
        out = out @ t + c * np.eye(n)
    return out


# ---------------------------------------------------------------------------
# Filter banks
# ---------------------------------------------------------------------------

FABER = "faber"
RESOLVENT = "resolvent"


@dataclass(frozen=True)
class FilterBankSpec:
    """Symbolic description of a filter bank.

    ``faber`` banks hold discounted monomials gamma^k lambda^k for the
    circular spectral domain, k = 0 or 1 .. order.  ``resolvent`` banks hold
    the atoms (lambda - pole)^-k for k = 1 .. order; there is deliberately no
    k = 0 atom (the scale-insensitivity results require filters that vanish
    at complex infinity).
    """

    kind: str
    order: int
    gamma: float = 0.5
    include_order_zero: bool = True
    pole: complex = -1.0

    def __post_init__(self):
        if self.kind not in (FABER, RESOLVENT):
            raise ConfigError(f"unknown bank kind {self.kind!r}")
        if self.order < 1:
            raise ConfigError("bank order must be >= 1")
        if self.kind == FABER and not 0 < self.gamma <= 1:
            raise ConfigError("faber discount gamma must lie in (0, 1]")

    @property
    def n_atoms(self) -> int:
        if self.kind == FABER:
            return self.order + (1 if self.include_order_zero else 0)
        return self.order

    def atom_function(self, index: int):
        """Scalar generating function of the atom at position ``index``."""
        if self.kind == FABER:
            k = index + (0 if self.include_order_zero else 1)
            return lambda z, k=k, g=self.gamma: (g * z) ** k
        k = index + 1
        return lambda z, k=k, y=self.pole: (z - y) ** (-k)

    def to_config_block(self) -> str:
        lines = [f"kind = {self.kind}", f"K = {self.order}"]
        if self.kind == FABER:
            lines.append(f"gamma = {self.gamma:.17g}")
            lines.append(f"include_order_zero = {str(self.include_order_zero).lower()}")
        else:
            lines.append(f"y_real = {self.pole.real:.17g}")
            lines.append(f"y_imag = {self.pole.imag:.17g}")
        return "\n".join(lines) + "\n"

    @classmethod
    def from_config_block(cls, text: str) -> "FilterBankSpec":
        known = {"kind", "k", "gamma", "include_order_zero", "y_real", "y_imag"}
        values = {}
        for lineno, raw in enumerate(text.splitlines(), start=1):
            line = raw.strip()
            if not line or line.startswith(("#", ";")):
                continue
            if "=" not in line:
                raise ConfigError(f"bank spec line {lineno}: expected 'key = value'")
            key, _, val = line.partition("=")
            key = key.strip().lower()
            if key not in known:
                raise ConfigError(f"bank spec line {lineno}: unknown key {key!r}")
            values[key] = val.strip()
        if "kind" not in values or "k" not in values:
            raise ConfigError("bank spec needs at least 'kind' and 'K'")
        kind = values["kind"]
        kwargs = {"kind": kind, "order": int(values["k"])}
        if "gamma" in values:
            kwargs["gamma"] = float(values["gamma"])
        if "include_order_zero" in values:
            flag = values["include_order_zero"].lower()
            if flag not in ("true", "false"):
                raise ConfigError("include_order_zero must be true or false")
            kwargs["include_order_zero"] = flag == "true"
        if "y_real" in values or "y_imag" in values:
            kwargs["pole"] = complex(
                float(values.get("y_real", -1.0)), float(values.get("y_imag", 0.0))
            )
        return cls(**kwargs)


@dataclass(frozen=True)
class PrecomputedBank:
    """Filter-bank atoms evaluated on a fixed operator.

    ``atoms[i]`` is the N x N matrix of the i-th basis function applied to
    the operator; a learnable filter is any linear combination of them.
    """

    atoms: tuple
    spec: FilterBankSpec
    operator: np.ndarray = field(repr=False)
    purely_real: bool

    @property
    def n_atoms(self) -> int:
        return len(self.atoms)

    def combine(self, theta) -> np.ndarray:
        """g_theta(T) = sum_i theta_i Psi_i(T)."""
        theta = np.asarray(theta)
        if theta.size != self.n_atoms:
            raise ShapeMismatchError(
                f"{theta.size} coefficients for a bank of {self.n_atoms} atoms"
            )
        dtype = np.result_type(theta.dtype, *(a.dtype for a in self.atoms))
        out = np.zeros(self.atoms[0].shape, dtype=dtype)
        for coef, atom in zip(theta, self.atoms):
            out += coef * atom
        return out


def _resolvent_dense(t, pole):
    """(T - pole Id)^-1 with a residual check guarding near-singularity."""
    n = t.shape[0]
    shifted = t - pole * np.eye(n)
    try:
        res = np.linalg.solve(shifted, np.eye(n, dtype=shifted.dtype))
    except np.linalg.LinAlgError as exc:
        raise PoleOnSpectrumError(f"pole {pole} lies on the spectrum") from exc
    residual = np.linalg.norm(shifted @ res - np.eye(n))
    if not np.isfinite(residual) or residual > 1e-6 * max(1.0, np.linalg.norm(res)):
        raise PoleOnSpectrumError(
            f"pole {pole} too close to the spectrum (solver residual {residual:.2e})"
        )
    return res


def build_bank(t, spec: FilterBankSpec) -> PrecomputedBank:
    """Precompute the atom matrices Psi_i(T) for the given bank spec.

    Atoms are exact closed forms: gamma^k T^k for faber banks and
    ((T - y Id)^-1)^k for resolvent banks, so no contour quadrature is
    involved (``bank_matches_contour`` checks the two routes against each
    other).
    """
    t = _as_dense(t)
    if t.shape[0] != t.shape[1]:
        raise ShapeMismatchError("operator must be square")
    real_input = not np.iscomplexobj(t)
    atoms = []
    if spec.kind == FABER:
        n = t.shape[0]
        power = np.eye(n, dtype=t.dtype)
        if spec.include_order_zero:
            atoms.append(power)
        for _ in range(spec.order):
            power = spec.gamma * (t @ power)
            atoms.append(power)
        purely_real = real_input
    else:
        pole = complex(spec.pole)
        if real_input and pole.imag == 0:
            base = _resolvent_dense(t, pole.real)
            purely_real = True
        else:
            base = _resolvent_dense(t.astype(complex), pole)
            purely_real = False
        power = base
        atoms.append(power)
        for _ in range(spec.order - 1):
            power = power @ base
            atoms.append(power)
    for a in atoms:
        a.setflags(write=False)
    return PrecomputedBank(
        atoms=tuple(atoms), spec=spec, operator=t, purely_real=purely_real
    )


def bank_matches_contour(bank: PrecomputedBank, contour: Contour, threads=1) -> float:
    """Max relative Frobenius deviation between stored atoms and their
    contour-integral evaluations.

    For resolvent banks the pole must lie strictly outside the contour (the
    generating function has to be holomorphic inside).  Deviations are
    normalized by max(1, ||atom||_F) so exactly-zero atoms are compared
    absolutely.
    """
    if bank.spec.kind == RESOLVENT and not contour.encloses(
        bank.spec.pole, strictly_outside=True
    ):
        raise ValueError("resolvent pole must lie strictly outside the contour")
    worst = 0.0
    for i, atom in enumerate(bank.atoms):
        fn = bank.spec.atom_function(i)
        via_contour = contour_apply(fn, bank.operator, contour, threads=threads)
        scale = max(1.0, float(np.linalg.norm(atom)))
        worst = max(worst, float(np.linalg.norm(via_contour - atom)) / scale)
    return worst


def apply_filter(t, spec: FilterBankSpec, theta, x) -> np.ndarray:
    """Apply g_theta(T) = sum_i theta_i Psi_i(T) to features without
    materializing the atoms.

    Works for dense and sparse operators: faber banks use repeated matvecs,
    resolvent banks repeated sparse/dense factorized solves.  This is the
    route for graphs too large to precompute N x N atom matrices.
    """
    t = _as_matrix(t)
    theta = np.asarray(theta)
    if theta.size != spec.n_atoms:
        raise ShapeMismatchError(
            f"{theta.size} coefficients for a bank of {spec.n_atoms} atoms"
        )
    x = np.asarray(x)
    n = t.shape[0]
    if x.shape[0] != n:
        raise ShapeMismatchError(f"feature rows {x.shape[0]} vs operator size {n}")
    out_dtype = np.result_type(t.dtype, x.dtype, theta.dtype)
    if spec.kind == RESOLVENT and complex(spec.pole).imag != 0:
        out_dtype = np.result_type(out_dtype, np.complex128)
    cur = x.astype(out_dtype, copy=True)
    out = np.zeros_like(cur)
    if spec.kind == FABER:
        idx = 0
        if spec.include_order_zero:
            out += theta[0] * cur
            idx = 1
        for k in range(spec.order):
            cur = spec.gamma * (t @ cur)
            out += theta[idx + k] * cur
    else:
        pole = complex(spec.pole)
        if pole.imag == 0 and not np.iscomplexobj(cur) and not sp.issparse(t):
            pole = pole.real
        if sp.issparse(t):
            shifted = sp.csc_array(t.astype(out_dtype) - pole * sp.eye_array(n))
            try:
                lu = spla.splu(shifted)
            except RuntimeError as exc:
                raise PoleOnSpectrumError(f"pole {pole} lies on the spectrum") from exc
            solve = lu.solve
        else:
            shifted = np.asarray(t, dtype=out_dtype) - pole * np.eye(n)
            try:
                lu = scipy.linalg.lu_factor(shifted)
            except scipy.linalg.LinAlgError as exc:
                raise PoleOnSpectrumError(f"pole {pole} lies on the spectrum") from exc
            solve = lambda rhs: scipy.linalg.lu_solve(lu, rhs)
        for k in range(spec.order):
            cur = solve(cur)
            if not np.all(np.isfinite(cur)):
                raise PoleOnSpectrumError(f"pole {pole} too close to the spectrum")
            out += theta[k] * cur
    return out


# ---------------------------------------------------------------------------
# Spectral-response oracle (generalized eigenspaces)
# ---------------------------------------------------------------------------

ORACLE_MAX_NODES = 50
_CLUSTER_TOL = 1e-6
_ORACLE_CHECK_TOL = 1e-8


def _cluster_eigenvalues(eigs):
    """Greedy clustering of eigenvalues with absolute tolerance 1e-6."""
    order = np.lexsort((eigs.imag, eigs.real))
    clusters = []
    for idx in order:
        lam = eigs[idx]
        for members in clusters:
            if any(abs(lam - eigs[j]) <= _CLUSTER_TOL for j in members):
                members.append(idx)
                break
        else:
            clusters.append([idx])
    return clusters


class SpectralResponseOracle:
    """Jordan-Chevalley data of a small matrix: eigenvalue clusters, spectral
    projections P_l and nilpotent parts (T - l Id) P_l.

    Numerically computing Jordan structure is unstable, so this is a
    test-only oracle: it refuses matrices beyond 50 nodes and raises
    IllConditionedSpectrumError whenever the generalized-eigenvector basis is
    ill-conditioned or the projection identities fail to hold at 1e-8.
    """

    def __init__(self, t):
        t = _as_dense(t)
        n = t.shape[0]
        if n > ORACLE_MAX_NODES:
            raise ValueError(f"oracle restricted to N <= {ORACLE_MAX_NODES}")
        eigs = np.linalg.eigvals(t)
        clusters = _cluster_eigenvalues(eigs)
        self.eigenvalues = []
        self.multiplicities = []
        scale = max(1.0, float(np.linalg.norm(t, 2)))
        basis_blocks = []
        for members in clusters:
            lam = complex(np.mean(eigs[members]))
            m = len(members)
            shifted = (t - lam * np.eye(n)) / scale
            powered = np.linalg.matrix_power(shifted, m)
            _, svals, vh = np.linalg.svd(powered)
            top = svals[0] if svals.size else 0.0
            null_dim = int(np.sum(svals <= max(top * 1e-8, 1e-13)))
            if null_dim != m:
                raise IllConditionedSpectrumError(
                    f"cluster at {lam}: generalized eigenspace dimension "
                    f"{null_dim} != algebraic multiplicity {m}"
                )
            basis_blocks.append(vh[n - m:].conj().T)
            self.eigenvalues.append(lam)
            self.multiplicities.append(m)
        similarity = np.hstack(basis_blocks)
        if np.linalg.cond(similarity) > 1e10:
            raise IllConditionedSpectrumError(
                "generalized eigenvector basis is ill-conditioned"
            )
        inv = np.linalg.inv(similarity)
        self.projections = []
        self.nilpotents = []
        offset = 0
        for lam, m in zip(self.eigenvalues, self.multiplicities):
            selector = np.zeros(n)
            selector[offset:offset + m] = 1.0
            proj = similarity @ (selector[:, None] * inv)
            self.projections.append(proj)
            self.nilpotents.append((t - lam * np.eye(n)) @ proj)
            offset += m
        self._check(t)

    def _check(self, t):
        n = t.shape[0]
        resolution = sum(self.projections)
        if np.linalg.norm(resolution - np.eye(n)) > _ORACLE_CHECK_TOL * n:
            raise IllConditionedSpectrumError("projections do not resolve identity")
        for proj, nil, m in zip(self.projections, self.nilpotents, self.multiplicities):
            if np.linalg.norm(proj @ proj - proj) > _ORACLE_CHECK_TOL * n:
                raise IllConditionedSpectrumError("projection is not idempotent")
            if np.linalg.norm(proj @ t - t @ proj) > _ORACLE_CHECK_TOL * n * max(
                1.0, np.linalg.norm(t, 2)
            ):
                raise IllConditionedSpectrumError("projection does not commute with T")
            if np.linalg.norm(np.linalg.matrix_power(nil, m)) > _ORACLE_CHECK_TOL * n:
                raise IllConditionedSpectrumError("nilpotency check failed")

    def apply(self, fn, derivatives=None) -> np.ndarray:
        """Evaluate g(T) from the spectral data.

        ``derivatives[k]`` must evaluate the (k+1)-th complex derivative of
        ``fn``; they are only needed up to max multiplicity - 1.  Polynomials
        (numpy Polynomial instances) differentiate themselves.
        """
        max_m = max(self.multiplicities)
        derivs = _resolve_derivatives(fn, derivatives, max_m - 1)
        n = self.projections[0].shape[0]
        out = np.zeros((n, n), dtype=complex)
        for lam, m, proj, nil in zip(
            self.eigenvalues, self.multiplicities, self.projections, self.nilpotents
        ):
            out += fn(lam) * proj
            power = proj
            factorial = 1.0
            for order in range(1, m):
                power = nil @ power
                factorial *= order
                out += (derivs[order - 1](lam) / factorial) * power
        return out


def _resolve_derivatives(fn, derivatives, n_needed):
    if n_needed == 0:
        return []
    if derivatives is not None:
        if len(derivatives) < n_needed:
            raise ValueError(f"need {n_needed} derivative callables")
        return list(derivatives)
    if isinstance(fn, np.polynomial.Polynomial):
        out = []
        d = fn
        for _ in range(n_needed):
            d = d.deriv()
            out.append(d)
        return out
    raise ValueError(
        "defective spectrum: pass derivative callables or a numpy Polynomial"
    )


def spectral_response(t, fn, derivatives=None, oracle=None) -> np.ndarray:
    """Evaluate g(T) through the generalized-eigenspace decomposition.

    Falls back on nothing: if the Jordan-structure oracle cannot be built the
    IllConditionedSpectrumError propagates and the caller should use
    ``contour_apply`` instead.
    """
    if oracle is None:
        oracle = SpectralResponseOracle(t)
    return oracle.apply(fn, derivatives)


def spectral_mapping_check(t, coefficients, tol=1e-6) -> bool:
    """Check sigma(g(T)) == g(sigma(T)) for a polynomial g, as multisets up
    to Hausdorff distance ``tol`` on the complex plane."""
    t = _as_dense(t)
    if t.shape[0] > ORACLE_MAX_NODES:
        raise ValueError(f"restricted to N <= {ORACLE_MAX_NODES}")
    lhs = np.linalg.eigvals(matrix_polynomial(coefficients, t))
    rhs = np.array([
        complex(np.polynomial.Polynomial(coefficients)(lam))
        for lam in np.linalg.eigvals(t)
    ])
    dist = max(
        max(np.min(np.abs(rhs - a)) for a in lhs),
        max(np.min(np.abs(lhs - b)) for b in rhs),
    )
    return bool(dist <= tol)

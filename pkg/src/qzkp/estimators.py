"""scikit-learn style wrappers.

A "protocol" input is a (ProofSystem, ProverStrategy, SimulatorEnsemble)
triple.  Estimators keep hyperparameters in __init__, learn in fit and
expose results as trailing-underscore attributes.
"""

from sklearn.base import BaseEstimator, TransformerMixin
from sklearn.utils.validation import check_is_fitted

from . import analysis, transforms, zk
from ._config import REPORT_TOL
from ._validation import ValidationError
from .qip import ProofSystem, ProverStrategy, run
from .simulators import SimulatorEnsemble

KINDS = ("parallelize", "public-coin", "perfect-complete", "par-rep", "seq-rep")


def check_protocol(x):
    """Validate a protocol triple and return it as a tuple."""
    try:
        ps, honest, sim = x
    except (TypeError, ValueError):
        raise ValidationError("expected a (proof system, prover, simulator) triple") from None
    if not isinstance(ps, ProofSystem):
        raise ValidationError("first element must be a ProofSystem")
    if not isinstance(honest, ProverStrategy):
        raise ValidationError("second element must be a ProverStrategy")
    if sim is not None and not isinstance(sim, SimulatorEnsemble):
        raise ValidationError("third element must be a SimulatorEnsemble or None")
    return ps, honest, sim


class ProtocolTransformer(TransformerMixin, BaseEstimator):
    """Applies one protocol transformation; fit records the honest acceptance."""

    def __init__(self, kind="parallelize", k=2, t=None, eps=None, delta=None):
        self.kind = kind
        self.k = k
        self.t = t
        self.eps = eps
        self.delta = delta

    def fit(self, x, y=None):
        ps, honest, _ = check_protocol(x)
        if self.kind not in KINDS:
            raise ValidationError(f"unknown transform kind {self.kind!r}")
        self.p_acc_ = run(ps, honest)[0]
        return self

    def transform(self, x):
        check_is_fitted(self, "p_acc_")
        ps, honest, sim = check_protocol(x)
        kw = {"eps": self.eps, "delta": self.delta}
        if self.kind == "parallelize":
            out = transforms.parallelize(ps, honest, sim, **kw)
        elif self.kind == "public-coin":
            out = transforms.to_public_coin(ps, honest, sim, **kw)
        elif self.kind == "perfect-complete":
            eps = 1 - self.p_acc_ if self.eps is None else self.eps
            out = transforms.make_perfect_complete(ps, honest, sim, max(0.0, eps),
                                                   delta=self.delta)
        elif self.kind == "par-rep":
            out = transforms.parallel_repeat(ps, honest, sim, self.k, **kw)
        else:
            out = transforms.sequential_repeat(ps, honest, sim, self.k, self.t, **kw)
        self.report_ = out[3]
        return out[:3]


class ProverAttack(BaseEstimator):
    """Seesaw search for a cheating prover; best_p_ lower-bounds the cheat value."""

    def __init__(self, restarts=8, iters=500, tol=1e-10, width=None, seed=0):
        self.restarts = restarts
        self.iters = iters
        self.tol = tol
        self.width = width
        self.seed = seed

    def fit(self, ps, y=None, init=None):
        if not isinstance(ps, ProofSystem):
            raise ValidationError("ProverAttack.fit expects a ProofSystem")
        res = analysis.optimize_prover(ps, self.restarts, self.iters, self.tol,
                                       self.width, self.seed, init)
        self.result_ = res
        self.best_p_ = res.best_p
        self.strategy_ = res.strategy
        return self

    def predict(self, threshold):
        """True where the found cheat value exceeds the soundness threshold."""
        check_is_fitted(self, "best_p_")
        return self.best_p_ > threshold


class ZKChecker(BaseEstimator):
    """Honest-verifier view check; predict says whether every distance is within tol."""

    def __init__(self, mode="perfect", tol=REPORT_TOL):
        self.mode = mode
        self.tol = tol

    def fit(self, x, y=None):
        ps, honest, sim = check_protocol(x)
        if sim is None:
            raise ValidationError("a simulator is required")
        self.distances_ = zk.hv_check(ps, honest, sim, mode="statistical", tol=self.tol)
        return self

    def predict(self, x=None):
        check_is_fitted(self, "distances_")
        return all(d <= self.tol for d in self.distances_)

    def score(self, x=None, y=None):
        check_is_fitted(self, "distances_")
        return -max(self.distances_)

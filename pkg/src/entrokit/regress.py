"""Pooled-OLS conditional factor models.

Panels pair entity excess returns with date-keyed factor and conditioning
tables. Designs interact the factors with conditioning series that are
standardized over the full sample and lagged one period by date key, so
every fit uses only information dated strictly before the return.
"""
from __future__ import annotations

from bisect import bisect_left
from dataclasses import dataclass, field
from typing import Dict, Hashable, Mapping, Optional, Sequence, Tuple

import numpy as np
from scipy.linalg import solve_triangular
from scipy.stats import f as f_dist
from scipy.stats import t as t_dist

CAPM = "capm"
COND_VOL = "cond-vol"
COND_APEN = "cond-apen"
COND_COMBINED = "cond-combined"
COND_BOTH = "cond-both"
FF3 = "ff3"
FF3_COND_MKT = "ff3-cond-mkt"
FF3_COND_ALL = "ff3-cond-all"
MODELS = (CAPM, COND_VOL, COND_APEN, COND_COMBINED, COND_BOTH,
          FF3, FF3_COND_MKT, FF3_COND_ALL)

RV = "rv"
APEN = "apen"


@dataclass(frozen=True)
class Panel:
    """Entity-date excess returns plus date-keyed factor and Z tables.

    factors maps date -> (mkt_excess, smb, hml); conditioning maps a series
    name (the conditional designs expect "rv" and "apen") to a date-keyed
    series. Every row's date must be covered by both tables; conditioning
    values for earlier lag dates may be absent, those rows drop at design
    time.
    """

    entities: Sequence[Hashable]
    dates: Sequence[Hashable]
    returns: np.ndarray = field(repr=False)
    factors: Mapping[Hashable, Tuple[float, float, float]] = field(repr=False)
    conditioning: Mapping[str, Mapping[Hashable, float]] = field(repr=False)

    def __post_init__(self):
        returns = np.asarray(self.returns, dtype=float)
        if not (len(self.entities) == len(self.dates) == returns.size):
            raise ValueError("entities, dates, and returns must have equal length")
        if returns.size == 0:
            raise ValueError("panel is empty")
        pairs = set()
        for entity, date in zip(self.entities, self.dates):
            if (entity, date) in pairs:
                raise ValueError(f"duplicate panel row for entity {entity!r} at {date!r}")
            pairs.add((entity, date))
        for date in self.dates:
            if date not in self.factors:
                raise ValueError(f"date {date!r} missing from the factor table")
            for name, series in self.conditioning.items():
                if date not in series:
                    raise ValueError(f"date {date!r} missing from conditioning series {name!r}")
        object.__setattr__(self, "returns", returns)


def standardize(z: Sequence[float]) -> np.ndarray:
    """Demean and scale to unit sample sd over the full series."""
    arr = np.asarray(z, dtype=float)
    if arr.ndim != 1 or arr.size < 2:
        raise ValueError("series must be 1-D with at least two values")
    sd = arr.std(ddof=1)
    if sd == 0.0:
        raise ValueError("cannot standardize a constant series")
    return (arr - arr.mean()) / sd


def _standardized_table(series: Mapping[Hashable, float]) -> Dict[Hashable, float]:
    """Full-sample standardization of a date-keyed series.

    A constant series carries no conditioning information; it demeans to
    zero so its interaction columns vanish and the design collapses to the
    nested unconditional model.
    """
    keys = list(series.keys())
    values = np.asarray([series[k] for k in keys], dtype=float)
    sd = values.std(ddof=1) if values.size > 1 else 0.0
    scaled = (values - values.mean()) / sd if sd > 0.0 else values - values.mean()
    return dict(zip(keys, scaled))


def _lagged_lookup(series: Dict[Hashable, float], prelagged: bool):
    """Return a function date -> Z value dated strictly before that date.

    With prelagged=True the caller has already re-dated the series and the
    value at the row's own date is used as-is.
    """
    if prelagged:
        return series.get
    ordered = sorted(series.keys())

    def lookup(date):
        idx = bisect_left(ordered, date) - 1
        return series[ordered[idx]] if idx >= 0 else None

    return lookup


@dataclass(frozen=True)
class Design:
    """Design matrix, response, and column names for one model variant."""

    matrix: np.ndarray = field(repr=False)
    response: np.ndarray = field(repr=False)
    columns: Tuple[str, ...]

    def __post_init__(self):
        matrix = np.asarray(self.matrix, dtype=float)
        response = np.asarray(self.response, dtype=float)
        if matrix.ndim != 2 or matrix.shape != (response.size, len(self.columns)):
            raise ValueError("matrix, response, and columns are inconsistent")
        object.__setattr__(self, "matrix", matrix)
        object.__setattr__(self, "response", response)


# column builders get (mkt, smb, hml, z_rv_lag, z_apen_lag) per row
_MODEL_COLUMNS = {
    CAPM: (("mkt", lambda mk, sm, hm, zr, za: mk),),
    COND_VOL: (("mkt", lambda mk, sm, hm, zr, za: mk),
               ("mkt*z_rv", lambda mk, sm, hm, zr, za: mk * zr)),
    COND_APEN: (("mkt", lambda mk, sm, hm, zr, za: mk),
                ("mkt*z_apen", lambda mk, sm, hm, zr, za: mk * za)),
    COND_COMBINED: (("mkt", lambda mk, sm, hm, zr, za: mk),
                    ("mkt*z_apen*z_rv", lambda mk, sm, hm, zr, za: mk * za * zr)),
    COND_BOTH: (("mkt", lambda mk, sm, hm, zr, za: mk),
                ("mkt*z_rv", lambda mk, sm, hm, zr, za: mk * zr),
                ("mkt*z_apen", lambda mk, sm, hm, zr, za: mk * za)),
    FF3: (("mkt", lambda mk, sm, hm, zr, za: mk),
          ("smb", lambda mk, sm, hm, zr, za: sm),
          ("hml", lambda mk, sm, hm, zr, za: hm)),
    FF3_COND_MKT: (("mkt", lambda mk, sm, hm, zr, za: mk),
                   ("smb", lambda mk, sm, hm, zr, za: sm),
                   ("hml", lambda mk, sm, hm, zr, za: hm),
                   ("mkt*z_apen", lambda mk, sm, hm, zr, za: mk * za)),
    FF3_COND_ALL: (("mkt", lambda mk, sm, hm, zr, za: mk),
                   ("smb", lambda mk, sm, hm, zr, za: sm),
                   ("hml", lambda mk, sm, hm, zr, za: hm),
                   ("mkt*z_apen", lambda mk, sm, hm, zr, za: mk * za),
                   ("smb*z_apen", lambda mk, sm, hm, zr, za: sm * za),
                   ("hml*z_apen", lambda mk, sm, hm, zr, za: hm * za)),
}

_NEEDS_RV = {COND_VOL, COND_COMBINED, COND_BOTH}
_NEEDS_APEN = {COND_APEN, COND_COMBINED, COND_BOTH, FF3_COND_MKT, FF3_COND_ALL}


def build_design(panel: Panel, model: str, prelagged: bool = False) -> Design:
    """Design matrix and response for one model variant.

    Conditioning series are standardized over their full table, then lagged
    one period by date key (predecessor lookup); rows with no earlier value
    are dropped. Interaction columns that come out identically zero are
    dropped too, collapsing the design to its nested model.
    """
    if model not in _MODEL_COLUMNS:
        raise ValueError(f"unknown model {model!r}; expected one of {MODELS}")
    needed = ([RV] if model in _NEEDS_RV else []) + ([APEN] if model in _NEEDS_APEN else [])
    lookups = {}
    for name in needed:
        if name not in panel.conditioning:
            raise ValueError(f"conditioning series {name!r} not provided")
        lookups[name] = _lagged_lookup(_standardized_table(panel.conditioning[name]), prelagged)

    rows = []
    response = []
    for date, ret in zip(panel.dates, panel.returns):
        mkt, smb, hml = panel.factors[date]
        z_rv = lookups[RV](date) if RV in lookups else 0.0
        z_apen = lookups[APEN](date) if APEN in lookups else 0.0
        if z_rv is None or z_apen is None:
            continue
        rows.append([fn(mkt, smb, hml, z_rv, z_apen) for _, fn in _MODEL_COLUMNS[model]])
        response.append(ret)
    if not rows:
        raise ValueError("no rows remain after lag alignment")

    matrix = np.column_stack([np.ones(len(rows)), np.asarray(rows, dtype=float)])
    columns = ("const",) + tuple(name for name, _ in _MODEL_COLUMNS[model])
    keep = [j for j in range(matrix.shape[1])
            if j == 0 or np.any(matrix[:, j] != 0.0)]
    return Design(matrix=matrix[:, keep], response=np.asarray(response),
                  columns=tuple(columns[j] for j in keep))


@dataclass(frozen=True)
class FitResult:
    """Pooled-OLS estimates with classical standard errors."""

    columns: Tuple[str, ...]
    coefficients: np.ndarray = field(repr=False)
    stderrs: np.ndarray = field(repr=False)
    t_stats: np.ndarray = field(repr=False)
    p_values: np.ndarray = field(repr=False)
    r2: float
    adj_r2: float
    f_stat: float
    f_dof: Tuple[int, int]
    f_pvalue: float
    n_obs: int

    def __post_init__(self):
        p = len(self.columns)
        for name in ("coefficients", "stderrs", "t_stats", "p_values"):
            arr = np.asarray(getattr(self, name), dtype=float)
            if arr.shape != (p,):
                raise ValueError("per-coefficient fields must match the column count")
            object.__setattr__(self, name, arr)
        if self.f_dof != (p - 1, self.n_obs - p):
            raise ValueError("F degrees of freedom inconsistent with the fit")

    def coefficient(self, name: str) -> float:
        return float(self.coefficients[self.columns.index(name)])

    def stderr(self, name: str) -> float:
        return float(self.stderrs[self.columns.index(name)])


def pooled_ols(design: np.ndarray, response: Sequence[float],
               columns: Optional[Sequence[str]] = None) -> FitResult:
    """Least squares via QR with classical (homoskedastic) inference.

    The F statistic tests all non-intercept coefficients jointly against
    zero; a perfect fit reports it as infinity.
    """
    x = np.asarray(design, dtype=float)
    y = np.asarray(response, dtype=float)
    if x.ndim != 2 or y.ndim != 1 or x.shape[0] != y.size:
        raise ValueError("design and response shapes are inconsistent")
    n, p = x.shape
    if columns is None:
        columns = tuple(f"x{j}" for j in range(p))
    if len(columns) != p:
        raise ValueError("column names must match the design width")
    if n <= p:
        raise ValueError("need more rows than coefficients")

    q, r = np.linalg.qr(x)
    diag = np.abs(np.diag(r))
    if np.min(diag) <= np.finfo(float).eps * max(n, p) * np.max(diag):
        raise ValueError("design matrix is rank deficient")
    beta = solve_triangular(r, q.T @ y)

    resid = y - x @ beta
    rss = float(resid @ resid)
    centered = y - y.mean()
    tss = float(centered @ centered)
    dof_resid = n - p
    sigma2 = rss / dof_resid
    r_inv = solve_triangular(r, np.eye(p))
    stderrs = np.sqrt(sigma2 * np.sum(r_inv ** 2, axis=1))

    with np.errstate(divide="ignore", invalid="ignore"):
        t_stats = np.where(stderrs > 0.0, beta / stderrs,
                           np.sign(beta) * np.inf)
        t_stats = np.where((stderrs == 0.0) & (beta == 0.0), 0.0, t_stats)
    p_values = 2.0 * t_dist.sf(np.abs(t_stats), dof_resid)

    # tss == 0 means a constant response; a zero-residual fit explains it fully
    r2 = 1.0 - rss / tss if tss > 0.0 else float(rss == 0.0)
    adj_r2 = 1.0 - (1.0 - r2) * (n - 1) / dof_resid
    if p > 1:
        with np.errstate(divide="ignore", invalid="ignore"):
            f_stat = ((tss - rss) / (p - 1)) / (rss / dof_resid) if rss > 0.0 else np.inf
        f_pvalue = float(f_dist.sf(f_stat, p - 1, dof_resid)) if np.isfinite(f_stat) else 0.0
    else:
        f_stat, f_pvalue = float("nan"), float("nan")

    return FitResult(
        columns=tuple(columns),
        coefficients=beta,
        stderrs=stderrs,
        t_stats=t_stats,
        p_values=p_values,
        r2=float(r2),
        adj_r2=float(adj_r2),
        f_stat=float(f_stat),
        f_dof=(p - 1, dof_resid),
        f_pvalue=float(f_pvalue),
        n_obs=n,
    )


def fit_model(panel: Panel, model: str, prelagged: bool = False) -> FitResult:
    """Build the named design and fit it in one step."""
    design = build_design(panel, model, prelagged=prelagged)
    return pooled_ols(design.matrix, design.response, design.columns)

"""Monte Carlo experiments and timing runs.

An experiment is a fixed ``(p, n, eps, gamma)`` setting swept over a list
of outlier sizes ``K``.  Every ``(K, rep)`` pair draws one contaminated
sample, which is handed unchanged to each KSD variant; the records carry
the divergences of the resulting estimate from the true ``(0, I)``.

Records are written as CSV with the columns in :data:`CSV_COLUMNS`.
Everything except ``seconds`` is a deterministic function of the
configuration, so two runs with the same seed produce the same file up to
that column.
"""

from __future__ import annotations

import csv
import math
import time
from collections import defaultdict
from dataclasses import dataclass, fields
from typing import Iterable, Iterator, Sequence

import numpy as np
from scipy import stats

from .datagen import SPREADS, ContaminationConfig, derive_seed, generate_sample
from .exceptions import ConfigurationError, KsdError
from .ksd import KsdConfig, ksd_estimate
from .metrics import divergences
from .rocke import RockeConfig, rocke_sestimator

__all__ = [
    "BENCH_SIZES",
    "CHAINS",
    "CSV_COLUMNS",
    "ExperimentConfig",
    "ExperimentRecord",
    "bench_timing",
    "estimate",
    "ordered_d_sigma",
    "read_records",
    "run_chain",
    "run_experiment",
    "summarize",
    "write_records",
    "write_rows",
]

CHAINS = ("ksd", "ksd+rocke")
ROCKE_TUNINGS = ("efficient", "standard")
BENCH_SIZES = ((20, 100), (20, 400), (50, 250), (50, 1000), (100, 500), (100, 2000))

# one trailing column beyond the data columns flags failed replications
CSV_COLUMNS = ("p", "n", "eps", "gamma", "K", "variant", "rep", "d_mu", "d_sigma",
               "retained", "converged", "seconds", "failed")


def _fmt(v):
    if isinstance(v, (bool, np.bool_)):
        return str(int(v))
    if isinstance(v, (int, np.integer)):
        return str(int(v))
    if isinstance(v, (float, np.floating)):
        return "%.10g" % v
    return str(v)


@dataclass(frozen=True)
class ExperimentConfig:
    """One Monte Carlo sweep.

    Attributes
    ----------
    p, n, eps, gamma
        Sample design shared by all cells.
    K : sequence of float
        Outlier sizes; each value is one cell.
    variants : sequence of {"new", "old"}
    reps : int
        Replications per cell.
    seed : int
        Base seed; sample seeds are derived from it and the cell values.
    chain : {"ksd", "ksd+rocke"}
    spread : {"first", "all"}
        Contamination geometry, see :class:`ContaminationConfig`.
    rocke : {"efficient", "standard"}
        :meth:`RockeConfig.efficient` or the plain defaults.
    cutoff, max_refine_iters
        Passed to :class:`KsdConfig`.
    """

    p: int
    n: int
    eps: float = 0.2
    gamma: float = 0.0
    K: Sequence[float] = (13.0,)
    variants: Sequence[str] = ("new", "old")
    reps: int = 200
    seed: int = 0
    chain: str = "ksd+rocke"
    spread: str = "first"
    rocke: str = "efficient"
    cutoff: float = 4.0
    max_refine_iters: int = 20

    def __post_init__(self):
        object.__setattr__(self, "K", tuple(float(k) for k in self.K))
        object.__setattr__(self, "variants", tuple(self.variants))
        if self.reps < 1:
            raise ConfigurationError("reps must be >= 1")
        if not self.K:
            raise ConfigurationError("K list is empty")
        if not self.variants or any(v not in ("old", "new") for v in self.variants):
            raise ConfigurationError(f"variants must be drawn from old/new, got {self.variants}")
        if self.n <= 2 * self.p:
            raise ConfigurationError(f"need n > 2p, got p={self.p}, n={self.n}")
        if self.chain not in CHAINS:
            raise ConfigurationError(f"chain must be one of {CHAINS}")
        if self.rocke not in ROCKE_TUNINGS:
            raise ConfigurationError(f"rocke must be one of {ROCKE_TUNINGS}")
        if self.spread not in SPREADS:
            raise ConfigurationError(f"spread must be one of {SPREADS}")
        # catches bad eps/gamma/K early
        for k in self.K:
            self.sample_config(k, 0)

    def sample_seed(self, K: float, rep: int) -> int:
        # keyed on cell values, not positions, so reordering K changes nothing
        keys = [self.p, self.n, round(self.eps * 1e9), round(self.gamma * 1e9), round(K * 1e9), rep]
        return derive_seed(self.seed, *keys)

    def sample_config(self, K: float, rep: int) -> ContaminationConfig:
        return ContaminationConfig(self.n, self.p, self.eps, K, self.gamma,
                                   self.sample_seed(K, rep), self.spread)

    def ksd_config(self, variant: str, sample_seed: int) -> KsdConfig:
        return KsdConfig(variant, cutoff=self.cutoff, max_refine_iters=self.max_refine_iters,
                         seed=derive_seed(sample_seed, 1))

    def rocke_config(self) -> RockeConfig:
        if self.rocke == "efficient":
            return RockeConfig.efficient(self.n, self.p)
        return RockeConfig()

    @property
    def n_records(self) -> int:
        return len(self.K) * self.reps * len(self.variants)


@dataclass
class ExperimentRecord:
    p: int
    n: int
    eps: float
    gamma: float
    K: float
    variant: str
    rep: int
    d_mu: float = math.nan
    d_sigma: float = math.nan
    retained: int = 0
    converged: bool = False
    seconds: float = math.nan
    failed: bool = False

    def row(self):
        return [_fmt(getattr(self, c)) for c in CSV_COLUMNS]

    @property
    def cell(self):
        return (self.p, self.n, self.eps, self.gamma, self.K)


def run_chain(x, ksd_cfg: KsdConfig, chain: str = "ksd+rocke", rocke_cfg: RockeConfig | None = None):
    """KSD, optionally followed by Rocke's S-estimator started from it."""
    if chain not in CHAINS:
        raise ConfigurationError(f"chain must be one of {CHAINS}")
    est = ksd_estimate(x, ksd_cfg)
    if chain == "ksd":
        return est
    out = rocke_sestimator(x, est, rocke_cfg)
    out.diagnostics["ksd"] = {"retained": int(est.retained.sum()),
                              "iterations": est.iterations, "converged": est.converged}
    return out


estimate = run_chain


def run_experiment(cfg: ExperimentConfig) -> Iterator[ExperimentRecord]:
    """Yield one record per ``(K, rep, variant)``, in that order.

    Estimation failures produce a record with ``failed=True`` and NaN
    divergences instead of an exception.
    """
    rocke_cfg = cfg.rocke_config()
    for K in cfg.K:
        for rep in range(cfg.reps):
            scfg = cfg.sample_config(K, rep)
            x = generate_sample(scfg)
            for variant in cfg.variants:
                rec = ExperimentRecord(cfg.p, cfg.n, cfg.eps, cfg.gamma, K, variant, rep)
                t0 = time.perf_counter()
                try:
                    est = run_chain(x, cfg.ksd_config(variant, scfg.seed), cfg.chain, rocke_cfg)
                    div = divergences(est.mu, est.sigma)
                except (KsdError, np.linalg.LinAlgError):
                    rec.failed = True
                else:
                    rec.d_mu, rec.d_sigma = div.d_mu, div.d_sigma
                    rec.retained = int(np.count_nonzero(est.retained))
                    rec.converged = bool(est.converged)
                rec.seconds = time.perf_counter() - t0
                yield rec


def write_records(records: Iterable[ExperimentRecord], path) -> int:
    """Stream records to ``path`` as CSV, flushing after every row."""
    count = 0
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(CSV_COLUMNS)
        for rec in records:
            w.writerow(rec.row())
            fh.flush()
            count += 1
    return count


_CASTS = {f.name: f.type for f in fields(ExperimentRecord)}


def _parse(name, text):
    kind = _CASTS[name]
    if kind == "int":
        return int(text)
    if kind == "float":
        return float(text)
    if kind == "bool":
        return text.strip().lower() in ("1", "true")
    return text


def read_records(path) -> list[ExperimentRecord]:
    """Read a record CSV written by :func:`write_records`."""
    with open(path, newline="") as fh:
        reader = csv.DictReader(fh)
        missing = set(CSV_COLUMNS[:-1]) - set(reader.fieldnames or ())
        if missing:
            raise ConfigurationError(f"record file lacks columns {sorted(missing)}")
        out = []
        for row in reader:
            kw = {k: _parse(k, v) for k, v in row.items() if k in _CASTS}
            out.append(ExperimentRecord(**kw))
    return out


def _group(records):
    groups = defaultdict(list)
    for r in records:
        groups[r.cell + (r.variant,)].append(r)
    return groups


def summarize(records: Iterable[ExperimentRecord], thresholds=(8.0,)) -> list[dict]:
    """Per ``(cell, variant)`` statistics of ``d_sigma`` and ``d_mu``.

    Mean, median and 10%-trimmed mean of both divergences, plus the
    fraction of ``d_sigma`` values strictly below each threshold.  Failed
    replications are counted in ``failures`` and left out of the rest.
    """
    records = list(records)
    if not records:
        raise ConfigurationError("no records to summarize")
    rows = []
    for key, group in sorted(_group(records).items()):
        ok = [r for r in group if not r.failed]
        row = dict(zip(("p", "n", "eps", "gamma", "K", "variant"), key))
        row["count"] = len(ok)
        row["failures"] = len(group) - len(ok)
        for col in ("d_sigma", "d_mu"):
            v = np.array([getattr(r, col) for r in ok])
            row[f"mean_{col}"] = float(v.mean()) if v.size else math.nan
            row[f"median_{col}"] = float(np.median(v)) if v.size else math.nan
            row[f"trim10_{col}"] = float(stats.trim_mean(v, 0.1)) if v.size else math.nan
        ds = np.array([r.d_sigma for r in ok])
        for t in thresholds:
            row[f"below_{t:g}"] = float(np.mean(ds < t)) if ds.size else math.nan
        rows.append(row)
    return rows


def ordered_d_sigma(records: Iterable[ExperimentRecord]) -> dict:
    """Sorted ``d_sigma`` values per ``(cell, variant)``, for ordered-value plots."""
    return {key: np.sort([r.d_sigma for r in group if not r.failed])
            for key, group in _group(records).items()}


def write_rows(rows: Sequence[dict], path) -> None:
    """Write a list of flat dicts (summary or timing rows) as CSV."""
    if not rows:
        raise ConfigurationError("nothing to write")
    with open(path, "w", newline="") as fh:
        w = csv.writer(fh, lineterminator="\n")
        w.writerow(list(rows[0]))
        for row in rows:
            w.writerow([_fmt(v) for v in row.values()])


def bench_timing(sizes=BENCH_SIZES, reps: int = 5, seed: int = 0, eps: float = 0.0,
                 K: float = 0.0, rocke: str = "efficient") -> list[dict]:
    """Mean wall time of the KSD + Rocke chain for each variant.

    For every ``(p, n)`` one warm-up chain per variant is run and
    discarded, then ``reps`` samples are timed with both variants.  The
    two variants alternate so that slow drifts of the machine affect both.

    Returns
    -------
    list of dict
        Rows with keys ``p, n, new, old, ratio`` (seconds, ratio new/old).
    """
    if reps < 1:
        raise ConfigurationError("reps must be >= 1")
    rows = []
    for p, n in sizes:
        if n <= 2 * p:
            raise ConfigurationError(f"need n > 2p, got p={p}, n={n}")
        rcfg = RockeConfig.efficient(n, p) if rocke == "efficient" else RockeConfig()
        total = {"new": 0.0, "old": 0.0}
        for rep in range(-1, reps):
            s = derive_seed(seed, p, n, rep & 0xFFFFFFFF)
            x = generate_sample(ContaminationConfig(n, p, eps, K, 0.0, s))
            for variant in ("new", "old"):
                cfg = KsdConfig(variant, seed=derive_seed(s, 1))
                t0 = time.perf_counter()
                try:
                    run_chain(x, cfg, "ksd+rocke", rcfg)
                except KsdError:
                    pass
                if rep >= 0:
                    total[variant] += time.perf_counter() - t0
        new, old = total["new"] / reps, total["old"] / reps
        rows.append({"p": p, "n": n, "new": new, "old": old, "ratio": new / old})
    return rows

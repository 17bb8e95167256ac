"""
Experiment orchestration: config parsing, Monte-Carlo sweeps, CSV output and
the plain-text invariant summary.
"""
import csv
import io
import json
import logging
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field, replace

import numpy as np

from .analysis import (
    CSV_FIELDS, MseReport, brute_force_p2, mean_and_stderr, normalized_trial_error, p2_objective_mc,
    raw_trial_error, siuce_normalized_analytic, theoretical_siuce_mse,
)
from .channel_model import SEUCE, SIUCE, LinkGeometry, SystemConfig, draw_realization, q1_sampler
from .estimation import estimate_seuce, estimate_siuce
from .exceptions import ChannelEstimationError, ConfigError, InvalidArgumentError, OutputError
from .ofdm import partial_dft, synthesize_block, trial_streams
from .serializers import (
    BENCHMARK, MSE_VS_RICIAN, MSE_VS_SNR, MSE_VS_USERS, PROPOSED,
    ExperimentSpecSerializer, expand_zetas,
)
from .training import (
    ADJACENT, EQUISPACED, PERMUTED, RANDOM, TWO_STEP, adjacent_pilots, build_pattern, check_feasibility,
    dft_pattern, equispaced_pilots, k1_max, k2_max, permuted_allocation, recommend_scheme,
    seuce_two_step_allocation,
)

logger = logging.getLogger(__name__)

# spawn key of the stream that draws run-level random designs
DESIGN_STREAM = (2**31 - 1,)


@dataclass(frozen=True)
class ExperimentSpec:
    experiment: str
    scheme: str
    designs: tuple
    config: SystemConfig
    geometry: LinkGeometry
    snr_db: tuple
    kappa_db: tuple
    sigma2_dbm: float
    users: tuple = ()
    L_p: int = 4
    ref_tones: tuple = ()
    zeta: tuple = ()
    trials: int = 10000
    seed: int = 2020
    out: str = ""
    threads: int = 1
    reference_mode: str = "estimated"
    metric: str = "normalized"
    n_samples: int = 1000
    n_draws: int = 1000
    cap: int = 10**6
    source: dict = field(default_factory=dict, compare=False)

    @property
    def sigma2(self):
        return dbm_to_watts(self.sigma2_dbm)

    def with_overrides(self, **overrides):
        clean = {key: value for key, value in overrides.items() if value is not None}
        return replace(self, **clean)

    def zetas(self, K=None):
        return expand_zetas(list(self.zeta), K or self.config.K)


def dbm_to_watts(value):
    return 10 ** ((value - 30) / 10)


def db_to_linear(value):
    return 10 ** (value / 10)


def read_config_text(text):
    """Flat ``key = value`` lines; values are JSON literals or bare strings."""
    document = {}
    for number, raw in enumerate(text.splitlines(), start=1):
        line = raw.split("#", 1)[0].strip()
        if not line or (line.startswith("[") and line.endswith("]")):
            continue
        key, sep, value = line.partition("=")
        if not sep or not key.strip():
            raise ConfigError({"line": [f"line {number}: expected 'key = value', got {raw.strip()!r}"]})
        value = value.strip()
        try:
            document[key.strip()] = json.loads(value)
        except json.JSONDecodeError:
            document[key.strip()] = value
    return document


def build_spec(data):
    serializer = ExperimentSpecSerializer(data=data)
    if not serializer.is_valid():
        raise ConfigError(serializer.errors)
    values = serializer.validated_data
    config = SystemConfig(
        N=values["N"], M=values["M"], M0=values["M0"], Ld=values["Ld"], L1=values["L1"], L2=values["L2"],
        Lcp=values["Lcp"], K=values["K"], sigma2=dbm_to_watts(values["sigma2_dbm"]),
        kappa=db_to_linear(values["kappa_db"][0]), decay=values["decay"], scheme=values["scheme"],
    )
    geometry = LinkGeometry(
        D1=values["D1"], D2=values["D2"], user_angle_deg=values["user_angle_deg"],
        alpha1=values["alpha1"], alpha2=values["alpha2"], alpha3=values["alpha3"],
        gamma0=db_to_linear(values["gamma0_db"]),
    )
    return ExperimentSpec(
        experiment=values["experiment"],
        scheme=values["scheme"],
        designs=tuple(values["designs"]),
        config=config,
        geometry=geometry,
        snr_db=tuple(values["snr_db"]),
        kappa_db=tuple(values["kappa_db"]),
        sigma2_dbm=values["sigma2_dbm"],
        users=tuple(values.get("users", ())),
        L_p=values["L_p"],
        ref_tones=tuple(values["ref_tones"]),
        zeta=tuple(values["zeta"]),
        trials=values["trials"],
        seed=values["seed"],
        out=values.get("out", ""),
        threads=values["threads"],
        reference_mode=values["reference_mode"],
        metric=values["metric"],
        n_samples=values["n_samples"],
        n_draws=values["n_draws"],
        cap=values["cap"],
        source=dict(data),
    )


def parse_config(text):
    return build_spec(read_config_text(text))


def build_allocation(kind, config, spec, rng=None):
    N, M, L, K = config.N, config.M, config.L, config.K
    if kind == EQUISPACED:
        return equispaced_pilots(N, K, spec.L_p)
    if kind == ADJACENT:
        return adjacent_pilots(N, K, spec.L_p)
    zetas = spec.zetas(K)
    if kind == TWO_STEP:
        return seuce_two_step_allocation(N, M, L, spec.ref_tones, zetas)
    if kind == PERMUTED:
        if rng is None:
            raise InvalidArgumentError("a permuted allocation needs a generator")
        return permuted_allocation(N, M, L, spec.ref_tones, zetas, rng)
    raise InvalidArgumentError(f"unknown allocation {kind!r}")


def design_rng(spec):
    return np.random.default_rng(np.random.SeedSequence(entropy=spec.seed, spawn_key=DESIGN_STREAM))


@dataclass(frozen=True)
class GridPoint:
    index: int
    snr_db: float
    kappa_db: float
    K: int


def grid_points(spec):
    if spec.experiment == MSE_VS_SNR:
        return [GridPoint(i, snr, spec.kappa_db[0], spec.config.K) for i, snr in enumerate(spec.snr_db)]
    if spec.experiment == MSE_VS_RICIAN:
        points = [(snr, kappa) for snr in spec.snr_db for kappa in spec.kappa_db]
        return [GridPoint(i, snr, kappa, spec.config.K) for i, (snr, kappa) in enumerate(points)]
    if spec.experiment == MSE_VS_USERS:
        points = [(K, snr) for K in spec.users for snr in spec.snr_db]
        return [GridPoint(i, snr, spec.kappa_db[0], K) for i, (K, snr) in enumerate(points)]
    raise InvalidArgumentError(f"{spec.experiment} is not a Monte-Carlo sweep")


def users_design(design, scheme):
    """Allocation kind behind a proposed/benchmark label for the chosen scheme."""
    if design == PROPOSED:
        return EQUISPACED if scheme == SIUCE else TWO_STEP
    if design == BENCHMARK:
        return ADJACENT if scheme == SIUCE else PERMUTED
    return design


class TrialRunner:
    """Runs the trials of one (grid point, design) pair."""

    def __init__(self, spec, point, allocation_kind, pattern_kind, design_cache):
        N, M = spec.config.N, spec.config.M
        scheme = spec.scheme
        if spec.experiment == MSE_VS_USERS:
            scheme = recommend_scheme(point.K, N, M, spec.config.L)
            allocation_kind = users_design(allocation_kind, scheme)
        base = replace(spec.config, K=point.K, kappa=db_to_linear(point.kappa_db), scheme=scheme)
        P = spec.geometry.power_for_snr(base, point.snr_db)
        self.config = replace(base, P=P)
        self.spec = spec
        self.point = point
        self.scheme = scheme
        self.allocation_kind = allocation_kind
        self.pattern_kind = pattern_kind
        self.gains = spec.geometry.gains(self.config)
        key = (allocation_kind, point.K)
        if key not in design_cache:
            design_cache[key] = build_allocation(allocation_kind, self.config, spec, design_rng(spec))
        self.allocation = design_cache[key]
        self.pattern = None if pattern_kind == RANDOM else build_pattern(pattern_kind, M)

        report = check_feasibility(self.allocation, scheme, N, M, self.config.L)
        if not report.passed:
            raise InvalidArgumentError("; ".join(report.lines()))

    def __call__(self, trial):
        spec, config = self.spec, self.config
        channel, design, slots = trial_streams(spec.seed, self.point.index, trial, config.tau)
        realization = draw_realization(config, channel, self.gains)
        pattern = self.pattern or build_pattern(self.pattern_kind, config.M, design)
        block = synthesize_block(config, realization, self.allocation, pattern, slots, seed=trial)
        if self.scheme == SIUCE:
            estimate = estimate_siuce(block, self.allocation, pattern, config)
        else:
            truth = realization.Q[0] if spec.reference_mode == "oracle" else None
            estimate = estimate_seuce(block, self.allocation, pattern, config, reference_truth=truth)

        if spec.metric == "raw":
            empirical = raw_trial_error(estimate, realization)
        else:
            empirical = normalized_trial_error(estimate, realization)
        analytic = None
        if self.scheme == SIUCE and empirical is not None:
            if spec.metric == "raw":
                analytic = theoretical_siuce_mse(pattern, self.allocation, config.P, config.sigma2, config.L)
            else:
                analytic = siuce_normalized_analytic(
                    pattern, self.allocation, config.P, config.sigma2, config.L, realization
                )
        return empirical, analytic


@dataclass(frozen=True)
class DesignCheck:
    label: str
    scheme: str
    config: SystemConfig
    allocation: object
    pattern_kind: str
    report: object


def check_designs(spec):
    """Build every allocation a spec would run and check it, without simulating anything."""
    N, M = spec.config.N, spec.config.M
    user_counts = spec.users if spec.experiment == MSE_VS_USERS else (spec.config.K,)
    checks = []
    for K in user_counts:
        for design, pattern_kind in spec.designs:
            scheme, allocation_kind = spec.scheme, design
            if spec.experiment == MSE_VS_USERS:
                scheme = recommend_scheme(K, N, M, spec.config.L)
                allocation_kind = users_design(design, scheme)
            config = replace(spec.config, K=K, scheme=scheme)
            allocation = build_allocation(allocation_kind, config, spec, design_rng(spec))
            report = check_feasibility(allocation, scheme, N, M, config.L)
            label = f"K={K} {scheme} {allocation_kind}/{pattern_kind}"
            checks.append(DesignCheck(label, scheme, config, allocation, pattern_kind, report))
    return checks


def _map(function, items, threads):
    if threads and threads > 1:
        with ThreadPoolExecutor(max_workers=threads) as pool:
            return list(pool.map(function, items))
    return [function(item) for item in items]


def _report(spec, point, scheme, allocation_kind, pattern_kind, trials, empirical, analytic, stderr,
            diagnostic=""):
    kappa = point.kappa_db if (spec.experiment == MSE_VS_RICIAN or scheme == SEUCE) else None
    return MseReport(
        experiment=spec.experiment,
        scheme=scheme,
        allocation=allocation_kind,
        pattern=pattern_kind,
        snr_db=float(point.snr_db),
        kappa_db=None if kappa is None else float(kappa),
        K=point.K,
        trials=trials,
        seed=spec.seed,
        mse_empirical=empirical,
        mse_analytic=analytic,
        stderr=stderr,
        diagnostic=diagnostic,
    )


def run_grid_point(spec, point, allocation_kind, pattern_kind, design_cache=None, threads=None):
    design_cache = {} if design_cache is None else design_cache
    scheme = spec.scheme
    try:
        runner = TrialRunner(spec, point, allocation_kind, pattern_kind, design_cache)
        scheme, allocation_kind = runner.scheme, runner.allocation_kind
        outcomes = _map(runner, range(spec.trials), threads or spec.threads)
        values = [empirical for empirical, _ in outcomes if empirical is not None]
        empirical, stderr = mean_and_stderr(values)
        analytic_values = [analytic for _, analytic in outcomes if analytic is not None]
        analytic = float(np.mean(analytic_values)) if analytic_values else None
    except ChannelEstimationError as exc:
        logger.warning("grid point %d (%s/%s) failed: %s", point.index, allocation_kind, pattern_kind, exc)
        return _report(spec, point, scheme, allocation_kind, pattern_kind, 0, None, None, None, str(exc))
    logger.debug(
        "grid point %d %s/%s snr=%s K=%d: mse=%.6g +- %.2g",
        point.index, allocation_kind, pattern_kind, point.snr_db, point.K, empirical, stderr,
    )
    return _report(spec, point, scheme, allocation_kind, pattern_kind, len(values), empirical, analytic, stderr)


def run_experiment(spec, threads=None):
    """Monte-Carlo sweep; one report per (grid point, design) in grid order."""
    points = grid_points(spec)
    started = time.monotonic()
    logger.info(
        "running %s: %d grid points x %d designs, %d trials each",
        spec.experiment, len(points), len(spec.designs), spec.trials,
    )
    design_cache = {}
    reports = [
        run_grid_point(spec, point, allocation_kind, pattern_kind, design_cache, threads)
        for point in points
        for allocation_kind, pattern_kind in spec.designs
    ]
    logger.info("finished %s in %.1fs", spec.experiment, time.monotonic() - started)
    return reports


def run_p2_search(spec):
    """Exhaustive allocation search; returns the ranking and the two-step allocation's objective."""
    config = replace(spec.config, scheme=SEUCE)
    pattern = dft_pattern(config.M)
    zetas = spec.zetas(config.K)
    result = brute_force_p2(
        config.N, config.M, config.L, spec.ref_tones, zetas, pattern, spec.n_samples,
        q1_sampler(config), seed=spec.seed, cap=spec.cap,
    )
    heuristic = seuce_two_step_allocation(config.N, config.M, config.L, spec.ref_tones, zetas)
    heuristic_objective = p2_objective_mc(
        heuristic, pattern, q1_sampler(config), spec.n_samples, N=config.N, L=config.L, seed=spec.seed
    )
    return result, heuristic, heuristic_objective


def format_csv(reports):
    buffer = io.StringIO()
    writer = csv.writer(buffer, lineterminator="\n")
    writer.writerow(CSV_FIELDS)
    for report in reports:
        writer.writerow([_cell(value) for value in report.as_row().values()])
    return buffer.getvalue()


def _cell(value):
    if value is None:
        return ""
    if isinstance(value, float):
        return repr(value)
    return str(value)


def write_csv(reports, path):
    text = format_csv(reports)
    try:
        with open(path, "w", newline="") as handle:
            handle.write(text)
    except OSError as exc:
        raise OutputError(path, exc.strerror or exc) from exc
    return path


_INT_FIELDS = {"K", "trials", "seed"}
_FLOAT_FIELDS = {"snr_db", "kappa_db", "mse_empirical", "mse_analytic", "stderr"}


def parse_csv(text):
    reports = []
    for row in csv.DictReader(io.StringIO(text)):
        values = {}
        for name in CSV_FIELDS:
            cell = row[name]
            if name in _INT_FIELDS:
                values[name] = int(cell)
            elif name in _FLOAT_FIELDS:
                values[name] = float(cell) if cell != "" else None
            else:
                values[name] = cell
        reports.append(MseReport(**values))
    return reports


def read_csv(path):
    try:
        with open(path, newline="") as handle:
            return parse_csv(handle.read())
    except OSError as exc:
        raise OutputError(path, exc.strerror or exc) from exc


@dataclass(frozen=True)
class InvariantCheck:
    name: str
    passed: bool
    detail: str = ""


def _noiseless_error(config, allocation, pattern, rng, scheme):
    realization = draw_realization(config, rng)
    block = synthesize_block(config, realization, allocation, pattern, rng)
    if scheme == SIUCE:
        estimate = estimate_siuce(block, allocation, pattern, config)
    else:
        estimate = estimate_seuce(block, allocation, pattern, config)
    worst = 0.0
    for k in range(realization.K):
        truth = realization.q_tilde(k)
        worst = max(worst, np.linalg.norm(estimate[k].Q_tilde - truth) / np.linalg.norm(truth))
    return worst


def run_invariant_suite(spec, realizations=None):
    """Closed-form identities and noiseless recovery of the configured scenario."""
    config = spec.config
    N, M = config.N, config.M
    checks = []

    pattern = dft_pattern(M)
    gram = pattern.Xi @ pattern.Xi.conj().T
    deviation = float(np.max(np.abs(gram - (M + 1) * np.eye(M + 1))))
    checks.append(InvariantCheck("dft-pattern-orthogonal", deviation < 1e-10, f"max deviation {deviation:.2e}"))

    siuce = replace(config, scheme=SIUCE, sigma2=0.0, K=min(config.K, N // spec.L_p))
    comb = equispaced_pilots(N, siuce.K, spec.L_p)
    worst = 0.0
    for k in range(comb.K):
        F = partial_dft(N, siuce.L, comb.tones(k, 0))
        worst = max(worst, float(np.max(np.abs(F.gram() - F.size / N * np.eye(siuce.L)))))
    checks.append(InvariantCheck("equispaced-dft-orthogonal", worst < 1e-10, f"max deviation {worst:.2e}"))

    K1, K2 = k1_max(N, config.L), k2_max(N, M, config.L)
    checks.append(InvariantCheck("capacity", K2 >= K1, f"K1={K1} K2={K2} for N={N} M={M} L={config.L}"))

    rng = np.random.default_rng(spec.seed)
    draws = realizations or min(spec.trials, 100)
    error = max(_noiseless_error(siuce, comb, pattern, rng, SIUCE) for _ in range(draws))
    checks.append(InvariantCheck("siuce-noiseless", error <= 1e-9, f"worst relative error {error:.2e}"))

    seuce = replace(config, scheme=SEUCE, sigma2=0.0, L1=max(config.L1, config.L), L2=1,
                    K=min(config.K, K2) if config.K > 1 else 2)
    designs = {TWO_STEP: build_allocation(TWO_STEP, seuce, spec)}
    designs[PERMUTED] = build_allocation(PERMUTED, seuce, spec, design_rng(spec))
    for kind, allocation in designs.items():
        report = check_feasibility(allocation, SEUCE, N, M, seuce.L)
        checks.append(InvariantCheck(f"{kind}-feasible", report.passed, "; ".join(report.lines())))
    error = max(_noiseless_error(seuce, designs[TWO_STEP], pattern, rng, SEUCE) for _ in range(draws))
    checks.append(InvariantCheck("seuce-noiseless", error <= 1e-9, f"worst relative error {error:.2e}"))
    return checks


def format_summary(checks):
    lines = [f"{'PASS' if check.passed else 'FAIL'} {check.name}: {check.detail}" for check in checks]
    passed = sum(check.passed for check in checks)
    lines.append(f"{passed}/{len(checks)} checks passed")
    return "\n".join(lines) + "\n"


def write_summary(checks, path):
    try:
        with open(path, "w") as handle:
            handle.write(format_summary(checks))
    except OSError as exc:
        raise OutputError(path, exc.strerror or exc) from exc
    return path

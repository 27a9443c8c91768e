"""Built-in experiments: construct the periodic surrogates, run the solver,
record convergence series, emit CSV/JSON.

Four built-in cases, two solution shapes times two operators:
  1a  -d^2/dx^2 + 1 with a Gaussian solution      (well posed)
  2a  -d^2/dx^2     with a Gaussian solution      (spectrum reaches 0)
  1b  -d^2/dx^2 + 1 with a Lorentzian solution    (well posed, fat tails)
  2b  -d^2/dx^2     with a Lorentzian solution    (spectrum reaches 0, fat tails)
Right-hand sides are sampled from closed forms; the mean is projected off
both vectors for the kernel-bearing cases. A consistency gate between the
sampled solution and the sampled datum guards every construction.
"""

import json
import time
from dataclasses import dataclass

import numpy as np

from .diagnostics import ConvergenceRecord, rho
from .krylov import InverseProblem, run_cg, theta_iterate, theta_iterate_spectral
from .linop import DiagonalOperator, FourierOperator
from .measures import DiscreteSpectralMeasure, weight_by_power
from .orthopoly import bound_chain, delta_n, lemma_bound, residual_polynomials

SCHEMA_VERSION = 1
CSV_HEADER = "N, rho0, rho1, rho1_N2, rho2, delta_n, ritz_min, ritz_max, bound_chain_ok"

TEST_IDS = ("1a", "1b", "2a", "2b")
# (n, L): Gaussian tests resolve fully in a narrow box; the Lorentzian pair
# needs L = 200 for its 1/x^2 tails. 2b additionally needs the n = 8192 tail
# resolution (its behavior lives in the high end of the spectrum), while 1b
# is fully resolved at 2048 and only loses contrast beyond that.
TEST_DEFAULTS = {
    "1a": (2048, 40.0),
    "2a": (2048, 40.0),
    "1b": (2048, 200.0),
    "2b": (8192, 200.0),
}


class VersionError(ValueError):
    pass


def _gauss_f(x):
    return np.exp(-x * x)


def _gauss_neg_lap(x):
    return (2.0 - 4.0 * x * x) * np.exp(-x * x)


def _lorentz_f(x):
    return 1.0 / (1.0 + x * x)


def _lorentz_neg_lap(x):
    return (2.0 - 6.0 * x * x) / (1.0 + x * x) ** 3


_CASES = {
    # id: (shift, f, g)  with  g = -f'' + shift * f
    "1a": (1.0, _gauss_f, lambda x: (3.0 - 4.0 * x * x) * np.exp(-x * x)),
    "2a": (0.0, _gauss_f, _gauss_neg_lap),
    "1b": (1.0, _lorentz_f,
           lambda x: _lorentz_neg_lap(x) + _lorentz_f(x)),
    "2b": (0.0, _lorentz_f, _lorentz_neg_lap),
}


def consistency_tolerance(test, n, L):
    """Relative-to-||g|| gate width for the sampled manufactured solution.

    Gaussian tails die at machine level inside any sensible box, so the gate
    is tight. The Lorentzian pair carries two measured error sources: the
    periodization mismatch of 1/x^2 tails, ~1/L^2, and coefficient aliasing
    ~exp(-pi n / L) once the grid stops resolving the spectrum. Constants
    give ~30x headroom at the defaults while any O(1) construction bug still
    fails the gate.
    """
    if test in ("1a", "2a"):
        return 1e-6
    return 3.0 / L ** 2 + 2.0 * np.exp(-np.pi * n / L) + 1e-12


def build_test_case(test, n=None, L=None, consistency_tol=None):
    """Sample a built-in case onto the periodic grid and gate it.

    Kernel-bearing cases get the mean of both vectors subtracted (the datum
    must be attainable, the solution is then the minimal-norm one); the two
    subtracted constants are recorded in problem.notes.
    """
    if test not in _CASES:
        raise ValueError(f"unknown test id {test!r}, expected one of {TEST_IDS}")
    dn, dL = TEST_DEFAULTS[test]
    n = dn if n is None else int(n)
    L = dL if L is None else float(L)
    shift, f_fun, g_fun = _CASES[test]
    op = FourierOperator(n, L, shift=shift)
    x = op.grid()
    f = f_fun(x)
    g = g_fun(x)
    notes = {"test": test, "n": n, "L": L}
    if shift == 0.0:
        g_mean = float(g.mean())
        f_mean = float(f.mean())
        g = g - g_mean
        f = f - f_mean
        notes["subtracted_mean_g"] = g_mean
        notes["subtracted_mean_f"] = f_mean
    if consistency_tol is None:
        rel = consistency_tolerance(test, n, L)
        scale = op.norm_estimate() * float(np.linalg.norm(f)) + float(np.linalg.norm(g))
        consistency_tol = rel * float(np.linalg.norm(g)) / scale
    notes["consistency_tol"] = consistency_tol
    return InverseProblem(op, g, f0=np.zeros(n), known_solution=f,
                          consistency_tol=consistency_tol, notes=notes)


def build_custom_case(spec):
    """Diagonal problem from explicit data or a seeded draw.

    spec keys: either {"eigenvalues": [...], "error": [...]} (error = initial
    error coefficients at f0 = 0, so the solution is their negation) or
    {"dimension": d, "seed": s, "kappa": k} for a log-uniform spectrum in
    [1/k, 1] with a unit-scale random error.
    """
    if "eigenvalues" in spec:
        lam = np.asarray(spec["eigenvalues"], dtype=float)
        e0 = np.asarray(spec["error"], dtype=float)
        order = np.argsort(lam)
        lam = lam[order]
        e0 = e0[order]
    else:
        d = int(spec["dimension"])
        seed = int(spec.get("seed", 0))
        kappa = float(spec.get("kappa", 1e3))
        rng = np.random.default_rng(seed)
        lam = np.sort(np.exp(rng.uniform(np.log(1.0 / kappa), 0.0, size=d)))
        e0 = rng.standard_normal(d)
    op = DiagonalOperator(lam)
    sol = -e0
    g = lam * sol
    return InverseProblem(op, g, f0=np.zeros(lam.size), known_solution=sol,
                          notes={"test": "custom"})


@dataclass
class RunConfig:
    test: str
    n: int = None
    L: float = None
    xi: float = 1.0
    n_max: int = 60
    sigmas: tuple = (0.0, 1.0, 2.0)
    out: str = None
    json_out: str = None
    tol_rel: float = 1e-12
    tol_abs: float = 0.0
    consistency_tol: float = None
    custom: dict = None

    def resolve(self):
        if self.test in TEST_IDS:
            dn, dL = TEST_DEFAULTS[self.test]
            self.n = dn if self.n is None else int(self.n)
            self.L = dL if self.L is None else float(self.L)
            if self.n <= 0 or (self.n & (self.n - 1)) != 0:
                raise ValueError(f"n must be a power of two, got {self.n}")
            if not self.L > 0:
                raise ValueError(f"L must be positive, got {self.L}")
        elif self.test == "custom":
            if not self.custom:
                raise ValueError("custom test needs a custom problem spec")
        else:
            raise ValueError(
                f"unknown test id {self.test!r}, expected {TEST_IDS + ('custom',)}")
        self.xi = float(self.xi)
        if self.xi < 0:
            raise ValueError(f"xi must be >= 0, got {self.xi}")
        self.n_max = int(self.n_max)
        if self.n_max < 0:
            raise ValueError(f"n_max must be >= 0, got {self.n_max}")
        if self.test in TEST_IDS and self.n_max > self.n:
            raise ValueError(f"n_max {self.n_max} exceeds n = {self.n}")
        self.sigmas = tuple(float(s) for s in self.sigmas)
        return self


@dataclass
class RunRecord:
    records: list
    metadata: dict

    def to_dict(self):
        recs = []
        for r in self.records:
            recs.append({
                "N": r.N,
                "rho": {repr(k): _num(v) for k, v in sorted(r.rho.items())},
                "n_sq_rho1": _num(r.n_sq_rho1),
                "delta_n": _num(r.delta_n),
                "ritz_min": _num(r.ritz_min),
                "ritz_max": _num(r.ritz_max),
                "bound_chain_ok": r.bound_chain_ok,
                "lemma_ok": r.lemma_ok,
            })
        return {"schema_version": SCHEMA_VERSION,
                "metadata": self.metadata,
                "records": recs}


def _num(v):
    v = float(v)
    return None if not np.isfinite(v) else v


def _build_problem(config):
    if config.test == "custom":
        return build_custom_case(config.custom)
    return build_test_case(config.test, config.n, config.L,
                           consistency_tol=config.consistency_tol)


def run(config):
    """Execute the configured experiment and assemble the record series.

    Spectral operators route every xi through the eigenbasis minimizer;
    Krylov recurrences in floating point leak out of the exact Krylov
    space once the recurrence coefficients of the orthogonality measure
    collapse, and the leaked iterates break the rho / node-polynomial
    identity that the records are meant to exhibit. Matrix-free problems
    use CG for xi = 1 and the power-weighted Gram path for integer
    xi > 1. On spectral operators every record also carries the
    node-polynomial data (smallest and largest zero, delta_n) and the
    verdicts of the tail bound chain for each requested sigma <= xi.
    """
    config = config.resolve()
    t0 = time.perf_counter()
    problem = _build_problem(config)
    op = problem.operator
    if config.n_max > problem.dimension:
        raise ValueError(
            f"n_max {config.n_max} exceeds dimension {problem.dimension}")
    if not op.spectral and config.xi < 1:
        raise ValueError("matrix-free runs need xi >= 1")

    termination = None
    if config.n_max == 0:
        iterates = []
    elif op.spectral:
        iterates = [problem.f0.copy()]
        iterates += [theta_iterate_spectral(problem, config.xi, N)
                     for N in range(1, config.n_max + 1)]
    elif config.xi == 1.0:
        hist = run_cg(problem, config.n_max, tol_rel=config.tol_rel,
                      tol_abs=config.tol_abs)
        iterates = hist.iterates
        termination = hist.reason
    else:
        iterates = [problem.f0.copy()]
        iterates += [theta_iterate(problem, config.xi, N)
                     for N in range(1, config.n_max + 1)]

    sigmas = tuple(sorted(set(config.sigmas) | {0.0, 1.0, 2.0}))
    chain_sigmas = [s for s in sigmas if 0.0 <= s <= config.xi]

    polys = []
    mu = {}
    if op.spectral and iterates:
        e0 = problem.error_coefficients(problem.f0)
        base = DiscreteSpectralMeasure(op.eigenvalues().real,
                                       np.abs(e0) ** 2)
        for s in sigmas:
            mu[s] = weight_by_power(base, s)
        nu = weight_by_power(base, config.xi + 1.0)
        if len(base):
            import warnings as _w
            with _w.catch_warnings():
                _w.simplefilter("ignore")
                polys = residual_polynomials(nu, min(config.n_max, len(nu)))

    records = []
    for N, f_n in enumerate(iterates):
        vals = {s: rho(problem, f_n, s) for s in sigmas}
        rec = ConvergenceRecord(N=N, rho=vals,
                                n_sq_rho1=float(N * N * vals.get(1.0, np.nan)))
        if N >= 1 and N < len(polys):
            p = polys[N]
            rec.delta_n = delta_n(p)
            rec.ritz_min = float(p.zeros[0])
            rec.ritz_max = float(p.zeros[-1])
            chain_ok = True
            lemma_ok = True
            for s in chain_sigmas:
                rep = bound_chain(vals[s], p, mu[s], config.xi, s)
                chain_ok = chain_ok and rep.ok
                nu_s = weight_by_power(mu[s], config.xi - s + 1.0)
                _, _, sat = lemma_bound(p, nu_s, mu[s], config.xi, s)
                lemma_ok = lemma_ok and sat
            rec.bound_chain_ok = chain_ok
            rec.lemma_ok = lemma_ok
        records.append(rec)

    metadata = {
        "schema_version": SCHEMA_VERSION,
        "config": {
            "test": config.test, "n": config.n, "L": config.L,
            "xi": config.xi, "n_max": config.n_max,
            "sigmas": list(config.sigmas), "tol_rel": config.tol_rel,
            "tol_abs": config.tol_abs,
        },
        "norm_estimate": float(op.norm_estimate()),
        "dimension": problem.dimension,
        "termination": termination,
        "notes": problem.notes,
        "wall_time_s": time.perf_counter() - t0,
    }
    if records and len(polys) > 1:
        metadata["delta_first"] = records[1].delta_n
        metadata["delta_last"] = records[-1].delta_n
        metadata["ritz_min_last"] = records[-1].ritz_min
        metadata["ritz_max_last"] = records[-1].ritz_max
    out = RunRecord(records=records, metadata=metadata)
    if config.out:
        write_csv(out, config.out)
    if config.json_out:
        emit_json(out, config.json_out)
    return out


def _fmt(v):
    return repr(float(v))


def csv_lines(record):
    lines = [CSV_HEADER]
    for r in record.records:
        ok = "" if r.bound_chain_ok is None else ("true" if r.bound_chain_ok else "false")
        lines.append(", ".join([
            str(r.N), _fmt(r.rho[0.0]), _fmt(r.rho[1.0]), _fmt(r.n_sq_rho1),
            _fmt(r.rho[2.0]), _fmt(r.delta_n), _fmt(r.ritz_min),
            _fmt(r.ritz_max), ok]))
    return lines


def write_csv(record, path):
    with open(path, "w") as fh:
        fh.write("\n".join(csv_lines(record)) + "\n")


def read_csv(path):
    """Rows as dicts with parsed floats (nan round-trips; empty stays '')."""
    with open(path) as fh:
        lines = [ln.rstrip("\n") for ln in fh if ln.strip()]
    header = [h.strip() for h in lines[0].split(",")]
    rows = []
    for ln in lines[1:]:
        parts = [p.strip() for p in ln.split(",")]
        row = dict(zip(header, parts))
        for key in header:
            if key == "N":
                row[key] = int(row[key])
            elif key != "bound_chain_ok":
                row[key] = float(row[key])
        rows.append(row)
    return rows


def emit_json(record, path):
    with open(path, "w") as fh:
        json.dump(record.to_dict(), fh, indent=1, sort_keys=True)
        fh.write("\n")


def read_json(path):
    with open(path) as fh:
        data = json.load(fh)
    ver = data.get("schema_version")
    if ver != SCHEMA_VERSION:
        raise VersionError(
            f"unsupported schema version {ver!r} in {path}, expected {SCHEMA_VERSION}")
    records = []
    for r in data["records"]:
        rec = ConvergenceRecord(
            N=int(r["N"]),
            rho={float(k): (np.nan if v is None else v)
                 for k, v in r["rho"].items()},
            n_sq_rho1=np.nan if r["n_sq_rho1"] is None else r["n_sq_rho1"],
            delta_n=np.nan if r["delta_n"] is None else r["delta_n"],
            ritz_min=np.nan if r["ritz_min"] is None else r["ritz_min"],
            ritz_max=np.nan if r["ritz_max"] is None else r["ritz_max"],
            bound_chain_ok=r["bound_chain_ok"],
            lemma_ok=r.get("lemma_ok"),
        )
        records.append(rec)
    return RunRecord(records=records, metadata=data["metadata"])


def verify_case(config):
    """Construction gate plus fast invariants; list of (name, ok, detail)."""
    config = config.resolve()
    checks = []
    try:
        problem = _build_problem(config)
        checks.append(("consistency_gate", True,
                       f"tol {problem.notes.get('consistency_tol', problem.consistency_tol):.3e}"))
    except Exception as exc:
        checks.append(("consistency_gate", False, str(exc)))
        return checks
    op = problem.operator
    rng = np.random.default_rng(20260814)
    nrm = op.norm_estimate()
    sym_ok = True
    pos_ok = True
    worst_sym = 0.0
    worst_pos = 0.0
    for _ in range(5):
        a = rng.standard_normal(op.dimension)
        b = rng.standard_normal(op.dimension)
        Aa = op.apply(a)
        gap = abs(float(np.dot(Aa, b)) - float(np.dot(a, op.apply(b))))
        scale = nrm * np.linalg.norm(a) * np.linalg.norm(b)
        worst_sym = max(worst_sym, gap / max(scale, 1e-300))
        quad = float(np.dot(a, Aa))
        worst_pos = min(worst_pos, quad / max(nrm * np.dot(a, a), 1e-300))
    sym_ok = worst_sym <= 1e-10
    pos_ok = worst_pos >= -1e-10
    checks.append(("operator_symmetry", sym_ok, f"max rel gap {worst_sym:.3e}"))
    checks.append(("operator_nonnegative", pos_ok, f"min rel quad {worst_pos:.3e}"))
    if op.spectral:
        x = rng.standard_normal(op.dimension)
        from .measures import spectral_measure
        m = spectral_measure(op, x)
        mass_gap = abs(m.total_mass() - float(np.dot(x, x))) / float(np.dot(x, x))
        checks.append(("measure_mass", mass_gap <= 1e-10,
                       f"rel gap {mass_gap:.3e}"))
        e0 = problem.error_coefficients(problem.f0)
        base = DiscreteSpectralMeasure(op.eigenvalues().real, np.abs(e0) ** 2)
        nu = weight_by_power(base, config.xi + 1.0)
        k = min(8, max(1, len(nu) - 1))
        import warnings as _w
        with _w.catch_warnings():
            _w.simplefilter("ignore")
            polys = residual_polynomials(nu, k)
        zeros_ok = all(p.zeros.min() > 0 for p in polys[1:] if p.degree)
        checks.append(("zeros_positive", zeros_ok,
                       f"{len(polys) - 1} degrees"))
        from .orthopoly import check_separation, orthogonality_gap
        sep_ok = True
        worst = 0.0
        for i in range(1, len(polys) - 1):
            ok, v = check_separation(polys[i], polys[i + 1])
            sep_ok = sep_ok and ok
            worst = max(worst, v)
        checks.append(("zeros_interlace", sep_ok, f"max violation {worst:.3e}"))
        gap_ok = True
        worst = 0.0
        for p in polys[1:]:
            _, _, gp = orthogonality_gap(p, nu)
            worst = max(worst, gp)
        gap_ok = worst <= 1e-8
        checks.append(("split_orthogonality", gap_ok, f"max rel gap {worst:.3e}"))
        edge_ok = all(p.zeros[0] * delta_n(p) >= 1.0 - 1e-10
                      for p in polys[1:] if p.degree)
        checks.append(("edge_times_delta", edge_ok, "z1 * delta >= 1"))
    return checks

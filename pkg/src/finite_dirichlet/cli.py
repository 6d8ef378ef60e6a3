"""``finite-dirichlet`` command line: load form files, run checks, emit JSON reports.

Exit codes: 0 all checks pass, 1 a mathematical property failed, 2 input error.
stdout carries exactly one JSON document; progress goes to stderr.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import math
import os
import re
import sys
import time
from dataclasses import dataclass, field

import numpy as np
import scipy.sparse as sp

from . import builders
from .core import (
    Func,
    GroundSet,
    PiecewiseLinearContraction,
    SymForm,
    _sample_functions,
    apply_T_alpha,
    check_unit_contraction_operates,
    eval_form,
    tranche_decompose,
)
from .decomposition import beurling_deny, cutoff_estimate_terms, require_markovian
from .dirichlet import (
    SequenceSpec,
    check_submarkov,
    lsc_report,
    m_symmetry_residual,
    semigroup_at,
    subsequence_selection,
    time_change,
    uniform_integrability_report,
)
from .errors import EnergyOnNullSet, FormError, SelectionFailed
from .gelfand import gelfand_transform, spectrum, transfer_dominant_measure, transfer_form
from .killing import killing_functional, killing_split
from .lagrangian import (
    _density,
    check_contraction_domination,
    check_leibniz,
    lagrangian_apply,
    lagrangian_norm,
)
from .measures import (
    AtomicMeasure,
    carre_du_champ_density,
    check_abs_continuity,
    dominant_measure,
    energy_measure,
    measure_triangle_check,
)

SPARSE_ABOVE = builders.SPARSE_ABOVE
TOL = 1e-10
SUITES = ("core", "lagrangian", "killing", "measures", "dirichlet")
_SEQ_NAME = re.compile(r"^(.+)\[(\d+)\]$")


class InputError(Exception):
    pass


# ---------------------------------------------------------------------------
# canonical JSON


def _plain(x):
    """Convert to JSON-native types; non-finite floats become strings."""
    if isinstance(x, dict):
        return {str(k): _plain(v) for k, v in x.items()}
    if isinstance(x, (list, tuple)):
        return [_plain(v) for v in x]
    if isinstance(x, np.ndarray):
        return _plain(x.tolist())
    if isinstance(x, (bool, np.bool_)):
        return bool(x)
    if isinstance(x, (int, np.integer)):
        return int(x)
    if isinstance(x, (float, np.floating)):
        v = float(x)
        if math.isfinite(v):
            return v
        return "nan" if math.isnan(v) else ("inf" if v > 0 else "-inf")
    return x if x is None or isinstance(x, str) else str(x)


def canonical_bytes(doc) -> bytes:
    """Sorted keys, no whitespace, shortest round-trip floats, trailing newline."""
    text = json.dumps(_plain(doc), sort_keys=True, separators=(",", ":"), allow_nan=False, ensure_ascii=False)
    return (text + "\n").encode("utf-8")


def digest(doc) -> str:
    return hashlib.sha256(canonical_bytes(doc)).hexdigest()


# ---------------------------------------------------------------------------
# form files


@dataclass
class Model:
    doc: dict
    ground: GroundSet
    E: SymForm
    functions: dict
    measures: dict
    notes: list = field(default_factory=list)

    @property
    def digest(self) -> str:
        return digest(self.doc)

    def sequence(self, name: str) -> SequenceSpec:
        members = []
        for key, vals in self.functions.items():
            mt = _SEQ_NAME.match(key)
            if mt and mt.group(1) == name:
                members.append((int(mt.group(2)), vals))
        if not members:
            raise InputError(f"no sequence named {name!r} (expected functions {name}[1], {name}[2], ...)")
        members.sort(key=lambda t: t[0])
        return SequenceSpec(tuple(Func(self.ground, v) for _, v in members))

    def measure(self, name: str) -> AtomicMeasure:
        if name not in self.measures:
            raise InputError(f"unknown measure {name!r}")
        return AtomicMeasure(self.ground, self.measures[name])


def _reject_constant(tok):
    raise InputError(f"non-finite number {tok} in input")


def _number(x, where: str) -> float:
    if isinstance(x, bool) or not isinstance(x, (int, float)):
        raise InputError(f"{where}: expected a number, got {type(x).__name__}")
    v = float(x)
    if not math.isfinite(v):
        raise InputError(f"{where}: number is not finite")
    return v


def _vector(x, n: int, where: str) -> np.ndarray:
    if not isinstance(x, list):
        raise InputError(f"{where}: expected a list")
    if len(x) != n:
        raise InputError(f"{where}: expected {n} values, got {len(x)}")
    return np.array([_number(v, f"{where}[{i}]") for i, v in enumerate(x)])


def parse_form_doc(doc) -> Model:
    if not isinstance(doc, dict):
        raise InputError("top level must be an object")
    allowed = {"ground_set", "matrix", "jumps", "killing", "functions", "measures"}
    extra = set(doc) - allowed
    if extra:
        raise InputError(f"unknown top-level keys: {sorted(extra)}")
    labels = doc.get("ground_set")
    if not isinstance(labels, list) or not labels or not all(isinstance(s, str) for s in labels):
        raise InputError("ground_set must be a nonempty list of strings")
    if len(set(labels)) != len(labels):
        raise InputError("ground_set labels must be distinct")
    ground = GroundSet(tuple(labels))
    n = ground.size
    pos = {s: i for i, s in enumerate(labels)}
    notes = []

    has_matrix = "matrix" in doc
    has_jk = "jumps" in doc or "killing" in doc
    if has_matrix == has_jk:
        raise InputError('exactly one of "matrix" or "jumps"/"killing" is required')
    if has_matrix:
        rows = doc["matrix"]
        if not isinstance(rows, list) or len(rows) != n:
            raise InputError(f"matrix must have {n} rows")
        Q = np.array([_vector(r, n, f"matrix[{i}]") for i, r in enumerate(rows)])
        asym = float(np.max(np.abs(Q - Q.T)))
        if asym > 0:
            notes.append(
                {"name": "input.symmetrized", "status": "info", "lhs": asym, "rhs": 0.0,
                 "tolerance": None, "witness": None}
            )
    else:
        jumps = doc.get("jumps", [])
        kill = doc.get("killing", {})
        if not isinstance(jumps, list):
            raise InputError("jumps must be a list")
        if not isinstance(kill, dict):
            raise InputError("killing must be an object")
        rr, cc, ww = [], [], []
        for i, e in enumerate(jumps):
            if not isinstance(e, dict) or set(e) != {"x", "y", "weight"}:
                raise InputError(f"jumps[{i}] must have exactly the keys x, y, weight")
            if e["x"] not in pos or e["y"] not in pos:
                raise InputError(f"jumps[{i}]: endpoint is not a declared label")
            if e["x"] == e["y"]:
                raise InputError(f"jumps[{i}]: endpoints must differ")
            w = _number(e["weight"], f"jumps[{i}].weight")
            a, b = pos[e["x"]], pos[e["y"]]
            rr += [a, b]
            cc += [b, a]
            ww += [w, w]
        kappa = np.zeros(n)
        for lab, w in kill.items():
            if lab not in pos:
                raise InputError(f"killing: {lab!r} is not a declared label")
            kappa[pos[lab]] += _number(w, f"killing[{lab}]")
        J = sp.csr_matrix((ww, (rr, cc)), shape=(n, n))
        deg = np.asarray(J.sum(axis=1)).ravel()
        Q = (sp.diags(deg + kappa) - J).tocsr()
        if n <= SPARSE_ABOVE:
            Q = Q.toarray()
    try:
        E = SymForm(ground, Q)
    except FormError as exc:
        raise InputError(f"invalid form: {exc}") from exc

    functions = {}
    fdoc = doc.get("functions", {})
    if not isinstance(fdoc, dict):
        raise InputError("functions must be an object")
    for name, vals in fdoc.items():
        if not name:
            raise InputError("function names must be nonempty")
        functions[name] = _vector(vals, n, f"functions[{name}]")
    measures = {}
    mdoc = doc.get("measures", {})
    if not isinstance(mdoc, dict):
        raise InputError("measures must be an object")
    for name, vals in mdoc.items():
        v = _vector(vals, n, f"measures[{name}]")
        if np.any(v < 0):
            raise InputError(f"measures[{name}]: atoms must be nonnegative")
        measures[name] = v
    return Model(doc, ground, E, functions, measures, notes)


def load_form_file(path: str) -> Model:
    try:
        with open(path, "rb") as fh:
            raw = fh.read()
    except OSError as exc:
        raise InputError(f"cannot read {path}: {exc.strerror}") from exc
    try:
        text = raw.decode("utf-8")
    except UnicodeDecodeError as exc:
        raise InputError("file is not valid UTF-8") from exc
    try:
        doc = json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as exc:
        raise InputError(f"invalid JSON: {exc.msg} at line {exc.lineno}") from exc
    except RecursionError as exc:
        raise InputError("JSON nesting too deep") from exc
    return parse_form_doc(doc)


# ---------------------------------------------------------------------------
# reports


class Report:
    def __init__(self, command: list, input_digest: str | None = None):
        self.command = command
        self.input_digest = input_digest
        self.records: list = []
        self.data: dict = {}
        self.t0 = time.perf_counter()

    def add(self, name, status, lhs=None, rhs=None, tolerance=None, witness=None):
        if status == "fail" and witness is None:
            witness = "unspecified"
        self.records.append(
            {"name": name, "status": status, "lhs": lhs, "rhs": rhs, "tolerance": tolerance, "witness": witness}
        )

    def check(self, name, ok, lhs=None, rhs=None, tolerance=None, witness=None):
        self.add(name, "pass" if ok else "fail", lhs, rhs, tolerance, None if ok else witness)

    @property
    def failed(self) -> bool:
        return any(r["status"] == "fail" for r in self.records)

    def document(self) -> dict:
        return {
            "command": self.command,
            "input_digest": self.input_digest,
            "records": sorted(self.records, key=lambda r: r["name"]),
            "data": self.data,
            "wall_time": time.perf_counter() - self.t0,
        }


class Progress:
    def __init__(self, stream=None):
        self.stream = stream or sys.stderr
        self.color = not os.environ.get("NO_COLOR") and getattr(self.stream, "isatty", lambda: False)()

    def __call__(self, msg: str):
        if self.color:
            msg = f"\x1b[2m{msg}\x1b[0m"
        print(msg, file=self.stream, flush=True)


def _guarded(report: Report, name: str, fn):
    """Run one check; a library error inside becomes a failing record with its witness."""
    try:
        fn()
    except FormError as exc:
        report.add(name, "fail", witness={"error": type(exc).__name__, "message": str(exc),
                                          "witness": _plain(exc.witness)})


# ---------------------------------------------------------------------------
# verify suites


def _test_functions(model: Model, seed: int, trials: int) -> list:
    rng = np.random.default_rng(seed)
    fs = [(name, v) for name, v in model.functions.items()]
    fs += [(f"sample[{i}]", u) for i, u in enumerate(_sample_functions(rng, model.ground.size, trials))]
    return fs


def _suite_core(model, report, fs, rng, trials, seed):
    E = model.E
    bd = beurling_deny(E)
    neg = bd.negative_entries()
    report.check("core.markovian", bd.markovian, witness=neg[0] if neg else None)

    def unit():
        r = check_unit_contraction_operates(E, trials=trials, rng_seed=seed)
        report.check("core.unit_contraction_operates", r["violations"] == 0, lhs=r["max_violation"],
                     rhs=0.0, tolerance=TOL, witness=r["witness"])
        report.check("core.sampling_consistent_with_signs", r["consistent"],
                     witness={"markovian": r["markovian"], "violations": r["violations"]})

    _guarded(report, "core.unit_contraction_operates", unit)
    worst, wit = 0.0, None
    for name, u in fs:
        e = eval_form(E, u, u)
        for a in (0.5, 1.0):
            t = apply_T_alpha(u, a)
            gap = eval_form(E, t, t) - e
            if gap > worst:
                worst, wit = gap, {"function": name, "alpha": a}
    report.check("core.t_alpha_energy", worst <= TOL * (1 + _scale(E)), lhs=worst, rhs=0.0,
                 tolerance=TOL, witness=wit)
    worst, wit = 0.0, None
    for name, u in fs[:50]:
        parts = tranche_decompose(u, 2)
        r = float(np.max(np.abs(sum(parts.values()) - u)))
        if r > worst:
            worst, wit = r, name
    report.check("core.tranche_sum", worst <= 1e-12, lhs=worst, rhs=0.0, tolerance=1e-12, witness=wit)


def _scale(E: SymForm) -> float:
    d = E.diagonal
    return float(np.max(np.abs(d))) if d.size else 0.0


def _suite_lagrangian(model, report, fs, rng, trials, seed):
    E = model.E
    worst, wit = 0.0, None
    for name, u in fs:
        g = _density(E, u, u)
        tol = TOL * (1 + float(np.max(np.abs(g))))
        i = int(np.argmin(g))
        if g[i] < -tol and -g[i] > worst:
            worst, wit = -g[i], {"function": name, "point": E.ground.labels[i], "density": float(g[i])}
    report.check("lagrangian.positivity", wit is None, lhs=-worst, rhs=0.0, tolerance=TOL, witness=wit)

    worst, wit = -math.inf, None
    for name, u in fs:
        gap = lagrangian_norm(E, u) - 2 * eval_form(E, u, u)
        if gap > worst:
            worst, wit = gap, name
    report.check("lagrangian.norm_bound", worst <= TOL * (1 + _scale(E)), lhs=worst, rhs=0.0,
                 tolerance=TOL, witness={"function": wit})

    worst, wit = 0.0, None
    n = E.ground.size
    for i in range(min(trials, 200)):
        u, v, w = rng.normal(size=(3, n))
        r = check_leibniz(E, u, v, w)
        if r > worst:
            worst, wit = r, i
    report.check("lagrangian.leibniz_identity", worst <= 1e-9 * (1 + _scale(E)), lhs=worst, rhs=0.0,
                 tolerance=1e-9, witness={"sample": wit})

    worst_pt = None
    for name, u in fs[: max(1, min(len(fs), 100))]:
        for F in (PiecewiseLinearContraction.t_alpha(1.0), PiecewiseLinearContraction.absolute(),
                  PiecewiseLinearContraction.random(rng)):
            ok, pt = check_contraction_domination(E, u, F)
            if not ok:
                worst_pt = {"function": name, "point": pt, "contraction": repr(F)}
                break
        if worst_pt:
            break
    report.check("lagrangian.contraction_domination", worst_pt is None, witness=worst_pt)


def _suite_killing(model, report, fs, rng, trials, seed):
    E = model.E

    def run():
        require_markovian(E)
        n = E.ground.size
        worst_add, worst_hom, worst_bd = 0.0, 0.0, -math.inf
        wit_add = wit_hom = wit_bd = None
        for i in range(min(trials, 100)):
            u = np.abs(rng.normal(size=n)) * (rng.random(n) < 0.7)
            v = np.abs(rng.normal(size=n)) * (rng.random(n) < 0.7)
            c = float(rng.uniform(0.1, 3.0))
            ku, kv = killing_functional(E, u), killing_functional(E, v)
            r = abs(killing_functional(E, u + v) - ku - kv)
            if r > worst_add:
                worst_add, wit_add = r, i
            r = abs(killing_functional(E, c * u) - c * ku)
            if r > worst_hom:
                worst_hom, wit_hom = r, i
        for name, u in fs:
            gap = killing_functional(E, u * u) - eval_form(E, u, u)
            if gap > worst_bd:
                worst_bd, wit_bd = gap, name
        tol = TOL * (1 + _scale(E))
        report.check("killing.additivity", worst_add <= tol, lhs=worst_add, rhs=0.0, tolerance=TOL,
                     witness={"sample": wit_add})
        report.check("killing.homogeneity", worst_hom <= tol, lhs=worst_hom, rhs=0.0, tolerance=TOL,
                     witness={"sample": wit_hom})
        report.check("killing.energy_bound", worst_bd <= tol, lhs=worst_bd, rhs=0.0, tolerance=TOL,
                     witness={"function": wit_bd})
        Qf, kvec = killing_split(E)
        worst_k, wit_k = 0.0, None
        for name, u in fs[:50]:
            k = abs(killing_functional(Qf, u))
            if k > worst_k:
                worst_k, wit_k = k, name
        report.check("killing.split_zero_killing", worst_k <= tol, lhs=worst_k, rhs=0.0, tolerance=TOL,
                     witness={"function": wit_k})
        report.add("killing.split_total", "info", lhs=float(kvec.values.sum()))

    _guarded(report, "killing.suite", run)


def _suite_measures(model, report, fs, rng, trials, seed):
    E = model.E
    n = E.ground.size

    def run():
        worst, wit = 0.0, None
        for name, u in fs[:100]:
            g = energy_measure(E, u)
            h = rng.normal(size=n)
            r = abs(g.integrate(h) - lagrangian_apply(E, u, u, h))
            if r > worst:
                worst, wit = r, name
        report.check("measures.integral_representation", worst <= 1e-9 * (1 + _scale(E)), lhs=worst,
                     rhs=0.0, tolerance=1e-9, witness={"function": wit})
        worst, wit = 0.0, None
        for i in range(min(trials, 200)):
            u, v = rng.normal(size=(2, n))
            A = rng.random(n) < 0.5
            r = measure_triangle_check(E, u, v, A)
            if r > worst:
                worst, wit = r, {"sample": i, "subset": [E.ground.labels[j] for j in np.nonzero(A)[0]]}
        report.check("measures.triangle", worst <= 1e-8, lhs=worst, rhs=0.0, tolerance=1e-8, witness=wit)
        # past ~40 members the 2^-n weights sink below the zero threshold of the check
        m = dominant_measure(E, [np.eye(1, n, i).ravel() for i in range(n)] if n <= 200
                             else [u for _, u in fs[:30]])
        bad = None
        fam = fs[:100] if n <= 200 else fs[:30]
        for name, u in fam:
            ok, pt = check_abs_continuity(energy_measure(E, u), m)
            if not ok:
                bad = {"function": name, "point": pt}
                break
        report.check("measures.dominant_measure", bad is None, witness=bad)
        worst, wit = 0.0, None
        for name, u in fam:
            d = carre_du_champ_density(E, u, m)
            r = abs(float(d.values @ m.atoms) - energy_measure(E, u).total)
            if r > worst:
                worst, wit = r, name
        report.check("measures.density_integral", worst <= TOL * (1 + _scale(E)), lhs=worst, rhs=0.0,
                     tolerance=TOL, witness={"function": wit})

    _guarded(report, "measures.suite", run)


def _suite_dirichlet(model, report, fs, rng, trials, seed):
    E = model.E
    n = E.ground.size

    def run():
        require_markovian(E)
        worst, wit = -math.inf, None
        for name, u in fs[:200]:
            a = float(rng.uniform(0.05, 2.0))
            t = cutoff_estimate_terms(E, u, a)
            gap = t["lhs"] - 4 * t["gamma_mass"]
            if gap > worst:
                worst, wit = gap, {"function": name, "alpha": a}
        report.check("dirichlet.cutoff_estimate", worst <= TOL * (1 + _scale(E)), lhs=worst, rhs=0.0,
                     tolerance=TOL, witness=wit)
        if n > SPARSE_ABOVE:
            report.add("dirichlet.time_change", "info", witness="skipped: dense spectral step too large")
            return
        measures = dict(model.measures) or {"random": rng.uniform(0.5, 2.0, size=n)}
        for mname, atoms in sorted(measures.items()):
            gen = time_change(E, AtomicMeasure(E.ground, atoms))
            for t in (0.01, 0.1, 1.0, 10.0):
                P = semigroup_at(gen, t)
                ok, w = check_submarkov(P)
                report.check(f"dirichlet.submarkov[{mname},t={t}]", ok, witness=w[:3])
                r = m_symmetry_residual(gen, P)
                report.check(f"dirichlet.m_symmetry[{mname},t={t}]", r <= 1e-8, lhs=r, rhs=0.0,
                             tolerance=1e-8, witness={"residual": r})

    _guarded(report, "dirichlet.suite", run)


_SUITE_FNS = {
    "core": _suite_core,
    "lagrangian": _suite_lagrangian,
    "killing": _suite_killing,
    "measures": _suite_measures,
    "dirichlet": _suite_dirichlet,
}


# ---------------------------------------------------------------------------
# commands


def cmd_decompose(args, report: Report, progress):
    model = load_form_file(args.file)
    report.input_digest = model.digest
    report.records += model.notes
    bd = beurling_deny(model.E)
    J = bd.J.toarray() if sp.issparse(bd.J) else bd.J
    labels = model.ground.labels
    report.data = {
        "jumps": [{"x": labels[i], "y": labels[j], "weight": float(J[i, j])}
                  for i, j in zip(*np.nonzero(np.triu(J)))],
        "killing": {labels[i]: float(k) for i, k in enumerate(bd.kappa)},
        "markovian": bd.markovian,
    }
    neg = bd.negative_entries()
    report.add("decompose.markovian", "info", witness=neg[0] if neg else None)
    # the decomposition itself always succeeds; non-Markovian forms are reported, not failed
    return 0


def cmd_verify(args, report: Report, progress):
    model = load_form_file(args.file)
    report.input_digest = model.digest
    report.records += model.notes
    if args.trials < 1:
        raise InputError("--trials must be positive")
    suites = SUITES if args.suite == "all" else (args.suite,)
    fs = _test_functions(model, args.seed, args.trials)
    for s in suites:
        progress(f"verify: suite {s}")
        rng = np.random.default_rng([args.seed, SUITES.index(s)])
        _SUITE_FNS[s](model, report, fs, rng, args.trials, args.seed)
    return 1 if report.failed else 0


def _parse_times(raw: list) -> list:
    out = []
    for tok in raw:
        for piece in str(tok).split(","):
            if not piece.strip():
                continue
            try:
                t = float(piece)
            except ValueError as exc:
                raise InputError(f"bad time {piece!r}") from exc
            if not math.isfinite(t) or t < 0:
                raise InputError(f"times must be finite and nonnegative, got {piece!r}")
            out.append(t)
    if not out:
        raise InputError("at least one time is required")
    return out


def cmd_timechange(args, report: Report, progress):
    model = load_form_file(args.file)
    report.input_digest = model.digest
    m = model.measure(args.measure)
    times = _parse_times(args.t)
    if model.ground.size > SPARSE_ABOVE:
        raise InputError(f"time change is limited to {SPARSE_ABOVE} points")
    try:
        gen = time_change(model.E, m)
    except EnergyOnNullSet as exc:
        report.add("timechange.energy_on_null_set", "fail", witness=exc.witness)
        return 1
    labels = [model.ground.labels[i] for i in gen.support]
    report.data = {"support": labels, "generator": gen.G, "semigroup": {}}
    for t in times:
        P = semigroup_at(gen, t)
        report.data["semigroup"][repr(t)] = P
        ok, w = check_submarkov(P)
        report.check(f"timechange.submarkov[t={t!r}]", ok, witness=w[:5])
        r = m_symmetry_residual(gen, P)
        report.check(f"timechange.m_symmetry[t={t!r}]", r <= 1e-8, lhs=r, rhs=0.0, tolerance=1e-8,
                     witness={"residual": r})
    rng = np.random.default_rng(0)
    worst = 0.0
    Qs = model.E.dense[np.ix_(gen.support, gen.support)]
    for _ in range(20):
        u = rng.normal(size=len(gen.support))
        worst = max(worst, abs(gen.quadratic_form(u) - float(u @ Qs @ u)))
    report.check("timechange.quadratic_form", worst <= TOL * (1 + _scale(model.E)), lhs=worst, rhs=0.0,
                 tolerance=TOL, witness={"residual": worst})
    return 1 if report.failed else 0


def cmd_spectrum(args, report: Report, progress):
    model = load_form_file(args.file)
    report.input_digest = model.digest
    names = args.generators or []
    for g in names:
        if g not in model.functions:
            raise InputError(f"unknown generator {g!r}")
    if not names:
        report.data = {"classes": [], "dropped": list(model.ground.labels), "transferred_matrix": [],
                       "dominant_measure": []}
        report.add("spectrum.size", "info", lhs=0)
        return 0
    gens = [model.functions[g] for g in names]
    model_s = spectrum(model.ground, gens)
    Ehat = transfer_form(model.E, model_s)
    labels = model.ground.labels
    try:
        mhat = transfer_dominant_measure(model.E, model_s, gens)
        mdata = mhat.atoms
    except FormError as exc:
        report.add("spectrum.dominant_measure", "fail", witness=_plain(exc.witness))
        mdata = None
    worst = 0.0
    for g in gens:
        gh = gelfand_transform(model_s, g)
        worst = max(worst, abs(eval_form(Ehat, gh, gh) - eval_form(model.E, g, g)))
    report.check("spectrum.isometry", worst <= TOL * (1 + _scale(model.E)), lhs=worst, rhs=0.0,
                 tolerance=TOL, witness={"residual": worst})
    report.data = {
        "classes": [[labels[i] for i in c] for c in model_s.classes],
        "dropped": [labels[i] for i in model_s.dropped],
        "transferred_matrix": Ehat.dense,
        "dominant_measure": mdata,
    }
    report.add("spectrum.size", "info", lhs=model_s.size)
    return 1 if report.failed else 0


def cmd_closability(args, report: Report, progress):
    model = load_form_file(args.file)
    report.input_digest = model.digest
    seq = model.sequence(args.sequence)
    m = model.measure(args.measure)
    E = model.E
    progress(f"closability: {len(seq)} functions on {E.ground.size} points")
    try:
        ui = uniform_integrability_report(E, m, seq)
        sel = subsequence_selection(E, m, seq, j_max=args.j_max)
    except SelectionFailed as exc:
        report.add("closability.selection", "fail", witness=_plain(exc.witness) or str(exc))
        return 1
    except FormError as exc:
        report.add("closability.selection", "fail",
                   witness={"error": type(exc).__name__, "message": str(exc), "witness": _plain(exc.witness)})
        return 1
    for c in sel["certificates"]:
        j = c["j"]
        ok = c["proof_path_ok"] and c["corollary_path_ok"]
        report.add(f"closability.certificate[{j:03d}]", "pass" if ok else "fail",
                   lhs=c["lhs"], rhs=c["bound4"], tolerance=1.0 / j, witness=_plain(c))
    lsc = lsc_report(E, seq, np.zeros(E.ground.size))
    report.check("closability.lower_semicontinuity", lsc["holds"], lhs=lsc["energy_limit"],
                 rhs=lsc["liminf_estimate"], witness={"margin": lsc["margin"]})
    report.add("closability.terminal_energy", "info", lhs=sel["terminal_energy"])
    report.data = {
        "k": sel["k"],
        "indices": [i + 1 for i in sel["indices"]],
        "energies": sel["energies"],
        "energy_moduli": sel["energy_moduli"],
        "l2_moduli": sel["l2_moduli"],
        "l1_cauchy_moduli": ui["l1_cauchy_moduli"],
        "uniform_integrability": ui["uniform_integrability"],
        "pointwise_triangle_residual": ui["pointwise_triangle_residual"],
    }
    return 1 if report.failed else 0


# ---------------------------------------------------------------------------
# demo files


def _jumps_doc(E: SymForm) -> dict:
    bd = beurling_deny(E)
    labels = E.ground.labels
    C = sp.triu(sp.csr_matrix(bd.J), k=1).tocoo()
    order = np.lexsort((C.col, C.row))
    jumps = [{"x": labels[C.row[i]], "y": labels[C.col[i]], "weight": float(C.data[i])} for i in order]
    killing = {labels[i]: float(k) for i, k in enumerate(bd.kappa) if k != 0}
    return {"ground_set": list(labels), "jumps": jumps, "killing": killing}


def demo_document(kind: str, params: list) -> dict:
    def ints(k):
        if len(params) != k:
            raise InputError(f"demo {kind} expects {k} parameters")
        try:
            return [int(p) for p in params]
        except ValueError as exc:
            raise InputError(f"demo {kind}: integer parameters required") from exc

    if kind == "path":
        (N,) = ints(1)
        if N < 2:
            raise InputError("demo path needs N >= 2")
        E, grid = builders.path_graph(N)
        doc = _jumps_doc(E)
        doc["functions"] = {"grid": grid.values}
        doc["measures"] = {"cell": np.full(N, 1.0 / (N - 1)), "counting": np.ones(N)}
        return doc
    if kind == "spikes":
        N, count = ints(2)
        if N < 4 or count < 1 or count > N / 4:
            raise InputError("demo spikes needs N >= 4 and 1 <= count <= N/4")
        E, grid = builders.path_graph(N)
        doc = _jumps_doc(E)
        seq = builders.spike_sequence(N, count)
        ctl = builders.spike_sequence(N, count, unit_height=True)
        fns = {}
        for i, f in enumerate(seq.functions, start=1):
            fns[f"spikes[{i}]"] = f.values
        for i, f in enumerate(ctl.functions, start=1):
            fns[f"control[{i}]"] = f.values
        fns["zero[1]"] = np.zeros(N)
        fns["zero[2]"] = np.zeros(N)
        doc["functions"] = fns
        doc["measures"] = {"cell": np.full(N, 1.0 / (N - 1)), "counting": np.ones(N)}
        return doc
    if kind == "random-markovian":
        if len(params) != 4:
            raise InputError("demo random-markovian expects N density kappa_scale seed")
        try:
            N, dens, ks, seed = int(params[0]), float(params[1]), float(params[2]), int(params[3])
        except ValueError as exc:
            raise InputError("demo random-markovian: bad parameter") from exc
        if N < 1 or not 0 <= dens <= 1 or not (math.isfinite(ks) and ks >= 0) or seed < 0:
            raise InputError("demo random-markovian: parameters out of range")
        E = builders.random_markovian(N, dens, ks, seed)
        rng = np.random.default_rng(seed)
        return {
            "ground_set": list(E.ground.labels),
            "matrix": E.dense,
            "functions": {f"f{i}": rng.normal(size=N) for i in range(3)},
            "measures": {"uniform": np.ones(N), "random": rng.uniform(0.5, 2.0, size=N)},
        }
    raise InputError(f"unknown demo kind {kind!r}")


def cmd_demo(args, out) -> int:
    doc = demo_document(args.kind, args.params)
    out.write(canonical_bytes(doc))
    return 0


# ---------------------------------------------------------------------------


def build_parser() -> argparse.ArgumentParser:
    p = argparse.ArgumentParser(prog="finite-dirichlet", description=__doc__.splitlines()[0])
    sub = p.add_subparsers(dest="command", required=True)
    s = sub.add_parser("decompose", help="jump/killing decomposition of a form file")
    s.add_argument("file")
    s = sub.add_parser("verify", help="run property suites on a form file")
    s.add_argument("file")
    s.add_argument("--suite", choices=SUITES + ("all",), default="all")
    s.add_argument("--seed", type=int, default=0)
    s.add_argument("--trials", type=int, default=200)
    s = sub.add_parser("timechange", help="semigroup of the form in L2(m)")
    s.add_argument("file")
    s.add_argument("--measure", required=True)
    s.add_argument("--t", nargs="+", default=["1"])
    s = sub.add_parser("spectrum", help="spectrum of the algebra generated by named functions")
    s.add_argument("file")
    s.add_argument("--generators", nargs="*", default=[])
    s = sub.add_parser("demo", help="write a builder model as a form file")
    s.add_argument("kind", choices=("path", "spikes", "random-markovian"))
    s.add_argument("params", nargs="*")
    s = sub.add_parser("closability", help="run the closability harness on a sequence")
    s.add_argument("file")
    s.add_argument("--sequence", required=True)
    s.add_argument("--measure", required=True)
    s.add_argument("--j-max", type=int, default=10)
    return p


_COMMANDS = {
    "decompose": cmd_decompose,
    "verify": cmd_verify,
    "timechange": cmd_timechange,
    "spectrum": cmd_spectrum,
    "closability": cmd_closability,
}


def main(argv=None, stdout=None, stderr=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    out = stdout or sys.stdout.buffer
    progress = Progress(stderr)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        if exc.code == 0:
            return 0
        bad = Report(argv)
        bad.add("input", "fail", witness="invalid command line")
        out.write(canonical_bytes(bad.document()))
        out.flush()
        return 2
    report = Report(argv)
    try:
        if args.command == "demo":
            return cmd_demo(args, out)
        code = _COMMANDS[args.command](args, report, progress)
    except InputError as exc:
        progress(f"input error: {exc}")
        report.add("input", "fail", witness=str(exc))
        code = 2
    except Exception as exc:  # never crash on malformed input
        progress(f"error: {type(exc).__name__}: {exc}")
        report.add("input", "fail", witness=f"{type(exc).__name__}: {exc}")
        code = 2
    out.write(canonical_bytes(report.document()))
    out.flush()
    return code


def entry() -> None:
    try:
        code = main()
    except BrokenPipeError:
        # reader went away (e.g. piped into head); silence the flush at exit
        os.dup2(os.open(os.devnull, os.O_WRONLY), sys.stdout.fileno())
        code = 1
    sys.exit(code)

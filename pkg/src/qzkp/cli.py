"""Command-line front end and the protocol file format.

A protocol file is one JSON object:

    {name, messages, registers: {V, M, P}, output_wire,
     verifier: [circuit], prover: [circuit], simulator: [circuit],
     meta: {epsilon, delta, p_acc}}

Wires are flat: 0..V-1 the verifier's private qubits, V..V+M-1 the
message qubits, V+M..V+M+P-1 the prover's.  Simulator circuits may use any
wire from V+M up as ancilla; the ancilla width is the largest wire used.
A circuit is a list of {gate, wires, param?} or {matrix, wires, label?}
with matrices given as [[[re, im], ...], ...].

Exit codes: 0 ok, 1 a check failed, 2 bad input, 3 validation error,
4 resource cap exceeded.
"""

import csv
import io
import json
import math
import sys
import time
from pathlib import Path

import click
import numpy as np

from . import analysis, checks, qip, zk
from ._config import REPORT_TOL, CapExceeded, set_caps
from ._validation import SchemaError, ValidationError
from .checks import Check
from .circuits import Circuit, gate_from_json, gate_to_json
from .estimators import KINDS, ProtocolTransformer
from .fixtures import fixture_catalog, get_fixture
from .qip import ProofSystem, ProverStrategy
from .qla import RegisterLayout
from .simulators import single

TOP_KEYS = {"name", "messages", "registers", "output_wire", "verifier", "prover",
            "simulator", "meta"}
META_KEYS = {"epsilon", "delta", "p_acc"}
GATE_KEYS = {"gate", "wires", "param", "label"}
MATRIX_KEYS = {"matrix", "wires", "label"}

EXIT_OK, EXIT_CHECK, EXIT_INPUT, EXIT_VALIDATION, EXIT_CAP = 0, 1, 2, 3, 4


# ------------------------------------------------------ canonical JSON

def _enc(x):
    if x is None or isinstance(x, bool):
        return json.dumps(x)
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, (float, np.floating)):
        x = float(x)
        if not math.isfinite(x):
            raise SchemaError("non-finite number")
        s = format(x, ".17g")
        return s if ("." in s or "e" in s) else s + ".0"
    if isinstance(x, str):
        return json.dumps(x)
    if isinstance(x, (list, tuple)):
        return "[" + ",".join(_enc(v) for v in x) + "]"
    if isinstance(x, dict):
        return "{" + ",".join(json.dumps(str(k)) + ":" + _enc(x[k]) for k in sorted(x)) + "}"
    raise SchemaError(f"cannot serialize {type(x).__name__}")


def canonical_dumps(doc):
    """Sorted keys, no whitespace, floats at 17 significant digits."""
    return _enc(doc) + "\n"


def _reject_constant(name):
    raise SchemaError(f"non-finite number {name}")


def parse_json(text):
    try:
        return json.loads(text, parse_constant=_reject_constant)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON: {e}") from None


def canonical_text(text):
    return canonical_dumps(parse_json(text))


# -------------------------------------------------------- protocol files

def _circuit_doc(gates):
    return [gate_to_json(g) for g in gates]


def export_protocol(ps, honest, sim=None, epsilon=None, delta=None, p_acc=None):
    """Protocol document for an in-memory triple (registers flattened to V, M, P)."""
    if ps.accept_flags:
        raise ValidationError("accept flags cannot be stored in a protocol file")
    v, m = ps.n_private, ps.q_message
    sims = []
    if sim is not None:
        if sim.fail_register is not None:
            raise ValidationError("FAIL simulators cannot be stored in a protocol file")
        for j in range(1, len(sim) + 1):
            c, glay = sim.to_circuit(j)
            wmap = {}
            for name in sim.view_names:
                wmap.update(zip(glay.wires(name), ps.layout.wires(name)))
            nxt = v + m
            for w in range(glay.total):
                if w not in wmap:
                    wmap[w] = nxt
                    nxt += 1
            sims.append(_circuit_doc(g.moved(wmap) for g in c.gates))
    if p_acc is None:
        p_acc = qip.run(ps, honest)[0]
    return {
        "name": ps.name,
        "messages": ps.m,
        "registers": {"V": v, "M": m, "P": honest.width},
        "output_wire": ps.output_wire,
        "verifier": [_circuit_doc(c.gates) for c in ps.verifier],
        "prover": [_circuit_doc(c.gates) for c in honest.circuits],
        "simulator": sims,
        "meta": {"epsilon": epsilon, "delta": delta, "p_acc": float(p_acc)},
    }


def _int(x, what, lo=0):
    if isinstance(x, bool) or not isinstance(x, int) or x < lo:
        raise SchemaError(f"{what} must be an integer >= {lo}")
    return x


def _num(x, what):
    if x is None:
        return None
    if isinstance(x, bool) or not isinstance(x, (int, float)) or not math.isfinite(x):
        raise SchemaError(f"{what} must be a finite number or null")
    return float(x)


def _gates(doc, what, n_wires):
    if not isinstance(doc, list):
        raise SchemaError(f"{what} must be a list of gates")
    out = []
    for i, g in enumerate(doc):
        where = f"{what} gate {i}"
        if not isinstance(g, dict):
            raise SchemaError(f"{where}: not an object")
        allowed = MATRIX_KEYS if "matrix" in g else GATE_KEYS
        extra = set(g) - allowed
        if extra:
            raise SchemaError(f"{where}: unknown fields {sorted(extra)}")
        if "wires" not in g or not isinstance(g["wires"], list):
            raise SchemaError(f"{where}: missing wires")
        for w in g["wires"]:
            _int(w, f"{where} wire")
            if n_wires is not None and w >= n_wires:
                raise SchemaError(f"{where}: wire {w} out of range")
        if "label" in g and not isinstance(g["label"], str):
            raise SchemaError(f"{where}: label must be a string")
        if "matrix" in g:
            rows = g["matrix"]
            if not isinstance(rows, list) or not all(
                    isinstance(r, list) and all(isinstance(e, list) and len(e) == 2 for e in r)
                    for r in rows):
                raise SchemaError(f"{where}: matrix must be [[[re, im], ...], ...]")
            for r in rows:
                for e in r:
                    _num(e[0], where), _num(e[1], where)
            if len({len(r) for r in rows}) > 1 or (rows and len(rows[0]) != len(rows)):
                raise SchemaError(f"{where}: matrix is not square")
        else:
            if not isinstance(g.get("gate"), str):
                raise SchemaError(f"{where}: missing gate name")
            if "param" in g:
                _num(g["param"], where)
        try:
            out.append(gate_from_json(g))
        except ValidationError as e:
            raise ValidationError(f"{where}: {e}") from None
    return out


def protocol_from_doc(doc):
    """(ProofSystem, ProverStrategy, simulator or None, meta) from a parsed document."""
    if not isinstance(doc, dict):
        raise SchemaError("protocol file must hold a JSON object")
    extra = set(doc) - TOP_KEYS
    if extra:
        raise SchemaError(f"unknown fields {sorted(extra)}")
    missing = TOP_KEYS - set(doc)
    if missing:
        raise SchemaError(f"missing fields {sorted(missing)}")
    if not isinstance(doc["name"], str):
        raise SchemaError("name must be a string")
    m = _int(doc["messages"], "messages", 1)
    regs = doc["registers"]
    if not isinstance(regs, dict) or set(regs) != {"V", "M", "P"}:
        raise SchemaError("registers must have exactly V, M and P")
    v, mq, p = (_int(regs[k], f"registers.{k}", lo) for k, lo in (("V", 1), ("M", 1), ("P", 0)))
    out_wire = _int(doc["output_wire"], "output_wire")
    if out_wire >= v:
        raise SchemaError("output_wire must be a private verifier wire")
    meta = doc["meta"]
    if not isinstance(meta, dict) or set(meta) - META_KEYS:
        raise SchemaError(f"meta may only hold {sorted(META_KEYS)}")
    meta = {k: _num(meta.get(k), f"meta.{k}") for k in sorted(META_KEYS)}
    for k in ("verifier", "prover", "simulator"):
        if not isinstance(doc[k], list):
            raise SchemaError(f"{k} must be a list of circuits")

    lay = RegisterLayout((("V", v), ("M", mq)))
    ver = [Circuit(lay, tuple(_gates(c, f"verifier[{i}]", v + mq)))
           for i, c in enumerate(doc["verifier"])]
    ps = ProofSystem(m, lay, v, tuple(ver), out_wire, name=doc["name"])
    plo = RegisterLayout((("P", p),))
    joint = lay + plo
    prov = [Circuit(joint, tuple(_gates(c, f"prover[{i}]", joint.total)))
            for i, c in enumerate(doc["prover"])]
    honest = ProverStrategy(plo, tuple(prov))
    qip.check_pair(ps, honest)
    sim = None
    if doc["simulator"]:
        sg = [_gates(c, f"simulator[{i}]", None) for i, c in enumerate(doc["simulator"])]
        top = max([w for gs in sg for g in gs for w in g.wires] + [v + mq - 1])
        slay = lay.extend(("ANC", top + 1 - v - mq))
        sim = single(slay, lay.names, [Circuit(slay, tuple(gs)) for gs in sg])
    return ps, honest, sim, meta


def load_protocol(path):
    try:
        text = Path(path).read_text()
    except OSError as e:
        raise SchemaError(f"cannot read {path}: {e.strerror}") from None
    return protocol_from_doc(parse_json(text))


def save_protocol(path, ps, honest, sim=None, **meta):
    text = canonical_dumps(export_protocol(ps, honest, sim, **meta))
    Path(path).write_text(text)
    return text


# --------------------------------------------------------------- reports

def format_rows(rows, fmt):
    if fmt == "json":
        return json.dumps({"passed": all(r.passed for r in rows),
                           "checks": [r.as_dict() for r in rows]}, indent=2, sort_keys=True) + "\n"
    if fmt == "csv":
        buf = io.StringIO()
        w = csv.DictWriter(buf, fieldnames=list(Check.__dataclass_fields__))
        w.writeheader()
        for r in rows:
            w.writerow(r.as_dict())
        return buf.getvalue()
    if fmt == "md":
        lines = ["| id | check | rule | claimed | measured | result | seconds |",
                 "|---|---|---|---|---|---|---|"]
        for r in rows:
            lines.append(f"| {r.id} | {r.name} | `{r.rule}` | {_g(r.claimed)} | {r.measured:.9g} "
                         f"| {'pass' if r.passed else 'FAIL'} | {r.seconds:.2f} |")
        return "\n".join(lines) + "\n"
    return "".join(
        f"{'PASS' if r.passed else 'FAIL'} {r.id:<32} measured {r.measured:.9f} "
        f"vs claimed {_g(r.claimed)}  [{r.rule}]\n" for r in rows)


def _g(x):
    return "-" if x is None or (isinstance(x, float) and math.isnan(x)) else f"{x:g}"


def rows_from_json(text):
    doc = parse_json(text)
    try:
        return [Check(**d) for d in doc["checks"]]
    except (TypeError, KeyError):
        raise SchemaError("not a report document") from None


def _emit(ctx, rows, fmt="text"):
    text = format_rows(rows, fmt)
    out = ctx.obj.get("out")
    if out:
        Path(out).write_text(text if fmt != "text" else format_rows(rows, "json"))
    click.echo(text, nl=False)
    ctx.exit(EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK)


def _info(cid, name, rule, claimed, measured, passed=True, seconds=0.0):
    c = float("nan") if claimed is None else float(claimed)
    return Check(cid, name, rule, c, float(measured), bool(passed), seconds)


# ------------------------------------------------------------------ CLI

class _Group(click.Group):
    """Maps library exceptions to exit codes."""

    def invoke(self, ctx):
        try:
            return super().invoke(ctx)
        except (SchemaError, click.BadParameter) as e:
            click.echo(f"input error: {e}", err=True)
            ctx.exit(EXIT_INPUT)
        except CapExceeded as e:
            click.echo(f"resource cap: {e}", err=True)
            ctx.exit(EXIT_CAP)
        except zk.CheckFailure as e:
            click.echo(f"check failed: {e}", err=True)
            ctx.exit(EXIT_CHECK)
        except ValidationError as e:
            click.echo(f"validation error: {e}", err=True)
            ctx.exit(EXIT_VALIDATION)


@click.group(cls=_Group)
@click.option("--seed", type=int, default=0, show_default=True, help="Random seed.")
@click.option("--out", type=click.Path(dir_okay=False), default=None,
              help="Also write the report here (JSON unless --format says otherwise).")
@click.option("--max-qubits", type=int, default=None, help="State-vector qubit cap.")
@click.option("--max-density-qubits", type=int, default=None, help="Dense-operator qubit cap.")
@click.pass_context
def main(ctx, seed, out, max_qubits, max_density_qubits):
    """Build, transform and check quantum zero-knowledge proof systems."""
    ctx.ensure_object(dict)
    ctx.obj.update(seed=seed, out=out)
    caps = {k: v for k, v in (("pure", max_qubits), ("density", max_density_qubits)) if v}
    if caps:
        set_caps(**caps)


@main.command()
@click.argument("file", type=click.Path())
@click.pass_context
def run(ctx, file):
    """Run the honest interaction and report the acceptance probability."""
    ps, honest, _, meta = load_protocol(file)
    t0 = time.perf_counter()
    p = qip.run(ps, honest)[0]
    eps = meta["epsilon"]
    claim = None if eps is None else 1 - eps
    ok = claim is None or p >= claim - REPORT_TOL
    _emit(ctx, [_info("run.p_acc", f"honest acceptance of {ps.name}", "p_acc >= 1 - eps",
                      claim, p, ok, time.perf_counter() - t0)])


@main.command()
@click.option("--kind", type=click.Choice(KINDS), required=True)
@click.option("--k", "k", type=int, default=2, show_default=True, help="Number of repetitions.")
@click.option("--t", "t", type=int, default=None, help="Sequential threshold (default k).")
@click.option("--eps", type=float, default=None, help="Completeness error (default from meta).")
@click.option("--delta", type=float, default=None, help="Soundness gap (default from meta).")
@click.argument("infile", type=click.Path())
@click.argument("outfile", type=click.Path(dir_okay=False))
@click.pass_context
def transform(ctx, kind, k, t, eps, delta, infile, outfile):
    """Apply a protocol transformation and write the result."""
    ps, honest, sim, meta = load_protocol(infile)
    eps = meta["epsilon"] if eps is None else eps
    delta = meta["delta"] if delta is None else delta
    t0 = time.perf_counter()
    tr = ProtocolTransformer(kind=kind, k=k, t=t, eps=eps, delta=delta).fit((ps, honest, sim))
    ps2, h2, s2 = tr.transform((ps, honest, sim))
    rep = tr.report_
    p = qip.run(ps2, h2)[0]
    new_eps = None if rep.completeness is None else 1 - rep.completeness
    new_delta = None if rep.soundness is None else 1 - rep.soundness
    save_protocol(outfile, ps2, h2, s2, epsilon=new_eps, delta=new_delta, p_acc=p)
    rows = [_info(f"transform.{kind}", f"{ps2.name} honest acceptance", rep.completeness_rule,
                  rep.completeness, p,
                  rep.completeness is None or p >= rep.completeness - REPORT_TOL,
                  time.perf_counter() - t0)]
    if rep.soundness is not None:
        rows.append(_info(f"transform.{kind}.soundness", "claimed soundness", rep.soundness_rule,
                          rep.soundness, rep.soundness))
    _emit(ctx, rows)


@main.command("verify-zk")
@click.option("--mode", type=click.Choice(["perfect", "statistical"]), default="perfect",
              show_default=True)
@click.option("--tol", type=float, default=REPORT_TOL, show_default=True)
@click.argument("file", type=click.Path())
@click.pass_context
def verify_zk(ctx, mode, tol, file):
    """Compare simulated and real honest-verifier views."""
    ps, honest, sim, _ = load_protocol(file)
    if sim is None:
        raise SchemaError("the protocol file has no simulator")
    t0 = time.perf_counter()
    dist = zk.hv_check(ps, honest, sim, mode="statistical", tol=tol)
    dt = time.perf_counter() - t0
    rows = [_info(f"zk.view[{j}]", f"view {j} trace distance", "||sim_j - view_j||_1",
                  0.0, d, mode == "statistical" or d <= tol, dt)
            for j, d in enumerate(dist, 1)]
    _emit(ctx, rows)


def _load_dv(path):
    doc = parse_json(Path(path).read_text())
    keys = {"w1", "aux", "n_reply", "n_work", "n_msg"}
    if not isinstance(doc, dict) or set(doc) - keys or not {"w1", "aux"} <= set(doc):
        raise SchemaError(f"verifier file needs w1 and aux and may hold {sorted(keys)}")
    mat = lambda rows: np.array([[complex(_num(a, "matrix"), _num(b, "matrix")) for a, b in r]
                                 for r in rows])
    ints = {k: _int(doc[k], k, 1) for k in ("n_reply", "n_work", "n_msg") if k in doc}
    return zk.DishonestVerifier(mat(doc["w1"]), mat(doc["aux"]), **ints)


@main.command()
@click.argument("file", type=click.Path())
@click.option("--dv", type=click.Choice(["random"]), default="random", show_default=True)
@click.option("--dv-file", type=click.Path(), default=None, help="Cheating verifier JSON.")
@click.option("--trials", type=int, default=5, show_default=True)
@click.pass_context
def rewind(ctx, file, dv, dv_file, trials):
    """Run the rewinding simulator against cheating verifiers."""
    ps, honest, sim, _ = load_protocol(file)
    if sim is None:
        raise SchemaError("the protocol file has no simulator")
    if ps.m != 3 or not qip.is_public_coin(ps):
        raise ValidationError("rewinding needs a public-coin three-message system")
    c = len(qip.coin_wires(ps)[0])
    n_msg = len(qip.stash_pairs(ps))
    rng = np.random.default_rng(ctx.obj["seed"])
    dvs = [_load_dv(dv_file)] if dv_file else [
        zk.DishonestVerifier.random(rng, n_msg=n_msg, n_reply=c) for _ in range(trials)]
    rows = []
    for i, w in enumerate(dvs):
        t0 = time.perf_counter()
        res = zk.rewind_run_wide(ps, honest, sim, w)
        dt = time.perf_counter() - t0
        out = res.output_choi if c == 1 else res.conditional_choi
        tn = analysis.qla.factor_trace_distance(out.factor, res.interaction_choi.factor)
        rows.append(_info(f"rewind[{i}].success", "first-attempt success probability",
                          "p = 2^-c", 2.0 ** -c, res.success_prob,
                          abs(res.success_prob - 2.0 ** -c) <= 1e-10, dt))
        rows.append(_info(f"rewind[{i}].choi", "simulated vs real output channel",
                          "||J_sim - J_int||_1 <= 1e-8", 0.0, tn, tn <= 1e-8, dt))
    _emit(ctx, rows)


@main.command()
@click.argument("file", type=click.Path())
@click.option("--restarts", type=int, default=8, show_default=True)
@click.option("--iters", type=int, default=500, show_default=True)
@click.option("--width", type=int, default=None, help="Prover qubits (default the honest width).")
@click.pass_context
def attack(ctx, file, restarts, iters, width):
    """Search for a cheating prover; best_p lower-bounds the cheat value."""
    ps, honest, _, meta = load_protocol(file)
    t0 = time.perf_counter()
    init = honest if width in (None, honest.width) else None
    res = analysis.optimize_prover(ps, restarts, iters, width=width, seed=ctx.obj["seed"],
                                   init=init)
    delta = meta["delta"]
    claim = None if delta is None else 1 - delta
    ok = claim is None or res.best_p <= claim + 1e-6
    _emit(ctx, [_info("attack.best_p", f"best cheating acceptance on {ps.name}",
                      "best_p <= 1 - delta", claim, res.best_p, ok, time.perf_counter() - t0)])


@main.command("export-fixture")
@click.argument("name", type=click.Choice([f.name for f in fixture_catalog()]))
@click.argument("outfile", type=click.Path(dir_okay=False))
@click.pass_context
def export_fixture(ctx, name, outfile):
    """Write a built-in fixture as a protocol file (no-instances carry a measured delta)."""
    f = get_fixture(name)
    eps, delta = (f.eps, None) if f.yes else (None, f.delta)
    save_protocol(outfile, f.ps, f.honest, f.sim, epsilon=eps, delta=delta, p_acc=f.p_acc)
    _emit(ctx, [_info(f"export.{name}", "honest acceptance", "p_acc", None, f.p_acc)])


def _criteria(only):
    if not only:
        return None
    try:
        return {int(x) for x in only.split(",")}
    except ValueError:
        raise click.BadParameter("--only takes comma-separated criterion numbers") from None


@main.command()
@click.option("--only", default=None, help="Comma-separated criterion numbers, e.g. 1,6.")
@click.pass_context
def demo(ctx, only):
    """Run every end-to-end check on the built-in fixtures."""
    rows = checks.run_all(ctx.obj["seed"], _criteria(only))
    _emit(ctx, rows)


@main.command()
@click.option("--format", "fmt", type=click.Choice(["json", "md", "csv"]), default="md",
              show_default=True)
@click.option("--input", "infile", type=click.Path(), default=None,
              help="Re-format a saved JSON report instead of running the checks.")
@click.option("--only", default=None, help="Comma-separated criterion numbers.")
@click.pass_context
def report(ctx, fmt, infile, only):
    """Run the end-to-end checks (or read a saved report) and print it."""
    if infile:
        try:
            rows = rows_from_json(Path(infile).read_text())
        except OSError as e:
            raise SchemaError(f"cannot read {infile}: {e.strerror}") from None
    else:
        rows = checks.run_all(ctx.obj["seed"], _criteria(only))
    text = format_rows(rows, fmt)
    if ctx.obj.get("out"):
        Path(ctx.obj["out"]).write_text(text)
    click.echo(text, nl=False)
    ctx.exit(EXIT_OK if all(r.passed for r in rows) else EXIT_CHECK)


if __name__ == "__main__":
    sys.exit(main())

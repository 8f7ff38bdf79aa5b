"""Command-line front end.

Circuits are described by a JSON document:

    {"fields": ["phi1", "phi2"],
     "basis": "annihilation" | "doubled" | "quadrature",
     "elements": [{"type": "su2", "params": {"g": {"re": 1.0, "im": 0.0}},
                   "ports": ["phi1", "phi2"]}],
     "loops": [{"field": "phi2", "mode": "single", "n0": 0}],
     "selfenergies": [{"kind": "detuning", "params": {"omega": 3.0}}]}

Outputs go to stdout (or --out).  Exit code 0 on success or pass-verdicts,
1 on fail-verdicts, 2 on errors.
"""

from __future__ import annotations

import argparse
import json
import os
import sys
from dataclasses import dataclass, field

import numpy as np

from . import chainscatter, closure, nonlinear, serialize, smatrix, symmetry
from . import statespace as ssm
from .errors import QsysError, SchemaError
from .gates import (ANNIHILATION, DOUBLED, QUADRATURE, AffineMap, Reactance,
                    cayley, eliminate_internal, lift_to_doubled, make_gate,
                    to_quadrature)
from .polyrat import RatFun, RatMat, rat_equal
from .serialize import (dumps, json_to_complex, json_to_statespace,
                        ratmat_to_json, statespace_to_json)
from .statespace import StateSpace

GATE_TYPES = ("su2", "squeeze", "cross_squeeze", "qnd", "xx", "displacement",
              "cu", "tv_su2")
LOOP_MODES = {"single": closure.SINGLE, "single_detuned": closure.SINGLE_DETUNED,
              "finite": closure.FINITE, "infinite": closure.INFINITE}


@dataclass
class CircuitDoc:
    fields: list[str]
    basis: str
    elements: list[dict]
    loops: list[dict] = field(default_factory=list)
    selfenergies: list[dict] = field(default_factory=list)


def parse_circuit(text: str) -> CircuitDoc:
    """Parse and validate a circuit document; diagnostics carry positions."""
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if not isinstance(raw, dict):
        raise SchemaError("circuit document must be a JSON object")
    fields = raw.get("fields")
    if not isinstance(fields, list) or not all(isinstance(f, str) for f in fields):
        raise SchemaError("'fields' must be a list of port names")
    if len(set(fields)) != len(fields):
        raise SchemaError("field names must be unique")
    basis = raw.get("basis", "annihilation")
    if basis not in (ANNIHILATION, DOUBLED, QUADRATURE):
        raise SchemaError(f"unknown basis {basis!r}")
    elements = raw.get("elements", [])
    for i, el in enumerate(elements):
        if not isinstance(el, dict) or "type" not in el:
            raise SchemaError(f"elements[{i}] must be an object with a 'type'")
        if el["type"] not in GATE_TYPES:
            raise SchemaError(f"elements[{i}]: unknown gate type {el['type']!r}")
        ports = el.get("ports", [])
        for p in ports:
            if p not in fields:
                raise SchemaError(f"elements[{i}]: port {p!r} is not a declared field")
        if len(set(ports)) != len(ports):
            raise SchemaError(f"elements[{i}]: duplicate port binding")
    loops = raw.get("loops", [])
    seen = set()
    for i, lp in enumerate(loops):
        f = lp.get("field")
        if f not in fields:
            raise SchemaError(f"loops[{i}]: field {f!r} is not declared")
        if f in seen:
            raise SchemaError(f"loops[{i}]: field {f!r} bound to two loops")
        seen.add(f)
        if lp.get("mode", "single") not in LOOP_MODES:
            raise SchemaError(f"loops[{i}]: unknown mode {lp.get('mode')!r}")
    return CircuitDoc(fields, basis, elements,
                      loops, raw.get("selfenergies", []))


def serialize_circuit(doc: CircuitDoc) -> str:
    return dumps({"fields": doc.fields, "basis": doc.basis,
                  "elements": doc.elements, "loops": doc.loops,
                  "selfenergies": doc.selfenergies})


def _gate_params(el: dict) -> dict:
    out = {}
    for key, val in el.get("params", {}).items():
        if key in ("g", "d") and isinstance(val, dict):
            out[key] = json_to_complex(val)
        else:
            out[key] = val
    return out


def _self_energy_from_doc(entry: dict, g: complex) -> RatMat:
    kind = entry.get("kind")
    params = dict(entry.get("params", {}))
    if kind == "detuning":
        return smatrix.linear_self_energy("detuning", omega=params["omega"]).as_ratmat()
    if kind == "squeezing":
        params.setdefault("g", g)
        return smatrix.linear_self_energy("squeezing", **params).as_ratmat()
    if kind == "nonlinear":
        order = int(params.pop("order", 1))
        p = nonlinear.NonlinearParams(
            lam=float(params["lambda"]),
            v=json_to_complex(params.get("v", 0.0)),
            g=params.get("g", g), omega=float(params.get("omega", 0.0)))
        K = nonlinear._total_self_energy(p, order)
        return K
    raise SchemaError(f"unknown self-energy kind {kind!r}")


@dataclass
class BuiltCircuit:
    doc: CircuitDoc
    system: closure.ClosedSystem | None   # None for static circuits
    static: RatMat | None
    offset: np.ndarray | None
    ports: tuple[str, ...]


def build_circuit(doc: CircuitDoc) -> BuiltCircuit:
    """Turn a parsed document into a closed system or a static map."""
    work_basis = ANNIHILATION if doc.basis == ANNIHILATION else DOUBLED
    gates = []
    offsets = []
    for el in doc.elements:
        params = _gate_params(el)
        gate = make_gate(el["type"], **params)
        ports = list(el.get("ports", []))
        if isinstance(gate, AffineMap):
            offsets.append((gate, ports))
            continue
        if gate.basis == ANNIHILATION and work_basis == DOUBLED:
            gate = lift_to_doubled(gate)
        elif gate.basis == DOUBLED and work_basis == ANNIHILATION:
            raise SchemaError(
                f"gate {el['type']!r} needs the doubled basis; set 'basis'")
        gates.append((gate, ports))

    slot = 1 if work_basis == ANNIHILATION else 2
    n_slots = slot * len(doc.fields)

    if doc.loops:
        if offsets:
            raise SchemaError("displacement elements cannot be closed into loops")
        if not gates:
            raise SchemaError("loops need at least one gate element")
        reac, order = eliminate_internal(gates)
        loop_map = {}
        for lp in doc.loops:
            fidx = list(order).index(lp["field"])
            spec = closure.LoopSpec(
                kind=LOOP_MODES[lp.get("mode", "single")],
                l=lp.get("l"), n0=int(lp.get("n0", 0)),
                omega0=lp.get("omega0"),
                modes=tuple(lp["modes"]) if "modes" in lp else None)
            loop_map[fidx] = spec
        system = closure.close(reac, loop_map, port_names=list(order))
        if doc.selfenergies:
            system = _dress(doc, gates, loop_map, system)
        return BuiltCircuit(doc, system, None, None, system.ports)

    # static circuit: fold gates and displacements into linear + offset
    P = np.eye(n_slots, dtype=complex)
    rational = any(not g.is_constant for g, _ in gates)
    if rational:
        raise SchemaError("time-varying gates need a loop to close them")
    offset = np.zeros(n_slots, dtype=complex)
    index = {f: i for i, f in enumerate(doc.fields)}

    def embed_idx(ports):
        idx = []
        for p in ports:
            base = index[p] * slot
            idx.extend(range(base, base + slot))
        return idx

    for el in doc.elements:
        params = _gate_params(el)
        gate = make_gate(el["type"], **params)
        ports = list(el.get("ports", []))
        if isinstance(gate, AffineMap):
            if work_basis == ANNIHILATION:
                raise SchemaError("displacement needs the doubled basis")
            idx = embed_idx(ports)
            off = np.zeros(n_slots, dtype=complex)
            off[idx] = gate.offset
            offset = offset + off
            continue
        if gate.basis == ANNIHILATION and work_basis == DOUBLED:
            gate = lift_to_doubled(gate)
        emb = np.eye(n_slots, dtype=complex)
        idx = embed_idx(ports)
        emb[np.ix_(idx, idx)] = cayley(gate)
        P = emb @ P
        offset = emb @ offset
    if doc.basis == QUADRATURE:
        from .gates import _quad_rotation
        rot = _quad_rotation(n_slots)
        P = to_quadrature(P)
        offset = rot @ offset
        labels = [lab for f in doc.fields for lab in (f + ".xi", f + ".eta")]
    else:
        labels = [lab for f in doc.fields
                  for lab in ([f] if slot == 1 else (f, f + ".dag"))]
    return BuiltCircuit(doc, None, RatMat.from_const(P), offset, tuple(labels))


def _dress(doc, gates, loop_map, system) -> closure.ClosedSystem:
    su2_elements = [el for el in doc.elements if el["type"] == "su2"]
    if len(doc.elements) != 1 or not su2_elements or len(loop_map) != 1:
        raise SchemaError("self-energies attach to a single closed su2 gate")
    g = json_to_complex(su2_elements[0].get("params", {}).get("g", 0.0))
    K = None
    for entry in doc.selfenergies:
        Ke = _self_energy_from_doc(entry, g)
        K = Ke if K is None else K + Ke
    spec = list(loop_map.values())[0]
    return smatrix.dressed_external(g, K, spec)


def _transfer_of(built: BuiltCircuit) -> RatMat:
    if built.system is not None:
        return built.system.transfer()
    return built.static


def _realization_of(built: BuiltCircuit) -> StateSpace:
    if built.system is not None:
        if not built.system.is_rational:
            raise SchemaError("transcendental loop: no finite realization")
        return built.system.realization
    return StateSpace.pure_gain(built.static.constant_value())


def _load_doc_or_system(path: str):
    with open(path, "r", encoding="utf-8") as fh:
        text = fh.read()
    try:
        raw = json.loads(text)
    except json.JSONDecodeError as e:
        raise SchemaError(f"invalid JSON at line {e.lineno}, column {e.colno}: {e.msg}") from e
    if isinstance(raw, dict) and {"A", "B", "C", "D"} <= set(raw):
        return json_to_statespace(raw)
    return build_circuit(parse_circuit(text))


def _emit(args, payload: str) -> None:
    if args.out:
        with open(args.out, "w", encoding="utf-8") as fh:
            fh.write(payload + "\n")
    else:
        sys.stdout.write(payload + "\n")


def _eq_tol(args) -> float:
    env = os.environ.get("QSYS_TOL_EQ")
    if env is not None:
        return float(env)
    return args.tol_eq


def _cmd_tf(args) -> int:
    built = build_circuit(parse_circuit(open(args.circuit).read()))
    if args.statespace:
        payload = dumps(statespace_to_json(_realization_of(built)))
    else:
        tf = _transfer_of(built)
        doc = {"ports": list(built.ports), "transfer": ratmat_to_json(tf)}
        if built.offset is not None and np.any(built.offset):
            doc["offset"] = [serialize.complex_to_json(x) for x in built.offset]
        payload = dumps(doc)
    _emit(args, payload)
    return 0


def _cmd_poles(args) -> int:
    target = _load_doc_or_system(args.circuit)
    ss = target if isinstance(target, StateSpace) else _realization_of(target)
    vals = ssm.poles(ss)
    _emit(args, dumps([serialize.complex_to_json(v) for v in vals]))
    return 0


def _cmd_zeros(args) -> int:
    target = _load_doc_or_system(args.circuit)
    ss = target if isinstance(target, StateSpace) else _realization_of(target)
    vals = ssm.transmission_zeros(ss)
    _emit(args, dumps([serialize.complex_to_json(v) for v in vals]))
    return 0


def _canonical_transfer(target) -> RatMat:
    """Transfer matrix reordered to the canonical (u1; u1^ddag) layout."""
    if isinstance(target, StateSpace):
        return target.transfer_function()
    built = target
    tf = _transfer_of(built)
    n = tf.shape[0]
    if n % 2:
        raise SchemaError("canonical checks need an even number of ports")
    basis = built.doc.basis if built.system is None else built.system.basis
    k = n // 2
    if basis == DOUBLED:
        R = symmetry.interleaved_to_canonical(k)
    elif basis == QUADRATURE:
        R = symmetry.quadrature_to_canonical(k)
    else:
        return tf
    Rm = RatMat.from_const(R)
    return Rm @ tf @ RatMat.from_const(np.linalg.inv(R))


def _cmd_check(args) -> int:
    target = _load_doc_or_system(args.circuit)
    tol = _eq_tol(args)
    if args.what == "pi-orthogonal":
        tf = _canonical_transfer(target)
        k = tf.shape[0] // 2
        pi = symmetry.PiForm(k, args.stat)
        ok = symmetry.is_pi_orthogonal(tf, pi, tol)
        _emit(args, dumps({"pass": bool(ok), "statistics": args.stat}))
        return 0 if ok else 1
    if args.what == "pz-symmetry":
        ss = target if isinstance(target, StateSpace) else _realization_of(target)
        report = symmetry.pole_zero_symmetry(ss, args.tol_root)
        _emit(args, dumps({
            "pass": bool(report.ok),
            "pairs": [[serialize.complex_to_json(a), serialize.complex_to_json(b)]
                      for a, b in report.pairs],
            "residuals": list(report.residuals),
            "unpaired": [serialize.complex_to_json(x) for x in report.unpaired],
        }))
        return 0 if report.ok else 1
    raise SchemaError(f"unknown check {args.what!r}")


def _parse_kv(spec: str) -> tuple[str, dict]:
    kind, _, rest = spec.partition(":")
    params = {}
    if rest:
        for item in rest.split(","):
            key, _, val = item.partition("=")
            try:
                params[key] = complex(val) if ("j" in val) else float(val)
            except ValueError as e:
                raise SchemaError(f"cannot parse parameter {item!r}") from e
    return kind, params


def _cmd_dyson(args) -> int:
    raw = json.loads(open(args.bare).read() if os.path.exists(args.bare) else args.bare)
    if isinstance(raw, dict) and "num" in raw:
        bare = RatMat([[serialize.json_to_ratfun(raw)]])
    else:
        bare = serialize.json_to_ratmat(raw)
    kind, params = _parse_kv(args.selfenergy)
    if kind in ("detuning", "squeezing"):
        K = smatrix.linear_self_energy(kind, **params).as_ratmat()
    elif kind == "nonlinear":
        order = int(params.pop("order", 1))
        p = nonlinear.NonlinearParams(lam=params["lambda"], v=params.get("v", 0.0),
                                      g=params.get("g", 1.0),
                                      omega=params.get("omega", 0.0))
        K = nonlinear._total_self_energy(p, order)
    else:
        raise SchemaError(f"unknown self-energy kind {kind!r}")
    dressed = smatrix.dyson(bare, K)
    _emit(args, dumps({"dressed": ratmat_to_json(dressed)}))
    return 0


def _cmd_resum(args) -> int:
    kind, params = _parse_kv(args.setting)
    from .gates import make_gate as mg
    if kind == "su2":
        G = np.asarray(mg("su2", g=params.get("g", 1.0)).matrix)
        X = 2 * G
    elif kind in ("squeeze", "qnd", "xx", "cross_squeeze"):
        X = smatrix.off_diagonal_doubling(mg(kind, g=params.get("g", 0.5)).matrix)
    else:
        raise SchemaError(f"unknown setting {kind!r}")
    n = X.shape[0]
    delta = 0.5 * np.eye(n)
    closed = smatrix.resum(X, delta, direct=np.eye(n))
    trunc = smatrix.resum(X, delta, direct=np.eye(n), mode=args.order)
    err = float(np.linalg.norm(closed.value - trunc.value, 2))
    _emit(args, dumps({
        "closed": serialize.matrix_to_json(closed.value),
        "truncated": serialize.matrix_to_json(trunc.value),
        "order": args.order,
        "spectral_radius": trunc.spectral_radius,
        "bound": trunc.bound,
        "max_error": err,
    }))
    return 0


def _cmd_selfenergy(args) -> int:
    if args.family != "nonlinear":
        raise SchemaError("only the nonlinear self-energy family is exposed")
    p = nonlinear.NonlinearParams(lam=args.lam, v=json_to_complex(json.loads(args.v)),
                                  g=args.g, omega=args.omega)
    K = nonlinear._total_self_energy(p, args.order)
    poles = sorted({z for e in (K[0, 0], K[0, 1], K[1, 0], K[1, 1])
                    for z in e.poles()}, key=lambda z: (z.real, z.imag))
    _emit(args, dumps({
        "kernel": ratmat_to_json(K),
        "poles": [serialize.complex_to_json(z) for z in poles],
    }))
    return 0


def _cmd_spin(args) -> int:
    sp = nonlinear.SpinParams(e1=args.e1, e2=args.e2, g=args.g, kappa=args.kappa)
    if args.what == "decay":
        amp = nonlinear.spin_decay_amplitude(sp)
        payload = {"amplitude": serialize.ratfun_to_json(amp),
                   "poles": [serialize.complex_to_json(z) for z in amp.poles()]}
    elif args.what == "transfer":
        tf = nonlinear.spin_in_cavity_transfer(sp)
        payload = {"transfer": ratmat_to_json(tf)}
    else:
        raise SchemaError(f"unknown spin subcommand {args.what!r}")
    _emit(args, dumps(payload))
    return 0


def _cmd_gw(args) -> int:
    f1 = nonlinear.gw_sensitivity(args.kappa, args.lam, args.g,
                                  args.omega, args.h, args.order)
    payload = {"sensitivity": serialize.ratfun_to_json(f1),
               "poles": [serialize.complex_to_json(z) for z in f1.poles()]}
    _emit(args, dumps(payload))
    return 0


def _cmd_chain(args) -> int:
    target = _load_doc_or_system(args.circuit)
    if args.statespace:
        ss = target if isinstance(target, StateSpace) else _realization_of(target)
        rep_ss = (chainscatter.dual_chain_statespace(ss) if args.dual
                  else chainscatter.chain_statespace(ss))
        payload = {"flavor": "dual" if args.dual else "chain",
                   "realization": statespace_to_json(rep_ss)}
    else:
        tf = (target.transfer_function() if isinstance(target, StateSpace)
              else _transfer_of(target))
        rep = chainscatter.dual_chain(tf) if args.dual else chainscatter.chain(tf)
        payload = {"flavor": rep.flavor, "lambda": ratmat_to_json(rep.lam)}
    _emit(args, dumps(payload))
    return 0


def _cmd_response(args) -> int:
    built = build_circuit(parse_circuit(open(args.circuit).read()))
    try:
        w0, w1, n = args.grid.split(":")
        w0, w1, n = float(w0), float(w1), int(n)
    except ValueError as e:
        raise SchemaError(f"grid must be w0:w1:N, got {args.grid!r}") from e
    ports = built.ports
    header = ["omega"]
    for i in ports:
        for j in ports:
            header.append(f"{i}_{j}_re")
            header.append(f"{i}_{j}_im")
    lines = [",".join(header)]
    if n > 0:
        omegas = np.linspace(w0, w1, n)
        for w in omegas:
            if built.system is not None:
                val = built.system.eval(1j * w)
            else:
                val = built.static.constant_value()
            row = ["%.12e" % w]
            for i in range(len(ports)):
                for j in range(len(ports)):
                    row.append("%.12e" % val[i, j].real)
                    row.append("%.12e" % val[i, j].imag)
            lines.append(",".join(row))
    _emit(args, "\n".join(lines))
    return 0


def make_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(prog="qsys",
                                 description="quantum gates and systems as transfer functions")
    ap.add_argument("--out", help="write output to a file instead of stdout")
    ap.add_argument("--tol-rank", type=float, default=1e-9, dest="tol_rank")
    ap.add_argument("--tol-root", type=float, default=1e-8, dest="tol_root")
    ap.add_argument("--tol-eq", type=float, default=1e-9, dest="tol_eq")
    sub = ap.add_subparsers(dest="command", required=True)

    p = sub.add_parser("tf", help="transfer function of a circuit")
    p.add_argument("circuit")
    p.add_argument("--statespace", action="store_true")
    p.set_defaults(func=_cmd_tf)

    p = sub.add_parser("poles", help="poles of a circuit or system")
    p.add_argument("circuit")
    p.set_defaults(func=_cmd_poles)

    p = sub.add_parser("zeros", help="transmission zeros")
    p.add_argument("circuit")
    p.set_defaults(func=_cmd_zeros)

    p = sub.add_parser("check", help="structural checks")
    p.add_argument("what", choices=["pi-orthogonal", "pz-symmetry"])
    p.add_argument("circuit")
    p.add_argument("--stat", choices=["boson", "fermion"], default="boson")
    p.set_defaults(func=_cmd_check)

    p = sub.add_parser("dyson", help="dress a bare propagator")
    p.add_argument("--bare", required=True, help="RatFun/RatMat JSON (file or literal)")
    p.add_argument("--selfenergy", required=True, help="kind:key=val,...")
    p.set_defaults(func=_cmd_dyson)

    p = sub.add_parser("resum", help="compare truncated and closed resummation")
    p.add_argument("--setting", required=True, help="gate:key=val,...")
    p.add_argument("--order", type=int, default=20)
    p.set_defaults(func=_cmd_resum)

    p = sub.add_parser("selfenergy", help="nonlinear self-energy")
    p.add_argument("family", choices=["nonlinear"])
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--v", default="0")
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--omega", type=float, default=0.0)
    p.add_argument("--order", type=int, default=1)
    p.set_defaults(func=_cmd_selfenergy)

    p = sub.add_parser("spin", help="spin-cavity results")
    p.add_argument("what", choices=["decay", "transfer"])
    p.add_argument("--e1", type=float, default=0.0)
    p.add_argument("--e2", type=float, default=0.0)
    p.add_argument("--g", type=float, default=0.0)
    p.add_argument("--kappa", type=float, default=0.0)
    p.set_defaults(func=_cmd_spin)

    p = sub.add_parser("gw", help="gravitational-wave sensitivity function")
    p.add_argument("what", choices=["sensitivity"])
    p.add_argument("--kappa", type=float, required=True)
    p.add_argument("--lambda", dest="lam", type=float, required=True)
    p.add_argument("--g", type=float, required=True)
    p.add_argument("--omega", type=float, required=True)
    p.add_argument("--h", type=float, required=True)
    p.add_argument("--order", type=int, default=2, choices=[2, 4])
    p.set_defaults(func=_cmd_gw)

    p = sub.add_parser("chain", help="chain-scattering representation")
    p.add_argument("circuit")
    p.add_argument("--dual", action="store_true")
    p.add_argument("--statespace", action="store_true")
    p.set_defaults(func=_cmd_chain)

    p = sub.add_parser("response", help="frequency response CSV")
    p.add_argument("circuit")
    p.add_argument("--grid", required=True, help="w0:w1:N")
    p.set_defaults(func=_cmd_response)
    return ap


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        return args.func(args)
    except QsysError as e:
        sys.stderr.write(dumps({"error": type(e).__name__, "message": str(e)}) + "\n")
        return 2
    except FileNotFoundError as e:
        sys.stderr.write(dumps({"error": "FileNotFound", "message": str(e)}) + "\n")
        return 2


if __name__ == "__main__":
    sys.exit(main())

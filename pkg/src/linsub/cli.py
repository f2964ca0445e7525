"""Command-line front end with deterministic JSON output.

Exit codes: 0 success, 2 input error, 3 infeasible request, 4 a residual
exceeded the tolerance.
"""

from __future__ import annotations

import argparse
import itertools
import json
import math
import sys
from dataclasses import dataclass
from typing import Any, Callable

import numpy as np

from . import applications as apps
from . import ordering, resource, synthesis
from .errors import (DegreeError, DimensionError, DomainError, InfeasibleError, LinsubError,
                     NodeCollisionError, SingularParameterError)
from .fock import (FockSpace, OperatorMatrix, annihilation, coherent_state, fock_state,
                   headroom_mask, phase_aligned_distance)
from .optics import BeamSplitterParams, Network

EXIT_OK, EXIT_INPUT, EXIT_INFEASIBLE, EXIT_TOLERANCE = 0, 2, 3, 4


class InputError(LinsubError):
    pass


@dataclass(frozen=True)
class RunConfig:
    tolerance: float = 1e-9
    cutoffs: tuple[int, ...] = ()
    seed: int = 0
    output_path: str | None = None

    def __post_init__(self):
        if not self.tolerance > 0:
            raise InputError("tolerance must be positive")
        if any(c < 1 for c in self.cutoffs):
            raise InputError("cutoffs must be at least 1")

    def cutoff(self, default: int) -> int:
        return self.cutoffs[0] if self.cutoffs else default


# -- JSON helpers -------------------------------------------------------------

def parse_complex(v: Any) -> complex:
    if isinstance(v, dict):
        if set(v) - {"re", "im"}:
            raise InputError(f"complex objects take only 're' and 'im', got {sorted(v)}")
        return complex(float(v.get("re", 0.0)), float(v.get("im", 0.0)))
    if isinstance(v, bool) or not isinstance(v, (int, float, complex)):
        raise InputError(f"expected a number or {{re, im}}, got {v!r}")
    return complex(v)


def _float(x: float) -> str:
    if math.isnan(x) or math.isinf(x):
        return "null"
    text = format(x + 0.0, ".17g")
    return text if any(ch in text for ch in ".en") else text + ".0"


def _plain(obj: Any) -> Any:
    if isinstance(obj, (np.bool_,)):
        return bool(obj)
    if isinstance(obj, np.integer):
        return int(obj)
    if isinstance(obj, np.floating):
        return float(obj)
    if isinstance(obj, (complex, np.complexfloating)):
        return {"re": float(obj.real), "im": float(obj.imag)}
    if isinstance(obj, np.ndarray):
        return [_plain(v) for v in obj.tolist()] if obj.dtype != complex else [_plain(v) for v in obj]
    if isinstance(obj, OperatorMatrix):
        return [[_plain(complex(v)) for v in row] for row in obj.entries]
    if isinstance(obj, dict):
        return {str(k): _plain(v) for k, v in obj.items()}
    if isinstance(obj, (list, tuple)):
        return [_plain(v) for v in obj]
    return obj


def dumps(obj: Any) -> str:
    """Canonical JSON: sorted keys, 17 significant digits, no NaN."""
    obj = _plain(obj)

    def enc(o) -> str:
        if o is None:
            return "null"
        if isinstance(o, bool):
            return "true" if o else "false"
        if isinstance(o, int):
            return str(o)
        if isinstance(o, float):
            return _float(o)
        if isinstance(o, str):
            return json.dumps(o)
        if isinstance(o, list):
            return "[" + ", ".join(enc(v) for v in o) + "]"
        if isinstance(o, dict):
            return "{" + ", ".join(json.dumps(k) + ": " + enc(o[k]) for k in sorted(o)) + "}"
        raise TypeError(f"cannot serialise {type(o).__name__}")

    return enc(obj) + "\n"


def _report(residuals: dict[str, float], cfg: RunConfig, **extra) -> tuple[dict, int]:
    ok = all(math.isfinite(v) and v < cfg.tolerance for v in residuals.values())
    out = {"ok": ok, "residuals": residuals, **extra}
    return out, EXIT_OK if ok else EXIT_TOLERANCE


def _stage_json(st: synthesis.Stage) -> dict:
    return {"monomial": st.algebra.to_json(), "beta": complex(st.beta), "alpha": complex(st.alpha),
            "gamma": complex(st.gamma),
            "device_params": dict(st.device) if st.device is not None else None,
            "abstract": st.abstract, "kind": st.kind}


def _schedule_json(s: synthesis.SynthesisSchedule) -> dict:
    return {"stages": [_stage_json(st) for st in s.stages], "prefactor": complex(s.prefactor),
            "leading_coefficient": complex(s.leading)}


def _monomial(raw) -> synthesis.MonomialSpec:
    if not isinstance(raw, list) or not raw:
        raise InputError("monomial must be a non-empty list of [mode, bit] pairs")
    try:
        return synthesis.MonomialSpec(tuple((int(j), int(s)) for j, s in raw))
    except (TypeError, ValueError) as exc:
        raise InputError(f"bad monomial {raw!r}: {exc}") from exc


# -- synthesize ---------------------------------------------------------------

def cmd_synthesize(data: dict, cfg: RunConfig) -> tuple[dict, int]:
    target = data.get("target")
    if not isinstance(target, dict) or "kind" not in target:
        raise InputError("input needs a 'target' object with a 'kind'")
    kind = target["kind"]
    T1 = parse_complex(data.get("T1", 1.0))
    R1 = parse_complex(data["R1"]) if "R1" in data else None
    if kind in ("function_of_n", "exponential_zn"):
        N = data.get("N", target.get("N"))
        if N is None:
            if "values" not in target:
                raise InputError("give N for a z**n target")
            N = len(target["values"]) - 1
        N = int(N)
        mode = _monomial(data["monomial"]).modes[0] if "monomial" in data else 0
        if "values" in target:
            values = [parse_complex(v) for v in target["values"]]
            sched = synthesis.photon_number_schedule(values, N, T1, R1, mode)
        elif "z" in target:
            z = parse_complex(target["z"])
            values = [z ** n for n in range(N + 1)]
            sched = synthesis.exponential_zn_schedule(z, N, T1, R1, mode)
        else:
            raise InputError("function_of_n needs 'values' or 'z'")
        space = FockSpace.uniform(mode + 1, cfg.cutoff(N))
        y = synthesis.compose_schedule(space, sched)
        occ = space.occupations[:, mode]
        keep = occ <= N
        got = np.diag(y.entries)[keep]
        want = sched.prefactor * np.array([values[n] for n in occ[keep]])
        scale = max(1e-300, float(np.max(np.abs(want))))
        res = {"eigenvalue_relative": float(np.max(np.abs(got - want)) / scale)}
        return _report(res, cfg, schedule=_schedule_json(sched), stage_count=len(sched))
    if kind == "custom_poly":
        coeffs = [parse_complex(v) for v in target.get("coefficients", [])]
        if not coeffs:
            raise InputError("custom_poly needs coefficients")
        mono = _monomial(data.get("monomial"))
        dev = None
        if "device" in data:
            d = data["device"]
            dev = synthesis.JointDevice(T1, parse_complex(d.get("R1", R1 if R1 is not None else 0.0)),
                                        parse_complex(d.get("T2", 1.0)), parse_complex(d.get("R2", 0.0)))
        sched = synthesis.roots_to_schedule(coeffs, mono, T1, dev)
        n = len(sched)
        D = cfg.cutoff(n * mono.k + 3)
        space = FockSpace.uniform(max(mono.modes) + 1, D)
        y = synthesis.compose_schedule(space, sched)
        rhs = sched.prefactor * (synthesis.t_operator(space, mono.t_modes, T1) ** n
                                 @ synthesis.poly_operator(space, mono, coeffs[: n + 1]))
        mask = headroom_mask(space, n * mono.k)
        diff = np.abs(y.entries[:, mask] - rhs.entries[:, mask])
        scale = max(1e-300, float(np.max(np.abs(rhs.entries[:, mask]), initial=0.0)))
        res = {"product_identity": float(np.max(diff, initial=0.0)) / scale}
        return _report(res, cfg, schedule=_schedule_json(sched), stage_count=n)
    if kind == "ladder":
        N = int(data.get("N", target.get("N", 1)))
        terms = []
        for t in target.get("terms", []):
            terms.append((parse_complex(t["c"]), _monomial(t["monomial"])))
        if not terms:
            raise InputError("ladder needs at least one term")
        sched = synthesis.general_ladder(terms, N, T1)
        modes = max(max(a.modes) for _, a in terms) + 1
        D = cfg.cutoff(3 + len(sched))
        space = FockSpace.uniform(modes, D)
        y = synthesis.compose_schedule(space, sched)
        x = synthesis.ladder_product(space, terms, N)
        res = {}
        if len(sched):
            diff = y.entries / sched.prefactor - x.entries
            mask = headroom_mask(space, len(sched) * max(a.k for _, a in terms))
            if T1 == 1:
                res["ladder_identity"] = float(np.max(np.abs(diff[:, mask]), initial=0.0))
        return _report(res, cfg, schedule=_schedule_json(sched), stage_count=len(sched))
    raise InputError(f"unknown target kind {kind!r}")


# -- simulate -----------------------------------------------------------------

def _params(p: dict) -> BeamSplitterParams:
    return BeamSplitterParams(parse_complex(p["T"]), parse_complex(p["R"]), parse_complex(p.get("P", 1.0)))


def _mode_key(key: str):
    parts = [int(v) for v in str(key).split(",")]
    return parts[0] if len(parts) == 1 else tuple(parts)


def _prep_value(space: FockSpace, key, val):
    if isinstance(val, int) and not isinstance(val, bool):
        return val
    if isinstance(val, dict):
        if "fock" in val:
            return int(val["fock"])
        if "coherent" in val:
            m = key if isinstance(key, int) else None
            if m is None:
                raise InputError("coherent preparations act on a single mode")
            return coherent_state(FockSpace((space.cutoffs[m],)), 0, parse_complex(val["coherent"]))
        if "resource" in val:
            r = val["resource"]
            modes = key if isinstance(key, tuple) else (key,)
            spec = resource.ResourceSpec(tuple(r["bits"]), parse_complex(r.get("z", 1.0)))
            if len(spec.bits) != len(modes):
                raise InputError("resource bit count differs from its mode group")
            cut = space.cutoffs[modes[0]]
            if any(space.cutoffs[m] != cut for m in modes):
                raise InputError("resource modes must share a cutoff")
            return resource.resource_state(spec, cut)
    raise InputError(f"cannot interpret preparation {val!r}")


def cmd_simulate(data: dict, cfg: RunConfig) -> tuple[dict, int]:
    if "cutoffs" in data:
        cutoffs = tuple(int(c) for c in data["cutoffs"])
    elif cfg.cutoffs:
        n = int(data.get("modes", len(cfg.cutoffs)))
        cutoffs = cfg.cutoffs if len(cfg.cutoffs) == n else (cfg.cutoffs[0],) * n
    else:
        raise InputError("give 'cutoffs' in the input or --cutoff flags")
    space = FockSpace(cutoffs)
    net = Network(space)
    for el in data.get("elements", []):
        if "bs" in el:
            j, k = el["bs"]["modes"]
            net = net.bs(int(j), int(k), _params(el["bs"]["params"]))
        elif "phase" in el:
            net = net.phase(int(el["phase"]["mode"]), float(el["phase"]["phi"]))
        elif "kerr" in el:
            j, k = el["kerr"]["modes"]
            net = net.kerr(int(j), int(k), float(el["kerr"]["phi"]))
        else:
            raise InputError(f"unknown element {el!r}")
    prep = {}
    for key, val in data.get("prep", {}).items():
        k = _mode_key(key)
        prep[k] = _prep_value(space, k, val)
    bra = {_mode_key(k): int(v) for k, v in data.get("pattern", {}).items()}
    y = net.conditional(prep, bra)
    signal = data.get("signal_modes")
    if signal is not None:
        free = sorted(set(range(space.num_modes)) - {m for k in prep for m in (k if isinstance(k, tuple) else (k,))})
        if sorted(int(m) for m in signal) != free:
            raise InputError(f"signal modes {signal} differ from unprepared modes {free}")
    extra: dict[str, Any] = {"Y": y, "in_cutoffs": list(y.in_space.cutoffs), "out_cutoffs": list(y.out_space.cutoffs)}
    if "input_state" in data:
        idx = [int(v) for v in data["input_state"]["fock"]]
        psi = fock_state(y.in_space, idx)
        out = y.entries @ psi.amplitudes
        extra["probability"] = float(np.vdot(out, out).real)
    res: dict[str, float] = {}
    if y.in_space == y.out_space and data.get("expect") == "identity":
        res["identity"] = float(np.max(np.abs(y.entries - np.eye(y.in_space.dim)), initial=0.0))
    return _report(res, cfg, **extra)


# -- verify -------------------------------------------------------------------

def _verify_cross_kerr(opts: dict, cfg: RunConfig) -> tuple[dict, dict]:
    phi = float(opts.get("phi", math.pi))
    M = int(opts.get("M", 1))
    sched, y = apps.synthesize_cross_kerr(apps.KerrTarget(phi, M, int(opts.get("k_int", 1))),
                                          parse_complex(opts.get("xi", 0.5)))
    u = apps.kerr_target_operator(phi, M)
    rng = np.random.default_rng(cfg.seed)
    ps = []
    for _ in range(10):
        v = rng.normal(size=u.in_space.dim) + 1j * rng.normal(size=u.in_space.dim)
        v /= np.linalg.norm(v)
        w = y.entries @ v
        ps.append(float(np.vdot(w, w).real))
    p_mean = float(np.mean(ps))
    res = {"infidelity": max(0.0, 1.0 - apps.fidelity(u, y)),
           "probability_spread": (max(ps) - min(ps)) / max(p_mean, 1e-300)}
    return res, {"probability": p_mean, "stages": len(sched), "N": sched.meta["N"]}


def _verify_mirror(opts: dict, cfg: RunConfig) -> tuple[dict, dict]:
    n = int(opts.get("modes", 3))
    D = int(opts.get("cutoff", cfg.cutoff(2)))
    space = FockSpace.uniform(n, D)
    worst_h = worst_u = 0.0
    for p in itertools.permutations(range(n)):
        u = apps.n_mode_mirror(space, apps.PermutationSpec(p))
        for j in range(n):
            lhs = u.H @ annihilation(space, j) @ u
            worst_h = max(worst_h, float(np.max(np.abs(lhs.entries - annihilation(space, p[j]).entries))))
        worst_u = max(worst_u, float(np.max(np.abs((u.H @ u).entries - np.eye(space.dim)))))
    return {"heisenberg": worst_h, "unitarity": worst_u}, {"permutations": math.factorial(n)}


def _verify_teleport(opts: dict, cfg: RunConfig) -> tuple[dict, dict]:
    D = int(opts.get("cutoff", cfg.cutoff(4)))
    space = FockSpace((D, D))
    exact = apps.teleport_identity(space, 0, 1)
    mirror = apps.teleport_identity(space, 0, 1, "mirror")
    back = apps.teleport_identity(space, 1, 0) @ exact
    return ({"construction_match": float(np.max(np.abs(exact.entries - mirror.entries))),
             "round_trip": float(np.max(np.abs(back.entries - np.eye(back.in_space.dim))))}, {})


def _verify_multiphoton(opts: dict, cfg: RunConfig) -> tuple[dict, dict]:
    z = parse_complex(opts.get("z", 0.6 + 0.3j))
    worst_amp = worst_norm = 0.0
    for k in range(1, int(opts.get("kmax", 3)) + 1):
        for N in range(int(opts.get("Nmax", 3)) + 1):
            state, _ = apps.prep_multiphoton(z, N, k)
            target = apps.multiphoton_target(z, N, k)
            worst_amp = max(worst_amp, phase_aligned_distance(state.amplitudes, target.amplitudes)[0])
            worst_norm = max(worst_norm, abs(abs(state.amplitudes[0]) - apps.multiphoton_norm(z, N)))
    return {"amplitudes": worst_amp, "normalization": worst_norm}, {}


SCENARIOS: dict[str, Callable[[dict, RunConfig], tuple[dict, dict]]] = {
    "cross-kerr": _verify_cross_kerr,
    "mirror": _verify_mirror,
    "teleport": _verify_teleport,
    "multiphoton": _verify_multiphoton,
}


def cmd_verify(data: dict, cfg: RunConfig) -> tuple[dict, int]:
    names = data.get("scenarios", list(SCENARIOS))
    if isinstance(names, str):
        names = [names]
    unknown = [n for n in names if n not in SCENARIOS]
    if unknown:
        raise InputError(f"unknown scenarios {unknown}; choose from {sorted(SCENARIOS)}")
    results, flat = {}, {}
    for name in names:
        res, info = SCENARIOS[name](data.get(name, {}), cfg)
        ok = all(v < cfg.tolerance for v in res.values())
        results[name] = {"ok": ok, "residuals": res, **info}
        flat.update({f"{name}.{k}": v for k, v in res.items()})
    return _report(flat, cfg, scenarios=results)


# -- prep-state ---------------------------------------------------------------

def cmd_prep_state(data: dict, cfg: RunConfig) -> tuple[dict, int]:
    if "bits" not in data and "k" not in data:
        raise InputError("prep-state needs 'bits' or 'k'")
    bits = data.get("bits")
    if bits is None:
        k = int(data["k"])
        bits = [0] + [1] * (k - 1) if k > 1 else [0]
    spec = resource.ResourceSpec(tuple(int(b) for b in bits), parse_complex(data.get("z", 1.0)))
    opt = {name: parse_complex(data[name]) for name in ("T", "R", "alpha") if name in data}
    xi = parse_complex(data["xi"]) if "xi" in data else None
    prepared = resource.build_resource(spec, data.get("cloner", "ideal"), opt.get("T"), opt.get("R"),
                                       opt.get("alpha"), data.get("zero_position"), xi)
    target = resource.resource_state(spec)
    dist, _ = phase_aligned_distance(prepared.state.amplitudes, target.amplitudes)
    p_formula = prepared.p_condition * prepared.p_cloners
    res = {"target_distance": dist, "probability_formula": abs(prepared.p - p_formula) / p_formula}
    spec_json = {"bits": list(spec.bits), "z": spec.z, "cloner": data.get("cloner", "ideal"),
                 "T": prepared.T, "R": prepared.R, "alpha": prepared.alpha}
    return _report(res, cfg, amplitudes=prepared.state.amplitudes, probability=prepared.p, p=prepared.p,
                   global_phase=prepared.global_phase, spec=spec_json)


# -- ordering-check -----------------------------------------------------------

def cmd_ordering_check(data: dict, cfg: RunConfig) -> tuple[dict, int]:
    res = ordering.round_trip_residuals(int(data.get("kmax", 5)),
                                        tuple(float(s) for s in data.get("s_values", ordering.S_GRID)),
                                        int(data.get("cutoff", cfg.cutoff(12))),
                                        N_bridge=int(data.get("N_bridge", 6)))
    return _report(res, cfg)


COMMANDS = {
    "synthesize": (cmd_synthesize, True),
    "simulate": (cmd_simulate, True),
    "verify": (cmd_verify, False),
    "prep-state": (cmd_prep_state, True),
    "ordering-check": (cmd_ordering_check, False),
}


def build_parser() -> argparse.ArgumentParser:
    common = argparse.ArgumentParser(add_help=False)
    common.add_argument("--tolerance", type=float, default=1e-9)
    common.add_argument("--cutoff", type=int, action="append", default=[],
                        help="photon cutoff; repeat once per mode")
    common.add_argument("--seed", type=int, default=0)
    common.add_argument("--output", default=None, help="write JSON here instead of stdout")
    parser = argparse.ArgumentParser(prog="linsub", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name, (_, needs_input) in COMMANDS.items():
        p = sub.add_parser(name, parents=[common])
        p.add_argument("input", nargs="?", default=None,
                       help="JSON input file, '-' for stdin" + ("" if needs_input else " (optional)"))
    return parser


def _read_input(path: str | None, needs_input: bool) -> dict:
    if path is None and not needs_input:
        return {}
    if path is None or path == "-":
        text = sys.stdin.read()
    else:
        with open(path, encoding="utf-8") as fh:
            text = fh.read()
    if not text.strip():
        if needs_input:
            raise InputError("empty input")
        return {}
    data = json.loads(text)
    if not isinstance(data, dict):
        raise InputError("input must be a JSON object")
    return data


def run(argv: list[str] | None = None) -> tuple[str, int, str | None]:
    """Run one command; returns ``(json_text, exit_code, output_path)``."""
    parser = build_parser()
    args = parser.parse_args(argv)
    func, needs_input = COMMANDS[args.command]
    output = args.output
    try:
        cfg = RunConfig(args.tolerance, tuple(args.cutoff), args.seed, output)
        data = _read_input(args.input, needs_input)
        payload, code = func(data, cfg)
    except (InfeasibleError, DegreeError, NodeCollisionError, SingularParameterError) as exc:
        payload, code = {"ok": False, "error": {"kind": "infeasible", "reason": type(exc).__name__,
                                                "message": str(exc)}}, EXIT_INFEASIBLE
    except (InputError, DomainError, DimensionError, json.JSONDecodeError, KeyError, TypeError,
            ValueError, OSError) as exc:
        payload, code = {"ok": False, "error": {"kind": "input", "reason": type(exc).__name__,
                                                "message": str(exc)}}, EXIT_INPUT
    payload["command"] = args.command
    return dumps(payload), code, output


def main(argv: list[str] | None = None) -> int:
    text, code, output = run(argv)
    if output:
        with open(output, "w", encoding="utf-8") as fh:
            fh.write(text)
    else:
        sys.stdout.write(text)
    return code


if __name__ == "__main__":
    sys.exit(main())

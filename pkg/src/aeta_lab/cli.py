"""``aeta-lab``: run experiment sweeps from a JSON config and write CSV/JSON reports.

Usage::

    aeta-lab run --config exp.json --set source.kind=known --out results/
    aeta-lab verify --config exp.json

A CSV report starts with one timestamped comment line followed by the header;
everything after the first line depends only on the config and seed.
"""

from __future__ import annotations

import argparse
import copy
import csv
import datetime as dt
import hashlib
import io
import json
import math
import os
import sys
import tempfile
from dataclasses import dataclass, field

from aeta_lab import attacks, bounds, inference
from aeta_lab.channel import NOISE_KINDS, PlaintextSource, SystemParams
from aeta_lab.infoquad import QUAD_TOL
from aeta_lab.keystream import (
    MAX_REGISTER_LENGTH,
    PRIMITIVE_TAPS,
    dependency_distance,
    from_hex,
    segment_bits,
)

EXIT_OK, EXIT_VALIDATION, EXIT_CAP, EXIT_IO = 0, 2, 3, 4

QUANTITIES = (
    "equivocation", "spurious", "pi", "U", "seqinfo", "bounds_overlay",
    "map_attack", "unicity", "majority_vote", "identity_check",
)
SWEEPLESS = ("U", "unicity")
SEQINFO_QUANTITIES = ("seqinfo", "bounds_overlay", "identity_check")

DEFAULTS = {
    "cipher": "alphaeta",
    "noise": {"kind": "full_gaussian"},
    "source": {"kind": "uniform"},
    "trials": 1000,
    "master_seed": 0,
    "spurious_method": "sample",
    "estimator": "control",
    "unicity": {"p": 0.5, "n_max": 64},
}


class ValidationError(ValueError):
    pass


class CapViolation(ValueError):
    pass


@dataclass
class ExperimentConfig:
    params: SystemParams
    source: PlaintextSource
    quantity: str
    sweep: list[int]
    trials: int
    master_seed: int
    raw: dict = field(repr=False)

    @property
    def params_hash(self) -> str:
        return params_hash(self.raw)


# ---------------------------------------------------------------------------
# config handling


def _merge(base: dict, over: dict) -> dict:
    out = copy.deepcopy(base)
    for k, v in over.items():
        if isinstance(v, dict) and isinstance(out.get(k), dict):
            out[k] = _merge(out[k], v)
        else:
            out[k] = v
    return out


def set_path(cfg: dict, assignment: str) -> None:
    """Apply one ``dot.path=value`` override; the value is parsed as JSON when possible."""
    if "=" not in assignment:
        raise ValidationError(f"--set expects key=value, got {assignment!r}")
    path, text = assignment.split("=", 1)
    try:
        value = json.loads(text)
    except json.JSONDecodeError:
        value = text
    keys = path.strip().split(".")
    node = cfg
    for k in keys[:-1]:
        nxt = node.get(k)
        if not isinstance(nxt, dict):
            nxt = node[k] = {}
        node = nxt
    node[keys[-1]] = value


def params_hash(raw: dict) -> str:
    blob = json.dumps(raw, sort_keys=True, separators=(",", ":"))
    return hashlib.sha256(blob.encode()).hexdigest()[:16]


def _int(cfg, key, lo=None):
    v = cfg.get(key)
    if isinstance(v, bool) or not isinstance(v, int):
        raise ValidationError(f"{key} must be an integer, got {v!r}")
    if lo is not None and v < lo:
        raise ValidationError(f"{key} must be >= {lo}, got {v}")
    return v


def parse_sweep(spec) -> list[int]:
    if spec is None:
        raise ValidationError("sweep is required for this quantity")
    if isinstance(spec, dict):
        try:
            start, stop = int(spec["start"]), int(spec["stop"])
            step = int(spec.get("step", 1))
        except (KeyError, TypeError, ValueError) as exc:
            raise ValidationError(f"sweep range needs integer start/stop[/step]: {exc}") from None
        if step < 1:
            raise ValidationError("sweep step must be >= 1")
        values = list(range(start, stop + 1, step))
    elif isinstance(spec, list):
        if not all(isinstance(v, int) and not isinstance(v, bool) for v in spec):
            raise ValidationError("sweep list must contain integers")
        values = list(spec)
    else:
        raise ValidationError("sweep must be a list of integers or {start, stop, step}")
    if not values:
        raise ValidationError("sweep is empty")
    if min(values) < 0:
        raise ValidationError("sweep values must be non-negative")
    return values


def _source(cfg) -> PlaintextSource:
    src = cfg.get("source") or {}
    kind = src.get("kind", "uniform")
    if kind == "known":
        text = src.get("bits_hex")
        if text is None:
            return PlaintextSource.known()
        try:
            bits = from_hex(str(text), src.get("n_bits"))
        except ValueError:
            raise ValidationError(f"source.bits_hex is not hexadecimal: {text!r}") from None
        return PlaintextSource.known(bits)
    if kind == "uniform":
        return PlaintextSource.uniform()
    if kind == "bernoulli":
        return PlaintextSource.bernoulli(src.get("p", 0.5))
    raise ValidationError(f"unknown source.kind {kind!r}")


def derived_quantities(cfg: dict) -> dict:
    """Quantities that follow from the config without building tables."""
    L, M = cfg["L"], cfg.get("M", 4)
    out = {"L": L, "M": M, "H_K": bounds.key_entropy(L), "n_keys": (1 << L) - 1}
    if cfg.get("cipher") == "asc":
        out.update(seg_bits=1, n_dep=float(L), n_dep_floor=L)
        return out
    seg = segment_bits(M)
    frac, floor = dependency_distance(L, M)
    out.update(seg_bits=seg, n_dep=float(frac), n_dep_floor=floor)
    return out


def cap_violations(cfg: dict, sweep) -> list[str]:
    """Enumeration caps a run of this config would hit, checked before any work."""
    out = []
    L, q = cfg["L"], cfg.get("quantity")
    if q == "U":
        return out
    if L > inference.MAX_POSTERIOR_L:
        out.append(f"L={L} exceeds the key-enumeration cap of {inference.MAX_POSTERIOR_L}")
    if q in SEQINFO_QUANTITIES and sweep:
        seg = 1 if cfg.get("cipher") == "asc" else segment_bits(cfg.get("M", 4))
        bits = max(sweep) * seg
        if L > inference.MAX_SEQINFO_L:
            out.append(f"L={L} exceeds the signal-sequence cap of {inference.MAX_SEQINFO_L}")
        if bits > inference.MAX_SEQINFO_BITS:
            out.append(
                f"n*seg_bits={bits} exceeds the signal-sequence cap of {inference.MAX_SEQINFO_BITS}"
            )
        if L + bits > inference.MAX_JOINT_BITS:
            out.append(f"L+n*seg_bits={L + bits} exceeds the joint cap of {inference.MAX_JOINT_BITS}")
    if q == "majority_vote" and sweep and not out:
        seg = 1 if cfg.get("cipher") == "asc" else segment_bits(cfg.get("M", 4))
        total = max(sweep) * math.ceil(((1 << L) - 1) / seg)
        if total > attacks.MAX_VOTE_SYMBOLS:
            out.append(f"{total} symbols exceed the majority-vote budget of {attacks.MAX_VOTE_SYMBOLS}")
    return out


def load_config(path: str | None, overrides=(), seed=None) -> dict:
    cfg = {}
    if path is not None:
        try:
            with open(path) as fh:
                cfg = json.load(fh)
        except OSError as exc:
            raise OSError(f"cannot read config {path}: {exc}") from exc
        except json.JSONDecodeError as exc:
            raise ValidationError(f"config is not valid JSON: {exc}") from None
        if not isinstance(cfg, dict):
            raise ValidationError("config must be a JSON object")
    for item in overrides:
        set_path(cfg, item)
    if seed is not None:
        cfg["master_seed"] = seed
    return _merge(DEFAULTS, cfg)


def validate(cfg: dict) -> tuple[dict, list[int] | None]:
    """Check the raw config; returns it with the parsed sweep (or ``None``)."""
    _int(cfg, "L", 1)
    if cfg["L"] > MAX_REGISTER_LENGTH and "taps" not in cfg:
        pass  # reported as a cap violation
    elif "taps" not in cfg and cfg["L"] not in PRIMITIVE_TAPS:
        raise ValidationError(f"no shipped taps for L={cfg['L']}; give taps explicitly")
    if "taps" in cfg:
        taps = cfg["taps"]
        if not isinstance(taps, list) or not taps or not all(isinstance(t, int) for t in taps):
            raise ValidationError("taps must be a non-empty list of integers")
        if max(taps) != cfg["L"]:
            raise ValidationError(f"highest tap {max(taps)} must equal L={cfg['L']}")
        if min(taps) < 1:
            raise ValidationError("tap positions start at 1")
    if cfg.get("cipher") not in ("alphaeta", "asc"):
        raise ValidationError(f"cipher must be 'alphaeta' or 'asc', got {cfg.get('cipher')!r}")
    if cfg["cipher"] == "alphaeta":
        M = _int(cfg, "M", 4)
        if M & (M - 1):
            raise ValidationError(f"M must be a power of two, got {M}")
        has_s, has_n = "sigma" in cfg, "photon_N" in cfg
        if has_s == has_n:
            raise ValidationError("give exactly one of sigma and photon_N")
        val = cfg["sigma" if has_s else "photon_N"]
        if not isinstance(val, (int, float)) or isinstance(val, bool) or not val > 0:
            raise ValidationError("sigma/photon_N must be a positive number")
        kind = (cfg.get("noise") or {}).get("kind")
        if kind not in NOISE_KINDS:
            raise ValidationError(f"noise.kind must be one of {NOISE_KINDS}, got {kind!r}")
    q = cfg.get("quantity")
    if q not in QUANTITIES:
        raise ValidationError(f"quantity must be one of {QUANTITIES}, got {q!r}")
    if q == "U" and cfg["cipher"] != "alphaeta":
        raise ValidationError("U is defined for the alpha-eta channel only")
    _int(cfg, "trials", 1)
    _int(cfg, "master_seed", 0)
    sweep = None
    if q not in SWEEPLESS or cfg.get("sweep") is not None:
        sweep = parse_sweep(cfg.get("sweep"))
    if q == "majority_vote" and min(sweep) < 1:
        raise ValidationError("majority_vote periods must be >= 1")
    if q == "unicity":
        u = cfg.get("unicity") or {}
        p = u.get("p")
        if not isinstance(p, (int, float)) or not 0 < p <= 1:
            raise ValidationError(f"unicity.p must be in (0, 1], got {p!r}")
        if not isinstance(u.get("n_max"), int) or u["n_max"] < 1:
            raise ValidationError("unicity.n_max must be a positive integer")
    if cfg.get("spurious_method") not in ("sample", "conditional", "exact"):
        raise ValidationError("spurious_method must be sample, conditional or exact")
    if cfg.get("estimator") not in ("control", "direct"):
        raise ValidationError("estimator must be control or direct")
    source = (cfg.get("source") or {}).get("kind")
    if source not in ("known", "uniform", "bernoulli"):
        raise ValidationError(f"unknown source.kind {source!r}")
    if q == "majority_vote" and source != "uniform":
        raise ValidationError("majority_vote is a ciphertext-only attack; use source.kind=uniform")
    return cfg, sweep


def build(cfg: dict, sweep) -> ExperimentConfig:
    taps = cfg.get("taps")
    try:
        if cfg["cipher"] == "asc":
            params = SystemParams.asc(cfg["L"], taps)
        else:
            kw = {"sigma": cfg["sigma"]} if "sigma" in cfg else {"photon_N": cfg["photon_N"]}
            params = SystemParams.build(
                cfg["L"], cfg["M"], noise=cfg["noise"]["kind"], taps=taps, **kw
            )
        source = _source(cfg)
        if source.kind == "known" and source.bits is not None and sweep:
            inference.check_plaintext_length(source, max(sweep))
    except ValueError as exc:
        raise ValidationError(str(exc)) from None
    return ExperimentConfig(params, source, cfg["quantity"], sweep or [], cfg["trials"],
                            cfg["master_seed"], cfg)


# ---------------------------------------------------------------------------
# experiments


def _record(exp, n, value, std_error, trials, **extra):
    rec = {
        "quantity": exp.quantity, "params_hash": exp.params_hash, "n": n,
        "value": value, "std_error": std_error, "trials": trials, "seed": exp.master_seed,
    }
    rec.update(extra)
    return rec


def _rows(exp: ExperimentConfig, workers):
    """Yield ``(csv_row, json_record)`` pairs for the configured quantity."""
    p, src, q, T, seed, cfg = exp.params, exp.source, exp.quantity, exp.trials, exp.master_seed, exp.raw
    if q == "U":
        U = inference.per_symbol_info_U(p)
        note = f"quadrature, refinement tolerance {QUAD_TOL:g} bits"
        yield ({"n": 1, "value": U, "std_error": 0.0, "trials": 0},
               _record(exp, 1, U, 0.0, 0, sigma=p.sigma, photon_N=p.photon_N, note=note))
        return
    if q == "unicity":
        u = cfg["unicity"]
        n0 = attacks.unicity_distance(p, src, float(u["p"]), u["n_max"], T, seed, workers)
        yield ({"p": u["p"], "n_max": u["n_max"], "n0": n0, "trials": T},
               _record(exp, n0, n0, 0.0, T, p=u["p"], n_max=u["n_max"]))
        return
    for n in exp.sweep:
        if q == "equivocation":
            e = inference.key_equivocation(p, src, n, T, seed, workers)
        elif q == "spurious":
            e = inference.avg_spurious(p, src, n, T, seed, cfg["spurious_method"], workers)
        elif q == "pi":
            e = inference.pi_function(p, src, n, T, seed, workers)
        elif q == "seqinfo":
            e = inference.sequence_info(p, n, T, seed, src, cfg["estimator"], workers)
        elif q == "map_attack":
            e = attacks.map_attack_success(p, src, n, T, seed, workers).success_prob
        elif q == "majority_vote":
            r = attacks.majority_vote_attack(p, n, T, seed, workers)
            s, j = r.success_prob, r.joint_success
            yield ({"periods": n, "success": s.value, "std_error": s.std_error, "trials": T,
                    "joint_success": j.value, "joint_std_error": j.std_error},
                   _record(exp, n, s.value, s.std_error, T, periods=n, symbols=r.n,
                           joint_success=j.value, joint_std_error=j.std_error))
            continue
        elif q == "identity_check":
            c = inference.equivocation_identity_check(p, src, n, T, seed, workers, cfg["estimator"])
            yield ({"n": n, "lhs": c.lhs.value, "lhs_se": c.lhs.std_error, "rhs": c.rhs.value,
                    "rhs_se": c.rhs.std_error, "gap": c.gap, "gap_se": c.gap_se, "trials": T},
                   _record(exp, n, c.gap, c.gap_se, T, lhs=c.lhs.value, rhs=c.rhs.value))
            continue
        elif q == "bounds_overlay":
            row = bounds_overlay_row(exp, n, workers)
            yield row, _record(exp, n, row["measured_Nk"], row["measured_se"], T,
                               **{k: v for k, v in row.items() if k not in ("n", "measured_Nk", "measured_se")})
            continue
        else:  # pragma: no cover - validated earlier
            raise ValidationError(q)
        key = "success" if q == "map_attack" else "value"
        yield ({"n": n, key: e.value, "std_error": e.std_error, "trials": e.trials},
               _record(exp, n, e.value, e.std_error, e.trials))


def bounds_overlay_row(exp: ExperimentConfig, n: int, workers=None) -> dict:
    """Measured spurious keys and equivocation next to every closed-form bound."""
    p, src, T, seed = exp.params, exp.source, exp.trials, exp.master_seed
    sim = inference.simulate(p, src, n, T, seed, workers)
    nk = inference.Estimate.from_samples(sim["n_spurious"])
    info = inference.sequence_info(p, n, T, seed, src, exp.raw["estimator"], workers, stream=1)
    H_K, D = p.key_entropy, src.redundancy
    U = inference.per_symbol_info_U(p) if p.cipher == "alphaeta" else 1.0
    t2 = bounds.theorem2_lower_bound(bounds.BoundInputs(H_K, n, 1.0, D, max(info.value, 0.0)))
    return {
        "n": n,
        "measured_Nk": nk.value,
        "measured_se": nk.std_error,
        "bound_theorem2": t2,
        "bound_hbb": bounds.hbb_lower_bound(H_K, n, D),
        "bound_shannon": bounds.shannon_random_cipher_nk(H_K, n, D)[0],
        "bound_cta": bounds.cta_bound_and_unicity(H_K, n, U).bound,
        "ab_approx_HE": bounds.ab_equivocation_approx(p.lfsr.length, n, U),
        "measured_HE": float(sim["entropy"].mean()),
    }


# ---------------------------------------------------------------------------
# output


def _fmt(v):
    if isinstance(v, float):
        return repr(v)
    return str(v)


def render_csv(rows, phash: str, timestamp: str) -> str:
    buf = io.StringIO()
    buf.write(f"# generated {timestamp}\n")
    if rows:
        cols = list(rows[0]) + ["params_hash"]
        w = csv.writer(buf, lineterminator="\n")
        w.writerow(cols)
        for r in rows:
            w.writerow([_fmt(r.get(c, "")) for c in cols[:-1]] + [phash])
    return buf.getvalue()


def write_atomic(path: str, text: str) -> None:
    directory = os.path.dirname(os.path.abspath(path))
    fd, tmp = tempfile.mkstemp(dir=directory, prefix=".tmp-", suffix=os.path.basename(path))
    try:
        with os.fdopen(fd, "w", newline="") as fh:
            fh.write(text)
        os.replace(tmp, path)
    except BaseException:
        if os.path.exists(tmp):
            os.unlink(tmp)
        raise


def _error(code: int, kind: str, message: str) -> int:
    json.dump({"error": kind, "message": message, "exit_code": code}, sys.stderr)
    sys.stderr.write("\n")
    return code


def run(cfg: dict, out_dir: str, fmt: str, workers=None) -> list[str]:
    cfg, sweep = validate(cfg)
    caps = cap_violations(cfg, sweep)
    if caps:
        raise CapViolation("; ".join(caps))
    exp = build(cfg, sweep)
    os.makedirs(out_dir, exist_ok=True)
    pairs = list(_rows(exp, workers))
    written = []
    stem = os.path.join(out_dir, exp.quantity)
    if fmt in ("csv", "both"):
        stamp = dt.datetime.now(dt.timezone.utc).isoformat(timespec="seconds")
        write_atomic(stem + ".csv", render_csv([r for r, _ in pairs], exp.params_hash, stamp))
        written.append(stem + ".csv")
    if fmt in ("json", "both"):
        payload = {"quantity": exp.quantity, "params_hash": exp.params_hash,
                   "config": cfg, "records": [j for _, j in pairs]}
        write_atomic(stem + ".json", json.dumps(payload, indent=2, default=str) + "\n")
        written.append(stem + ".json")
    return written


def verify(cfg: dict) -> dict:
    cfg, sweep = validate(cfg)
    report = {"derived": derived_quantities(cfg), "quantity": cfg["quantity"],
              "sweep": sweep, "trials": cfg["trials"], "master_seed": cfg["master_seed"]}
    violations = cap_violations(cfg, sweep)
    L = cfg["L"]
    report["caps"] = {
        "posterior_L": inference.MAX_POSTERIOR_L,
        "seqinfo_L": inference.MAX_SEQINFO_L,
        "seqinfo_bits": inference.MAX_SEQINFO_BITS,
        "joint_bits": inference.MAX_JOINT_BITS,
        "vote_symbols": attacks.MAX_VOTE_SYMBOLS,
    }
    report["enumeration"] = {"keys": (1 << L) - 1}
    if sweep:
        report["enumeration"]["key_table_entries"] = ((1 << L) - 1) * max(sweep)
    report["cap_violations"] = violations
    if not violations:
        exp = build(cfg, sweep)
        report["derived"]["sigma"] = exp.params.sigma
        report["derived"]["photon_N"] = exp.params.photon_N
        report["params_hash"] = exp.params_hash
    return report


def make_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="aeta-lab", description=__doc__.splitlines()[0])
    sub = parser.add_subparsers(dest="command", required=True)
    for name in ("run", "verify"):
        p = sub.add_parser(name)
        p.add_argument("--config", help="JSON config file")
        p.add_argument("--set", action="append", default=[], metavar="KEY=VALUE",
                       help="dot-path override, e.g. noise.kind=truncated")
        p.add_argument("--seed", type=int, help="master seed (overrides the config)")
        p.add_argument("--workers", type=int, help="worker threads (default: $AETA_LAB_WORKERS or 1)")
        if name == "run":
            p.add_argument("--out", default=".", help="output directory")
            p.add_argument("--format", choices=("csv", "json", "both"), default="both")
    return parser


def main(argv=None) -> int:
    args = make_parser().parse_args(argv)
    try:
        if args.seed is not None and args.seed < 0:
            raise ValidationError("--seed must be non-negative")
        if args.workers is not None and args.workers < 1:
            raise ValidationError("--workers must be >= 1")
        cfg = load_config(args.config, args.set, args.seed)
        if args.command == "verify":
            report = verify(cfg)
            json.dump(report, sys.stdout, indent=2, default=str)
            sys.stdout.write("\n")
            return EXIT_CAP if report["cap_violations"] else EXIT_OK
        for path in run(cfg, args.out, args.format, args.workers):
            print(path)
        return EXIT_OK
    except ValidationError as exc:
        return _error(EXIT_VALIDATION, "validation", str(exc))
    except (CapViolation, inference.CapError) as exc:
        return _error(EXIT_CAP, "cap", str(exc))
    except OSError as exc:
        return _error(EXIT_IO, "io", str(exc))


if __name__ == "__main__":
    sys.exit(main())

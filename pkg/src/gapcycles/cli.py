"""Command-line front end: reproducible experiments with CSV/JSON outputs.

Commands
  cycle      materialize, stream, verify, or export a cycle of gaps
  model      population model: asymptotics JSON, evolution curve CSV,
             exact-check against cycle scans
  census     constellation counts among primes over intervals of survival,
             optional model comparison
  instances  CRT construction/enumeration and primorial coordinates

Every file-producing run also writes a JSON manifest (command, config,
version, timing, input hashes) next to its first output; CSVs reference the
manifest by name in a leading comment. Identical command and config give
byte-identical CSVs; only the manifest carries the timestamp.

Exit codes: 0 success, 1 validation error, 2 resource/bound error.
"""

from __future__ import annotations

import argparse
import hashlib
import json
import sys
import time
from dataclasses import dataclass, field

from . import __version__
from .constellations import Constellation, count_populations, driving_terms, q_of
from .crt_instances import (
    enumerate_instances,
    instance_from_residues,
    to_primorial_coordinates,
)
from .cycle_core import (
    DEFAULT_MEMORY_BUDGET,
    MemoryBudgetError,
    initial_cycle,
    next_cycle,
    stream_gaps,
    verify_cycle,
    write_cycle_binary,
    write_cycle_csv,
)
from .population_model import (
    evolve,
    evolve_counts,
    hl_weight,
    initial_population,
    w_asymptotic_closed,
    w_asymptotic_spectral,
    w_curve,
)
from .prime_census import (
    BoundExceededError,
    SieveConfig,
    census_range,
    count_primes,
    survival_comparison,
)
from .primes import is_prime, phi_primorial, primorial

FLOAT_FMT = "%.12g"  # documented rendering rounding at the CSV boundary

CONFIG_KEYS = ("sieve_bound", "segment_size", "memory_budget", "jobs")
CONFIG_DEFAULTS = {
    "sieve_bound": 2_000_000_000,
    "segment_size": 1 << 20,
    "memory_budget": DEFAULT_MEMORY_BUDGET,
    "jobs": 1,
}


class CLIError(ValueError):
    """Validation failure surfaced to the user (exit code 1)."""


@dataclass
class RunManifest:
    """Provenance record written alongside every file-producing run."""

    command: list[str]
    config: dict
    code_version: str = __version__
    schema_version: int = 1
    started_at: str = ""
    duration_s: float = 0.0
    input_hashes: dict = field(default_factory=dict)
    outputs: list = field(default_factory=list)

    def write(self, path) -> None:
        with open(path, "w") as fh:
            json.dump(self.__dict__, fh, indent=2, sort_keys=True)
            fh.write("\n")


def _hash_file(path) -> str:
    h = hashlib.sha256()
    with open(path, "rb") as fh:
        for chunk in iter(lambda: fh.read(1 << 20), b""):
            h.update(chunk)
    return h.hexdigest()


def _load_config(path) -> dict:
    out = {}
    with open(path) as fh:
        for ln, line in enumerate(fh, start=1):
            line = line.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise CLIError(f"{path}:{ln}: expected 'key = value'")
            key, value = (part.strip() for part in line.split("=", 1))
            if key not in CONFIG_KEYS:
                raise CLIError(f"{path}:{ln}: unknown config key {key!r}")
            out[key] = int(value)
    return out


def _resolve_config(args) -> dict:
    cfg = dict(CONFIG_DEFAULTS)
    if getattr(args, "config", None):
        cfg.update(_load_config(args.config))
    for key in CONFIG_KEYS:
        flag = getattr(args, key, None)
        if flag is not None:
            cfg[key] = flag
    return cfg


def _sieve_config(cfg: dict) -> SieveConfig:
    return SieveConfig(bound=cfg["sieve_bound"], segment_size=cfg["segment_size"], jobs=cfg["jobs"])


def _manifest_path(first_output) -> str:
    return str(first_output) + ".manifest.json"


def _write_csv(path, manifest_name: str, header: list[str], rows) -> None:
    with open(path, "w") as fh:
        fh.write(f"# manifest: {manifest_name}\n")
        fh.write(",".join(header) + "\n")
        for row in rows:
            fh.write(",".join(row) + "\n")


def _fmt(x) -> str:
    if isinstance(x, float):
        return FLOAT_FMT % x
    return str(x)


def _parse_range(text: str) -> tuple[int, int]:
    try:
        lo, hi = text.split("..")
        return int(lo), int(hi)
    except ValueError as exc:
        raise CLIError(f"expected a range like 35537..35969, got {text!r}") from exc


def _finish(manifest: RunManifest, t0: float, outputs) -> None:
    if not outputs:
        return
    manifest.duration_s = round(time.time() - t0, 3)
    manifest.outputs = [str(p) for p in outputs]
    manifest.write(_manifest_path(outputs[0]))


# ----------------------------------------------------------------- cycle ---


def cmd_cycle(args) -> int:
    cfg = _resolve_config(args)
    t0 = time.time()
    manifest = RunManifest(command=_argv_snapshot(args), config=cfg, started_at=_now())
    p = args.p
    if not is_prime(p) or p < 3:
        raise CLIError(f"--p must be an odd prime, got {p}")
    p0 = args.p0 if args.p0 is not None else min(p, 13)

    if args.stream:
        gaps = stream_gaps(p, p0)
        if args.count_only:
            count = sum(1 for _ in gaps)
            print(f"gaps={count} expected_phi={phi_primorial(p)}")
            return 0 if count == phi_primorial(p) else 1
        if not args.out:
            raise CLIError("--stream needs --out (or --count-only)")
        if args.format == "binary":
            raise CLIError("binary export needs a materialized cycle; drop --stream")
        with open(args.out, "w") as fh:
            fh.write(f"# GCYC stage_prime={p}\n")
            for g in gaps:
                fh.write(f"{g}\n")
        _finish(manifest, t0, [args.out])
        return 0

    cycle = initial_cycle(p0)
    while cycle.stage_prime < p:
        cycle = next_cycle(cycle, memory_budget=cfg["memory_budget"])

    if args.verify:
        report = verify_cycle(cycle)
        for name in ("length_ok", "span_ok", "first_gap_ok", "last_gap_ok", "symmetric"):
            print(f"{name}: {'pass' if getattr(report, name) else 'FAIL'}")
        for msg in report.failures:
            print(f"  {msg}")
        return 0 if report.passed else 1

    if args.count_only:
        print(f"gaps={cycle.length} expected_phi={phi_primorial(p)}")
        return 0

    if args.out:
        if args.format == "binary":
            write_cycle_binary(cycle, args.out)
        else:
            write_cycle_csv(cycle, args.out)
        _finish(manifest, t0, [args.out])
        return 0

    print(",".join(str(g) for g in cycle))
    return 0


# ----------------------------------------------------------------- model ---


def cmd_model(args) -> int:
    cfg = _resolve_config(args)
    t0 = time.time()
    manifest = RunManifest(command=_argv_snapshot(args), config=cfg, started_at=_now())
    s = Constellation.parse(args.s)
    outputs = []

    rp = initial_population(s, args.p0)
    p0 = rp.stage_prime
    terms = driving_terms(s)
    hw = hl_weight(s, truncation=args.hl_truncation)
    w_inf = w_asymptotic_closed(s)
    report = {
        "constellation": str(s),
        "J": s.J,
        "J1": max(t.length for t in terms),
        "Q": q_of(s),
        "w_inf": float(w_inf),
        "w_inf_exact": str(w_inf),
        "H": float(hw.H),
        "H_exact": str(hw.H),
        "G_truncated": hw.G_truncated,
        "tail_bound": hw.tail_bound,
        "p0": p0,
    }
    spectral = w_asymptotic_spectral(s, p0)
    if spectral != w_inf:
        raise CLIError(f"internal inconsistency: spectral {spectral} != closed {w_inf}")

    if args.exact_check:
        top = min(args.pk or 19, 23)
        from .population_model import _scan_cycle

        counts = dict(count_populations(s, _scan_cycle(p0)).counts)
        ok = True
        for stage in (17, 19, 23):
            if stage <= p0 or stage > top:
                continue
            model = evolve_counts(s, counts, p0, stage)
            scan = dict(count_populations(s, _scan_cycle(stage)).counts)
            match = model == scan
            ok = ok and match
            print(f"exact-check p={stage}: {'match' if match else 'MISMATCH'} {model}")
        if not ok:
            return 1

    if args.out_curve:
        if not args.pk:
            raise CLIError("--out-curve needs --pk")
        points = w_curve(s, p0, args.pk)
        lengths = rp.lengths
        header = ["stage_prime", "lambda"] + [f"w_{j}" for j in lengths]
        rows = (
            [str(pt.stage_prime), _fmt(pt.lam)] + [_fmt(w) for w in pt.w] for pt in points
        )
        manifest_name = _manifest_path(args.out_curve).rsplit("/", 1)[-1]
        _write_csv(args.out_curve, manifest_name, header, rows)
        outputs.append(args.out_curve)
        report["pk"] = args.pk
        report["lambda_at_pk"] = points[-1].lam
        report["w_J_at_pk"] = points[-1].w[0]

    if args.out_json:
        with open(args.out_json, "w") as fh:
            json.dump(report, fh, indent=2, sort_keys=True)
            fh.write("\n")
        outputs.insert(0 if not outputs else len(outputs), args.out_json)
    else:
        print(json.dumps(report, indent=2, sort_keys=True))

    _finish(manifest, t0, outputs)
    return 0


# ---------------------------------------------------------------- census ---


def cmd_census(args) -> int:
    cfg = _resolve_config(args)
    sieve_cfg = _sieve_config(cfg)
    t0 = time.time()
    manifest = RunManifest(command=_argv_snapshot(args), config=cfg, started_at=_now())
    stage_lo, stage_hi = _parse_range(args.stages)

    if args.prime_count_check:
        n = count_primes(stage_lo**2, stage_hi**2, sieve_cfg, jobs=cfg["jobs"])
        print(f"primes in [{stage_lo}^2, {stage_hi}^2] = [{stage_lo**2}, {stage_hi**2}]: {n}")
        if not args.constellations and not args.s:
            return 0

    battery: list[Constellation] = []
    if args.constellations:
        manifest.input_hashes[args.constellations] = _hash_file(args.constellations)
        with open(args.constellations) as fh:
            for line in fh:
                line = line.split("#", 1)[0].strip()
                if line:
                    battery.append(Constellation.parse(line))
    for text in args.s or []:
        battery.append(Constellation.parse(text))
    if not battery:
        raise CLIError("no constellations given (use --constellations FILE or --s)")

    records = census_range(battery, stage_lo, stage_hi, config=sieve_cfg, jobs=cfg["jobs"])
    outputs = []
    if args.out:
        manifest_name = _manifest_path(args.out).rsplit("/", 1)[-1]
        header = ["stage_prime", "interval_lo", "interval_hi", "constellation", "count"]
        rows = (
            [str(rec.interval.p), str(rec.interval.lo), str(rec.interval.hi),
             '"%s"' % ",".join(map(str, gaps)), str(count)]
            for rec in records
            for gaps, count in rec.counts.items()
        )
        _write_csv(args.out, manifest_name, header, rows)
        outputs.append(args.out)
    else:
        for rec in records:
            for gaps, count in rec.counts.items():
                print(f"dH({rec.interval.p}) {','.join(map(str, gaps))}: {count}")

    if args.compare:
        table = survival_comparison(
            battery, stage_lo, stage_hi, model_p0=args.model_p0, config=sieve_cfg, jobs=cfg["jobs"]
        )
        print(
            f"model stage {table.model_stage} (from p0={table.model_p0}), "
            f"lambda={table.lam:.4f}, reference {','.join(map(str, table.reference))}"
        )
        for row in table.rows:
            print(
                f"  {','.join(map(str, row.constellation)):>16}  census={row.census_count:<8} "
                f"w={row.w_model:.4f}  count_ratio={row.count_ratio:.4f} "
                f"w_ratio={row.w_ratio:.4f}  dev={row.deviation:.4f}"
            )
        print(f"mean abs relative deviation: {table.mean_abs_deviation:.4f}")
        if args.compare_out:
            manifest_name = _manifest_path(args.compare_out).rsplit("/", 1)[-1]
            header = ["constellation", "census_count", "w_model", "count_ratio", "w_ratio", "deviation"]
            rows = (
                ['"%s"' % ",".join(map(str, r.constellation)), str(r.census_count),
                 _fmt(r.w_model), _fmt(r.count_ratio), _fmt(r.w_ratio), _fmt(r.deviation)]
                for r in table.rows
            )
            _write_csv(args.compare_out, manifest_name, header, rows)
            outputs.append(args.compare_out)

    _finish(manifest, t0, outputs)
    return 0


# ------------------------------------------------------------- instances ---


def cmd_instances(args) -> int:
    cfg = _resolve_config(args)
    t0 = time.time()
    manifest = RunManifest(command=_argv_snapshot(args), config=cfg, started_at=_now())
    outputs = []

    if args.decompose is not None:
        if not args.ladder:
            raise CLIError("--decompose needs --ladder LO..HI")
        lo, hi = _parse_range(args.ladder)
        coords = to_primorial_coordinates(args.decompose, lo, hi)
        print(str(coords))
        if coords.value != args.decompose:
            raise CLIError("reconstruction mismatch")
        if args.out:
            payload = {
                "gamma": args.decompose,
                "base": coords.base,
                "ladder": list(coords.ladder),
                "digits": list(coords.digits),
                "display": str(coords),
            }
            with open(args.out, "w") as fh:
                json.dump(payload, fh, indent=2, sort_keys=True)
                fh.write("\n")
            outputs.append(args.out)
        _finish(manifest, t0, outputs)
        return 0

    if not args.s:
        raise CLIError("give --s for enumeration/construction, or --decompose")
    s = Constellation.parse(args.s)

    if args.enumerate:
        p0 = args.p0 or 3
        pk = args.pk
        if not pk:
            raise CLIError("--enumerate needs --pk")
        values = list(enumerate_instances(s, p0, pk))
        if args.out:
            manifest_name = _manifest_path(args.out).rsplit("/", 1)[-1]
            _write_csv(args.out, manifest_name, ["gamma"], ([str(v)] for v in values))
            outputs.append(args.out)
        else:
            for v in values:
                print(v)
        print(f"instances={len(values)}", file=sys.stderr)
        _finish(manifest, t0, outputs)
        return 0

    if args.residues:
        if args.gamma0 is None or args.p0 is None:
            raise CLIError("--residues needs --gamma0 and --p0")
        residues = {}
        for part in args.residues.split(","):
            p_text, r_text = part.split("=")
            residues[int(p_text)] = int(r_text)
        gamma = instance_from_residues(s, args.gamma0, args.p0, residues)
        print(gamma)
        return 0

    raise CLIError("nothing to do: give --decompose, --enumerate, or --residues")


# ------------------------------------------------------------------ main ---


def _now() -> str:
    return time.strftime("%Y-%m-%dT%H:%M:%S%z")


def _argv_snapshot(args) -> list[str]:
    return list(getattr(args, "_argv", []))


class _Parser(argparse.ArgumentParser):
    def error(self, message):  # exit 1 on usage errors, not argparse's 2
        raise CLIError(message)


def build_parser() -> argparse.ArgumentParser:
    parser = _Parser(prog="gapcycles", description=__doc__.splitlines()[0])
    parser.add_argument("--version", action="version", version=f"gapcycles {__version__}")
    sub = parser.add_subparsers(dest="cmd", required=True)

    def add_common(p):
        p.add_argument("--config", help="flat key=value config file")
        p.add_argument("--sieve-bound", dest="sieve_bound", type=int)
        p.add_argument("--segment-size", dest="segment_size", type=int)
        p.add_argument("--memory-budget", dest="memory_budget", type=int)
        p.add_argument("--jobs", type=int)

    p = sub.add_parser("cycle", help="materialize, stream, verify, or export a cycle")
    p.add_argument("--p", type=int, required=True, help="target stage prime")
    p.add_argument("--p0", type=int, help="bootstrap prime (3..13, default min(p,13))")
    p.add_argument("--stream", action="store_true", help="constant-memory streaming")
    p.add_argument("--count-only", action="store_true")
    p.add_argument("--verify", action="store_true")
    p.add_argument("--out")
    p.add_argument("--format", choices=("csv", "binary"), default="csv")
    add_common(p)
    p.set_defaults(func=cmd_cycle)

    p = sub.add_parser("model", help="population model: asymptotics, curve, exact check")
    p.add_argument("--s", required=True, help='constellation, e.g. "2,10,2,10,2"')
    p.add_argument("--p0", type=int, help="initial stage (default: smallest valid)")
    p.add_argument("--pk", type=int, help="final stage for the curve")
    p.add_argument("--out-curve", dest="out_curve")
    p.add_argument("--out-json", dest="out_json")
    p.add_argument("--exact-check", dest="exact_check", action="store_true",
                   help="verify the integer recursion against cycle scans (stages <= 23)")
    p.add_argument("--hl-truncation", dest="hl_truncation", type=int, default=10**6)
    add_common(p)
    p.set_defaults(func=cmd_model)

    p = sub.add_parser("census", help="constellation counts over intervals of survival")
    p.add_argument("--stages", required=True, help="stage prime range, e.g. 35537..35969")
    p.add_argument("--constellations", help="file with one constellation per line")
    p.add_argument("--s", action="append", help="inline constellation (repeatable)")
    p.add_argument("--out")
    p.add_argument("--prime-count-check", dest="prime_count_check", action="store_true")
    p.add_argument("--compare", action="store_true", help="compare against the model")
    p.add_argument("--compare-out", dest="compare_out")
    p.add_argument("--model-p0", dest="model_p0", type=int, default=37)
    add_common(p)
    p.set_defaults(func=cmd_census)

    p = sub.add_parser("instances", help="CRT instances and primorial coordinates")
    p.add_argument("--s", help="constellation")
    p.add_argument("--decompose", type=int, help="integer to decompose")
    p.add_argument("--ladder", help="prime ladder LO..HI for --decompose")
    p.add_argument("--enumerate", action="store_true")
    p.add_argument("--p0", type=int)
    p.add_argument("--pk", type=int)
    p.add_argument("--gamma0", type=int)
    p.add_argument("--residues", help='residue choices "7=1,11=3"')
    p.add_argument("--out")
    add_common(p)
    p.set_defaults(func=cmd_instances)

    return parser


def main(argv=None) -> int:
    argv = list(sys.argv[1:] if argv is None else argv)
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
        args._argv = argv
        return args.func(args)
    except CLIError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except ValueError as exc:
        print(f"error: {exc}", file=sys.stderr)
        return 1
    except (BoundExceededError, MemoryBudgetError) as exc:
        print(f"resource error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

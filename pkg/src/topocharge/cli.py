"""Command-line front end: ``topocharge analyze | equiv | decode | fixtures``."""

from __future__ import annotations

import argparse
import json
import sys

from . import __version__
from .decode import RNG_ALGORITHM, DecodingError, InvalidSyndrome, MatchingDecoder, NoiseModel, run_trials
from .lattice import FIXTURES, CodeFormatError, fixture, fixture_text, resolve_code
from .pipeline import EXIT_CODES, Analysis, Config, StageFailure, analyze, equivalence
from .torus import build_torus_code, min_torus_size

EPILOG = "exit codes:\n" + "\n".join(f"  {code:>3}  {name}" for name, code in EXIT_CODES.items())


def dumps(obj) -> str:
    return json.dumps(obj, sort_keys=True, indent=2) + "\n"


def _torus_arg(text: str) -> int:
    parts = text.lower().split("x")
    try:
        sides = [int(p) for p in parts]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad torus size {text!r}; expected N or NxN") from None
    if len(sides) > 2 or len(set(sides)) != 1 or sides[0] < 1:
        raise argparse.ArgumentTypeError(f"torus must be square, got {text!r}")
    return sides[0]


def _sizes_arg(text: str) -> list[int]:
    try:
        return [int(s) for s in text.split(",") if s]
    except ValueError:
        raise argparse.ArgumentTypeError(f"bad size list {text!r}") from None


def build_parser() -> argparse.ArgumentParser:
    ap = argparse.ArgumentParser(
        prog="topocharge",
        description="Charge analysis of translation-invariant stabilizer and subsystem codes on a 2D lattice.",
        epilog=EPILOG,
        formatter_class=argparse.RawDescriptionHelpFormatter,
    )
    ap.add_argument("--version", action="version", version=f"topocharge {__version__}")
    sub = ap.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--torus", type=_torus_arg, help="torus size NxN for the finite code (default: smallest valid)")
        p.add_argument("--window", type=int, help="window size for local checks (default: 2*range+2)")
        p.add_argument("--coarse-max", type=int, default=4, help="largest coarse-graining level tried (default 4)")
        p.add_argument("--adjust", choices=("stab", "gauge"), default="stab", help="homology adjustment mode")
        p.add_argument("--json", action="store_true", help="emit a canonical JSON report")

    p = sub.add_parser("analyze", help="full analysis of one code", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("code", help="fixture name, code file, or a+b for a composition")
    common(p)
    p.add_argument("--no-framework", action="store_true", help="skip the segment commutation table")
    p.add_argument("--timing", action="store_true", help="include wall-clock timings (breaks byte-identity)")

    p = sub.add_parser("equiv", help="compare the charges of two codes", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("a")
    p.add_argument("b")
    common(p)

    p = sub.add_parser("decode", help="Monte Carlo decoding benchmark", epilog=EPILOG,
                       formatter_class=argparse.RawDescriptionHelpFormatter)
    p.add_argument("code")
    common(p)
    p.add_argument("--p", type=float, default=0.03, help="physical error rate (default 0.03)")
    p.add_argument("--sizes", type=_sizes_arg, default=None, help="comma-separated torus sides (default: 2 sizes)")
    p.add_argument("--trials", type=int, default=1000, help="trials per size (default 1000)")
    p.add_argument("--seed", type=int, default=7, help="RNG seed (default 7)")
    p.add_argument("--noise", choices=("xz", "depolarizing"), default="xz", help="noise model (default xz)")

    p = sub.add_parser("fixtures", help="list bundled codes or print one")
    p.add_argument("name", nargs="?", help="print this fixture's code file")
    return ap


def _config(args, framework: bool = True) -> Config:
    return Config(
        torus=args.torus,
        window=args.window,
        coarse_max=args.coarse_max,
        adjust=args.adjust,
        framework=framework,
    )


def _analyze(spec: str, config: Config) -> Analysis:
    return analyze(resolve_code(spec), config)


def _summary(an: Analysis) -> str:
    r = an.report
    ch = an.characteristic
    lines = [
        f"code            {r['code']['name']}  ({r['code']['qubits_per_site']} qubits/site, "
        f"{'subsystem' if r['code']['subsystem'] else 'subspace'})",
        f"normalization   step {r['normalization']['step']}, coarse-grain {r['normalization']['coarse_grain']}, "
        f"period {r['normalization']['period']}",
        f"checks          stabilizer ok, local independence ok, windowed {r['verdicts']['windowed_check']} ok "
        f"(window {r['verdicts']['window']})",
        f"charges         |λG| = 2^{r['charges']['gauge_dim']}, |λS| = 2^{r['charges']['stabilizer_dim']}",
        f"characteristic  {ch}   (alpha, beta, f1, f2)",
    ]
    for name, bits in r["charges"]["generators"].items():
        lines.append(f"  {name:<4} charge {bits or '-'}  theta {r['charges']['theta'][name]:+d}")
    t = r["torus"]
    lines.append(
        f"torus           {t['size'][0]}x{t['size'][1]}, n = {t['n']}, k = {t['k']} "
        f"(raw {t['k_raw']}, adjust {t['adjust']})"
    )
    if r.get("framework"):
        fw = r["framework"]
        lines.append(f"framework       {fw['checks']} segment checks, unit {fw['unit']}: passed")
    if "notice" in r:
        lines.append(f"NOTICE          {r['notice']}")
    return "\n".join(lines) + "\n"


def cmd_analyze(args) -> int:
    an = _analyze(args.code, _config(args, framework=not args.no_framework))
    report = dict(an.report)
    if args.timing:
        report["timing"] = {k: round(v, 4) for k, v in an.timings.items()}
    sys.stdout.write(dumps(report) if args.json else _summary(an))
    return 0


def cmd_equiv(args) -> int:
    cfg = _config(args, framework=False)
    res = equivalence(_analyze(args.a, cfg), _analyze(args.b, cfg))
    if args.json:
        sys.stdout.write(dumps(res))
    else:
        sys.stdout.write(
            f"{res['a']['name']}: {res['a']['characteristic']}\n"
            f"{res['b']['name']}: {res['b']['characteristic']}\n"
            f"{res['verdict']}\n"
        )
    return 0


def cmd_decode(args) -> int:
    cfg = _config(args, framework=False)
    an = _analyze(args.code, cfg)
    if an.characteristic.alpha == 0:
        sys.stderr.write(f"{an.code.name}: no logical qubits to protect (alpha = 0)\n")
        return EXIT_CODES["no-logicals"]
    P = an.charges.period
    base = min_torus_size(an.working, P)[0]
    sizes = args.sizes or [base, 2 * base]
    noise = NoiseModel(args.noise, args.p)
    rows = []
    for L in sizes:
        if L % P or L < base:
            raise StageFailure("usage", f"size {L} must be a multiple of {P} and at least {base}")
        tc = build_torus_code(an.charges, an.canon, L, args.adjust)
        stats = run_trials(MatchingDecoder(an.charges, tc), noise, args.trials, args.seed)
        rows.append(stats.row())
    out = {
        "tool": {"name": "topocharge", "version": __version__},
        "config": {
            **cfg.as_dict(),
            "p": args.p,
            "noise": args.noise,
            "sizes": sizes,
            "trials": args.trials,
            "seed": args.seed,
            "rng": RNG_ALGORITHM,
        },
        "code": an.code.name,
        "characteristic": str(an.characteristic),
        "rows": rows,
    }
    if args.json:
        sys.stdout.write(dumps(out))
    else:
        sys.stdout.write(f"{an.code.name} {an.characteristic}, noise {args.noise} p={args.p}, seed {args.seed}\n")
        sys.stdout.write(f"{'L':>4} {'trials':>7} {'fail':>6} {'rate':>8}  {'95% CI':<19} per-qubit\n")
        for r in rows:
            sys.stdout.write(
                f"{r['size']:>4} {r['trials']:>7} {r['failures']:>6} {r['rate']:>8.4f}  "
                f"[{r['ci_low']:.4f}, {r['ci_high']:.4f}] {r['failures_per_logical']}\n"
            )
    return 0


def cmd_fixtures(args) -> int:
    if args.name:
        sys.stdout.write(fixture_text(args.name))
        return 0
    for name in FIXTURES:
        c = fixture(name)
        kind = "subsystem" if c.is_subsystem else "subspace"
        sys.stdout.write(f"{name:<18} {c.qubits_per_site} qubits/site  {kind}\n")
    return 0


COMMANDS = {"analyze": cmd_analyze, "equiv": cmd_equiv, "decode": cmd_decode, "fixtures": cmd_fixtures}


def main(argv: list[str] | None = None) -> int:
    parser = build_parser()
    args = parser.parse_args(argv)
    try:
        return COMMANDS[args.command](args)
    except StageFailure as exc:
        sys.stderr.write(f"error [{exc.stage}]: {exc}\n")
        return EXIT_CODES.get(exc.stage, 1)
    except (CodeFormatError, FileNotFoundError, IsADirectoryError) as exc:
        sys.stderr.write(f"error [input]: {exc}\n")
        return EXIT_CODES["input"]
    except (DecodingError, InvalidSyndrome) as exc:
        sys.stderr.write(f"error [decode]: {exc}\n")
        return EXIT_CODES["decode"]


if __name__ == "__main__":
    sys.exit(main())

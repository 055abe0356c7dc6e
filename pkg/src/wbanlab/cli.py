"""Command-line entry point.

    wbanlab run --variant I --seed 7
    wbanlab attack --name dictionary_p3 --password hunter2 --dictionary words.txt --seed 7
    wbanlab selftest
    wbanlab report --out reports/ --trials 20

Exit status: 0 when the outcome is the expected one (honest runs agree,
attacks succeed), 1 otherwise, 2 on usage errors.
"""

from __future__ import annotations

import argparse
import csv
import io
import json
import sys
import time
from pathlib import Path

from wbanlab import attacks, curve, scenarios
from wbanlab.harness import run_session
from wbanlab.mac_kdf import cmac_tag, load_cmac_vectors
from wbanlab.protocols import VARIANT_NAMES, make_parties, parse_variant

ATTACK_NAMES = sorted(scenarios.RUNNERS)


def _variant(text: str) -> int:
    try:
        return parse_variant(text)
    except ValueError as exc:
        raise argparse.ArgumentTypeError(str(exc)) from None


def build_parser() -> argparse.ArgumentParser:
    parser = argparse.ArgumentParser(prog="wbanlab", description=__doc__.split("\n\n")[0])
    sub = parser.add_subparsers(dest="command", required=True)

    def common(p):
        p.add_argument("--seed", type=int, help="seed for the deterministic generator (OS entropy if omitted)")
        p.add_argument("--format", choices=("text", "json"), default="text", dest="output_format")

    run = sub.add_parser("run", help="run one honest association")
    run.add_argument("--variant", type=_variant, required=True, help="protocol I, II, III or IV")
    run.add_argument("--password", help="shared password (Protocol III)")
    common(run)

    att = sub.add_parser("attack", help="run one attack scenario")
    att.add_argument("--name", required=True, choices=ATTACK_NAMES)
    att.add_argument("--variant", type=_variant, help="protocol for forward_secrecy")
    att.add_argument("--whose", choices=("A", "B"), help="compromised party for forward_secrecy")
    att.add_argument("--password", help="shared password of the eavesdropped Protocol III run")
    att.add_argument("--dictionary", type=Path, help="word list, one password per line")
    att.add_argument("--mirror", action="store_true", help="impersonate the hub toward the node instead")
    att.add_argument("--timing", action="store_true", help="include wall time (output is then not reproducible)")
    common(att)

    st = sub.add_parser("selftest", help="check CMAC and P-256 against reference vectors")
    st.add_argument("--format", choices=("text", "json"), default="text", dest="output_format")

    rep = sub.add_parser("report", help="run every scenario over many seeds; write CSV and figures")
    rep.add_argument("--out", type=Path, default=Path("report"))
    rep.add_argument("--trials", type=int, default=20)
    rep.add_argument("--dictionary-sizes", default="100,1000,10000,100000")
    return parser


def _emit(obj, fmt: str, text_lines: list[str], out):
    if fmt == "json":
        out.write(json.dumps(obj, indent=2, sort_keys=True) + "\n")
    else:
        out.write("\n".join(text_lines) + "\n")


def cmd_run(args, out) -> int:
    variant = args.variant
    if variant == 3 and not args.password:
        raise UsageError("Protocol III needs --password")
    rng = scenarios.make_rng(args.seed)
    cfg_a, cfg_b = make_parties(variant, rng, password=args.password)
    outcome = run_session(cfg_a, cfg_b, rng=rng)
    s = outcome.summary()
    lines = [outcome.transcript.to_text().rstrip("\n")]
    lines += [
        f"variant: {s['variant']}",
        f"A: {s['status_A']}  MK_A = {s['mk_A']}",
        f"B: {s['status_B']}  MK_B = {s['mk_B']}",
        f"verdict: {'MK_A = MK_B' if outcome.agreed else 'no agreement'}",
    ]
    _emit({"session": s, "transcript": outcome.transcript.to_records()}, args.output_format, lines, out)
    return 0 if outcome.agreed else 1


def cmd_attack(args, out) -> int:
    name = args.name
    sargs = scenarios.ScenarioArgs(
        seed=args.seed, variant=args.variant, password=args.password, whose=args.whose, mirror=args.mirror
    )
    if name == "dictionary_p3":
        if not args.password or args.dictionary is None:
            raise UsageError("dictionary_p3 needs --password and --dictionary")
        if not args.dictionary.is_file():
            raise UsageError(f"dictionary file not found: {args.dictionary}")
        sargs.dictionary = attacks.load_dictionary(args.dictionary)
    if name == "impersonate_p3" and not args.password:
        raise UsageError("impersonate_p3 needs --password")
    if name == "forward_secrecy":
        if args.variant is None or args.whose is None:
            raise UsageError("forward_secrecy needs --variant and --whose")
        if args.variant == 3 and not args.password:
            raise UsageError("Protocol III needs --password")
        if (args.variant, args.whose) not in scenarios.FORWARD_SECRECY_CASES:
            raise UsageError(f"no forward-secrecy break for Protocol {VARIANT_NAMES[args.variant]} with SK_{args.whose}")
    try:
        outcome = scenarios.RUNNERS[name](sargs)
    except attacks.NotInDictionary as exc:
        rec = {"scenario": name, "succeeded": False, "error": str(exc)}
        _emit(rec, args.output_format, [f"scenario: {name}", "succeeded: False", f"error: {exc}"], out)
        return 1
    rec = outcome.to_record(timing=args.timing)
    lines = [f"{k}: {v}" for k, v in rec.items()]
    if args.output_format == "text" and name != "dictionary_p3" and len(outcome.transcript):
        lines = [outcome.transcript.to_text().rstrip("\n")] + lines
    else:
        rec["transcript"] = outcome.transcript.to_records()
    _emit(rec, args.output_format, lines, out)
    return 0 if outcome.succeeded else 1


def selftest_results() -> list[dict]:
    results = []
    for i, (key, msg, tag) in enumerate(load_cmac_vectors()):
        results.append({"check": f"cmac[{i}] len={len(msg)}", "ok": cmac_tag(key, msg) == tag})
    for k, point in curve.load_p256_multiples():
        h = f"{k:#x}"
        label = h if len(h) <= 20 else f"{h[:10]}..{h[-8:]}"
        results.append({"check": f"k*G k={label}", "ok": curve.scalar_mul(k, curve.G) == point})
    results.append({"check": "n*G = O", "ok": curve.scalar_mul(curve.P256.n, curve.G).is_infinity})
    return results


def cmd_selftest(args, out) -> int:
    results = selftest_results()
    ok = all(r["ok"] for r in results)
    lines = [f"{'PASS' if r['ok'] else 'FAIL'}  {r['check']}" for r in results]
    lines.append(f"{sum(r['ok'] for r in results)}/{len(results)} checks passed")
    _emit({"results": results, "ok": ok}, args.output_format, lines, out)
    return 0 if ok else 1


def _report_cases():
    yield "impersonate_p1", scenarios.impersonate_p1, {}
    yield "impersonate_p1_mirror", scenarios.impersonate_p1, {"mirror": True}
    yield "kci_p2", scenarios.kci_p2, {}
    yield "impersonate_p3", scenarios.impersonate_p3, {}
    yield "impersonate_p3_mirror", scenarios.impersonate_p3, {"mirror": True}
    yield "impersonate_p4", scenarios.impersonate_p4, {}
    yield "impersonate_p4_mirror", scenarios.impersonate_p4, {"mirror": True}
    for variant, whose in scenarios.FORWARD_SECRECY_CASES:
        name = f"forward_secrecy_{VARIANT_NAMES[variant]}_{whose}"
        yield name, scenarios.forward_secrecy, {"variant": variant, "whose": whose}


def cmd_report(args, out) -> int:
    from wbanlab import plotting
    from wbanlab.rng import DeterministicRng

    if args.trials < 1:
        raise UsageError("--trials must be positive")
    try:
        sizes = [int(s) for s in args.dictionary_sizes.split(",") if s]
    except ValueError:
        raise UsageError("--dictionary-sizes takes comma-separated integers") from None
    args.out.mkdir(parents=True, exist_ok=True)

    rows = []
    for name, runner, extra in _report_cases():
        successes, elapsed = 0, 0.0
        for seed in range(args.trials):
            t0 = time.perf_counter()
            outcome = runner(scenarios.ScenarioArgs(seed=seed, **extra))
            elapsed += time.perf_counter() - t0
            successes += outcome.succeeded
        rows.append({
            "scenario": name,
            "trials": args.trials,
            "successes": successes,
            "success_rate": successes / args.trials,
            "mean_ms": round(1000 * elapsed / args.trials, 3),
        })

    timing = []
    rng = DeterministicRng("report-dictionary")
    words = attacks.synthetic_dictionary(max(sizes), rng)
    cfg_a, cfg_b = make_parties(3, rng, password=scenarios.DEFAULT_PASSWORD)
    transcript = run_session(cfg_a, cfg_b, rng=rng).transcript
    for size in sizes:
        # worst case: the password is the last word tried
        trial = words[: size - 1] + [scenarios.DEFAULT_PASSWORD]
        t0 = time.perf_counter()
        found = attacks.dictionary_p3(transcript, trial).recovered_secret
        timing.append({"size": size, "seconds": time.perf_counter() - t0, "recovered": found})

    csv_path = args.out / "scenarios.csv"
    with csv_path.open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=list(rows[0]))
        w.writeheader()
        w.writerows(rows)
    with (args.out / "dictionary_timing.csv").open("w", newline="") as fh:
        w = csv.DictWriter(fh, fieldnames=["size", "seconds", "recovered"])
        w.writeheader()
        w.writerows(timing)
    plotting.plot_success_rates(rows, args.out / "attack_success.png")
    plotting.plot_dictionary_timing(timing, args.out / "dictionary_timing.png")

    buf = io.StringIO()
    w = csv.DictWriter(buf, fieldnames=list(rows[0]))
    w.writeheader()
    w.writerows(rows)
    out.write(buf.getvalue())
    out.write(f"# wrote {csv_path}, dictionary_timing.csv, attack_success.png, dictionary_timing.png to {args.out}\n")
    return 0 if all(r["successes"] == r["trials"] for r in rows) else 1


class UsageError(Exception):
    pass


COMMANDS = {"run": cmd_run, "attack": cmd_attack, "selftest": cmd_selftest, "report": cmd_report}


def main(argv=None, out=None) -> int:
    out = out if out is not None else sys.stdout
    parser = build_parser()
    try:
        args = parser.parse_args(argv)
    except SystemExit as exc:
        return int(exc.code or 0)
    try:
        return COMMANDS[args.command](args, out)
    except UsageError as exc:
        print(f"wbanlab {args.command}: error: {exc}", file=sys.stderr)
        return 2


if __name__ == "__main__":
    sys.exit(main())

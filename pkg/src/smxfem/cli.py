"""Command-line entry point for the benchmark harness.

Flags mirror a flat `key = value` config file; command-line values win.

    smxfem-bench --problem griffith --method lsm --refinements 10,20,40 \
        --out griffith_lsm.csv --report griffith_lsm.txt
"""

import argparse
import sys

from .bench import BenchmarkConfig, run, write_csv, write_report


def read_config_file(path):
    out = {}
    with open(path) as f:
        for ln, raw in enumerate(f, 1):
            line = raw.split("#", 1)[0].strip()
            if not line:
                continue
            if "=" not in line:
                raise ValueError(f"{path}:{ln}: expected key = value")
            key, val = (s.strip() for s in line.split("=", 1))
            out[key.replace("-", "_")] = val
    return out


def _parse_list(val):
    return tuple(s for s in str(val).replace(" ", "").split(",") if s)


def build_config(args):
    file_opts = read_config_file(args.config) if args.config else {}

    def pick(name, cli_val):
        if cli_val is not None:
            return cli_val
        return file_opts.get(name)

    problem = pick("problem", args.problem)
    method = pick("method", args.method)
    if not problem or not method:
        raise SystemExit("--problem and --method are required "
                         "(flag or config file)")
    refinements = pick("refinements", args.refinements) or ""
    beta = pick("beta", args.beta) or ""
    deterministic = args.deterministic_merge or \
        str(file_opts.get("deterministic_merge", "")).lower() in ("1", "true")
    return BenchmarkConfig(
        problem=problem, method=method,
        refinements=tuple(int(x) for x in _parse_list(refinements)),
        beta=tuple(float(x) for x in _parse_list(beta)),
        out=pick("out", args.out) or "",
        report=pick("report", args.report) or "",
        deterministic=deterministic)


def main(argv=None):
    p = argparse.ArgumentParser(
        prog="smxfem-bench",
        description="Run fracture benchmarks with the xfem / sm / lsm "
                    "integration backends and emit convergence CSVs.")
    p.add_argument("--config", help="flat key = value config file")
    p.add_argument("--problem", choices=("griffith", "edge-tension",
                                         "edge-shear", "inclined",
                                         "patch3d"))
    p.add_argument("--method", choices=("xfem", "sm", "lsm"))
    p.add_argument("--refinements", help="comma list, e.g. 10,20,40")
    p.add_argument("--beta", help="comma list of crack angles in degrees "
                                  "(inclined problem)")
    p.add_argument("--out", help="output CSV path")
    p.add_argument("--report", help="human-readable report path")
    p.add_argument("--deterministic-merge", action="store_true",
                   help="byte-reproducible output (zeroes the ms column)")
    args = p.parse_args(argv)

    cfg = build_config(args)
    rows = run(cfg)
    failed = [r for r in rows if r.note]
    for r in failed:
        print(r.note, file=sys.stderr)
    if cfg.out:
        write_csv(rows, cfg.out, cfg.deterministic)
        print(f"wrote {cfg.out}")
    if cfg.report:
        write_report(cfg, rows, cfg.report)
        print(f"wrote {cfg.report}")
    if not cfg.out and not cfg.report:
        for r in rows:
            print(",".join(r.csv_values(cfg.problem == "inclined",
                                        cfg.deterministic)))
    return 1 if failed else 0


if __name__ == "__main__":
    sys.exit(main())

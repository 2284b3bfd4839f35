"""rLASSO error as a function of the tuning parameter, with the BP error as reference.

The BP baseline does not depend on lambda, so it runs once and is stored
with an empty sweep value.
"""
import dataclasses
import math

from _study import load, parse_args, run, table

from rlasso.bench import run_experiment


def transition(records, level=0.5):
    pts = [(r.sweep_value, r.mean_rel_error) for r in records if r.decoder == "rlasso"]
    for (l0, e0), (l1, e1) in zip(pts, pts[1:]):
        if e0 > level >= e1:
            w = (e0 - level) / (e0 - e1)
            return math.exp(math.log(l0) + w * (math.log(l1) - math.log(l0)))
    return None


def main():
    args = parse_args("tuning", __doc__)
    cfg = load(args)
    bp = run_experiment(dataclasses.replace(cfg, decoders=("bp",), sweep=None), threads=args.threads)
    records = run(cfg, args, extra=bp)
    table([r for r in records if r.sweep_value is not None])
    lam = transition(records)
    print(f"BP mean error: {bp[0].mean_rel_error:.4g}")
    print("transition (error crosses 0.5):", "none in range" if lam is None else f"lambda ~ {lam:.3g}")


if __name__ == "__main__":
    main()

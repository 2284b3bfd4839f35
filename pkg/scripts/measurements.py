"""Gaussian matrices, decoders and lambda rules as the number of measurements grows."""
from _study import load, parse_args, run, table


def main():
    args = parse_args("measurements", __doc__)
    records = run(load(args), args)
    table(records, "mean_rel_error")


if __name__ == "__main__":
    main()

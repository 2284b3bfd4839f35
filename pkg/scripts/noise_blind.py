"""Error per noise power of all decoders across signal-to-noise ratios (fixed lambda = 0.65 sqrt(M))."""
from _study import load, parse_args, run, table


def main():
    args = parse_args("noise_blind", __doc__)
    records = run(load(args), args)
    table(records, "mean_error_per_noise")


if __name__ == "__main__":
    main()

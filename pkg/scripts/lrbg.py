"""Left regular bipartite graphs with l1 fidelity, constant and expander-based lambda across sparsity."""
from _study import load, parse_args, run, table


def main():
    args = parse_args("lrbg", __doc__)
    records = run(load(args), args)
    table(records, "mean_rel_error")


if __name__ == "__main__":
    main()

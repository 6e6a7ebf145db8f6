#!/usr/bin/env python3
"""Competition-format SAT front end over python-sat, for use as: --solver 'cmd:python3 pysat_solver.py {}'."""

import argparse
import sys

from pysat.formula import CNF
from pysat.solvers import Solver


def header_var_count(path: str) -> int:
    with open(path) as f:
        for line in f:
            if line.startswith("p cnf"):
                return int(line.split()[2])
    return 0


def main() -> int:
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("dimacs")
    parser.add_argument("--solver", default="minisat22", help="python-sat solver name")
    args = parser.parse_args()

    cnf = CNF(from_file=args.dimacs)
    with Solver(name=args.solver, bootstrap_with=cnf.clauses) as solver:
        if not solver.solve():
            print("s UNSATISFIABLE")
            return 20
        model = solver.get_model() or []
    assigned = {abs(lit): lit for lit in model}
    values = [assigned.get(v, -v) for v in range(1, max(cnf.nv, header_var_count(args.dimacs)) + 1)]
    print("s SATISFIABLE")
    print("v " + " ".join(map(str, values)) + " 0")
    return 10


if __name__ == "__main__":
    sys.exit(main())

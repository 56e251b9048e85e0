#!/usr/bin/env python3
"""Solve MPS/LP models with HiGHS and write dgplan solution files.

    highs_solve.py MODEL SOLUTION [--time-limit S] [--mip-gap G] [--threads N] [--dialect line|xml] [--start=FILE]
    highs_solve.py --batch JOBS [...]

JOBS holds one "MODEL SOLUTION" pair per line. The line dialect is

    status <optimal|feasible|infeasible|unbounded|timeout|error>
    objective <value>
    <column name> <value>
    ...
"""
import argparse
import sys

import highspy
import numpy as np

MS = highspy.HighsModelStatus


def status_of(model_status, has_solution):
    if model_status == MS.kOptimal:
        return "optimal"
    if model_status in (MS.kInfeasible, MS.kUnboundedOrInfeasible):
        return "infeasible"
    if model_status == MS.kUnbounded:
        return "unbounded"
    if model_status == MS.kTimeLimit:
        return "timeout"
    if model_status in (MS.kIterationLimit, MS.kSolutionLimit, MS.kInterrupt, MS.kObjectiveBound, MS.kObjectiveTarget):
        return "feasible" if has_solution else "timeout"
    return "error"


def xml_escape(s):
    return s.replace("&", "&amp;").replace('"', "&quot;").replace("<", "&lt;").replace(">", "&gt;")


def write(path, status, objective, names, values, dialect, note=""):
    with open(path, "w") as f:
        if dialect == "xml":
            text = {
                "optimal": "integer optimal solution",
                "feasible": "integer feasible solution",
                "infeasible": "integer infeasible",
                "unbounded": "unbounded",
                "timeout": "time limit exceeded",
                "error": "error",
            }[status]
            obj = "" if objective is None else ' objectiveValue="%r"' % objective
            f.write('<?xml version = "1.0" encoding="UTF-8" standalone="yes"?>\n')
            f.write('<CPLEXSolution version="1.2">\n')
            f.write(' <header%s solutionStatusString="%s"/>\n' % (obj, text))
            f.write(" <variables>\n")
            for i, (n, v) in enumerate(zip(names, values)):
                f.write('  <variable name="%s" index="%d" value="%r"/>\n' % (xml_escape(n), i, v))
            f.write(" </variables>\n</CPLEXSolution>\n")
            return
        f.write("status %s\n" % status)
        if note:
            f.write("# %s\n" % note.replace("\n", " "))
        if objective is not None:
            f.write("objective %r\n" % objective)
        for n, v in zip(names, values):
            f.write("%s %r\n" % (n, v))


def set_start(h, path):
    """Hands HiGHS a starting point read from `name value` lines."""
    index = {n: i for i, n in enumerate(h.getLp().col_names_)}
    cols, vals = [], []
    with open(path) as f:
        for line in f:
            parts = line.split()
            if len(parts) == 2 and parts[0] in index:
                cols.append(index[parts[0]])
                vals.append(float(parts[1]))
    if cols:
        h.setSolution(len(cols), np.array(cols, dtype=np.int32), np.array(vals, dtype=np.float64))


def solve(model, solution, args):
    h = highspy.Highs()
    h.setOptionValue("output_flag", False)
    h.setOptionValue("mip_rel_gap", float(args.mip_gap))
    h.setOptionValue("threads", int(args.threads))
    if args.mip_gap == 0:
        h.setOptionValue("mip_abs_gap", 0.0)
    if h.readModel(model) == highspy.HighsStatus.kError:
        write(solution, "error", None, [], [], args.dialect, "could not read " + model)
        return
    if args.start:
        set_start(h, args.start)
    # set after reading: the clock already runs during readModel
    h.setOptionValue("time_limit", float(args.time_limit))
    h.run()
    ms = h.getModelStatus()
    info = h.getInfo()
    has = info.primal_solution_status == 2
    status = status_of(ms, has)
    if status in ("optimal", "feasible", "timeout") and has:
        lp = h.getLp()
        names = list(lp.col_names_)
        values = list(h.getSolution().col_value)
        objective = info.objective_function_value
    else:
        names, values, objective = [], [], None
    write(solution, status, objective, names, values, args.dialect, h.modelStatusToString(ms))


def main():
    p = argparse.ArgumentParser()
    p.add_argument("model", nargs="?")
    p.add_argument("solution", nargs="?")
    p.add_argument("--batch")
    p.add_argument("--time-limit", type=float, default=1e30)
    p.add_argument("--mip-gap", type=float, default=1e-4)
    p.add_argument("--threads", type=int, default=1)
    p.add_argument("--dialect", choices=["line", "xml"], default="line")
    p.add_argument("--start")
    args = p.parse_args()
    if args.batch:
        with open(args.batch) as f:
            jobs = [line.split() for line in f if line.strip()]
        for model, solution in jobs:
            solve(model, solution, args)
    elif args.model and args.solution:
        solve(args.model, args.solution, args)
    else:
        p.error("need MODEL SOLUTION or --batch JOBS")


if __name__ == "__main__":
    sys.exit(main())

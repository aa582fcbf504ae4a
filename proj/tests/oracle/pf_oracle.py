#!/usr/bin/env python3
"""Independent Newton-Raphson power-flow oracle.

Reads a case file in the format of docs/case-format.md, solves the base-case
power flow with numpy, and writes golden voltage vectors as JSON. Run once to
regenerate tests/data/case39_golden.json; the C++ suite only reads the frozen
output and never calls this script.
"""
import json
import re
import sys

import numpy as np


def parse_case(path):
    text = open(path).read()
    text = re.sub(r"%.*", "", text)
    tables = {}
    for name in ("bus", "gen", "branch"):
        m = re.search(r"mpc\.%s\s*=\s*\[(.*?)\];" % name, text, re.S)
        rows = []
        for line in m.group(1).split(";"):
            vals = line.split()
            if vals:
                rows.append([float(v) for v in vals])
        tables[name] = np.array(rows)
    base = float(re.search(r"mpc\.baseMVA\s*=\s*([0-9.eE+-]+)", text).group(1))
    return base, tables


def ybus(nbus, branch, bus, base):
    Y = np.zeros((nbus, nbus), dtype=complex)
    for row in branch:
        if row[10] == 0:
            continue
        f, t = int(row[0]) - 1, int(row[1]) - 1
        ys = 1.0 / (row[2] + 1j * row[3])
        bc = 1j * row[4] / 2.0
        tap = row[8] if row[8] != 0 else 1.0
        Y[f, f] += (ys + bc) / tap**2
        Y[t, t] += ys + bc
        Y[f, t] += -ys / tap
        Y[t, f] += -ys / tap
    for row in bus:
        i = int(row[0]) - 1
        Y[i, i] += (row[4] + 1j * row[5]) / base
    return Y


def solve(base, tables, tol=1e-10, maxit=30):
    bus, gen, branch = tables["bus"], tables["gen"], tables["branch"]
    n = bus.shape[0]
    Y = ybus(n, branch, bus, base)
    types = bus[:, 1].astype(int)
    slack = int(np.where(types == 3)[0][0])
    pv = [i for i in range(n) if types[i] == 2]
    pq = [i for i in range(n) if types[i] == 1]

    p = -bus[:, 2] / base
    q = -bus[:, 3] / base
    vm = np.ones(n)
    for row in gen:
        i = int(row[0]) - 1
        p[i] += row[1] / base
        vm[i] = row[5]
    va = np.zeros(n)

    nonslack = [i for i in range(n) if i != slack]
    for it in range(maxit):
        V = vm * np.exp(1j * va)
        S = V * np.conj(Y @ V)
        dp = p[nonslack] - S.real[nonslack]
        dq = q[pq] - S.imag[pq]
        mis = np.concatenate([dp, dq])
        if np.max(np.abs(mis)) < tol:
            return va, vm, it, np.max(np.abs(mis))
        # full complex-derivative Jacobian, reduced to unknowns
        dS_dva = 1j * np.diag(V) @ (np.diag(np.conj(Y @ V)) - np.conj(Y) @ np.diag(np.conj(V)))
        dS_dvm = np.diag(V) @ np.conj(Y @ np.diag(V / vm)) + np.diag(np.conj(Y @ V)) @ np.diag(V / vm)
        J11 = dS_dva.real[np.ix_(nonslack, nonslack)]
        J12 = dS_dvm.real[np.ix_(nonslack, pq)]
        J21 = dS_dva.imag[np.ix_(pq, nonslack)]
        J22 = dS_dvm.imag[np.ix_(pq, pq)]
        J = np.block([[J11, J12], [J21, J22]])
        dx = np.linalg.solve(J, mis)
        va[nonslack] += dx[: len(nonslack)]
        vm[pq] += dx[len(nonslack):]
    raise RuntimeError("did not converge")


def main():
    case, out = sys.argv[1], sys.argv[2]
    base, tables = parse_case(case)
    va, vm, it, res = solve(base, tables)
    json.dump(
        {
            "theta_rad": [float(x) for x in va],
            "vmag_pu": [float(x) for x in vm],
            "iterations": it,
            "residual": res,
        },
        open(out, "w"),
        indent=1,
    )
    print("converged in", it, "iterations, residual", res)
    print("V range", vm.min(), vm.max())
    print("theta range (deg)", np.degrees(va.min()), np.degrees(va.max()))


if __name__ == "__main__":
    main()

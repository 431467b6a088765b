#!/usr/bin/env python3
"""Regenerate assets/goldens/*.json from assets/cases/*.json.

The solver here is deliberately independent of the C++ library: it works with
complex bus voltages, complex power S = V * conj(Y V) and an analytic
Jacobian of S, and uses dense numpy LU. Output ordering matches the library's
internal bus order (slack, then PV, then PQ, file order within each class) and
the Cartesian layout u = (Re V_1, Im V_1, Re V_2, Im V_2, ...).

Usage: python3 tools/regen_goldens.py [assets_dir]
"""

import json
import pathlib
import sys

import numpy as np

KIND_ORDER = {"slack": 0, "pv": 1, "pq": 2}


def load(path):
    doc = json.loads(path.read_text())
    buses = sorted(doc["buses"], key=lambda b: KIND_ORDER[b["kind"]])  # stable
    index = {b["id"]: k for k, b in enumerate(buses)}
    n = len(buses)
    Y = np.zeros((n, n), dtype=complex)
    for br in doc["branches"]:
        k, l = index[br["from"]], index[br["to"]]
        y = 1.0 / complex(br["r"], br["x"])
        sh = 0.5j * br.get("b_sh", 0.0)
        Y[k, k] += y + sh
        Y[l, l] += y + sh
        Y[k, l] -= y
        Y[l, k] -= y
    return buses, Y


def mismatch(buses, Y, u):
    V = u[0::2] + 1j * u[1::2]
    S = V * np.conj(Y @ V)
    F = np.zeros(2 * len(buses))
    for k, b in enumerate(buses):
        if b["kind"] == "slack":
            F[2 * k] = abs(V[k]) ** 2 - b.get("v_set", 1.0) ** 2
            F[2 * k + 1] = V[k].imag
        elif b["kind"] == "pv":
            F[2 * k] = S[k].real - b["p_gen"]
            F[2 * k + 1] = abs(V[k]) ** 2 - b["v_set"] ** 2
        else:
            F[2 * k] = S[k].real + b.get("p_load", 0.0)
            F[2 * k + 1] = S[k].imag + b.get("q_load", 0.0)
    return F


def jacobian(buses, Y, u):
    n = len(buses)
    V = u[0::2] + 1j * u[1::2]
    I = Y @ V
    J = np.zeros((2 * n, 2 * n))
    for l in range(n):
        for part, dv in ((0, 1.0), (1, 1j)):
            col = 2 * l + part
            dV = np.zeros(n, dtype=complex)
            dV[l] = dv
            dS = dV * np.conj(I) + V * np.conj(Y @ dV)
            for k, b in enumerate(buses):
                dmag = 2 * (V[k].real * dV[k].real + V[k].imag * dV[k].imag)
                if b["kind"] == "slack":
                    J[2 * k, col] = dmag
                    J[2 * k + 1, col] = dV[k].imag
                elif b["kind"] == "pv":
                    J[2 * k, col] = dS[k].real
                    J[2 * k + 1, col] = dmag
                else:
                    J[2 * k, col] = dS[k].real
                    J[2 * k + 1, col] = dS[k].imag
    return J


def solve(buses, Y, eps=1e-8, kmax=20):
    n = len(buses)
    u = np.zeros(2 * n)
    u[0::2] = 1.0
    trace = []
    k = 0
    while True:
        F = mismatch(buses, Y, u)
        trace.append(float(np.max(np.abs(F))))
        if not (k < kmax and trace[-1] >= eps):
            break
        u = u + np.linalg.solve(jacobian(buses, Y, u), -F)
        k += 1
    iterations = k
    # Two extra polishing steps drive the golden residual to rounding level.
    for _ in range(2):
        u = u + np.linalg.solve(jacobian(buses, Y, u), -mismatch(buses, Y, u))
    return u, trace, iterations


PROVENANCE = {
    "case3": "hand-built 3-bus case (slack, PV, PQ) covering every row kind",
    "case5": "hand-built 5-bus meshed case with one PV and three PQ buses",
    "case14": "IEEE 14-bus test data in per-unit on 100 MVA; PV p_gen is net generation minus local load; "
              "transformer taps ignored and the bus-9 shunt capacitor dropped",
}


def main():
    root = pathlib.Path(sys.argv[1]) if len(sys.argv) > 1 else pathlib.Path(__file__).resolve().parent.parent / "assets"
    out_dir = root / "goldens"
    out_dir.mkdir(exist_ok=True)
    for name in ("case3", "case5", "case14"):
        buses, Y = load(root / "cases" / f"{name}.json")
        u, trace, iterations = solve(buses, Y)
        residual = float(np.max(np.abs(mismatch(buses, Y, u))))
        doc = {
            "case": name,
            "solution": [float(v) for v in u],
            "residual_trace": trace,
            "iterations": iterations,
            "final_residual": residual,
            "provenance": PROVENANCE[name] + "; golden from tools/regen_goldens.py (dense complex-power Newton, flat start)",
        }
        (out_dir / f"{name}.json").write_text(json.dumps(doc, indent=2) + "\n")
        print(f"{name}: {iterations} iterations, final residual {residual:.3e}")


if __name__ == "__main__":
    main()

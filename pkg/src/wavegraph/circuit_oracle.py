"""Exact DC operating-point solver: wires are contracted into supernodes,
resistors and batteries (as Norton equivalents) are stamped into a
conductance matrix, and the grounded system is solved by Cholesky.

Every battery carries a nonzero internal resistance by construction, so
the Norton transformation is always valid and no branch-current unknowns
are needed.
"""

from __future__ import annotations

from dataclasses import dataclass

import numpy as np
from scipy.linalg import cho_factor, cho_solve

from .taskgen import KIND_BATTERY, KIND_RESISTOR, KIND_WIRE, CircuitNetlist


class SingularCircuitError(ValueError):
    """Raised when a supernode is left floating (no conductive path to ground)."""

    def __init__(self, supernode_members):
        self.supernode_members = sorted(supernode_members)
        super().__init__(
            f"floating supernode containing nodes {self.supernode_members}")


@dataclass
class ContractedCircuit:
    supernode_of: np.ndarray   # node id -> supernode index
    members: list              # supernode index -> list of node ids
    conductance: np.ndarray    # [m x m] siemens
    injection: np.ndarray      # [m] amperes
    ground: int                # supernode index of the ground node


def contract_wires(net: CircuitNetlist) -> ContractedCircuit:
    """Merge wire-connected nodes into supernodes; self-loop wires vanish."""
    parent = list(range(net.n_nodes))

    def find(x):
        while parent[x] != x:
            parent[x] = parent[parent[x]]
            x = parent[x]
        return x

    for c in net.components:
        if c.kind == KIND_WIRE:
            ra, rb = find(c.a), find(c.b)
            if ra != rb:
                parent[max(ra, rb)] = min(ra, rb)

    roots = sorted({find(u) for u in range(net.n_nodes)})
    index = {r: i for i, r in enumerate(roots)}
    supernode_of = np.array([index[find(u)] for u in range(net.n_nodes)],
                            dtype=np.int64)
    members = [[] for _ in roots]
    for u in range(net.n_nodes):
        members[supernode_of[u]].append(u)
    m = len(roots)
    return ContractedCircuit(
        supernode_of=supernode_of, members=members,
        conductance=np.zeros((m, m)), injection=np.zeros(m),
        ground=int(supernode_of[net.ground]))


def _stamp(net: CircuitNetlist, cc: ContractedCircuit) -> None:
    G, I = cc.conductance, cc.injection
    s = cc.supernode_of
    for c in net.components:
        if c.kind == KIND_WIRE:
            continue
        a, b = int(s[c.a]), int(s[c.b])
        if c.kind == KIND_RESISTOR:
            g = 1.0 / c.resistance
        elif c.kind == KIND_BATTERY:
            g = 1.0 / c.resistance
            pos = int(s[c.positive_terminal])
            neg = b if pos == a else a
            # Norton equivalent: source current V/R into the positive terminal
            i_src = c.voltage / c.resistance
            I[pos] += i_src
            I[neg] -= i_src
        else:
            raise ValueError(f"unknown component kind {c.kind!r}")
        if a == b:
            continue
        G[a, a] += g
        G[b, b] += g
        G[a, b] -= g
        G[b, a] -= g


def solve_dc(net: CircuitNetlist) -> np.ndarray:
    """Per-node voltages relative to ground (exactly 0 at the ground node)."""
    cc = contract_wires(net)
    _stamp(net, cc)
    m = cc.conductance.shape[0]
    keep = [i for i in range(m) if i != cc.ground]
    v_super = np.zeros(m)
    if keep:
        G = cc.conductance[np.ix_(keep, keep)]
        I = cc.injection[keep]
        # any isolated supernode shows up as an all-zero row
        zero_rows = np.where(~G.any(axis=1))[0]
        if zero_rows.size:
            raise SingularCircuitError(cc.members[keep[int(zero_rows[0])]])
        try:
            v_super[keep] = cho_solve(cho_factor(G), I)
        except np.linalg.LinAlgError as err:
            raise SingularCircuitError(
                cc.members[keep[0]]) from err
    return v_super[cc.supernode_of]


def kcl_residual(net: CircuitNetlist, voltages: np.ndarray) -> float:
    """Max over non-ground supernodes of |sum of branch currents| (amperes).

    Battery branch current out of the positive terminal is
    (V_pos - V_neg - V_src) / R_internal.
    """
    voltages = np.asarray(voltages, dtype=np.float64).reshape(-1)
    cc = contract_wires(net)
    m = len(cc.members)
    net_current = np.zeros(m)
    s = cc.supernode_of
    for c in net.components:
        if c.kind == KIND_WIRE:
            continue
        a, b = int(s[c.a]), int(s[c.b])
        if a == b:
            continue
        va, vb = voltages[c.a], voltages[c.b]
        if c.kind == KIND_RESISTOR:
            i_ab = (va - vb) / c.resistance
        else:
            pos_is_a = int(s[c.positive_terminal]) == a
            v_pos, v_neg = (va, vb) if pos_is_a else (vb, va)
            i_out_pos = (v_pos - v_neg - c.voltage) / c.resistance
            i_ab = i_out_pos if pos_is_a else -i_out_pos
        net_current[a] += i_ab
        net_current[b] -= i_ab
    net_current[cc.ground] = 0.0
    return float(np.abs(net_current).max()) if m > 1 else 0.0

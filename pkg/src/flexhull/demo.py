"""Pinned five-DER demo fleet (2 batteries, 1 PV, 2 wind, 1-10 kVA ratings).

This is the fleet the acceptance suite and the README examples run against.
It is a stand-in with made-up ratings, chosen so the hexagon-vs-square
quality ordering matches the qualitative published comparison; it is not
anyone's measured data.
"""

from __future__ import annotations

from . import domain


def demo_fleet_config(prototype_edges: int = 4, outputs: str = "out") -> dict:
    return {
        "ders": [
            {"type": "battery", "params": {"p_max": 3.0, "s": 4.0}},
            {"type": "battery", "params": {"p_max": 1.5, "s": 2.5}},
            {"type": "pv", "params": {"p_max": 2.0, "s": 2.8}},
            {
                "type": "wind",
                "params": {
                    "p_max": 2.0, "p0": 0.2, "q0": 0.15,
                    "s1": 2.6, "s2": 2.4, "rotor_coupling": 1.0,
                },
            },
            {
                "type": "wind",
                "params": {
                    "p_max": 4.0, "p0": 0.3, "q0": 0.2,
                    "s1": 5.0, "s2": 4.6, "rotor_coupling": 1.0,
                },
            },
        ],
        "prototype": {"kind": "regular", "n": prototype_edges, "rotation": 0.0},
        "fit": {
            "degree": None,
            "bisection_tol": 1e-3,
            "epsilon_step": 0.1,
            "max_outer_iters": 40,
            "seed": 7,
        },
        "outputs": outputs,
    }


def demo_fleet_domains() -> list[domain.FlexDomain]:
    return [domain.from_json(d) for d in demo_fleet_config()["ders"]]

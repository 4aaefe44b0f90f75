#!/usr/bin/env python3
"""Gain synthesis study on the bundled rotorcraft-style LPV plant.

Synthesizes a single static state-feedback gain for the 4-vertex polytopic
plant (2 scheduling parameters on a box, n = 5), then audits the result from
scratch: quadratic stability of every closed-loop vertex under the common
Lyapunov matrix, the per-vertex H2 norms against the guaranteed bound, and
eigenvalue placement at random interior parameter points. An epsilon sweep
at the end shows how the strictness margin trades against the achieved
bound.
"""

import argparse
from pathlib import Path

import numpy as np

from lpvh2.h2 import h2_norm, verify_quadratic_stability
from lpvh2.lpv import close_loop, evaluate, instantiate_vertices
from lpvh2.plantfile import load_plant
from lpvh2.synthesis import synthesize

DEFAULT_PLANT = Path(__file__).resolve().parents[1] / "plants" / "rotorcraft_box.json"


def main():
    parser = argparse.ArgumentParser(description=__doc__)
    parser.add_argument("--plant", type=Path, default=DEFAULT_PLANT)
    parser.add_argument("--samples", type=int, default=50,
                        help="random interior parameter points to audit")
    parser.add_argument("--seed", type=int, default=7)
    args = parser.parse_args()

    plant = load_plant(args.plant)
    n, m_w, m_u, q = plant.dims
    print("=" * 70)
    print(f"plant: {plant.name}  (n = {n}, m_w = {m_w}, m_u = {m_u}, q = {q}, "
          f"{len(plant.polytope.vertices)} vertices)")
    print("=" * 70)

    result = synthesize(plant)
    print(f"solver: {result.solver_status} in {result.solution.iterations} iterations")
    print(f"guaranteed bound gamma = {result.gamma:.6f}")
    print(f"cond(X) = {result.cond_x:.3e}")
    print(f"K =")
    for row in result.K:
        print("   " + " ".join(f"{v: .5f}" for v in row))

    closed = [close_loop(v, result.K) for v in instantiate_vertices(plant)]
    P = np.linalg.inv(result.X)
    certificate = verify_quadratic_stability((P + P.T) / 2, closed, margin=0.0)
    print()
    print(f"quadratic stability with P = X^-1: {'valid' if certificate.valid else 'INVALID'}")
    print("per-vertex audit:")
    print("  vertex   max eig(A'P + PA)    h2 norm    below gamma")
    for i, cl in enumerate(closed):
        h2 = h2_norm(cl)
        print(f"  {i:4d}     {certificate.per_vertex_max_eig[i]: .3e}      "
              f"{h2:.6f}   {h2 < result.gamma}")

    lo, hi = plant.polytope.lower, plant.polytope.upper
    rng = np.random.default_rng(args.seed)
    worst_re = -np.inf
    for _ in range(args.samples):
        xi = lo + (hi - lo) * rng.random(len(lo))
        v = evaluate(plant, xi)
        worst_re = max(worst_re, np.linalg.eigvals(v.A + v.B @ result.K).real.max())
    print()
    print(f"interior sweep: worst max Re eig over {args.samples} random points "
          f"= {worst_re:.4f}")

    print()
    print("epsilon sweep (strictness margin vs achieved bound):")
    print("  epsilon     gamma")
    for eps in (1e-8, 1e-7, 1e-6, 1e-5, 1e-4):
        swept = synthesize(plant, epsilon=eps)
        print(f"  {eps:.0e}    {swept.gamma:.8f}")


if __name__ == "__main__":
    main()

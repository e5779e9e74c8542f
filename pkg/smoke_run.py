#!/usr/bin/env python3
"""Manual smoke run for hofer-lab.

Runs every experiment once on small grids and prints a line per result. Nothing is
written to disk.
"""

import sys
from fractions import Fraction
from typing import Any

from hofer_lab.core import (
    ANNULUS,
    PLANE,
    GridSpec,
    GrowthSchedule,
    Linear,
    MapFamily,
    QuadraticIrrational,
    RecurrenceSet,
    Rotation,
    ak_build,
    cf_expand,
    construct_exp_liouville,
    entropy_slope,
    exp_liouville_witnesses,
    inequality_harness,
    lab_constants,
    plan_schedule,
    recurrence_experiment,
    rigidity_scan,
)

GRID = GridSpec(counts=(16, 9))


def print_section(title: str) -> None:
    """Print a section header."""
    print(f"\n{'=' * 60}")
    print(f"  {title}")
    print(f"{'=' * 60}\n")


def print_result(name: str, result: Any) -> None:
    """Print a result line."""
    print(f"✓ {name}")
    print(f"  {result}\n")


def run_constants() -> None:
    print_section("Constants")
    for manifold in (ANNULUS, PLANE):
        sampled, constants = lab_constants(manifold, GRID)
        print_result(
            manifold.kind.value,
            f"ε={sampled.epsilon:.4g} L={sampled.lipschitz_L:.4g} δ={constants.delta:.4g} C={constants.C:.4g}",
        )


def run_harness() -> None:
    print_section("Inequality Harness")
    sampled, constants = lab_constants(ANNULUS, GRID)
    report = inequality_harness(MapFamily(), 3, 0, constants, sampled.lipschitz_L, GRID)
    print_result("annulus x3", f"violations={report.violations} min_slack={report.min_slack_ratio:.3g}")


def run_rigidity() -> None:
    print_section("Rigidity")
    schedule = GrowthSchedule.parse("c_n=n")
    alpha = construct_exp_liouville(schedule, 4)
    report = rigidity_scan(Rotation(angle="1/2"), alpha, 8.41, GRID, c=1, schedule=schedule)
    for row in report.rows:
        print_result(f"n={row.n}", f"hofer_ub={row.hofer_ub:.3g} c0_upper={row.c0.upper:.3g}")
    certificate = exp_liouville_witnesses(alpha, 1, 1000)
    print_result("witnesses", [w.k for w in certificate.witnesses])


def run_ak() -> None:
    print_section("Anosov-Katok Build")
    result = ak_build(plan_schedule(2, grid=GRID), GRID)
    for approximant in result.approximants:
        d = approximant.diagnostics
        print_result(f"stage {d.stage}", f"q={d.q} c0_gap<={d.c0_gap.upper:.3g} accepted={d.accepted}")


def run_recurrence_and_entropy() -> None:
    print_section("Recurrence and Entropy")
    golden = cf_expand(QuadraticIrrational.golden())
    report = recurrence_experiment(golden, RecurrenceSet(), 10_000)
    print_result("golden ball r=0.1", f"density={report.density:.4g} bound={report.bound:.4g}")
    rational = recurrence_experiment(Fraction(1, 3), RecurrenceSet(), 99)
    print_result("1/3", f"density={rational.density:.4g} bound={rational.bound:.4g}")
    cat = Linear(matrix=((2.0, 1.0), (1.0, 1.0)))
    fit = entropy_slope(cat, 32, GridSpec(counts=(9, 9)), manifold=PLANE)
    print_result("cat map", f"slope={fit.slope:.6f} bound={fit.bound:.6f}")


def main() -> None:
    """Run every section."""
    print("\n" + "=" * 60)
    print("  hofer-lab Smoke Run")
    print("=" * 60)

    try:
        run_constants()
        run_harness()
        run_rigidity()
        run_ak()
        run_recurrence_and_entropy()
        print_section("Smoke Run Completed ✓")
    except KeyboardInterrupt:
        print("\n\nSmoke run interrupted by user.")
        sys.exit(1)
    except Exception as e:
        print(f"\n✗ Smoke run failed with error: {e}")
        import traceback

        traceback.print_exc()
        sys.exit(1)


if __name__ == "__main__":
    main()

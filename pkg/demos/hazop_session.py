"""Walk through one HAZOP session on the adaptive cruise control capability.

Enumerates the deviation cells, checks the shipped worksheet against them,
lints it, and prints the rendered worksheet head.

    python3 demos/hazop_session.py
"""

from perception_hazop import data_path
from perception_hazop.coverage import check_coverage, enumerate_cells
from perception_hazop.model import load_model, validate_model
from perception_hazop.report import render_worksheet
from perception_hazop.worksheet import RuleSet, lint_worksheet, load_usecases, load_worksheet


def main():
    model = load_model(data_path("model.json"))
    print("model valid:", validate_model(model).ok)

    cells = enumerate_cells(model, ["ACC"])
    print(f"ACC has {len(cells)} deviation cells, e.g.")
    for c in cells[:3]:
        print("   ", c.function_id, c.parameter_id, c.guideword.label)

    ws = load_worksheet(data_path("worksheets", "acc.json"))
    cov = check_coverage(cells, ws.entries)
    print(f"worksheet rows: {len(ws.entries)}, coverage {cov.covered_fraction:.0%}")

    lint = lint_worksheet(ws, model, RuleSet.of("reverse-needs-plausibility"))
    print("lint:", "clean" if lint.ok else lint.rules())

    # drop the reverse-range row to see the gap reported
    partial = [e for e in ws.entries if e.row_id != "ACC 1.1.2/Reverse"]
    gap = check_coverage(cells, partial)
    print("without ACC 1.1.2/Reverse:", [f"{m.parameter_id}/{m.guideword.name}" for m in gap.missing])

    md = render_worksheet(ws, load_usecases(data_path("usecases.json")), "md")
    print()
    print("\n".join(md.splitlines()[:16]))


if __name__ == "__main__":
    main()

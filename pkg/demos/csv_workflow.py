"""The file-based workflow end to end: write a task CSV, load it, estimate
every task's mean through the command-line entry points, and read the
reports back.

Equivalent shell commands:

    mtppi estimate --config est.json --seed 3 --out out/single
    mtppi report --config rpt.json --out out/replicated
"""

import csv
import json
import os
import tempfile

import numpy as np

from mtppi.cli import main
from mtppi.experiments import load_semi_synthetic

root = tempfile.mkdtemp(prefix="csv-workflow-")

# One row per item: scores everywhere, ground truth only where a row is
# label-eligible. Blank y with flag 0 marks score-only items.
rng = np.random.default_rng(5)
csv_path = os.path.join(root, "tasks.csv")
with open(csv_path, "w", newline="", encoding="utf-8") as fh:
    writer = csv.writer(fh, lineterminator="\n")
    writer.writerow(["task_id", "item_id", "y_hat", "y", "label_eligible"])
    for task_id, power in (("toxicity", 1.6), ("helpfulness", 2.4)):
        for i in range(40):
            score = rng.uniform()
            eligible = i % 4 == 0  # every fourth item got human labels
            truth = f"{score ** power + rng.normal(0.0, 0.05):.4f}" if eligible else ""
            writer.writerow([task_id, f"item{i:03d}", f"{score:.4f}", truth, int(eligible)])

study = load_semi_synthetic(csv_path)
for task in study.tasks:
    print(f"loaded {task.task_id}: {task.n_items} items, {task.n_labeled} labeled")
print()

# Single-shot estimates: the eligible labels ARE the labeled set.
est_cfg = os.path.join(root, "est.json")
with open(est_cfg, "w", encoding="utf-8") as fh:
    json.dump(
        {
            "input": csv_path,
            "run": {"methods": ["classical", "ppi", "ppi_pp", "greppi", "areppi"]},
        },
        fh,
    )
out_dir = os.path.join(root, "single")
main(["estimate", "--config", est_cfg, "--seed", "3", "--out", out_dir])

with open(os.path.join(out_dir, "estimates.csv"), encoding="utf-8") as fh:
    for line in fh:
        print("  " + line.rstrip())
print()

# The same CSV also drives replicated runs (labels redrawn from the
# eligible pool); without full ground truth the summary reports interval
# widths rather than coverage or MSE.
rep_cfg = os.path.join(root, "rep.json")
with open(rep_cfg, "w", encoding="utf-8") as fh:
    json.dump(
        {
            "input": csv_path,
            "run": {
                "methods": ["classical", "ppi", "greppi"],
                "label_budgets": [6, 10],
                "replications": 50,
            },
        },
        fh,
    )
rep_dir = os.path.join(root, "replicated")
main(["estimate", "--config", rep_cfg, "--seed", "3", "--out", rep_dir])

# report: mirror an existing summary.csv as summary.json
rpt_cfg = os.path.join(root, "rpt.json")
with open(rpt_cfg, "w", encoding="utf-8") as fh:
    json.dump({"input": os.path.join(rep_dir, "summary.csv")}, fh)
main(["report", "--config", rpt_cfg, "--out", rep_dir])
print()
print("outputs under", root)

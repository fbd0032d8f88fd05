#!/usr/bin/env python3
"""Regenerates the bundled simulator calibration data.

Writes crates/core/data/events.toml (the 58 monitored events with their
typical rate scale and system loadings) and one TOML file per bundled
workload under crates/core/data/workloads/. All constants are invented;
they are chosen so that workload families are separable from their event
profiles and so that the batch-size/core-count trade-off has the expected
shape.
"""

import math
import pathlib

import numpy as np

ROOT = pathlib.Path(__file__).resolve().parent.parent / "crates" / "core" / "data"

EVENTS = [
    "branch-instructions", "branch-misses", "bus-cycles", "cache-misses",
    "cache-references", "cpu-cycles", "instructions", "ref-cycles",
    "alignment-faults", "context-switches", "cpu-clock", "cpu-migrations",
    "major-faults", "minor-faults", "page-faults", "task-clock",
    "L1-dcache-load-misses", "L1-dcache-loads", "L1-dcache-stores",
    "L1-icache-load-misses", "LLC-load-misses", "LLC-loads",
    "LLC-store-misses", "LLC-stores", "branch-load-misses", "branch-loads",
    "dTLB-load-misses", "dTLB-loads", "dTLB-store-misses", "dTLB-stores",
    "iTLB-load-misses", "iTLB-loads", "node-load-misses", "node-loads",
    "node-store-misses", "node-stores", "mem-loads", "mem-stores",
    "cycle-activity.stalls-total", "cycle-activity.stalls-mem-any",
    "resource-stalls.any", "uops-issued.any", "uops-retired.all",
    "fp-arith.scalar-double", "fp-arith.128b-packed-double",
    "fp-arith.256b-packed-double", "fp-arith.scalar-single",
    "fp-arith.256b-packed-single", "offcore-requests.all-data-rd",
    "offcore-requests.demand-data-rd", "l2-rqsts.miss", "l2-rqsts.references",
    "machine-clears.count", "lsd.uops", "idq.dsb-uops", "idq.mite-uops",
    "itlb-misses.walk-completed", "dtlb-load-misses.walk-completed",
]
assert len(EVENTS) == 58

rng = np.random.default_rng(20200517)
log_scale = rng.uniform(4.0, 8.0, size=58)
scale = 10.0 ** log_scale
core_loading = rng.uniform(0.03, 0.09, size=58)
memory_loading = rng.uniform(0.01, 0.04, size=58)


def fmt(values):
    return "[" + ", ".join(f"{v:.6g}" for v in values) + "]"


def pattern(strength):
    return np.exp(strength * rng.standard_normal(58))


family_pattern = {"I": pattern(1.0), "II": pattern(1.0)}
family_pattern["III"] = family_pattern["II"] ** 0.9 * pattern(0.3)


def member(family, strength=0.25):
    return 0.5 * scale * family_pattern[family] * pattern(strength)


def novel():
    return 0.5 * scale * pattern(1.0) * pattern(0.25)


models = {
    "lenet5": member("I"),
    "cnn": member("II"),
    "lstm": member("II"),
    "jacobi": member("III"),
    "spk-means": member("III"),
    "alexnet-mini": novel(),
    "gru": novel(),
}
datasets = {
    "mnist": member("I"),
    "fashion-mnist": member("I"),
    "news20": member("II"),
    "rodinia": member("III"),
    "cifar10": novel(),
    "imdb": novel(),
}

# (file, model, dataset, family, samples, one-core compute seconds per epoch,
#  sync/compute ratio, a_max0, mem_floor)
WORKLOADS = [
    ("lenet5-mnist", "lenet5", "mnist", "type-i", 60000, 360.0, 1.5, 0.93, 8),
    ("lenet5-fashion-mnist", "lenet5", "fashion-mnist", "type-i", 60000, 400.0, 1.5, 0.88, 8),
    ("cnn-news20", "cnn", "news20", "type-ii", 11307, 300.0, 2.0, 0.82, 8),
    ("lstm-news20", "lstm", "news20", "type-ii", 11307, 420.0, 2.0, 0.79, 8),
    ("jacobi-rodinia", "jacobi", "rodinia", "type-iii", 1650, 36.0, 2.0, 0.95, 8),
    ("spk-means-rodinia", "spk-means", "rodinia", "type-iii", 1650, 30.0, 2.0, 0.90, 8),
]
HOLDOUT = [
    ("alexnet-mini-cifar10", "alexnet-mini", "cifar10", "type-i", 50000, 380.0, 1.5, 0.84, 8),
    ("gru-imdb", "gru", "imdb", "type-ii", 25000, 360.0, 2.0, 0.86, 8),
]

with open(ROOT / "events.toml", "w") as f:
    f.write("# Monitored hardware events: typical per-second rate and the share of that\n")
    f.write("# rate added per unit of core / memory pressure. Invented constants.\n\n")
    for name, s, c, m in zip(EVENTS, scale, core_loading, memory_loading):
        f.write(f'[[event]]\nname = "{name}"\nscale = {s:.6g}\n'
                f"core_loading = {c:.6g}\nmemory_loading = {m:.6g}\n\n")

for folder, rows in (("workloads", WORKLOADS), ("holdout", HOLDOUT)):
    out = ROOT / folder
    out.mkdir(exist_ok=True)
    for name, model, dataset, family, samples, compute, ratio, amax, floor in rows:
        kappa = compute / samples
        sigma = ratio * kappa
        with open(out / f"{name}.toml", "w") as f:
            f.write(f'model_id = "{model}"\ndataset_id = "{dataset}"\n')
            f.write(f"samples_per_epoch = {samples}\nfamily = \"{family}\"\n\n")
            f.write("[calibration]\n")
            f.write(f"kappa = {kappa:.9g}\nsigma = {sigma:.9g}\n")
            f.write(f"a_max0 = {amax}\nbeta_batch = 0.02\nlr_opt = 0.01\n")
            f.write("gamma = 0.05\ndelta = 0.1\ntau = 10.0\n")
            f.write(f"mem_floor_gb = {floor}.0\nspill_factor = 1.5\n")
            f.write("p_idle_w = 60.0\np_core_w = 8.0\n")
            f.write("noise_scale = 0.02\nmultiplex_fraction = 0.3\n")
            f.write(f"event_signature_model = {fmt(models[model])}\n")
            f.write(f"event_signature_dataset = {fmt(datasets[dataset])}\n")

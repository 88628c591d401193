"""Built-in experiment configs reproducing the qualitative findings at desk scale."""

from __future__ import annotations

from sgdalab.experiment import ConfigError

RECIPE_NAMES = ("us_vs_is", "vr_compare", "distributed_compare",
                "qsgda_vs_diana_fullbatch")


def _l1_box(lam: float, radius: float) -> dict:
    return {"kind": "l1_box", "lam": lam, "radius": radius}


def us_vs_is(regularized: bool = False, seeds=None) -> dict:
    """Uniform vs importance sampling on a game with one component scaled x100."""
    cfg = {
        "schema_version": 1,
        "name": "us_vs_is",
        "problem": {
            "generator": {"n": 100, "d": 20, "seed": 11, "mu_min": 1.0,
                          "sym_scale": 0.3, "skew_scale": 0.3, "offset_scale": 100.0},
            "scale_component": {"index": 0, "factor": 100.0},
        },
        "x0": {"kind": "offset", "scale": 100.0, "seed": 101},
        "K": 600,
        "record_every": 2,
        "seeds": seeds if seeds is not None else list(range(20)),
        "methods": [
            {"name": "sgda", "label": "us", "params": {"sampling": "uniform", "batch": 1},
             "stepsize": {"kind": "theory"}},
            {"name": "sgda", "label": "is", "params": {"sampling": "importance", "batch": 1},
             "stepsize": {"kind": "theory"}},
        ],
        "plots": [
            {"out": "us_vs_is_calls.png", "x": "oracle_calls", "y": "dist_sq",
             "groups": [{"label": "US", "pattern": "us_*.csv"},
                        {"label": "IS", "pattern": "is_*.csv"}]},
        ],
    }
    if regularized:
        cfg["problem"]["regularizer"] = _l1_box(0.05, 1.0)
        cfg["name"] += "_l1box"
    return cfg


def vr_compare(regularized: bool = False, seeds=None) -> dict:
    """Variance-reduced estimators vs plain sampling at a fixed oracle budget.

    Every method's horizon is sized so it spends roughly 200 n oracle calls.
    """
    n = 50
    budget = 200 * n
    cfg = {
        "schema_version": 1,
        "name": "vr_compare",
        "problem": {
            "generator": {"n": n, "d": 20, "seed": 5, "mu_min": 1.0,
                          "sym_scale": 0.25, "skew_scale": 0.25, "offset_scale": 100.0},
        },
        "x0": {"kind": "offset", "scale": 5.0, "seed": 102},
        "K": budget,
        "record_every": 20,
        "seeds": seeds if seeds is not None else [0, 1, 2],
        "methods": [
            {"name": "sgda", "label": "sgda_us", "params": {"sampling": "uniform"},
             "stepsize": {"kind": "theory"}, "K": budget, "record_every": 20},
            {"name": "full_batch", "label": "full_batch",
             "stepsize": {"kind": "theory"}, "K": budget // n, "record_every": 1},
            {"name": "lsvrg", "label": "lsvrg", "params": {"p": 1.0 / n},
             "stepsize": {"kind": "theory"}, "K": budget // 3, "record_every": 10},
            {"name": "saga", "label": "saga",
             "stepsize": {"kind": "theory"}, "K": budget - n, "record_every": 20},
            {"name": "sega", "label": "sega",
             "stepsize": {"kind": "theory"}, "K": budget, "record_every": 20},
            {"name": "vr_diana", "label": "vr_diana",
             "params": {"workers": 10, "quantizer": {"kind": "identity"}, "p": 1.0},
             "stepsize": {"kind": "theory"},
             "K": (budget - n) // 70, "record_every": 1},
        ],
        "plots": [
            {"out": "vr_compare_calls.png", "x": "oracle_calls", "y": "dist_sq",
             "groups": [{"label": "SGDA-US", "pattern": "sgda_us_*.csv"},
                        {"label": "full batch", "pattern": "full_batch_*.csv"},
                        {"label": "L-SVRG", "pattern": "lsvrg_*.csv"},
                        {"label": "SAGA", "pattern": "saga_*.csv"},
                        {"label": "SEGA", "pattern": "sega_*.csv"},
                        {"label": "VR-DIANA", "pattern": "vr_diana_*.csv"}]},
        ],
    }
    if regularized:
        cfg["problem"]["regularizer"] = _l1_box(0.05, 1.0)
        cfg["name"] += "_l1box"
    return cfg


def distributed_compare(regularized: bool = False, seeds=None) -> dict:
    """Compressed distributed methods vs the uncompressed baseline, bits and calls."""
    quant = {"kind": "randk", "k": 5}
    workers = 10
    cfg = {
        "schema_version": 1,
        "name": "distributed_compare",
        "problem": {
            "generator": {"n": 100, "d": 20, "seed": 17, "mu_min": 1.0,
                          "sym_scale": 0.3, "skew_scale": 0.3, "offset_scale": 100.0},
        },
        "x0": {"kind": "offset", "scale": 10.0, "seed": 103},
        "K": 1500,
        "record_every": 5,
        "seeds": seeds if seeds is not None else [0, 1, 2],
        "methods": [
            {"name": "qsgda", "label": "sgda_uncompressed",
             "params": {"workers": workers, "quantizer": {"kind": "identity"},
                        "sigma": 1.0},
             "stepsize": {"kind": "theory"}},
            {"name": "qsgda", "label": "qsgda",
             "params": {"workers": workers, "quantizer": quant, "sigma": 1.0},
             "stepsize": {"kind": "theory"}},
            {"name": "diana", "label": "diana",
             "params": {"workers": workers, "quantizer": quant, "sigma": 1.0},
             "stepsize": {"kind": "theory"}},
            {"name": "vr_diana", "label": "vr_diana",
             "params": {"workers": workers, "quantizer": quant},
             "stepsize": {"kind": "theory"}},
        ],
        "plots": [
            {"out": "distributed_calls.png", "x": "oracle_calls", "y": "dist_sq",
             "groups": [{"label": "SGDA", "pattern": "sgda_uncompressed_*.csv"},
                        {"label": "QSGDA", "pattern": "qsgda_*.csv"},
                        {"label": "DIANA", "pattern": "diana_*.csv"},
                        {"label": "VR-DIANA", "pattern": "vr_diana_*.csv"}]},
            {"out": "distributed_bits.png", "x": "uplink_bits", "y": "dist_sq",
             "groups": [{"label": "SGDA", "pattern": "sgda_uncompressed_*.csv"},
                        {"label": "QSGDA", "pattern": "qsgda_*.csv"},
                        {"label": "DIANA", "pattern": "diana_*.csv"},
                        {"label": "VR-DIANA", "pattern": "vr_diana_*.csv"}]},
        ],
    }
    if regularized:
        cfg["problem"]["regularizer"] = _l1_box(0.05, 1.0)
        cfg["name"] += "_l1box"
    return cfg


def qsgda_vs_diana_fullbatch(regularized: bool = False, seeds=None) -> dict:
    """Noiseless heterogeneous workers: shift learning beats naive compression."""
    quant = {"kind": "randk", "k": 5}
    workers = 10
    cfg = {
        "schema_version": 1,
        "name": "qsgda_vs_diana_fullbatch",
        "problem": {
            "generator": {"n": 100, "d": 100, "seed": 23, "mu_min": 1.0,
                          "sym_scale": 0.3, "skew_scale": 0.3, "offset_scale": 100.0},
        },
        "x0": {"kind": "offset", "scale": 10.0, "seed": 104},
        "K": 2500,
        "record_every": 10,
        "seeds": seeds if seeds is not None else [0, 1, 2],
        "methods": [
            {"name": "qsgda", "label": "qsgda",
             "params": {"workers": workers, "quantizer": quant, "sigma": 0.0},
             "stepsize": {"kind": "theory"}},
            {"name": "diana", "label": "diana",
             "params": {"workers": workers, "quantizer": quant, "sigma": 0.0},
             "stepsize": {"kind": "theory"}},
            {"name": "vr_diana", "label": "vr_diana",
             "params": {"workers": workers, "quantizer": quant},
             "stepsize": {"kind": "theory"}, "K": 3500},
        ],
        "plots": [
            {"out": "qsgda_vs_diana_rounds.png", "x": "k", "y": "dist_sq",
             "groups": [{"label": "QSGDA", "pattern": "qsgda_*.csv"},
                        {"label": "DIANA", "pattern": "diana_*.csv"},
                        {"label": "VR-DIANA", "pattern": "vr_diana_*.csv"}]},
            {"out": "qsgda_vs_diana_bits.png", "x": "uplink_bits", "y": "dist_sq",
             "groups": [{"label": "QSGDA", "pattern": "qsgda_*.csv"},
                        {"label": "DIANA", "pattern": "diana_*.csv"},
                        {"label": "VR-DIANA", "pattern": "vr_diana_*.csv"}]},
        ],
    }
    if regularized:
        cfg["problem"]["regularizer"] = _l1_box(0.05, 1.0)
        cfg["name"] += "_l1box"
    return cfg


def builtin_recipe(name: str, regularized: bool = False, seeds=None) -> dict:
    if name == "us_vs_is":
        return us_vs_is(regularized, seeds)
    if name == "vr_compare":
        return vr_compare(regularized, seeds)
    if name == "distributed_compare":
        return distributed_compare(regularized, seeds)
    if name == "qsgda_vs_diana_fullbatch":
        return qsgda_vs_diana_fullbatch(regularized, seeds)
    raise ConfigError(f"unknown recipe {name!r}; choose from {RECIPE_NAMES}")

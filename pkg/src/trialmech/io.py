"""Instance file format.

An instance file is a JSON object::

    {
      "arms": ["arm1", "arm2"],            # or an integer count
      "outcomes": ["lo", "hi"],
      "scores": {"lo": 0, "hi": 1},        # optional default scoring function
      "public_types": ["x"],               # optional, default ["*"]
      "private_types": ["s+", "s-"],       # optional, default ["*"]
      "utilities": {"s+": {"lo": 0, "hi": 1}, "s-": {"lo": 1, "hi": 0}},
      "states": {
        "psi1": {"arm1": {"x": {"lo": 0.2, "hi": 0.8}}, "arm2": {"x": {...}}},
        ...
      },
      "prior": {"psi1": 0.5, "psi2": 0.5},
      "outside_arms": ["arm1"],            # optional, default all arms
      "type_dist": {"x/s+": 0.5, "x/s-": 0.5}   # optional, default uniform
    }

With a single public type the per-arm entry may be the outcome distribution
itself (``"arm1": {"lo": 0.2, "hi": 0.8}``). With a single private type
``utilities`` may be a flat outcome map. Unknown keys are rejected.
"""

from __future__ import annotations

import json
from pathlib import Path
from typing import Any, Mapping

import numpy as np

from .model import Instance, InstanceError

KNOWN_KEYS = {
    "arms", "outcomes", "scores", "public_types", "private_types", "utilities",
    "states", "prior", "outside_arms", "type_dist",
}
REQUIRED_KEYS = {"arms", "outcomes", "utilities", "states", "prior"}


def load_instance(path: str | Path) -> Instance:
    try:
        raw = json.loads(Path(path).read_text())
    except json.JSONDecodeError as exc:
        raise InstanceError([f"{path}: not valid JSON ({exc})"]) from None
    return validate_instance(raw)


def _outcome_vector(m: Any, outcomes: list[str], where: str, errs: list[str]) -> np.ndarray:
    v = np.zeros(len(outcomes))
    if not isinstance(m, Mapping):
        errs.append(f"{where}: expected an outcome map")
        return v
    extra = set(m) - set(outcomes)
    if extra:
        errs.append(f"{where}: unknown outcomes {sorted(extra)}")
    for i, o in enumerate(outcomes):
        if o not in m:
            errs.append(f"{where}: missing entry for outcome {o!r}")
            continue
        try:
            v[i] = float(m[o])
        except (TypeError, ValueError):
            errs.append(f"{where}: non-numeric value for outcome {o!r}")
    return v


def validate_instance(raw: Mapping[str, Any]) -> Instance:
    """Parse and validate a JSON-compatible instance description."""
    errs: list[str] = []
    if not isinstance(raw, Mapping):
        raise InstanceError(["instance must be a JSON object"])
    unknown = set(raw) - KNOWN_KEYS
    if unknown:
        errs.append(f"unknown keys {sorted(unknown)}")
    missing = REQUIRED_KEYS - set(raw)
    if missing:
        errs.append(f"missing keys {sorted(missing)}")
    if errs:
        raise InstanceError(errs)

    arms = raw["arms"]
    if isinstance(arms, int):
        arms = [f"arm{i + 1}" for i in range(arms)]
    arms = [str(a) for a in arms]
    outcomes = [str(o) for o in raw["outcomes"]]
    pub = [str(x) for x in raw.get("public_types", ["*"])]
    priv = [str(s) for s in raw.get("private_types", ["*"])]
    if not arms or not outcomes or not pub or not priv:
        raise InstanceError(["arms, outcomes and type lists must be nonempty"])

    util_raw = raw["utilities"]
    if len(priv) == 1 and isinstance(util_raw, Mapping) and set(util_raw) <= set(outcomes) and priv[0] not in util_raw:
        util_raw = {priv[0]: util_raw}
    utilities = np.zeros((len(outcomes), len(priv)))
    if not isinstance(util_raw, Mapping):
        errs.append("utilities must be a map")
    else:
        extra = set(util_raw) - set(priv)
        if extra:
            errs.append(f"utilities: unknown private types {sorted(extra)}")
        for j, s in enumerate(priv):
            if s not in util_raw:
                errs.append(f"utilities: missing private type {s!r}")
                continue
            utilities[:, j] = _outcome_vector(util_raw[s], outcomes, f"utilities[{s}]", errs)

    scores = None
    if "scores" in raw:
        scores = _outcome_vector(raw["scores"], outcomes, "scores", errs)

    states_raw = raw["states"]
    prior_raw = raw["prior"]
    if not isinstance(states_raw, Mapping) or not states_raw:
        raise InstanceError(errs + ["states must be a nonempty map"])
    if not isinstance(prior_raw, Mapping) or not prior_raw:
        raise InstanceError(errs + ["prior support is empty"])
    extra = set(prior_raw) - set(states_raw)
    if extra:
        errs.append(f"prior names undefined states {sorted(extra)}")
    names = [k for k in states_raw if k in prior_raw]
    if not names:
        raise InstanceError(errs + ["prior support is empty"])
    tables = np.zeros((len(names), len(arms), len(pub), len(outcomes)))
    for k, name in enumerate(names):
        st = states_raw[name]
        if not isinstance(st, Mapping):
            errs.append(f"state {name!r} must map arms to distributions")
            continue
        extra = set(st) - set(arms)
        if extra:
            errs.append(f"state {name!r}: unknown arms {sorted(extra)}")
        for a, arm in enumerate(arms):
            if arm not in st:
                errs.append(f"state {name!r}: missing table entry for arm {arm!r}")
                continue
            entry = st[arm]
            if len(pub) == 1 and isinstance(entry, Mapping) and pub[0] not in entry:
                entry = {pub[0]: entry}
            for x, p in enumerate(pub):
                if not isinstance(entry, Mapping) or p not in entry:
                    errs.append(f"state {name!r}, arm {arm!r}: missing table entry for public type {p!r}")
                    continue
                tables[k, a, x] = _outcome_vector(entry[p], outcomes, f"state {name!r}, arm {arm!r}, public type {p!r}", errs)
    prior = np.array([float(prior_raw[n]) for n in names])

    outside: tuple[int, ...] = ()
    if "outside_arms" in raw:
        oa = raw["outside_arms"]
        if not oa:
            errs.append("outside_arms must be nonempty")
        for a in oa:
            if str(a) not in arms:
                errs.append(f"outside_arms: unknown arm {a!r}")
        outside = tuple(arms.index(str(a)) for a in oa if str(a) in arms)

    type_dist = None
    if "type_dist" in raw:
        labels = [f"{x}/{s}" for x in pub for s in priv]
        td = raw["type_dist"]
        extra = set(td) - set(labels)
        if extra:
            errs.append(f"type_dist: unknown types {sorted(extra)}")
        type_dist = np.array([float(td.get(lbl, 0.0)) for lbl in labels])

    if errs:
        raise InstanceError(errs)
    return Instance(
        arms=tuple(arms), outcomes=tuple(outcomes), public_types=tuple(pub),
        private_types=tuple(priv), state_names=tuple(names), states=tables,
        prior=prior, utilities=utilities, scores=scores, outside_arms=outside,
        type_dist=type_dist,
    )


def instance_to_dict(inst: Instance) -> dict[str, Any]:
    """Inverse of :func:`validate_instance` (always writes the nested form)."""
    out: dict[str, Any] = {
        "arms": list(inst.arms),
        "outcomes": list(inst.outcomes),
        "public_types": list(inst.public_types),
        "private_types": list(inst.private_types),
        "utilities": {
            s: {o: float(inst.utilities[i, j]) for i, o in enumerate(inst.outcomes)}
            for j, s in enumerate(inst.private_types)
        },
        "states": {
            name: {
                arm: {
                    x: {o: float(inst.states[k, a, xi, i]) for i, o in enumerate(inst.outcomes)}
                    for xi, x in enumerate(inst.public_types)
                }
                for a, arm in enumerate(inst.arms)
            }
            for k, name in enumerate(inst.state_names)
        },
        "prior": {name: float(w) for name, w in zip(inst.state_names, inst.prior)},
        "outside_arms": [inst.arms[a] for a in inst.outside_arms],
        "type_dist": {inst.type_label(t): float(p) for t, p in enumerate(inst.type_dist)},
    }
    if inst.scores is not None:
        out["scores"] = {o: float(v) for o, v in zip(inst.outcomes, inst.scores)}
    return out

"""Named trial-function parameter sets and a builder from flat parameter maps."""

from .errors import ConfigError, ParameterError
from .trial import GoldmanCI, GoldmanTerm, NodePolynomial, PadeExp, PzProduct, SlaterProduct

# Reference energies lam0 of the shipped parameter sets, where known.
REFERENCE_ENERGY = {
    "fn3": -2.12412661,
    "fn5": -2.1742305,
    "goldman-gs": -2.87651930,
    "goldman-trip": -2.17401258,
    "pz": -2.06460746,
}

PRESETS = {
    "fn3": {"family": "node-polynomial", "r0": 1.0, "alpha1": 1.0, "alpha2": 2.0},
    "fn4": {"family": "node-polynomial", "r0": 1.0, "alpha1": 0.67180691, "alpha2": 2.00411836},
    "fn5": {"family": "node-polynomial", "r0": 0.73351723, "alpha1": 0.636748, "alpha2": 2.002777},
    "goldman-gs": {
        "family": "goldman",
        "symmetry": 1,
        "c": [77.457638, -5.671781],
        "sigma": [1.216604, 1.994090],
        "tau": [1.920647, 2.070513],
        "s": [0, 1],
        "t": [0, 1],
    },
    # c1 is printed without a decimal point ("62454731"); 6.2454731 is an
    # unverified reading. Override c in a config file to test alternatives.
    "goldman-trip": {
        "family": "goldman",
        "symmetry": 1,
        "c": [6.2454731, 13.154490],
        "sigma": [1.981402, 1.213401],
        "tau": [0.456199, 1.810023],
        "s": [0, 0],
        "t": [0, 0],
    },
    "hydrogen-exact": {"family": "slater", "exponents": [1.0]},
    "hydrogen-0.8": {"family": "slater", "exponents": [0.8]},
    "he-independent": {"family": "slater", "exponents": [2.0, 2.0]},
}

# P_z exponents are not published; "pz" needs alpha1/alpha2 from the user.
FAMILY_REQUIRED = {
    "node-polynomial": ("r0", "alpha1", "alpha2"),
    "goldman": ("c", "sigma", "tau"),
    "pz": ("alpha1", "alpha2"),
    "slater": ("exponents",),
    "pade": ("numerator", "denominator", "alpha", "beta"),
}


def _as_list(v):
    return list(v) if isinstance(v, (list, tuple)) else [v]


def build_trial(params):
    """Construct a trial function from a flat mapping with a ``family`` key."""
    family = params.get("family")
    if family not in FAMILY_REQUIRED:
        raise ConfigError("trial.family", f"unknown family {family!r}; choose from {sorted(FAMILY_REQUIRED)}")
    for key in FAMILY_REQUIRED[family]:
        if key not in params:
            raise ConfigError(f"trial.{key}", f"required by family {family!r}")
    try:
        if family == "node-polynomial":
            return NodePolynomial(float(params["r0"]), float(params["alpha1"]), float(params["alpha2"]))
        if family == "pz":
            return PzProduct(float(params["alpha1"]), float(params["alpha2"]))
        if family == "slater":
            return SlaterProduct(tuple(float(a) for a in _as_list(params["exponents"])))
        if family == "goldman":
            c = _as_list(params["c"])
            n = len(c)
            cols = {}
            for key, default in (("sigma", None), ("tau", None), ("s", 0), ("t", 0),
                                 ("alpha", 0.0), ("beta", 0.0), ("a", 0), ("b", 0)):
                vals = _as_list(params.get(key, [default] * n))
                if len(vals) != n:
                    raise ConfigError(f"trial.{key}", f"expected {n} values, got {len(vals)}")
                cols[key] = vals
            terms = tuple(
                GoldmanTerm(float(c[i]), float(cols["sigma"][i]), float(cols["tau"][i]),
                            int(cols["s"][i]), int(cols["t"][i]), float(cols["alpha"][i]),
                            float(cols["beta"][i]), int(cols["a"][i]), int(cols["b"][i]))
                for i in range(n)
            )
            return GoldmanCI(terms, int(params.get("symmetry", 1)))
        if family == "pade":
            return PadeExp(
                tuple(_terms(params["numerator"], "numerator")),
                tuple(_terms(params["denominator"], "denominator")),
                float(params["alpha"]),
                float(params["beta"]),
                int(params.get("symmetry", 1)),
            )
    except ParameterError as exc:
        raise ConfigError("trial", str(exc)) from exc
    raise AssertionError(family)


def _terms(flat, name):
    """Parse monomials given as a flat list n, l, m, coef, n, l, m, coef, ..."""
    flat = _as_list(flat)
    if len(flat) % 4:
        raise ConfigError(f"trial.{name}", "expected groups of four values: n, l, m, coef")
    return [(int(flat[i]), int(flat[i + 1]), int(flat[i + 2]), float(flat[i + 3])) for i in range(0, len(flat), 4)]


def preset(name, **overrides):
    """Trial function for a named parameter set, with optional overrides."""
    if name not in PRESETS:
        raise ConfigError("trial.name", f"unknown preset {name!r}; choose from {sorted(PRESETS)}")
    params = dict(PRESETS[name])
    params.update(overrides)
    return build_trial(params)

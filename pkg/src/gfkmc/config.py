"""Run configuration: an INI file with a ``[run]`` and a ``[trial]`` section.

Example::

    [run]
    atom = helium
    lambda0 = -2.1742305
    mode = GFK
    scale = 30
    checkpoint_times = 8, 16, 24, 32, 40, 48
    n_paths = 850000
    master_seed = 1
    fits = linear

    [trial]
    preset = fn5

Any ``[trial]`` key other than ``preset`` overrides the preset's value.
List values are comma separated.
"""

import configparser
from dataclasses import asdict, dataclass, replace

from . import library
from .errors import ConfigError, ParameterError
from .estimator import LINEAR, NONLINEAR
from .propagator import FK, GFK, PathConfig
from .system import AtomSpec

ATOMS = {
    "helium": (2.0, 2),
    "hydrogen": (1.0, 1),
}
FIT_CHOICES = {"linear": (LINEAR,), "nonlinear": (NONLINEAR,), "both": (LINEAR, NONLINEAR)}
DEFAULT_TIMES = (8.0, 16.0, 24.0, 32.0, 40.0, 48.0)


@dataclass(frozen=True)
class RunConfig:
    nuclear_charge: float
    n_electrons: int
    trial: dict
    lambda0: float
    scale: int
    n_paths: int
    master_seed: int = 1
    mode: str = GFK
    checkpoint_times: tuple = DEFAULT_TIMES
    electron_repulsion: bool = True
    trial_name: str = ""
    fits: tuple = (LINEAR,)
    weighted: bool = True
    workers: int = 1
    output_dir: str = "gfk-output"

    def __post_init__(self):
        if not self.nuclear_charge > 0:
            raise ConfigError("run.nuclear_charge", "must be positive")
        if int(self.n_electrons) != self.n_electrons or self.n_electrons < 1:
            raise ConfigError("run.n_electrons", "must be a positive integer")
        if self.n_paths < 2:
            raise ConfigError("run.n_paths", "need at least 2 paths")
        if self.workers < 1:
            raise ConfigError("run.workers", "must be at least 1")
        if not 0 <= self.master_seed < 2**32:
            raise ConfigError("run.master_seed", "must be an unsigned 32-bit integer")
        if self.mode not in (FK, GFK):
            raise ConfigError("run.mode", f"must be {FK} or {GFK}")
        if not self.fits or any(f not in (LINEAR, NONLINEAR) for f in self.fits):
            raise ConfigError("run.fits", "choose linear, nonlinear or both")
        try:
            self.path_config()
        except ParameterError as exc:
            field_name = "run.scale" if "scale" in str(exc) else "run.checkpoint_times"
            raise ConfigError(field_name, str(exc)) from exc
        if len(self.checkpoint_times) < 3:
            raise ConfigError("run.checkpoint_times", "extrapolation needs at least 3 checkpoint times")
        if NONLINEAR in self.fits and len(self.checkpoint_times) < 4:
            raise ConfigError("run.checkpoint_times", "the nonlinear fit needs at least 4 checkpoint times")
        if self.mode == GFK:
            trial = self.build_trial()
            if trial.n_electrons != self.n_electrons:
                raise ConfigError("trial", f"trial function is for {trial.n_electrons} electrons, atom has {self.n_electrons}")

    def atom(self):
        return AtomSpec(self.nuclear_charge, self.n_electrons, self.electron_repulsion)

    def path_config(self):
        return PathConfig(self.scale, tuple(self.checkpoint_times), self.mode)

    def build_trial(self):
        return library.build_trial(self.trial)

    def to_dict(self):
        d = asdict(self)
        d["checkpoint_times"] = list(self.checkpoint_times)
        d["fits"] = list(self.fits)
        return d

    def with_overrides(self, **kw):
        kw = {k: v for k, v in kw.items() if v is not None}
        return replace(self, **kw)


def _number_list(text, field_name, cast=float):
    try:
        return [cast(x) for x in str(text).replace(";", ",").split(",") if x.strip()]
    except ValueError as exc:
        raise ConfigError(field_name, f"cannot parse {text!r} as a list of numbers") from exc


def _scalar_or_list(text):
    parts = [p.strip() for p in str(text).split(",") if p.strip()]
    vals = []
    for p in parts:
        try:
            vals.append(int(p))
        except ValueError:
            try:
                vals.append(float(p))
            except ValueError:
                vals.append(p)
    return vals[0] if len(vals) == 1 else vals


_BOOL = {"true": True, "yes": True, "1": True, "on": True, "false": False, "no": False, "0": False, "off": False}


def _get(section, key, cast, default=None, required=False):
    if key not in section:
        if required:
            raise ConfigError(f"run.{key}", "required")
        return default
    raw = section[key].strip()
    try:
        return cast(raw)
    except (ValueError, KeyError) as exc:
        raise ConfigError(f"run.{key}", f"invalid value {raw!r}") from exc


def parse_config(text):
    parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
    parser.optionxform = str
    try:
        parser.read_string(text)
    except configparser.Error as exc:
        raise ConfigError("file", str(exc)) from exc
    if "run" not in parser:
        raise ConfigError("run", "missing [run] section")
    run = parser["run"]
    known = {
        "atom", "nuclear_charge", "n_electrons", "electron_repulsion", "lambda0", "mode", "scale",
        "checkpoint_times", "n_paths", "master_seed", "workers", "fits", "weighted", "output_dir",
    }
    unknown = set(run) - known
    if unknown:
        raise ConfigError(f"run.{sorted(unknown)[0]}", "unknown key")

    atom = _get(run, "atom", str.lower, None)
    if atom is not None and atom not in ATOMS:
        raise ConfigError("run.atom", f"unknown atom {atom!r}; use nuclear_charge/n_electrons")
    z_default, n_default = ATOMS.get(atom, (None, None))
    nuclear_charge = _get(run, "nuclear_charge", float, z_default, required=z_default is None)
    n_electrons = _get(run, "n_electrons", int, n_default, required=n_default is None)

    trial = {}
    name = ""
    if "trial" in parser:
        sec = parser["trial"]
        if "preset" in sec:
            name = sec["preset"].strip()
            if name not in library.PRESETS:
                raise ConfigError("trial.preset", f"unknown preset {name!r}; choose from {sorted(library.PRESETS)}")
            trial.update(library.PRESETS[name])
        for key, raw in sec.items():
            if key != "preset":
                trial[key] = _scalar_or_list(raw)
    mode = _get(run, "mode", str.upper, GFK)
    if mode == GFK and not trial:
        raise ConfigError("trial", "GFK mode needs a [trial] section")

    lam0_default = library.REFERENCE_ENERGY.get(name)
    fits = _get(run, "fits", lambda s: FIT_CHOICES[s.lower()], (LINEAR,))
    return RunConfig(
        nuclear_charge=nuclear_charge,
        n_electrons=n_electrons,
        trial=trial,
        lambda0=_get(run, "lambda0", float, lam0_default if mode == GFK else 0.0,
                     required=mode == GFK and lam0_default is None),
        scale=_get(run, "scale", int, required=True),
        n_paths=_get(run, "n_paths", int, required=True),
        master_seed=_get(run, "master_seed", int, 1),
        mode=mode,
        checkpoint_times=tuple(_number_list(run.get("checkpoint_times", "8, 16, 24, 32, 40, 48"), "run.checkpoint_times")),
        electron_repulsion=_get(run, "electron_repulsion", lambda s: _BOOL[s.lower()], True),
        trial_name=name,
        fits=fits,
        weighted=_get(run, "weighted", lambda s: _BOOL[s.lower()], True),
        workers=_get(run, "workers", int, 1),
        output_dir=_get(run, "output_dir", str, "gfk-output"),
    )


def load_config(path):
    with open(path, encoding="utf-8") as fh:
        return parse_config(fh.read())

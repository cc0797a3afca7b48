"""Experiment configuration: INI file with sections, mirrored by CLI flags.

Example::

    [experiment]
    kind = rd_convergence
    T = 1.0
    dt = 0.01
    p = 1, 2, inf
    seed = 0

    [kernel]
    family = smooth_cosine
    c = 0.5

    [reaction]
    family = logistic
    rate = 1.0

    [initial]
    profile = sine
    c = 0.4
    offset = 0.5

    [sweep]
    n = 4, 8, 16

    [lln]
    schedule = 8:50, 16:200, 32:800
    epsilon = 0.15
    replicas = 200

Every known key can also be set with ``--<section>-<key>`` on the command
line, and any key (including free kernel/profile parameters) with
``--set section.key=value``.
"""
from __future__ import annotations

import configparser
import hashlib
import json
import math
import os
from dataclasses import asdict, dataclass, field

from ..errors import ConfigError, GraphonRDError
from ..kernel import FAMILIES, AnalyticGraphon, load_kernel
from ..reactions import RATE_CODES, REACTION_FAMILIES, RateFamily, ReactionTerm
from .profiles import PROFILES

OUTPUT_DIR_ENV = "GRAPHON_RD_OUTPUT_DIR"
KINDS = ("diffusion_convergence", "rd_convergence", "lln", "single_run")
CONSTRUCTIONS = ("quotient", "random")

# section -> key -> (type name, default); free-form keys are allowed in
# [kernel] and [initial] (family / profile parameters)
SCHEMA = {
    "experiment": {
        "kind": ("str", "single_run"),
        "T": ("float", 1.0),
        "dt": ("float", 0.01),
        "p": ("plist", "2"),
        "seed": ("int", 0),
        "output_dir": ("str", ""),
        "n_outputs": ("int", 21),
        "workers": ("int", 1),
        "paranoid": ("bool", False),
    },
    "kernel": {
        "family": ("str", "smooth_cosine"),
        "file": ("str", ""),
    },
    "reaction": {
        "family": ("str", "zero"),
        "rate": ("float", 1.0),
        "birth": ("str", "zero:0"),
        "death": ("str", "zero:0"),
    },
    "initial": {
        "profile": ("str", "constant"),
    },
    "sweep": {
        "n": ("intlist", "8"),
        "construction": ("str", "quotient"),
        "reference_n": ("int", 0),
        "cut_mode": ("str", "auto"),
        "strict_cut": ("bool", False),
        "restarts": ("int", 64),
    },
    "lln": {
        "schedule": ("str", ""),
        "epsilon": ("float", 0.15),
        "replicas": ("int", 200),
        "cap": ("int", 1_000_000),
        "ell": ("float", 100.0),
    },
}
FREE_SECTIONS = ("kernel", "initial")


def _parse(section, key, kind, raw):
    raw = str(raw).strip()
    try:
        if kind == "str":
            return raw
        if kind == "float":
            v = float(raw)
            if not math.isfinite(v):
                raise ValueError
            return v
        if kind == "int":
            return int(raw)
        if kind == "bool":
            low = raw.lower()
            if low in ("1", "true", "yes", "on"):
                return True
            if low in ("0", "false", "no", "off"):
                return False
            raise ValueError
        if kind == "intlist":
            return [int(x) for x in raw.replace(",", " ").split()]
        if kind == "plist":
            return [math.inf if x.lower() == "inf" else float(x) for x in raw.replace(",", " ").split()]
    except ValueError:
        raise ConfigError(f"[{section}] {key} = {raw!r} is not a valid {kind}") from None
    raise AssertionError(kind)


def _parse_rate(spec: str, key: str) -> RateFamily:
    name, _, rate = spec.partition(":")
    name = name.strip()
    if name not in RATE_CODES:
        raise ConfigError(f"[reaction] {key}: unknown rate family {name!r}; choose from {sorted(RATE_CODES)}")
    try:
        return RateFamily(name, float(rate) if rate.strip() else 1.0)
    except ValueError as exc:
        raise ConfigError(f"[reaction] {key}: {exc}") from None


def _parse_schedule(raw: str):
    pairs = []
    for item in raw.replace(",", " ").split():
        n, sep, ell = item.partition(":")
        if not sep:
            raise ConfigError(f"[lln] schedule entry {item!r} must look like n:ell")
        try:
            pairs.append((int(n), float(ell)))
        except ValueError:
            raise ConfigError(f"[lln] schedule entry {item!r} must look like n:ell") from None
    return pairs


def _free_value(raw: str):
    try:
        return float(raw)
    except ValueError:
        return raw.strip()


@dataclass
class ExperimentConfig:
    kind: str = "single_run"
    T: float = 1.0
    dt: float = 0.01
    p: list = field(default_factory=lambda: [2.0])
    seed: int = 0
    output_dir: str = ""
    n_outputs: int = 21
    workers: int = 1
    paranoid: bool = False
    kernel_family: str = "smooth_cosine"
    kernel_params: dict = field(default_factory=dict)
    kernel_file: str = ""
    reaction_family: str = "zero"
    reaction_rate: float = 1.0
    birth: str = "zero:0"
    death: str = "zero:0"
    profile: str = "constant"
    profile_params: dict = field(default_factory=dict)
    n_values: list = field(default_factory=lambda: [8])
    construction: str = "quotient"
    reference_n: int = 0
    cut_mode: str = "auto"
    strict_cut: bool = False
    restarts: int = 64
    schedule: list = field(default_factory=list)
    epsilon: float = 0.15
    replicas: int = 200
    cap: int = 1_000_000
    ell: float = 100.0

    # --- construction --------------------------------------------------

    @classmethod
    def from_sections(cls, sections: dict) -> "ExperimentConfig":
        """Build from ``{section: {key: raw string}}`` and validate."""
        unknown = set(sections) - set(SCHEMA)
        if unknown:
            raise ConfigError(f"unknown section(s) {sorted(unknown)}; expected {sorted(SCHEMA)}")
        val = {}
        free = {"kernel": {}, "initial": {}}
        for sec, keys in SCHEMA.items():
            given = dict(sections.get(sec, {}))
            for key, (kind, default) in keys.items():
                raw = given.pop(key, default)
                val[(sec, key)] = _parse(sec, key, kind, raw) if isinstance(raw, str) else raw
            if given:
                if sec in FREE_SECTIONS:
                    free[sec] = {k: _free_value(v) for k, v in given.items()}
                else:
                    raise ConfigError(f"[{sec}] unknown key(s) {sorted(given)}; expected {sorted(keys)}")
        ex, sw, ln = "experiment", "sweep", "lln"
        cfg = cls(
            kind=val[(ex, "kind")], T=val[(ex, "T")], dt=val[(ex, "dt")], p=val[(ex, "p")],
            seed=val[(ex, "seed")], output_dir=val[(ex, "output_dir")],
            n_outputs=val[(ex, "n_outputs")], workers=val[(ex, "workers")],
            paranoid=val[(ex, "paranoid")],
            kernel_family=val[("kernel", "family")], kernel_params=free["kernel"],
            kernel_file=val[("kernel", "file")],
            reaction_family=val[("reaction", "family")], reaction_rate=val[("reaction", "rate")],
            birth=val[("reaction", "birth")], death=val[("reaction", "death")],
            profile=val[("initial", "profile")], profile_params=free["initial"],
            n_values=val[(sw, "n")], construction=val[(sw, "construction")],
            reference_n=val[(sw, "reference_n")], cut_mode=val[(sw, "cut_mode")],
            strict_cut=val[(sw, "strict_cut")], restarts=val[(sw, "restarts")],
            schedule=_parse_schedule(val[(ln, "schedule")]), epsilon=val[(ln, "epsilon")],
            replicas=val[(ln, "replicas")], cap=val[(ln, "cap")], ell=val[(ln, "ell")],
        )
        cfg.validate()
        return cfg

    @classmethod
    def from_file(cls, path, overrides: dict | None = None) -> "ExperimentConfig":
        parser = configparser.ConfigParser(inline_comment_prefixes=("#", ";"))
        parser.optionxform = str  # keep key case (T)
        try:
            with open(path) as fh:
                parser.read_file(fh)
        except FileNotFoundError:
            raise ConfigError(f"config file {path} does not exist") from None
        except configparser.Error as exc:
            raise ConfigError(f"{path}: {exc}") from None
        sections = {s: dict(parser[s]) for s in parser.sections()}
        for (sec, key), raw in (overrides or {}).items():
            sections.setdefault(sec, {})[key] = raw
        return cls.from_sections(sections)

    # --- validation ----------------------------------------------------

    def validate(self) -> None:
        if self.kind not in KINDS:
            raise ConfigError(f"[experiment] kind {self.kind!r} not one of {KINDS}")
        if self.T < 0 or self.dt <= 0:
            raise ConfigError("[experiment] need T >= 0 and dt > 0")
        if self.n_outputs < 2:
            raise ConfigError("[experiment] n_outputs must be at least 2")
        if any(p < 1 for p in self.p) or not self.p:
            raise ConfigError("[experiment] p values must be >= 1 (or inf)")
        if self.workers < 1:
            raise ConfigError("[experiment] workers must be >= 1")
        if not self.n_values or any(n < 1 for n in self.n_values):
            raise ConfigError("[sweep] n values must be positive")
        if any(b <= a for a, b in zip(self.n_values, self.n_values[1:])):
            raise ConfigError(f"[sweep] n values must increase, got {self.n_values}")
        if self.construction not in CONSTRUCTIONS:
            raise ConfigError(f"[sweep] construction must be one of {CONSTRUCTIONS}")
        if self.cut_mode not in ("auto", "exact", "heuristic"):
            raise ConfigError("[sweep] cut_mode must be auto, exact or heuristic")
        if self.profile not in PROFILES:
            raise ConfigError(f"[initial] unknown profile {self.profile!r}; choose from {sorted(PROFILES)}")
        if self.reaction_family not in REACTION_FAMILIES:
            raise ConfigError(f"[reaction] unknown family {self.reaction_family!r}; choose from {REACTION_FAMILIES}")
        if not self.kernel_file and self.kernel_family not in FAMILIES:
            raise ConfigError(f"[kernel] unknown family {self.kernel_family!r}; choose from {sorted(FAMILIES)}")
        if self.kernel_file and not os.path.exists(self.kernel_file):
            raise ConfigError(f"[kernel] file {self.kernel_file} does not exist")
        _parse_rate(self.birth, "birth")
        _parse_rate(self.death, "death")
        try:
            self.graphon()
            self.reaction()
            PROFILES[self.profile](**self.profile_params)
        except TypeError as exc:
            raise ConfigError(f"bad parameters: {exc}") from None
        except (GraphonRDError, ValueError) as exc:
            if isinstance(exc, ConfigError):
                raise
            raise ConfigError(str(exc)) from None
        if self.kind in ("diffusion_convergence", "rd_convergence"):
            if self.kind == "diffusion_convergence" and not self.reaction().is_zero:
                raise ConfigError("diffusion_convergence needs [reaction] family = zero")
            if self.kernel_file and self.construction == "random":
                raise ConfigError("random construction needs an analytic kernel")
            big = self.reference_size()
            bad = [n for n in self.n_values if big % n]
            if bad:
                raise ConfigError(f"[sweep] reference_n={big} is not a multiple of n={bad}")
        if self.kind == "lln":
            if self.epsilon <= 0:
                raise ConfigError("[lln] epsilon must be positive")
            if not self.schedule:
                raise ConfigError("[lln] schedule is empty; give n:ell pairs")
            ns = [n for n, _ in self.schedule]
            ells = [e for _, e in self.schedule]
            if any(b <= a for a, b in zip(ns, ns[1:])):
                raise ConfigError("[lln] schedule n values must increase")
            if any(e <= 0 for e in ells) or any(b < a for a, b in zip(ells, ells[1:])):
                raise ConfigError("[lln] schedule ell values must be positive and nondecreasing")
            if self.reaction_family != "birth_death":
                raise ConfigError("[lln] reaction family must be birth_death")
            if self.replicas < 1:
                raise ConfigError("[lln] replicas must be >= 1")

    # --- derived objects -----------------------------------------------

    def graphon(self):
        if self.kernel_file:
            return load_kernel(self.kernel_file)
        return AnalyticGraphon(self.kernel_family, dict(self.kernel_params))

    def reaction(self) -> ReactionTerm:
        fam = self.reaction_family
        if fam == "birth_death":
            return ReactionTerm.birth_death(*self.rates())
        if fam in ("linear", "logistic"):
            return ReactionTerm(fam, self.reaction_rate)
        return ReactionTerm(fam)

    def rates(self) -> tuple[RateFamily, RateFamily]:
        return _parse_rate(self.birth, "birth"), _parse_rate(self.death, "death")

    def initial_profile(self):
        return PROFILES[self.profile](**self.profile_params)

    def reference_size(self) -> int:
        if self.reference_n:
            return self.reference_n
        ns = self.n_values if self.kind != "lln" else [n for n, _ in self.schedule]
        return 16 * max(ns)

    def resolved_output_dir(self) -> str:
        return self.output_dir or os.environ.get(OUTPUT_DIR_ENV, "") or "graphon_rd_output"

    def to_dict(self) -> dict:
        d = asdict(self)
        d["p"] = ["inf" if math.isinf(p) else p for p in self.p]
        d["schedule"] = [list(x) for x in self.schedule]
        d.pop("output_dir")
        d.pop("workers")  # scheduling does not change results
        return d

    def config_hash(self) -> str:
        text = json.dumps(self.to_dict(), sort_keys=True, separators=(",", ":"))
        return hashlib.sha256(text.encode()).hexdigest()[:16]

    def to_ini(self) -> str:
        """Resolved configuration in the file format (round-trips)."""
        lines = []
        d = self.to_dict()
        groups = {
            "experiment": {"kind": d["kind"], "T": d["T"], "dt": d["dt"],
                           "p": ", ".join(str(p) for p in d["p"]), "seed": d["seed"],
                           "n_outputs": d["n_outputs"], "paranoid": d["paranoid"]},
            "kernel": ({"file": self.kernel_file} if self.kernel_file
                       else {"family": self.kernel_family, **self.kernel_params}),
            "reaction": {"family": self.reaction_family, "rate": self.reaction_rate,
                         "birth": self.birth, "death": self.death},
            "initial": {"profile": self.profile, **self.profile_params},
            "sweep": {"n": ", ".join(map(str, self.n_values)), "construction": self.construction,
                      "reference_n": self.reference_n,
                      "cut_mode": self.cut_mode, "strict_cut": self.strict_cut,
                      "restarts": self.restarts},
            "lln": {"schedule": ", ".join(f"{n}:{e:g}" for n, e in self.schedule),
                    "epsilon": self.epsilon, "replicas": self.replicas, "cap": self.cap,
                    "ell": self.ell},
        }
        for sec, kv in groups.items():
            lines.append(f"[{sec}]")
            lines.extend(f"{k} = {v}" for k, v in kv.items())
            lines.append("")
        return "\n".join(lines)


def flag_names():
    """``(flag, section, key)`` for every schema key."""
    return [(f"--{sec}-{key}".replace("_", "-"), sec, key)
            for sec, keys in SCHEMA.items() for key in keys]

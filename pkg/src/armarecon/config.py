"""Experiment configuration: a flat ``key=value`` file plus overrides."""

from dataclasses import asdict, dataclass, fields, replace
from pathlib import Path

from .errors import ConfigError
from .graph import SIMILARITIES
from .nn.model import CONV_KINDS

VARIANTS = ("recon", "plain")


@dataclass(frozen=True)
class ExperimentConfig:
    # data source: features_csv, else manifest, else a synthetic cohort
    features_csv: str = ""
    manifest: str = ""
    roi_ids: str = ""
    q: int = 20
    synth_n: int = 200
    synth_p: int = 9
    synth_shift: float = 0.15
    synth_noise: float = 0.05
    synth_seed: int = 7
    # graph
    alpha: float = 0.92
    similarity: str = "cosine"
    # model
    model: str = "arma"
    variant: str = "recon"
    lambda_recon: float = 0.9
    hidden: int = 64
    num_stacks: int = 1
    num_layers: int = 1
    cheb_k: int = 3
    dropout: float = 0.25
    # optimisation
    epochs: int = 2000
    lr: float = 1e-4
    weight_decay: float = 1e-4
    # protocol
    train_frac: float = 0.9
    folds: int = 20
    seed: int = 0
    threads: int = 1

    def __post_init__(self):
        checks = [
            (0.0 <= self.alpha < 1.0 or self.similarity == "dot", "alpha must be in [0, 1)"),
            (self.similarity in SIMILARITIES, f"similarity must be one of {SIMILARITIES}"),
            (self.model in CONV_KINDS, f"model must be one of {CONV_KINDS}"),
            (self.variant in VARIANTS, f"variant must be one of {VARIANTS}"),
            (self.lambda_recon >= 0.0, "lambda_recon must be >= 0"),
            (self.hidden >= 1, "hidden must be >= 1"),
            (self.num_stacks >= 1 and self.num_layers >= 1, "num_stacks and num_layers must be >= 1"),
            (self.cheb_k >= 1, "cheb_k must be >= 1"),
            (0.0 <= self.dropout < 1.0, "dropout must be in [0, 1)"),
            (self.epochs >= 0, "epochs must be >= 0"),
            (self.lr > 0.0 and self.weight_decay >= 0.0, "lr must be > 0 and weight_decay >= 0"),
            (0.0 < self.train_frac < 1.0, "train_frac must be in (0, 1)"),
            (self.folds >= 1, "folds must be >= 1"),
            (self.threads >= 1, "threads must be >= 1"),
            (self.q >= 1 and self.synth_p >= 1, "q and synth_p must be >= 1"),
        ]
        for ok, msg in checks:
            if not ok:
                raise ConfigError(msg)

    @property
    def effective_lambda(self) -> float:
        return 0.0 if self.variant == "plain" else self.lambda_recon

    def roi_list(self) -> list[int]:
        try:
            return [int(t) for t in self.roi_ids.split(",") if t.strip()]
        except ValueError:
            raise ConfigError(f"roi_ids must be comma-separated integers: {self.roi_ids!r}") from None

    def with_overrides(self, overrides: dict) -> "ExperimentConfig":
        return replace(self, **_coerce(overrides))

    def to_items(self) -> list[tuple[str, str]]:
        return [(k, _format(v)) for k, v in asdict(self).items()]


_TYPES = {f.name: f.type for f in fields(ExperimentConfig)}


def _format(value) -> str:
    return repr(value) if isinstance(value, float) else str(value)


def _coerce(raw: dict) -> dict:
    out = {}
    for key, value in raw.items():
        if key not in _TYPES:
            raise ConfigError(f"unknown config key {key!r}")
        typ = _TYPES[key]
        if not isinstance(value, str):
            out[key] = value
            continue
        try:
            out[key] = typ(value.strip()) if typ is not str else value.strip()
        except ValueError:
            raise ConfigError(f"{key}: cannot parse {value!r} as {typ.__name__}") from None
    return out


def parse_assignments(lines, source="<config>") -> dict:
    raw = {}
    for lineno, line in enumerate(lines, start=1):
        line = line.split("#", 1)[0].strip()
        if not line:
            continue
        if "=" not in line:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {line!r}")
        key, value = (s.strip() for s in line.split("=", 1))
        if key not in _TYPES:
            raise ConfigError(f"{source}:{lineno}: unknown config key {key!r}")
        raw[key] = value
    return raw


def load_config(path=None, overrides: dict | None = None) -> ExperimentConfig:
    raw = {}
    if path is not None:
        path = Path(path)
        if not path.is_file():
            raise ConfigError(f"config file not found: {path}")
        raw = parse_assignments(path.read_text().splitlines(), source=str(path))
    raw.update(overrides or {})
    return ExperimentConfig(**_coerce(raw))


def dump_config(config: ExperimentConfig) -> str:
    return "".join(f"{k}={v}\n" for k, v in config.to_items())

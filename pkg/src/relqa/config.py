"""Run configuration: one strict, versioned JSON file; CLI flags override keys."""
import json
from dataclasses import MISSING, asdict, dataclass, fields

from relqa.embeddings import FORMATS as EMBEDDING_FORMATS
from relqa.metrics import DEFAULT_POLICY, POLICIES
from relqa.model import RELATIONAL_MODES
from relqa.trainer import TrainConfig

CONFIG_VERSION = 1
DATA_FORMATS = ("canonical", "wikiqa", "trec-xml")


class ConfigError(ValueError):
    pass


@dataclass
class RunConfig:
    # data
    train_path: str = None
    dev_path: str = None
    test_path: str = None
    data_format: str = "canonical"
    embeddings_path: str = None
    embeddings_format: str = "word2vec-text"
    stopwords_path: str = None
    collapse_digits: bool = False
    preprocessed_dir: str = "prep"
    output_dir: str = "run"
    # model
    mode: str = "emb"
    conv: str = "wide"
    d_w: int = 50
    d_o: int = 5
    n: int = 100
    m: int = 5
    freeze_embeddings: bool = True
    oov_range: float = 0.25
    # training
    batch_size: int = 50
    max_epochs: int = 25
    patience: int = 5
    eval_interval: int = 10
    seed: int = 0
    rho: float = 0.95
    eps: float = 1e-6
    dev_policy: str = DEFAULT_POLICY

    def __post_init__(self):
        choices = {
            "data_format": DATA_FORMATS, "embeddings_format": EMBEDDING_FORMATS,
            "mode": RELATIONAL_MODES, "conv": ("wide", "narrow"), "dev_policy": POLICIES,
        }
        for name, allowed in choices.items():
            if getattr(self, name) not in allowed:
                raise ConfigError(f"{name} must be one of {allowed}, got {getattr(self, name)!r}")
        for f in fields(self):
            value = getattr(self, f.name)
            kind = _kind(f)
            if value is None:
                if f.default is not None:
                    raise ConfigError(f"{f.name} may not be null")
                continue
            if kind is bool and not isinstance(value, bool):
                raise ConfigError(f"{f.name} must be true or false")
            if kind is int and (isinstance(value, bool) or not isinstance(value, int)):
                raise ConfigError(f"{f.name} must be an integer")
            if kind is float:
                if isinstance(value, bool) or not isinstance(value, (int, float)):
                    raise ConfigError(f"{f.name} must be a number")
                setattr(self, f.name, float(value))
            if kind is str and not isinstance(value, str):
                raise ConfigError(f"{f.name} must be a string")
        for name in ("d_w", "d_o", "n", "m"):
            if getattr(self, name) < 1:
                raise ConfigError(f"{name} must be >= 1")
        if self.oov_range <= 0:
            raise ConfigError("oov_range must be positive")
        try:
            self.train_config()
        except ValueError as exc:
            raise ConfigError(str(exc)) from None

    def train_config(self):
        names = {f.name for f in fields(TrainConfig)}
        return TrainConfig(**{k: v for k, v in asdict(self).items() if k in names})

    def to_dict(self):
        return {"version": CONFIG_VERSION, **asdict(self)}

    def to_json(self):
        return json.dumps(self.to_dict(), indent=2, sort_keys=True) + "\n"

    @classmethod
    def from_dict(cls, d):
        d = dict(d)
        version = d.pop("version", None)
        if version != CONFIG_VERSION:
            raise ConfigError(f"config version must be {CONFIG_VERSION}, got {version!r}")
        known = {f.name for f in fields(cls)}
        unknown = sorted(set(d) - known)
        if unknown:
            raise ConfigError(f"unknown config keys: {', '.join(unknown)}")
        return cls(**d)


def _kind(f):
    if f.default is None:
        return str
    return type(f.default)


def load_config(path):
    try:
        with open(path, encoding="utf-8") as fh:
            data = json.load(fh)
    except json.JSONDecodeError as exc:
        raise ConfigError(f"{path}: invalid JSON at line {exc.lineno}: {exc.msg}") from None
    if not isinstance(data, dict):
        raise ConfigError(f"{path}: top level must be an object")
    return RunConfig.from_dict(data)


def save_config(cfg, path):
    with open(path, "w", encoding="utf-8", newline="\n") as fh:
        fh.write(cfg.to_json())


def parse_bool(text):
    lowered = text.strip().lower()
    if lowered in ("1", "true", "yes", "on"):
        return True
    if lowered in ("0", "false", "no", "off"):
        return False
    raise ValueError(f"not a boolean: {text!r}")


parse_bool.__name__ = "boolean"


def add_override_flags(parser, names=None):
    """Add ``--key-name`` flags for RunConfig keys; unset flags stay ``None``."""
    for f in fields(RunConfig):
        if names is not None and f.name not in names:
            continue
        kind = _kind(f)
        flag = "--" + f.name.replace("_", "-")
        kwargs = {"dest": f"cfg_{f.name}", "default": None}
        if kind is bool:
            kwargs.update(type=parse_bool, nargs="?", const=True, metavar="BOOL")
        else:
            kwargs["type"] = kind
        if f.default is not MISSING:
            kwargs["help"] = f"config key {f.name} (default: {f.default})"
        parser.add_argument(flag, **kwargs)


def resolve_config(args):
    """Config file (if any) with command-line overrides applied."""
    base = load_config(args.config).to_dict() if getattr(args, "config", None) else RunConfig().to_dict()
    for key, value in vars(args).items():
        if key.startswith("cfg_") and value is not None:
            base[key[4:]] = value
    return RunConfig.from_dict(base)

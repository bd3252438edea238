"""
Config loading for the command line. One JSON file per invocation, e.g.

$ cyclekernel bound --config configs/bound_reflection.json --seed-override 3

loads the file, rejects keys the command does not know, then overrides the
seed. Overrides follow the usual rule: the value is literal-eval'd and must
have the same type as the value it replaces.
"""

import dataclasses
import json
from ast import literal_eval
from dataclasses import dataclass, field

from .cycleloss import LossConfig
from .errors import ConfigError
from .trainer import TrainConfig

COMMAND_KEYS = {
    'kernel': {'X', 'Y', 'mass_tol'},
    'pushforward': {'divergences', 'blocks', 'tol'},
    'bound': {'X', 'Y', 'loss', 'pairs', 'automorphisms', 'lipschitz_pairs', 'preservation_tol', 'asymptotic'},
    'train': {'task', 'train', 'seeds', 'gradient_check'},
}
REQUIRED_KEYS = {
    'kernel': {'X', 'Y'},
    'pushforward': {'divergences', 'blocks'},
    'bound': {'X', 'Y', 'pairs', 'automorphisms'},
    'train': {'task'},
}
ASYMPTOTIC_KEYS = {'sequence', 'length', 'tail_window', 'automorphism'}


@dataclass
class ExperimentConfig:
    command: str
    seed: int = 0
    params: dict = field(default_factory=dict) # command-specific tree

    def to_dict(self):
        return {'command': self.command, 'seed': self.seed, **self.params}

    @classmethod
    def from_dict(cls, d, command=None):
        if not isinstance(d, dict):
            raise ConfigError(f"config must be a JSON object, got {type(d).__name__}")
        d = dict(d)
        file_command = d.pop('command', None)
        if command is not None and file_command is not None and file_command != command:
            raise ConfigError(f"config is for '{file_command}', not '{command}'")
        command = command or file_command
        if command not in COMMAND_KEYS:
            raise ConfigError(f"Unknown command: {command}")
        seed = d.pop('seed', 0)
        if type(seed) is not int:
            raise ConfigError(f"seed must be an int, got {seed!r}")
        for key in d:
            if key not in COMMAND_KEYS[command]:
                raise ConfigError(f"Unknown config key: {key}")
        missing = REQUIRED_KEYS[command] - set(d)
        if missing:
            raise ConfigError(f"Missing config key(s) for {command}: {', '.join(sorted(missing))}")
        if 'loss' in d:
            _check_fields(LossConfig, d['loss'], 'loss')
        if 'train' in d:
            _check_fields(TrainConfig, d['train'], 'train')
        if 'asymptotic' in d:
            for key in d['asymptotic']:
                if key not in ASYMPTOTIC_KEYS:
                    raise ConfigError(f"Unknown config key: asymptotic.{key}")
        return cls(command, seed, d)

    def loss_config(self):
        return _build(LossConfig, self.params.get('loss', {}), self.seed)

    def train_config(self):
        return _build(TrainConfig, self.params.get('train', {}), self.seed)


def _check_fields(cls, d, prefix):
    if not isinstance(d, dict):
        raise ConfigError(f"{prefix} must be an object")
    names = {f.name for f in dataclasses.fields(cls)}
    for key in d:
        if key not in names or key == 'seed':
            raise ConfigError(f"Unknown config key: {prefix}.{key}")


def _build(cls, d, seed):
    try:
        return cls(**d, seed=seed)
    except (TypeError, ValueError) as e:
        raise ConfigError(f"invalid {cls.__name__}: {e}") from e


def load_config(path, command=None):
    try:
        with open(path) as f:
            d = json.load(f)
    except OSError as e:
        raise ConfigError(f"cannot read config {path}: {e}") from e
    except json.JSONDecodeError as e:
        raise ConfigError(f"{path}: {e}") from e
    return ExperimentConfig.from_dict(d, command)


def override(config, key, val):
    """Overrides a top-level field of config from its string form."""
    if not hasattr(config, key) or key == 'params':
        raise ConfigError(f"Unknown config key: {key}")
    try:
        # attempt to eval it (e.g. if bool, number, or etc)
        attempt = literal_eval(val)
    except (SyntaxError, ValueError):
        attempt = val
    if type(attempt) != type(getattr(config, key)):
        raise ConfigError(f"{key} must be {type(getattr(config, key)).__name__}, got {val!r}")
    print(f"Overriding: {key} = {attempt}")
    return dataclasses.replace(config, **{key: attempt})

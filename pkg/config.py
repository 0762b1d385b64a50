"""
Pipeline Configuration - Key-value config files for the critical-tori pipeline
Tokenizes `key = value` lines with compiled patterns and builds a PipelineConfig.
"""

import logging
import math
import os
import re
from dataclasses import dataclass, field, replace
from enum import Enum
from typing import Callable, Dict, List, Mapping, Optional, Tuple

from energy_catalog import EnergyKind, EnergySpec, spec_from_mapping
from errors import ConfigError, CriticalToriError

logger = logging.getLogger(__name__)

OUTPUT_DIR_ENV = 'CRITICAL_TORI_OUTPUT_DIR'
STAGES = ('profile', 'close', 'lift', 'evolve', 'recover')


class TokenType(Enum):
    KEY = 'KEY'
    EQUALS = 'EQUALS'
    VALUE = 'VALUE'
    COMMENT = 'COMMENT'
    WHITESPACE = 'WHITESPACE'
    NEWLINE = 'NEWLINE'
    UNKNOWN = 'UNKNOWN'
    EOF = 'EOF'


@dataclass
class Token:
    type: TokenType
    value: str
    line: int
    column: int


class ConfigLexer:
    """Regex tokenizer for `key = value  # comment` lines."""

    def __init__(self):
        self.key_patterns = [
            (r'[ \t]+', TokenType.WHITESPACE),
            (r'#.*', TokenType.COMMENT),
            (r'[A-Za-z_][A-Za-z0-9_]*(?:\.[A-Za-z_][A-Za-z0-9_]*)*', TokenType.KEY),
            (r'=', TokenType.EQUALS),
        ]
        # After '=' the rest of the line up to a comment is the value
        self.value_patterns = [
            (r'[ \t]+', TokenType.WHITESPACE),
            (r'#.*', TokenType.COMMENT),
            (r'[^#\n]*[^#\s]', TokenType.VALUE),
        ]
        self.compiled_keys = [(re.compile(p), t) for p, t in self.key_patterns]
        self.compiled_values = [(re.compile(p), t) for p, t in self.value_patterns]

    def tokenize(self, text: str) -> List[Token]:
        """
        Tokenize config text.

        Args:
            text (str): Config file contents

        Returns:
            List[Token]: Tokens without whitespace, NEWLINE after each non-empty line, EOF last
        """
        tokens = []
        lines = text.split('\n')
        for line_num, line in enumerate(lines, 1):
            column = 0
            after_equals = False
            emitted = False
            while column < len(line):
                patterns = self.compiled_values if after_equals else self.compiled_keys
                for regex, token_type in patterns:
                    match = regex.match(line, column)
                    if match and match.end() > column:
                        if token_type is not TokenType.WHITESPACE:
                            tokens.append(Token(token_type, match.group(0), line_num, column + 1))
                            emitted = True
                        if token_type is TokenType.EQUALS:
                            after_equals = True
                        column = match.end()
                        break
                else:
                    tokens.append(Token(TokenType.UNKNOWN, line[column], line_num, column + 1))
                    emitted = True
                    column += 1
            if emitted:
                tokens.append(Token(TokenType.NEWLINE, '', line_num, len(line) + 1))
        tokens.append(Token(TokenType.EOF, '', len(lines), 1))
        return tokens


def _positive_int(text: str) -> int:
    value = int(text)
    if value < 1:
        raise ValueError("must be a positive integer")
    return value


def _power_of_two(text: str) -> int:
    value = _positive_int(text)
    if value & (value - 1):
        raise ValueError("must be a power of two")
    return value


def _boolean(text: str) -> bool:
    lowered = text.strip().lower()
    if lowered in ('1', 'true', 'yes', 'on'):
        return True
    if lowered in ('0', 'false', 'no', 'off'):
        return False
    raise ValueError("expected true or false")


def _finite(text: str) -> float:
    value = float(text)
    if not math.isfinite(value):
        raise ValueError("must be finite")
    return value


def _energy(text: str) -> str:
    name = text.strip().lower()
    EnergyKind(name)
    return name


def _sign(text: str) -> int:
    value = int(float(text))
    if value not in (1, -1):
        raise ValueError("must be +1 or -1")
    return value


def _stages(text: str) -> Tuple[str, ...]:
    names = tuple(part.strip() for part in text.split(',') if part.strip())
    for name in names:
        if name not in STAGES:
            raise ValueError(f"unknown stage '{name}'")
    return names


# key -> (attribute, converter)
CONFIG_KEYS: Dict[str, Tuple[str, Callable[[str], object]]] = {
    'energy': ('energy', _energy),
    'lambda': ('lam', _finite),
    'q': ('q', _finite),
    'epsilon': ('epsilon', _sign),
    'rho': ('rho', _finite),
    'd': ('d', _finite),
    'm': ('m', _positive_int),
    'n': ('n', _positive_int),
    'n_samples': ('n_samples', _power_of_two),
    'n_t': ('n_t', _power_of_two),
    'm_covers': ('m_covers', _positive_int),
    'a': ('a', _finite),
    'b': ('b', _finite),
    'output_dir': ('output_dir', str),
    'workers': ('workers', _positive_int),
    'strict': ('strict', _boolean),
    'stages': ('stages', _stages),
}


@dataclass
class PipelineConfig:
    """Parameters of one pipeline run; flags override file values."""
    energy: str = EnergyKind.EXTENDED_BLASCHKE.value
    lam: float = 0.0
    q: Optional[float] = None
    epsilon: int = 1
    rho: float = 4.0
    d: Optional[float] = None
    m: Optional[int] = None
    n: Optional[int] = None
    n_samples: int = 1024
    n_t: int = 64
    m_covers: Optional[int] = None
    a: float = 1.0
    b: float = 2.0
    output_dir: str = 'output'
    workers: int = 1
    strict: bool = False
    stages: Tuple[str, ...] = ()
    tolerances: Dict[str, float] = field(default_factory=dict)
    source_lines: List[str] = field(default_factory=list, repr=False, compare=False)
    run_subdir: Optional[str] = field(default=None, repr=False, compare=False)

    def spec(self) -> EnergySpec:
        """Energy described by the config; catalog preconditions raise ConfigError."""
        data = {'kind': self.energy, 'lambda': self.lam, 'epsilon': self.epsilon}
        if self.q is not None:
            data['q'] = self.q
        try:
            return spec_from_mapping(data)
        except CriticalToriError as exc:
            raise ConfigError(exc.message, key='energy') from exc

    @property
    def target(self) -> str:
        """'d' when a first-integral level is given, 'closure' for an (m, n) search."""
        return 'd' if self.d is not None else 'closure'

    def resolved_output_dir(self) -> str:
        base = os.environ.get(OUTPUT_DIR_ENV) or self.output_dir
        return os.path.join(base, self.run_subdir) if self.run_subdir else base

    def validate(self, require_target: bool = True) -> 'PipelineConfig':
        """
        Check cross-key constraints.

        Raises:
            ConfigError: both or neither of d and (m, n), half a closure pair,
                or a non-positive tolerance
        """
        has_pair = self.m is not None or self.n is not None
        if has_pair and (self.m is None or self.n is None):
            raise ConfigError("closure target needs both m and n", key='m' if self.m is None else 'n')
        if require_target:
            if self.d is not None and has_pair:
                raise ConfigError("give either d or (m, n), not both", key='d')
            if self.d is None and not has_pair:
                raise ConfigError("give either d or (m, n)", key='d')
        for name, value in self.tolerances.items():
            if not value > 0.0:
                raise ConfigError("tolerances must be positive", key=f'tol.{name}')
        if self.rho < 0.0:
            raise ConfigError("rho must be non-negative", key='rho')
        self.spec()
        return self

    def to_mapping(self) -> Dict[str, str]:
        """Effective configuration as key-value text entries (provenance headers)."""
        data: Dict[str, str] = {}
        for key, (attr, _) in CONFIG_KEYS.items():
            value = getattr(self, attr)
            if value is None or (key == 'stages' and not value):
                continue
            if key == 'output_dir':
                value = self.resolved_output_dir()
            if isinstance(value, tuple):
                value = ",".join(value)
            elif isinstance(value, bool):
                value = str(value).lower()
            elif isinstance(value, float):
                value = repr(value)
            data[key] = str(value)
        for name in sorted(self.tolerances):
            data[f'tol.{name}'] = repr(self.tolerances[name])
        return data

    def to_text(self) -> str:
        return "".join(f"{key} = {value}\n" for key, value in self.to_mapping().items())


def _assign(config: PipelineConfig, key: str, raw: str, line: int = 0, column: int = 0):
    if key.startswith('tol.'):
        name = key[4:]
        try:
            value = float(raw)
        except ValueError:
            raise ConfigError(f"invalid tolerance '{raw}'", line, column, key)
        if not value > 0.0:
            raise ConfigError("tolerances must be positive", line, column, key)
        config.tolerances[name] = value
        return
    if key not in CONFIG_KEYS:
        raise ConfigError("unknown key", line, column, key)
    attr, convert = CONFIG_KEYS[key]
    try:
        setattr(config, attr, convert(raw.strip()))
    except ValueError as exc:
        raise ConfigError(f"invalid value '{raw.strip()}': {exc}", line, column, key)


def parse_config_text(text: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    """
    Parse `key = value` text into a PipelineConfig.

    Args:
        text (str): Config file contents
        base (PipelineConfig): Values the text overrides (defaults otherwise)

    Returns:
        PipelineConfig: Unvalidated config; call validate() before running

    Raises:
        ConfigError: Syntax or value error with 1-based line and column
    """
    config = replace(base, tolerances=dict(base.tolerances)) if base is not None else PipelineConfig()
    config.source_lines = text.split('\n')
    tokens = [t for t in ConfigLexer().tokenize(text) if t.type is not TokenType.COMMENT]

    position = 0
    while tokens[position].type is not TokenType.EOF:
        token = tokens[position]
        if token.type is TokenType.NEWLINE:
            position += 1
            continue
        if token.type is not TokenType.KEY:
            raise ConfigError(f"expected a key, found '{token.value}'", token.line, token.column)
        equals = tokens[position + 1]
        if equals.type is not TokenType.EQUALS:
            raise ConfigError("expected '=' after key", equals.line, equals.column, token.value)
        value = tokens[position + 2]
        if value.type is not TokenType.VALUE:
            raise ConfigError("missing value", equals.line, equals.column + 1, token.value)
        _assign(config, token.value, value.value, value.line, value.column)
        position += 3
        if tokens[position].type is not TokenType.NEWLINE:
            stray = tokens[position]
            raise ConfigError(f"unexpected '{stray.value}'", stray.line, stray.column)
    logger.debug("parsed config with %d source lines", len(config.source_lines))
    return config


def parse_config_file(path: str, base: Optional[PipelineConfig] = None) -> PipelineConfig:
    try:
        with open(path, 'r', encoding='utf-8') as handle:
            text = handle.read()
    except OSError as exc:
        raise ConfigError(f"cannot read config file '{path}' ({exc.strerror})") from exc
    return parse_config_text(text, base)


def apply_overrides(config: PipelineConfig, overrides: Mapping[str, Optional[str]]) -> PipelineConfig:
    """Apply flag values (None means not given) on top of a parsed config."""
    for key, raw in overrides.items():
        if raw is not None:
            _assign(config, key, str(raw))
    return config


def parse_tolerance_flags(pairs: Optional[List[str]]) -> Dict[str, str]:
    """`name=value` strings from repeated --tol flags, as `tol.<name>` overrides."""
    result = {}
    for pair in pairs or []:
        name, sep, value = pair.partition('=')
        if not sep or not name.strip():
            raise ConfigError(f"--tol expects name=value, got '{pair}'", key='tol')
        result[f"tol.{name.strip()}"] = value.strip()
    return result

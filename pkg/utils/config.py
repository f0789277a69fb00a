"""
Pipeline configuration.

Values are layered, lowest precedence first: ``settings.ORDOLEX`` defaults,
the ``ORDOLEX_SEED`` environment variable, the ``config.txt`` of the run
being analysed (analysis stages only), a ``--config`` key=value file, and
command-line flags. The merged values are validated by
``PipelineConfigSerializer``.
"""
import hashlib
import logging
import os
from dataclasses import dataclass
from pathlib import Path

from django.conf import settings

from treebank.ingest import FilterPolicy
from treebank.trees import LengthPolicy

logger = logging.getLogger(__name__)

CONFIG_FILE = 'config.txt'
LATEST_FILE = 'LATEST'
HASH_PREFIX = 12

KEYS = ('input', 'out', 'seed', 'cap', 'folds', 'max_n', 'min_preverbal', 'require_projective',
        'root_upos', 'count_punct', 'min_corpus_sentences', 'workers', 'corpus_label')
LIST_KEYS = ('input', 'root_upos')

# settings.ORDOLEX name for each config key that has a default
SETTINGS_KEYS = {
    'seed': 'GLOBAL_SEED',
    'cap': 'VARIANT_CAP',
    'folds': 'CV_FOLDS',
    'max_n': 'MAX_N',
    'min_preverbal': 'MIN_PREVERBAL',
    'require_projective': 'REQUIRE_PROJECTIVE',
    'root_upos': 'ROOT_UPOS',
    'count_punct': 'COUNT_PUNCT',
    'min_corpus_sentences': 'MIN_CORPUS_SENTENCES',
    'workers': 'WORKERS',
}

# Keys that change the generated variants; they and the input bytes name the run.
VARIANT_KEYS = ('seed', 'cap', 'min_preverbal', 'require_projective', 'root_upos', 'count_punct')


class ConfigError(Exception):
    """Invalid or unreadable configuration (a usage error)"""


@dataclass(frozen=True)
class PipelineConfig:
    inputs: tuple
    out: Path
    cap: int
    seed: int
    folds: int
    max_n: int
    workers: int
    filter_policy: FilterPolicy
    length_policy: LengthPolicy
    corpus_label: str = ''

    @classmethod
    def from_validated(cls, data):
        return cls(
            inputs=tuple(Path(p) for p in data.get('input', ())),
            out=Path(data['out']),
            cap=data['cap'],
            seed=data['seed'],
            folds=data['folds'],
            max_n=data['max_n'],
            workers=data['workers'],
            filter_policy=FilterPolicy(
                min_preverbal=data['min_preverbal'],
                require_projective=data['require_projective'],
                root_upos_allowed=frozenset(data['root_upos']),
                min_corpus_sentences=data['min_corpus_sentences'],
            ),
            length_policy=LengthPolicy(count_punct=data['count_punct']),
            corpus_label=data.get('corpus_label', ''),
        )

    def as_values(self):
        """Flat key -> value mapping in the config-file vocabulary"""
        return {
            'input': [str(p) for p in self.inputs],
            'seed': self.seed,
            'cap': self.cap,
            'folds': self.folds,
            'max_n': self.max_n,
            'min_preverbal': self.filter_policy.min_preverbal,
            'require_projective': self.filter_policy.require_projective,
            'root_upos': sorted(self.filter_policy.root_upos_allowed),
            'count_punct': self.length_policy.count_punct,
            'min_corpus_sentences': self.filter_policy.min_corpus_sentences,
            'corpus_label': self.corpus_label,
        }

    def config_hash(self):
        """SHA-256 over the variant-affecting settings and the bytes of every input file"""
        digest = hashlib.sha256()
        values = self.as_values()
        for key in VARIANT_KEYS:
            digest.update(f"{key}={format_value(values[key])}\n".encode('utf-8'))
        for path in self.inputs:
            digest.update(hashlib.sha256(path.read_bytes()).digest())
        return digest.hexdigest()

    def run_dir(self):
        return self.out / self.config_hash()[:HASH_PREFIX]


def format_value(value):
    if isinstance(value, bool):
        return 'on' if value else 'off'
    if isinstance(value, (list, tuple)):
        return ','.join(str(v) for v in value)
    return str(value)


def default_values():
    defaults = settings.ORDOLEX
    return {key: defaults[name] for key, name in SETTINGS_KEYS.items() if name in defaults}


def env_values():
    name = settings.ORDOLEX.get('SEED_ENV_VAR', 'ORDOLEX_SEED')
    value = os.environ.get(name)
    return {'seed': value} if value not in (None, '') else {}


def parse_config_text(text, source='<config>'):
    """Parse flat ``key=value`` lines; ``#`` starts a comment, list values are comma-separated"""
    values = {}
    for lineno, raw in enumerate(text.splitlines(), start=1):
        line = raw.split('#', 1)[0].strip()
        if not line:
            continue
        key, sep, value = line.partition('=')
        key = key.strip().replace('-', '_')
        if not sep or not key:
            raise ConfigError(f"{source}:{lineno}: expected key=value, got {raw.strip()!r}")
        if key not in KEYS:
            raise ConfigError(f"{source}:{lineno}: unknown key {key!r}")
        values[key] = split_list(value) if key in LIST_KEYS else value.strip()
    return values


def read_config_file(path):
    try:
        text = Path(path).read_text(encoding='utf-8')
    except (OSError, UnicodeDecodeError) as e:
        raise ConfigError(f"cannot read config file {path}: {e}") from e
    return parse_config_text(text, source=str(path))


def write_config_file(path, config):
    lines = [f"{key}={format_value(value)}" for key, value in config.as_values().items()]
    Path(path).write_text('\n'.join(lines) + '\n', encoding='utf-8')


def split_list(value):
    if isinstance(value, str):
        return [item.strip() for item in value.split(',') if item.strip()]
    return list(value)


def merge_layers(*layers):
    merged = {}
    for layer in layers:
        merged.update({key: value for key, value in layer.items() if value is not None})
    return merged


def build_config(*layers):
    """Validate the merged layers into a PipelineConfig"""
    from .serializers import PipelineConfigSerializer

    serializer = PipelineConfigSerializer(data=merge_layers(*layers))
    if not serializer.is_valid():
        problems = '; '.join(
            f"{key}: {' '.join(str(m) for m in messages)}" for key, messages in serializer.errors.items()
        )
        raise ConfigError(f"invalid configuration ({problems})")
    return PipelineConfig.from_validated(serializer.validated_data)


def mark_latest(config, run_dir):
    (config.out / LATEST_FILE).write_text(run_dir.name + '\n', encoding='utf-8')


def resolve_run_dir(config, run=None):
    """The run directory named by ``run``, else by the inputs' hash, else by ``<out>/LATEST``"""
    if run:
        candidate = Path(run)
        if not candidate.is_dir():
            candidate = config.out / run
    elif config.inputs:
        try:
            candidate = config.run_dir()
        except OSError as e:
            raise ConfigError(f"cannot hash inputs: {e}") from e
    else:
        latest = config.out / LATEST_FILE
        if not latest.is_file():
            raise ConfigError(f"no --run or --input given and {latest} does not exist")
        candidate = config.out / latest.read_text(encoding='utf-8').strip()
    if not candidate.is_dir():
        raise ConfigError(f"run directory {candidate} does not exist; run `variants` first")
    logger.info(f"Using run directory {candidate}")
    return candidate

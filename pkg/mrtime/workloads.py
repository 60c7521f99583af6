"""
Desk-scale workloads standing in for cluster benchmarks.

``MapReduceJob`` is a small in-process map/shuffle/reduce engine: the input
is split into line-aligned chunks, mapper tasks run on a bounded thread pool,
pairs are routed to reducers by FNV-1a 64-bit hash of the key, and reducer
outputs are merged in reducer order, so functional results never depend on
thread interleaving. WordCount and Exim mainlog parsing run on it.

``SyntheticTruth`` is a known polynomial plus seeded Gaussian noise, used as
an exact ground truth for the fitting pipeline.
"""
from __future__ import annotations

import io
import logging
import math
import time
from concurrent.futures import ThreadPoolExecutor
from dataclasses import dataclass, field
from functools import lru_cache
from pathlib import Path
from typing import Callable, Iterable, NamedTuple, Sequence

import numpy as np

from mrtime import eximlog
from mrtime.errors import IoError, NonPositiveTruth, ParameterMismatch, UnknownWorkload
from mrtime.profiling import DEFAULT_RANGES, RunSample, lattice
from mrtime.regression import CANONICAL_PARAMETERS, ConfigPoint, TimeModel, predict_many, predict

logger = logging.getLogger(__name__)

FNV_OFFSET_BASIS = 0xCBF29CE484222325
FNV_PRIME = 0x100000001B3
MASK_64 = 0xFFFFFFFFFFFFFFFF

MAX_WORKERS = 4
MIN_RUN_TIME = 1e-6


class KeyValue(NamedTuple):
    key: bytes
    value: bytes


class JobStats(NamedTuple):
    map_pairs: int
    reduce_pairs: int
    skipped_lines: int = 0


class JobResult(NamedTuple):
    output: dict
    timing: RunSample
    stats: JobStats


@dataclass(frozen=True)
class JobSpec:
    app: str
    mappers: int
    reducers: int
    input: bytes | Path = field(repr=False)

    def __post_init__(self):
        if self.mappers < 1 or self.reducers < 1:
            raise ValueError(
                f"mappers and reducers must be >= 1, got {self.mappers} and {self.reducers}"
            )

    @property
    def config(self) -> ConfigPoint:
        return ConfigPoint.of(mappers=self.mappers, reducers=self.reducers)

    def read_input(self) -> bytes:
        if isinstance(self.input, (bytes, bytearray)):
            data = bytes(self.input)
        else:
            try:
                data = Path(self.input).read_bytes()
            except OSError as err:
                raise IoError(self.input, err.strerror or str(err)) from err
        return data


@lru_cache(maxsize=1 << 16)
def fnv1a_64(key: bytes) -> int:
    h = FNV_OFFSET_BASIS
    for byte in key:
        h ^= byte
        h = (h * FNV_PRIME) & MASK_64
    return h


def partition(key: bytes, reducers: int) -> int:
    return fnv1a_64(key) % reducers


def split_input(data: bytes, mappers: int) -> list[bytes]:
    """
    Splits ``data`` into exactly ``mappers`` line-aligned chunks.

    Lines are dealt out contiguously, the first chunks taking one extra line
    when the count does not divide evenly; chunks past the last line are
    empty. Joining the chunks gives back ``data``.
    """
    if mappers < 1:
        raise ValueError(f"mappers must be >= 1, got {mappers}")
    lines = io.BytesIO(data).readlines()
    bounds = np.array_split(np.arange(len(lines)), mappers)
    return [b"".join(lines[i] for i in indices) for indices in bounds]


MapFunction = Callable[[bytes], Iterable[KeyValue]]
ReduceFunction = Callable[[bytes, list[bytes]], object]


class MapReduceJob:
    def __init__(self, mappers: int, reducers: int, max_workers: int = MAX_WORKERS):
        """
        Prepares a job with a fixed task layout.

        Parameters
        ----------
        mappers : int
            Number of map tasks, one per input chunk.
        reducers : int
            Number of reduce partitions.
        max_workers : int, optional
            Upper bound on concurrently running tasks of one phase.
        """
        if mappers < 1 or reducers < 1:
            raise ValueError(f"mappers and reducers must be >= 1, got {mappers} and {reducers}")
        self.mappers = int(mappers)
        self.reducers = int(reducers)
        self.max_workers = max(1, min(int(max_workers), max(self.mappers, self.reducers)))

    def shuffle(self, mapped: Sequence[list[KeyValue]]) -> list[list[KeyValue]]:
        """Routes pairs to reducers, keeping mapper order then emission order."""
        partitions = [[] for _ in range(self.reducers)]
        for pairs in mapped:
            for pair in pairs:
                partitions[partition(pair.key, self.reducers)].append(pair)
        return partitions

    @staticmethod
    def _reduce_partition(reduce_fn: ReduceFunction, pairs: list[KeyValue]) -> dict:
        grouped: dict[bytes, list[bytes]] = dict()
        for key, value in pairs:
            grouped.setdefault(key, []).append(value)
        return {key: reduce_fn(key, values) for key, values in grouped.items()}

    def run(self, data: bytes, map_fn: MapFunction, reduce_fn: ReduceFunction) -> tuple[dict, JobStats]:
        chunks = split_input(data, self.mappers)
        with ThreadPoolExecutor(max_workers=self.max_workers) as pool:
            mapped = list(pool.map(lambda chunk: list(map_fn(chunk)), chunks))
            partitions = self.shuffle(mapped)
            reduced = list(
                pool.map(lambda pairs: self._reduce_partition(reduce_fn, pairs), partitions)
            )

        output = dict()
        for part in reduced:
            output.update(part)

        stats = JobStats(
            map_pairs=sum(len(pairs) for pairs in mapped),
            reduce_pairs=sum(len(pairs) for pairs in partitions),
        )
        return output, stats


ONE = b"1"


def wordcount_map(chunk: bytes) -> Iterable[KeyValue]:
    for word in chunk.split():
        yield KeyValue(word, ONE)


def wordcount_reduce(key: bytes, values: list[bytes]) -> int:
    return sum(int(v) for v in values)


def count_words(data: bytes) -> dict[bytes, int]:
    """Single-pass sequential baseline of WordCount."""
    counts: dict[bytes, int] = dict()
    for word in data.split():
        counts[word] = counts.get(word, 0) + 1
    return counts


def _check_app(spec: JobSpec, expected: str):
    if spec.app != expected:
        raise UnknownWorkload(spec.app, known=(expected,))


def run_wordcount(spec: JobSpec, run_index: int = 0, max_workers: int = MAX_WORKERS) -> JobResult:
    """
    Counts whitespace-separated byte tokens (no case folding, no punctuation
    stripping). ``output`` maps word bytes to counts.
    """
    _check_app(spec, "wordcount")
    data = spec.read_input()
    job = MapReduceJob(spec.mappers, spec.reducers, max_workers)

    start = time.perf_counter()
    counts, stats = job.run(data, wordcount_map, wordcount_reduce)
    elapsed = time.perf_counter() - start

    timing = RunSample(spec.config, run_index, max(elapsed, MIN_RUN_TIME), app=spec.app)
    return JobResult(counts, timing, stats)


def exim_map(chunk: bytes) -> Iterable[KeyValue]:
    for raw in eximlog.split_lines(chunk):
        line = eximlog.parse_line(raw)
        if line.message_id is not None:
            yield KeyValue(line.message_id.encode("ascii"), raw)


def exim_reduce(key: bytes, values: list[bytes]) -> list[bytes]:
    return values


def run_exim_job(spec: JobSpec, run_index: int = 0, max_workers: int = MAX_WORKERS) -> JobResult:
    """
    Organizes a mainlog into transactions. ``output`` maps each message ID
    to its raw lines in file order; id-less lines are counted in
    ``stats.skipped_lines``.
    """
    _check_app(spec, "eximparse")
    data = spec.read_input()
    job = MapReduceJob(spec.mappers, spec.reducers, max_workers)

    start = time.perf_counter()
    grouped, stats = job.run(data, exim_map, exim_reduce)
    elapsed = time.perf_counter() - start

    transactions = {key.decode("ascii"): lines for key, lines in grouped.items()}
    skipped = len(eximlog.split_lines(data)) - stats.map_pairs
    timing = RunSample(spec.config, run_index, max(elapsed, MIN_RUN_TIME), app=spec.app)
    return JobResult(transactions, timing, stats._replace(skipped_lines=skipped))


_CORPUS_LETTERS = b"abcdefghijklmnopqrstuvwxyz"
WORDS_PER_LINE = 12


def generate_corpus(size: int, seed: int = 0, vocabulary_size: int = 2000) -> bytes:
    """
    Seeded text of at least ``size`` bytes, whole lines only, with a
    Zipf-like word frequency distribution.
    """
    if size < 1:
        raise ValueError(f"corpus size must be >= 1, got {size}")
    rng = np.random.default_rng(seed)
    letters = np.frombuffer(_CORPUS_LETTERS, dtype=np.uint8)
    vocabulary = [
        letters[rng.integers(0, len(letters), size=n)].tobytes()
        for n in rng.integers(1, 11, size=vocabulary_size)
    ]
    weights = 1.0 / np.arange(1, vocabulary_size + 1)
    weights /= weights.sum()

    lines = []
    total = 0
    while total < size:
        picks = rng.choice(vocabulary_size, size=(256, WORDS_PER_LINE), p=weights)
        for row in picks:
            line = b" ".join(vocabulary[i] for i in row) + b"\n"
            lines.append(line)
            total += len(line)
            if total >= size:
                break
    return b"".join(lines)


@dataclass(frozen=True)
class SyntheticTruth:
    """
    Known execution-time polynomial plus Gaussian noise.

    The polynomial must be positive over every point of ``param_ranges``;
    this is checked when the truth is created.
    """

    model: TimeModel
    noise_sigma: float = 0.0
    seed: int = 0
    param_ranges: tuple = DEFAULT_RANGES

    def __post_init__(self):
        if self.model.parameter_names != CANONICAL_PARAMETERS:
            raise ParameterMismatch(
                f"a synthetic truth needs parameters {CANONICAL_PARAMETERS}, "
                f"got {self.model.parameter_names}"
            )
        if not (math.isfinite(self.noise_sigma) and self.noise_sigma >= 0):
            raise ValueError(f"noise_sigma must be finite and >= 0, got {self.noise_sigma}")
        if self.seed < 0:
            raise ValueError(f"seed must be unsigned, got {self.seed}")
        points = lattice(self.param_ranges)
        values = predict_many(self.model, points)
        worst = int(np.argmin(values))
        if values[worst] <= 0:
            raise NonPositiveTruth(
                f"truth polynomial is {values[worst]:.6g} s at {points[worst]}"
            )

    def mean_value(self) -> float:
        """Mean of the noise-free polynomial over the declared lattice."""
        return float(np.mean(predict_many(self.model, lattice(self.param_ranges))))


def synthetic_time(
    truth: SyntheticTruth, config: ConfigPoint, run_index: int = 0, seed: int | None = None
) -> float:
    """
    Truth polynomial at ``config`` plus noise drawn from a stream keyed by
    (seed, configuration values, run index); never below MIN_RUN_TIME.
    ``seed`` defaults to the truth's own seed.
    """
    value = predict(truth.model, config)
    if truth.noise_sigma > 0:
        seed = truth.seed if seed is None else seed
        rng = np.random.default_rng([seed, *config.numbers, run_index])
        value += rng.normal(0.0, truth.noise_sigma)
    return max(float(value), MIN_RUN_TIME)


class SyntheticWorkload:
    name = "synthetic"

    def __init__(self, truth: SyntheticTruth):
        self.truth = truth

    def run(self, config: ConfigPoint, run_index: int, seed: int | None = None) -> float:
        return synthetic_time(self.truth, config, run_index, seed)


class WordCountWorkload:
    name = "wordcount"

    def __init__(self, data: bytes, max_workers: int = MAX_WORKERS):
        self.data = data
        self.max_workers = max_workers

    def run(self, config: ConfigPoint, run_index: int, seed: int | None = None) -> float:
        spec = JobSpec(self.name, config["mappers"], config["reducers"], self.data)
        return run_wordcount(spec, run_index, self.max_workers).timing.exec_time_s


class EximWorkload:
    name = "eximparse"

    def __init__(self, data: bytes, max_workers: int = MAX_WORKERS):
        self.data = data
        self.max_workers = max_workers

    def run(self, config: ConfigPoint, run_index: int, seed: int | None = None) -> float:
        spec = JobSpec(self.name, config["mappers"], config["reducers"], self.data)
        return run_exim_job(spec, run_index, self.max_workers).timing.exec_time_s


WORKLOADS = dict(
    synthetic=SyntheticWorkload,
    wordcount=WordCountWorkload,
    eximparse=EximWorkload,
)


def create_workload(name: str, *args, **kwargs):
    """Instantiates the workload registered under ``name``."""
    try:
        factory = WORKLOADS[name]
    except KeyError:
        raise UnknownWorkload(name, known=WORKLOADS) from None
    return factory(*args, **kwargs)

import itertools
import subprocess
import sys
import time

import pytest

from mapbench.errors import EmptyProfile, RunNotRunning
from mapbench.monitor import (
    CumulativeDeltaReader,
    ProcessTreeSource,
    ResourceProfile,
    ResourceSample,
    Sampler,
    SourceGone,
    aggregate,
    attach,
)


class FakeSource:
    def __init__(self, readings):
        self._readings = iter(readings)

    def read(self):
        try:
            return next(self._readings)
        except StopIteration:
            raise SourceGone("drained")


class FakeClock:
    def __init__(self, times):
        self._times = iter(times)

    def __call__(self):
        return next(self._times)


class TestAggregate:
    def test_hand_values(self):
        samples = [
            ResourceSample(t=1, cpu_cores=1.0, rss_mb=100),
            ResourceSample(t=2, cpu_cores=2.0, rss_mb=300),
            ResourceSample(t=3, cpu_cores=1.5, rss_mb=200),
        ]
        cpu_avg, cpu_max, ram_max = aggregate(samples)
        assert cpu_avg == pytest.approx(1.5)
        assert cpu_max == 2.0
        assert ram_max == 300

    def test_single_sample(self):
        s = [ResourceSample(t=1, cpu_cores=1.3, rss_mb=42)]
        cpu_avg, cpu_max, _ = aggregate(s)
        assert cpu_avg == cpu_max == 1.3

    def test_permutation_invariant(self):
        samples = [ResourceSample(t=i, cpu_cores=c, rss_mb=r) for i, (c, r) in enumerate([(1, 10), (3, 5), (2, 8)])]
        results = {aggregate(p) for p in itertools.permutations(samples)}
        assert len(results) == 1

    def test_empty(self):
        with pytest.raises(EmptyProfile):
            aggregate([])

    def test_avg_le_max_profile_invariant(self):
        profile = ResourceProfile.from_samples(
            "r", [ResourceSample(t=i, cpu_cores=float(i % 4), rss_mb=10) for i in range(1, 20)]
        )
        assert profile.cpu_avg_cores <= profile.cpu_max_cores


class TestCumulativeDeltaReader:
    def test_rates_from_deltas(self):
        # cpu seconds 0 -> 1 -> 3 over wall 0 -> 1 -> 2: rates 1.0 then 2.0
        reader = CumulativeDeltaReader(
            FakeSource([(0.0, 0), (1.0, 100 << 20), (3.0, 50 << 20)]),
            clock=FakeClock([0.0, 1.0, 2.0]),
        )
        reader.read_sample()  # baseline
        s1 = reader.read_sample()
        s2 = reader.read_sample()
        assert s1.cpu_cores == pytest.approx(1.0)
        assert s1.rss_mb == pytest.approx(100.0)
        assert s2.cpu_cores == pytest.approx(2.0)
        assert s2.rss_mb == pytest.approx(50.0)

    def test_never_negative(self):
        reader = CumulativeDeltaReader(
            FakeSource([(5.0, 0), (4.0, 0)]), clock=FakeClock([0.0, 1.0])
        )
        reader.read_sample()
        assert reader.read_sample().cpu_cores == 0.0


class TestProcessTreeSource:
    def test_sleeping_process_near_zero_cpu(self):
        proc = subprocess.Popen([sys.executable, "-c", "import time; time.sleep(5)"])
        try:
            source = ProcessTreeSource(proc.pid)
            reader = CumulativeDeltaReader(source)
            reader.read_sample()
            time.sleep(1.0)
            sample = reader.read_sample()
            assert sample.cpu_cores <= 0.05
        finally:
            proc.kill()
            proc.wait()

    def test_gone_process(self):
        proc = subprocess.Popen([sys.executable, "-c", "pass"])
        proc.wait()
        with pytest.raises(SourceGone):
            ProcessTreeSource(proc.pid).read()


class FakeHandle:
    run_id = "fake"

    def __init__(self, source, running_for_s):
        self._source = source
        self._until = time.time() + running_for_s

    def stats_source(self):
        return self._source

    def is_running(self):
        return time.time() < self._until


class TestSampler:
    def test_interval_clamped(self):
        sampler = Sampler(
            CumulativeDeltaReader(FakeSource([(0, 0)] * 100)), is_running=lambda: False, interval_s=0.0
        )
        assert sampler._interval == 0.1

    def test_attach_terminal_run_rejected(self):
        handle = FakeHandle(FakeSource([(0, 0)] * 10), running_for_s=-1)
        with pytest.raises(RunNotRunning):
            attach(handle, 0.5)

    def test_sample_count_tracks_interval(self):
        # run "alive" ~2.2 s, sampled at 0.25 s: expect roughly 6-10 samples
        handle = FakeHandle(FakeSource([(i * 0.1, 10 << 20) for i in range(1000)]), running_for_s=2.2)
        sampler = attach(handle, 0.25)
        time.sleep(2.6)
        samples = sampler.stop()
        assert 5 <= len(samples) <= 11
        assert all(b.t > a.t for a, b in zip(samples, samples[1:]))

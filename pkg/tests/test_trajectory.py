import math

import numpy as np
import pytest
from hypothesis import given, settings
from hypothesis import strategies as st

from mapbench import trajectory as tj
from mapbench.errors import (
    MalformedLine,
    NoMatches,
    NonMonotonicTimestamp,
    ZeroNormQuaternion,
)
from mapbench.trajectory import (
    Pose,
    Trajectory,
    associate,
    compose,
    inverse,
    parse_tum,
    path_length,
    relative_pose,
    serialize_tum,
)

from conftest import random_quaternion, random_rotation, random_trajectory
from oracles import oracle_associate


class TestParseTum:
    def test_single_identity_pose(self):
        traj = parse_tum("0.0 0 0 0 0 0 0 1")
        assert len(traj) == 1
        ts, pose = traj.samples[0]
        assert ts == 0.0
        assert pose.t == (0.0, 0.0, 0.0)
        assert pose.q == (0.0, 0.0, 0.0, 1.0)

    def test_comments_skipped(self):
        traj = parse_tum("# comment\n1.0 1 2 3 0 0 0 1\n2.0 1 2 3 0 0 0 1")
        assert len(traj) == 2

    def test_quaternion_renormalized(self):
        traj = parse_tum("1.0 0 0 0 0 0 0 2")
        assert traj.pose(0).q == (0.0, 0.0, 0.0, 1.0)

    def test_malformed_line_number(self):
        with pytest.raises(MalformedLine) as exc:
            parse_tum("0.0 0 0 0 0 0 0 1\n1.0 1 2 3")
        assert exc.value.line_no == 2

    def test_non_numeric(self):
        with pytest.raises(MalformedLine):
            parse_tum("0.0 a b c 0 0 0 1")

    def test_non_monotonic(self):
        with pytest.raises(NonMonotonicTimestamp) as exc:
            parse_tum("2.0 0 0 0 0 0 0 1\n1.0 0 0 0 0 0 0 1")
        assert exc.value.line_no == 2

    def test_zero_norm_quaternion(self):
        with pytest.raises(ZeroNormQuaternion):
            parse_tum("0.0 0 0 0 0 0 0 0")

    def test_empty_input(self):
        with pytest.raises(MalformedLine):
            parse_tum("# only comments\n")


class TestSerializeTum:
    def test_origin_pose(self):
        traj = Trajectory(samples=((0.0, Pose.identity()),))
        line = serialize_tum(traj).strip()
        assert line == " ".join(["0.000000000"] * 7 + ["1.000000000"])

    def test_two_lines_newline_terminated(self):
        traj = Trajectory(samples=((0.0, Pose.identity()), (1.0, Pose((1, 0, 0)))))
        text = serialize_tum(traj)
        assert text.endswith("\n")
        assert len(text.strip().split("\n")) == 2

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_round_trip(self, seed):
        rng = np.random.default_rng(seed)
        traj = random_trajectory(rng, n=20, t0=float(rng.uniform(0, 1e5)))
        back = parse_tum(serialize_tum(traj))
        for (ts_a, pa), (ts_b, pb) in zip(traj.samples, back.samples):
            assert abs(ts_a - ts_b) <= 1e-9
            assert max(abs(a - b) for a, b in zip(pa.t, pb.t)) <= 1e-9
            # q and -q are the same rotation
            dq = min(
                max(abs(a - b) for a, b in zip(pa.q, pb.q)),
                max(abs(a + b) for a, b in zip(pa.q, pb.q)),
            )
            assert dq <= 1e-9


class TestAssociate:
    def test_identical_timestamps(self):
        a = Trajectory(samples=tuple((i * 1.0, Pose.identity()) for i in range(5)))
        assoc = associate(a, a, max_dt=0.02)
        assert assoc.pairs == tuple((i, i) for i in range(5))

    def test_hand_enumerated_case(self):
        est = Trajectory(samples=((0.00, Pose.identity()), (1.00, Pose.identity())))
        ref = Trajectory(samples=((0.011, Pose.identity()), (1.05, Pose.identity())))
        assoc = associate(est, ref, max_dt=0.02)
        assert assoc.pairs == ((0, 0),)

    def test_disjoint_ranges(self):
        a = Trajectory(samples=((0.0, Pose.identity()), (1.0, Pose.identity())))
        b = Trajectory(samples=((10.0, Pose.identity()), (11.0, Pose.identity())))
        with pytest.raises(NoMatches):
            associate(a, b, max_dt=0.02)

    def test_each_index_used_once(self, rng):
        est = random_trajectory(rng, n=40, dt=0.05)
        ref = random_trajectory(rng, n=40, t0=0.013, dt=0.05)
        assoc = associate(est, ref, max_dt=0.1)
        assert len(set(assoc.est_indices)) == len(assoc)
        assert len(set(assoc.ref_indices)) == len(assoc)

    @settings(max_examples=30, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_matches_brute_force_oracle(self, seed):
        rng = np.random.default_rng(seed)
        est_ts = np.sort(rng.uniform(0, 10, size=25))
        ref_ts = np.sort(rng.uniform(0, 10, size=25))
        est_ts += np.arange(25) * 1e-9  # guard against duplicates
        ref_ts += np.arange(25) * 1e-9
        est = Trajectory(samples=tuple((float(t), Pose.identity()) for t in est_ts))
        ref = Trajectory(samples=tuple((float(t), Pose.identity()) for t in ref_ts))
        expected = oracle_associate(list(est_ts), list(ref_ts), 0.3)
        if not expected:
            with pytest.raises(NoMatches):
                associate(est, ref, max_dt=0.3)
        else:
            assert list(associate(est, ref, max_dt=0.3).pairs) == expected

    def test_cardinality_symmetry(self, rng):
        a = random_trajectory(rng, n=30, dt=0.07)
        b = random_trajectory(rng, n=45, t0=0.01, dt=0.05)
        assert len(associate(a, b, 0.05)) == len(associate(b, a, 0.05))


class TestRelativePose:
    def test_self_is_identity(self, rng):
        p = Pose(t=(1, 2, 3), q=random_quaternion(rng))
        rel = relative_pose(p, p)
        assert np.allclose(rel.t, 0, atol=1e-12)
        assert abs(abs(rel.q[3]) - 1) <= 1e-12

    def test_pure_translation(self):
        a = Pose((1, 0, 0))
        b = Pose((3, 0, 0))
        rel = relative_pose(a, b)
        assert np.allclose(rel.t, (2, 0, 0), atol=1e-12)

    @settings(max_examples=50, deadline=None)
    @given(st.integers(0, 2**32 - 1))
    def test_compose_inverts(self, seed):
        rng = np.random.default_rng(seed)
        a = Pose(t=tuple(rng.uniform(-5, 5, 3)), q=random_quaternion(rng))
        b = Pose(t=tuple(rng.uniform(-5, 5, 3)), q=random_quaternion(rng))
        c = compose(a, relative_pose(a, b))
        assert max(abs(x - y) for x, y in zip(c.t, b.t)) <= 1e-12
        dq = min(
            max(abs(x - y) for x, y in zip(c.q, b.q)),
            max(abs(x + y) for x, y in zip(c.q, b.q)),
        )
        assert dq <= 1e-12

    def test_inverse_roundtrip(self, rng):
        a = Pose(t=tuple(rng.uniform(-5, 5, 3)), q=random_quaternion(rng))
        ident = compose(a, inverse(a))
        assert np.allclose(ident.t, 0, atol=1e-12)


class TestPathLength:
    def test_single_pose(self):
        assert path_length(Trajectory(samples=((0.0, Pose.identity()),))) == 0.0

    def test_line(self):
        traj = Trajectory(samples=tuple((float(i), Pose((i, 0, 0))) for i in range(3)))
        assert path_length(traj) == pytest.approx(2.0, abs=1e-12)

    def test_closed_square(self):
        corners = [(0, 0, 0), (1, 0, 0), (1, 1, 0), (0, 1, 0), (0, 0, 0)]
        traj = Trajectory(samples=tuple((float(i), Pose(c)) for i, c in enumerate(corners)))
        assert path_length(traj) == pytest.approx(4.0, abs=1e-12)

    def test_rigid_invariance(self, rng):
        traj = random_trajectory(rng, n=30)
        R = random_rotation(rng)
        shift = rng.uniform(-10, 10, 3)
        moved = Trajectory(
            samples=tuple((ts, Pose(t=tuple(R @ np.array(p.t) + shift), q=p.q)) for ts, p in traj.samples)
        )
        assert abs(path_length(moved) - path_length(traj)) <= 1e-9


class TestInvariants:
    def test_trajectory_rejects_non_monotonic(self):
        with pytest.raises(ValueError):
            Trajectory(samples=((1.0, Pose.identity()), (1.0, Pose.identity())))

    def test_trajectory_rejects_empty(self):
        with pytest.raises(ValueError):
            Trajectory(samples=())

    def test_pose_quaternion_normalized(self, rng):
        p = Pose(t=(0, 0, 0), q=(2, 0, 0, 2))
        assert abs(math.sqrt(sum(v * v for v in p.q)) - 1) <= 1e-6

    def test_pose_rejects_zero_quaternion(self):
        with pytest.raises(ValueError):
            Pose(t=(0, 0, 0), q=(0, 0, 0, 1e-9))

"""Independent brute-force reference implementations used only by tests.

Deliberately shares no code with the package under test:
- association: O(n*m) full pair enumeration
- alignment: Horn's quaternion eigenvector method (not SVD)
- pose algebra: homogeneous 4x4 matrices (not quaternion composition)
- statistics: plain Python loops
"""
import math

import numpy as np


def oracle_associate(est_ts, ref_ts, max_dt):
    """Greedy nearest-timestamp matching over the full candidate cross product."""
    candidates = []
    for i, a in enumerate(est_ts):
        for j, b in enumerate(ref_ts):
            d = abs(a - b)
            if d <= max_dt:
                candidates.append((d, i, j))
    candidates.sort()
    used_i, used_j, pairs = set(), set(), []
    for _, i, j in candidates:
        if i not in used_i and j not in used_j:
            used_i.add(i)
            used_j.add(j)
            pairs.append((i, j))
    pairs.sort(key=lambda p: ref_ts[p[1]])
    return pairs


def oracle_horn_align(src, dst):
    """Optimal rigid alignment (no scale) via Horn's closed-form quaternion method."""
    src = np.asarray(src, float)
    dst = np.asarray(dst, float)
    mu_s = src.mean(axis=0)
    mu_d = dst.mean(axis=0)
    S = np.zeros((3, 3))
    for p, q in zip(src - mu_s, dst - mu_d):
        S += np.outer(p, q)
    Sxx, Sxy, Sxz = S[0]
    Syx, Syy, Syz = S[1]
    Szx, Szy, Szz = S[2]
    N = np.array(
        [
            [Sxx + Syy + Szz, Syz - Szy, Szx - Sxz, Sxy - Syx],
            [Syz - Szy, Sxx - Syy - Szz, Sxy + Syx, Szx + Sxz],
            [Szx - Sxz, Sxy + Syx, -Sxx + Syy - Szz, Syz + Szy],
            [Sxy - Syx, Szx + Sxz, Syz + Szy, -Sxx - Syy + Szz],
        ]
    )
    eigvals, eigvecs = np.linalg.eigh(N)
    w, x, y, z = eigvecs[:, np.argmax(eigvals)]
    R = np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )
    t = mu_d - R @ mu_s
    return R, t


def quat_to_matrix(qx, qy, qz, qw):
    n = math.sqrt(qx * qx + qy * qy + qz * qz + qw * qw)
    x, y, z, w = qx / n, qy / n, qz / n, qw / n
    return np.array(
        [
            [1 - 2 * (y * y + z * z), 2 * (x * y - z * w), 2 * (x * z + y * w)],
            [2 * (x * y + z * w), 1 - 2 * (x * x + z * z), 2 * (y * z - x * w)],
            [2 * (x * z - y * w), 2 * (y * z + x * w), 1 - 2 * (x * x + y * y)],
        ]
    )


def pose_to_hom(t, q):
    T = np.eye(4)
    T[:3, :3] = quat_to_matrix(*q)
    T[:3, 3] = t
    return T


def oracle_stats(errors):
    n = len(errors)
    mn = min(errors)
    mx = max(errors)
    mean = sum(errors) / n
    var = sum((e - mean) ** 2 for e in errors) / n
    rmse = math.sqrt(sum(e * e for e in errors) / n)
    return {"min": mn, "max": mx, "mean": mean, "std": math.sqrt(var), "rmse": rmse, "count": n}


def oracle_ate(est_samples, gt_samples, max_dt):
    """est_samples/gt_samples: lists of (ts, (tx,ty,tz), (qx,qy,qz,qw))."""
    est_ts = [s[0] for s in est_samples]
    gt_ts = [s[0] for s in gt_samples]
    pairs = oracle_associate(est_ts, gt_ts, max_dt)
    src = [est_samples[i][1] for i, _ in pairs]
    dst = [gt_samples[j][1] for _, j in pairs]
    R, t = oracle_horn_align(src, dst)
    errors = [float(np.linalg.norm(np.asarray(d) - (R @ np.asarray(s) + t))) for s, d in zip(src, dst)]
    return oracle_stats(errors)


def oracle_rpe(est_samples, gt_samples, max_dt, delta_m):
    est_ts = [s[0] for s in est_samples]
    gt_ts = [s[0] for s in gt_samples]
    pairs = oracle_associate(est_ts, gt_ts, max_dt)
    gt_pos = [np.asarray(gt_samples[j][1]) for _, j in pairs]
    cum = [0.0]
    for a, b in zip(gt_pos, gt_pos[1:]):
        cum.append(cum[-1] + float(np.linalg.norm(b - a)))
    errors = []
    for i in range(len(pairs)):
        j = i
        while j < len(pairs) and cum[j] - cum[i] < delta_m:
            j += 1
        if j >= len(pairs):
            break
        d = cum[j] - cum[i]
        ei, ri = pairs[i]
        ej, rj = pairs[j]
        Tg_i = pose_to_hom(gt_samples[ri][1], gt_samples[ri][2])
        Tg_j = pose_to_hom(gt_samples[rj][1], gt_samples[rj][2])
        Te_i = pose_to_hom(est_samples[ei][1], est_samples[ei][2])
        Te_j = pose_to_hom(est_samples[ej][1], est_samples[ej][2])
        gt_rel = np.linalg.inv(Tg_i) @ Tg_j
        est_rel = np.linalg.inv(Te_i) @ Te_j
        E = np.linalg.inv(gt_rel) @ est_rel
        errors.append(float(np.linalg.norm(E[:3, 3])) / d)
    if not errors:
        return None
    return oracle_stats(errors)

"""Hot numeric kernels: pairwise range tests, component labelling, motion
integration (with optional body-contact blocking) and light sensing.

Every kernel has two implementations with identical signatures, a numba
``@njit`` one and a pure-numpy one. The module-level names are bound to the
numba versions unless ``JASMINE_SWARM_DISABLE_NUMBA`` is set to a truthy
value (or numba cannot be imported). Both backends are importable directly
through :data:`NUMBA` and :data:`NUMPY` for testing and benchmarking.

The two backends agree to floating-point rounding only (libm vs numpy
transcendental functions), so a single run must stay on one backend to be
bit-reproducible.
"""

from __future__ import annotations

import math
import os
from types import SimpleNamespace

import numpy as np

TWO_PI = 2.0 * math.pi

_FLAG = "JASMINE_SWARM_DISABLE_NUMBA"


def _numba_disabled() -> bool:
    return os.environ.get(_FLAG, "").strip().lower() not in ("", "0", "false", "no")


# --------------------------------------------------------------------------
# pure numpy
# --------------------------------------------------------------------------


def _within_radius_np(pos: np.ndarray, radius: float) -> np.ndarray:
    diff = pos[:, None, :] - pos[None, :, :]
    d2 = diff[..., 0] * diff[..., 0] + diff[..., 1] * diff[..., 1]
    adj = d2 <= radius * radius
    np.fill_diagonal(adj, False)
    return adj


def _component_labels_np(adj: np.ndarray) -> np.ndarray:
    n = adj.shape[0]
    labels = np.arange(n, dtype=np.int64)
    if n == 0:
        return labels
    while True:
        nbr_min = np.where(adj, labels[None, :], n).min(axis=1)
        new = np.minimum(labels, nbr_min)
        if np.array_equal(new, labels):
            return labels
        labels = new


def _integrate_motion_np(pos, heading, speed, turn, u_dist, u_rot, dt,
                         dist_noise, rot_noise, width, height, body_radius):
    h = heading + turn * (1.0 + u_rot * rot_noise)
    dist = speed * dt * (1.0 + u_dist * dist_noise)
    x = pos[:, 0] + dist * np.cos(h)
    y = pos[:, 1] + dist * np.sin(h)

    hit_x = (x < 0.0) | (x > width)
    hit_y = (y < 0.0) | (y > height)
    x = np.clip(x, 0.0, width)
    y = np.clip(y, 0.0, height)
    h = np.where(hit_x, math.pi - h, h)
    h = np.where(hit_y, -h, h)
    h = np.mod(h, TWO_PI)
    h = np.where(h >= TWO_PI, 0.0, h)
    out = np.stack([x, y], axis=1)
    if body_radius > 0.0:
        _resolve_contacts_np(pos, out, 2.0 * body_radius)
    return out, h


def _resolve_contacts_np(old, new, min_sep):
    # sequential in id order; robot i sees the already-resolved moves of j < i
    cur = old.copy()
    sep2 = min_sep * min_sep
    for i in range(cur.shape[0]):
        dn = new[i] - cur
        dn2 = dn[:, 0] ** 2 + dn[:, 1] ** 2
        do = old[i] - cur
        do2 = do[:, 0] ** 2 + do[:, 1] ** 2
        dn2[i] = np.inf
        if np.any((dn2 < sep2) & (dn2 < do2)):
            new[i] = old[i]
        cur[i] = new[i]


def _light_intensity_np(pos, light_pos, peak, falloff):
    if light_pos.shape[0] == 0:
        return np.zeros(pos.shape[0])
    diff = pos[:, None, :] - light_pos[None, :, :]
    d = np.sqrt(diff[..., 0] ** 2 + diff[..., 1] ** 2)
    return (peak[None, :] * np.maximum(0.0, 1.0 - d / falloff[None, :])).sum(axis=1)


NUMPY = SimpleNamespace(
    name="numpy",
    within_radius=_within_radius_np,
    component_labels=_component_labels_np,
    integrate_motion=_integrate_motion_np,
    light_intensity=_light_intensity_np,
)


# --------------------------------------------------------------------------
# numba
# --------------------------------------------------------------------------


def _build_numba_backend():
    from numba import njit

    @njit(cache=True)
    def within_radius(pos, radius):
        n = pos.shape[0]
        r2 = radius * radius
        adj = np.zeros((n, n), dtype=np.bool_)
        for i in range(n):
            for j in range(i + 1, n):
                dx = pos[i, 0] - pos[j, 0]
                dy = pos[i, 1] - pos[j, 1]
                if dx * dx + dy * dy <= r2:
                    adj[i, j] = True
                    adj[j, i] = True
        return adj

    @njit(cache=True)
    def component_labels(adj):
        n = adj.shape[0]
        labels = np.full(n, -1, dtype=np.int64)
        stack = np.empty(n, dtype=np.int64)
        for root in range(n):
            if labels[root] >= 0:
                continue
            labels[root] = root
            top = 0
            stack[top] = root
            top += 1
            while top > 0:
                top -= 1
                v = stack[top]
                for w in range(n):
                    if adj[v, w] and labels[w] < 0:
                        labels[w] = root
                        stack[top] = w
                        top += 1
        return labels

    @njit(cache=True)
    def integrate_motion(pos, heading, speed, turn, u_dist, u_rot, dt,
                         dist_noise, rot_noise, width, height, body_radius):
        n = pos.shape[0]
        out = np.empty_like(pos)
        out_h = np.empty(n)
        for i in range(n):
            h = heading[i] + turn[i] * (1.0 + u_rot[i] * rot_noise)
            dist = speed[i] * dt * (1.0 + u_dist[i] * dist_noise)
            x = pos[i, 0] + dist * math.cos(h)
            y = pos[i, 1] + dist * math.sin(h)
            if x < 0.0 or x > width:
                x = min(max(x, 0.0), width)
                h = math.pi - h
            if y < 0.0 or y > height:
                y = min(max(y, 0.0), height)
                h = -h
            h = h % TWO_PI
            if h >= TWO_PI:
                h = 0.0
            out[i, 0] = x
            out[i, 1] = y
            out_h[i] = h
        if body_radius > 0.0:
            sep2 = 4.0 * body_radius * body_radius
            cur = pos.copy()
            for i in range(n):
                blocked = False
                for j in range(n):
                    if j == i:
                        continue
                    nx = out[i, 0] - cur[j, 0]
                    ny = out[i, 1] - cur[j, 1]
                    dn2 = nx * nx + ny * ny
                    if dn2 < sep2:
                        ox = pos[i, 0] - cur[j, 0]
                        oy = pos[i, 1] - cur[j, 1]
                        if dn2 < ox * ox + oy * oy:
                            blocked = True
                            break
                if blocked:
                    out[i, 0] = pos[i, 0]
                    out[i, 1] = pos[i, 1]
                cur[i, 0] = out[i, 0]
                cur[i, 1] = out[i, 1]
        return out, out_h

    @njit(cache=True)
    def light_intensity(pos, light_pos, peak, falloff):
        n = pos.shape[0]
        out = np.zeros(n)
        for i in range(n):
            acc = 0.0
            for k in range(light_pos.shape[0]):
                dx = pos[i, 0] - light_pos[k, 0]
                dy = pos[i, 1] - light_pos[k, 1]
                f = 1.0 - math.sqrt(dx * dx + dy * dy) / falloff[k]
                if f > 0.0:
                    acc += peak[k] * f
            out[i] = acc
        return out

    return SimpleNamespace(
        name="numba",
        within_radius=within_radius,
        component_labels=component_labels,
        integrate_motion=integrate_motion,
        light_intensity=light_intensity,
    )


try:
    NUMBA: SimpleNamespace | None = _build_numba_backend()
except ImportError:  # pragma: no cover - numba is a declared dependency
    NUMBA = None

ACTIVE = NUMPY if (NUMBA is None or _numba_disabled()) else NUMBA
BACKEND = ACTIVE.name

within_radius = ACTIVE.within_radius
component_labels = ACTIVE.component_labels
integrate_motion = ACTIVE.integrate_motion
light_intensity = ACTIVE.light_intensity

import math

import pytest

from jasmine_swarm.arena import ArenaConfig, Pose, RobotState, Vec2, World


def line_world(n, gap, controller=None, **cfg):
    """Robots on a horizontal line, ``gap`` metres apart, zero noise."""
    arena = ArenaConfig(width=max(1.0, 0.2 + gap * n), height=1.0,
                        dist_noise_frac=0.0, rot_noise_frac=0.0, **cfg)
    robots = [RobotState(i, Pose(Vec2(0.1 + i * gap, 0.5), 0.0)) for i in range(n)]
    kwargs = {} if controller is None else {"controller": controller}
    return World(arena, robots, **kwargs)


@pytest.fixture
def make_line():
    return line_world


def brute_reachable(n, edges):
    """Transitive closure by repeated relaxation; no BFS queue involved."""
    reach = [[i == j for j in range(n)] for i in range(n)]
    for a, b in edges:
        reach[a][b] = reach[b][a] = True
    for k in range(n):
        for i in range(n):
            if reach[i][k]:
                for j in range(n):
                    if reach[k][j]:
                        reach[i][j] = True
    return reach


def pairs_within(points, radius):
    out = []
    for i in range(len(points)):
        for j in range(i + 1, len(points)):
            if math.dist(points[i], points[j]) <= radius:
                out.append((i, j))
    return out

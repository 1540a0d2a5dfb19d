"""Three-room grid maze with egocentric low-resolution observations.

Rooms sit side by side and are joined in an N shape: a doorway at the top
between the left and middle rooms and one at the bottom between the middle
and right rooms. Each room has its own floor and wall textures.

The agent observes a ``view_cells x view_cells`` window of cells in front
of it (its own cell centred on the bottom row), each cell drawn as a
``cell_px x cell_px`` texture block. Cells hidden behind walls are drawn
black. The top wall of the middle room is the "TV": under ``state_noise``
its visible pixels are redrawn uniformly at random on every step. Under
``action_noise`` the idle action replaces the whole observation with an
image drawn from a fixed bank of random images.
"""
from __future__ import annotations

from functools import lru_cache

import numpy as np

from ..nn import make_rng
from .base import NoiseMode, StepResult

FORWARD, TURN_LEFT, TURN_RIGHT, IDLE = range(4)
ACTION_NAMES = ("forward", "turn_left", "turn_right", "idle")

# facing: 0 north, 1 east, 2 south, 3 west
_FORWARD_VEC = ((-1, 0), (0, 1), (1, 0), (0, -1))
_RIGHT_VEC = ((0, 1), (1, 0), (0, -1), (-1, 0))

_FLOOR_TEXTURES = (
    ((0.30, 0.35), (0.35, 0.30)),
    ((0.20, 0.20), (0.45, 0.45)),
    ((0.40, 0.25), (0.25, 0.40)),
)
_WALL_TEXTURES = (
    ((0.80, 0.60), (0.60, 0.80)),
    ((0.70, 0.90), (0.70, 0.90)),
    ((1.00, 0.75), (0.75, 0.75)),
)
_DOOR_TEXTURE = ((0.55, 0.55), (0.55, 0.55))


def _texture_block(tex, px):
    tex = np.asarray(tex, dtype=np.float64)
    reps = -(-px // 2)
    return np.tile(tex, (reps, reps))[:px, :px]


@lru_cache(maxsize=8)
def _build_layout(room_width: int, room_height: int, view_cells: int, cell_px: int):
    W, H = room_width, room_height
    rows, cols = H + 2, 3 * (W + 1) + 1
    walkable = np.zeros((rows, cols), dtype=bool)
    room_of = np.zeros((rows, cols), dtype=np.int64)
    for c in range(cols):
        room_of[:, c] = min(2, max(0, (c - 1) // (W + 1)))
    for r in range(3):
        c0 = 1 + r * (W + 1)
        walkable[1:H + 1, c0:c0 + W] = True
    doors = [(1, W + 1), (H, 2 * (W + 1))]
    for d in doors:
        walkable[d] = True
    noisy_wall = np.zeros((rows, cols), dtype=bool)
    noisy_wall[0, W + 2:2 * W + 2] = True

    cells = [tuple(rc) for rc in np.argwhere(walkable)]
    cell_index = {rc: i for i, rc in enumerate(cells)}

    # a target cell is visible if any of five rays (to its centre and to points
    # near its corners) crosses no wall cell other than the target itself
    aims = np.array([[0.5, 0.5], [0.05, 0.05], [0.05, 0.95], [0.95, 0.05], [0.95, 0.95]])
    ts = np.linspace(0.0, 1.0, 4 * 2 * view_cells + 1)[1:-1]

    def visible_from(r0, c0, targets):
        targets = np.asarray(targets)
        start = np.array([r0 + 0.5, c0 + 0.5])
        ends = targets[:, None, :] + aims[None, :, :]
        pts = start + ts[None, None, :, None] * (ends - start)[:, :, None, :]
        cell = np.floor(pts).astype(np.int64)
        inside = (cell[..., 0] >= 0) & (cell[..., 0] < rows) & (cell[..., 1] >= 0) & (cell[..., 1] < cols)
        rr = np.clip(cell[..., 0], 0, rows - 1)
        cc = np.clip(cell[..., 1], 0, cols - 1)
        wall = inside & ~walkable[rr, cc]
        is_target = (cell[..., 0] == targets[:, None, None, 0]) & (cell[..., 1] == targets[:, None, None, 1])
        blocked = (wall & ~is_target).any(axis=2)
        return ~blocked.all(axis=1)

    blocks = {}
    for room in range(3):
        blocks[("floor", room)] = _texture_block(_FLOOR_TEXTURES[room], cell_px)
        blocks[("wall", room)] = _texture_block(_WALL_TEXTURES[room], cell_px)
    door_block = _texture_block(_DOOR_TEXTURE, cell_px)

    side = view_cells * cell_px
    half = view_cells // 2
    n_poses = 4 * len(cells)
    base_obs = np.zeros((n_poses, side, side))
    noisy_mask = np.zeros((n_poses, side, side), dtype=bool)
    offsets = [(k, j) for k in range(view_cells) for j in range(-half, view_cells - half)]
    for i, (r0, c0) in enumerate(cells):
        for facing in range(4):
            pose = 4 * i + facing
            fr, fc = _FORWARD_VEC[facing]
            rr, rc = _RIGHT_VEC[facing]
            placed = [(k, j, r0 + k * fr + j * rr, c0 + k * fc + j * rc) for k, j in offsets]
            placed = [p for p in placed if 0 <= p[2] < rows and 0 <= p[3] < cols]
            vis = visible_from(r0, c0, [(p[2], p[3]) for p in placed])
            for (k, j, r, c), seen in zip(placed, vis):
                if not seen:
                    continue
                if walkable[r, c]:
                    block = door_block if (r, c) in doors else blocks[("floor", room_of[r, c])]
                else:
                    block = blocks[("wall", room_of[r, c])]
                y = (view_cells - 1 - k) * cell_px
                x = (j + half) * cell_px
                base_obs[pose, y:y + cell_px, x:x + cell_px] = block
                if noisy_wall[r, c]:
                    noisy_mask[pose, y:y + cell_px, x:x + cell_px] = True
    base_obs = base_obs.reshape(n_poses, -1)
    noisy_mask = noisy_mask.reshape(n_poses, -1)
    base_obs.setflags(write=False)
    noisy_mask.setflags(write=False)
    return walkable, room_of, cells, cell_index, base_obs, noisy_mask


class GridMazeEnv:
    action_count = 4

    def __init__(self, noise_mode=NoiseMode.NONE, seed: int = 0, room_width: int = 8,
                 room_height: int = 8, view_cells: int = 8, cell_px: int = 2,
                 noise_bank_size: int = 64, goal_reward: bool = False):
        self.noise_mode = NoiseMode(noise_mode)
        self.room_width, self.room_height = room_width, room_height
        self.view_cells, self.cell_px = view_cells, cell_px
        (self.walkable, self.room_of, self.cells, self.cell_index,
         self._base_obs, self._noisy_mask) = _build_layout(room_width, room_height, view_cells, cell_px)
        self.goal_reward = goal_reward
        self.start_cell = (room_height, 1)
        self.start_facing = 0
        self.goal_cell = (1, 3 * (room_width + 1) - 1)
        # fixed at construction; reset() does not redraw the bank
        self.noise_bank = make_rng([seed, 0xBA4C]).uniform(0.0, 1.0, size=(noise_bank_size, self.obs_dim))
        self.rng = make_rng(seed)
        self.cell = self.start_cell
        self.facing = self.start_facing
        self._ready = False

    @property
    def obs_shape(self) -> tuple[int, int]:
        side = self.view_cells * self.cell_px
        return side, side

    @property
    def obs_dim(self) -> int:
        return self._base_obs.shape[1]

    @property
    def state_count(self) -> int:
        """Number of visitable (cell, facing) poses."""
        return 4 * len(self.cells)

    @property
    def cell_count(self) -> int:
        return len(self.cells)

    @property
    def latent_state_id(self) -> int:
        return 4 * self.cell_index[self.cell] + self.facing

    def sees_noisy_wall(self, pose: int | None = None) -> bool:
        pose = self.latent_state_id if pose is None else pose
        return bool(self._noisy_mask[pose].any())

    def render(self, pose: int | None = None) -> np.ndarray:
        """Noise-free observation for a pose."""
        pose = self.latent_state_id if pose is None else pose
        return self._base_obs[pose].copy()

    def _observe(self, action: int | None) -> np.ndarray:
        if self.noise_mode is NoiseMode.ACTION_NOISE and action == IDLE:
            return self.noise_bank[self.rng.integers(len(self.noise_bank))].copy()
        pose = self.latent_state_id
        obs = self._base_obs[pose].copy()
        if self.noise_mode is NoiseMode.STATE_NOISE:
            mask = self._noisy_mask[pose]
            n = int(mask.sum())
            if n:
                obs[mask] = self.rng.uniform(0.0, 1.0, size=n)
        return obs

    def reset(self, seed: int | None = None) -> StepResult:
        if seed is not None:
            self.rng = make_rng(seed)
        self.cell, self.facing = self.start_cell, self.start_facing
        self._ready = True
        return StepResult(self._observe(None), 0.0, False, self.latent_state_id)

    def step(self, action: int) -> StepResult:
        if not self._ready:
            raise RuntimeError("call reset() before step()")
        if not 0 <= action < self.action_count:
            raise ValueError(f"invalid action {action}; expected 0..{self.action_count - 1}")
        if action == FORWARD:
            fr, fc = _FORWARD_VEC[self.facing]
            nxt = (self.cell[0] + fr, self.cell[1] + fc)
            if self.walkable[nxt]:
                self.cell = nxt
        elif action == TURN_LEFT:
            self.facing = (self.facing - 1) % 4
        elif action == TURN_RIGHT:
            self.facing = (self.facing + 1) % 4
        reward, done = 0.0, False
        if self.goal_reward and self.cell == self.goal_cell:
            reward, done = 1.0, True
        return StepResult(self._observe(action), reward, done, self.latent_state_id)

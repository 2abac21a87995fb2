"""
Autoregressive decoding with Euler sampling and guidance

Each token integrates the head's velocity field from z ~ N(0, I) over N
uniform Euler steps with no intermediate normalization, then projects once
onto the radius-R sphere. In projected mode that token is what gets refed;
raw mode refeeds the unprojected endpoint to expose norm drift.
"""

import csv
import logging
from dataclasses import dataclass, field
from enum import Enum
from pathlib import Path

import numpy as np

from ..geometry import SphericalToken, project_to_sphere
from .exceptions import ArError
from .schedule import CfgSchedule, guided_velocity
from .tokens import TokenSequence, raster_positions
from .transformer import ArModel, KVCache, prime, recompute_hidden, step

logger = logging.getLogger(__name__)

DIAGNOSTIC_COLUMNS = ("step", "pre_norm", "post_norm", "guarded", "cfg_scale")


class RefeedMode(str, Enum):
    PROJECTED = "projected"
    RAW = "raw"


@dataclass(frozen=True, eq=False)
class NextToken:
    pre_projection: np.ndarray
    token: SphericalToken
    cfg_scale: float


@dataclass
class DecodeStep:
    step: int
    pre_norm: float
    post_norm: float
    guarded: bool
    cfg_scale: float

    def row(self) -> list:
        return [self.step, self.pre_norm, self.post_norm, int(self.guarded), self.cfg_scale]


@dataclass(eq=False)
class DecodeResult:
    sequence: TokenSequence
    pre_projection: np.ndarray  # (l, d)
    diagnostics: list[DecodeStep] = field(default_factory=list)

    @property
    def guard_count(self) -> int:
        return sum(s.guarded for s in self.diagnostics)

    def write_diagnostics(self, path: Path) -> Path:
        path = Path(path)
        path.parent.mkdir(parents=True, exist_ok=True)
        with path.open("w", newline="") as f:
            writer = csv.writer(f)
            writer.writerow(DIAGNOSTIC_COLUMNS)
            writer.writerows(s.row() for s in self.diagnostics)
        return path


def euler_integrate(velocity, z0: np.ndarray, n_steps: int) -> np.ndarray:
    """z <- z + dt * v(z, t) at t = i * dt for i < n_steps, dt = 1 / n_steps"""
    if n_steps < 1:
        raise ArError(f"n_steps must be >= 1, got {n_steps}")
    dt = 1.0 / n_steps
    z = np.array(z0, dtype=np.float64)
    for i in range(n_steps):
        z = z + dt * velocity(z, i * dt)
    return z


def sample_next_token(
    model: ArModel,
    hidden: np.ndarray,
    n_steps: int,
    cfg: CfgSchedule,
    hidden_uncond: np.ndarray | None,
    rng: np.random.Generator,
    radius: float,
    position: int = 0,
    length: int = 1,
) -> NextToken:
    """
    Draw one token given the conditional (and unconditional) hidden state

    The unconditional branch is evaluated only when the scale at this
    position differs from 1.
    """
    scale = cfg.scale_at(position, length)
    if scale != 1.0 and hidden_uncond is None:
        raise ArError("guidance needs the unconditional hidden state")
    head = model.head
    h_c = np.asarray(hidden).reshape(1, -1)
    h_u = None if hidden_uncond is None else np.asarray(hidden_uncond).reshape(1, -1)

    def velocity(z: np.ndarray, t: float) -> np.ndarray:
        t_arr = np.array([[t]])
        v_c = head.velocity_array(z[None], t_arr, h_c)[0]
        if scale == 1.0:
            return v_c
        return guided_velocity(v_c, head.velocity_array(z[None], t_arr, h_u)[0], scale)

    z0 = rng.standard_normal(model.config.token_dim)
    z = euler_integrate(velocity, z0, n_steps)
    return NextToken(pre_projection=z, token=project_to_sphere(z, radius), cfg_scale=scale)


def decode_sequence(
    model: ArModel,
    class_id: int,
    length: int,
    n_steps: int,
    cfg: CfgSchedule,
    rng: np.random.Generator,
    radius: float,
    refeed_mode: RefeedMode | str = RefeedMode.PROJECTED,
    use_cache: bool = True,
) -> DecodeResult:
    """
    Decode `length` tokens in raster order

    Projected mode returns a sequence of norm-R tokens. Raw mode returns the
    unprojected endpoints (radius 0). Diagnostics record the endpoint norm as
    pre_norm and the norm of the refed token as post_norm, so in raw mode the
    two are equal; the guard flag still reports whether projecting the
    endpoint would have fired the guard.
    """
    mode = RefeedMode(refeed_mode)
    class_id = model.check_class(class_id)
    if length > model.config.max_length:
        raise ArError(f"length {length} exceeds the {model.config.grid} grid")
    guided = cfg.guided
    if use_cache:
        cache_c = KVCache.empty(model.config.depth)
        cache_u = KVCache.empty(model.config.depth) if guided else None
        h_c = prime(model, class_id, cache_c)
        h_u = prime(model, None, cache_u) if guided else None
    else:
        h_c = recompute_hidden(model, class_id, [])
        h_u = recompute_hidden(model, None, []) if guided else None

    positions = raster_positions(model.config.grid, length)
    refed: list[np.ndarray] = []
    pre = np.empty((length, model.config.token_dim))
    diagnostics = []
    for k in range(length):
        nxt = sample_next_token(model, h_c, n_steps, cfg, h_u, rng, radius, k, length)
        pre[k] = nxt.pre_projection
        token = nxt.token.components if mode is RefeedMode.PROJECTED else nxt.pre_projection
        refed.append(token)
        diagnostics.append(
            DecodeStep(
                step=k,
                pre_norm=float(np.linalg.norm(nxt.pre_projection)),
                post_norm=float(np.linalg.norm(token)),
                guarded=nxt.token.guarded,
                cfg_scale=nxt.cfg_scale,
            )
        )
        if nxt.token.guarded:
            logger.warning("Projection guard fired at step %d (pre-norm %.3e)", k, diagnostics[-1].pre_norm)
        if k == length - 1:
            break
        if use_cache:
            x = model.token_in.apply(token)
            h_c = step(model, x, positions[k], cache_c)
            if guided:
                h_u = step(model, x, positions[k], cache_u)
        else:
            h_c = recompute_hidden(model, class_id, refed)
            if guided:
                h_u = recompute_hidden(model, None, refed)

    grid = model.config.grid if length == model.config.max_length else (1, length)
    sequence = TokenSequence(
        np.array(refed).reshape(length, model.config.token_dim),
        grid,
        # a guarded token is shorter than R, so the sequence loses its norm contract
        radius=radius if mode is RefeedMode.PROJECTED and not any(s.guarded for s in diagnostics) else 0.0,
    )
    return DecodeResult(sequence=sequence, pre_projection=pre, diagnostics=diagnostics)

"""The behavioral-search control loop.

One call to Agent.step performs exactly one loop transition: select a goal
edge when there is none, find a path when there is no path, otherwise try to
traverse the next edge of the path. Traversal outcomes feed back into the
graph (success and failure counts, stress-triggered refinement, extension of
every vertex on arrival, pass-through links) and into the affordance
threshold homeostat, which raises the threshold after traversal failures and
lowers it after pathfinding failures.

The homeostat state is the tuple (alpha_thr, alpha_thr0, delta_plus,
delta_minus, kappa). Its three update functions are pure and exactly
reproduce the reference traces: a traversal failure blends the clipped gap
between the failed edge's affordance and the threshold into the raise rate,
then raises; a found path, if it ends a pathing-failure cascade, blends the
cascade's total drop into the lower rate and clears kappa; a pathing failure
snapshots the threshold on cascade entry, clamps down to the best inhibited
affordance, and lowers.
"""

from __future__ import annotations

from dataclasses import dataclass, field, replace

import numpy as np

from . import pathfind
from .segraph import ReliabilityConfig, Segraph

REWARD_RATE = 0.05  # exponential running-mean rate for per-vertex reward


@dataclass(frozen=True)
class Lambda:
    alpha_thr: float = 0.0
    alpha_thr0: float = 0.0
    delta_plus: float = 0.0
    delta_minus: float = 0.0
    kappa: int = 0


@dataclass(frozen=True)
class AgentConfig:
    reliability: ReliabilityConfig = field(default_factory=ReliabilityConfig)
    beta_r: float = 0.1
    lambda_tau_plus: float = 0.5
    lambda_tau_minus: float = 0.5
    refine_slowdown_start: float = 0.8  # fraction of vertex cap
    exploit_gain: float = 4.0
    controller_timeout: int = 200
    initial_radius: float = 1.0


def adjust_threshold(alpha: float, delta: float, rng) -> float:
    """alpha + n * delta with n ~ U([0, 2]), clamped at zero."""
    n = float(rng.uniform(0.0, 2.0))
    return max(0.0, alpha + n * delta)


def on_traversal_failure(lam: Lambda, edge_affordance: float, cfg: AgentConfig, rng) -> Lambda:
    gap = max(0.0, edge_affordance - lam.alpha_thr)
    delta_plus = (1.0 - cfg.beta_r) * lam.delta_plus + cfg.beta_r * cfg.lambda_tau_plus * gap
    alpha = adjust_threshold(lam.alpha_thr, delta_plus, rng)
    return replace(lam, alpha_thr=alpha, delta_plus=delta_plus)


def on_path_found(lam: Lambda, cfg: AgentConfig) -> Lambda:
    if lam.kappa <= 0:
        return lam
    drop = lam.alpha_thr0 - lam.alpha_thr
    delta_minus = (1.0 - cfg.beta_r) * lam.delta_minus + cfg.beta_r * cfg.lambda_tau_minus * drop
    return replace(lam, delta_minus=delta_minus, kappa=0)


def on_pathing_failure(
    lam: Lambda, best_inhibited_affordance: float | None, cfg: AgentConfig, rng
) -> Lambda:
    alpha0 = lam.alpha_thr if lam.kappa == 0 else lam.alpha_thr0
    alpha = lam.alpha_thr
    if best_inhibited_affordance is not None:
        alpha = min(alpha, best_inhibited_affordance)
    alpha = adjust_threshold(alpha, -lam.delta_minus, rng)
    return replace(lam, alpha_thr=alpha, alpha_thr0=alpha0, kappa=lam.kappa + 1)


@dataclass
class Event:
    t: int
    kind: str
    edge: int | None = None
    vertex: int | None = None
    alpha_thr: float = 0.0
    kappa: int = 0
    n_vertices: int = 0
    n_edges: int = 0
    reward: float = 0.0


def run_controller(env, controller, position, target, timeout, on_step=None):
    """Drive the controller toward the target until success or give-up.

    Returns (reached, final_position). The give-up indicator is collision
    (for controllers that treat contact as failure), exhaustion of the step
    budget, or the single allowed action of jump-mode controllers.
    """
    cs = controller.reset()
    pos = position
    for _ in range(timeout):
        action = controller.act(cs, pos, target)
        res = env.step(pos, action)
        if on_step is not None:
            on_step(res)
        pos = res.position
        if controller.success(pos, target):
            return True, pos
        if res.collided and controller.fail_on_collision:
            return False, pos
        if controller.single_shot:
            return False, pos
    return False, pos


def exploit_decision(graph: Segraph, cfg: AgentConfig, rng) -> str:
    """Pick explore or exploit from the visit-weighted reward deviation."""
    rewarded = [(v.visits, v.reward_avg) for v in graph.vertices.values() if v.visits > 0]
    if not rewarded:
        return "explore"
    w = np.array([r[0] for r in rewarded], dtype=np.float64)
    r = np.array([r[1] for r in rewarded])
    mean = float(np.sum(w * r) / np.sum(w))
    std = float(np.sqrt(np.sum(w * (r - mean) ** 2) / np.sum(w)))
    deviation = float(np.max(r - mean)) / (std + 1e-9)
    p_exploit = 1.0 / (1.0 + np.exp(-cfg.exploit_gain * (deviation - 1.0)))
    return "exploit" if float(rng.uniform()) < p_exploit else "explore"


def record_reward(graph: Segraph, vid: int, reward: float) -> None:
    v = graph.vertices[vid]
    if not v.reward_seen:
        v.reward_avg = reward
        v.reward_seen = True
    else:
        v.reward_avg = (1.0 - REWARD_RATE) * v.reward_avg + REWARD_RATE * reward


class Agent:
    """Owns the graph, homeostat, and loop state for one life."""

    def __init__(
        self,
        graph: Segraph,
        cfg: AgentConfig,
        rng: np.random.Generator,
        probe=None,
        invert_probe: bool = False,
    ):
        self.graph = graph
        self.cfg = cfg
        self.rng = rng
        self.probe = probe if probe is not None else (lambda a, b: 1.0)
        self.invert_probe = invert_probe
        self.lam = Lambda()
        self.position: np.ndarray | None = None
        self.current_vertex: int | None = None
        self.goal_edge: int | None = None
        self.goal_vertex: int | None = None
        self.path: list[int] | None = None
        self.mode = "explore"
        self.alpha_avg = 0.0
        self.alpha_avg_decay = 0.999
        self.total_reward = 0.0
        self.on_physics_step = None  # optional hook(res: StepResult)
        self._passthrough: set[int] = set()

    # -- setup ------------------------------------------------------------

    def place(self, position: np.ndarray):
        """Drop the agent at a position, creating a home vertex if needed."""
        self.position = np.asarray(position, dtype=np.float64).copy()
        vid = self.graph.smallest_containing(self.position)
        if vid is None:
            vid = self.graph.add_vertex(self.position, self.cfg.initial_radius)
        self.graph.mark_visited(vid)
        self.current_vertex = vid

    def reset_task_state(self):
        """Drop goal and path (used after an environment swap)."""
        self.goal_edge = None
        self.goal_vertex = None
        self.path = None

    # -- one loop transition -----------------------------------------------

    def step(self, env, controller) -> Event:
        if self.current_vertex is None or self.position is None:
            raise RuntimeError("agent must be placed before stepping")
        if self.current_vertex not in self.graph.vertices:
            # home vertex was evicted at the cap; any pending path is stale
            self._relocate()
            self.path = None
        if self.goal_edge is None or self.goal_edge not in self.graph.edges:
            return self._select_goal()
        if not self.path:
            return self._find_path()
        return self._traverse(env, controller)

    # -- goal selection (a) -------------------------------------------------

    def _select_goal(self) -> Event:
        g = self.graph
        self.path = None
        self.goal_vertex = None
        out_deg = len(g.out_edges(self.current_vertex))
        eid, src, dst, ns, nf, nups, manual = g.edge_table()
        ghost = g.ghost_mask()
        if out_deg == 0 or not eid.size or bool(np.all(ghost)):
            g.extend_vertex(
                self.current_vertex,
                self.probe,
                self.rng,
                invert=self.invert_probe,
                protected=self._protected(),
            )
            return self._event("extend", vertex=self.current_vertex)
        self.mode = exploit_decision(g, self.cfg, self.rng)
        goal = None
        if self.mode == "exploit":
            goal = self._exploit_goal()
        if goal is None:
            self.mode = "explore"
            ups = g.epistemic_vector()
            order = np.lexsort((eid, -ups))
            goal = int(eid[order[0]])
        self.goal_edge = goal
        g.clear_manual_inhibition()
        return self._event("goal_selected", edge=goal)

    def _exploit_goal(self) -> int | None:
        g = self.graph
        best_vid, best_r = None, -np.inf
        for vid, v in g.vertices.items():
            if v.reward_seen and (v.reward_avg > best_r or (v.reward_avg == best_r and vid < best_vid)):
                best_vid, best_r = vid, v.reward_avg
        if best_vid is None:
            return None
        in_edges = [e for e in g.in_edges(best_vid) if not g.is_ghost(e)]
        return min(in_edges) if in_edges else None

    # -- pathfinding (b..e) ---------------------------------------------------

    def _find_path(self) -> Event:
        g = self.graph
        gm = pathfind.build_matrix(g, self.lam.alpha_thr, self.goal_edge)
        path = pathfind.find_path(self.current_vertex, self.goal_edge, gm, self.rng)
        if path is not None:
            self.path = path
            self.goal_vertex = path[-1]
            self.lam = on_path_found(self.lam, self.cfg)
            return self._event("path_found", edge=self.goal_edge)
        had_manual = bool(np.any(g.edge_table()[6]))
        structural = self.lam.alpha_thr == 0.0 and not had_manual
        self.lam = on_pathing_failure(self.lam, self._best_inhibited(), self.cfg, self.rng)
        g.clear_manual_inhibition()
        g.bump_upsilon(self.goal_edge)
        if structural:
            # threshold already floored and nothing inhibited: unreachable goal
            abandoned = self.goal_edge
            self.goal_edge = None
            return self._event("goal_abandoned", edge=abandoned)
        return self._event("pathing_failure", edge=self.goal_edge)

    def _best_inhibited(self) -> float | None:
        g = self.graph
        eid, src, dst, ns, nf, nups, manual = g.edge_table()
        if not eid.size:
            return None
        alpha = g.affordance_vector()
        inhibited = (manual | (alpha < self.lam.alpha_thr)) & ~g.ghost_mask()
        if self.goal_edge is not None:
            inhibited &= eid != self.goal_edge
        if not inhibited.any():
            return None
        return float(alpha[inhibited].max())

    # -- traversal (f..q) -------------------------------------------------------

    def _traverse(self, env, controller) -> Event:
        g = self.graph
        src_vid = self.current_vertex
        dst_vid = self.path[0]
        if dst_vid not in g.vertices:
            self.path = None
            return self._event("path_dropped")
        eid = g.edge_between(src_vid, dst_vid)
        if eid is None:
            eid = g.link(src_vid, dst_vid)
        target_v = g.vertices[dst_vid]
        target = target_v.center + _ball_point(self.rng, self.graph.dim) * target_v.radius
        self._passthrough.clear()
        reward_before = self.total_reward
        ok, pos = run_controller(
            env, controller, self.position, target, self.cfg.controller_timeout,
            on_step=lambda res: self._on_physics(res, src_vid, dst_vid),
        )
        self.position = pos
        gained = self.total_reward - reward_before
        if ok:
            return self._on_success(eid, src_vid, dst_vid, gained)
        return self._on_failure(eid, src_vid, gained)

    def _on_physics(self, res, src_vid, dst_vid):
        g = self.graph
        g.time += 1
        self.alpha_avg = (
            self.alpha_avg_decay * self.alpha_avg
            + (1.0 - self.alpha_avg_decay) * self.lam.alpha_thr
        )
        self.total_reward += res.reward
        containing = g.containing_vertices(res.position)
        if containing:
            record_reward(g, containing[0], res.reward)
        for vid in containing:
            if vid != src_vid and vid != dst_vid:
                self._passthrough.add(vid)
        if self.on_physics_step is not None:
            self.on_physics_step(res)

    def _on_success(self, eid: int, src_vid: int, dst_vid: int, gained: float) -> Event:
        g = self.graph
        g.record_success(eid)
        g.vertices[src_vid].transits += 1
        g.mark_visited(dst_vid)
        self.current_vertex = dst_vid
        self.path.pop(0)
        for vid in sorted(self._passthrough):
            if vid in g.vertices and vid != src_vid:
                g.link(src_vid, vid)
        g.extend_vertex(
            dst_vid, self.probe, self.rng, invert=self.invert_probe, protected=self._protected()
        )
        if not self.path:
            self.goal_edge = None
            self.goal_vertex = None
            self.path = None
            return self._event("goal_reached", edge=eid, vertex=dst_vid, reward=gained)
        return self._event("traversal_success", edge=eid, vertex=dst_vid, reward=gained)

    def _on_failure(self, eid: int, src_vid: int, gained: float) -> Event:
        g = self.graph
        g.record_failure(eid)
        self._relocate()
        g.set_manual_inhibited(eid, True)
        if g.stress(eid, self._refine_scale_factor()) > self.cfg.reliability.stress_threshold:
            g.refine_edge(eid, self.rng, protected=self._protected())
        self.lam = on_traversal_failure(self.lam, g.affordance(eid), self.cfg, self.rng)
        self.path = None
        return self._event("traversal_failure", edge=eid, vertex=self.current_vertex, reward=gained)

    def _relocate(self):
        vid = self.graph.smallest_containing(self.position)
        if vid is None:
            vid = self.graph.add_vertex(
                self.position, self.cfg.initial_radius, protected=self._protected()
            )
        if vid is None:  # cap reached with everything protected; reuse nearest
            ids, centers, _ = self.graph._geometry()
            vid = int(ids[np.argmin(np.linalg.norm(centers - self.position, axis=1))])
        self.graph.mark_visited(vid)
        self.current_vertex = vid

    def _refine_scale_factor(self) -> float:
        frac = len(self.graph.vertices) / self.graph.vertex_cap
        start = self.cfg.refine_slowdown_start
        if frac <= start:
            return 1.0
        return max(0.0, 1.0 - (frac - start) / (1.0 - start))

    def _protected(self) -> tuple[int, ...]:
        out = set()
        if self.current_vertex is not None:
            out.add(self.current_vertex)
        if self.goal_edge is not None and self.goal_edge in self.graph.edges:
            e = self.graph.edges[self.goal_edge]
            out.add(e.src)
            out.add(e.dst)
        return tuple(sorted(out))

    def _event(self, kind: str, edge=None, vertex=None, reward=0.0) -> Event:
        return Event(
            t=self.graph.time,
            kind=kind,
            edge=edge,
            vertex=vertex,
            alpha_thr=self.lam.alpha_thr,
            kappa=self.lam.kappa,
            n_vertices=len(self.graph.vertices),
            n_edges=len(self.graph.edges),
            reward=reward,
        )


def _ball_point(rng, dim: int) -> np.ndarray:
    u = rng.normal(size=dim)
    u /= np.linalg.norm(u)
    return u * rng.uniform() ** (1.0 / dim)

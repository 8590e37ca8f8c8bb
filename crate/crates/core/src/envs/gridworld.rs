use rand::Rng as _;
use serde::{Deserialize, Serialize};

use super::{EnvSpec, PerturbationKind, Trajectory};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;
use crate::rng::Rng;

/// The nine cell displacements, indexed `k = (dy + 1) * 3 + (dx + 1)`.
pub const GRID_MOVES: [(i64, i64); 9] =
    [(-1, -1), (0, -1), (1, -1), (-1, 0), (0, 0), (1, 0), (-1, 1), (0, 1), (1, 1)];

/// Inclusive rectangle of cells.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Region {
    pub x: (usize, usize),
    pub y: (usize, usize),
}

impl Region {
    pub fn contains(&self, c: (usize, usize)) -> bool {
        (self.x.0..=self.x.1).contains(&c.0) && (self.y.0..=self.y.1).contains(&c.1)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridConfig {
    pub size: usize,
    /// Probability that the chosen move is replaced by a uniformly random one.
    pub slip: f64,
    pub horizon: usize,
    /// Per-axis action magnitude above which the agent moves along that axis.
    pub move_threshold: f64,
    pub goal_region: Region,
    /// Pins the goal (used for tabular export and exact evaluation).
    pub fixed_goal: Option<(usize, usize)>,
}

impl Default for GridConfig {
    fn default() -> Self {
        Self {
            size: 8,
            slip: 0.1,
            horizon: 20,
            move_threshold: 0.5,
            goal_region: Region { x: (0, 3), y: (0, 7) },
            fixed_goal: None,
        }
    }
}

/// Goal-reaching gridworld with slippery moves.
///
/// State vector `(x, y, goal_x, goal_y)` with cell coordinates mapped to `[-1, 1]`;
/// action in `R^2`, each axis thresholded into a `{-1, 0, +1}` move. Reward is 1
/// while standing on the goal, and an episode succeeds if it ever reaches the goal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridWorld {
    pub config: GridConfig,
}

impl GridWorld {
    pub fn new(config: GridConfig) -> Self {
        Self { config }
    }

    fn half(&self) -> f64 {
        (self.config.size as f64 - 1.0) / 2.0
    }

    pub fn encode(&self, c: usize) -> f64 {
        (c as f64 - self.half()) / self.half()
    }

    pub fn decode(&self, v: f64) -> usize {
        let c = (v * self.half() + self.half()).round();
        c.clamp(0.0, self.config.size as f64 - 1.0) as usize
    }

    pub fn state(&self, pos: (usize, usize), goal: (usize, usize)) -> Vec<f64> {
        vec![self.encode(pos.0), self.encode(pos.1), self.encode(goal.0), self.encode(goal.1)]
    }

    pub fn position(&self, state: &[f64]) -> (usize, usize) {
        (self.decode(state[0]), self.decode(state[1]))
    }

    pub fn goal(&self, state: &[f64]) -> (usize, usize) {
        (self.decode(state[2]), self.decode(state[3]))
    }

    pub fn n_cells(&self) -> usize {
        self.config.size * self.config.size
    }

    pub fn cell_index(&self, c: (usize, usize)) -> usize {
        c.1 * self.config.size + c.0
    }

    pub fn cell_at(&self, index: usize) -> (usize, usize) {
        (index % self.config.size, index / self.config.size)
    }

    fn axis_move(&self, a: f64) -> i64 {
        if a > self.config.move_threshold {
            1
        } else if a < -self.config.move_threshold {
            -1
        } else {
            0
        }
    }

    /// Index into [`GRID_MOVES`] selected by a continuous action.
    pub fn move_index(&self, action: &[f64]) -> usize {
        let dx = self.axis_move(action[0]);
        let dy = self.axis_move(action[1]);
        ((dy + 1) * 3 + (dx + 1)) as usize
    }

    /// A continuous action that selects move `k`.
    pub fn representative_action(&self, k: usize) -> Vec<f64> {
        let (dx, dy) = GRID_MOVES[k];
        let m = 2.0 * self.config.move_threshold;
        vec![dx as f64 * m, dy as f64 * m]
    }

    fn apply_move(&self, c: (usize, usize), k: usize) -> (usize, usize) {
        let (dx, dy) = GRID_MOVES[k];
        let max = self.config.size as i64 - 1;
        ((c.0 as i64 + dx).clamp(0, max) as usize, (c.1 as i64 + dy).clamp(0, max) as usize)
    }

    fn goal_cells(&self) -> Vec<(usize, usize)> {
        if let Some(g) = self.config.fixed_goal {
            return vec![g];
        }
        let r = self.config.goal_region;
        (r.y.0..=r.y.1).flat_map(|y| (r.x.0..=r.x.1).map(move |x| (x, y))).collect()
    }

    pub(crate) fn spec(&self) -> EnvSpec {
        EnvSpec {
            name: "gridworld-goal".into(),
            state_dim: 4,
            action_dim: 2,
            horizon: self.config.horizon,
            reward_bound: 1.0,
        }
    }

    pub(crate) fn reset(&self, rng: &mut Rng) -> Vec<f64> {
        let goals = self.goal_cells();
        let goal = goals[rng.gen_range(0..goals.len())];
        let n = self.n_cells();
        // start uniformly on a cell other than the goal
        let mut idx = rng.gen_range(0..n - 1);
        if idx >= self.cell_index(goal) {
            idx += 1;
        }
        self.state(self.cell_at(idx), goal)
    }

    pub(crate) fn step(&self, state: &[f64], action: &[f64], rng: &mut Rng) -> Vec<f64> {
        let pos = self.position(state);
        let goal = self.goal(state);
        let intended = self.move_index(action);
        let k = if self.config.slip > 0.0 && rng.gen_bool(self.config.slip.min(1.0)) {
            rng.gen_range(0..GRID_MOVES.len())
        } else {
            intended
        };
        self.state(self.apply_move(pos, k), goal)
    }

    pub(crate) fn reward(&self, state: &[f64], _action: &[f64], _next: &[f64]) -> f64 {
        if self.position(state) == self.goal(state) {
            1.0
        } else {
            0.0
        }
    }

    pub(crate) fn is_terminal(&self, _state: &[f64]) -> bool {
        false
    }

    pub(crate) fn is_success(&self, traj: &Trajectory) -> bool {
        traj.states().any(|s| self.position(s) == self.goal(s))
    }

    pub(crate) fn goal_distance(&self, state: &[f64]) -> f64 {
        let (p, g) = (self.position(state), self.goal(state));
        (p.0 as f64 - g.0 as f64).abs().max((p.1 as f64 - g.1 as f64).abs())
    }

    pub(crate) fn project(&self, state: &mut [f64]) {
        for v in state.iter_mut().take(4) {
            *v = self.encode(self.decode(*v));
        }
    }

    pub(crate) fn task_coords(&self) -> Vec<usize> {
        vec![0, 1]
    }

    pub(crate) fn success_threshold(&self) -> f64 {
        0.0
    }

    pub(crate) fn perturb(&mut self, kind: PerturbationKind, magnitude: f64) -> Result<()> {
        match kind {
            PerturbationKind::DynamicsShift => {
                self.config.slip = (self.config.slip * magnitude).min(1.0);
            }
            PerturbationKind::GoalShift => {
                let max = self.config.size - 1;
                let r = self.config.goal_region;
                let mirrored = Region { x: (max - r.x.1, max - r.x.0), y: r.y };
                if mirrored.x.0 <= r.x.1 && r.x.0 <= mirrored.x.1 {
                    return Err(Error::UnsupportedPerturbation {
                        env: "gridworld-goal".into(),
                        kind: format!("{kind} (goal region cannot be mirrored to a disjoint region)"),
                    });
                }
                self.config.goal_region = mirrored;
                if let Some(g) = self.config.fixed_goal {
                    self.config.fixed_goal = Some((max - g.0, g.1));
                }
            }
        }
        Ok(())
    }

    /// Exact tabular form for a fixed goal: states are agent cells, actions the
    /// nine moves, `rho` uniform over non-goal cells.
    pub fn to_tabular(&self, goal: (usize, usize), gamma: f64) -> Result<TabularMdp> {
        let n = self.n_cells();
        let k = GRID_MOVES.len();
        let slip = self.config.slip.min(1.0);
        let mut transitions = vec![0.0; n * k * n];
        for s in 0..n {
            let c = self.cell_at(s);
            for a in 0..k {
                let row = &mut transitions[(s * k + a) * n..(s * k + a + 1) * n];
                row[self.cell_index(self.apply_move(c, a))] += 1.0 - slip;
                for m in 0..k {
                    row[self.cell_index(self.apply_move(c, m))] += slip / k as f64;
                }
                crate::mdp::random::fix_sum(row);
            }
        }
        let goal_idx = self.cell_index(goal);
        let mut rewards = vec![0.0; n];
        rewards[goal_idx] = 1.0;
        let mut rho = vec![1.0 / (n - 1) as f64; n];
        rho[goal_idx] = 0.0;
        crate::mdp::random::fix_sum(&mut rho);
        TabularMdp::new(n, k, transitions, rewards, gamma, rho)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::envs::{collect_rollouts, Env};
    use crate::mdp::{visitation, TabularPolicy, VisitationKind};
    use crate::rng;

    fn grid(slip: f64) -> GridWorld {
        GridWorld::new(GridConfig { slip, fixed_goal: Some((7, 7)), ..GridConfig::default() })
    }

    #[test]
    fn move_right_without_slip_walks_along_row_zero() {
        let g = grid(0.0);
        let mut s = g.state((0, 0), (7, 7));
        let mut r = rng::from_seed(0);
        for x in 1..8 {
            s = g.step(&s, &[1.0, 0.0], &mut r);
            assert_eq!(g.position(&s), (x, 0));
        }
        // wall
        s = g.step(&s, &[1.0, 0.0], &mut r);
        assert_eq!(g.position(&s), (7, 0));
    }

    #[test]
    fn encode_decode_round_trip() {
        let g = grid(0.1);
        for c in 0..8 {
            assert_eq!(g.decode(g.encode(c)), c);
        }
        let mut s = vec![g.encode(3) + 0.04, g.encode(5) - 0.05, g.encode(0), g.encode(7)];
        g.project(&mut s);
        assert_eq!(s, g.state((3, 5), (0, 7)));
    }

    #[test]
    fn tabular_rows_follow_slip() {
        let g = grid(0.1);
        let m = g.to_tabular((7, 7), 0.9).unwrap();
        // interior cell, move right: 0.9 + 0.1/9 on the intended cell
        let s = g.cell_index((3, 3));
        let a = 5;
        let row = m.row(s, a);
        assert!((row[g.cell_index((4, 3))] - (0.9 + 0.1 / 9.0)).abs() < 1e-12);
        assert!((row[g.cell_index((2, 2))] - 0.1 / 9.0).abs() < 1e-12);

        let mut shifted = g.clone();
        shifted.perturb(PerturbationKind::DynamicsShift, 3.0).unwrap();
        assert!((shifted.config.slip - 0.3).abs() < 1e-12);
        let m2 = shifted.to_tabular((7, 7), 0.9).unwrap();
        let row2 = m2.row(s, a);
        assert!((row2[g.cell_index((4, 3))] - (0.7 + 0.3 / 9.0)).abs() < 1e-12);
        assert!((row2.iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn goal_shift_moves_support_to_disjoint_region() {
        let mut g = GridWorld::new(GridConfig::default());
        g.perturb(PerturbationKind::GoalShift, 1.0).unwrap();
        assert_eq!(g.config.goal_region, Region { x: (4, 7), y: (0, 7) });
        let mut r = rng::from_seed(3);
        for _ in 0..200 {
            let s = g.reset(&mut r);
            assert!(g.goal(&s).0 >= 4);
        }
    }

    #[test]
    fn empirical_visitation_matches_exact() {
        // fixed stochastic policy: right or down-right with equal probability
        let g = grid(0.1);
        let env = Env::GridworldGoal(g.clone());
        let actor = |_: &[f64], r: &mut rng::Rng| if r.gen_bool(0.5) { vec![1.0, 1.0] } else { vec![1.0, 0.0] };
        let trajs = collect_rollouts(&env, &actor, 100_000, 17).unwrap();
        let mut counts = vec![0.0; g.n_cells()];
        let mut total = 0.0;
        for t in &trajs {
            for tr in &t.transitions {
                counts[g.cell_index(g.position(&tr.state))] += 1.0;
                total += 1.0;
            }
        }
        counts.iter_mut().for_each(|c| *c /= total);
        let m = g.to_tabular((7, 7), 0.9).unwrap();
        let mut probs = vec![0.0; g.n_cells() * 9];
        for s in 0..g.n_cells() {
            probs[s * 9 + 8] = 0.5;
            probs[s * 9 + 5] = 0.5;
        }
        let pi = TabularPolicy::new(g.n_cells(), 9, probs).unwrap();
        let exact = visitation(&m, &pi, VisitationKind::Average { horizon: g.config.horizon }).unwrap();
        let tv = crate::mdp::tv_distance(&counts, &exact.states).unwrap();
        assert!(tv < 0.02, "tv {tv}");
    }
}

//! User clustering for access points with several independently steerable
//! beams.
//!
//! A modified k-means: every cluster is served by one beam. Each iteration
//! (a) steers every beam for the users currently in its cluster, treating
//! the cluster in isolation, then (b) moves every user to the beam that
//! gives it the largest channel gain. Iteration stops once all beam
//! parameters repeat between two consecutive iterations.
//!
//! Clusters start from the first `N` users, one each. A cluster that loses
//! all of its users (or a user that no beam reaches) triggers a restart
//! from a random one-user-per-cluster seeding; after `max_restarts` failed
//! restarts, empty clusters are dropped and their LEDs left idle.

use rand::seq::index::sample;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{BeamConfig, PhyParams, UserPose};
use crate::error::{Error, Result};
use crate::geometry::{cos_irradiance, Vec3};
use crate::optimizer::{
    build_gain_grid, solve_mm, GainGrid, GridSpec, LogRateTable, MmParams, SolverKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VucParams {
    pub max_iters: usize,
    pub max_restarts: usize,
    pub solver: SolverKind,
    pub mm: MmParams,
    /// Seeds the random re-initialization used by restarts.
    pub seed: u64,
}

impl Default for VucParams {
    fn default() -> Self {
        Self {
            max_iters: 50,
            max_restarts: 5,
            solver: SolverKind::Exhaustive,
            mm: MmParams::default(),
            seed: 0,
        }
    }
}

/// Assignment of users to beams plus the beams' steering.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterState {
    /// `assignments[n]`: ascending user indices served by beam `n`.
    pub assignments: Vec<Vec<usize>>,
    /// Steering of each beam; `None` for an idle LED.
    pub beams: Vec<Option<BeamConfig>>,
    /// Grid index of each active beam.
    pub beam_indices: Vec<Option<usize>>,
    /// `gains[k][n]`: channel gain from beam `n` to user `k`.
    pub gains: Vec<Vec<f64>>,
    /// Users no active beam reaches (left out of every cluster).
    pub unreachable: Vec<usize>,
    pub iterations: usize,
    pub converged: bool,
    pub restarts: usize,
}

impl ClusterState {
    pub fn num_beams(&self) -> usize {
        self.beams.len()
    }

    pub fn num_users(&self) -> usize {
        self.gains.len()
    }

    /// Beam serving user `k`, if any.
    pub fn cluster_of(&self, user: usize) -> Option<usize> {
        self.assignments.iter().position(|members| members.contains(&user))
    }

    pub fn has_empty_cluster(&self) -> bool {
        self.beams
            .iter()
            .zip(&self.assignments)
            .any(|(beam, members)| beam.is_some() && members.is_empty())
    }
}

/// Moves every user to the beam with the largest gain (ties to the lowest
/// beam index). Users with zero gain from every beam are listed in
/// `unreachable` and left unassigned.
pub fn reassign_users(state: &ClusterState) -> ClusterState {
    let n_beams = state.num_beams();
    let mut assignments = vec![Vec::new(); n_beams];
    let mut unreachable = Vec::new();
    for (k, row) in state.gains.iter().enumerate() {
        let mut best: Option<(usize, f64)> = None;
        for (n, &h) in row.iter().enumerate() {
            if state.beams[n].is_none() {
                continue;
            }
            if h > best.map_or(0.0, |(_, b)| b) {
                best = Some((n, h));
            }
        }
        match best {
            Some((n, _)) => assignments[n].push(k),
            None => unreachable.push(k),
        }
    }
    ClusterState {
        assignments,
        unreachable,
        ..state.clone()
    }
}

#[derive(Debug)]
enum Breakdown {
    EmptyCluster,
    Unreachable,
    Fatal(Error),
}

impl From<Error> for Breakdown {
    fn from(e: Error) -> Self {
        Breakdown::Fatal(e)
    }
}

/// Precomputed per-instance data for the clustering iterations.
pub struct VucEngine<'a> {
    tx_pos: Vec3,
    users: &'a [UserPose],
    beams: usize,
    grid: GainGrid,
    /// ln R over the grid at per-beam power; only built for the exhaustive solver.
    table: Option<LogRateTable>,
    phy_beam: PhyParams,
    params: VucParams,
}

impl<'a> VucEngine<'a> {
    /// `beam_phy` is the link seen through one beam, i.e. with the AP's
    /// power already divided among its beams.
    pub fn new(
        tx_pos: Vec3,
        users: &'a [UserPose],
        beams: usize,
        spec: &GridSpec,
        beam_phy: &PhyParams,
        params: VucParams,
    ) -> Result<Self> {
        if users.is_empty() {
            return Err(Error::NoUsers);
        }
        if beams == 0 || beams > users.len() {
            return Err(Error::InvalidParameter {
                name: "beams",
                reason: format!("need 1 <= N <= K, got N = {beams}, K = {}", users.len()),
            });
        }
        if params.max_iters == 0 {
            return Err(Error::InvalidParameter {
                name: "vuc_max_iters",
                reason: "must be >= 1".into(),
            });
        }
        beam_phy.validate()?;
        let phy_beam = *beam_phy;
        let grid = build_gain_grid(tx_pos, users, spec, beam_phy.rx_area)?;
        let table = (params.solver == SolverKind::Exhaustive).then(|| LogRateTable::new(&grid, &phy_beam));
        Ok(Self {
            tx_pos,
            users,
            beams,
            grid,
            table,
            phy_beam,
            params,
        })
    }

    pub fn grid(&self) -> &GainGrid {
        &self.grid
    }

    /// Per-beam link parameters (power already split across beams).
    pub fn beam_phy(&self) -> &PhyParams {
        &self.phy_beam
    }

    fn steer(&self, members: &[usize]) -> Result<usize> {
        match &self.table {
            Some(table) => table.best_for(members).map(|(i, _)| i),
            None => {
                let gains = members.iter().map(|&k| self.grid.user_gains(k).to_vec()).collect();
                let sub = GainGrid::from_raw(self.grid.axes().clone(), gains)?;
                solve_mm(&sub, &self.phy_beam, &self.params.mm).map(|out| out.solution.index)
            }
        }
    }

    /// Steps (a) and (b) once: steer every non-empty cluster, then reassign.
    /// Beams whose cluster is empty go idle.
    pub fn step(&self, assignments: &[Vec<usize>]) -> Result<ClusterState> {
        let beam_indices = assignments
            .iter()
            .map(|members| {
                if members.is_empty() {
                    Ok(None)
                } else {
                    self.steer(members).map(Some)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let beams = beam_indices.iter().map(|i| i.map(|i| self.grid.beam(i))).collect();
        let gains = (0..self.users.len())
            .map(|k| {
                beam_indices
                    .iter()
                    .map(|i| i.map_or(0.0, |i| self.grid.gain(k, i)))
                    .collect()
            })
            .collect();
        let steered = ClusterState {
            assignments: assignments.to_vec(),
            beams,
            beam_indices,
            gains,
            unreachable: Vec::new(),
            iterations: 0,
            converged: false,
            restarts: 0,
        };
        Ok(reassign_users(&steered))
    }

    /// Assigns each unreachable user to the active beam pointing closest to it.
    fn adopt_unreachable(&self, state: &mut ClusterState) -> Result<()> {
        for k in std::mem::take(&mut state.unreachable) {
            let v = self.users[k].position - self.tx_pos;
            let mut best: Option<(usize, f64)> = None;
            for (n, beam) in state.beams.iter().enumerate() {
                if let Some(beam) = beam {
                    let c = cos_irradiance(&v, &beam.orientation())?;
                    if best.map_or(true, |(_, b)| c > b) {
                        best = Some((n, c));
                    }
                }
            }
            let (n, _) = best.ok_or_else(|| Error::Clustering("no active beam left".into()))?;
            state.assignments[n].push(k);
            state.assignments[n].sort_unstable();
        }
        Ok(())
    }

    fn iterate(&self, seeds: Vec<Vec<usize>>, allow_idle: bool) -> std::result::Result<ClusterState, Breakdown> {
        let mut assignments = seeds;
        let mut previous: Option<Vec<Option<usize>>> = None;
        let mut state = None;
        for iteration in 1..=self.params.max_iters {
            let mut next = self.step(&assignments)?;
            next.iterations = iteration;
            if !next.unreachable.is_empty() {
                if !allow_idle {
                    return Err(Breakdown::Unreachable);
                }
                self.adopt_unreachable(&mut next)?;
            }
            if !allow_idle && next.has_empty_cluster() {
                return Err(Breakdown::EmptyCluster);
            }
            if previous.as_ref() == Some(&next.beam_indices) {
                next.converged = true;
                return Ok(next);
            }
            previous = Some(next.beam_indices.clone());
            assignments = next.assignments.clone();
            state = Some(next);
        }
        let state = state.expect("max_iters >= 1");
        log::warn!(
            "clustering did not converge within {} iterations",
            self.params.max_iters
        );
        Ok(state)
    }

    /// Runs the clustering with restarts and the idle-LED fallback.
    pub fn run(&self) -> Result<ClusterState> {
        let k = self.users.len();
        let mut rng = ChaCha8Rng::seed_from_u64(self.params.seed);
        let mut seeds: Vec<Vec<usize>> = (0..self.beams).map(|n| vec![n]).collect();
        for restart in 0..=self.params.max_restarts {
            match self.iterate(seeds, false) {
                Ok(mut state) => {
                    state.restarts = restart;
                    return Ok(state);
                }
                Err(Breakdown::Fatal(e)) => return Err(e),
                Err(reason) => {
                    log::debug!("clustering restart {} after {reason:?}", restart + 1);
                    seeds = sample(&mut rng, k, self.beams)
                        .into_iter()
                        .map(|u| vec![u])
                        .collect();
                }
            }
        }
        let seeds = (0..self.beams).map(|n| vec![n]).collect();
        match self.iterate(seeds, true) {
            Ok(mut state) => {
                state.restarts = self.params.max_restarts + 1;
                Ok(state)
            }
            Err(Breakdown::Fatal(e)) => Err(e),
            Err(other) => Err(Error::Clustering(format!("unrecoverable: {other:?}"))),
        }
    }
}

/// Clusters `users` onto `beams` steerable beams; see the module docs.
/// `phy.tx_power` is the AP total, split evenly so each beam emits `p / N`.
pub fn vuc_cluster(
    tx_pos: Vec3,
    users: &[UserPose],
    beams: usize,
    spec: &GridSpec,
    phy: &PhyParams,
    params: VucParams,
) -> Result<ClusterState> {
    VucEngine::new(tx_pos, users, beams, spec, &phy.per_beam(beams), params)?.run()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::optimizer::{solve_single_beam, SolverKind};

    const AP: Vec3 = Vec3::new(4.0, 4.0, 4.0);

    fn coarse() -> GridSpec {
        GridSpec {
            alpha_step: 4.0,
            beta_step: 4.0,
            ..GridSpec::default()
        }
    }

    fn state_from_gains(gains: Vec<Vec<f64>>) -> ClusterState {
        let n = gains[0].len();
        ClusterState {
            assignments: vec![Vec::new(); n],
            beams: vec![Some(BeamConfig::new(270.0, 0.0, 5.0)); n],
            beam_indices: vec![Some(0); n],
            gains,
            unreachable: Vec::new(),
            iterations: 0,
            converged: false,
            restarts: 0,
        }
    }

    #[test]
    fn reassign_picks_argmax() {
        let s = reassign_users(&state_from_gains(vec![vec![0.1, 0.3, 0.2]]));
        assert_eq!(s.assignments, vec![vec![], vec![0], vec![]]);
    }

    #[test]
    fn reassign_ties_go_low() {
        let s = reassign_users(&state_from_gains(vec![vec![0.3, 0.3]]));
        assert_eq!(s.assignments, vec![vec![0], vec![]]);
    }

    #[test]
    fn reassign_flags_dark_user() {
        let s = reassign_users(&state_from_gains(vec![vec![0.0, 0.0], vec![0.1, 0.0]]));
        assert_eq!(s.unreachable, vec![0]);
        assert_eq!(s.assignments, vec![vec![1], vec![]]);
    }

    #[test]
    fn one_beam_matches_single_beam_solve() {
        let users = [
            UserPose::facing_up(Vec3::new(1.0, 2.0, 0.85)),
            UserPose::facing_up(Vec3::new(6.0, 2.5, 0.85)),
            UserPose::facing_up(Vec3::new(3.3, 7.1, 0.85)),
        ];
        let phy = PhyParams::default();
        let state = vuc_cluster(AP, &users, 1, &coarse(), &phy, VucParams::default()).unwrap();
        let plan = solve_single_beam(AP, &users, &coarse(), &phy, SolverKind::Exhaustive, &MmParams::default()).unwrap();
        assert_eq!(state.beams, vec![Some(plan.beam)]);
        assert_eq!(state.assignments, vec![vec![0, 1, 2]]);
        assert!(state.converged);
    }

    #[test]
    fn far_apart_pair_each_gets_nearest_beam() {
        let a = UserPose::facing_up(Vec3::new(0.5, 0.5, 0.85));
        let b = UserPose::facing_up(Vec3::new(7.5, 7.5, 0.85));
        let phy = PhyParams::default();
        for users in [[a, b], [b, a]] {
            let state = vuc_cluster(AP, &users, 2, &coarse(), &phy, VucParams::default()).unwrap();
            assert!(state.converged);
            // brute force over the two possible partitions: the chosen one
            // gives each user the larger of its two beam gains
            for k in 0..2 {
                let n = state.cluster_of(k).unwrap();
                assert_eq!(state.assignments[n], vec![k]);
                assert!(state.gains[k][n] > state.gains[k][1 - n]);
                assert_eq!(state.beams[n].unwrap().gamma, 15.0);
            }
        }
    }

    #[test]
    fn rejects_more_beams_than_users() {
        let users = [UserPose::facing_up(Vec3::new(1.0, 2.0, 0.85))];
        assert!(matches!(
            vuc_cluster(AP, &users, 2, &coarse(), &PhyParams::default(), VucParams::default()),
            Err(Error::InvalidParameter { name: "beams", .. })
        ));
    }

    #[test]
    fn result_is_a_fixed_point() {
        let users = [
            UserPose::facing_up(Vec3::new(1.0, 1.5, 0.85)),
            UserPose::facing_up(Vec3::new(1.8, 1.0, 0.85)),
            UserPose::facing_up(Vec3::new(6.5, 6.0, 0.85)),
            UserPose::facing_up(Vec3::new(7.0, 7.2, 0.85)),
            UserPose::facing_up(Vec3::new(4.0, 7.5, 0.85)),
        ];
        let phy = PhyParams::default();
        let engine = VucEngine::new(AP, &users, 2, &coarse(), &phy.per_beam(2), VucParams::default()).unwrap();
        let state = engine.run().unwrap();
        assert!(state.converged);
        let again = engine.step(&state.assignments).unwrap();
        assert_eq!(again.beam_indices, state.beam_indices);
        assert_eq!(again.assignments, state.assignments);
        assert_eq!(again.gains, state.gains);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;
        use rand::{Rng, SeedableRng};
        use rand_chacha::ChaCha8Rng;

        fn drop_users(k: usize, seed: u64) -> Vec<UserPose> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            (0..k)
                .map(|_| UserPose::facing_up(Vec3::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0), 0.85)))
                .collect()
        }

        /// Rejection-samples `k` users pairwise more than 4 m apart.
        fn separated_users(k: usize, seed: u64) -> Vec<UserPose> {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            'outer: loop {
                let pts: Vec<Vec3> = (0..k)
                    .map(|_| Vec3::new(rng.gen_range(0.0..8.0), rng.gen_range(0.0..8.0), 0.85))
                    .collect();
                for i in 0..k {
                    for j in i + 1..k {
                        if (pts[i] - pts[j]).norm() <= 4.0 {
                            continue 'outer;
                        }
                    }
                }
                return pts.into_iter().map(UserPose::facing_up).collect();
            }
        }

        fn params(seed: u64) -> VucParams {
            VucParams {
                seed,
                ..VucParams::default()
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn clusters_partition_users(seed in any::<u64>(), k in 1usize..7, n in 1usize..4) {
                let users = drop_users(k, seed);
                let n = n.min(k);
                let state = vuc_cluster(AP, &users, n, &coarse(), &PhyParams::default(), params(seed)).unwrap();
                let mut seen = vec![0usize; k];
                for c in &state.assignments {
                    for &u in c {
                        seen[u] += 1;
                    }
                }
                for &u in &state.unreachable {
                    seen[u] += 1;
                }
                prop_assert!(seen.iter().all(|&c| c == 1), "{:?}", state.assignments);
            }

            #[test]
            fn clustering_is_deterministic(seed in any::<u64>(), k in 2usize..6) {
                let users = drop_users(k, seed);
                let a = vuc_cluster(AP, &users, 2, &coarse(), &PhyParams::default(), params(seed)).unwrap();
                let b = vuc_cluster(AP, &users, 2, &coarse(), &PhyParams::default(), params(seed)).unwrap();
                prop_assert_eq!(a, b);
            }

            #[test]
            fn separated_users_get_own_beams(seed in any::<u64>(), k in 2usize..4) {
                let users = separated_users(k, seed);
                let state = vuc_cluster(AP, &users, k, &coarse(), &PhyParams::default(), params(seed)).unwrap();
                prop_assert!(state.assignments.iter().all(|c| c.len() == 1), "{:?}", state.assignments);
            }
        }
    }
}

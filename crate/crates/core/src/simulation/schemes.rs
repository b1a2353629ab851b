use crate::channel::{boresight_gain, los_gain, user_rate, BeamConfig, PhyParams, UserPose};
use crate::clustering::{ClusterState, VucEngine, VucParams};
use crate::error::{Error, Result};
use crate::geometry::{angles_from_direction, SteeringAngles};
use crate::optimizer::{solve_single_beam, GridSpec};

use super::{ScenarioConfig, Scheme, SchemeKind, StreamMode};

/// Per-drop outcome of one transmission scheme.
#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    /// Delivered (time-shared) rate of each user, bit/s.
    pub rates: Vec<f64>,
    pub sum_rate: f64,
    /// `Σ_k ln(delivered rate_k)`.
    pub objective: f64,
    pub beams: Vec<BeamConfig>,
    /// User indices served by each beam, when more than one beam is steered.
    pub assignment: Option<Vec<Vec<usize>>>,
}

impl SchemeResult {
    fn from_rates(rates: Vec<f64>, beams: Vec<BeamConfig>, assignment: Option<Vec<Vec<usize>>>) -> Self {
        let sum_rate = rates.iter().sum();
        let objective = rates.iter().map(|r| r.ln()).sum();
        Self {
            rates,
            sum_rate,
            objective,
            beams,
            assignment,
        }
    }
}

/// Un-steered fixture: one nadir beam at the default directivity, full power,
/// equal TDMA shares.
pub fn run_no_steering(users: &[UserPose], config: &ScenarioConfig) -> Result<SchemeResult> {
    if users.is_empty() {
        return Err(Error::NoUsers);
    }
    let beam = BeamConfig {
        angles: SteeringAngles::NADIR,
        gamma: config.default_gamma,
    };
    let tau = 1.0 / users.len() as f64;
    let rates = users
        .iter()
        .map(|u| Ok(tau * user_rate(los_gain(config.ap_position, &beam, u, config.phy.rx_area)?, &config.phy)))
        .collect::<Result<Vec<_>>>()?;
    Ok(SchemeResult::from_rates(rates, vec![beam], None))
}

/// Fixed-focus slow beam steering with the scenario's stream mode.
pub fn run_sbs(users: &[UserPose], config: &ScenarioConfig) -> Result<SchemeResult> {
    run_steered(users, config, &config.sbs_grid(), config.stream, config.seed)
}

/// Slow beam steering with directivity optimized over the full grid.
pub fn run_sbsf(users: &[UserPose], config: &ScenarioConfig) -> Result<SchemeResult> {
    run_steered(users, config, &config.grid, config.stream, config.seed)
}

/// Genie-aided fast steering: during each user's slot the beam points
/// exactly at that user.
pub fn run_ga_fbs(users: &[UserPose], config: &ScenarioConfig) -> Result<SchemeResult> {
    if users.is_empty() {
        return Err(Error::NoUsers);
    }
    let gamma = if config.ga_fbs_focus {
        config.grid.gamma_max
    } else {
        config.default_gamma
    };
    let tau = 1.0 / users.len() as f64;
    let mut rates = Vec::with_capacity(users.len());
    let mut beams = Vec::with_capacity(users.len());
    for user in users {
        let h = boresight_gain(config.ap_position, gamma, user, config.phy.rx_area)?;
        rates.push(tau * user_rate(h, &config.phy));
        beams.push(BeamConfig {
            angles: angles_from_direction(&(user.position - config.ap_position)),
            gamma,
        });
    }
    Ok(SchemeResult::from_rates(rates, beams, None))
}

/// Runs `scheme` on one drop; `vuc_seed` drives clustering restarts.
pub fn run_scheme(
    users: &[UserPose],
    config: &ScenarioConfig,
    scheme: Scheme,
    vuc_seed: u64,
) -> Result<SchemeResult> {
    let stream = scheme.stream.unwrap_or(config.stream);
    match scheme.kind {
        SchemeKind::NoSteering => run_no_steering(users, config),
        SchemeKind::Sbs => run_steered(users, config, &config.sbs_grid(), stream, vuc_seed),
        SchemeKind::Sbsf => run_steered(users, config, &config.grid, stream, vuc_seed),
        SchemeKind::GaFbs => run_ga_fbs(users, config),
    }
}

fn run_steered(
    users: &[UserPose],
    config: &ScenarioConfig,
    grid: &GridSpec,
    stream: StreamMode,
    vuc_seed: u64,
) -> Result<SchemeResult> {
    if config.beams == 1 {
        let plan = solve_single_beam(config.ap_position, users, grid, &config.phy, config.solver, &config.mm)?;
        return Ok(SchemeResult::from_rates(plan.rates, vec![plan.beam], None));
    }
    // with fewer users than LEDs only K beams light up, each still at p / N
    let active = config.beams.min(users.len());
    let params = VucParams {
        max_iters: config.vuc_max_iters,
        max_restarts: config.vuc_max_restarts,
        solver: config.solver,
        mm: config.mm,
        seed: vuc_seed,
    };
    let beam_phy = config.phy.per_beam(config.beams);
    let state = VucEngine::new(config.ap_position, users, active, grid, &beam_phy, params)?.run()?;
    Ok(evaluate_multibeam(&state, &beam_phy, stream))
}

/// Rates delivered by a clustered multi-beam AP. `beam_phy` carries the
/// per-beam transmit power.
///
/// * single stream: every beam carries the same waveform, so a user's gains
///   add; all users share one TDMA frame.
/// * multi stream: user `k` in cluster `n` sees
///   `SINR = (r p h_kn)² / (N₀B + Σ_{m≠n} (r p h_km)²)` and shares time only
///   with its own cluster.
pub fn evaluate_multibeam(state: &ClusterState, beam_phy: &PhyParams, stream: StreamMode) -> SchemeResult {
    let k_total = state.num_users();
    let noise = beam_phy.noise_power();
    let rates = match stream {
        StreamMode::Single => {
            let tau = 1.0 / k_total as f64;
            state
                .gains
                .iter()
                .map(|row| tau * user_rate(row.iter().sum(), beam_phy))
                .collect()
        }
        StreamMode::Multi => (0..k_total)
            .map(|k| {
                let Some(n) = state.cluster_of(k) else {
                    return 0.0;
                };
                let row = &state.gains[k];
                let interference: f64 = row
                    .iter()
                    .enumerate()
                    .filter(|&(m, _)| m != n)
                    .map(|(_, &h)| beam_phy.signal_power(h))
                    .sum();
                let sinr = beam_phy.signal_power(row[n]) / (noise + interference);
                let tau = 1.0 / state.assignments[n].len() as f64;
                tau * beam_phy.rate_from_sinr(sinr)
            })
            .collect(),
    };
    let beams = state.beams.iter().flatten().copied().collect();
    SchemeResult::from_rates(rates, beams, Some(state.assignments.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::clustering::vuc_cluster;
    use crate::geometry::Vec3;

    fn coarse_config() -> ScenarioConfig {
        ScenarioConfig {
            grid: GridSpec {
                alpha_step: 4.0,
                beta_step: 4.0,
                ..GridSpec::default()
            },
            ..ScenarioConfig::default()
        }
    }

    fn pose(x: f64, y: f64) -> UserPose {
        UserPose::facing_up(Vec3::new(x, y, 0.85))
    }

    #[test]
    fn no_steering_single_user_below() {
        let config = ScenarioConfig::default();
        let u = pose(4.0, 4.0);
        let r = run_no_steering(&[u], &config).unwrap();
        let h = los_gain(config.ap_position, &BeamConfig::new(270.0, 0.0, 5.0), &u, 1e-4).unwrap();
        assert_eq!(r.rates, vec![user_rate(h, &config.phy)]);
        assert_eq!(r.sum_rate, r.rates[0]);
    }

    #[test]
    fn no_steering_corner_is_worse() {
        let config = ScenarioConfig::default();
        let center = run_no_steering(&[pose(4.0, 4.0)], &config).unwrap();
        let corner = run_no_steering(&[pose(0.1, 0.1)], &config).unwrap();
        assert!(corner.sum_rate < center.sum_rate);
    }

    #[test]
    fn no_steering_halves_with_two_users() {
        let config = ScenarioConfig::default();
        let u = pose(2.5, 5.0);
        let one = run_no_steering(&[u], &config).unwrap();
        let two = run_no_steering(&[u, pose(6.0, 1.0)], &config).unwrap();
        assert_eq!(two.rates[0], one.rates[0] / 2.0);
    }

    #[test]
    fn sbsf_single_user_points_with_max_focus() {
        let config = coarse_config();
        let u = pose(2.0, 6.0);
        let r = run_sbsf(&[u], &config).unwrap();
        assert_eq!(r.beams[0].gamma, 15.0);
        let ga = run_ga_fbs(&[u], &config).unwrap();
        // (α, β) and (540° − α, β + 180°) coincide, so compare directions:
        // within one grid quantum of the genie pointing
        let v = u.position - config.ap_position;
        let cos_off = crate::geometry::cos_irradiance(&v, &r.beams[0].orientation()).unwrap();
        assert!(cos_off.acos().to_degrees() <= 4.0);
        assert!(r.sum_rate <= ga.sum_rate);
        assert!(r.sum_rate > 0.99 * ga.sum_rate);
    }

    #[test]
    fn ga_fbs_symmetric_pair_equal_rates() {
        let config = ScenarioConfig::default();
        let r = run_ga_fbs(&[pose(2.0, 4.0), pose(6.0, 4.0)], &config).unwrap();
        assert_eq!(r.rates[0], r.rates[1]);
    }

    #[test]
    fn ga_fbs_dominates_every_user() {
        let config = coarse_config();
        let users = [pose(1.0, 2.0), pose(6.5, 3.0), pose(4.5, 7.0)];
        let ga = run_ga_fbs(&users, &config).unwrap();
        let sbsf = run_sbsf(&users, &config).unwrap();
        for (g, s) in ga.rates.iter().zip(&sbsf.rates) {
            assert!(g >= s);
        }
    }

    #[test]
    fn one_beam_multi_stream_equals_single_beam() {
        let config = coarse_config();
        let users = [pose(1.0, 2.0), pose(6.5, 3.0), pose(4.5, 7.0)];
        let single = run_sbsf(&users, &config).unwrap();
        let state = vuc_cluster(config.ap_position, &users, 1, &config.grid, &config.phy, VucParams::default())
            .unwrap();
        let multi = evaluate_multibeam(&state, &config.phy.per_beam(1), StreamMode::Multi);
        assert_eq!(multi.rates, single.rates);
        assert_eq!(multi.objective, single.objective);
    }

    fn hand_state(gains: Vec<Vec<f64>>, assignments: Vec<Vec<usize>>) -> ClusterState {
        let n = gains[0].len();
        ClusterState {
            assignments,
            beams: vec![Some(BeamConfig::new(270.0, 0.0, 5.0)); n],
            beam_indices: vec![Some(0); n],
            gains,
            unreachable: Vec::new(),
            iterations: 1,
            converged: true,
            restarts: 0,
        }
    }

    #[test]
    fn no_interferer_sinr_is_snr() {
        let phy = PhyParams::default().per_beam(2);
        let state = hand_state(vec![vec![3e-6, 0.0], vec![0.0, 5e-6]], vec![vec![0], vec![1]]);
        let r = evaluate_multibeam(&state, &phy, StreamMode::Multi);
        assert_eq!(r.rates, vec![user_rate(3e-6, &phy), user_rate(5e-6, &phy)]);
    }

    #[test]
    fn two_beam_sinr_matches_oracle() {
        let phy = PhyParams::default().per_beam(2);
        let gains = vec![vec![4e-6, 1.5e-6], vec![0.7e-6, 2.5e-6]];
        let state = hand_state(gains.clone(), vec![vec![0], vec![1]]);
        let r = evaluate_multibeam(&state, &phy, StreamMode::Multi);
        // oracle: currents in amperes, powers in A²
        let amp = |h: f64| 1.0 * 0.5 * h;
        let noise = 2.5e-20 * 20e6;
        for (k, own) in [(0usize, 0usize), (1, 1)] {
            let other = 1 - own;
            let sinr = amp(gains[k][own]).powi(2) / (noise + amp(gains[k][other]).powi(2));
            let expected = 20e6 * (1.0 + sinr).log2();
            approx::assert_relative_eq!(r.rates[k], expected, max_relative = 1e-12);
        }
    }

    #[test]
    fn single_stream_adds_gains() {
        let phy = PhyParams::default().per_beam(2);
        let state = hand_state(vec![vec![1e-6, 2e-6], vec![3e-6, 0.5e-6]], vec![vec![1], vec![0]]);
        let r = evaluate_multibeam(&state, &phy, StreamMode::Single);
        assert_eq!(r.rates[0], 0.5 * user_rate(1e-6 + 2e-6, &phy));
        assert_eq!(r.rates[1], 0.5 * user_rate(3e-6 + 0.5e-6, &phy));
    }

    #[test]
    fn shared_cluster_splits_time() {
        let phy = PhyParams::default().per_beam(2);
        let state = hand_state(
            vec![vec![4e-6, 0.0], vec![3e-6, 0.0], vec![0.0, 2e-6]],
            vec![vec![0, 1], vec![2]],
        );
        let r = evaluate_multibeam(&state, &phy, StreamMode::Multi);
        assert_eq!(r.rates[0], 0.5 * user_rate(4e-6, &phy));
        assert_eq!(r.rates[2], user_rate(2e-6, &phy));
        assert_eq!(r.sum_rate, r.rates.iter().sum::<f64>());
    }

    mod props {
        use super::*;
        use crate::simulation::{generate_users, trial_rng};
        use proptest::prelude::*;

        fn small_config(users: usize, beams: usize) -> ScenarioConfig {
            ScenarioConfig {
                users,
                beams,
                grid: GridSpec {
                    alpha_step: 10.0,
                    beta_step: 15.0,
                    gamma_step: 2.0,
                    ..GridSpec::default()
                },
                ..ScenarioConfig::default()
            }
        }

        proptest! {
            #![proptest_config(ProptestConfig::with_cases(24))]
            #[test]
            fn rates_are_nonnegative_and_sum(seed in any::<u64>(), k in 1usize..6, n in 1usize..4, multi in any::<bool>()) {
                let config = small_config(k, n);
                let users = generate_users(&config, &mut trial_rng(seed, 0));
                let stream = if multi { StreamMode::Multi } else { StreamMode::Single };
                for kind in [SchemeKind::NoSteering, SchemeKind::Sbs, SchemeKind::Sbsf, SchemeKind::GaFbs] {
                    let r = run_scheme(&users, &config, Scheme::with_stream(kind, stream), seed).unwrap();
                    prop_assert_eq!(r.rates.len(), k);
                    prop_assert!(r.rates.iter().all(|&x| x >= 0.0));
                    prop_assert_eq!(r.sum_rate, r.rates.iter().sum::<f64>());
                }
            }

            #[test]
            fn one_beam_multi_stream_matches_single_beam(seed in any::<u64>(), k in 1usize..5) {
                let config = small_config(k, 1);
                let users = generate_users(&config, &mut trial_rng(seed, 0));
                let plain = run_sbsf(&users, &config).unwrap();
                let multi = run_scheme(&users, &config, Scheme::with_stream(SchemeKind::Sbsf, StreamMode::Multi), seed).unwrap();
                prop_assert_eq!(plain.rates, multi.rates);
            }
        }
    }
}

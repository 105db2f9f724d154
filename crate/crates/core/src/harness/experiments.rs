//! Per-kind experiment drivers.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::config::{ExperimentConfig, ExperimentKind, Placement, SweepAxis};
use super::report::{fmt_num, Metric, ReportRow, Stats, Status, Table, Unit};
use crate::channel::{attenuation_factor, bs_positions, build_channel, from_positions, VirtualChannel};
use crate::deployment::{
    gauss_lobatto_points, grouped_layout, optimize_layout_numeric, spread_groups, LayoutObjective, LayoutSearch,
};
use crate::geometry::{distance, jammer_arrival_angle, NodeLayout, PlanarLayout, Scenario};
use crate::linalg::{hpd_inverse, norm_sqr};
use crate::precoding::{
    randomize_round, solve_relaxed, target_amplitudes, worst_case_eve_snr, zero_forcing, EveConstraint,
    PrecoderSolution, RoundingMethod, SecureSdpProblem,
};
use crate::receiving::{
    lcmv_weights, robust_weights, sample_covariance, worst_case_sjnr, CovarianceModel, RobustSettings,
};
use crate::sdp::SdpSettings;
use crate::simulation::{
    channel_capacity, scenario_covariance, scenario_jammers, simulate_block, transmit_pattern, transmit_pattern_2d,
    receive_pattern, TransmissionPlan,
};
use crate::units::linear_to_db;
use crate::{CMat, CVec, Error, Result, C64};

/// Rows, plot table, summary values and warnings of one run.
pub(super) struct RunOutput {
    pub metrics: Vec<Metric>,
    pub rows: Vec<ReportRow>,
    pub plot: Table,
    pub summary: BTreeMap<String, f64>,
    pub warnings: Vec<String>,
}

/// Random quantities of one trial, shared by every sweep point so that
/// curves compare like with like.
struct Trial {
    index: usize,
    rotation: f64,
    seed: u64,
}

fn trial(cfg: &ExperimentConfig, index: usize) -> Trial {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    rng.set_stream(index as u64);
    let jitter = cfg.layout.rotation_jitter_deg;
    let offset = if jitter > 0.0 && !cfg.kind.single_shot() { rng.random_range(-jitter..=jitter) } else { 0.0 };
    Trial { index, rotation: (cfg.layout.rotation_deg + offset).to_radians(), seed: rng.random() }
}

/// The physical scenario at one sweep point.
struct Point {
    index: usize,
    scn: Scenario,
    nodes: usize,
    steering_uncertainty: f64,
}

fn sweep_point(cfg: &ExperimentConfig, base: &Scenario, index: usize, value: f64) -> Point {
    let mut p = Point {
        index,
        scn: base.clone(),
        nodes: cfg.layout.nodes,
        steering_uncertainty: cfg.receiver.steering_uncertainty,
    };
    match cfg.axis() {
        SweepAxis::SnrDb => p.scn.qos_snr = crate::units::db_to_linear(value),
        SweepAxis::Nodes => p.nodes = value as usize,
        SweepAxis::Uncertainty => p.steering_uncertainty = value,
        SweepAxis::AzimuthDeg => {}
    }
    p
}

pub(super) fn build_layout(
    cfg: &ExperimentConfig,
    scn: &Scenario,
    l: usize,
    rotation: f64,
) -> Result<NodeLayout> {
    let k = cfg.layout.streams;
    let d = cfg.layout.aperture_m;
    let delta = match cfg.layout.placement {
        Placement::Optimized => {
            let search = LayoutSearch { seed: cfg.seed, ..LayoutSearch::default() };
            return optimize_layout_numeric(scn, l, k, d, rotation, LayoutObjective::DetGain, &search);
        }
        Placement::Fekete if l == 1 => vec![0.0],
        Placement::Fekete => gauss_lobatto_points(l)?.points,
        Placement::Grouped => grouped_layout(l, k)?,
        Placement::Spread => {
            let g = l / k;
            let spacing = if g > 1 { cfg.layout.group_width / (g - 1) as f64 } else { 0.0 };
            spread_groups(&grouped_layout(l, k)?, k, spacing)?
        }
        Placement::Uniform => return NodeLayout::uniform(l, d, rotation),
    };
    NodeLayout::new(delta, d, rotation)
}

fn sdp_settings(cfg: &ExperimentConfig) -> SdpSettings {
    SdpSettings {
        tolerance: cfg.solver.tolerance,
        feasibility_tolerance: cfg.solver.feasibility_tolerance,
        max_iterations: cfg.solver.max_iterations,
    }
}

/// Secure precoding problem with the relative eavesdropper radius applied.
fn secure_problem(
    cfg: &ExperimentConfig,
    scn: &Scenario,
    layout: &NodeLayout,
    channel: &VirtualChannel,
) -> Result<SecureSdpProblem> {
    let mut p = SecureSdpProblem::from_channel(scn, layout, channel, cfg.solver.eve_phase_model)?;
    for e in &mut p.eves {
        e.radius = cfg.scenario.eve_uncertainty * e.estimate.norm();
    }
    Ok(p)
}

/// Relaxation, then rounding with the configured method and, if allowed,
/// the remaining methods in their fixed order.
pub(super) fn solve_secure(cfg: &ExperimentConfig, problem: &SecureSdpProblem, seed: u64) -> Result<PrecoderSolution> {
    let relaxed = solve_relaxed(problem, &sdp_settings(cfg))?;
    let first = cfg.solver.rounding;
    let mut methods = vec![first];
    if cfg.solver.rounding_fallback {
        methods.extend(RoundingMethod::ALL.iter().copied().filter(|m| *m != first));
    }
    let mut last = None;
    for m in methods {
        match randomize_round(&relaxed, problem, cfg.solver.candidates, m, seed) {
            Ok(s) => return Ok(s),
            Err(e) => last = Some(e),
        }
    }
    Err(last.expect("at least one rounding method"))
}

/// Capacity and power of zero-forcing over a uniform layout.
#[derive(Debug, Clone, PartialEq)]
pub struct BaselineMetrics {
    pub capacity: f64,
    pub power: f64,
    pub precoder: CVec,
}

/// ZF precoding over a ULA of `l` nodes: `u = A⁺ξ` with the targets of the
/// scenario's QoS SNR; the capacity uses the ULA channel eigenvalues.
pub fn baseline_zf_ula(scn: &Scenario, l: usize, k: usize, aperture: f64, rotation: f64) -> Result<BaselineMetrics> {
    let n = scn.bs_array.len();
    if l > n {
        return Err(Error::InvalidParameter(format!("baseline needs L <= N, got L={l}, N={n}")));
    }
    let layout = NodeLayout::uniform(l, aperture, rotation)?;
    let channel = build_channel(scn, &layout, k)?;
    let lambda: Vec<f64> = channel.eigenvalues().iter().copied().collect();
    let xi = target_amplitudes(scn.qos_snr, scn.noise_power_bs, &lambda, k)?;
    let u = zero_forcing(&channel.a_a, &xi)?;
    Ok(BaselineMetrics { capacity: channel_capacity(&lambda, scn.qos_snr, k), power: norm_sqr(&u), precoder: u })
}

fn capacity_trial(cfg: &ExperimentConfig, p: &Point, t: &Trial) -> Result<Vec<f64>> {
    let k = cfg.layout.streams;
    let layout = build_layout(cfg, &p.scn, p.nodes, t.rotation)?;
    let channel = build_channel(&p.scn, &layout, k)?;
    let lambda: Vec<f64> = channel.eigenvalues().iter().copied().collect();
    let base = NodeLayout::uniform(p.nodes, cfg.layout.aperture_m, t.rotation)?;
    let base_lambda: Vec<f64> = build_channel(&p.scn, &base, k)?.eigenvalues().iter().copied().collect();
    Ok(vec![channel_capacity(&lambda, p.scn.qos_snr, k), channel_capacity(&base_lambda, p.scn.qos_snr, k)])
}

fn power_trial(cfg: &ExperimentConfig, p: &Point, t: &Trial) -> Result<Vec<f64>> {
    let k = cfg.layout.streams;
    let layout = build_layout(cfg, &p.scn, p.nodes, t.rotation)?;
    let channel = build_channel(&p.scn, &layout, k)?;
    let problem = secure_problem(cfg, &p.scn, &layout, &channel)?;
    let sol = solve_secure(cfg, &problem, t.seed)?;
    let base = baseline_zf_ula(&p.scn, p.nodes, k, cfg.layout.aperture_m, t.rotation)?;
    // One symbol rides on all streams, so the combiner is distortionless
    // towards the composite signature `Hu` rather than each stream.
    let signature = &channel.h * &sol.u;
    let w = lcmv_weights(&scenario_covariance(&p.scn)?, &CMat::from_columns(&[signature]))?.w;
    let plan = TransmissionPlan {
        sub_symbols: cfg.simulation.sub_symbols,
        constellation: cfg.simulation.constellation,
        seed: t.seed.wrapping_add(p.index as u64),
        ..TransmissionPlan::default()
    };
    let link = simulate_block(&p.scn, &channel, &sol.u, &w, &plan)?;
    Ok(vec![
        sol.rounded_power,
        sol.relaxation_power,
        base.power,
        link.symbol_errors as f64 / plan.sub_symbols as f64,
        link.empirical_sjnr,
    ])
}

fn baseline_trial(cfg: &ExperimentConfig, p: &Point, t: &Trial) -> Result<Vec<f64>> {
    let b = baseline_zf_ula(&p.scn, p.nodes, cfg.layout.streams, cfg.layout.aperture_m, t.rotation)?;
    Ok(vec![b.capacity, b.power])
}

/// Desired steering vectors at the BS scaled so each carries received SNR
/// `γ` per element: `ã_k = √(Nγσ²)·a_{G,k}` with `‖a_{G,k}‖ = 1`.
fn desired_steering(scn: &Scenario, channel: &VirtualChannel) -> Vec<CVec> {
    let n = scn.bs_array.len() as f64;
    let amp = (n * scn.qos_snr * scn.noise_power_bs).sqrt();
    channel.a_g.column_iter().map(|c| c.into_owned() * C64::new(amp, 0.0)).collect()
}

/// Covariance the beamformer is designed on: exact, or estimated from
/// jamming-plus-noise snapshots.
fn design_covariance(cfg: &ExperimentConfig, scn: &Scenario, exact: &CovarianceModel, seed: u64) -> Result<CovarianceModel> {
    let x = cfg.receiver.snapshots;
    if x == 0 {
        return Ok(exact.clone());
    }
    let (steer, powers) = scenario_jammers(scn)?;
    let n = scn.bs_array.len();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut cg = || {
        let (a, b): (f64, f64) = (rng.sample(rand_distr::StandardNormal), rng.sample(rand_distr::StandardNormal));
        C64::new(a, b) * std::f64::consts::FRAC_1_SQRT_2
    };
    let snaps: Vec<CVec> = (0..x)
        .map(|_| {
            let mut y = CVec::from_fn(n, |_, _| cg() * scn.noise_power_bs.sqrt());
            for (a, p) in steer.iter().zip(&powers) {
                y += a * (cg() * p.sqrt());
            }
            y
        })
        .collect();
    sample_covariance(&snaps, cfg.receiver.diagonal_loading)
}

fn robust_trial(cfg: &ExperimentConfig, p: &Point, t: &Trial) -> Result<Vec<f64>> {
    let k = cfg.layout.streams;
    let layout = build_layout(cfg, &p.scn, p.nodes, t.rotation)?;
    let channel = build_channel(&p.scn, &layout, k)?;
    let a = desired_steering(&p.scn, &channel);
    let eps: Vec<f64> = a.iter().map(|v| p.steering_uncertainty * v.norm()).collect();
    let exact = scenario_covariance(&p.scn)?;
    let design = design_covariance(cfg, &p.scn, &exact, t.seed.wrapping_add(p.index as u64))?;
    let settings = RobustSettings { tolerance: cfg.receiver.robust_tolerance, sdp: sdp_settings(cfg) };
    let robust = robust_weights(&design, &a, &eps, &settings)?;
    let lcmv = lcmv_weights(&design, &CMat::from_columns(&a))?;
    let rinv = hpd_inverse(&exact.r).ok_or(Error::Degenerate("covariance is not positive definite"))?;
    let bound = a.iter().map(|v| v.dotc(&(&rinv * v)).re).fold(f64::INFINITY, f64::min);
    Ok(vec![
        worst_case_sjnr(&robust.w, &a, &eps, &exact)?,
        worst_case_sjnr(&lcmv.w, &a, &eps, &exact)?,
        bound,
    ])
}

fn metrics(kind: ExperimentKind) -> Vec<Metric> {
    match kind {
        ExperimentKind::Capacity => vec![
            Metric::new("capacity_bits", Unit::Plain),
            Metric::new("baseline_capacity_bits", Unit::Plain),
        ],
        ExperimentKind::Power => vec![
            Metric::new("power_dbm", Unit::Dbm),
            Metric::new("relaxation_power_dbm", Unit::Dbm),
            Metric::new("baseline_power_dbm", Unit::Dbm),
            Metric::new("symbol_error_rate", Unit::Plain),
            Metric::new("empirical_sjnr_db", Unit::Db),
        ],
        ExperimentKind::BaselineZfUla => {
            vec![Metric::new("capacity_bits", Unit::Plain), Metric::new("power_dbm", Unit::Dbm)]
        }
        ExperimentKind::RobustSjnr => vec![
            Metric::new("robust_sjnr_db", Unit::Db),
            Metric::new("lcmv_sjnr_db", Unit::Db),
            Metric::new("upper_bound_db", Unit::Db),
        ],
        ExperimentKind::Pattern => {
            vec![Metric::new("transmit_gain_db", Unit::Plain), Metric::new("receive_gain_db", Unit::Plain)]
        }
        ExperimentKind::PlanarPattern => vec![Metric::new("transmit_gain_db", Unit::Plain)],
    }
}

type TrialFn = fn(&ExperimentConfig, &Point, &Trial) -> Result<Vec<f64>>;

/// Sweep-by-trial drivers: every (point, trial) pair runs in the pool and
/// results are assembled in sweep order.
pub(super) fn run_sweep(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let f: TrialFn = match cfg.kind {
        ExperimentKind::Capacity => capacity_trial,
        ExperimentKind::Power => power_trial,
        ExperimentKind::BaselineZfUla => baseline_trial,
        ExperimentKind::RobustSjnr => robust_trial,
        ExperimentKind::Pattern | ExperimentKind::PlanarPattern => unreachable!("pattern kinds are single-shot"),
    };
    let base = cfg.scenario()?;
    let values = cfg.sweep_values();
    let trials: Vec<Trial> = (0..cfg.trials).map(|i| trial(cfg, i)).collect();
    let points: Vec<Point> = values.iter().enumerate().map(|(i, &v)| sweep_point(cfg, &base, i, v)).collect();
    let jobs: Vec<(usize, usize)> =
        (0..points.len()).flat_map(|p| (0..trials.len()).map(move |t| (p, t))).collect();
    let results: Vec<Result<Vec<f64>>> =
        jobs.par_iter().map(|&(p, t)| f(cfg, &points[p], &trials[t])).collect();

    let metrics = metrics(cfg.kind);
    let axis = cfg.axis();
    let mut plot = Table {
        name: format!("{}_trials", cfg.kind.name()),
        columns: [axis.column(), "trial", "rotation_deg"].iter().map(|s| s.to_string()).collect(),
        rows: Vec::with_capacity(jobs.len()),
    };
    plot.columns.extend(metrics.iter().map(|m| m.name.to_string()));
    plot.columns.extend(["status".to_string(), "detail".to_string()]);

    let mut rows = Vec::with_capacity(points.len());
    for (pi, chunk) in results.chunks(trials.len()).enumerate() {
        let mut ok: Vec<&Vec<f64>> = Vec::new();
        let mut failures = [0usize; 2];
        for (t, r) in trials.iter().zip(chunk) {
            let mut cells = vec![fmt_num(values[pi]), t.index.to_string(), fmt_num(t.rotation.to_degrees())];
            match r {
                Ok(v) => {
                    ok.push(v);
                    cells.extend(metrics.iter().zip(v).map(|(m, x)| fmt_num(m.display(*x))));
                    cells.extend(["ok".to_string(), String::new()]);
                }
                Err(e) => {
                    let s = Status::of(e);
                    failures[(s == Status::SolverFail) as usize] += 1;
                    cells.extend(metrics.iter().map(|_| "NaN".to_string()));
                    cells.extend([s.name().to_string(), e.to_string()]);
                }
            }
            plot.rows.push(cells);
        }
        let stats = (0..metrics.len())
            .map(|m| Stats::of(&ok.iter().map(|v| v[m]).collect::<Vec<_>>()))
            .collect();
        let status = match failures {
            [0, 0] => Status::Ok,
            [i, s] if i >= s => Status::Infeasible,
            _ => Status::SolverFail,
        };
        rows.push(ReportRow { sweep_value: values[pi], stats, trials_ok: ok.len(), status });
    }
    Ok(RunOutput { metrics, rows, plot, summary: BTreeMap::new(), warnings: Vec::new() })
}

fn failed_rows(values: &[f64], n_metrics: usize, status: Status) -> Vec<ReportRow> {
    values
        .iter()
        .map(|&v| ReportRow {
            sweep_value: v,
            stats: vec![Stats { mean: f64::NAN, std: f64::NAN }; n_metrics],
            trials_ok: 0,
            status,
        })
        .collect()
}

fn single_rows(values: &[f64], columns: &[Vec<f64>]) -> Vec<ReportRow> {
    values
        .iter()
        .enumerate()
        .map(|(i, &v)| ReportRow {
            sweep_value: v,
            stats: columns.iter().map(|c| Stats { mean: c[i], std: 0.0 }).collect(),
            trials_ok: 1,
            status: Status::Ok,
        })
        .collect()
}

fn marker_table(name: &str, markers: &[(String, f64, f64)]) -> Table {
    Table {
        name: name.to_string(),
        columns: vec!["marker".into(), "angle_deg".into(), "gain_db".into()],
        rows: markers.iter().map(|(m, a, g)| vec![m.clone(), fmt_num(*a), fmt_num(*g)]).collect(),
    }
}

/// Wraps an angle into `(-π, π]`.
fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI { w - 2.0 * PI } else { w }
}

struct PatternResult {
    tx: Vec<f64>,
    rx: Vec<f64>,
    summary: BTreeMap<String, f64>,
    markers: Vec<(String, f64, f64)>,
}

fn pattern_link(cfg: &ExperimentConfig, grid_deg: &[f64]) -> Result<PatternResult> {
    let scn = cfg.scenario()?;
    let t = trial(cfg, 0);
    let layout = build_layout(cfg, &scn, cfg.layout.nodes, t.rotation)?;
    let channel = build_channel(&scn, &layout, cfg.layout.streams)?;
    let problem = secure_problem(cfg, &scn, &layout, &channel)?;
    let sol = solve_secure(cfg, &problem, t.seed)?;
    let cov = scenario_covariance(&scn)?;
    let lcmv = lcmv_weights(&cov, &channel.a_g)?;
    let (f, c) = (scn.carrier_frequency, scn.wave_speed);

    // Marker angles are appended to the grid so they share its normalization.
    let bs_az = scn.azimuth();
    let eve_az: Vec<f64> = scn.eves.iter().map(|e| e.position.y.atan2(e.position.x)).collect();
    let mut tx_grid: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let g = tx_grid.len();
    tx_grid.push(bs_az);
    tx_grid.extend(&eve_az);
    let tx_all = transmit_pattern(&sol.u, &layout, f, c, &tx_grid, scn.range(), scn.elevation())?;

    let jam_az = scn
        .jammers
        .iter()
        .map(|j| jammer_arrival_angle(&scn, &scn.eves[j.eve]))
        .collect::<Result<Vec<_>>>()?;
    let mut rx_grid: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    rx_grid.extend(&jam_az);
    let desired = lcmv.w.dotc(&channel.a_g.column(0).into_owned()).norm_sqr();
    let rx_all = receive_pattern(&lcmv.w, scn.bs_array, scn.bs_spacing, f, c, &rx_grid, Some(desired))?;

    // A linear array radiates symmetrically about its axis, so the peak is
    // sought on the BS side of that axis.
    let side = (bs_az - layout.rotation).sin().signum();
    let peak = (0..g)
        .filter(|&i| (tx_grid[i] - layout.rotation).sin() * side >= 0.0)
        .max_by(|&a, &b| tx_all[a].total_cmp(&tx_all[b]).then(b.cmp(&a)))
        .ok_or_else(|| Error::InvalidParameter("azimuth grid misses the BS side of the array".into()))?;

    let mut summary = BTreeMap::new();
    let mut markers = Vec::new();
    summary.insert("bs_azimuth_deg".into(), bs_az.to_degrees());
    summary.insert("peak_azimuth_deg".into(), wrap(tx_grid[peak]).to_degrees());
    summary.insert("peak_offset_deg".into(), wrap(tx_grid[peak] - bs_az).to_degrees().abs());
    summary.insert("bs_transmit_gain_db".into(), tx_all[g]);
    markers.push(("bs".to_string(), bs_az.to_degrees(), tx_all[g]));
    for (q, az) in eve_az.iter().enumerate() {
        summary.insert(format!("eve{q}_azimuth_deg"), az.to_degrees());
        summary.insert(format!("eve{q}_transmit_gain_db"), tx_all[g + 1 + q]);
        markers.push((format!("eve{q}"), az.to_degrees(), tx_all[g + 1 + q]));
        let e = &problem.eves[q];
        summary.insert(
            format!("eve{q}_worst_case_snr_db"),
            linear_to_db(worst_case_eve_snr(&sol.u, &e.estimate, e.radius, e.noise_power)),
        );
    }
    // Distortionless response on the first stream; the receive pattern is
    // normalized by the same quantity.
    summary.insert("desired_receive_gain_db".into(), linear_to_db(desired));
    markers.push(("desired".to_string(), f64::NAN, linear_to_db(desired)));
    for (q, az) in jam_az.iter().enumerate() {
        summary.insert(format!("jammer{q}_arrival_deg"), az.to_degrees());
        summary.insert(format!("jammer{q}_receive_gain_db"), rx_all[grid_deg.len() + q]);
        markers.push((format!("jammer{q}"), az.to_degrees(), rx_all[grid_deg.len() + q]));
    }
    summary.insert("power_dbm".into(), crate::units::watts_to_dbm(sol.rounded_power));
    summary.insert("relaxation_power_dbm".into(), crate::units::watts_to_dbm(sol.relaxation_power));
    Ok(PatternResult { tx: tx_all[..g].to_vec(), rx: rx_all[..grid_deg.len()].to_vec(), summary, markers })
}

/// Transmit pattern over the azimuth sweep plus LCMV receive pattern over
/// arrival angles equal to the same values.
pub(super) fn run_pattern(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let metrics = metrics(cfg.kind);
    let values = cfg.sweep_values();
    match pattern_link(cfg, values) {
        Ok(r) => Ok(RunOutput {
            rows: single_rows(values, &[r.tx, r.rx]),
            metrics,
            plot: marker_table("pattern_markers", &r.markers),
            summary: r.summary,
            warnings: Vec::new(),
        }),
        Err(e) if is_trial_error(&e) => Ok(RunOutput {
            rows: failed_rows(values, metrics.len(), Status::of(&e)),
            metrics,
            plot: marker_table("pattern_markers", &[]),
            summary: BTreeMap::new(),
            warnings: vec![e.to_string()],
        }),
        Err(e) => Err(e),
    }
}

/// Configuration and I/O errors abort a run; everything else is a recorded
/// per-point failure.
fn is_trial_error(e: &Error) -> bool {
    !matches!(e, Error::Config(_) | Error::Io(_) | Error::Csv(_) | Error::Json(_))
}

struct PlanarResult {
    cut: Vec<f64>,
    grid: Table,
    summary: BTreeMap<String, f64>,
}

fn planar_link(cfg: &ExperimentConfig, grid_deg: &[f64]) -> Result<PlanarResult> {
    let scn = cfg.scenario()?;
    let pc = cfg.layout.planar.as_ref().expect("validated planar table");
    let t = trial(cfg, 0);
    let (dx, dy) = crate::deployment::grouped_planar_layout(pc.nodes_x, pc.nodes_y, pc.streams_x, pc.streams_y)?;
    let (dx, dy) = match cfg.layout.placement {
        Placement::Spread => {
            let spread = |d: &[f64], k: usize| {
                let g = d.len() / k;
                let s = if g > 1 { cfg.layout.group_width / (g - 1) as f64 } else { 0.0 };
                spread_groups(d, k, s)
            };
            (spread(&dx, pc.streams_x)?, spread(&dy, pc.streams_y)?)
        }
        _ => (dx, dy),
    };
    let layout = PlanarLayout {
        delta_x: dx,
        delta_y: dy,
        aperture_x: pc.aperture_x_m,
        aperture_y: pc.aperture_y_m,
        rotation: t.rotation,
    };
    let nodes = layout.positions();
    let (f, c) = (scn.carrier_frequency, scn.wave_speed);
    let k = pc.streams_x * pc.streams_y;
    let channel = from_positions(&nodes, &bs_positions(&scn)?, scn.range(), f, c, k)?;
    let lambda: Vec<f64> = channel.eigenvalues().iter().copied().collect();
    let xi = target_amplitudes(scn.qos_snr, scn.noise_power_bs, &lambda, k)?;
    let kw = 2.0 * PI * f / c;
    let eves = scn
        .eves
        .iter()
        .map(|e| {
            let r = e.position.norm();
            let rho = attenuation_factor(r, f, c)?;
            let est = CVec::from_iterator(
                nodes.len(),
                nodes.iter().map(|p| C64::from_polar(rho, kw * (distance(p, &e.position) - r))),
            );
            Ok(EveConstraint {
                radius: cfg.scenario.eve_uncertainty * est.norm(),
                estimate: est,
                tolerance: scn.eve_snr_tolerance,
                noise_power: scn.noise_power_eve,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let cap = if scn.max_node_power > 0.0 { scn.max_node_power } else { f64::INFINITY };
    let problem = SecureSdpProblem::new(channel.a_a.clone(), xi, eves, cap)?;
    let sol = solve_secure(cfg, &problem, t.seed)?;

    let p = &cfg.pattern;
    let n_polar = ((p.polar_stop_deg - p.polar_start_deg) / p.polar_step_deg + 1e-9).floor() as usize + 1;
    let mut polar: Vec<f64> = (0..n_polar).map(|i| (p.polar_start_deg + p.polar_step_deg * i as f64).to_radians()).collect();
    let polar_marker = |pt: &crate::geometry::Point3| (pt.z / pt.norm()).clamp(-1.0, 1.0).acos();
    let marker_pts: Vec<(String, crate::geometry::Point3)> = std::iter::once(("bs".to_string(), scn.bs_center))
        .chain(scn.eves.iter().enumerate().map(|(q, e)| (format!("eve{q}"), e.position)))
        .collect();
    let mut az: Vec<f64> = grid_deg.iter().map(|d| d.to_radians()).collect();
    let (na, np) = (az.len(), polar.len());
    for (_, pt) in &marker_pts {
        az.push(pt.y.atan2(pt.x));
        polar.push(polar_marker(pt));
    }
    let gains = transmit_pattern_2d(&sol.u, &nodes, f, c, &az, &polar, scn.range())?;

    let mut grid = Table {
        name: "planar-pattern_grid".into(),
        columns: vec!["azimuth_deg".into(), "polar_deg".into(), "gain_db".into()],
        rows: Vec::with_capacity(na * np),
    };
    let mut best = (f64::NEG_INFINITY, 0, 0);
    for (j, row) in gains.iter().take(np).enumerate() {
        for (i, &g) in row.iter().take(na).enumerate() {
            grid.rows.push(vec![fmt_num(grid_deg[i]), fmt_num(polar[j].to_degrees()), fmt_num(g)]);
            if g > best.0 {
                best = (g, i, j);
            }
        }
    }
    let mut summary = BTreeMap::new();
    summary.insert("peak_azimuth_deg".into(), grid_deg[best.1]);
    summary.insert("peak_polar_deg".into(), polar[best.2].to_degrees());
    for (m, (name, _)) in marker_pts.iter().enumerate() {
        summary.insert(format!("{name}_azimuth_deg"), az[na + m].to_degrees());
        summary.insert(format!("{name}_polar_deg"), polar[np + m].to_degrees());
        summary.insert(format!("{name}_transmit_gain_db"), gains[np + m][na + m]);
    }
    summary.insert("power_dbm".into(), crate::units::watts_to_dbm(sol.rounded_power));
    // Azimuth cut through the BS polar angle.
    let cut = gains[np][..na].to_vec();
    Ok(PlanarResult { cut, grid, summary })
}

pub(super) fn run_planar(cfg: &ExperimentConfig) -> Result<RunOutput> {
    let metrics = metrics(cfg.kind);
    let values = cfg.sweep_values();
    match planar_link(cfg, values) {
        Ok(r) => Ok(RunOutput {
            rows: single_rows(values, &[r.cut]),
            metrics,
            plot: r.grid,
            summary: r.summary,
            warnings: Vec::new(),
        }),
        Err(e) if is_trial_error(&e) => Ok(RunOutput {
            rows: failed_rows(values, metrics.len(), Status::of(&e)),
            metrics,
            plot: Table { name: "planar-pattern_grid".into(), ..Table::default() },
            summary: BTreeMap::new(),
            warnings: vec![e.to_string()],
        }),
        Err(e) => Err(e),
    }
}

//! Sub-symbol link simulation, capacity and beampatterns.

use nalgebra::Vector3;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{departure_channel, jammer_steering, VirtualChannel};
use crate::error::{Error, Result};
use crate::geometry::{jammer_arrival_angle, BsArray, NodeLayout, Point3, Scenario};
use crate::linalg::norm_sqr;
use crate::receiving::{synthetic_covariance, CovarianceModel};
use crate::{CVec, C64};

/// `Σ_k log₂(1 + γλ_k/K)` in bits/s/Hz.
pub fn channel_capacity(lambda: &[f64], snr: f64, k: usize) -> f64 {
    lambda.iter().take(k).map(|&l| (1.0 + snr * l.max(0.0) / k as f64).log2()).sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Constellation {
    #[default]
    Qpsk,
    Qam16,
}

impl Constellation {
    pub fn order(&self) -> usize {
        match self {
            Constellation::Qpsk => 4,
            Constellation::Qam16 => 16,
        }
    }

    fn levels(&self) -> (&'static [f64], f64) {
        match self {
            Constellation::Qpsk => (&[-1.0, 1.0], std::f64::consts::FRAC_1_SQRT_2),
            Constellation::Qam16 => (&[-3.0, -1.0, 1.0, 3.0], 1.0 / 10f64.sqrt()),
        }
    }

    /// Unit-average-power point of symbol `index`.
    pub fn point(&self, index: usize) -> C64 {
        let (lv, s) = self.levels();
        let m = lv.len();
        C64::new(lv[index % m], lv[(index / m) % m]) * s
    }

    /// Index of the nearest point.
    pub fn detect(&self, z: C64) -> usize {
        let (lv, s) = self.levels();
        let nearest = |x: f64| {
            lv.iter()
                .enumerate()
                .min_by(|a, b| (a.1 * s - x).abs().total_cmp(&(b.1 * s - x).abs()))
                .map(|(i, _)| i)
                .unwrap_or(0)
        };
        nearest(z.re) + lv.len() * nearest(z.im)
    }
}

/// Timing and modulation of one sub-symbol block.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransmissionPlan {
    pub sub_symbols: usize,
    pub symbol_period: f64,
    pub sub_symbol_period: f64,
    pub node_interval: f64,
    pub constellation: Constellation,
    pub seed: u64,
}

impl Default for TransmissionPlan {
    fn default() -> Self {
        TransmissionPlan {
            sub_symbols: 1024,
            symbol_period: 1e-6,
            sub_symbol_period: 1e-7,
            node_interval: 1e-1,
            constellation: Constellation::Qpsk,
            seed: 0,
        }
    }
}

impl TransmissionPlan {
    pub fn validate(&self) -> Result<()> {
        if self.sub_symbols == 0 {
            return Err(Error::InvalidParameter("block needs at least one sub-symbol".into()));
        }
        if !(self.sub_symbol_period > 0.0 && self.sub_symbol_period < self.symbol_period) {
            return Err(Error::InvalidParameter("sub-symbol period must lie in (0, T)".into()));
        }
        if !(self.node_interval > 0.0) {
            return Err(Error::InvalidParameter("node interval must be positive".into()));
        }
        Ok(())
    }

    /// Non-fatal timing issues: the node regions assume `T′ ≪ Δ_T`.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.sub_symbol_period > self.node_interval / 100.0 {
            out.push(format!(
                "sub-symbol period {} s is not much shorter than the node interval {} s",
                self.sub_symbol_period, self.node_interval
            ));
        }
        out
    }
}

/// Result of one simulated block.
#[derive(Debug, Clone, PartialEq)]
pub struct LinkReport {
    pub transmitted: Vec<usize>,
    /// Gain-normalized combiner outputs; `None` when nothing arrives.
    pub recovered: Vec<Option<C64>>,
    /// `wᴴHu`.
    pub signal_gain: C64,
    /// Post-combining SJNR measured over the block.
    pub empirical_sjnr: f64,
    /// `|wᴴHu|² / wᴴR_y w`.
    pub predicted_sjnr: f64,
    pub symbol_errors: usize,
    pub capacity: f64,
}

/// Jammer steering vectors and powers at the BS for a linear array.
pub fn scenario_jammers(scn: &Scenario) -> Result<(Vec<CVec>, Vec<f64>)> {
    let n = scn.bs_array.len();
    let mut steer = Vec::with_capacity(scn.jammers.len());
    let mut powers = Vec::with_capacity(scn.jammers.len());
    for j in &scn.jammers {
        let eve = scn.eves.get(j.eve).ok_or(Error::IndexOutOfRange { index: j.eve, len: scn.eves.len() })?;
        let angle = jammer_arrival_angle(scn, eve)?;
        steer.push(jammer_steering(angle, n, scn.bs_spacing, scn.carrier_frequency, scn.wave_speed));
        powers.push(j.power);
    }
    Ok((steer, powers))
}

/// `Σ_q P_q a_q a_qᴴ + σ_G² I` for the scenario.
pub fn scenario_covariance(scn: &Scenario) -> Result<CovarianceModel> {
    let (steer, powers) = scenario_jammers(scn)?;
    synthetic_covariance(&steer, &powers, scn.noise_power_bs, scn.bs_array.len())
}

const BATCH: usize = 1024;

fn cgauss<R: Rng>(rng: &mut R) -> C64 {
    C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
        * std::f64::consts::FRAC_1_SQRT_2
}

/// Simulates one block of `M` sub-symbols.
///
/// Node `l` sends `u_l x̂_m` in its region; the BS filters each node's
/// observation with `w` and sums over the `L` regions, so the useful term is
/// `Σ_l wᴴ[H]_{:,l} u_l x̂_m = wᴴHu x̂_m`. Jamming (`x_J ~ CN(0, 1)`) and noise
/// are drawn once per sub-symbol and enter the combined output once.
pub fn simulate_block(
    scn: &Scenario,
    channel: &VirtualChannel,
    u: &CVec,
    w: &CVec,
    plan: &TransmissionPlan,
) -> Result<LinkReport> {
    plan.validate()?;
    let (n, l) = channel.h.shape();
    if u.len() != l || w.len() != n {
        return Err(Error::DimensionMismatch(format!(
            "u has {} entries for {l} nodes, w has {} for {n} elements",
            u.len(),
            w.len()
        )));
    }
    let (steer, powers) = scenario_jammers(scn)?;
    let jam_gain: Vec<C64> = steer.iter().zip(&powers).map(|(a, p)| w.dotc(a) * p.sqrt()).collect();
    let noise_std = (scn.noise_power_bs * norm_sqr(w)).sqrt();

    let per_node: Vec<C64> = (0..l).map(|i| w.dotc(&channel.h.column(i).into_owned()) * u[i]).collect();
    let gain: C64 = per_node.iter().sum();
    let cov = synthetic_covariance(&steer, &powers, scn.noise_power_bs, n)?;
    let interference = w.dotc(&(&cov.r * w)).re;
    let predicted = if interference > 0.0 { gain.norm_sqr() / interference } else { f64::INFINITY };

    let m = plan.sub_symbols;
    let c = plan.constellation;
    let batches: Vec<(Vec<usize>, Vec<C64>)> = (0..m.div_ceil(BATCH))
        .into_par_iter()
        .map(|b| {
            let mut rng = ChaCha8Rng::seed_from_u64(plan.seed);
            rng.set_stream(b as u64);
            let count = BATCH.min(m - b * BATCH);
            let mut sent = Vec::with_capacity(count);
            let mut out = Vec::with_capacity(count);
            for _ in 0..count {
                let idx = rng.random_range(0..c.order());
                let x = c.point(idx);
                let mut y: C64 = per_node.iter().map(|g| g * x).sum();
                for jg in &jam_gain {
                    y += jg * cgauss(&mut rng);
                }
                y += cgauss(&mut rng) * noise_std;
                sent.push(idx);
                out.push(y);
            }
            (sent, out)
        })
        .collect();

    let mut transmitted = Vec::with_capacity(m);
    let mut raw = Vec::with_capacity(m);
    for (s, o) in batches {
        transmitted.extend(s);
        raw.extend(o);
    }
    let lambda: Vec<f64> = channel.eigenvalues().iter().copied().collect();
    let capacity = channel_capacity(&lambda, scn.qos_snr, channel.rank);

    if gain.norm() == 0.0 {
        return Ok(LinkReport {
            recovered: vec![None; m],
            symbol_errors: m,
            transmitted,
            signal_gain: gain,
            empirical_sjnr: 0.0,
            predicted_sjnr: 0.0,
            capacity,
        });
    }
    let mut err_power = 0.0;
    let mut errors = 0;
    let mut recovered = Vec::with_capacity(m);
    for (&idx, &y) in transmitted.iter().zip(&raw) {
        let x = c.point(idx);
        err_power += (y - gain * x).norm_sqr();
        let est = y / gain;
        if c.detect(est) != idx {
            errors += 1;
        }
        recovered.push(Some(est));
    }
    let sig_power = gain.norm_sqr() * transmitted.iter().map(|&i| c.point(i).norm_sqr()).sum::<f64>();
    let empirical = if err_power > 0.0 { sig_power / err_power } else { f64::INFINITY };
    Ok(LinkReport {
        transmitted,
        recovered,
        signal_gain: gain,
        empirical_sjnr: empirical,
        predicted_sjnr: predicted,
        symbol_errors: errors,
        capacity,
    })
}

fn normalize_db(gains: Vec<f64>, reference: f64) -> Vec<f64> {
    gains.into_iter().map(|g| 10.0 * (g / reference).log10()).collect()
}

fn check_pattern_input(w: &CVec, grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(Error::InvalidParameter("empty azimuth grid".into()));
    }
    if norm_sqr(w) == 0.0 {
        return Err(Error::InvalidParameter("zero weight vector".into()));
    }
    Ok(())
}

/// Transmit gain `|h(ϑ)ᴴu|²` over azimuth at a fixed range and polar angle,
/// with `h` the departure channel of the layout; in dB with the peak at 0.
pub fn transmit_pattern(
    u: &CVec,
    layout: &NodeLayout,
    carrier_frequency: f64,
    wave_speed: f64,
    azimuth_grid: &[f64],
    reference_range: f64,
    polar_angle: f64,
) -> Result<Vec<f64>> {
    check_pattern_input(u, azimuth_grid)?;
    if u.len() != layout.len() {
        return Err(Error::DimensionMismatch("precoder length".into()));
    }
    let (st, ct) = polar_angle.sin_cos();
    let gains = azimuth_grid
        .iter()
        .map(|&az| {
            let target = Point3::new(st * az.cos(), st * az.sin(), ct) * reference_range;
            let h = departure_channel(layout, &target, carrier_frequency, wave_speed)?;
            Ok(h.dotc(u).norm_sqr())
        })
        .collect::<Result<Vec<_>>>()?;
    let peak = gains.iter().copied().fold(0.0, f64::max);
    Ok(normalize_db(gains, peak))
}

/// Transmit gain of arbitrarily placed nodes over an (azimuth, polar angle)
/// grid using exact path differences `‖p_l − t‖ − ‖t‖`; in dB with the peak at 0.
pub fn transmit_pattern_2d(
    u: &CVec,
    nodes: &[Point3],
    carrier_frequency: f64,
    wave_speed: f64,
    azimuths: &[f64],
    polar_angles: &[f64],
    reference_range: f64,
) -> Result<Vec<Vec<f64>>> {
    check_pattern_input(u, azimuths)?;
    if u.len() != nodes.len() {
        return Err(Error::DimensionMismatch("precoder length".into()));
    }
    let kw = 2.0 * std::f64::consts::PI * carrier_frequency / wave_speed;
    let gains: Vec<Vec<f64>> = polar_angles
        .iter()
        .map(|&t| {
            azimuths
                .iter()
                .map(|&az| {
                    let target: Vector3<f64> =
                        Point3::new(t.sin() * az.cos(), t.sin() * az.sin(), t.cos()) * reference_range;
                    nodes
                        .iter()
                        .zip(u.iter())
                        .map(|(p, ui)| C64::from_polar(1.0, -kw * ((p - target).norm() - reference_range)) * ui)
                        .sum::<C64>()
                        .norm_sqr()
                })
                .collect()
        })
        .collect();
    let peak = gains.iter().flatten().copied().fold(0.0, f64::max);
    Ok(gains.into_iter().map(|row| normalize_db(row, peak)).collect())
}

/// Receive gain `|wᴴa(ϑ)|²` with the jammer steering model, in dB relative to
/// `reference` (the constrained-direction response), or to the grid peak
/// when `reference` is `None`.
pub fn receive_pattern(
    w: &CVec,
    bs: BsArray,
    spacing: f64,
    carrier_frequency: f64,
    wave_speed: f64,
    azimuth_grid: &[f64],
    reference: Option<f64>,
) -> Result<Vec<f64>> {
    check_pattern_input(w, azimuth_grid)?;
    let n = bs.len();
    if w.len() != n {
        return Err(Error::DimensionMismatch("weight length".into()));
    }
    let gains: Vec<f64> = azimuth_grid
        .iter()
        .map(|&t| w.dotc(&jammer_steering(t, n, spacing, carrier_frequency, wave_speed)).norm_sqr())
        .collect();
    let norm = match reference {
        Some(r) if r > 0.0 => r,
        Some(_) => return Err(Error::InvalidParameter("reference gain must be positive".into())),
        None => gains.iter().copied().fold(0.0, f64::max),
    };
    Ok(normalize_db(gains, norm))
}

//! Secure transmit precoding: minimum-power precoder meeting per-stream QoS at
//! the BS, a worst-case leakage limit at every eavesdropper and a per-node
//! power cap.
//!
//! The rank-one problem is relaxed to an SDP in `U = uuᴴ`. Each eavesdropper
//! constraint becomes the LMI
//!
//! ```text
//! S_q(U, κ_q) = [κ_q I_L, 0; 0, σ_E² − κ_q ε_q²] − Ξ_qᴴ U Ξ_q / Γ_E ⪰ 0,   Ξ_q = [I_L, h̃_q]
//! ```
//!
//! and a rank-one precoder is recovered from `U*` by randomization.

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::channel::{eve_estimate, PhaseModel, VirtualChannel};
use crate::error::{ConstraintFamily, Error, Result};
use crate::geometry::{NodeLayout, Scenario};
use crate::linalg::{hermitian_eigen, min_eigenvalue, norm_sqr, right_pseudo_inverse};
use crate::sdp::{CongruenceBlock, HermitianParam, MatrixBlock, SdpOutcome, SdpProblem, SdpSettings};
use crate::{CMat, CVec, C64};

/// Relative slack allowed on every constraint of a returned precoder.
pub const FEASIBILITY_SLACK: f64 = 1e-6;

/// `ξ_k = √(γσ_G² / (λ_k K²))`.
pub fn target_amplitudes(snr: f64, noise_power: f64, lambda: &[f64], k: usize) -> Result<Vec<f64>> {
    if lambda.len() != k {
        return Err(Error::DimensionMismatch(format!("{} eigenvalues for K = {k}", lambda.len())));
    }
    lambda
        .iter()
        .map(|&l| {
            if !(l > 0.0) {
                return Err(Error::InvalidParameter("zero eigenvalue in target amplitudes".into()));
            }
            Ok((snr * noise_power / (l * (k * k) as f64)).sqrt())
        })
        .collect()
}

/// One eavesdropper's leakage constraint.
#[derive(Debug, Clone, PartialEq)]
pub struct EveConstraint {
    pub estimate: CVec,
    pub radius: f64,
    pub tolerance: f64,
    pub noise_power: f64,
}

/// Data of the relaxed power-minimization problem.
#[derive(Debug, Clone, PartialEq)]
pub struct SecureSdpProblem {
    /// Transmit response rows `a_k` (`K×L`); `Π_k = a_kᴴ a_k`.
    pub response: CMat,
    pub xi: Vec<f64>,
    pub eves: Vec<EveConstraint>,
    /// Per-node cap in watts; `f64::INFINITY` disables it.
    pub max_node_power: f64,
}

impl SecureSdpProblem {
    pub fn new(response: CMat, xi: Vec<f64>, eves: Vec<EveConstraint>, max_node_power: f64) -> Result<Self> {
        let (k, l) = response.shape();
        if xi.len() != k {
            return Err(Error::DimensionMismatch(format!("{} amplitudes for {k} streams", xi.len())));
        }
        if xi.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
            return Err(Error::InvalidParameter("target amplitudes must be positive".into()));
        }
        for e in &eves {
            if e.estimate.len() != l {
                return Err(Error::DimensionMismatch("eavesdropper channel length".into()));
            }
            if !(e.tolerance > 0.0) || e.radius < 0.0 || !(e.noise_power > 0.0) {
                return Err(Error::InvalidParameter("eavesdropper constraint parameters".into()));
            }
        }
        if !(max_node_power > 0.0) {
            return Err(Error::InvalidParameter("max_node_power must be positive".into()));
        }
        Ok(SecureSdpProblem { response, xi, eves, max_node_power })
    }

    /// Problem for a scenario and channel: targets from the scenario's QoS SNR
    /// and the channel eigenvalues, one constraint per eavesdropper.
    pub fn from_channel(
        scn: &Scenario,
        layout: &NodeLayout,
        channel: &VirtualChannel,
        model: PhaseModel,
    ) -> Result<Self> {
        let lambda: Vec<f64> = channel.eigenvalues().iter().copied().collect();
        let xi = target_amplitudes(scn.qos_snr, scn.noise_power_bs, &lambda, channel.rank)?;
        let eves = scn
            .eves
            .iter()
            .map(|e| {
                Ok(EveConstraint {
                    estimate: eve_estimate(scn, layout, e, model)?,
                    radius: e.uncertainty_radius,
                    tolerance: scn.eve_snr_tolerance,
                    noise_power: scn.noise_power_eve,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let cap = if scn.max_node_power > 0.0 { scn.max_node_power } else { f64::INFINITY };
        SecureSdpProblem::new(channel.a_a.clone(), xi, eves, cap)
    }

    pub fn nodes(&self) -> usize {
        self.response.ncols()
    }

    pub fn streams(&self) -> usize {
        self.response.nrows()
    }

    /// `Π_k = a_kᴴ a_k`.
    pub fn qos_matrix(&self, k: usize) -> CMat {
        let row = self.response.row(k);
        row.adjoint() * row
    }
}

/// `S_q(U, κ)` of one eavesdropper.
pub fn assemble_lmi(u: &CMat, kappa: f64, eve: &EveConstraint) -> CMat {
    let l = u.nrows();
    let mut xi = CMat::zeros(l, l + 1);
    for i in 0..l {
        xi[(i, i)] = C64::new(1.0, 0.0);
        xi[(i, l)] = eve.estimate[i];
    }
    let mut s = -(xi.adjoint() * u * &xi) / C64::new(eve.tolerance, 0.0);
    for i in 0..l {
        s[(i, i)] += kappa;
    }
    s[(l, l)] += eve.noise_power - kappa * eve.radius * eve.radius;
    s
}

/// Largest `λ_min(T S_q(uuᴴ, κ) T)` over `κ ≥ 0` and the maximizing `κ`.
///
/// `T = diag(I/√s, 1/σ_E)` is a fixed congruence that brings both blocks to
/// unit scale, so the sign matches `S_q ⪰ 0` while a large `κ` no longer
/// buries `σ_E²` in rounding. `λ_min` of an affine matrix function is concave,
/// so a golden-section search over a bracket that contains every useful `κ`
/// finds the maximum.
pub fn best_lmi_margin(u: &CVec, eve: &EveConstraint) -> (f64, f64) {
    let uu = u * u.adjoint();
    let scale = norm_sqr(u) * (1.0 + norm_sqr(&eve.estimate)) / eve.tolerance + eve.noise_power;
    let l = u.len();
    let t: Vec<f64> = (0..=l).map(|i| if i < l { scale.sqrt().recip() } else { eve.noise_power.sqrt().recip() }).collect();
    let f = |k: f64| {
        let s = assemble_lmi(&uu, k, eve);
        min_eigenvalue(&CMat::from_fn(l + 1, l + 1, |i, j| s[(i, j)] * (t[i] * t[j])))
    };
    let hi = if eve.radius > 0.0 { eve.noise_power / (eve.radius * eve.radius) } else { 1e3 * scale };
    let (mut a, mut b) = (0.0, hi.max(1e-300));
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if fc > fd {
            b = d;
            d = c;
            fd = fc;
            c = b - g * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + g * (b - a);
            fd = f(d);
        }
        if (b - a) <= 1e-14 * hi {
            break;
        }
    }
    let mut best = ((a + b) / 2.0, f((a + b) / 2.0));
    for k in [0.0, hi] {
        let v = f(k);
        if v > best.1 {
            best = (k, v);
        }
    }
    best
}

/// `(|h̃ᴴu| + ε‖u‖)² / σ²`, the largest SNR over the uncertainty ball.
pub fn worst_case_eve_snr(u: &CVec, estimate: &CVec, radius: f64, noise_power: f64) -> f64 {
    let inner = crate::linalg::dot_h(estimate, u).norm();
    (inner + radius * u.norm()).powi(2) / noise_power
}

/// Solution of the relaxation.
#[derive(Debug, Clone)]
pub struct RelaxedSolution {
    pub u_star: CMat,
    /// S-procedure multipliers; `None` for eavesdroppers without uncertainty,
    /// whose constraint is linear in `U`.
    pub kappa: Vec<Option<f64>>,
    pub relaxation_power: f64,
    pub relative_gap: f64,
    pub iterations: usize,
}

struct Scaling {
    p0: f64,
    /// Multiplier variable and `‖h̃_q‖` of each eavesdropper posed as an LMI.
    eve_vars: Vec<Option<(usize, f64)>>,
    row_family: Vec<ConstraintFamily>,
    block_family: Vec<Option<ConstraintFamily>>,
}

fn hermitian_row(param: &HermitianParam, m: &CMat, weight: f64) -> Vec<(usize, f64)> {
    (0..param.len())
        .filter_map(|idx| {
            let s: f64 = param.entries(idx).iter().map(|&(a, b, c)| (c * m[(b, a)]).re).sum();
            (s != 0.0).then_some((idx, weight * s))
        })
        .collect()
}

fn build_sdp(problem: &SecureSdpProblem) -> (SdpProblem, Scaling) {
    let l = problem.nodes();
    let kk = problem.streams();
    let nu = l * l;
    let param = HermitianParam::new(0, l);

    let p0 = (0..kk)
        .map(|k| problem.xi[k].powi(2) / problem.response.row(k).norm_squared())
        .fold(0.0, f64::max);

    // Without uncertainty the leakage limit is the linear constraint
    // h̃ᴴUh̃ ≤ Γσ². The LMI form would need κ → ∞ whenever it is active.
    let mut eve_vars = Vec::with_capacity(problem.eves.len());
    let mut next = nu;
    for e in &problem.eves {
        if e.radius > 0.0 {
            let n = e.estimate.norm();
            eve_vars.push(Some((next, if n > 0.0 { n } else { 1.0 })));
            next += 1;
        } else {
            eve_vars.push(None);
        }
    }

    let mut objective = vec![0.0; next];
    objective[..l].fill(1.0);
    let mut sdp = SdpProblem::new(next, objective);
    let mut row_family = Vec::new();

    for k in 0..kk {
        sdp.linear.push(-1.0, hermitian_row(&param, &problem.qos_matrix(k), p0 / problem.xi[k].powi(2)));
        row_family.push(ConstraintFamily::Qos);
    }
    if problem.max_node_power.is_finite() {
        for i in 0..l {
            sdp.linear.push(1.0, vec![(i, -p0 / problem.max_node_power)]);
            row_family.push(ConstraintFamily::NodePower);
        }
    }
    for (j, (e, var)) in problem.eves.iter().zip(&eve_vars).enumerate() {
        match var {
            Some((v, _)) => sdp.linear.push(0.0, vec![(*v, 1.0)]),
            None => {
                let hh = &e.estimate * e.estimate.adjoint();
                sdp.linear.push(1.0, hermitian_row(&param, &hh, -p0 / (e.tolerance * e.noise_power)))
            }
        };
        row_family.push(ConstraintFamily::Eavesdropper(j));
    }
    sdp.blocks.push(MatrixBlock::Congruence(CongruenceBlock {
        constant: CMat::zeros(l, l),
        param: param.clone(),
        scale: 1.0,
        frame: CMat::identity(l, l),
        extras: vec![],
    }));
    let mut block_family = vec![None];

    for (j, (e, var)) in problem.eves.iter().zip(&eve_vars).enumerate() {
        let Some((v, g)) = *var else { continue };
        let mut frame = CMat::zeros(l, l + 1);
        for i in 0..l {
            frame[(i, i)] = C64::new(g, 0.0);
            frame[(i, l)] = e.estimate[i];
        }
        let mut constant = CMat::zeros(l + 1, l + 1);
        constant[(l, l)] = C64::new(1.0, 0.0);
        let mut d = CMat::identity(l + 1, l + 1);
        d[(l, l)] = C64::new(-(e.radius / g).powi(2), 0.0);
        sdp.blocks.push(MatrixBlock::Congruence(CongruenceBlock {
            constant,
            param: param.clone(),
            scale: -p0 / (e.tolerance * e.noise_power),
            frame,
            extras: vec![(v, d)],
        }));
        block_family.push(Some(ConstraintFamily::Eavesdropper(j)));
    }
    (sdp, Scaling { p0, eve_vars, row_family, block_family })
}

/// The relaxation as solved internally: `U = p₀Û`, QoS rows divided by `ξ_k²`
/// and each LMI congruence-scaled by `diag(‖h̃_q‖ I, 1)` and divided by `σ_E²`.
/// Eavesdroppers with `ε_q = 0` appear as the scalar row `h̃ᴴUh̃ ≤ Γσ²`.
pub fn scaled_sdp(problem: &SecureSdpProblem) -> SdpProblem {
    build_sdp(problem).0
}

/// Solves the relaxation to relative duality gap `settings.tolerance`.
pub fn solve_relaxed(problem: &SecureSdpProblem, settings: &SdpSettings) -> Result<RelaxedSolution> {
    let l = problem.nodes();
    let (sdp, sc) = build_sdp(problem);
    match sdp.solve(settings)? {
        SdpOutcome::Optimal(sol) => {
            let param = HermitianParam::new(0, l);
            let u_star = crate::linalg::hermitian_part(&param.assemble(&sol.y)) * C64::new(sc.p0, 0.0);
            let kappa = problem
                .eves
                .iter()
                .zip(&sc.eve_vars)
                .map(|(e, var)| var.map(|(v, g)| (sol.y[v] * e.noise_power / (g * g)).max(0.0)))
                .collect();
            let relaxation_power = crate::linalg::real_trace(&u_star);
            Ok(RelaxedSolution {
                u_star,
                kappa,
                relaxation_power,
                relative_gap: sol.relative_gap,
                iterations: sol.iterations,
            })
        }
        SdpOutcome::Infeasible(cert) => {
            let mut weights: Vec<(ConstraintFamily, f64)> = Vec::new();
            let mut add = |f: ConstraintFamily, w: f64| match weights.iter_mut().find(|(g, _)| *g == f) {
                Some(entry) => entry.1 += w,
                None => weights.push((f, w)),
            };
            add(ConstraintFamily::Qos, 0.0);
            for (f, x) in sc.row_family.iter().zip(&cert.x_linear) {
                add(*f, *x);
            }
            for (f, x) in sc.block_family.iter().zip(&cert.x_blocks) {
                if let Some(f) = f {
                    add(*f, crate::linalg::real_trace(x));
                }
            }
            let total: f64 = weights.iter().map(|w| w.1.abs()).sum();
            let families = weights
                .into_iter()
                .filter(|(_, w)| *w > 1e-6 * total)
                .map(|(f, _)| f)
                .collect();
            Err(Error::Infeasible { families })
        }
    }
}

/// Candidate generator for the randomization step.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RoundingMethod {
    /// `u = BΣ^{1/2}ς` with `ς` uniform on the unit sphere.
    #[default]
    EigenSphere,
    /// `u_i = √U_ii e^{jς_i}` with independent uniform phases.
    PhaseOnly,
    /// `u = BΣ^{1/2}ς` with `ς` standard complex Gaussian.
    Gaussian,
}

impl RoundingMethod {
    pub const ALL: [RoundingMethod; 3] =
        [RoundingMethod::EigenSphere, RoundingMethod::PhaseOnly, RoundingMethod::Gaussian];

    pub fn name(&self) -> &'static str {
        match self {
            RoundingMethod::EigenSphere => "eigen-sphere",
            RoundingMethod::PhaseOnly => "phase-only",
            RoundingMethod::Gaussian => "gaussian",
        }
    }
}

impl std::str::FromStr for RoundingMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        RoundingMethod::ALL
            .into_iter()
            .find(|m| m.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown rounding method `{s}`")))
    }
}

/// Constraint slacks of a precoder; nonnegative means satisfied.
#[derive(Debug, Clone, PartialEq)]
pub struct Slacks {
    /// `(|a_k u| − ξ_k)/ξ_k`.
    pub qos: Vec<f64>,
    /// `(Γ_E − worst-case SNR)/Γ_E`.
    pub eve: Vec<f64>,
    /// `(P_max − |u_l|²)/P_max`.
    pub node_power: Vec<f64>,
}

impl Slacks {
    pub fn evaluate(problem: &SecureSdpProblem, u: &CVec) -> Self {
        let qos = (0..problem.streams())
            .map(|k| {
                let r: C64 = problem.response.row(k).iter().zip(u.iter()).map(|(a, b)| a * b).sum();
                (r.norm() - problem.xi[k]) / problem.xi[k]
            })
            .collect();
        let eve = problem
            .eves
            .iter()
            .map(|e| {
                let s = worst_case_eve_snr(u, &e.estimate, e.radius, e.noise_power);
                (e.tolerance - s) / e.tolerance
            })
            .collect();
        let node_power = if problem.max_node_power.is_finite() {
            u.iter().map(|x| (problem.max_node_power - x.norm_sqr()) / problem.max_node_power).collect()
        } else {
            vec![f64::INFINITY; u.len()]
        };
        Slacks { qos, eve, node_power }
    }

    pub fn min(&self) -> f64 {
        self.qos.iter().chain(&self.eve).chain(&self.node_power).copied().fold(f64::INFINITY, f64::min)
    }

    pub fn feasible(&self, tol: f64) -> bool {
        self.min() >= -tol
    }
}

/// Relaxed and rounded precoder.
#[derive(Debug, Clone)]
pub struct PrecoderSolution {
    pub u_star: CMat,
    pub kappa: Vec<Option<f64>>,
    pub u: CVec,
    pub relaxation_power: f64,
    pub rounded_power: f64,
    /// `None` when `U*` was numerically rank one and no randomization ran.
    pub rounding_method: Option<RoundingMethod>,
    pub slacks: Slacks,
    pub feasible: bool,
}

/// Smallest uniform scale meeting every QoS constraint, `None` if a stream
/// receives nothing.
fn qos_rescale(problem: &SecureSdpProblem, u: &CVec) -> Option<f64> {
    let mut t: f64 = 0.0;
    for k in 0..problem.streams() {
        let r: C64 = problem.response.row(k).iter().zip(u.iter()).map(|(a, b)| a * b).sum();
        if r.norm() <= 1e-300 {
            return None;
        }
        t = t.max(problem.xi[k] / r.norm());
    }
    Some(t)
}

/// Recovers a rank-one precoder from `U*`.
pub fn randomize_round(
    relaxed: &RelaxedSolution,
    problem: &SecureSdpProblem,
    n_candidates: usize,
    method: RoundingMethod,
    seed: u64,
) -> Result<PrecoderSolution> {
    let l = problem.nodes();
    let (vals, vecs) = hermitian_eigen(&relaxed.u_star);
    let top = vals[l - 1].max(0.0);
    let second = if l > 1 { vals[l - 2].max(0.0) } else { 0.0 };
    let finish = |u: CVec, m: Option<RoundingMethod>| {
        let slacks = Slacks::evaluate(problem, &u);
        PrecoderSolution {
            u_star: relaxed.u_star.clone(),
            kappa: relaxed.kappa.clone(),
            rounded_power: norm_sqr(&u),
            relaxation_power: relaxed.relaxation_power,
            rounding_method: m,
            feasible: slacks.feasible(FEASIBILITY_SLACK),
            slacks,
            u,
        }
    };

    if top > 0.0 && second / top <= 1e-6 {
        let mut u: CVec = vecs.column(l - 1) * C64::new(top.sqrt(), 0.0);
        if let Some(t) = qos_rescale(problem, &u) {
            u *= C64::new(t, 0.0);
        }
        let sol = finish(u, None);
        if sol.feasible {
            return Ok(sol);
        }
    }

    let sqrt_vals: DVector<f64> = vals.map(|v| v.max(0.0).sqrt());
    let factor = &vecs * CMat::from_diagonal(&sqrt_vals.map(|s| C64::new(s, 0.0)));
    let diag: Vec<f64> = (0..l).map(|i| relaxed.u_star[(i, i)].re.max(0.0).sqrt()).collect();

    let best = (0..n_candidates)
        .into_par_iter()
        .filter_map(|idx| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(idx as u64);
            let u: CVec = match method {
                RoundingMethod::EigenSphere | RoundingMethod::Gaussian => {
                    let s = if method == RoundingMethod::Gaussian { 0.5f64.sqrt() } else { 1.0 };
                    let mut z = CVec::from_fn(l, |_, _| {
                        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal)) * s
                    });
                    if method == RoundingMethod::EigenSphere {
                        let n = z.norm();
                        z /= C64::new(n, 0.0);
                    }
                    &factor * z
                }
                RoundingMethod::PhaseOnly => CVec::from_fn(l, |i, _| {
                    C64::from_polar(diag[i], rng.random_range(0.0..std::f64::consts::TAU))
                }),
            };
            let t = qos_rescale(problem, &u)?;
            let u = u * C64::new(t, 0.0);
            let slacks = Slacks::evaluate(problem, &u);
            slacks.feasible(FEASIBILITY_SLACK).then(|| (norm_sqr(&u), idx, u))
        })
        .min_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));

    match best {
        Some((_, _, u)) => Ok(finish(u, Some(method))),
        None => Err(Error::RoundingFailed { lower_bound: relaxed.relaxation_power, candidates: n_candidates }),
    }
}

/// Relaxation followed by rounding.
pub fn solve_precoder(
    problem: &SecureSdpProblem,
    settings: &SdpSettings,
    n_candidates: usize,
    method: RoundingMethod,
    seed: u64,
) -> Result<PrecoderSolution> {
    let relaxed = solve_relaxed(problem, settings)?;
    randomize_round(&relaxed, problem, n_candidates, method, seed)
}

/// Zero-forcing baseline `u = A⁺ξ`, so that `A u = ξ` exactly.
pub fn zero_forcing(response: &CMat, xi: &[f64]) -> Result<CVec> {
    let pinv = right_pseudo_inverse(response).ok_or(Error::DegenerateRank {
        requested: response.nrows(),
        available: 0,
    })?;
    let target = CVec::from_iterator(xi.len(), xi.iter().map(|&x| C64::new(x, 0.0)));
    Ok(pinv * target)
}

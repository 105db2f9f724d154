//! Receive beamforming at the BS: LCMV weights and the robust max-min SJNR
//! beamformer under norm-bounded steering errors.

use crate::error::{Error, Result};
use crate::linalg::{hpd_inverse, hermitian_part, norm_sqr, real_trace};
use crate::sdp::{MatrixBlock, SdpOutcome, SdpProblem, SdpSettings, SparseBlock};
use crate::{CMat, CVec, C64};

/// Default diagonal loading factor, relative to `Tr(R)/N`.
pub const DEFAULT_LOADING: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CovarianceSource {
    Synthetic,
    Sample { snapshots: usize },
}

/// Jamming-plus-noise covariance at the BS.
#[derive(Debug, Clone, PartialEq)]
pub struct CovarianceModel {
    pub r: CMat,
    pub source: CovarianceSource,
    pub diagonal_loading: f64,
}

impl CovarianceModel {
    pub fn dim(&self) -> usize {
        self.r.nrows()
    }
}

/// `Σ_q P_q a_q a_qᴴ + σ² I_N`.
pub fn synthetic_covariance(
    steerings: &[CVec],
    powers: &[f64],
    noise_power: f64,
    n: usize,
) -> Result<CovarianceModel> {
    if steerings.len() != powers.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} steering vectors for {} powers",
            steerings.len(),
            powers.len()
        )));
    }
    if powers.iter().any(|p| !(*p >= 0.0)) || !(noise_power >= 0.0) {
        return Err(Error::InvalidParameter("powers must be nonnegative".into()));
    }
    let mut r = CMat::identity(n, n) * C64::new(noise_power, 0.0);
    for (a, &p) in steerings.iter().zip(powers) {
        if a.len() != n {
            return Err(Error::DimensionMismatch("steering vector length".into()));
        }
        r += a * a.adjoint() * C64::new(p, 0.0);
    }
    Ok(CovarianceModel { r: hermitian_part(&r), source: CovarianceSource::Synthetic, diagonal_loading: 0.0 })
}

/// `(1/X) Σ y yᴴ + loading·(Tr/N)·I`.
pub fn sample_covariance(snapshots: &[CVec], loading: f64) -> Result<CovarianceModel> {
    let first = snapshots.first().ok_or_else(|| Error::InvalidParameter("empty snapshot list".into()))?;
    let n = first.len();
    if !(loading >= 0.0) {
        return Err(Error::InvalidParameter("loading must be nonnegative".into()));
    }
    let mut r = CMat::zeros(n, n);
    for y in snapshots {
        if y.len() != n {
            return Err(Error::DimensionMismatch("snapshot length".into()));
        }
        r.ger(C64::new(1.0, 0.0), y, &y.conjugate(), C64::new(1.0, 0.0));
    }
    r /= C64::new(snapshots.len() as f64, 0.0);
    let load = loading * real_trace(&r) / n as f64;
    for i in 0..n {
        r[(i, i)] += load;
    }
    Ok(CovarianceModel {
        r: hermitian_part(&r),
        source: CovarianceSource::Sample { snapshots: snapshots.len() },
        diagonal_loading: loading,
    })
}

/// Receive weights together with the constraints they were designed for.
#[derive(Debug, Clone, PartialEq)]
pub struct BeamformerWeights {
    pub w: CVec,
    pub constraint_matrix: CMat,
    /// `wᴴA_G`.
    pub response: CVec,
    /// Worst-case SJNR over the uncertainty sets, for robust weights.
    pub worst_case_sjnr: Option<f64>,
}

fn response(w: &CVec, a: &CMat) -> CVec {
    (w.adjoint() * a).transpose()
}

/// `w = R⁻¹A(AᴴR⁻¹A)⁻¹·1`.
pub fn lcmv_weights(cov: &CovarianceModel, a_g: &CMat) -> Result<BeamformerWeights> {
    let (n, k) = a_g.shape();
    if cov.dim() != n {
        return Err(Error::DimensionMismatch(format!("covariance {} vs {n} elements", cov.dim())));
    }
    let sv = a_g.singular_values();
    let smax = sv.max();
    if k > n || sv.iter().any(|s| *s <= 1e-12 * smax) || smax == 0.0 {
        return Err(Error::RankDeficient { k });
    }
    let rinv = hpd_inverse(&cov.r).ok_or(Error::Degenerate("covariance is not positive definite"))?;
    let ra = &rinv * a_g;
    let g = a_g.adjoint() * &ra;
    let ginv = hpd_inverse(&hermitian_part(&g)).ok_or(Error::RankDeficient { k })?;
    let ones = CVec::from_element(k, C64::new(1.0, 0.0));
    let w = ra * (ginv * ones);
    Ok(BeamformerWeights { response: response(&w, a_g), w, constraint_matrix: a_g.clone(), worst_case_sjnr: None })
}

/// `|wᴴa|² / wᴴRw`.
pub fn output_sjnr(w: &CVec, a: &CVec, cov: &CovarianceModel) -> Result<f64> {
    let den = quad(w, &cov.r);
    if norm_sqr(w) == 0.0 || den <= 0.0 {
        return Err(Error::InvalidParameter("zero weight vector".into()));
    }
    Ok(w.dotc(a).norm_sqr() / den)
}

/// `min_k max(|wᴴã_k| − ε_k‖w‖, 0)² / wᴴRw`, the exact worst case over the
/// balls `‖Δ_k‖ ≤ ε_k`.
pub fn worst_case_sjnr(w: &CVec, a_tilde: &[CVec], eps: &[f64], cov: &CovarianceModel) -> Result<f64> {
    let den = quad(w, &cov.r);
    if norm_sqr(w) == 0.0 || den <= 0.0 {
        return Err(Error::InvalidParameter("zero weight vector".into()));
    }
    let wn = w.norm();
    Ok(a_tilde
        .iter()
        .zip(eps)
        .map(|(a, e)| (w.dotc(a).norm() - e * wn).max(0.0).powi(2) / den)
        .fold(f64::INFINITY, f64::min))
}

fn quad(w: &CVec, r: &CMat) -> f64 {
    w.dotc(&(r * w)).re
}

/// Settings of the robust bisection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustSettings {
    /// Relative width of the final bracket.
    pub tolerance: f64,
    pub sdp: SdpSettings,
}

impl Default for RobustSettings {
    fn default() -> Self {
        RobustSettings { tolerance: 1e-4, sdp: SdpSettings::default() }
    }
}

/// Outcome of one feasibility test.
struct Probe {
    margin: f64,
    w: CVec,
}

/// Phase-fixed feasibility test at level `ϖ`, posed as the SOC program
///
/// ```text
/// max τ  s.t.  Re(e^{−jθ_k} ã_kᴴw) − ε_k s₁ − √ϖ s₂ ≥ τ,  ‖w‖ ≤ s₁ ≤ 1,  ‖Lᴴw‖ ≤ s₂
/// ```
///
/// with `R = LLᴴ`. Level `ϖ` is attainable iff the optimal `τ` is positive.
struct SocTest {
    n: usize,
    a_tilde: Vec<CVec>,
    eps: Vec<f64>,
    phases: Vec<C64>,
    chol_h: CMat,
}

impl SocTest {
    // Variables: Re w (0..n), Im w (n..2n), s1, s2, τ.
    fn problem(&self, level: f64) -> SdpProblem {
        let n = self.n;
        let (s1, s2, tau) = (2 * n, 2 * n + 1, 2 * n + 2);
        let mut objective = vec![0.0; 2 * n + 3];
        objective[tau] = -1.0;
        let mut p = SdpProblem::new(2 * n + 3, objective);
        let root = level.sqrt();
        for (k, a) in self.a_tilde.iter().enumerate() {
            // Re(c·aᴴw) with c = e^{−jθ}: coefficient of Re w_j is Re(c·ā_j),
            // of Im w_j is Re(j·c·ā_j).
            let c = self.phases[k].conj();
            let mut row = Vec::with_capacity(2 * n + 3);
            for j in 0..n {
                let v = c * a[j].conj();
                row.push((j, v.re));
                row.push((n + j, (v * C64::new(0.0, 1.0)).re));
            }
            row.push((s1, -self.eps[k]));
            row.push((s2, -root));
            row.push((tau, -1.0));
            p.linear.push(0.0, row);
        }
        p.linear.push(1.0, vec![(s1, -1.0)]);
        p.blocks.push(arrow(n, &CMat::identity(n, n), s1));
        p.blocks.push(arrow(n, &self.chol_h, s2));
        p
    }

    fn probe(&self, level: f64, settings: &SdpSettings) -> Result<Probe> {
        let n = self.n;
        match self.problem(level).solve(settings)? {
            SdpOutcome::Optimal(sol) => {
                let w = CVec::from_fn(n, |j, _| C64::new(sol.y[j], sol.y[n + j]));
                Ok(Probe { margin: sol.y[2 * n + 2], w })
            }
            SdpOutcome::Infeasible(_) => Err(Error::Degenerate("robust feasibility program is infeasible")),
        }
    }
}

/// `[s I, Mw; (Mw)ᴴ, s] ⪰ 0`, i.e. `‖Mw‖ ≤ s`.
fn arrow(n: usize, m: &CMat, s: usize) -> MatrixBlock {
    let one = C64::new(1.0, 0.0);
    let j = C64::new(0.0, 1.0);
    let mut coeffs = Vec::with_capacity(2 * n + 1);
    coeffs.push((s, (0..=n).map(|i| (i, i, one)).collect()));
    for col in 0..n {
        let mut re = Vec::new();
        let mut im = Vec::new();
        for row in 0..n {
            let v = m[(row, col)];
            if v != C64::new(0.0, 0.0) {
                re.push((row, n, v));
                re.push((n, row, v.conj()));
                im.push((row, n, j * v));
                im.push((n, row, (j * v).conj()));
            }
        }
        coeffs.push((col, re));
        coeffs.push((n + col, im));
    }
    MatrixBlock::Sparse(SparseBlock { constant: CMat::zeros(n + 1, n + 1), coeffs })
}

/// Robust beamformer maximizing the worst-case SJNR over the balls
/// `‖Δ_k‖ ≤ ε_k` by bisection on the SJNR level.
///
/// Each test rotates `wᴴã_k` onto the positive real axis using the phases of
/// the LCMV response. That rotation is lossless for a single constraint; for
/// several it restricts the search, and the LCMV weights stay feasible so the
/// result never falls below them.
pub fn robust_weights(
    cov: &CovarianceModel,
    a_tilde: &[CVec],
    eps: &[f64],
    settings: &RobustSettings,
) -> Result<BeamformerWeights> {
    let n = cov.dim();
    let k = a_tilde.len();
    if k == 0 || eps.len() != k || a_tilde.iter().any(|a| a.len() != n) {
        return Err(Error::DimensionMismatch("robust constraint set".into()));
    }
    if eps.iter().any(|e| !(*e >= 0.0)) {
        return Err(Error::InvalidParameter("uncertainty radii must be nonnegative".into()));
    }
    let a_mat = CMat::from_columns(a_tilde);
    let rinv = hpd_inverse(&cov.r).ok_or(Error::Degenerate("covariance is not positive definite"))?;
    let hi0 = a_tilde.iter().map(|a| a.dotc(&(&rinv * a)).re).fold(f64::INFINITY, f64::min);
    if !(hi0 > 0.0) {
        return Err(Error::Degenerate("no signal in any constraint direction"));
    }

    // Normalize so that Tr(R)/N = 1 and max ‖ã_k‖ = 1.
    let r_scale = real_trace(&cov.r) / n as f64;
    let a_scale = a_tilde.iter().map(|a| a.norm()).fold(0.0, f64::max);
    let level_scale = a_scale * a_scale / r_scale;
    let r_bar = &cov.r / C64::new(r_scale, 0.0);
    let a_bar: Vec<CVec> = a_tilde.iter().map(|a| a / C64::new(a_scale, 0.0)).collect();
    let eps_bar: Vec<f64> = eps.iter().map(|e| e / a_scale).collect();
    let cov_bar = CovarianceModel { r: r_bar.clone(), ..cov.clone() };

    let start = match lcmv_weights(&cov_bar, &a_mat.map(|z| z / a_scale)) {
        Ok(b) => b.w,
        Err(_) => &rinv * &a_bar[0],
    };
    let phases: Vec<C64> = a_bar
        .iter()
        .map(|a| {
            let z = a.dotc(&start);
            if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }
        })
        .collect();
    let chol = r_bar.clone().cholesky().ok_or(Error::Degenerate("covariance is not positive definite"))?;
    let test = SocTest { n, a_tilde: a_bar.clone(), eps: eps_bar.clone(), phases, chol_h: chol.l().adjoint() };

    let mut best_w = start.clone();
    let mut lo = worst_case_sjnr(&start, &a_bar, &eps_bar, &cov_bar)?;
    let mut hi = hi0 / level_scale;
    if lo <= 0.0 {
        // Even the LCMV weights are swamped; see whether anything clears zero.
        let probe = test.probe(0.0, &settings.sdp)?;
        if probe.margin <= 0.0 {
            return Err(Error::Degenerate("uncertainty swamps every constraint direction"));
        }
        best_w = probe.w;
        lo = worst_case_sjnr(&best_w, &a_bar, &eps_bar, &cov_bar)?;
    }
    while hi - lo > settings.tolerance * hi {
        let mid = 0.5 * (lo + hi);
        // Levels at the edge of feasibility make the test degenerate; a probe
        // that does not converge is treated as infeasible, which can only
        // understate the result since `lo` always comes from actual weights.
        match test.probe(mid, &settings.sdp) {
            Ok(probe) if probe.margin > 0.0 => {
                let achieved = worst_case_sjnr(&probe.w, &a_bar, &eps_bar, &cov_bar)?;
                best_w = probe.w;
                lo = achieved.max(mid);
            }
            Ok(_) | Err(Error::NotConverged(_)) => hi = mid,
            Err(e) => return Err(e),
        }
    }

    let w = best_w;
    let sjnr = worst_case_sjnr(&w, a_tilde, eps, cov)?;
    Ok(BeamformerWeights { response: response(&w, &a_mat), w, constraint_matrix: a_mat, worst_case_sjnr: Some(sjnr) })
}

/// Whether level `ϖ` passes the phase-fixed feasibility test used by
/// [`robust_weights`], with phases taken from `reference`.
pub fn robust_level_feasible(
    cov: &CovarianceModel,
    a_tilde: &[CVec],
    eps: &[f64],
    reference: &CVec,
    level: f64,
    settings: &SdpSettings,
) -> Result<bool> {
    let n = cov.dim();
    let chol = cov.r.clone().cholesky().ok_or(Error::Degenerate("covariance is not positive definite"))?;
    let phases = a_tilde
        .iter()
        .map(|a| {
            let z = a.dotc(reference);
            if z.norm() > 0.0 { z / z.norm() } else { C64::new(1.0, 0.0) }
        })
        .collect();
    let test = SocTest { n, a_tilde: a_tilde.to_vec(), eps: eps.to_vec(), phases, chol_h: chol.l().adjoint() };
    Ok(test.probe(level, settings)?.margin > 0.0)
}

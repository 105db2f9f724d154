//! Flight-node deployment: Fekete (Gauss-Lobatto) points, grouped layouts, the
//! Vandermonde objective and its closed-form factorization, asymptotic
//! eigenvalues and a numerical layout optimizer.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::channel::{normalized_channel, small_parameter};
use crate::error::{Error, Result};
use crate::geometry::{BsArray, NodeLayout, Scenario};
use crate::linalg::vandermonde;

/// Subset enumeration is used up to this many nodes; above it the Gram
/// determinant is used instead.
pub const ENUMERATION_LIMIT: usize = 20;

/// Fekete points of `[-1, 1]` and their Vandermonde objective.
#[derive(Debug, Clone, PartialEq)]
pub struct FeketeSet {
    pub points: Vec<f64>,
    pub objective_value: f64,
}

/// Legendre polynomial `P_n(x)` and its derivative.
pub fn legendre(n: usize, x: f64) -> (f64, f64) {
    if n == 0 {
        return (1.0, 0.0);
    }
    let (mut p0, mut p1) = (1.0, x);
    for k in 2..=n {
        let kf = k as f64;
        let p2 = ((2.0 * kf - 1.0) * x * p1 - (kf - 1.0) * p0) / kf;
        p0 = p1;
        p1 = p2;
    }
    // (1 − x²) P'_n = n (P_{n−1} − x P_n), singular at the endpoints.
    let nf = n as f64;
    let dp = if (1.0 - x * x).abs() < 1e-14 {
        x.signum().powi(n as i32 + 1) * nf * (nf + 1.0) / 2.0
    } else {
        nf * (p0 - x * p1) / (1.0 - x * x)
    };
    (p1, dp)
}

/// Endpoints `±1` plus the roots of `P'_{K−1}`.
///
/// Initial roots come from the eigenvalues of the Jacobi matrix of the
/// `(1,1)` Jacobi polynomials, which are proportional to `P'_{K−1}`; each root
/// is then polished by Newton steps kept inside its bracket.
pub fn gauss_lobatto_points(k: usize) -> Result<FeketeSet> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!("need at least 2 Fekete points, got {k}")));
    }
    let n = k - 1;
    let m = k - 2;
    let mut interior = Vec::with_capacity(m);
    if m > 0 {
        let jacobi = DMatrix::<f64>::from_fn(m, m, |i, j| {
            if i.abs_diff(j) == 1 {
                let k = (i.min(j) + 1) as f64;
                (k * (k + 2.0) / ((2.0 * k + 1.0) * (2.0 * k + 3.0))).sqrt()
            } else {
                0.0
            }
        });
        let mut guesses: Vec<f64> = jacobi.symmetric_eigenvalues().iter().copied().collect();
        guesses.sort_by(f64::total_cmp);
        for i in 0..m {
            let lo = if i == 0 { -1.0 } else { (guesses[i - 1] + guesses[i]) / 2.0 };
            let hi = if i + 1 == m { 1.0 } else { (guesses[i] + guesses[i + 1]) / 2.0 };
            interior.push(polish_root(n, guesses[i], lo, hi));
        }
        // Enforce exact symmetry about the origin.
        for i in 0..m / 2 {
            let s = (interior[m - 1 - i] - interior[i]) / 2.0;
            interior[i] = -s;
            interior[m - 1 - i] = s;
        }
        if m % 2 == 1 {
            interior[m / 2] = 0.0;
        }
    }
    let mut points = Vec::with_capacity(k);
    points.push(-1.0);
    points.extend(interior);
    points.push(1.0);
    let objective_value = vandermonde_objective(&points, k)?;
    Ok(FeketeSet { points, objective_value })
}

/// Newton on `P'_n` using `(1 − x²)P''_n = 2xP'_n − n(n+1)P_n`, bisecting when a
/// step leaves `(lo, hi)`.
fn polish_root(n: usize, mut x: f64, mut lo: f64, mut hi: f64) -> f64 {
    let nn = (n * (n + 1)) as f64;
    for _ in 0..100 {
        let (p, dp) = legendre(n, x);
        if dp == 0.0 {
            break;
        }
        let d2p = (2.0 * x * dp - nn * p) / (1.0 - x * x);
        // Maintain the bracket using the sign of P'_n at its ends.
        let (_, dlo) = legendre(n, lo);
        if dlo.signum() == dp.signum() {
            lo = x;
        } else {
            hi = x;
        }
        let mut next = x - dp / d2p;
        if !(next > lo && next < hi) {
            next = (lo + hi) / 2.0;
        }
        let step = (next - x).abs();
        x = next;
        if step < 1e-16 {
            break;
        }
    }
    x
}

/// Layout where `L/K` nodes sit at each of the `K` Fekete points.
pub fn grouped_layout(l: usize, k: usize) -> Result<Vec<f64>> {
    if k == 0 || k > l {
        return Err(Error::InvalidParameter(format!("need 1 <= K <= L, got K={k}, L={l}")));
    }
    if !l.is_multiple_of(k) {
        return Err(Error::UnequalGroups { nodes: l, groups: k });
    }
    let mu = if k == 1 { vec![0.0] } else { gauss_lobatto_points(k)?.points };
    let g = l / k;
    Ok((0..l).map(|i| mu[i / g]).collect())
}

/// Per-axis grouped layouts of a planar array.
pub fn grouped_planar_layout(lx: usize, ly: usize, kx: usize, ky: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((grouped_layout(lx, kx)?, grouped_layout(ly, ky)?))
}

/// Replaces each co-located group with a small ULA of normalized spacing
/// `spacing` centred on the group position, shifting groups that would leave
/// `[-1, 1]` back inside.
pub fn spread_groups(delta: &[f64], k: usize, spacing: f64) -> Result<Vec<f64>> {
    let l = delta.len();
    if k == 0 || !l.is_multiple_of(k) {
        return Err(Error::UnequalGroups { nodes: l, groups: k });
    }
    let g = l / k;
    let half = spacing * (g as f64 - 1.0) / 2.0;
    if 2.0 * half > 2.0 {
        return Err(Error::InvalidParameter("group spread wider than the aperture".into()));
    }
    let mut out = Vec::with_capacity(l);
    for grp in delta.chunks(g) {
        let centre = grp.iter().sum::<f64>() / g as f64;
        let centre = centre.clamp(-1.0 + half, 1.0 - half);
        out.extend((0..g).map(|i| centre - half + i as f64 * spacing));
    }
    Ok(out)
}

/// Sums `Π_{i<j∈S} (δ_j − δ_i)²` over all subsets `S` of each size `0..=kmax`.
fn subset_sums(delta: &[f64], kmax: usize) -> Vec<f64> {
    fn walk(delta: &[f64], chosen: &mut Vec<usize>, start: usize, prod: f64, kmax: usize, acc: &mut [f64]) {
        acc[chosen.len()] += prod;
        if chosen.len() == kmax {
            return;
        }
        for j in start..delta.len() {
            let mut p = prod;
            for &i in chosen.iter() {
                let d = delta[j] - delta[i];
                p *= d * d;
            }
            chosen.push(j);
            walk(delta, chosen, j + 1, p, kmax, acc);
            chosen.pop();
        }
    }
    let mut acc = vec![0.0; kmax + 1];
    walk(delta, &mut Vec::with_capacity(kmax), 0, 1.0, kmax, &mut acc);
    acc
}

/// `det(D_(k)ᵀ D_(k))` for the first `k` Vandermonde columns.
fn gram_determinant(delta: &[f64], k: usize) -> f64 {
    let v = vandermonde(delta, k);
    let g: DMatrix<f64> = v.transpose() * v;
    g.determinant().max(0.0)
}

/// `𝒟_{C_K}(δ)`: the sum over all `K`-subsets of the squared Vandermonde
/// determinant of the subset.
pub fn vandermonde_objective(delta: &[f64], k: usize) -> Result<f64> {
    if k == 0 || k > delta.len() {
        return Err(Error::InvalidParameter(format!("need 1 <= K <= L, got K={k}, L={}", delta.len())));
    }
    if delta.len() <= ENUMERATION_LIMIT {
        Ok(subset_sums(delta, k)[k])
    } else {
        Ok(gram_determinant(delta, k))
    }
}

/// Squared diagonal `r²_{A,k}` of the R factor of the Vandermonde matrix,
/// from ratios of consecutive subset sums.
pub fn rak_closed_form(delta: &[f64], k: usize) -> Result<Vec<f64>> {
    let l = delta.len();
    if k == 0 || k > l {
        return Err(Error::InvalidParameter(format!("need 1 <= K <= L, got K={k}, L={l}")));
    }
    let sums: Vec<f64> = if l <= ENUMERATION_LIMIT {
        subset_sums(delta, k)
    } else {
        (0..=k).map(|j| if j == 0 { 1.0 } else { gram_determinant(delta, j) }).collect()
    };
    let mut out = Vec::with_capacity(k);
    for j in 1..=k {
        if sums[j - 1] < 1e-300 {
            return Err(Error::RankDeficient { k: j });
        }
        out.push(sums[j] / sums[j - 1]);
    }
    Ok(out)
}

/// Small-`ω` approximation of the leading channel eigenvalues.
#[derive(Debug, Clone, PartialEq)]
pub struct AsymptoticSpectrum {
    pub lambda: Vec<f64>,
    pub r_a: Vec<f64>,
    pub r_g: Vec<f64>,
    pub omega_cos_phi: f64,
}

impl AsymptoticSpectrum {
    /// Whether `ω cos φ` is small enough for the expansion to be meaningful.
    pub fn in_regime(&self) -> bool {
        self.omega_cos_phi.abs() <= 0.3
    }
}

fn qr_diagonal(x: &[f64], k: usize) -> Result<Vec<f64>> {
    let v = vandermonde(x, k);
    let col_scale = v.column_iter().map(|c| c.norm()).fold(0.0, f64::max);
    let r = v.qr().r();
    let mut out = Vec::with_capacity(k);
    for j in 0..k {
        let d = r[(j, j)].abs();
        if d <= 1e-12 * col_scale {
            return Err(Error::RankDeficient { k: j + 1 });
        }
        out.push(d);
    }
    Ok(out)
}

/// `λ_k ≈ [r_{G,k} r_{A,k} / (k−1)!]² (ω cos φ)^{2(k−1)}`.
pub fn asymptotic_eigenvalues(scn: &Scenario, layout: &NodeLayout, k: usize) -> Result<AsymptoticSpectrum> {
    let n = match scn.bs_array {
        BsArray::Linear(n) => n,
        BsArray::Planar(..) => return Err(Error::InvalidParameter("linear BS required".into())),
    };
    if k == 0 || k > n.min(layout.len()) {
        return Err(Error::InvalidParameter(format!("rank {k} outside 1..={}", n.min(layout.len()))));
    }
    let x: Vec<f64> = (0..n).map(|i| (2.0 * i as f64 + 1.0 - n as f64) / n as f64).collect();
    let r_g = qr_diagonal(&x, k)?;
    let r_a = qr_diagonal(layout.delta(), k)?;
    let oc = small_parameter(scn, layout.aperture) * layout.rotation.cos();
    let mut fact = 1.0;
    let lambda = (0..k)
        .map(|j| {
            if j > 0 {
                fact *= j as f64;
            }
            let base = r_g[j] * r_a[j] / fact;
            base * base * oc.powi(2 * j as i32)
        })
        .collect();
    Ok(AsymptoticSpectrum { lambda, r_a, r_g, omega_cos_phi: oc })
}

/// What [`optimize_layout_numeric`] maximizes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LayoutObjective {
    /// `𝒟_{C_K}(δ)`, independent of the flight parameters.
    DetGain,
    /// `Σ_k log2(1 + γλ_k/K)` of the exact channel at linear SNR `snr`.
    Capacity { snr: f64 },
}

/// Settings of the multistart coordinate ascent.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LayoutSearch {
    pub restarts: usize,
    pub seed: u64,
    pub initial_step: f64,
    pub final_step: f64,
}

impl Default for LayoutSearch {
    fn default() -> Self {
        LayoutSearch { restarts: 16, seed: 0, initial_step: 0.25, final_step: 1e-5 }
    }
}

fn layout_score(
    scn: &Scenario,
    n: usize,
    aperture: f64,
    rotation: f64,
    k: usize,
    objective: LayoutObjective,
    delta: &[f64],
) -> f64 {
    match objective {
        LayoutObjective::DetGain => vandermonde_objective(delta, k).unwrap_or(0.0),
        LayoutObjective::Capacity { snr } => {
            let h = normalized_channel(n, delta, small_parameter(scn, aperture), rotation);
            let mut s: Vec<f64> = h.singular_values().iter().copied().collect();
            s.sort_by(|a, b| b.total_cmp(a));
            s.iter().take(k).map(|x| (1.0 + snr * x * x / k as f64).log2()).sum()
        }
    }
}

/// Multistart projected coordinate ascent over `δ ∈ [-1, 1]^L`.
///
/// Restart 0 starts from the grouped layout when `K | L` (otherwise from the
/// uniform layout); the others start from seeded uniform draws. Each restart
/// halves its step from `initial_step` to `final_step`. The best restart wins,
/// ties broken by the lexicographically smallest sorted `δ`.
pub fn optimize_layout_numeric(
    scn: &Scenario,
    l: usize,
    k: usize,
    aperture: f64,
    rotation: f64,
    objective: LayoutObjective,
    search: &LayoutSearch,
) -> Result<NodeLayout> {
    if k == 0 || k > l {
        return Err(Error::InvalidParameter(format!("need 1 <= K <= L, got K={k}, L={l}")));
    }
    let n = scn.bs_array.len();
    let score = |d: &[f64]| layout_score(scn, n, aperture, rotation, k, objective, d);
    let seeded_start = grouped_layout(l, k)
        .or_else(|_| NodeLayout::uniform(l, aperture, rotation).map(|x| x.delta().to_vec()))?;

    let results: Vec<(f64, Vec<f64>)> = (0..search.restarts.max(1))
        .into_par_iter()
        .map(|r| {
            let mut delta = if r == 0 {
                seeded_start.clone()
            } else {
                let mut rng = ChaCha8Rng::seed_from_u64(search.seed ^ (r as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15));
                (0..l).map(|_| rng.random_range(-1.0..=1.0)).collect()
            };
            let mut best = score(&delta);
            let mut step = search.initial_step;
            while step >= search.final_step {
                let mut improved = true;
                while improved {
                    improved = false;
                    for i in 0..l {
                        for dir in [1.0, -1.0] {
                            let old = delta[i];
                            delta[i] = (old + dir * step).clamp(-1.0, 1.0);
                            if delta[i] == old {
                                continue;
                            }
                            let s = score(&delta);
                            if s > best {
                                best = s;
                                improved = true;
                            } else {
                                delta[i] = old;
                            }
                        }
                    }
                }
                step /= 2.0;
            }
            delta.sort_by(f64::total_cmp);
            (best, delta)
        })
        .collect();

    let (_, best) = results
        .into_iter()
        .reduce(|a, b| match b.0.total_cmp(&a.0) {
            std::cmp::Ordering::Greater => b,
            std::cmp::Ordering::Less => a,
            std::cmp::Ordering::Equal => {
                if b.1.iter().zip(&a.1).map(|(x, y)| x.total_cmp(y)).find(|o| o.is_ne())
                    == Some(std::cmp::Ordering::Less)
                {
                    b
                } else {
                    a
                }
            }
        })
        .expect("at least one restart");
    NodeLayout::new(best, aperture, rotation)
}

/// Both sides of the grouped-layout upper bound `𝒟_{C_K}(δ) ≤ 𝒟_{C_K}(μ)·(L/K)^K`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Corollary1Check {
    pub lhs: f64,
    pub rhs: f64,
    pub holds: bool,
}

/// Evaluates the upper bound on `𝒟_{C_K}` attained by the grouped layout.
pub fn corollary1_bound(delta: &[f64], k: usize) -> Result<Corollary1Check> {
    let l = delta.len();
    let lhs = vandermonde_objective(delta, k)?;
    let mu_obj = if k == 1 { 1.0 } else { gauss_lobatto_points(k)?.objective_value };
    let rhs = mu_obj * (l as f64 / k as f64).powi(k as i32);
    Ok(Corollary1Check { lhs, rhs, holds: lhs <= rhs * (1.0 + 1e-9) })
}

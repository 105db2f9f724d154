//! Line-of-sight virtual MIMO channel between the flight nodes and the BS,
//! eavesdropper channel vectors and jammer steering vectors.
//!
//! In the far field the `N×L` channel factors as `H = ρ(R)·B_G·H̃·B_A`, where
//! the diagonal factors carry per-element and per-node phases and `H̃` holds
//! only the node/element cross terms `e^{jω(2n+1−N)/N·δ_l cos φ}`.

use std::f64::consts::PI;

use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::geometry::{
    bs_element_position, centered_offset, distance, BsArray, EveModel, NodeLayout, Point3, Scenario,
};
use crate::{CMat, CVec, C64};

/// Free-space amplitude factor `ρ(τ) = c / (4π f_c τ)`.
pub fn attenuation_factor(range: f64, carrier_frequency: f64, wave_speed: f64) -> Result<f64> {
    if !(range > 0.0) {
        return Err(Error::InvalidParameter(format!("range must be positive, got {range}")));
    }
    Ok(wave_speed / (4.0 * PI * carrier_frequency * range))
}

/// The virtual MIMO channel together with its factorization and the leading
/// `K` singular triplets of `H̃`.
#[derive(Debug, Clone)]
pub struct VirtualChannel {
    pub h: CMat,
    /// Diagonal of `B_A` (length L).
    pub b_a: CVec,
    /// Diagonal of `B_G` (length N).
    pub b_g: CVec,
    pub h_tilde: CMat,
    /// Small parameter `ω = (π f_c / c)·D N d / (2R)`; `None` for channels
    /// built from exact positions.
    pub omega: Option<f64>,
    pub attenuation: f64,
    /// Left singular vectors of `H̃`, `N×K`.
    pub u1: CMat,
    /// Leading `K` singular values of `H̃`, descending.
    pub singular_values: DVector<f64>,
    /// Right singular vectors of `H̃`, `L×K`.
    pub v1: CMat,
    /// All singular values of `H̃`, descending.
    pub spectrum: DVector<f64>,
    /// Transmit response `ρ V1ᴴ B_A`, `K×L`.
    pub a_a: CMat,
    /// Receive response `B_G U1`, `N×K`.
    pub a_g: CMat,
    pub rank: usize,
}

impl VirtualChannel {
    /// Eigenvalues `λ_k` of `H̃ᴴH̃` for the retained streams.
    pub fn eigenvalues(&self) -> DVector<f64> {
        self.singular_values.map(|s| s * s)
    }

    /// Channel gain matrix `HᴴH`.
    pub fn gain_matrix(&self) -> CMat {
        self.h.adjoint() * &self.h
    }

    pub fn nodes(&self) -> usize {
        self.h.ncols()
    }

    pub fn elements(&self) -> usize {
        self.h.nrows()
    }
}

/// `ω` for a scenario and aperture.
pub fn small_parameter(scn: &Scenario, aperture: f64) -> f64 {
    PI * scn.carrier_frequency / scn.wave_speed * aperture * scn.bs_array.len() as f64 * scn.bs_spacing
        / (2.0 * scn.range())
}

/// `H̃` alone, shared with the layout optimizer which only needs its spectrum.
pub fn normalized_channel(n: usize, delta: &[f64], omega: f64, rotation: f64) -> CMat {
    let cr = rotation.cos();
    CMat::from_fn(n, delta.len(), |i, l| {
        let x = 2.0 * centered_offset(i, n) / n as f64;
        C64::from_polar(1.0, omega * x * delta[l] * cr)
    })
}

/// Builds the far-field channel of a linear BS and keeps `k` streams.
pub fn build_channel(scn: &Scenario, layout: &NodeLayout, k: usize) -> Result<VirtualChannel> {
    scn.validate()?;
    let n = match scn.bs_array {
        BsArray::Linear(n) => n,
        BsArray::Planar(..) => {
            return Err(Error::InvalidParameter(
                "far-field factorization needs a linear BS; use from_positions".into(),
            ))
        }
    };
    let l = layout.len();
    if k == 0 || k > n.min(l) {
        return Err(Error::InvalidParameter(format!("rank {k} outside 1..={}", n.min(l))));
    }
    let r = scn.range();
    let kw = scn.wavenumber();
    let (st, phi) = (scn.elevation().sin(), scn.azimuth());
    let d = scn.bs_spacing;
    let big_d = layout.aperture;
    let rot = layout.rotation;

    let b_a = CVec::from_iterator(
        l,
        layout.delta().iter().map(|&dl| {
            let a = big_d * dl;
            C64::from_polar(1.0, -kw * (a * a / (8.0 * r) - a * st * (phi - rot).cos() / 2.0))
        }),
    );
    let b_g = CVec::from_iterator(
        n,
        (0..n).map(|i| {
            let g = centered_offset(i, n) * d;
            C64::from_polar(1.0, -kw * (g * g / (2.0 * r) + g * st * phi.cos()))
        }),
    );
    let omega = small_parameter(scn, big_d);
    let h_tilde = normalized_channel(n, layout.delta(), omega, rot);
    let rho = attenuation_factor(r, scn.carrier_frequency, scn.wave_speed)?;
    let h = CMat::from_fn(n, l, |i, j| b_g[i] * h_tilde[(i, j)] * b_a[j] * rho);
    assemble(h, b_a, b_g, h_tilde, Some(omega), rho, k)
}

/// Channel from explicit node and element positions using exact ranges,
/// `H_{n,l} = ρ(R) e^{−jkτ_{n,l}}`. Used for planar arrays, where both
/// diagonal factors are taken as identity.
pub fn from_positions(
    nodes: &[Point3],
    elements: &[Point3],
    reference_range: f64,
    carrier_frequency: f64,
    wave_speed: f64,
    k: usize,
) -> Result<VirtualChannel> {
    let (n, l) = (elements.len(), nodes.len());
    if k == 0 || k > n.min(l) {
        return Err(Error::InvalidParameter(format!("rank {k} outside 1..={}", n.min(l))));
    }
    let kw = 2.0 * PI * carrier_frequency / wave_speed;
    let rho = attenuation_factor(reference_range, carrier_frequency, wave_speed)?;
    let h_tilde = CMat::from_fn(n, l, |i, j| {
        C64::from_polar(1.0, -kw * distance(&elements[i], &nodes[j]))
    });
    let h = h_tilde.map(|x| x * rho);
    let ones = |m| CVec::from_element(m, C64::new(1.0, 0.0));
    assemble(h, ones(l), ones(n), h_tilde, None, rho, k)
}

/// Element positions of the scenario's BS array in index order.
pub fn bs_positions(scn: &Scenario) -> Result<Vec<Point3>> {
    (0..scn.bs_array.len()).map(|n| bs_element_position(scn, n)).collect()
}

fn assemble(
    h: CMat,
    b_a: CVec,
    b_g: CVec,
    h_tilde: CMat,
    omega: Option<f64>,
    rho: f64,
    k: usize,
) -> Result<VirtualChannel> {
    let (n, l) = h_tilde.shape();
    let svd = h_tilde.clone().svd(true, true);
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested Vᴴ");
    let s = svd.singular_values;
    let mut order: Vec<usize> = (0..s.len()).collect();
    order.sort_by(|&a, &b| s[b].total_cmp(&s[a]));

    let spectrum = DVector::from_iterator(s.len(), order.iter().map(|&i| s[i]));
    let available = spectrum.iter().filter(|&&x| x >= 1e-12 * spectrum[0]).count();
    if k > available {
        return Err(Error::DegenerateRank { requested: k, available });
    }

    let mut u1 = CMat::zeros(n, k);
    let mut v1 = CMat::zeros(l, k);
    for (dst, &src) in order.iter().take(k).enumerate() {
        let mut vc: CVec = v_t.row(src).adjoint();
        let mut uc: CVec = u.column(src).into_owned();
        // Make the first non-negligible entry of v real-positive.
        let pivot = vc.iter().copied().find(|z| z.norm() > 1e-12).unwrap_or(C64::new(1.0, 0.0));
        let phase = C64::from_polar(1.0, -pivot.arg());
        vc *= phase;
        uc *= phase;
        v1.set_column(dst, &vc);
        u1.set_column(dst, &uc);
    }
    let singular_values = spectrum.rows(0, k).into_owned();
    let a_a = v1.adjoint() * CMat::from_diagonal(&b_a) * C64::new(rho, 0.0);
    let a_g = CMat::from_diagonal(&b_g) * &u1;
    Ok(VirtualChannel {
        h,
        b_a,
        b_g,
        h_tilde,
        omega,
        attenuation: rho,
        u1,
        singular_values,
        v1,
        spectrum,
        a_a,
        a_g,
        rank: k,
    })
}

/// Eavesdropper channel with the phase `ζ(l) = δ_l D sin ϑ`, entries
/// `ρ(R_E) e^{+jkζ(l)}` (the conjugate of the departure phase vector).
pub fn eve_channel(
    layout: &NodeLayout,
    azimuth: f64,
    range: f64,
    carrier_frequency: f64,
    wave_speed: f64,
) -> Result<CVec> {
    let rho = attenuation_factor(range, carrier_frequency, wave_speed)?;
    let kw = 2.0 * PI * carrier_frequency / wave_speed;
    let s = azimuth.sin();
    Ok(CVec::from_iterator(
        layout.len(),
        layout.delta().iter().map(|&d| C64::from_polar(rho, kw * d * layout.aperture * s)),
    ))
}

/// Channel vector from the virtual array to an arbitrary point, using the same
/// second-order range expansion as the BS channel: entries
/// `ρ(r) e^{+jkζ_l}` with `ζ_l = (Dδ_l)²/8r − (Dδ_l/2)·sin θ·cos(ϑ − φ)`.
///
/// Against the BS centre this is exactly the conjugate of `ρ·B_A`, so transmit
/// gains towards the BS and towards eavesdroppers are measured on one scale.
pub fn departure_channel(
    layout: &NodeLayout,
    target: &Point3,
    carrier_frequency: f64,
    wave_speed: f64,
) -> Result<CVec> {
    let r = target.norm();
    let rho = attenuation_factor(r, carrier_frequency, wave_speed)?;
    let kw = 2.0 * PI * carrier_frequency / wave_speed;
    let st = (target.x * target.x + target.y * target.y).sqrt() / r;
    let az = target.y.atan2(target.x);
    Ok(CVec::from_iterator(
        layout.len(),
        layout.delta().iter().map(|&dl| {
            let a = layout.aperture * dl;
            let zeta = a * a / (8.0 * r) - a / 2.0 * st * (az - layout.rotation).cos();
            C64::from_polar(rho, kw * zeta)
        }),
    ))
}

/// How eavesdropper channel estimates are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PhaseModel {
    /// `δ_l D sin ϑ` phase, see [`eve_channel`].
    Printed,
    /// Departure phases consistent with the BS channel, see [`departure_channel`].
    #[default]
    Geometric,
}

/// Channel estimate for an eavesdropper under the chosen phase model.
pub fn eve_estimate(
    scn: &Scenario,
    layout: &NodeLayout,
    eve: &EveModel,
    model: PhaseModel,
) -> Result<CVec> {
    match model {
        PhaseModel::Printed => {
            let (az, r) = crate::geometry::eve_departure_geometry(eve)?;
            eve_channel(layout, az, r, scn.carrier_frequency, scn.wave_speed)
        }
        PhaseModel::Geometric => {
            departure_channel(layout, &eve.position, scn.carrier_frequency, scn.wave_speed)
        }
    }
}

/// Jammer steering vector at the BS with entries `e^{−jkζ(n)}`,
/// `ζ(n) = (n+1 − (N+1))·d·sin ϑ / 2` for zero-based `n`.
pub fn jammer_steering(arrival: f64, n: usize, d: f64, carrier_frequency: f64, wave_speed: f64) -> CVec {
    let kw = 2.0 * PI * carrier_frequency / wave_speed;
    let s = arrival.sin();
    CVec::from_iterator(
        n,
        (0..n).map(|i| {
            let zeta = (i as f64 - n as f64) * d * s / 2.0;
            C64::from_polar(1.0, -kw * zeta)
        }),
    )
}

/// Eavesdropper channel estimate with its uncertainty ball.
#[derive(Debug, Clone)]
pub struct EveChannel {
    pub estimate: CVec,
    pub uncertainty_radius: f64,
    pub true_sample: Option<CVec>,
}

impl EveChannel {
    pub fn new(estimate: CVec, uncertainty_radius: f64) -> Result<Self> {
        if uncertainty_radius.is_nan() || uncertainty_radius < 0.0 {
            return Err(Error::InvalidParameter("uncertainty radius must be non-negative".into()));
        }
        Ok(EveChannel { estimate, uncertainty_radius, true_sample: None })
    }

    /// Attaches a realized channel drawn from the uncertainty ball.
    pub fn with_sample(mut self, seed: u64) -> Self {
        let delta = sample_eve_uncertainty(&self, seed);
        self.true_sample = Some(&self.estimate + delta);
        self
    }
}

/// Uniform draw from the complex `L`-dimensional ball of radius `ε`.
pub fn sample_eve_uncertainty(ech: &EveChannel, seed: u64) -> CVec {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_ball(ech.estimate.len(), ech.uncertainty_radius, &mut rng)
}

pub(crate) fn sample_ball<R: Rng>(len: usize, radius: f64, rng: &mut R) -> CVec {
    if radius == 0.0 || len == 0 {
        return CVec::zeros(len);
    }
    let mut v = CVec::from_fn(len, |_, _| {
        C64::new(rng.sample::<f64, _>(StandardNormal), rng.sample::<f64, _>(StandardNormal))
    });
    let norm = v.norm();
    let u: f64 = rng.random();
    let r = radius * u.powf(1.0 / (2.0 * len as f64));
    v *= C64::new(r / norm, 0.0);
    v
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Point3;
    use proptest::prelude::*;

    fn reference(l: usize) -> (Scenario, NodeLayout) {
        let scn = Scenario::default();
        let layout = NodeLayout::uniform(l, 4.0, 0.0).unwrap();
        (scn, layout)
    }

    fn check_invariants(ch: &VirtualChannel) {
        for z in ch.b_a.iter().chain(ch.b_g.iter()).chain(ch.h_tilde.iter()) {
            assert!((z.norm() - 1.0).abs() < 1e-12);
        }
        let rec = CMat::from_diagonal(&ch.b_g) * &ch.h_tilde * CMat::from_diagonal(&ch.b_a)
            * C64::new(ch.attenuation, 0.0);
        assert!((&rec - &ch.h).norm() / ch.h.norm() < 1e-10);
        let sv_h = ch.h.clone().singular_values();
        let mut sv_h: Vec<f64> = sv_h.iter().copied().collect();
        sv_h.sort_by(|a, b| b.total_cmp(a));
        for (a, b) in sv_h.iter().zip(ch.spectrum.iter()) {
            assert!((a - ch.attenuation * b).abs() <= 1e-10 * sv_h[0]);
        }
    }

    #[test]
    fn attenuation() {
        let c = SPEED_OF_LIGHT;
        let f = 1e9;
        assert!((attenuation_factor(c / (4.0 * PI * f), f, c).unwrap() - 1.0).abs() < 1e-15);
        let a = attenuation_factor(50.0, f, c).unwrap();
        let b = attenuation_factor(100.0, f, c).unwrap();
        assert!((a / b - 2.0).abs() < 1e-14);
        assert!((b - 2.3857e-4).abs() < 1e-8);
        assert!(attenuation_factor(0.0, f, c).is_err());
    }

    use crate::geometry::SPEED_OF_LIGHT;

    #[test]
    fn reference_channel_invariants() {
        let (scn, layout) = reference(16);
        let ch = build_channel(&scn, &layout, 2).unwrap();
        assert_eq!(ch.h.shape(), (32, 16));
        assert_eq!(ch.a_a.shape(), (2, 16));
        assert_eq!(ch.a_g.shape(), (32, 2));
        check_invariants(&ch);
        let expected = PI * 1e9 / SPEED_OF_LIGHT * 4.0 * 32.0 * scn.bs_spacing / (2.0 * scn.range());
        assert!((ch.omega.unwrap() - expected).abs() < 1e-15);
    }

    #[test]
    fn vanishing_omega_gives_all_ones() {
        let (mut scn, layout) = reference(16);
        scn.bs_center *= 1e7;
        let ch = build_channel(&scn, &layout, 1).unwrap();
        for z in ch.h_tilde.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-5);
        }
        let lam = ch.eigenvalues();
        assert!((lam[0] - 512.0).abs() / 512.0 < 1e-9);
        assert!(ch.spectrum[1].powi(2) < 1e-8);
    }

    #[test]
    fn broadside_rotation_gives_all_ones() {
        let (scn, _) = reference(8);
        let layout = NodeLayout::new(vec![-1.0, -0.3, 0.2, 0.9], 4.0, PI / 2.0).unwrap();
        let ch = build_channel(&scn, &layout, 1).unwrap();
        for z in ch.h_tilde.iter() {
            assert!((z - C64::new(1.0, 0.0)).norm() < 1e-12);
        }
        assert!(matches!(build_channel(&scn, &layout, 2), Err(Error::DegenerateRank { .. })));
    }

    #[test]
    fn right_singular_vectors_follow_phase_convention() {
        let (scn, layout) = reference(12);
        let ch = build_channel(&scn, &layout, 3).unwrap();
        for k in 0..3 {
            let first = ch.v1.column(k).iter().copied().find(|z| z.norm() > 1e-12).unwrap();
            assert!(first.im.abs() < 1e-12 && first.re > 0.0);
            let recon = &ch.h_tilde * ch.v1.column(k);
            let expect = ch.u1.column(k) * C64::new(ch.singular_values[k], 0.0);
            assert!((recon - expect).norm() < 1e-10);
        }
    }

    #[test]
    fn eigenvalues_match_gram_spectrum() {
        let (scn, layout) = reference(10);
        let ch = build_channel(&scn, &layout, 4).unwrap();
        let (vals, _) = crate::linalg::hermitian_eigen(&(ch.h_tilde.adjoint() * &ch.h_tilde));
        let lam = ch.eigenvalues();
        for k in 0..4 {
            let v = vals[vals.len() - 1 - k];
            assert!((v - lam[k]).abs() <= 1e-9 * lam[0]);
        }
    }

    #[test]
    fn eve_channel_printed_phase() {
        let f = 1e9;
        let c = SPEED_OF_LIGHT;
        let layout = NodeLayout::new(vec![-1.0, -0.2, 0.5], 4.0, 0.0).unwrap();
        let h = eve_channel(&layout, 0.0, 80.0, f, c).unwrap();
        let rho = attenuation_factor(80.0, f, c).unwrap();
        for z in h.iter() {
            assert!((z - C64::new(rho, 0.0)).norm() < 1e-18);
        }
        let pair = NodeLayout::new(vec![-1.0, 1.0], c / (2.0 * f), 0.0).unwrap();
        let h = eve_channel(&pair, PI / 2.0, 10.0, f, c).unwrap();
        let rho = attenuation_factor(10.0, f, c).unwrap();
        assert!((h[0] / rho - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((h[1] / rho - C64::new(-1.0, 0.0)).norm() < 1e-12);
        assert!((h[0] - h[1].conj()).norm() < 1e-15);
        let h = eve_channel(&layout, 0.7, 80.0, f, c).unwrap();
        let rho = attenuation_factor(80.0, f, c).unwrap();
        assert!((h.norm() - rho * 3f64.sqrt()).abs() < 1e-18);
    }

    #[test]
    fn departure_channel_matches_transmit_factor_at_bs() {
        let (scn, layout) = reference(8);
        let ch = build_channel(&scn, &layout, 1).unwrap();
        let h = departure_channel(&layout, &scn.bs_center, scn.carrier_frequency, scn.wave_speed)
            .unwrap();
        for l in 0..8 {
            assert!((h[l] - (ch.b_a[l] * ch.attenuation).conj()).norm() < 1e-15);
        }
    }

    #[test]
    fn jammer_steering_vectors() {
        let f = 1e9;
        let c = SPEED_OF_LIGHT;
        let lambda = c / f;
        let a = jammer_steering(0.0, 6, lambda / 2.0, f, c);
        assert!(a.iter().all(|z| (z - C64::new(1.0, 0.0)).norm() < 1e-15));
        let a = jammer_steering(0.4, 9, 0.15, f, c);
        assert!((a.norm() - 3.0).abs() < 1e-12);
        // d sin ϑ = λ/2 → consecutive phases differ by k·(λ/2)/2 = π/2.
        let a = jammer_steering(PI / 2.0, 2, lambda / 2.0, f, c);
        let dphi = (a[1] / a[0]).arg();
        assert!((dphi + PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn uncertainty_ball_sampling() {
        let zero = EveChannel::new(CVec::zeros(4), 0.0).unwrap();
        assert_eq!(sample_eve_uncertainty(&zero, 3), CVec::zeros(4));

        let ech = EveChannel::new(CVec::zeros(16), 0.3).unwrap();
        assert_eq!(sample_eve_uncertainty(&ech, 7), sample_eve_uncertainty(&ech, 7));
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut max = 0.0f64;
        for _ in 0..10_000 {
            let d = sample_ball(16, 0.3, &mut rng).norm();
            assert!(d <= 0.3 + 1e-15);
            max = max.max(d);
        }
        assert!(max > 0.95 * 0.3);

        let ech = ech.with_sample(5);
        let t = ech.true_sample.as_ref().unwrap();
        assert!((t - &ech.estimate).norm() <= 0.3);
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(32))]
        #[test]
        fn permuting_nodes_permutes_columns(
            delta in proptest::collection::vec(-1.0f64..1.0, 3..8),
            rot in -0.5f64..0.5,
            swap in 0usize..100,
        ) {
            let scn = Scenario::default();
            let omega = small_parameter(&scn, 4.0);
            let a = normalized_channel(32, &delta, omega, rot);
            let mut perm = delta.clone();
            let (i, j) = (swap % perm.len(), (swap / 7) % perm.len());
            perm.swap(i, j);
            let b = normalized_channel(32, &perm, omega, rot);
            for r in 0..32 {
                prop_assert!((a[(r, i)] - b[(r, j)]).norm() < 1e-15);
            }
            let sa = a.singular_values();
            let sb = b.singular_values();
            let mut sa: Vec<f64> = sa.iter().copied().collect();
            let mut sb: Vec<f64> = sb.iter().copied().collect();
            sa.sort_by(f64::total_cmp);
            sb.sort_by(f64::total_cmp);
            for (x, y) in sa.iter().zip(&sb) {
                prop_assert!((x - y).abs() < 1e-10 * sa.last().unwrap());
            }
        }

        #[test]
        fn channel_invariants_hold_for_random_layouts(
            delta in proptest::collection::vec(-1.0f64..1.0, 2..10),
            d in 1.0f64..8.0,
            rot in -1.0f64..1.0,
        ) {
            let scn = Scenario::default();
            let layout = NodeLayout::new(delta, d, rot).unwrap();
            let ch = build_channel(&scn, &layout, 1).unwrap();
            check_invariants(&ch);
        }
    }

    #[test]
    fn planar_channel_from_positions() {
        let scn = Scenario { bs_array: BsArray::Planar(4, 4), ..Scenario::default() };
        let elems = bs_positions(&scn).unwrap();
        let nodes = vec![Point3::new(-1.0, 0.0, 0.0), Point3::new(1.0, 0.0, 0.0)];
        let ch = from_positions(&nodes, &elems, scn.range(), 1e9, SPEED_OF_LIGHT, 2).unwrap();
        assert_eq!(ch.h.shape(), (16, 2));
        check_invariants(&ch);
    }
}

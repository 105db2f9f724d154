//! Scenario description and 3D geometry of the virtual transmit array, the
//! ground base-station array and the eavesdroppers.
//!
//! The virtual array is centred at the origin in the `z = 0` plane. Node `l`
//! sits at `(Dδ_l cos φ / 2, Dδ_l sin φ / 2, 0)` where `φ` is the rotation
//! offset. The base-station ULA lies along `x` around `bs_center`.
//!
//! Indices are zero-based throughout the crate.

use nalgebra::Vector3;

use crate::error::{Error, Result};

pub type Point3 = Vector3<f64>;

pub const SPEED_OF_LIGHT: f64 = 2.998e8;

/// Shape of the base-station array.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsArray {
    Linear(usize),
    Planar(usize, usize),
}

impl BsArray {
    pub fn len(&self) -> usize {
        match *self {
            BsArray::Linear(n) => n,
            BsArray::Planar(nx, ny) => nx * ny,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EveModel {
    pub position: Point3,
    /// Norm bound on the channel estimation error, in channel-vector units.
    pub uncertainty_radius: f64,
}

/// A full-duplex eavesdropper that also jams the base station.
#[derive(Debug, Clone, PartialEq)]
pub struct Jammer {
    /// Index into [`Scenario::eves`] of the emitting eavesdropper.
    pub eve: usize,
    /// Jamming power in watts.
    pub power: f64,
}

/// Physical constants, positions, noise levels and security thresholds of one
/// experiment. Powers are in watts and SNRs are linear.
#[derive(Debug, Clone, PartialEq)]
pub struct Scenario {
    pub carrier_frequency: f64,
    pub wave_speed: f64,
    pub bs_center: Point3,
    pub bs_array: BsArray,
    pub bs_spacing: f64,
    pub eves: Vec<EveModel>,
    pub jammers: Vec<Jammer>,
    pub noise_power_bs: f64,
    pub noise_power_eve: f64,
    pub eve_snr_tolerance: f64,
    pub max_node_power: f64,
    pub qos_snr: f64,
    pub rng_seed: u64,
}

impl Default for Scenario {
    /// The reference scenario: BS at (−22, 127, 75) m, two eavesdroppers at
    /// (−95, 88, 75) m and (104, 78, 75) m, 1 GHz carrier, 32-element BS,
    /// P_max = 0 dBm, −100 dBm noise and a 0 dB eavesdropper tolerance.
    fn default() -> Self {
        let f = 1e9;
        Scenario {
            carrier_frequency: f,
            wave_speed: SPEED_OF_LIGHT,
            bs_center: Point3::new(-22.0, 127.0, 75.0),
            bs_array: BsArray::Linear(32),
            bs_spacing: SPEED_OF_LIGHT / (2.0 * f),
            eves: vec![
                EveModel { position: Point3::new(-95.0, 88.0, 75.0), uncertainty_radius: 0.0 },
                EveModel { position: Point3::new(104.0, 78.0, 75.0), uncertainty_radius: 0.0 },
            ],
            jammers: vec![Jammer { eve: 0, power: 1e-7 }, Jammer { eve: 1, power: 1e-7 }],
            noise_power_bs: 1e-13,
            noise_power_eve: 1e-13,
            eve_snr_tolerance: 1.0,
            max_node_power: 1e-3,
            qos_snr: 100.0,
            rng_seed: 0,
        }
    }
}

impl Scenario {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidParameter(m.to_string()));
        if !(self.carrier_frequency > 0.0 && self.carrier_frequency.is_finite()) {
            return bad("carrier_frequency must be positive");
        }
        if !(self.wave_speed > 0.0 && self.wave_speed.is_finite()) {
            return bad("wave_speed must be positive");
        }
        if !(self.bs_spacing > 0.0 && self.bs_spacing.is_finite()) {
            return bad("bs_spacing must be positive");
        }
        if self.bs_array.is_empty() {
            return bad("base station needs at least one element");
        }
        for (name, p) in [
            ("noise_power_bs", self.noise_power_bs),
            ("noise_power_eve", self.noise_power_eve),
            ("max_node_power", self.max_node_power),
            ("qos_snr", self.qos_snr),
        ] {
            if p.is_nan() || p < 0.0 {
                return Err(Error::InvalidParameter(format!("{name} must be non-negative")));
            }
        }
        if !(self.eve_snr_tolerance > 0.0) {
            return bad("eve_snr_tolerance must be positive");
        }
        for e in &self.eves {
            if e.uncertainty_radius.is_nan() || e.uncertainty_radius < 0.0 {
                return bad("uncertainty_radius must be non-negative");
            }
        }
        for j in &self.jammers {
            if j.eve >= self.eves.len() {
                return Err(Error::IndexOutOfRange { index: j.eve, len: self.eves.len() });
            }
            if j.power.is_nan() || j.power < 0.0 {
                return bad("jammer power must be non-negative");
            }
        }
        if self.range() == 0.0 {
            return Err(Error::DegenerateGeometry("bs_center at origin"));
        }
        Ok(())
    }

    pub fn wavelength(&self) -> f64 {
        self.wave_speed / self.carrier_frequency
    }

    pub fn wavenumber(&self) -> f64 {
        2.0 * std::f64::consts::PI * self.carrier_frequency / self.wave_speed
    }

    /// Distance `R` from the virtual-array centre to the BS centre.
    pub fn range(&self) -> f64 {
        self.bs_center.norm()
    }

    /// Elevation `θ = arccos(z/R)`.
    pub fn elevation(&self) -> f64 {
        (self.bs_center.z / self.range()).clamp(-1.0, 1.0).acos()
    }

    /// Azimuth `φ = atan2(y, x)` of the BS seen from the array centre.
    pub fn azimuth(&self) -> f64 {
        self.bs_center.y.atan2(self.bs_center.x)
    }

    /// Ratio `R / (D·N·d)`. The far-field model wants this well above one;
    /// the scenario is not rejected when it is not.
    pub fn far_field_margin(&self, aperture: f64) -> f64 {
        self.range() / (aperture * self.bs_array.len() as f64 * self.bs_spacing)
    }
}

/// Normalized node spacings with the physical aperture and rotation offset.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeLayout {
    delta: Vec<f64>,
    pub aperture: f64,
    pub rotation: f64,
}

impl NodeLayout {
    /// Builds a layout, sorting `delta` into canonical non-decreasing order.
    pub fn new(mut delta: Vec<f64>, aperture: f64, rotation: f64) -> Result<Self> {
        if delta.is_empty() {
            return Err(Error::InvalidParameter("layout needs at least one node".into()));
        }
        if let Some(d) = delta.iter().find(|d| !(d.abs() <= 1.0)) {
            return Err(Error::InvalidParameter(format!("spacing {d} outside [-1, 1]")));
        }
        if !(aperture > 0.0 && aperture.is_finite()) {
            return Err(Error::InvalidParameter("aperture must be positive".into()));
        }
        if !rotation.is_finite() {
            return Err(Error::InvalidParameter("rotation must be finite".into()));
        }
        delta.sort_by(f64::total_cmp);
        Ok(NodeLayout { delta, aperture, rotation })
    }

    /// Uniform spacing over `[-1, 1]`, the ULA baseline.
    pub fn uniform(l: usize, aperture: f64, rotation: f64) -> Result<Self> {
        let delta = if l == 1 {
            vec![0.0]
        } else {
            (0..l).map(|i| -1.0 + 2.0 * i as f64 / (l - 1) as f64).collect()
        };
        NodeLayout::new(delta, aperture, rotation)
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.delta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.delta.is_empty()
    }

    pub fn with_rotation(&self, rotation: f64) -> Self {
        NodeLayout { rotation, ..self.clone() }
    }
}

/// Two-axis layout of a planar virtual array.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarLayout {
    pub delta_x: Vec<f64>,
    pub delta_y: Vec<f64>,
    pub aperture_x: f64,
    pub aperture_y: f64,
    pub rotation: f64,
}

impl PlanarLayout {
    /// Node positions in row-major order (`x` index fastest), rotated by
    /// `rotation` about `z`.
    pub fn positions(&self) -> Vec<Point3> {
        let (s, c) = self.rotation.sin_cos();
        let mut out = Vec::with_capacity(self.delta_x.len() * self.delta_y.len());
        for &dy in &self.delta_y {
            for &dx in &self.delta_x {
                let x = self.aperture_x * dx / 2.0;
                let y = self.aperture_y * dy / 2.0;
                out.push(Point3::new(c * x - s * y, s * x + c * y, 0.0));
            }
        }
        out
    }
}

pub fn aav_node_position(layout: &NodeLayout, l: usize) -> Result<Point3> {
    let d = *layout
        .delta
        .get(l)
        .ok_or(Error::IndexOutOfRange { index: l, len: layout.len() })?;
    let r = layout.aperture * d / 2.0;
    Ok(Point3::new(r * layout.rotation.cos(), r * layout.rotation.sin(), 0.0))
}

/// Signed offset `(2n+1−N)/2` of element `n` (zero-based) from the centre, in units of `d`.
pub(crate) fn centered_offset(n: usize, count: usize) -> f64 {
    (2.0 * n as f64 + 1.0 - count as f64) / 2.0
}

pub fn bs_element_position(scn: &Scenario, n: usize) -> Result<Point3> {
    if scn.range() == 0.0 {
        return Err(Error::DegenerateGeometry("bs_center at origin"));
    }
    let count = scn.bs_array.len();
    if n >= count {
        return Err(Error::IndexOutOfRange { index: n, len: count });
    }
    let offset = match scn.bs_array {
        BsArray::Linear(nn) => Point3::new(centered_offset(n, nn) * scn.bs_spacing, 0.0, 0.0),
        BsArray::Planar(nx, ny) => Point3::new(
            centered_offset(n % nx, nx) * scn.bs_spacing,
            centered_offset(n / nx, ny) * scn.bs_spacing,
            0.0,
        ),
    };
    Ok(scn.bs_center + offset)
}

/// How [`propagation_range`] evaluates the node-to-element distance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RangeMode {
    Exact,
    /// Second-order far-field expansion about the two array centres.
    Approx,
}

pub fn distance(p: &Point3, q: &Point3) -> f64 {
    (p - q).norm()
}

/// Range between node `l` and linear-array BS element `n`.
pub fn propagation_range(
    scn: &Scenario,
    layout: &NodeLayout,
    n: usize,
    l: usize,
    mode: RangeMode,
) -> Result<f64> {
    let node = aav_node_position(layout, l)?;
    let elem = bs_element_position(scn, n)?;
    match mode {
        RangeMode::Exact => Ok(distance(&node, &elem)),
        RangeMode::Approx => {
            let count = match scn.bs_array {
                BsArray::Linear(nn) => nn,
                BsArray::Planar(..) => {
                    return Err(Error::InvalidParameter("approximate range needs a linear BS".into()))
                }
            };
            let r = scn.range();
            let (st, phi) = (scn.elevation().sin(), scn.azimuth());
            let g = centered_offset(n, count) * scn.bs_spacing;
            let a = layout.aperture * layout.delta[l];
            let rot = layout.rotation;
            Ok(r + g * g / (2.0 * r) + g * st * phi.cos()
                - g * a * rot.cos() / (2.0 * r)
                - a * st * (phi - rot).cos() / 2.0
                + a * a / (8.0 * r))
        }
    }
}

/// Azimuth (`atan2(y, x)`) and range of an eavesdropper seen from the array centre.
pub fn eve_departure_geometry(eve: &EveModel) -> Result<(f64, f64)> {
    let r = eve.position.norm();
    if r == 0.0 {
        return Err(Error::DegenerateGeometry("eavesdropper at origin"));
    }
    Ok((eve.position.y.atan2(eve.position.x), r))
}

/// Angle of an eavesdropper from the broadside of the BS array (along `x`).
pub fn jammer_arrival_angle(scn: &Scenario, eve: &EveModel) -> Result<f64> {
    let delta = eve.position - scn.bs_center;
    let r = delta.norm();
    if r == 0.0 {
        return Err(Error::DegenerateGeometry("eavesdropper coincides with bs_center"));
    }
    Ok((delta.x / r).clamp(-1.0, 1.0).asin())
}

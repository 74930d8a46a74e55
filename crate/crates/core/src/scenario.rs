//! Immutable problem data: geometry, carrier grid, power/noise/QoS parameters,
//! algorithm hyperparameters, and reproducible random user drops.
//!
//! All powers are stored in watts (dBm figures are converted at ingestion) and
//! all rates are in bits/s/Hz.

use crate::error::{Error, Result};
use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Propagation speed used for every wavelength conversion, m/s.
pub const SPEED_OF_LIGHT: f64 = 3.0e8;

/// Convert a dBm figure to watts.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

/// Convert watts to dBm.
pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Uniform f64 in [0, 1) built from the top 53 bits of one RNG draw.
///
/// Kept explicit so drop generation is bit-stable regardless of the `rand`
/// distribution internals.
pub(crate) fn unit_f64(rng: &mut impl RngCore) -> f64 {
    (rng.next_u64() >> 11) as f64 * (1.0 / (1u64 << 53) as f64)
}

/// A point in Cartesian coordinates, meters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Position3D {
    pub x: f64,
    pub y: f64,
    pub z: f64,
}

impl Position3D {
    pub fn new(x: f64, y: f64, z: f64) -> Self {
        Self { x, y, z }
    }

    pub fn distance(&self, other: &Self) -> f64 {
        let dx = self.x - other.x;
        let dy = self.y - other.y;
        let dz = self.z - other.z;
        (dx * dx + dy * dy + dz * dz).sqrt()
    }

    pub fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite() && self.z.is_finite()
    }
}

/// One dielectric waveguide: a straight line at constant (y, z) spanning
/// x in [0, length], fed at `feed_point`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Waveguide {
    pub index: usize,
    pub feed_point: Position3D,
    /// Constant y of the guide axis.
    pub axis_y: f64,
    /// Constant z of the guide axis.
    pub height: f64,
    /// Guide length D, meters.
    pub length: f64,
    /// In-guide absorption coefficient, per meter.
    pub absorption: f64,
    /// Effective refractive index (>= 1).
    pub eta_eff: f64,
}

impl Waveguide {
    /// World coordinates of an antenna at axial position `x`.
    pub fn pa_position(&self, x: f64) -> Position3D {
        Position3D::new(x, self.axis_y, self.height)
    }

    pub fn validate(&self) -> Result<()> {
        if self.feed_point.y != self.axis_y || self.feed_point.z != self.height {
            return Err(Error::InvalidParameter(format!(
                "waveguide {}: feed point must lie on the guide axis",
                self.index
            )));
        }
        if !(self.length > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "waveguide {}: length must be positive",
                self.index
            )));
        }
        if self.absorption < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "waveguide {}: absorption must be nonnegative",
                self.index
            )));
        }
        if self.eta_eff < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "waveguide {}: effective refractive index must be >= 1",
                self.index
            )));
        }
        if self.height < 0.0 {
            return Err(Error::InvalidParameter(format!(
                "waveguide {}: height must be nonnegative",
                self.index
            )));
        }
        Ok(())
    }
}

/// Carrier frequencies f_l centered on f_c with uniform spacing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CarrierGrid {
    center_frequency: f64,
    spacing: f64,
    frequencies: Vec<f64>,
}

impl CarrierGrid {
    pub fn new(count: usize, center_frequency: f64, spacing: f64) -> Result<Self> {
        if count == 0 {
            return Err(Error::InvalidParameter("carrier count must be >= 1".into()));
        }
        if !(center_frequency > 0.0) {
            return Err(Error::InvalidParameter(
                "carrier center frequency must be positive".into(),
            ));
        }
        if spacing < 0.0 {
            return Err(Error::InvalidParameter(
                "carrier spacing must be nonnegative".into(),
            ));
        }
        let mid = (count as f64 - 1.0) / 2.0;
        let frequencies: Vec<f64> = (0..count)
            .map(|l| center_frequency + (l as f64 - mid) * spacing)
            .collect();
        if frequencies.iter().any(|&f| !(f > 0.0)) {
            return Err(Error::InvalidParameter(
                "carrier spacing places a carrier at nonpositive frequency".into(),
            ));
        }
        Ok(Self {
            center_frequency,
            spacing,
            frequencies,
        })
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn frequency(&self, l: usize) -> f64 {
        self.frequencies[l]
    }

    pub fn wavelength(&self, l: usize) -> f64 {
        SPEED_OF_LIGHT / self.frequencies[l]
    }

    pub fn center_frequency(&self) -> f64 {
        self.center_frequency
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn center_wavelength(&self) -> f64 {
        SPEED_OF_LIGHT / self.center_frequency
    }
}

/// A fully instantiated problem: users are fixed.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scenario {
    pub users: Vec<Position3D>,
    pub waveguides: Vec<Waveguide>,
    /// Antennas per waveguide (N).
    pub pas_per_guide: usize,
    pub carriers: CarrierGrid,
    /// Noise power sigma^2, watts.
    pub noise_power: f64,
    /// Total transmit power budget, watts.
    pub p_max: f64,
    /// Per-user minimum rate, bits/s/Hz.
    pub r_min: f64,
    /// Minimum spacing between adjacent antennas on a guide, meters.
    pub d_min: f64,
    pub rng_seed: u64,
}

impl Scenario {
    pub fn num_users(&self) -> usize {
        self.users.len()
    }

    pub fn num_guides(&self) -> usize {
        self.waveguides.len()
    }

    pub fn num_carriers(&self) -> usize {
        self.carriers.len()
    }

    /// Guide length D (identical for all guides).
    pub fn guide_length(&self) -> f64 {
        self.waveguides[0].length
    }

    pub fn validate(&self) -> Result<()> {
        if self.users.is_empty() {
            return Err(Error::InvalidParameter("need at least one user".into()));
        }
        if self.waveguides.is_empty() {
            return Err(Error::InvalidParameter("need at least one waveguide".into()));
        }
        if self.pas_per_guide == 0 {
            return Err(Error::InvalidParameter(
                "need at least one antenna per guide".into(),
            ));
        }
        for user in &self.users {
            if !user.is_finite() || user.z != 0.0 {
                return Err(Error::InvalidParameter(
                    "users must have finite coordinates at z = 0".into(),
                ));
            }
        }
        for guide in &self.waveguides {
            guide.validate()?;
        }
        let len0 = self.waveguides[0].length;
        if self.waveguides.iter().any(|g| g.length != len0) {
            return Err(Error::InvalidParameter(
                "all waveguides must share the same length".into(),
            ));
        }
        if !(self.noise_power > 0.0) {
            return Err(Error::InvalidParameter("noise power must be positive".into()));
        }
        if !(self.p_max > 0.0) {
            return Err(Error::InvalidParameter("power budget must be positive".into()));
        }
        if !(self.d_min > 0.0) {
            return Err(Error::InvalidParameter(
                "minimum antenna spacing must be positive".into(),
            ));
        }
        if self.r_min < 0.0 {
            return Err(Error::InvalidParameter(
                "minimum rate must be nonnegative".into(),
            ));
        }
        Ok(())
    }
}

/// Rectangle users are dropped in, at z = 0.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Region {
    pub x_min: f64,
    pub x_max: f64,
    pub y_min: f64,
    pub y_max: f64,
}

impl Region {
    pub fn validate(&self) -> Result<()> {
        if self.x_max < self.x_min || self.y_max < self.y_min {
            return Err(Error::InvalidRegion(format!(
                "x: [{}, {}], y: [{}, {}]",
                self.x_min, self.x_max, self.y_min, self.y_max
            )));
        }
        Ok(())
    }

    pub fn center_x(&self) -> f64 {
        0.5 * (self.x_min + self.x_max)
    }
}

/// Line-search hyperparameters for antenna positioning, plus the outer-loop
/// stopping rule.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlacementConfig {
    /// Search interval length s around the current position, meters.
    pub search_span: f64,
    /// Search step, meters.
    pub search_step: f64,
    /// Inter-antenna spacing used by the coarse comb layout, meters.
    pub inter_pa_spacing: f64,
    pub max_outer_iters: usize,
    /// Outer loop stops when the best sum rate has not improved by more than
    /// this for `patience` consecutive iterations.
    pub outer_tol: f64,
    pub patience: usize,
}

impl PlacementConfig {
    pub fn validate(&self, d_min: f64) -> Result<()> {
        if !(self.search_step > 0.0) {
            return Err(Error::InvalidParameter("search step must be positive".into()));
        }
        if self.search_span < 0.0 {
            return Err(Error::InvalidParameter(
                "search span must be nonnegative".into(),
            ));
        }
        if self.inter_pa_spacing < d_min {
            return Err(Error::InvalidParameter(
                "inter-antenna spacing must be >= d_min".into(),
            ));
        }
        Ok(())
    }
}

/// Subgradient step sizes and bisection controls for the beamforming stage.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BeamformerConfig {
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    /// Relative band for the bisection power target.
    pub bisect_tol: f64,
    /// Stop the inner loop when the sum-rate change drops below this.
    pub inner_tol: f64,
    pub max_inner_iters: usize,
}

impl BeamformerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.delta1 > 0.0 && self.delta2 > 0.0 && self.delta3 > 0.0) {
            return Err(Error::InvalidParameter("step sizes must be positive".into()));
        }
        if !(self.mu_min >= 0.0 && self.mu_min < self.mu_max) {
            return Err(Error::InvalidParameter(
                "need 0 <= mu_min < mu_max".into(),
            ));
        }
        if !(self.bisect_tol > 0.0 && self.bisect_tol < 1.0) {
            return Err(Error::InvalidParameter(
                "bisection tolerance must be in (0, 1)".into(),
            ));
        }
        Ok(())
    }
}

/// Everything needed to instantiate scenarios: the problem data minus the
/// user positions, plus the drop region.
#[derive(Debug, Clone)]
pub struct ScenarioTemplate {
    pub num_users: usize,
    pub waveguides: Vec<Waveguide>,
    pub pas_per_guide: usize,
    pub carriers: CarrierGrid,
    pub noise_power: f64,
    pub p_max: f64,
    pub r_min: f64,
    pub d_min: f64,
    pub region: Region,
    /// Std of the antenna-position error used in imperfect-CSI evaluation,
    /// meters. Zero disables the evaluation.
    pub sigma_pos: f64,
    pub placement: PlacementConfig,
    pub beamformer: BeamformerConfig,
}

impl ScenarioTemplate {
    /// Draw K user positions uniformly i.i.d. in the region at z = 0.
    ///
    /// Identical (template, seed) pairs yield bitwise-identical scenarios.
    pub fn generate_drop(&self, seed: u64) -> Result<Scenario> {
        self.region.validate()?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let users = (0..self.num_users)
            .map(|_| {
                let x = self.region.x_min + unit_f64(&mut rng) * (self.region.x_max - self.region.x_min);
                let y = self.region.y_min + unit_f64(&mut rng) * (self.region.y_max - self.region.y_min);
                Position3D::new(x, y, 0.0)
            })
            .collect();
        let scenario = Scenario {
            users,
            waveguides: self.waveguides.clone(),
            pas_per_guide: self.pas_per_guide,
            carriers: self.carriers.clone(),
            noise_power: self.noise_power,
            p_max: self.p_max,
            r_min: self.r_min,
            d_min: self.d_min,
            rng_seed: seed,
        };
        scenario.validate()?;
        self.placement.validate(self.d_min)?;
        self.beamformer.validate()?;
        Ok(scenario)
    }
}

/// Flat key-value config file, keys mirroring the usual simulation-parameter
/// table names. dB/dBm entries are converted to linear units on `resolve`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TemplateConfig {
    pub num_users: usize,
    pub num_waveguides: usize,
    pub pas_per_guide: usize,
    pub num_carriers: usize,
    pub carrier_frequency_hz: f64,
    pub carrier_spacing_hz: f64,
    pub waveguide_length_m: f64,
    pub waveguide_height_m: f64,
    pub feed_x_m: f64,
    /// Guide axis y positions; default is -5/+5 for two guides, evenly
    /// spaced in [-5, 5] otherwise.
    pub waveguide_y_m: Option<Vec<f64>>,
    pub absorption_per_m: f64,
    pub eta_eff: f64,
    pub noise_dbm: f64,
    pub p_max_dbm: f64,
    pub r_min_bps_hz: f64,
    /// User-drop rectangle; defaults to the square of side D centered
    /// between the waveguides: x in [0, D], y in [-D/2, D/2].
    pub region_x_min_m: Option<f64>,
    pub region_x_max_m: Option<f64>,
    pub region_y_min_m: Option<f64>,
    pub region_y_max_m: Option<f64>,
    /// Minimum antenna spacing; defaults to half the center-frequency
    /// wavelength.
    pub min_pa_spacing_m: Option<f64>,
    pub sigma_pos_m: f64,
    pub rng_seed: u64,
    pub search_step_m: f64,
    /// Defaults to 20 * search_step_m.
    pub search_span_m: Option<f64>,
    /// Coarse comb spacing; defaults to the minimum antenna spacing.
    pub inter_pa_spacing_m: Option<f64>,
    pub max_outer_iters: usize,
    pub outer_tol: f64,
    pub patience: usize,
    pub delta1: f64,
    pub delta2: f64,
    pub delta3: f64,
    pub mu_min: f64,
    pub mu_max: f64,
    pub bisect_tol: f64,
    pub inner_tol: f64,
    pub max_inner_iters: usize,
}

impl Default for TemplateConfig {
    fn default() -> Self {
        Self {
            num_users: 4,
            num_waveguides: 2,
            pas_per_guide: 2,
            num_carriers: 3,
            carrier_frequency_hz: 28.0e9,
            carrier_spacing_hz: 400.0e6,
            waveguide_length_m: 6.0,
            waveguide_height_m: 3.0,
            feed_x_m: 0.0,
            waveguide_y_m: None,
            absorption_per_m: 0.01,
            eta_eff: 1.4,
            noise_dbm: -70.0,
            p_max_dbm: 25.0,
            r_min_bps_hz: 0.1,
            region_x_min_m: None,
            region_x_max_m: None,
            region_y_min_m: None,
            region_y_max_m: None,
            min_pa_spacing_m: None,
            sigma_pos_m: 0.0,
            rng_seed: 1,
            search_step_m: 0.002,
            search_span_m: None,
            inter_pa_spacing_m: None,
            max_outer_iters: 100,
            outer_tol: 1e-3,
            patience: 10,
            delta1: 0.05,
            delta2: 0.05,
            delta3: 0.05,
            mu_min: 1e-12,
            mu_max: 1.0,
            bisect_tol: 1e-4,
            inner_tol: 1e-4,
            max_inner_iters: 200,
        }
    }
}

impl TemplateConfig {
    pub fn from_toml_str(s: &str) -> Result<Self> {
        toml::from_str(s).map_err(|e| Error::ConfigParse(e.to_string()))
    }

    /// Default guide axis positions for `m` guides.
    fn default_guide_ys(m: usize) -> Vec<f64> {
        if m == 1 {
            vec![0.0]
        } else {
            (0..m)
                .map(|i| -5.0 + 10.0 * i as f64 / (m as f64 - 1.0))
                .collect()
        }
    }

    /// Turn the flat config into a validated template with all derived
    /// defaults filled in.
    pub fn resolve(&self) -> Result<ScenarioTemplate> {
        let carriers = CarrierGrid::new(
            self.num_carriers,
            self.carrier_frequency_hz,
            self.carrier_spacing_hz,
        )?;
        let d_min = self
            .min_pa_spacing_m
            .unwrap_or_else(|| carriers.center_wavelength() / 2.0);
        let ys = match &self.waveguide_y_m {
            Some(v) => {
                if v.len() != self.num_waveguides {
                    return Err(Error::InvalidParameter(format!(
                        "waveguide_y_m has {} entries but num_waveguides = {}",
                        v.len(),
                        self.num_waveguides
                    )));
                }
                v.clone()
            }
            None => Self::default_guide_ys(self.num_waveguides),
        };
        let waveguides: Vec<Waveguide> = ys
            .iter()
            .enumerate()
            .map(|(i, &y)| Waveguide {
                index: i,
                feed_point: Position3D::new(self.feed_x_m, y, self.waveguide_height_m),
                axis_y: y,
                height: self.waveguide_height_m,
                length: self.waveguide_length_m,
                absorption: self.absorption_per_m,
                eta_eff: self.eta_eff,
            })
            .collect();
        let d = self.waveguide_length_m;
        let region = Region {
            x_min: self.region_x_min_m.unwrap_or(0.0),
            x_max: self.region_x_max_m.unwrap_or(d),
            y_min: self.region_y_min_m.unwrap_or(-d / 2.0),
            y_max: self.region_y_max_m.unwrap_or(d / 2.0),
        };
        let placement = PlacementConfig {
            search_span: self.search_span_m.unwrap_or(20.0 * self.search_step_m),
            search_step: self.search_step_m,
            inter_pa_spacing: self.inter_pa_spacing_m.unwrap_or(d_min),
            max_outer_iters: self.max_outer_iters,
            outer_tol: self.outer_tol,
            patience: self.patience,
        };
        let beamformer = BeamformerConfig {
            delta1: self.delta1,
            delta2: self.delta2,
            delta3: self.delta3,
            mu_min: self.mu_min,
            mu_max: self.mu_max,
            bisect_tol: self.bisect_tol,
            inner_tol: self.inner_tol,
            max_inner_iters: self.max_inner_iters,
        };
        let template = ScenarioTemplate {
            num_users: self.num_users,
            waveguides,
            pas_per_guide: self.pas_per_guide,
            carriers,
            noise_power: dbm_to_watts(self.noise_dbm),
            p_max: dbm_to_watts(self.p_max_dbm),
            r_min: self.r_min_bps_hz,
            d_min,
            region,
            sigma_pos: self.sigma_pos_m,
            placement,
            beamformer,
        };
        template.region.validate()?;
        template.placement.validate(template.d_min)?;
        template.beamformer.validate()?;
        Ok(template)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_defaults_resolve() {
        let cfg = TemplateConfig::default();
        let t = cfg.resolve().unwrap();
        assert_eq!(t.num_users, 4);
        assert_eq!(t.waveguides.len(), 2);
        assert_eq!(t.carriers.len(), 3);
        assert_eq!(t.carriers.center_frequency(), 28.0e9);
        assert_eq!(t.waveguides[0].feed_point, Position3D::new(0.0, -5.0, 3.0));
        assert_eq!(t.waveguides[1].feed_point, Position3D::new(0.0, 5.0, 3.0));
        assert_eq!(t.waveguides[0].height, 3.0);
        assert_eq!(t.waveguides[0].absorption, 0.01);
        assert!((t.noise_power - 1e-10).abs() < 1e-24);
        assert!((t.p_max - dbm_to_watts(25.0)).abs() < 1e-15);
        // default minimum spacing is half the center wavelength
        assert!((t.d_min - SPEED_OF_LIGHT / 28.0e9 / 2.0).abs() < 1e-15);
        // default region: square of side D centered between the guides
        assert_eq!(t.region.x_min, 0.0);
        assert_eq!(t.region.x_max, 6.0);
        assert_eq!(t.region.y_min, -3.0);
        assert_eq!(t.region.y_max, 3.0);
        let s = t.generate_drop(7).unwrap();
        s.validate().unwrap();
    }

    #[test]
    fn drops_are_reproducible() {
        let t = TemplateConfig::default().resolve().unwrap();
        let a = t.generate_drop(42).unwrap();
        let b = t.generate_drop(42).unwrap();
        for (u, v) in a.users.iter().zip(&b.users) {
            assert_eq!(u.x.to_bits(), v.x.to_bits());
            assert_eq!(u.y.to_bits(), v.y.to_bits());
        }
        let c = t.generate_drop(43).unwrap();
        assert!(a.users.iter().zip(&c.users).any(|(u, v)| u.x != v.x));
    }

    #[test]
    fn collapsed_region_pins_user() {
        let mut cfg = TemplateConfig::default();
        cfg.num_users = 1;
        cfg.region_x_min_m = Some(1.25);
        cfg.region_x_max_m = Some(1.25);
        cfg.region_y_min_m = Some(-0.5);
        cfg.region_y_max_m = Some(-0.5);
        let t = cfg.resolve().unwrap();
        let s = t.generate_drop(999).unwrap();
        assert_eq!(s.users[0], Position3D::new(1.25, -0.5, 0.0));
    }

    #[test]
    fn negative_region_rejected() {
        let mut cfg = TemplateConfig::default();
        cfg.region_x_min_m = Some(2.0);
        cfg.region_x_max_m = Some(1.0);
        let t = cfg.resolve();
        assert!(t.is_err());
    }

    #[test]
    fn wavelengths_match_frequencies() {
        let grid = CarrierGrid::new(3, 28.0e9, 400.0e6).unwrap();
        for l in 0..grid.len() {
            let prod = grid.wavelength(l) * grid.frequency(l);
            assert!((prod - SPEED_OF_LIGHT).abs() <= 2.0 * f64::EPSILON * SPEED_OF_LIGHT);
        }
        // wavelengths strictly decreasing in frequency
        assert!(grid.wavelength(0) > grid.wavelength(1));
        assert!(grid.wavelength(1) > grid.wavelength(2));
    }

    #[test]
    fn dbm_round_trip() {
        assert!((dbm_to_watts(-70.0) - 1e-10).abs() < 1e-24);
        assert!((watts_to_dbm(dbm_to_watts(25.0)) - 25.0).abs() < 1e-12);
    }

    #[test]
    fn toml_round_trip_with_overrides() {
        let text = r#"
num_users = 2
p_max_dbm = 10.0
waveguide_length_m = 9.0
"#;
        let cfg = TemplateConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.num_users, 2);
        let t = cfg.resolve().unwrap();
        assert_eq!(t.region.x_max, 9.0);
        assert!((t.p_max - 0.01).abs() < 1e-12);
    }

    #[test]
    fn unknown_key_rejected() {
        assert!(TemplateConfig::from_toml_str("nonsense_key = 3").is_err());
    }
}

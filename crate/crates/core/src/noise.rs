//! Pauli error channels and their binding to fault sites.

use rand::Rng;

use crate::circuit::{Axis, FaultSite, SiteKind};
use crate::error::{Error, Result};
use crate::pauli::{LocalPauli, Pauli};

/// Parameters of the ion-trap error model. Rates are per second, gate times
/// enter in microseconds through the sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseParams {
    pub p_xx: f64,
    pub p_x: f64,
    pub p_y: f64,
    pub p_z: f64,
    /// Heating rate `ṅ/2K` in quanta per second.
    pub r_heat: f64,
    pub p_dep: f64,
    /// Dephasing rate per second.
    pub r_d: f64,
    pub p_prep: f64,
    pub p_meas: f64,
}

impl NoiseParams {
    pub const ZERO: NoiseParams = NoiseParams {
        p_xx: 0.0,
        p_x: 0.0,
        p_y: 0.0,
        p_z: 0.0,
        r_heat: 0.0,
        p_dep: 0.0,
        r_d: 0.0,
        p_prep: 0.0,
        p_meas: 0.0,
    };

    /// Default coupling: rotation errors a tenth of `p_xx`, preparation at
    /// `p_dep`, measurement at the rotation rate.
    pub fn coupled(p_xx: f64, r_heat: f64, p_dep: f64, r_d: f64) -> Self {
        let p_sq = p_xx / 10.0;
        NoiseParams {
            p_xx,
            p_x: p_sq,
            p_y: p_sq,
            p_z: p_sq,
            r_heat,
            p_dep,
            r_d,
            p_prep: p_dep,
            p_meas: p_sq,
        }
    }

    /// The operating point where all sources compete.
    pub fn green_curve() -> Self {
        NoiseParams::coupled(1e-3, 25.0, 8e-4, 15.0)
    }

    pub fn validate(&self) -> Result<()> {
        let probs = [
            ("p_xx", self.p_xx),
            ("p_x", self.p_x),
            ("p_y", self.p_y),
            ("p_z", self.p_z),
            ("p_dep", self.p_dep),
            ("p_prep", self.p_prep),
            ("p_meas", self.p_meas),
        ];
        for (name, p) in probs {
            if !(0.0..=1.0).contains(&p) {
                return Err(Error::InvalidNoise(format!("{name} = {p} is not a probability")));
            }
        }
        for (name, r) in [("r_heat", self.r_heat), ("r_d", self.r_d)] {
            if !(r >= 0.0 && r.is_finite()) {
                return Err(Error::InvalidNoise(format!("{name} = {r} must be a finite non-negative rate")));
            }
        }
        Ok(())
    }
}

impl Default for NoiseParams {
    fn default() -> Self {
        NoiseParams::green_curve()
    }
}

/// Which error model drives the sites.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseModel {
    /// Circuit-level depolarizing noise at rate `p` after every gate and
    /// around SPAM.
    Depolarizing { p: f64 },
    IonTrap(NoiseParams),
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match self {
            NoiseModel::Depolarizing { p } if !(0.0..=1.0).contains(p) => {
                Err(Error::InvalidNoise(format!("p = {p} is not a probability")))
            }
            NoiseModel::Depolarizing { .. } => Ok(()),
            NoiseModel::IonTrap(params) => params.validate(),
        }
    }

    /// Channel acting at `site`, or `None` when the model has no error there.
    pub fn channel(&self, site: &FaultSite) -> Option<Channel> {
        match self {
            NoiseModel::Depolarizing { .. } => match site.kind {
                SiteKind::RotationError(_) | SiteKind::PrepDepolarizing | SiteKind::MeasDepolarizing => {
                    Some(Channel::Depolarizing1)
                }
                SiteKind::XxError => Some(Channel::Depolarizing2),
                SiteKind::CliffordError if site.arity == 2 => Some(Channel::Depolarizing2),
                SiteKind::CliffordError => Some(Channel::Depolarizing1),
                _ => None,
            },
            NoiseModel::IonTrap(_) if site.kind == SiteKind::CliffordError => None,
            NoiseModel::IonTrap(_) => Some(match site.kind {
                SiteKind::RotationError(axis) => Channel::OverRotation(axis),
                SiteKind::XxError => Channel::XxOverRotation,
                SiteKind::Heating => Channel::Heating,
                SiteKind::GateDepolarizing | SiteKind::PrepDepolarizing | SiteKind::MeasDepolarizing => {
                    Channel::Depolarizing1
                }
                SiteKind::Dephasing => Channel::Dephasing,
                SiteKind::CliffordError => unreachable!(),
            }),
        }
    }

    /// Probability that `site` suffers an error; zero where the model has
    /// no channel.
    pub fn site_probability(&self, site: &FaultSite) -> f64 {
        match self {
            NoiseModel::Depolarizing { p } => {
                if self.channel(site).is_some() {
                    *p
                } else {
                    0.0
                }
            }
            NoiseModel::IonTrap(n) => {
                let seconds = site.duration_us * 1e-6;
                match site.kind {
                    SiteKind::RotationError(Axis::X) => n.p_x,
                    SiteKind::RotationError(Axis::Y) => n.p_y,
                    SiteKind::RotationError(Axis::Z) => n.p_z,
                    SiteKind::XxError => n.p_xx,
                    SiteKind::Heating => (n.r_heat * seconds).min(1.0),
                    SiteKind::GateDepolarizing => n.p_dep,
                    SiteKind::Dephasing => (n.r_d * seconds).min(1.0),
                    SiteKind::PrepDepolarizing => n.p_prep,
                    SiteKind::MeasDepolarizing => n.p_meas,
                    SiteKind::CliffordError => 0.0,
                }
            }
        }
    }
}

/// Auxiliary error source swept on top of the gate errors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum AuxSource {
    Heating,
    Depolarizing,
    Dephasing,
}

impl AuxSource {
    pub const ALL: [AuxSource; 3] = [AuxSource::Heating, AuxSource::Depolarizing, AuxSource::Dephasing];

    /// Coupled gate errors at `p_xx` with only this source switched on.
    pub fn params(self, p_xx: f64, value: f64) -> NoiseParams {
        match self {
            AuxSource::Heating => NoiseParams::coupled(p_xx, value, 0.0, 0.0),
            AuxSource::Depolarizing => NoiseParams::coupled(p_xx, 0.0, value, 0.0),
            AuxSource::Dephasing => NoiseParams::coupled(p_xx, 0.0, 0.0, value),
        }
    }

    /// Value at the green-curve operating point.
    pub fn green_value(self) -> f64 {
        let g = NoiseParams::green_curve();
        match self {
            AuxSource::Heating => g.r_heat,
            AuxSource::Depolarizing => g.p_dep,
            AuxSource::Dephasing => g.r_d,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            AuxSource::Heating => "r_heat",
            AuxSource::Depolarizing => "p_dep",
            AuxSource::Dephasing => "r_d",
        }
    }
}

impl std::str::FromStr for AuxSource {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "r_heat" | "heating" => Ok(AuxSource::Heating),
            "p_dep" | "depolarizing" => Ok(AuxSource::Depolarizing),
            "r_d" | "dephasing" => Ok(AuxSource::Dephasing),
            _ => Err(Error::InvalidNoise(format!("unknown source {s:?}"))),
        }
    }
}

/// Importance-sampling category of a site.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Category {
    /// Single-qubit gate errors and measurement errors.
    S,
    /// Two-qubit gate errors.
    T,
    /// Heating.
    H,
    /// Background depolarizing and preparation errors.
    Dep,
    /// Dephasing.
    Z,
}

impl Category {
    pub const ALL: [Category; 5] = [Category::S, Category::T, Category::H, Category::Dep, Category::Z];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn of(site: &FaultSite) -> Category {
        match site.kind {
            SiteKind::RotationError(_) | SiteKind::MeasDepolarizing => Category::S,
            SiteKind::CliffordError if site.arity == 1 => Category::S,
            SiteKind::XxError | SiteKind::CliffordError => Category::T,
            SiteKind::Heating => Category::H,
            SiteKind::GateDepolarizing | SiteKind::PrepDepolarizing => Category::Dep,
            SiteKind::Dephasing => Category::Z,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Category::S => "s",
            Category::T => "t",
            Category::H => "h",
            Category::Dep => "dep",
            Category::Z => "z",
        }
    }
}

/// A Pauli channel, conditioned on an error having occurred.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Channel {
    OverRotation(Axis),
    XxOverRotation,
    Heating,
    Depolarizing1,
    /// Uniform over the 15 non-identity two-qubit Paulis.
    Depolarizing2,
    Dephasing,
}

const TWO_QUBIT_PAULIS: [LocalPauli; 15] = {
    use Pauli::*;
    let all = [I, X, Y, Z];
    let mut out = [LocalPauli::one(X); 15];
    let mut k = 0;
    let mut i = 0;
    while i < 4 {
        let mut j = 0;
        while j < 4 {
            if i != 0 || j != 0 {
                out[k] = LocalPauli::two(all[i], all[j]);
                k += 1;
            }
            j += 1;
        }
        i += 1;
    }
    out
};

impl Channel {
    pub fn arity(self) -> usize {
        match self {
            Channel::XxOverRotation | Channel::Heating | Channel::Depolarizing2 => 2,
            _ => 1,
        }
    }

    /// The Pauli of a deterministic channel.
    pub fn fixed_pauli(self) -> Option<LocalPauli> {
        match self {
            Channel::OverRotation(axis) => Some(LocalPauli::one(axis.pauli())),
            Channel::XxOverRotation | Channel::Heating => Some(LocalPauli::two(Pauli::X, Pauli::X)),
            Channel::Dephasing => Some(LocalPauli::one(Pauli::Z)),
            Channel::Depolarizing1 | Channel::Depolarizing2 => None,
        }
    }

    /// Draws the Pauli applied when the channel fires.
    #[inline]
    pub fn sample<R: Rng + ?Sized>(self, rng: &mut R) -> LocalPauli {
        match self {
            Channel::Depolarizing1 => LocalPauli::one(Pauli::NON_IDENTITY[rng.gen_range(0..3)]),
            Channel::Depolarizing2 => TWO_QUBIT_PAULIS[rng.gen_range(0..15)],
            other => other.fixed_pauli().expect("deterministic channel"),
        }
    }

    /// Every Pauli the channel can emit, with its conditional probability.
    pub fn support(self) -> Vec<(LocalPauli, f64)> {
        match self {
            Channel::Depolarizing1 => Pauli::NON_IDENTITY.iter().map(|&p| (LocalPauli::one(p), 1.0 / 3.0)).collect(),
            Channel::Depolarizing2 => TWO_QUBIT_PAULIS.iter().map(|&p| (p, 1.0 / 15.0)).collect(),
            other => vec![(other.fixed_pauli().expect("deterministic channel"), 1.0)],
        }
    }
}

/// Pauli drawn by the channel of `category`.
pub fn channel_pauli<R: Rng + ?Sized>(category: Channel, rng: &mut R) -> LocalPauli {
    category.sample(rng)
}

/// Probability of the Pauli-twirled over-rotation by `alpha` radians.
pub fn pauli_twirl_overrotation(alpha: f64) -> f64 {
    alpha.sin().powi(2)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn site(kind: SiteKind, arity: usize, duration_us: f64) -> FaultSite {
        FaultSite { kind, location: 0, qubits: [0, 1], arity, duration_us }
    }

    #[test]
    fn heating_probability() {
        let m = NoiseModel::IonTrap(NoiseParams { r_heat: 25.0, ..NoiseParams::ZERO });
        let p = m.site_probability(&site(SiteKind::Heating, 2, 48.0));
        assert!((p - 1.2e-3).abs() < 1e-15);
    }

    #[test]
    fn dephasing_probability() {
        let m = NoiseModel::IonTrap(NoiseParams { r_d: 15.0, ..NoiseParams::ZERO });
        let p = m.site_probability(&site(SiteKind::Dephasing, 1, 10.0));
        assert!((p - 1.5e-4).abs() < 1e-15);
    }

    #[test]
    fn zero_rates_give_zero() {
        let m = NoiseModel::IonTrap(NoiseParams::ZERO);
        for kind in [SiteKind::Heating, SiteKind::Dephasing, SiteKind::XxError, SiteKind::GateDepolarizing] {
            assert_eq!(m.site_probability(&site(kind, 1, 400.0)), 0.0);
        }
    }

    #[test]
    fn default_coupling() {
        let n = NoiseParams::coupled(1e-3, 25.0, 8e-4, 15.0);
        assert_eq!((n.p_x, n.p_y, n.p_z), (1e-4, 1e-4, 1e-4));
        assert_eq!(n.p_prep, n.p_dep);
        assert_eq!(n.p_meas, n.p_x);
    }

    #[test]
    fn fixed_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..100 {
            assert_eq!(channel_pauli(Channel::Heating, &mut rng), LocalPauli::two(Pauli::X, Pauli::X));
            assert_eq!(channel_pauli(Channel::Dephasing, &mut rng), LocalPauli::one(Pauli::Z));
            assert_eq!(
                channel_pauli(Channel::OverRotation(Axis::Y), &mut rng),
                LocalPauli::one(Pauli::Y)
            );
        }
    }

    #[test]
    fn depolarizing_frequencies() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let n = 90_000;
        let mut counts = [0usize; 4];
        for _ in 0..n {
            counts[channel_pauli(Channel::Depolarizing1, &mut rng).first as usize] += 1;
        }
        let tol = 4.0 * (n as f64).sqrt();
        for c in &counts[1..] {
            assert!((*c as f64 - n as f64 / 3.0).abs() < tol, "{counts:?}");
        }
        assert_eq!(counts[0], 0);
    }

    #[test]
    fn twirl() {
        assert_eq!(pauli_twirl_overrotation(0.0), 0.0);
        assert!((pauli_twirl_overrotation(std::f64::consts::FRAC_PI_2) - 1.0).abs() < 1e-15);
        // series sin²x = x² − x⁴/3 + 2x⁶/45
        let x: f64 = 0.0316;
        let series = x * x - x.powi(4) / 3.0 + 2.0 * x.powi(6) / 45.0;
        assert!((pauli_twirl_overrotation(x) - series).abs() < 1e-13);
        assert!((pauli_twirl_overrotation(x) - 9.99e-4).abs() < 2e-6);
    }

    #[test]
    fn supports_sum_to_one() {
        for c in [Channel::Depolarizing1, Channel::Depolarizing2, Channel::Heating, Channel::Dephasing] {
            let total: f64 = c.support().iter().map(|(_, w)| w).sum();
            assert!((total - 1.0).abs() < 1e-12);
        }
        assert_eq!(Channel::Depolarizing2.support().len(), 15);
    }

    #[test]
    fn validation() {
        assert!(NoiseParams { p_xx: 1.5, ..NoiseParams::ZERO }.validate().is_err());
        assert!(NoiseParams { r_d: -1.0, ..NoiseParams::ZERO }.validate().is_err());
        assert!(NoiseParams::green_curve().validate().is_ok());
        assert!(NoiseModel::Depolarizing { p: -0.1 }.validate().is_err());
    }
}

//! Phase-field constitutive layer.
//!
//! Strain energy density `psi(eps, d) = g(d) psi_plus(eps) + psi_minus(eps)` with the
//! spectral tension/compression split, degradation `g(d) = (1 - d)^2`, and the AT1/AT2
//! crack geometric functions. Plane strain is assumed throughout: the out-of-plane
//! principal strain is identically zero and contributes nothing to either part.

use serde::{Deserialize, Serialize};

use crate::error::MaterialError;

/// Symmetric 2x2 tensor stored as tensor components (not engineering shear).
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct SymTensor2 {
    pub xx: f64,
    pub yy: f64,
    pub xy: f64,
}

impl SymTensor2 {
    pub const ZERO: SymTensor2 = SymTensor2 {
        xx: 0.0,
        yy: 0.0,
        xy: 0.0,
    };

    pub fn new(xx: f64, yy: f64, xy: f64) -> Self {
        Self { xx, yy, xy }
    }

    pub fn trace(&self) -> f64 {
        self.xx + self.yy
    }

    /// Frobenius norm.
    pub fn norm(&self) -> f64 {
        (self.xx * self.xx + self.yy * self.yy + 2.0 * self.xy * self.xy).sqrt()
    }

    /// Full contraction `A : B`.
    pub fn ddot(&self, other: &SymTensor2) -> f64 {
        self.xx * other.xx + self.yy * other.yy + 2.0 * self.xy * other.xy
    }

    pub fn scale(&self, s: f64) -> Self {
        Self::new(self.xx * s, self.yy * s, self.xy * s)
    }

    pub fn add(&self, other: &SymTensor2) -> Self {
        Self::new(self.xx + other.xx, self.yy + other.yy, self.xy + other.xy)
    }

    /// Principal values and the unit direction of the first one.
    ///
    /// Off-diagonal entries below `1e-14 * |A|` select the canonical axes, so the
    /// returned pair is then `(xx, yy)` unsorted.
    pub fn eigen(&self) -> Eigen2 {
        let norm = self.norm();
        if self.xy.abs() <= 1e-14 * norm {
            return Eigen2 {
                values: [self.xx, self.yy],
                n1: [1.0, 0.0],
            };
        }
        let mean = 0.5 * (self.xx + self.yy);
        let half_diff = 0.5 * (self.xx - self.yy);
        let radius = half_diff.hypot(self.xy);
        let theta = 0.5 * (2.0 * self.xy).atan2(self.xx - self.yy);
        Eigen2 {
            values: [mean + radius, mean - radius],
            n1: [theta.cos(), theta.sin()],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Eigen2 {
    pub values: [f64; 2],
    /// Direction of `values[0]`; the second direction is its 90 degree rotation.
    pub n1: [f64; 2],
}

impl Eigen2 {
    pub fn n2(&self) -> [f64; 2] {
        [-self.n1[1], self.n1[0]]
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PhaseFieldVariant {
    /// `w(d) = d`, `c_w = 2/3`: elastic threshold, compact support.
    At1,
    /// `w(d) = d^2`, `c_w = 1/2`.
    #[default]
    At2,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GeometricTerms {
    pub w: f64,
    pub dw: f64,
    pub ddw: f64,
    pub cw: f64,
}

impl PhaseFieldVariant {
    #[inline]
    pub fn cw(self) -> f64 {
        match self {
            PhaseFieldVariant::At1 => 2.0 / 3.0,
            PhaseFieldVariant::At2 => 0.5,
        }
    }

    #[inline]
    pub fn w(self, d: f64) -> f64 {
        match self {
            PhaseFieldVariant::At1 => d,
            PhaseFieldVariant::At2 => d * d,
        }
    }

    #[inline]
    pub fn dw(self, d: f64) -> f64 {
        match self {
            PhaseFieldVariant::At1 => 1.0,
            PhaseFieldVariant::At2 => 2.0 * d,
        }
    }

    #[inline]
    pub fn ddw(self, _d: f64) -> f64 {
        match self {
            PhaseFieldVariant::At1 => 0.0,
            PhaseFieldVariant::At2 => 2.0,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseFieldVariant::At1 => "AT1",
            PhaseFieldVariant::At2 => "AT2",
        }
    }
}

impl std::str::FromStr for PhaseFieldVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "at1" => Ok(PhaseFieldVariant::At1),
            "at2" => Ok(PhaseFieldVariant::At2),
            other => Err(format!("unknown phase-field variant '{other}'")),
        }
    }
}

/// `(w, w', w'', c_w)` for a phase value in `[0, 1]`.
pub fn geometric_function(
    variant: PhaseFieldVariant,
    d: f64,
) -> Result<GeometricTerms, MaterialError> {
    if !(0.0..=1.0).contains(&d) {
        return Err(MaterialError::PhaseOutOfRange(d));
    }
    Ok(GeometricTerms {
        w: variant.w(d),
        dw: variant.dw(d),
        ddw: variant.ddw(d),
        cw: variant.cw(),
    })
}

/// `(g, g', g'')` of the quadratic degradation function.
#[inline]
pub fn degradation(d: f64) -> (f64, f64, f64) {
    let s = 1.0 - d;
    (s * s, -2.0 * s, 2.0)
}

/// Macaulay brackets `(<x>+, <x>-)`.
#[inline]
pub fn macaulay(x: f64) -> (f64, f64) {
    let a = x.abs();
    (0.5 * (x + a), 0.5 * (x - a))
}

/// Plane-strain Lame constants from Young's modulus and Poisson's ratio.
pub fn lame_from_engineering(e: f64, nu: f64) -> Result<(f64, f64), MaterialError> {
    if !(e > 0.0 && e.is_finite()) {
        return Err(MaterialError::YoungsModulus(e));
    }
    if !(nu > -1.0 && nu < 0.5) {
        return Err(MaterialError::PoissonRatio(nu));
    }
    let lambda = e * nu / ((1.0 + nu) * (1.0 - 2.0 * nu));
    let mu = e / (2.0 * (1.0 + nu));
    Ok((lambda, mu))
}

/// Material parameters in SI units. Construct through [`MaterialParams::new`], which
/// derives and checks the Lame constants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaterialParams {
    pub youngs_modulus: f64,
    pub poisson_ratio: f64,
    pub density: f64,
    /// Critical energy release rate `g_c` (J/m^2).
    pub gc: f64,
    /// Regularization length `ell` (m).
    pub ell: f64,
    pub lambda: f64,
    pub mu: f64,
}

impl MaterialParams {
    pub fn new(e: f64, nu: f64, rho: f64, gc: f64, ell: f64) -> Result<Self, MaterialError> {
        let (lambda, mu) = lame_from_engineering(e, nu)?;
        for (name, value) in [("density", rho), ("g_c", gc), ("length scale", ell)] {
            if !(value > 0.0 && value.is_finite()) {
                return Err(MaterialError::NonPositive { name, value });
            }
        }
        if !(mu > 0.0 && lambda + 2.0 * mu > 0.0) {
            return Err(MaterialError::Lame { lambda, mu });
        }
        Ok(Self {
            youngs_modulus: e,
            poisson_ratio: nu,
            density: rho,
            gc,
            ell,
            lambda,
            mu,
        })
    }

    /// Plane-strain dilatational wave speed `sqrt((lambda + 2 mu) / rho)`.
    pub fn dilatational_speed(&self) -> f64 {
        ((self.lambda + 2.0 * self.mu) / self.density).sqrt()
    }

    /// Undamaged isotropic stress `lambda tr(eps) 1 + 2 mu eps`.
    pub fn isotropic_stress(&self, eps: &SymTensor2) -> SymTensor2 {
        let lt = self.lambda * eps.trace();
        SymTensor2::new(
            lt + 2.0 * self.mu * eps.xx,
            lt + 2.0 * self.mu * eps.yy,
            2.0 * self.mu * eps.xy,
        )
    }

    /// Undamaged isotropic energy density.
    pub fn isotropic_energy(&self, eps: &SymTensor2) -> f64 {
        let tr = eps.trace();
        0.5 * self.lambda * tr * tr + self.mu * eps.ddot(eps)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SplitResult {
    pub psi_plus: f64,
    pub psi_minus: f64,
    pub sigma_plus: SymTensor2,
    pub sigma_minus: SymTensor2,
}

/// Spectral split of a plane strain into crack-driving and persistent parts.
pub fn spectral_split(eps: &SymTensor2, lambda: f64, mu: f64) -> SplitResult {
    let eig = eps.eigen();
    let (tr_p, tr_m) = macaulay(eps.trace());
    let (e1p, e1m) = macaulay(eig.values[0]);
    let (e2p, e2m) = macaulay(eig.values[1]);

    let psi_plus = 0.5 * lambda * tr_p * tr_p + mu * (e1p * e1p + e2p * e2p);
    let psi_minus = 0.5 * lambda * tr_m * tr_m + mu * (e1m * e1m + e2m * e2m);

    // n2 n2 = 1 - n1 n1
    let [c, s] = eig.n1;
    let p11 = SymTensor2::new(c * c, s * s, c * s);
    let p22 = SymTensor2::new(s * s, c * c, -c * s);
    let part = |tr: f64, a: f64, b: f64| {
        let lt = lambda * tr;
        SymTensor2::new(lt, lt, 0.0)
            .add(&p11.scale(2.0 * mu * a))
            .add(&p22.scale(2.0 * mu * b))
    };
    SplitResult {
        psi_plus,
        psi_minus,
        sigma_plus: part(tr_p, e1p, e2p),
        sigma_minus: part(tr_m, e1m, e2m),
    }
}

/// Crack-driving energy density alone; the hot path of the phase solve.
#[inline]
pub fn psi_plus(eps: &SymTensor2, lambda: f64, mu: f64) -> f64 {
    let tr = eps.trace();
    let mean = 0.5 * tr;
    let radius = (0.5 * (eps.xx - eps.yy)).hypot(eps.xy);
    let tp = tr.max(0.0);
    let e1 = (mean + radius).max(0.0);
    let e2 = (mean - radius).max(0.0);
    0.5 * lambda * tp * tp + mu * (e1 * e1 + e2 * e2)
}

/// Tensile and compressive parts of the strain, `eps = eps_plus + eps_minus`.
pub fn strain_parts(eps: &SymTensor2) -> (SymTensor2, SymTensor2) {
    let eig = eps.eigen();
    let [c, s] = eig.n1;
    let p11 = SymTensor2::new(c * c, s * s, c * s);
    let p22 = SymTensor2::new(s * s, c * c, -c * s);
    let (e1p, e1m) = macaulay(eig.values[0]);
    let (e2p, e2m) = macaulay(eig.values[1]);
    (
        p11.scale(e1p).add(&p22.scale(e2p)),
        p11.scale(e1m).add(&p22.scale(e2m)),
    )
}

/// `g(d) sigma_plus + sigma_minus`.
pub fn degraded_stress(eps: &SymTensor2, d: f64, params: &MaterialParams) -> SymTensor2 {
    let split = spectral_split(eps, params.lambda, params.mu);
    let (g, _, _) = degradation(d);
    split.sigma_plus.scale(g).add(&split.sigma_minus)
}

/// Largest principal value of a stress tensor.
pub fn max_principal(sigma: &SymTensor2) -> f64 {
    let mean = 0.5 * sigma.trace();
    mean + (0.5 * (sigma.xx - sigma.yy)).hypot(sigma.xy)
}

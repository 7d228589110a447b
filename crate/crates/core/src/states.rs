//! Canonical states used by the protocol: the two-qubit input, the four Bell
//! states and the four-qubit cluster resource.

use crate::qmath::{C64, DensityMatrix, Ket, ZERO};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum StateError {
    #[error("input amplitudes must be finite")]
    NonFiniteInput,
    #[error("cluster coefficients must be finite")]
    NonFiniteCluster,
    #[error("cluster coefficients tau1 and tau2 must be nonzero")]
    ZeroInnerCoefficient,
}

pub type Result<T> = std::result::Result<T, StateError>;

/// Amplitudes of the two-qubit input state a0|00⟩ + d0|11⟩.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct InputParams {
    pub a0: C64,
    pub d0: C64,
}

impl InputParams {
    pub fn new(a0: C64, d0: C64) -> Result<Self> {
        if !(a0.re.is_finite() && a0.im.is_finite() && d0.re.is_finite() && d0.im.is_finite()) {
            return Err(StateError::NonFiniteInput);
        }
        Ok(Self { a0, d0 })
    }

    pub fn from_real(a0: f64, d0: f64) -> Result<Self> {
        Self::new(C64::new(a0, 0.0), C64::new(d0, 0.0))
    }

    /// Equal-weight superposition, a0 = d0 = 1/√2.
    pub fn balanced() -> Self {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        Self {
            a0: C64::new(r, 0.0),
            d0: C64::new(r, 0.0),
        }
    }

    /// |a0|² + |d0|².
    pub fn weight(&self) -> f64 {
        self.a0.norm_sqr() + self.d0.norm_sqr()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.weight() - 1.0).abs() <= tol
    }

    pub fn ket(&self) -> Ket {
        Ket::new(vec![self.a0, ZERO, ZERO, self.d0]).expect("finite amplitudes")
    }

    pub fn density(&self) -> DensityMatrix {
        self.ket().density()
    }
}

/// Coefficients of the four-qubit cluster resource
/// tau0|0000⟩ + tau1|0011⟩ + tau2|1100⟩ - tau3|1111⟩.
///
/// tau1 and tau2 must be nonzero: the recovery measurement divides by both.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClusterParams {
    tau: [f64; 4],
}

impl ClusterParams {
    pub fn new(tau: [f64; 4]) -> Result<Self> {
        if tau.iter().any(|t| !t.is_finite()) {
            return Err(StateError::NonFiniteCluster);
        }
        if tau[1] == 0.0 || tau[2] == 0.0 {
            return Err(StateError::ZeroInnerCoefficient);
        }
        Ok(Self { tau })
    }

    /// All four coefficients equal to 1/2.
    pub fn balanced() -> Self {
        Self {
            tau: [0.5, 0.5, 0.5, 0.5],
        }
    }

    pub fn tau(&self) -> [f64; 4] {
        self.tau
    }

    pub fn norm_sqr(&self) -> f64 {
        self.tau.iter().map(|t| t * t).sum()
    }

    pub fn is_normalized(&self, tol: f64) -> bool {
        (self.norm_sqr() - 1.0).abs() <= tol
    }

    pub fn ket(&self) -> Ket {
        let mut amps = vec![ZERO; 16];
        amps[0b0000] = C64::new(self.tau[0], 0.0);
        amps[0b0011] = C64::new(self.tau[1], 0.0);
        amps[0b1100] = C64::new(self.tau[2], 0.0);
        amps[0b1111] = C64::new(-self.tau[3], 0.0);
        Ket::new(amps).expect("finite coefficients")
    }
}

/// The four Bell states.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum BellKind {
    PhiPlus,
    PhiMinus,
    PsiPlus,
    PsiMinus,
}

impl BellKind {
    pub const ALL: [BellKind; 4] = [
        BellKind::PhiPlus,
        BellKind::PhiMinus,
        BellKind::PsiPlus,
        BellKind::PsiMinus,
    ];

    /// Sign carried by the state: +1 for Phi+/Psi+, -1 for Phi-/Psi-.
    pub fn sign(&self) -> f64 {
        match self {
            BellKind::PhiPlus | BellKind::PsiPlus => 1.0,
            BellKind::PhiMinus | BellKind::PsiMinus => -1.0,
        }
    }

    /// True for the Phi family (|00⟩ ± |11⟩).
    pub fn is_phi(&self) -> bool {
        matches!(self, BellKind::PhiPlus | BellKind::PhiMinus)
    }

    pub fn label(&self) -> &'static str {
        match self {
            BellKind::PhiPlus => "Phi+",
            BellKind::PhiMinus => "Phi-",
            BellKind::PsiPlus => "Psi+",
            BellKind::PsiMinus => "Psi-",
        }
    }

    pub fn ket(&self) -> Ket {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let s = self.sign() * r;
        let amps = if self.is_phi() {
            vec![C64::new(r, 0.0), ZERO, ZERO, C64::new(s, 0.0)]
        } else {
            vec![ZERO, C64::new(r, 0.0), C64::new(s, 0.0), ZERO]
        };
        Ket::new(amps).expect("finite amplitudes")
    }
}

impl std::fmt::Display for BellKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn input_density_matches_outer_product() {
        let p = InputParams::from_real(0.6, 0.8).unwrap();
        let rho = p.density();
        assert_abs_diff_eq!(rho.entry(0, 0).re, 0.36, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(3, 3).re, 0.64, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(0, 3).re, 0.48, epsilon = 1e-12);
        assert_abs_diff_eq!(rho.entry(3, 0).re, 0.48, epsilon = 1e-12);
        for (i, j) in [(1, 1), (2, 2), (0, 1), (1, 3), (2, 0)] {
            assert_abs_diff_eq!(rho.entry(i, j).norm(), 0.0, epsilon = 1e-15);
        }
        assert!(rho.max_abs_diff(&p.ket().density()) < 1e-12);
    }

    #[test]
    fn trivial_input_is_projector_on_00() {
        let p = InputParams::from_real(1.0, 0.0).unwrap();
        let rho = p.density();
        assert_abs_diff_eq!(rho.entry(0, 0).re, 1.0, epsilon = 1e-15);
        assert_abs_diff_eq!(rho.trace().re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn balanced_input_gives_bell_density() {
        let rho = InputParams::balanced().density();
        for (i, j) in [(0, 0), (0, 3), (3, 0), (3, 3)] {
            assert_abs_diff_eq!(rho.entry(i, j).re, 0.5, epsilon = 1e-12);
        }
    }

    #[test]
    fn cluster_coefficients_land_on_expected_components() {
        let c = ClusterParams::balanced();
        let ket = c.ket();
        assert_abs_diff_eq!(ket.amp(0b0000).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ket.amp(0b0011).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ket.amp(0b1100).re, 0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ket.amp(0b1111).re, -0.5, epsilon = 1e-15);
        assert_abs_diff_eq!(ket.norm(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn cluster_with_zero_inner_coefficient_rejected() {
        assert_eq!(
            ClusterParams::new([1.0, 0.0, 0.0, 0.0]),
            Err(StateError::ZeroInnerCoefficient)
        );
    }

    #[test]
    fn cluster_norm_tracks_coefficients() {
        let c = ClusterParams::new([0.3, 0.4, 0.5, 0.6]).unwrap();
        assert_abs_diff_eq!(c.ket().norm(), c.norm_sqr().sqrt(), epsilon = 1e-12);
    }

    #[test]
    fn bell_states_match_definitions() {
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let phi = BellKind::PhiPlus.ket();
        assert_abs_diff_eq!(phi.amp(0).re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(phi.amp(3).re, r, epsilon = 1e-15);
        let psi = BellKind::PsiMinus.ket();
        assert_abs_diff_eq!(psi.amp(1).re, r, epsilon = 1e-15);
        assert_abs_diff_eq!(psi.amp(2).re, -r, epsilon = 1e-15);
    }

    #[test]
    fn bell_states_are_orthonormal() {
        for a in BellKind::ALL {
            for b in BellKind::ALL {
                let overlap = a.ket().inner(&b.ket()).unwrap();
                let expected = if a == b { 1.0 } else { 0.0 };
                assert_abs_diff_eq!(overlap.re, expected, epsilon = 1e-12);
                assert_abs_diff_eq!(overlap.im, 0.0, epsilon = 1e-12);
            }
        }
    }
}

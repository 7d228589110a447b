//! Kraus-operator noise channels: amplitude damping and phase damping.

use crate::qmath::{C64, DensityMatrix, Ket, Operator, Result as QResult};
use crate::states::ClusterParams;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum ChannelError {
    #[error("decoherence rate {0} outside [0, 1]")]
    RateOutOfRange(f64),
}

/// Damping channel family with decoherence rate `xi` in [0, 1].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseKind {
    AmplitudeDamping { xi: f64 },
    PhaseDamping { xi: f64 },
}

impl NoiseKind {
    pub fn amplitude_damping(xi: f64) -> Result<Self, ChannelError> {
        check_rate(xi)?;
        Ok(NoiseKind::AmplitudeDamping { xi })
    }

    pub fn phase_damping(xi: f64) -> Result<Self, ChannelError> {
        check_rate(xi)?;
        Ok(NoiseKind::PhaseDamping { xi })
    }

    pub fn xi(&self) -> f64 {
        match *self {
            NoiseKind::AmplitudeDamping { xi } | NoiseKind::PhaseDamping { xi } => xi,
        }
    }

    /// 1 - xi.
    pub fn xi_bar(&self) -> f64 {
        1.0 - self.xi()
    }

    pub fn is_amplitude(&self) -> bool {
        matches!(self, NoiseKind::AmplitudeDamping { .. })
    }

    pub fn label(&self) -> &'static str {
        match self {
            NoiseKind::AmplitudeDamping { .. } => "amp",
            NoiseKind::PhaseDamping { .. } => "phase",
        }
    }

    /// Factor the channel attaches to a cluster coefficient in the
    /// recovery-measurement construction: xi_bar for amplitude damping,
    /// xi_bar² for phase damping.
    pub fn dressing(&self) -> f64 {
        match self {
            NoiseKind::AmplitudeDamping { .. } => self.xi_bar(),
            NoiseKind::PhaseDamping { .. } => self.xi_bar() * self.xi_bar(),
        }
    }

    pub fn kraus_set(&self) -> KrausSet {
        match *self {
            NoiseKind::AmplitudeDamping { xi } => KrausSet::amplitude_damping_unchecked(xi),
            NoiseKind::PhaseDamping { xi } => KrausSet::phase_damping_unchecked(xi),
        }
    }

    /// Diagonal attenuation factor of the delivered one-hop density.
    ///
    /// Amplitude: tau0²(xb⁴ + xi⁴) + (tau1² + tau2²)xb² - 2 tau0 tau3 xi² + tau3².
    /// Phase: tau0²(xb² + xi²)² + (tau1² + tau2² + tau3²)xb⁴
    ///        + 2 tau3² xi² xb² + xi⁴ tau3².
    pub fn fidelity_bracket(&self, cluster: &ClusterParams) -> f64 {
        let [t0, t1, t2, t3] = cluster.tau();
        let xi = self.xi();
        let xb = self.xi_bar();
        match self {
            NoiseKind::AmplitudeDamping { .. } => {
                t0 * t0 * (xb.powi(4) + xi.powi(4)) + (t1 * t1 + t2 * t2) * xb * xb
                    - 2.0 * t0 * t3 * xi * xi
                    + t3 * t3
            }
            NoiseKind::PhaseDamping { .. } => {
                t0 * t0 * (xb * xb + xi * xi).powi(2)
                    + (t1 * t1 + t2 * t2 + t3 * t3) * xb.powi(4)
                    + 2.0 * t3 * t3 * xi * xi * xb * xb
                    + xi.powi(4) * t3 * t3
            }
        }
    }
}

fn check_rate(xi: f64) -> Result<(), ChannelError> {
    if !(0.0..=1.0).contains(&xi) || !xi.is_finite() {
        return Err(ChannelError::RateOutOfRange(xi));
    }
    Ok(())
}

/// The operators of one single-qubit channel.
#[derive(Debug, Clone)]
pub struct KrausSet {
    ops: Vec<Operator>,
}

impl KrausSet {
    /// Amplitude damping without range validation. Exists so the verify
    /// command can demonstrate that the completeness check catches a
    /// tampered rate; normal construction goes through [`NoiseKind`].
    #[doc(hidden)]
    pub fn amplitude_damping_unchecked(xi: f64) -> Self {
        let xb = 1.0 - xi;
        let k0 = Operator::from_real(2, 2, &[1.0, 0.0, 0.0, xb.sqrt()]).unwrap();
        let k1 = Operator::from_real(2, 2, &[0.0, xi.sqrt(), 0.0, 0.0]).unwrap();
        Self { ops: vec![k0, k1] }
    }

    #[doc(hidden)]
    pub fn phase_damping_unchecked(xi: f64) -> Self {
        let xb = 1.0 - xi;
        let k0 = Operator::identity(2).scaled(C64::new(xb.sqrt(), 0.0));
        let k1 = Operator::from_real(2, 2, &[xi.sqrt(), 0.0, 0.0, 0.0]).unwrap();
        let k2 = Operator::from_real(2, 2, &[0.0, 0.0, 0.0, xi.sqrt()]).unwrap();
        Self {
            ops: vec![k0, k1, k2],
        }
    }

    pub fn ops(&self) -> &[Operator] {
        &self.ops
    }

    /// Largest entry of |Σ K†K - I|; zero for a complete set, infinite when
    /// any entry fails to be a number at all.
    pub fn completeness_error(&self) -> f64 {
        let dim = self.ops[0].rows();
        let mut sum = Operator::identity(dim).scaled(C64::new(0.0, 0.0));
        for k in &self.ops {
            sum = sum.add(&k.adjoint().matmul(k).unwrap()).unwrap();
        }
        let mut err = 0.0f64;
        for i in 0..dim {
            for j in 0..dim {
                let expected = if i == j { 1.0 } else { 0.0 };
                let d = (sum.entry(i, j) - C64::new(expected, 0.0)).norm();
                if !d.is_finite() {
                    return f64::INFINITY;
                }
                err = err.max(d);
            }
        }
        err
    }

    /// CPTP application: rho -> Σ K rho K† on the chosen qubit.
    pub fn apply(&self, rho: &DensityMatrix, qubit: usize) -> QResult<DensityMatrix> {
        let mut out = DensityMatrix::zeros(rho.qubits());
        for k in &self.ops {
            out = out.add(&rho.apply_on_qubits(k, &[qubit])?)?;
        }
        Ok(out)
    }

    /// Apply the set to each qubit in `qubits` in turn.
    pub fn apply_to_all(&self, rho: &DensityMatrix, qubits: &[usize]) -> QResult<DensityMatrix> {
        let mut out = rho.clone();
        for &q in qubits {
            out = self.apply(&out, q)?;
        }
        Ok(out)
    }

    /// Single-branch state-vector bookkeeping: K|ψ⟩ on the chosen qubit,
    /// unnormalized. This is not a CPTP evolution; it exists to reproduce
    /// amplitude-level coefficient tables.
    pub fn branch(&self, psi: &Ket, qubit: usize, which: usize) -> QResult<Ket> {
        psi.apply_on_qubits(&self.ops[which], &[qubit])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qmath::Ket;
    use approx::assert_abs_diff_eq;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn amplitude_damping_extremes() {
        let ks = NoiseKind::amplitude_damping(0.0).unwrap().kraus_set();
        assert!(ks.ops()[0].max_abs_diff(&Operator::identity(2)) < 1e-15);
        assert_abs_diff_eq!(ks.ops()[1].entry(0, 1).norm(), 0.0, epsilon = 1e-15);

        let ks = NoiseKind::amplitude_damping(1.0).unwrap().kraus_set();
        assert_abs_diff_eq!(ks.ops()[0].entry(1, 1).norm(), 0.0, epsilon = 1e-15);
        assert_abs_diff_eq!(ks.ops()[1].entry(0, 1).re, 1.0, epsilon = 1e-15);
    }

    #[test]
    fn phase_damping_entries_are_square_roots() {
        let ks = NoiseKind::phase_damping(0.36).unwrap().kraus_set();
        assert_abs_diff_eq!(ks.ops()[0].entry(0, 0).re, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(ks.ops()[0].entry(1, 1).re, 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(ks.ops()[1].entry(0, 0).re, 0.6, epsilon = 1e-12);
        assert_abs_diff_eq!(ks.ops()[2].entry(1, 1).re, 0.6, epsilon = 1e-12);
    }

    #[test]
    fn completeness_holds_across_rate_grid() {
        for i in 0..=10 {
            let xi = i as f64 / 10.0;
            let amp = NoiseKind::amplitude_damping(xi).unwrap().kraus_set();
            let phase = NoiseKind::phase_damping(xi).unwrap().kraus_set();
            assert!(amp.completeness_error() < 1e-12, "amp xi={xi}");
            assert!(phase.completeness_error() < 1e-12, "phase xi={xi}");
        }
    }

    #[test]
    fn rate_out_of_range_rejected() {
        assert!(NoiseKind::amplitude_damping(-0.1).is_err());
        assert!(NoiseKind::phase_damping(1.1).is_err());
    }

    #[test]
    fn amplitude_damping_moves_excited_population() {
        let xi = 0.3;
        let ks = NoiseKind::amplitude_damping(xi).unwrap().kraus_set();
        let rho = Ket::basis(1, 1).unwrap().density();
        let out = ks.apply(&rho, 0).unwrap();
        assert_abs_diff_eq!(out.entry(0, 0).re, xi, epsilon = 1e-12);
        assert_abs_diff_eq!(out.entry(1, 1).re, 1.0 - xi, epsilon = 1e-12);
        assert_abs_diff_eq!(out.trace().re, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn phase_damping_scales_coherences() {
        let xi = 0.25;
        let ks = NoiseKind::phase_damping(xi).unwrap().kraus_set();
        let r = std::f64::consts::FRAC_1_SQRT_2;
        let plus = Ket::new(vec![c(r), c(r)]).unwrap();
        let out = ks.apply(&plus.density(), 0).unwrap();
        assert_abs_diff_eq!(out.entry(0, 0).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.entry(1, 1).re, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(out.entry(0, 1).re, 0.5 * (1.0 - xi), epsilon = 1e-12);
    }

    #[test]
    fn zero_rate_channel_is_identity() {
        let rho = crate::states::InputParams::from_real(0.6, 0.8)
            .unwrap()
            .density();
        for kind in [
            NoiseKind::amplitude_damping(0.0).unwrap(),
            NoiseKind::phase_damping(0.0).unwrap(),
        ] {
            let out = kind.kraus_set().apply(&rho, 1).unwrap();
            assert!(out.max_abs_diff(&rho) < 1e-14);
        }
    }

    #[test]
    fn ground_state_is_fixed_point_of_amplitude_damping() {
        for i in 0..=10 {
            let xi = i as f64 / 10.0;
            let ks = NoiseKind::amplitude_damping(xi).unwrap().kraus_set();
            let rho = Ket::basis(1, 0).unwrap().density();
            let out = ks.apply(&rho, 0).unwrap();
            assert!(out.max_abs_diff(&rho) < 1e-14);
        }
    }

    #[test]
    fn branch_application_matches_hand_algebra() {
        let xi = 0.4f64;
        let ks = NoiseKind::amplitude_damping(xi).unwrap().kraus_set();
        // K0 on |1⟩ shrinks it by sqrt(1 - xi)
        let one = Ket::basis(1, 1).unwrap();
        let out = ks.branch(&one, 0, 0).unwrap();
        assert_abs_diff_eq!(out.amp(1).re, (1.0 - xi).sqrt(), epsilon = 1e-12);
        // K1 annihilates |0⟩
        let zero = Ket::basis(1, 0).unwrap();
        let out = ks.branch(&zero, 0, 1).unwrap();
        assert_abs_diff_eq!(out.norm(), 0.0, epsilon = 1e-15);
        // K0 on both qubits of |11⟩ gives a (1 - xi) factor
        let both = Ket::basis(2, 0b11).unwrap();
        let out = ks
            .branch(&ks.branch(&both, 0, 0).unwrap(), 1, 0)
            .unwrap();
        assert_abs_diff_eq!(out.amp(0b11).re, 1.0 - xi, epsilon = 1e-12);
    }

    #[test]
    fn tampered_rate_fails_completeness() {
        let ks = KrausSet::amplitude_damping_unchecked(1.5);
        assert!(!(ks.completeness_error() < 1e-12));
    }
}

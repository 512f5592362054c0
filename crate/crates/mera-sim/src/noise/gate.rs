//! Per-gate error channels for native gates.

use super::{NoiseCalibration, NoiseSources, StarkMode};
use crate::error::{Error, Result};
use crate::gates::{GateKind, GateOp, StateVector};
use crate::linalg::ZERO;
use crate::rng::Rng;
use num_complex::Complex64 as C64;
use rand::Rng as _;
use rand_distr::StandardNormal;
use std::f64::consts::FRAC_PI_2;

/// Calibration, active sources and the qubit → ion assignment.
#[derive(Debug, Clone)]
pub struct NoiseModel {
    pub cal: NoiseCalibration,
    pub sources: NoiseSources,
    pub ions: Vec<usize>,
}

impl NoiseModel {
    /// Qubit q sits on ion q.
    pub fn new(cal: NoiseCalibration, sources: NoiseSources) -> Self {
        let ions = (0..cal.n_ions).collect();
        Self { cal, sources, ions }
    }

    pub fn with_mapping(mut self, ions: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; self.cal.n_ions];
        for &i in &ions {
            if i >= self.cal.n_ions || seen[i] {
                return Err(Error::InvalidInput(format!(
                    "mapping {ions:?} is not injective into {} ions",
                    self.cal.n_ions
                )));
            }
            seen[i] = true;
        }
        self.ions = ions;
        Ok(self)
    }

    pub fn ion(&self, q: usize) -> Result<usize> {
        self.ions
            .get(q)
            .copied()
            .ok_or_else(|| Error::InvalidInput(format!("qubit {q} has no ion ({} ions mapped)", self.ions.len())))
    }

    /// n_avg κ b_i², zero when axial noise is off.
    pub fn angle_error(&self, q: usize, n_avg: f64) -> Result<f64> {
        if !self.sources.axial {
            return Ok(0.0);
        }
        let b = self.cal.b[self.ion(q)?];
        Ok(n_avg * self.cal.kappa() * b * b)
    }

    pub fn stark_sample(&self, rng: &mut Rng) -> f64 {
        rng.sample(StandardNormal)
    }

    pub fn shared_stark(&self, rng: &mut Rng) -> Option<f64> {
        (self.sources.stark && self.cal.stark_mode == StarkMode::PerShot).then(|| self.stark_sample(rng))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum NoisyOp {
    Gate(GateOp),
    /// exp(-i(θ XX + φ_a Z_a + φ_b Z_b)/2), `a` the more significant qubit.
    StarkXX {
        a: usize,
        b: usize,
        u: [[C64; 4]; 4],
    },
    FlipX(usize),
}

impl NoisyOp {
    pub fn apply(&self, state: &mut StateVector) -> Result<()> {
        match self {
            NoisyOp::Gate(g) => state.apply_op(g),
            NoisyOp::StarkXX { a, b, u } => {
                state.apply_2q(*a, *b, u);
                Ok(())
            }
            NoisyOp::FlipX(q) => {
                state.flip_x(*q);
                Ok(())
            }
        }
    }
}

/// Closed form of exp(-i(θ XX + φ_a Z_a + φ_b Z_b)/2) on the parity blocks
/// {|00⟩,|11⟩} and {|01⟩,|10⟩}.
pub fn stark_xx_matrix(theta: f64, phi_a: f64, phi_b: f64) -> [[C64; 4]; 4] {
    let block = |z: f64| -> [[C64; 2]; 2] {
        let r = (theta * theta + z * z).sqrt();
        let c = C64::new((r / 2.0).cos(), 0.0);
        if r < 1e-300 {
            return [[c, ZERO], [ZERO, c]];
        }
        let s = (r / 2.0).sin() / r;
        let mi = C64::new(0.0, -s);
        [[c + mi * z, mi * theta], [mi * theta, c - mi * z]]
    };
    let even = block(phi_a + phi_b);
    let odd = block(phi_a - phi_b);
    let mut u = [[ZERO; 4]; 4];
    let (e, o) = ([0usize, 3], [1usize, 2]);
    for r in 0..2 {
        for c in 0..2 {
            u[e[r]][e[c]] = even[r][c];
            u[o[r]][o[c]] = odd[r][c];
        }
    }
    u
}

/// Noisy replacement of one native gate. `n_avg` is the time-averaged phonon
/// number over the gate window; `stark_s` is the shared Gaussian sample in
/// per-shot mode (drawn here otherwise).
pub fn perturb_gate(
    op: &GateOp,
    n_avg: f64,
    model: &NoiseModel,
    stark_s: Option<f64>,
    rng: &mut Rng,
) -> Result<Vec<NoisyOp>> {
    match op.kind {
        GateKind::Rz => Ok(vec![NoisyOp::Gate(op.clone())]),
        GateKind::R => {
            let mut g = op.clone();
            g.theta *= 1.0 - model.angle_error(op.targets[0], n_avg)?;
            Ok(vec![NoisyOp::Gate(g)])
        }
        GateKind::XX => {
            let (a, b) = (op.targets[0], op.targets[1]);
            let (ia, ib) = (model.ion(a)?, model.ion(b)?);
            let theta = op.theta * (1.0 - model.angle_error(a, n_avg)? - model.angle_error(b, n_avg)?);
            let mut out = Vec::with_capacity(3);
            if model.sources.stark {
                let s = stark_s.unwrap_or_else(|| model.stark_sample(rng));
                let scale = op.theta.abs() / FRAC_PI_2;
                let pa = s * model.cal.sigma_phi_of(ia) * scale;
                let pb = s * model.cal.sigma_phi_of(ib) * scale;
                out.push(NoisyOp::StarkXX { a, b, u: stark_xx_matrix(theta, pa, pb) });
            } else {
                out.push(NoisyOp::Gate(GateOp::xx(a, b, theta)));
            }
            if model.sources.x_flip {
                let p = model.cal.p_x(ia, ib, op.theta)?;
                for q in [a, b] {
                    if rng.random::<f64>() < p {
                        out.push(NoisyOp::FlipX(q));
                    }
                }
            }
            Ok(out)
        }
        k => Err(Error::InvalidInput(format!("{k:?} is not a native gate; lower the circuit first"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::gates::gate_matrix;
    use crate::linalg::{kron, pauli, CMat, I};
    use crate::rng::stream;

    fn expm_oracle(h: &CMat) -> CMat {
        // exp(-iH/2) through the Hermitian eigen-decomposition
        let (vals, vecs) = crate::linalg::eigh(h);
        let d = CMat::from_diagonal(&nalgebra::DVector::from_iterator(4, vals.iter().map(|&v| (I * (-v / 2.0)).exp())));
        &vecs * d * vecs.adjoint()
    }

    #[test]
    fn stark_matrix_matches_exponential() {
        for (th, pa, pb) in [(FRAC_PI_2, 0.03, -0.02), (0.4, 0.0, 0.1), (-1.1, 0.2, 0.2)] {
            let h = kron(&pauli('X'), &pauli('X')) * C64::new(th, 0.0)
                + kron(&pauli('Z'), &pauli('I')) * C64::new(pa, 0.0)
                + kron(&pauli('I'), &pauli('Z')) * C64::new(pb, 0.0);
            let want = expm_oracle(&h);
            let u = stark_xx_matrix(th, pa, pb);
            for r in 0..4 {
                for c in 0..4 {
                    assert!((u[r][c] - want[(r, c)]).norm() < 1e-12);
                }
            }
        }
        let u = stark_xx_matrix(0.7, 0.0, 0.0);
        let g = gate_matrix(&GateOp::xx(0, 1, 0.7));
        assert!((u[0][3] - g[(0, 3)]).norm() < 1e-15 && (u[1][1] - g[(1, 1)]).norm() < 1e-15);
    }

    #[test]
    fn noiseless_model_leaves_gates_unchanged() {
        let model = NoiseModel::new(crate::noise::NoiseCalibration::reference(), NoiseSources::none());
        let mut rng = stream(1, 0);
        for op in [GateOp::r(0, 0.3, 0.2), GateOp::xx(1, 4, -0.5), GateOp::rz(2, 1.0)] {
            assert_eq!(perturb_gate(&op, 500.0, &model, None, &mut rng).unwrap(), vec![NoisyOp::Gate(op.clone())]);
        }
        assert!(perturb_gate(&GateOp::ry(0, 0.1), 0.0, &model, None, &mut rng).is_err());
    }

    #[test]
    fn axial_rescales_angles() {
        let model = NoiseModel::new(
            crate::noise::NoiseCalibration::reference(),
            NoiseSources::only(crate::noise::NoiseSource::Axial),
        );
        let mut rng = stream(1, 0);
        let eps = model.angle_error(0, 400.0).unwrap();
        let out = perturb_gate(&GateOp::xx(0, 1, 1.0), 400.0, &model, None, &mut rng).unwrap();
        assert_eq!(out, vec![NoisyOp::Gate(GateOp::xx(0, 1, 1.0 - 2.0 * eps))]);
    }
}

//! Method of moving asymptotes for the volume-constrained compliance problem.
//!
//! Single inequality constraint, box bounds [0, 1]. The convex separable
//! subproblem is solved in the dual: for a given multiplier the primal
//! minimizer is closed-form, and the multiplier is found by bisection on the
//! constraint residual. Asymptotes start at half the variable range and adapt
//! by factors 1.2 / 0.7 depending on the oscillation of the last two steps.

use crate::error::FeaError;

#[derive(Debug, Clone)]
pub struct MmaState {
    n: usize,
    iter: usize,
    x_prev: Vec<f64>,
    x_prev2: Vec<f64>,
    low: Vec<f64>,
    upp: Vec<f64>,
    pub move_limit: f64,
    pub asym_init: f64,
    pub asym_expand: f64,
    pub asym_shrink: f64,
}

const X_MIN: f64 = 0.0;
const X_MAX: f64 = 1.0;
const RANGE: f64 = X_MAX - X_MIN;
const RAA: f64 = 1e-5;
const DUAL_TOL: f64 = 1e-9;

impl MmaState {
    pub fn new(n: usize) -> Self {
        MmaState {
            n,
            iter: 0,
            x_prev: vec![0.0; n],
            x_prev2: vec![0.0; n],
            low: vec![0.0; n],
            upp: vec![0.0; n],
            move_limit: 0.5,
            asym_init: 0.5,
            asym_expand: 1.2,
            asym_shrink: 0.7,
        }
    }

    #[inline]
    pub fn n(&self) -> usize {
        self.n
    }

    /// One MMA step minimizing the linearized objective subject to
    /// `v + dv . (x - x_cur) <= vstar` (in MMA form) and the box bounds.
    pub fn update(
        &mut self,
        x: &[f64],
        dc: &[f64],
        v: f64,
        dv: &[f64],
        vstar: f64,
    ) -> Result<Vec<f64>, FeaError> {
        assert_eq!(x.len(), self.n);
        assert_eq!(dc.len(), self.n);
        assert_eq!(dv.len(), self.n);
        if vstar <= 0.0 {
            return Err(FeaError::Config(format!(
                "volume bound must be positive, got {vstar}"
            )));
        }
        self.iter += 1;
        let n = self.n;
        if self.iter <= 2 {
            for j in 0..n {
                self.low[j] = x[j] - self.asym_init * RANGE;
                self.upp[j] = x[j] + self.asym_init * RANGE;
            }
        } else {
            for j in 0..n {
                let osc = (x[j] - self.x_prev[j]) * (self.x_prev[j] - self.x_prev2[j]);
                let gamma = if osc > 0.0 {
                    self.asym_expand
                } else if osc < 0.0 {
                    self.asym_shrink
                } else {
                    1.0
                };
                self.low[j] = x[j] - gamma * (self.x_prev[j] - self.low[j]);
                self.upp[j] = x[j] + gamma * (self.upp[j] - self.x_prev[j]);
                self.low[j] = self.low[j].clamp(x[j] - 10.0 * RANGE, x[j] - 0.01 * RANGE);
                self.upp[j] = self.upp[j].clamp(x[j] + 0.01 * RANGE, x[j] + 10.0 * RANGE);
            }
        }
        let mut alpha = vec![0.0; n];
        let mut beta = vec![0.0; n];
        let mut p0 = vec![0.0; n];
        let mut q0 = vec![0.0; n];
        let mut p1 = vec![0.0; n];
        let mut q1 = vec![0.0; n];
        for j in 0..n {
            let ux = self.upp[j] - x[j];
            let xl = x[j] - self.low[j];
            alpha[j] = (self.low[j] + 0.1 * xl)
                .max(x[j] - self.move_limit * RANGE)
                .max(X_MIN);
            beta[j] = (self.upp[j] - 0.1 * ux)
                .min(x[j] + self.move_limit * RANGE)
                .min(X_MAX);
            let dcp = dc[j].max(0.0);
            let dcm = (-dc[j]).max(0.0);
            let base = 0.001 * dc[j].abs() + RAA / (self.upp[j] - self.low[j]);
            p0[j] = ux * ux * (dcp + base);
            q0[j] = xl * xl * (dcm + base);
            let dvp = dv[j].max(0.0);
            let dvm = (-dv[j]).max(0.0);
            p1[j] = ux * ux * dvp;
            q1[j] = xl * xl * dvm;
        }
        // constraint in subproblem form: sum p1/(U-x) + q1/(x-L) <= b
        let mut b = -(v - vstar);
        for j in 0..n {
            b += p1[j] / (self.upp[j] - x[j]) + q1[j] / (x[j] - self.low[j]);
        }

        let x_of = |lambda: f64, out: &mut Vec<f64>| {
            for j in 0..n {
                let pj = (p0[j] + lambda * p1[j]).sqrt();
                let qj = (q0[j] + lambda * q1[j]).sqrt();
                let xj = (pj * self.low[j] + qj * self.upp[j]) / (pj + qj);
                out[j] = xj.clamp(alpha[j], beta[j]);
            }
        };
        let g_of = |xs: &[f64]| -> f64 {
            let mut g = -b;
            for j in 0..n {
                g += p1[j] / (self.upp[j] - xs[j]) + q1[j] / (xs[j] - self.low[j]);
            }
            g
        };

        let mut xs = vec![0.0; n];
        x_of(0.0, &mut xs);
        if g_of(&xs) > DUAL_TOL {
            // bracket the multiplier and bisect
            let mut lo = 0.0;
            let mut hi = 1.0;
            x_of(hi, &mut xs);
            let mut guard = 0;
            while g_of(&xs) > 0.0 && guard < 200 {
                hi *= 2.0;
                x_of(hi, &mut xs);
                guard += 1;
            }
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                x_of(mid, &mut xs);
                let g = g_of(&xs);
                if g.abs() <= DUAL_TOL {
                    break;
                }
                if g > 0.0 {
                    lo = mid;
                } else {
                    hi = mid;
                }
                if hi - lo < 1e-15 * hi.max(1.0) {
                    break;
                }
            }
        }
        self.x_prev2 = std::mem::take(&mut self.x_prev);
        self.x_prev = x.to_vec();
        if self.x_prev2.is_empty() {
            self.x_prev2 = vec![0.0; n];
        }
        Ok(xs)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_sensitivity_feasible_is_stationary() {
        let mut mma = MmaState::new(5);
        let x = vec![0.4; 5];
        let dc = vec![0.0; 5];
        let dv = vec![1.0; 5];
        let v = 0.4 * 5.0;
        let xn = mma.update(&x, &dc, v, &dv, 10.0).unwrap();
        for j in 0..5 {
            assert!((xn[j] - x[j]).abs() < 1e-12);
        }
    }

    #[test]
    fn stays_in_box_and_move_limits() {
        let mut mma = MmaState::new(4);
        let x = vec![0.9, 0.1, 0.5, 0.99];
        let dc = vec![-100.0, -5.0, -1e3, -0.1];
        let dv = vec![1.0; 4];
        let v: f64 = x.iter().sum();
        let xn = mma.update(&x, &dc, v, &dv, v * 0.8).unwrap();
        for j in 0..4 {
            assert!((0.0..=1.0).contains(&xn[j]));
            assert!((xn[j] - x[j]).abs() <= 0.5 + 1e-12);
        }
    }

    #[test]
    fn single_variable_volume_bound() {
        // minimize -rho subject to rho V0 <= 0.3 V0: optimum at rho = 0.3.
        let v0 = 2.5;
        let mut mma = MmaState::new(1);
        let mut x = vec![1.0];
        for _ in 0..30 {
            let dc = vec![-1.0];
            let dv = vec![v0];
            let v = x[0] * v0;
            x = mma.update(&x, &dc, v, &dv, 0.3 * v0).unwrap();
        }
        assert!(
            (x[0] - 0.3).abs() < 1e-6,
            "expected 0.3, got {} after 30 iterations",
            x[0]
        );
    }

    #[test]
    fn rejects_nonpositive_bound() {
        let mut mma = MmaState::new(1);
        assert!(mma
            .update(&[0.5], &[-1.0], 0.5, &[1.0], 0.0)
            .is_err());
    }

    #[test]
    fn feasibility_maintained_after_feasible_iterate() {
        let v0 = [1.0, 2.0, 1.5, 0.5];
        let vstar = 0.4 * v0.iter().sum::<f64>();
        let mut mma = MmaState::new(4);
        let mut x = vec![1.0; 4];
        for it in 0..40 {
            let dc: Vec<f64> = (0..4).map(|j| -(1.0 + j as f64)).collect();
            let dv = v0.to_vec();
            let v: f64 = x.iter().zip(&v0).map(|(&a, &b)| a * b).sum();
            x = mma.update(&x, &dc, v, &dv, vstar).unwrap();
            let v_new: f64 = x.iter().zip(&v0).map(|(&a, &b)| a * b).sum();
            if it >= 3 {
                assert!(
                    v_new <= vstar * (1.0 + 1e-6),
                    "constraint violated at iter {}: {} > {}",
                    it,
                    v_new,
                    vstar
                );
            }
        }
    }
}

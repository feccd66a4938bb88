//! Linear solve strategy for the optimization loop.
//!
//! SIMP iterations change only per-element scale factors, so the stiffness
//! pattern is constant per mesh level. The first solve computes a block
//! LDL^T factorization with a nested-dissection ordering; later solves run
//! preconditioned CG against the most recent factor and refactor (reusing
//! the symbolic analysis) when CG stalls.

use crate::blocksparse::{BlockCsc, BlockLdl, BlockLdlSymbolic};
use crate::error::FeaError;

pub struct ShellSolver {
    order: Vec<usize>,
    ldl: Option<BlockLdl>,
    /// CG iteration cap before refactorizing.
    pub max_cg: usize,
    /// CG relative-residual target; the contract checked after every solve is 1e-9.
    pub cg_tol: f64,
    stats: SolveStats,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct SolveStats {
    pub factorizations: usize,
    pub cg_solves: usize,
    pub cg_iterations: usize,
}

impl ShellSolver {
    /// `order[k]` is the basis function (block) eliminated at step `k`.
    pub fn new(order: Vec<usize>) -> Self {
        ShellSolver {
            order,
            ldl: None,
            max_cg: 50,
            cg_tol: 1e-11,
            stats: SolveStats::default(),
        }
    }

    pub fn stats(&self) -> SolveStats {
        self.stats
    }

    pub fn solve(&mut self, k: &BlockCsc, f: &[f64]) -> Result<Vec<f64>, FeaError> {
        let fnorm = norm(f);
        if fnorm == 0.0 {
            return Ok(vec![0.0; f.len()]);
        }
        let u = match &self.ldl {
            None => {
                let sym = BlockLdlSymbolic::new(k, self.order.clone());
                let ldl = BlockLdl::factor(sym, k)?;
                self.stats.factorizations += 1;
                let u = ldl.solve(f);
                self.ldl = Some(ldl);
                u
            }
            Some(_) => match self.pcg(k, f, fnorm) {
                Some(u) => u,
                None => {
                    let ldl = self.ldl.as_mut().expect("factor exists");
                    ldl.refactor(k)?;
                    self.stats.factorizations += 1;
                    ldl.solve(f)
                }
            },
        };
        let residual = rel_residual(k, &u, f, fnorm);
        if residual > 1e-9 {
            return Err(FeaError::ResidualTooLarge {
                residual,
                tol: 1e-9,
            });
        }
        Ok(u)
    }

    /// Preconditioned CG against the last factorization. `None` when the
    /// target is not reached within the iteration cap.
    fn pcg(&mut self, k: &BlockCsc, f: &[f64], fnorm: f64) -> Option<Vec<f64>> {
        let ldl = self.ldl.as_ref().expect("preconditioner exists");
        let n = f.len();
        let mut x = ldl.solve(f);
        let mut kx = vec![0.0; n];
        k.spmv(&x, &mut kx);
        let mut r: Vec<f64> = f.iter().zip(&kx).map(|(&a, &b)| a - b).collect();
        if norm(&r) <= self.cg_tol * fnorm {
            self.stats.cg_solves += 1;
            return Some(x);
        }
        let mut z = ldl.solve(&r);
        let mut p = z.clone();
        let mut rz = dot(&r, &z);
        let mut kp = vec![0.0; n];
        for it in 0..self.max_cg {
            k.spmv(&p, &mut kp);
            let pkp = dot(&p, &kp);
            if pkp <= 0.0 || !pkp.is_finite() {
                return None;
            }
            let alpha = rz / pkp;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * kp[i];
            }
            if norm(&r) <= self.cg_tol * fnorm {
                self.stats.cg_solves += 1;
                self.stats.cg_iterations += it + 1;
                return Some(x);
            }
            z = ldl.solve(&r);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
        None
    }
}

pub fn rel_residual(k: &BlockCsc, x: &[f64], f: &[f64], fnorm: f64) -> f64 {
    let mut kx = vec![0.0; f.len()];
    k.spmv(x, &mut kx);
    let r2: f64 = f
        .iter()
        .zip(&kx)
        .map(|(&a, &b)| (a - b) * (a - b))
        .sum();
    r2.sqrt() / fnorm
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(&x, &y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::blocksparse::{Block, ZERO_BLOCK, B};

    /// Block-tridiagonal SPD test matrix.
    fn block_tridiag(nb: usize, scale: f64) -> BlockCsc {
        let off: Block = {
            let mut b = ZERO_BLOCK;
            for c in 0..B {
                for r in 0..B {
                    b[c * B + r] = if r == c { -1.0 } else { 0.1 };
                }
            }
            b
        };
        let mut colptr = vec![0usize];
        let mut rowidx = Vec::new();
        let mut data = Vec::new();
        for c in 0..nb {
            for r in c.saturating_sub(1)..(c + 2).min(nb) {
                if r == c {
                    let mut d = ZERO_BLOCK;
                    for i in 0..B {
                        d[i * B + i] = scale * (6.0 + 0.05 * (c * B + i) as f64);
                    }
                    rowidx.push(r as u32);
                    data.push(d);
                } else {
                    let mut o = off;
                    for v in o.iter_mut() {
                        *v *= scale;
                    }
                    rowidx.push(r as u32);
                    data.push(o);
                }
            }
            colptr.push(rowidx.len());
        }
        BlockCsc {
            n: nb,
            colptr,
            rowidx,
            data,
        }
    }

    #[test]
    fn direct_solve_small_residual() {
        let k = block_tridiag(20, 1.0);
        let mut solver = ShellSolver::new((0..20).collect());
        let f: Vec<f64> = (0..k.n_scalar()).map(|i| (i as f64 * 0.41).sin()).collect();
        let u = solver.solve(&k, &f).unwrap();
        assert!(rel_residual(&k, &u, &f, norm(&f)) < 1e-12);
    }

    #[test]
    fn zero_rhs_gives_zero() {
        let k = block_tridiag(8, 1.0);
        let mut solver = ShellSolver::new((0..8).collect());
        let u = solver.solve(&k, &vec![0.0; k.n_scalar()]).unwrap();
        assert!(u.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn pcg_reuses_factor_for_scaled_matrix() {
        let k = block_tridiag(25, 1.0);
        let mut solver = ShellSolver::new((0..25).collect());
        let f: Vec<f64> = (0..k.n_scalar()).map(|i| 1.0 + (i % 5) as f64).collect();
        let _ = solver.solve(&k, &f).unwrap();
        assert_eq!(solver.stats().factorizations, 1);
        let k2 = block_tridiag(25, 1.07);
        let u2 = solver.solve(&k2, &f).unwrap();
        assert!(rel_residual(&k2, &u2, &f, norm(&f)) < 1e-9);
        assert_eq!(solver.stats().factorizations, 1);
        assert!(solver.stats().cg_solves >= 1);
    }

    #[test]
    fn scrambled_elimination_order() {
        let k = block_tridiag(16, 1.0);
        let mut order: Vec<usize> = (0..16).collect();
        order.reverse();
        order.swap(2, 11);
        let mut solver = ShellSolver::new(order);
        let f: Vec<f64> = (0..k.n_scalar()).map(|i| ((i * 7) % 13) as f64 - 6.0).collect();
        let u = solver.solve(&k, &f).unwrap();
        assert!(rel_residual(&k, &u, &f, norm(&f)) < 1e-11);
    }

    #[test]
    fn linearity_of_solutions() {
        let k = block_tridiag(10, 1.0);
        let mut solver = ShellSolver::new((0..10).collect());
        let f: Vec<f64> = (0..k.n_scalar()).map(|i| (i as f64).cos()).collect();
        let u1 = solver.solve(&k, &f).unwrap();
        let f2: Vec<f64> = f.iter().map(|&x| 2.0 * x).collect();
        let u2 = solver.solve(&k, &f2).unwrap();
        for i in 0..f.len() {
            assert!((u2[i] - 2.0 * u1[i]).abs() < 1e-10 * u1[i].abs().max(1.0));
        }
    }
}

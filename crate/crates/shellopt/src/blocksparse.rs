//! Block-sparse symmetric matrices with 5x5 blocks and a block LDL^T
//! factorization.
//!
//! The shell discretization couples basis functions, each carrying five
//! DOFs, so the stiffness matrix is block-sparse with dense 5x5 blocks.
//! Factoring at block granularity keeps the elimination-tree machinery at
//! 1/16th of the scalar index volume and turns the inner updates into dense
//! 5x5 multiplies.
//!
//! `A = L D L^T` with block-unit-lower `L` and block-diagonal `D`. Row `k` of
//! `L` is computed up-looking over the pattern given by the elimination tree;
//! per visited column the update is `Y_r -= Y_i L_ri^T`, then
//! `L_ki = Y_i D_i^{-1}` and `D_k -= L_ki Y_i^T`.

use crate::error::FeaError;

pub const B: usize = 5;
pub const BB: usize = B * B;

/// Dense 5x5 block stored column-major: `m[c * B + r]`.
pub type Block = [f64; BB];

pub const ZERO_BLOCK: Block = [0.0; BB];

#[inline]
fn gemm_nt(acc: &mut Block, a: &Block, b: &Block) {
    // acc -= a * b^T
    for c in 0..B {
        for k in 0..B {
            let bv = b[k * B + c]; // b^T[k][c] = b[c][k] col-major => b[k * B + c]
            if bv != 0.0 {
                for r in 0..B {
                    acc[c * B + r] -= a[k * B + r] * bv;
                }
            }
        }
    }
}

#[inline]
fn gemm_nn(out: &mut Block, a: &Block, b: &Block) {
    // out = a * b
    *out = ZERO_BLOCK;
    for c in 0..B {
        for k in 0..B {
            let bv = b[c * B + k];
            if bv != 0.0 {
                for r in 0..B {
                    out[c * B + r] += a[k * B + r] * bv;
                }
            }
        }
    }
}

/// In-place inverse via dense LU with partial pivoting.
fn invert(a: &Block) -> Option<Block> {
    let mut lu = *a;
    let mut piv = [0usize; B];
    for (i, p) in piv.iter_mut().enumerate() {
        *p = i;
    }
    for k in 0..B {
        let mut best = k;
        let mut bv = lu[k * B + k].abs();
        for r in (k + 1)..B {
            let v = lu[k * B + r].abs();
            if v > bv {
                best = r;
                bv = v;
            }
        }
        if bv == 0.0 {
            return None;
        }
        if best != k {
            piv.swap(k, best);
            for c in 0..B {
                lu.swap(c * B + k, c * B + best);
            }
        }
        let d = lu[k * B + k];
        for r in (k + 1)..B {
            lu[k * B + r] /= d;
        }
        for c in (k + 1)..B {
            let m = lu[c * B + k];
            if m != 0.0 {
                for r in (k + 1)..B {
                    lu[c * B + r] -= lu[k * B + r] * m;
                }
            }
        }
    }
    let mut inv = ZERO_BLOCK;
    for col in 0..B {
        let mut x = [0.0; B];
        x[piv.iter().position(|&p| p == col).unwrap()] = 1.0;
        // forward
        for r in 0..B {
            for k in 0..r {
                x[r] -= lu[k * B + r] * x[k];
            }
        }
        // backward
        for r in (0..B).rev() {
            for k in (r + 1)..B {
                x[r] -= lu[k * B + r] * x[k];
            }
            x[r] /= lu[r * B + r];
        }
        for r in 0..B {
            inv[col * B + r] = x[r];
        }
    }
    Some(inv)
}

/// Symmetric block-CSC matrix (both triangles stored).
#[derive(Debug, Clone)]
pub struct BlockCsc {
    pub n: usize,
    pub colptr: Vec<usize>,
    pub rowidx: Vec<u32>,
    pub data: Vec<Block>,
}

impl BlockCsc {
    pub fn n_scalar(&self) -> usize {
        self.n * B
    }

    /// `y = A x` over scalar vectors.
    pub fn spmv(&self, x: &[f64], y: &mut [f64]) {
        y.fill(0.0);
        for col in 0..self.n {
            let xc = &x[col * B..(col + 1) * B];
            for p in self.colptr[col]..self.colptr[col + 1] {
                let row = self.rowidx[p] as usize;
                let blk = &self.data[p];
                let yr = &mut y[row * B..(row + 1) * B];
                for c in 0..B {
                    let xv = xc[c];
                    if xv != 0.0 {
                        for r in 0..B {
                            yr[r] += blk[c * B + r] * xv;
                        }
                    }
                }
            }
        }
    }

    pub fn find(&self, row: usize, col: usize) -> Option<usize> {
        let lo = self.colptr[col];
        let hi = self.colptr[col + 1];
        self.rowidx[lo..hi]
            .binary_search(&(row as u32))
            .ok()
            .map(|k| lo + k)
    }
}

/// Symbolic structure of the factor: computed once per sparsity pattern.
pub struct BlockLdlSymbolic {
    n: usize,
    /// order[k] = original block eliminated at step k
    order: Vec<usize>,
    /// inverse permutation: iperm[orig] = elimination step
    iperm: Vec<usize>,
    parent: Vec<i64>,
    l_colptr: Vec<usize>,
}

impl BlockLdlSymbolic {
    pub fn new(a: &BlockCsc, order: Vec<usize>) -> BlockLdlSymbolic {
        let n = a.n;
        assert_eq!(order.len(), n);
        let mut iperm = vec![0usize; n];
        for (k, &o) in order.iter().enumerate() {
            iperm[o] = k;
        }
        let mut parent = vec![-1i64; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_nz = vec![0usize; n];
        for k in 0..n {
            let orig = order[k];
            flag[k] = k;
            for p in a.colptr[orig]..a.colptr[orig + 1] {
                let mut i = iperm[a.rowidx[p] as usize];
                if i < k {
                    while flag[i] != k {
                        if parent[i] == -1 {
                            parent[i] = k as i64;
                        }
                        l_nz[i] += 1;
                        flag[i] = k;
                        i = parent[i] as usize;
                    }
                }
            }
        }
        let mut l_colptr = Vec::with_capacity(n + 1);
        let mut acc = 0usize;
        l_colptr.push(0);
        for &nz in &l_nz {
            acc += nz;
            l_colptr.push(acc);
        }
        BlockLdlSymbolic {
            n,
            order,
            iperm,
            parent,
            l_colptr,
        }
    }

    pub fn factor_nnz_blocks(&self) -> usize {
        self.l_colptr[self.n]
    }
}

/// Numeric block LDL^T factorization.
pub struct BlockLdl {
    sym: BlockLdlSymbolic,
    l_rowidx: Vec<u32>,
    l_data: Vec<Block>,
    d_inv: Vec<Block>,
}

impl BlockLdl {
    pub fn factor(sym: BlockLdlSymbolic, a: &BlockCsc) -> Result<BlockLdl, FeaError> {
        let mut ldl = BlockLdl {
            l_rowidx: vec![0; sym.l_colptr[sym.n]],
            l_data: vec![ZERO_BLOCK; sym.l_colptr[sym.n]],
            d_inv: vec![ZERO_BLOCK; sym.n],
            sym,
        };
        ldl.refactor(a)?;
        Ok(ldl)
    }

    /// Recomputes the numeric factor for a matrix with the same pattern.
    pub fn refactor(&mut self, a: &BlockCsc) -> Result<(), FeaError> {
        let n = self.sym.n;
        let mut y = vec![ZERO_BLOCK; n];
        let mut pattern = vec![0usize; n];
        let mut path = vec![0usize; n];
        let mut flag = vec![usize::MAX; n];
        let mut l_nz = vec![0usize; n];
        for k in 0..n {
            let orig = self.sym.order[k];
            flag[k] = k;
            let mut top = n;
            let mut d_k = ZERO_BLOCK;
            for p in a.colptr[orig]..a.colptr[orig + 1] {
                let io = a.rowidx[p] as usize;
                let i = self.sym.iperm[io];
                if i > k {
                    continue;
                }
                // Stored block is A[io, orig]; in permuted space we need
                // A[k, i] = A[orig, io] = (A[io, orig])^T.
                if i == k {
                    d_k = transpose(&a.data[p]);
                } else {
                    // walk the elimination tree to build the row pattern in
                    // topological order (descendants first)
                    let mut len = 0usize;
                    let mut j = i;
                    while flag[j] != k {
                        path[len] = j;
                        len += 1;
                        flag[j] = k;
                        j = self.sym.parent[j] as usize;
                    }
                    while len > 0 {
                        len -= 1;
                        top -= 1;
                        pattern[top] = path[len];
                    }
                    let tb = transpose(&a.data[p]);
                    add(&mut y[i], &tb);
                }
            }
            for idx in top..n {
                let i = pattern[idx];
                let yi = y[i];
                y[i] = ZERO_BLOCK;
                // L[k,i] = Y_i D_i^{-1}
                let mut l_ki = ZERO_BLOCK;
                gemm_nn(&mut l_ki, &yi, &self.d_inv[i]);
                // propagate: for rows r > i already in column i: Y_r -= Y_i L_ri^T
                let p0 = self.sym.l_colptr[i];
                let p1 = p0 + l_nz[i];
                for p in p0..p1 {
                    let r = self.l_rowidx[p] as usize;
                    gemm_nt(&mut y[r], &yi, &self.l_data[p]);
                }
                // D_k -= L_ki Y_i^T
                gemm_nt(&mut d_k, &l_ki, &yi);
                // append L[k,i]
                self.l_rowidx[p1] = k as u32;
                self.l_data[p1] = l_ki;
                l_nz[i] += 1;
            }
            self.d_inv[k] = invert(&d_k).ok_or_else(|| {
                FeaError::SolveFailed(format!("singular diagonal block at elimination step {k}"))
            })?;
        }
        Ok(())
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.sym.n;
        debug_assert_eq!(b.len(), n * B);
        // permute
        let mut z = vec![0.0; n * B];
        for k in 0..n {
            let o = self.sym.order[k];
            z[k * B..(k + 1) * B].copy_from_slice(&b[o * B..(o + 1) * B]);
        }
        // forward: L z' = z (column sweep); L stored by columns with rows > col
        for i in 0..n {
            let zi: [f64; B] = z[i * B..(i + 1) * B].try_into().unwrap();
            for p in self.sym.l_colptr[i]..self.sym.l_colptr[i + 1] {
                let r = self.l_rowidx[p] as usize;
                let blk = &self.l_data[p];
                let zr = &mut z[r * B..(r + 1) * B];
                for c in 0..B {
                    let v = zi[c];
                    if v != 0.0 {
                        for rr in 0..B {
                            // L[r,i] acts from the left: z_r -= L_ri z_i
                            zr[rr] -= blk[c * B + rr] * v;
                        }
                    }
                }
            }
        }
        // diagonal: w = D^{-1} z
        for k in 0..n {
            let zk: [f64; B] = z[k * B..(k + 1) * B].try_into().unwrap();
            let inv = &self.d_inv[k];
            let out = &mut z[k * B..(k + 1) * B];
            for r in 0..B {
                let mut acc = 0.0;
                for c in 0..B {
                    acc += inv[c * B + r] * zk[c];
                }
                out[r] = acc;
            }
        }
        // backward: L^T x = w: x_i = w_i - sum_{r>i} L_ri^T x_r
        for i in (0..n).rev() {
            let mut xi: [f64; B] = z[i * B..(i + 1) * B].try_into().unwrap();
            for p in self.sym.l_colptr[i]..self.sym.l_colptr[i + 1] {
                let r = self.l_rowidx[p] as usize;
                let blk = &self.l_data[p];
                let xr = &z[r * B..(r + 1) * B];
                for c in 0..B {
                    let mut acc = 0.0;
                    for rr in 0..B {
                        acc += blk[c * B + rr] * xr[rr];
                    }
                    // (L_ri^T x_r)[c] = sum_rr L_ri[rr, c] x_r[rr]
                    xi[c] -= acc;
                }
            }
            z[i * B..(i + 1) * B].copy_from_slice(&xi);
        }
        // unpermute
        let mut x = vec![0.0; n * B];
        for k in 0..n {
            let o = self.sym.order[k];
            x[o * B..(o + 1) * B].copy_from_slice(&z[k * B..(k + 1) * B]);
        }
        x
    }

    pub fn nnz_blocks(&self) -> usize {
        self.sym.factor_nnz_blocks()
    }
}

#[inline]
fn transpose(a: &Block) -> Block {
    let mut t = ZERO_BLOCK;
    for c in 0..B {
        for r in 0..B {
            t[r * B + c] = a[c * B + r];
        }
    }
    t
}

#[inline]
fn add(acc: &mut Block, a: &Block) {
    for (x, y) in acc.iter_mut().zip(a.iter()) {
        *x += y;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Dense symmetric random-ish SPD matrix assembled into block CSC.
    fn random_spd(nb: usize, bandwidth: usize, seed: u64) -> (BlockCsc, Vec<Vec<f64>>) {
        let n = nb * B;
        let mut state = seed;
        let mut rng = move || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 33) as f64 / (1u64 << 31) as f64) - 1.0
        };
        let mut dense = vec![vec![0.0f64; n]; n];
        for i in 0..n {
            for j in 0..=i {
                let bi = i / B;
                let bj = j / B;
                if bi.abs_diff(bj) <= bandwidth {
                    let v = 0.3 * rng();
                    dense[i][j] = v;
                    dense[j][i] = v;
                }
            }
        }
        for (i, row) in dense.iter_mut().enumerate() {
            row[i] += 8.0 + 0.1 * i as f64; // diagonally dominant => SPD
        }
        let mut colptr = vec![0usize];
        let mut rowidx = Vec::new();
        let mut data = Vec::new();
        for bc in 0..nb {
            for br in 0..nb {
                if br.abs_diff(bc) <= bandwidth {
                    let mut blk = ZERO_BLOCK;
                    for c in 0..B {
                        for r in 0..B {
                            blk[c * B + r] = dense[br * B + r][bc * B + c];
                        }
                    }
                    rowidx.push(br as u32);
                    data.push(blk);
                }
            }
            colptr.push(rowidx.len());
        }
        (
            BlockCsc {
                n: nb,
                colptr,
                rowidx,
                data,
            },
            dense,
        )
    }

    fn dense_solve(a: &[Vec<f64>], b: &[f64]) -> Vec<f64> {
        let n = b.len();
        let mut m: Vec<Vec<f64>> = a.to_vec();
        let mut x = b.to_vec();
        for k in 0..n {
            let mut piv = k;
            for r in (k + 1)..n {
                if m[r][k].abs() > m[piv][k].abs() {
                    piv = r;
                }
            }
            m.swap(k, piv);
            x.swap(k, piv);
            let d = m[k][k];
            for r in (k + 1)..n {
                let f = m[r][k] / d;
                if f != 0.0 {
                    for c in k..n {
                        m[r][c] -= f * m[k][c];
                    }
                    x[r] -= f * x[k];
                }
            }
        }
        for k in (0..n).rev() {
            for c in (k + 1)..n {
                x[k] -= m[k][c] * x[c];
            }
            x[k] /= m[k][k];
        }
        x
    }

    #[test]
    fn block_inverse() {
        let mut a = ZERO_BLOCK;
        for c in 0..B {
            for r in 0..B {
                a[c * B + r] = if r == c { 3.0 + r as f64 } else { 0.2 * (r + c) as f64 };
            }
        }
        let inv = invert(&a).unwrap();
        let mut prod = ZERO_BLOCK;
        gemm_nn(&mut prod, &a, &inv);
        for c in 0..B {
            for r in 0..B {
                let want = if r == c { 1.0 } else { 0.0 };
                assert!((prod[c * B + r] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn factor_matches_dense_solve() {
        for seed in [1u64, 7, 42] {
            let (a, dense) = random_spd(12, 3, seed);
            let b: Vec<f64> = (0..a.n_scalar()).map(|i| ((i * 31 % 17) as f64) - 8.0).collect();
            let sym = BlockLdlSymbolic::new(&a, (0..a.n).collect());
            let ldl = BlockLdl::factor(sym, &a).unwrap();
            let x = ldl.solve(&b);
            let xd = dense_solve(&dense, &b);
            for i in 0..b.len() {
                assert!(
                    (x[i] - xd[i]).abs() < 1e-8 * xd[i].abs().max(1.0),
                    "seed {} entry {}: {} vs {}",
                    seed,
                    i,
                    x[i],
                    xd[i]
                );
            }
        }
    }

    #[test]
    fn factor_with_permutation() {
        let (a, dense) = random_spd(10, 2, 3);
        let b: Vec<f64> = (0..a.n_scalar()).map(|i| (i as f64 * 0.37).sin()).collect();
        let mut order: Vec<usize> = (0..a.n).collect();
        order.reverse();
        order.swap(2, 7);
        let sym = BlockLdlSymbolic::new(&a, order);
        let ldl = BlockLdl::factor(sym, &a).unwrap();
        let x = ldl.solve(&b);
        let xd = dense_solve(&dense, &b);
        for i in 0..b.len() {
            assert!((x[i] - xd[i]).abs() < 1e-8 * xd[i].abs().max(1.0));
        }
    }

    #[test]
    fn refactor_with_new_values() {
        let (a, _) = random_spd(8, 2, 9);
        let sym = BlockLdlSymbolic::new(&a, (0..a.n).collect());
        let mut ldl = BlockLdl::factor(sym, &a).unwrap();
        let mut a2 = a.clone();
        for blk in a2.data.iter_mut() {
            for v in blk.iter_mut() {
                *v *= 2.0;
            }
        }
        ldl.refactor(&a2).unwrap();
        let b = vec![1.0; a.n_scalar()];
        let x = ldl.solve(&b);
        let mut ax = vec![0.0; b.len()];
        a2.spmv(&x, &mut ax);
        for i in 0..b.len() {
            assert!((ax[i] - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn spmv_matches_dense() {
        let (a, dense) = random_spd(6, 2, 11);
        let x: Vec<f64> = (0..a.n_scalar()).map(|i| (i % 7) as f64 - 3.0).collect();
        let mut y = vec![0.0; x.len()];
        a.spmv(&x, &mut y);
        for r in 0..x.len() {
            let want: f64 = dense[r].iter().zip(&x).map(|(&m, &v)| m * v).sum();
            assert!((y[r] - want).abs() < 1e-10);
        }
    }
}

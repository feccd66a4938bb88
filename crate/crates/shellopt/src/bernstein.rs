//! Bicubic Bernstein patch utilities.
//!
//! A patch stores 16 Bézier ordinates over an element rectangle in local
//! `[0,1]^2` coordinates, indexed `j * 4 + i` with `i` along `s` and `j`
//! along `t`. The four 2x2 corner ordinate groups encode the Hermite data
//! `(f, f_s, f_t, f_st)` at the element corners.

/// 16 bicubic Bézier ordinates.
pub type Patch = [f64; 16];

pub const ZERO_PATCH: Patch = [0.0; 16];

#[inline]
pub fn pidx(i: usize, j: usize) -> usize {
    j * 4 + i
}

/// Cubic Bernstein basis values at `u`.
#[inline]
pub fn bern3(u: f64) -> [f64; 4] {
    let v = 1.0 - u;
    [v * v * v, 3.0 * v * v * u, 3.0 * v * u * u, u * u * u]
}

/// First derivatives of the cubic Bernstein basis at `u`.
#[inline]
pub fn bern3_d1(u: f64) -> [f64; 4] {
    let v = 1.0 - u;
    [
        -3.0 * v * v,
        3.0 * v * v - 6.0 * v * u,
        6.0 * v * u - 3.0 * u * u,
        3.0 * u * u,
    ]
}

/// Second derivatives of the cubic Bernstein basis at `u`.
#[inline]
pub fn bern3_d2(u: f64) -> [f64; 4] {
    let v = 1.0 - u;
    [6.0 * v, -12.0 * v + 6.0 * u, 6.0 * v - 12.0 * u, 6.0 * u]
}

#[inline]
fn decasteljau_step(c: &[f64], x: f64, out: &mut [f64]) {
    for k in 0..out.len() {
        out[k] = c[k] + x * (c[k + 1] - c[k]);
    }
}

/// Blossom of a cubic in Bernstein form.
#[inline]
pub fn blossom3(c: &[f64; 4], x1: f64, x2: f64, x3: f64) -> f64 {
    let mut a = [0.0; 3];
    decasteljau_step(c, x1, &mut a);
    let mut b = [0.0; 2];
    decasteljau_step(&a, x2, &mut b);
    b[0] + x3 * (b[1] - b[0])
}

/// Coefficients of `c` reparametrized to the subinterval `[a, b]` of `[0,1]`,
/// i.e. the Bernstein coefficients of `u -> c(a + (b - a) u)`.
#[inline]
pub fn restrict1(c: &[f64; 4], a: f64, b: f64) -> [f64; 4] {
    [
        blossom3(c, a, a, a),
        blossom3(c, a, a, b),
        blossom3(c, a, b, b),
        blossom3(c, b, b, b),
    ]
}

/// Restricts a patch to the sub-rectangle `[sa,sb] x [ta,tb]` in local coords.
pub fn patch_restrict(p: &Patch, sa: f64, sb: f64, ta: f64, tb: f64) -> Patch {
    let mut rows = [[0.0; 4]; 4];
    for j in 0..4 {
        let row = [p[pidx(0, j)], p[pidx(1, j)], p[pidx(2, j)], p[pidx(3, j)]];
        rows[j] = restrict1(&row, sa, sb);
    }
    let mut out = ZERO_PATCH;
    for i in 0..4 {
        let col = [rows[0][i], rows[1][i], rows[2][i], rows[3][i]];
        let col = restrict1(&col, ta, tb);
        for j in 0..4 {
            out[pidx(i, j)] = col[j];
        }
    }
    out
}

/// Builds a patch from 1D factor coefficients: `p(u, w) = f(u) g(w)`.
#[inline]
pub fn tensor_patch(f: &[f64; 4], g: &[f64; 4]) -> Patch {
    let mut out = ZERO_PATCH;
    for j in 0..4 {
        for i in 0..4 {
            out[pidx(i, j)] = f[i] * g[j];
        }
    }
    out
}

/// Value of the patch at local `(u, w)`.
#[inline]
pub fn patch_eval(p: &Patch, u: f64, w: f64) -> f64 {
    let bu = bern3(u);
    let bw = bern3(w);
    let mut acc = 0.0;
    for j in 0..4 {
        let mut row = 0.0;
        for i in 0..4 {
            row += p[pidx(i, j)] * bu[i];
        }
        acc += row * bw[j];
    }
    acc
}

/// Patch jet in local coordinates: value and derivatives up to second order.
#[derive(Debug, Clone, Copy, Default)]
pub struct PatchJet {
    pub f: f64,
    pub fu: f64,
    pub fw: f64,
    pub fuw: f64,
    pub fuu: f64,
    pub fww: f64,
}

pub fn patch_eval_jet(p: &Patch, u: f64, w: f64) -> PatchJet {
    let bu = bern3(u);
    let bw = bern3(w);
    let du = bern3_d1(u);
    let dw = bern3_d1(w);
    let d2u = bern3_d2(u);
    let d2w = bern3_d2(w);
    let mut jet = PatchJet::default();
    for j in 0..4 {
        let mut r = 0.0;
        let mut ru = 0.0;
        let mut ruu = 0.0;
        for i in 0..4 {
            let c = p[pidx(i, j)];
            r += c * bu[i];
            ru += c * du[i];
            ruu += c * d2u[i];
        }
        jet.f += r * bw[j];
        jet.fu += ru * bw[j];
        jet.fw += r * dw[j];
        jet.fuw += ru * dw[j];
        jet.fuu += ruu * bw[j];
        jet.fww += r * d2w[j];
    }
    jet
}

/// Ordinate indices of the 2x2 group at a corner (0 = ll, 1 = lr, 2 = ul, 3 = ur).
#[inline]
pub fn corner_group(corner: usize) -> [usize; 4] {
    let i0 = if corner & 1 == 0 { 0 } else { 2 };
    let j0 = if corner & 2 == 0 { 0 } else { 2 };
    [
        pidx(i0, j0),
        pidx(i0 + 1, j0),
        pidx(i0, j0 + 1),
        pidx(i0 + 1, j0 + 1),
    ]
}

#[inline]
pub fn zero_corner_group(p: &mut Patch, corner: usize) {
    for k in corner_group(corner) {
        p[k] = 0.0;
    }
}

#[inline]
pub fn corner_group_is_zero(p: &Patch, corner: usize) -> bool {
    corner_group(corner).iter().all(|&k| p[k] == 0.0)
}

/// Hermite data `[f, f_s, f_t, f_st]` at a corner, scaled to global derivatives
/// given the element dimensions `hs, ht`.
pub fn hermite_at_corner(p: &Patch, corner: usize, hs: f64, ht: f64) -> [f64; 4] {
    let (i0, sgn_s) = if corner & 1 == 0 { (0usize, 1.0) } else { (3usize, -1.0) };
    let (j0, sgn_t) = if corner & 2 == 0 { (0usize, 1.0) } else { (3usize, -1.0) };
    let i1 = (i0 as isize + sgn_s as isize) as usize;
    let j1 = (j0 as isize + sgn_t as isize) as usize;
    let f = p[pidx(i0, j0)];
    let fs = 3.0 * sgn_s * (p[pidx(i1, j0)] - p[pidx(i0, j0)]) / hs;
    let ft = 3.0 * sgn_t * (p[pidx(i0, j1)] - p[pidx(i0, j0)]) / ht;
    let fst = 9.0 * sgn_s * sgn_t
        * (p[pidx(i1, j1)] - p[pidx(i0, j1)] - p[pidx(i1, j0)] + p[pidx(i0, j0)])
        / (hs * ht);
    [f, fs, ft, fst]
}

/// Patch that carries the given corner Hermite data in its corner group and is
/// zero in all other ordinates.
pub fn patch_from_corner_hermite(h: &[f64; 4], corner: usize, hs: f64, ht: f64) -> Patch {
    let (i0, sgn_s) = if corner & 1 == 0 { (0usize, 1.0) } else { (3usize, -1.0) };
    let (j0, sgn_t) = if corner & 2 == 0 { (0usize, 1.0) } else { (3usize, -1.0) };
    let i1 = (i0 as isize + sgn_s as isize) as usize;
    let j1 = (j0 as isize + sgn_t as isize) as usize;
    let [f, fs, ft, fst] = *h;
    let mut p = ZERO_PATCH;
    p[pidx(i0, j0)] = f;
    p[pidx(i1, j0)] = f + sgn_s * hs * fs / 3.0;
    p[pidx(i0, j1)] = f + sgn_t * ht * ft / 3.0;
    p[pidx(i1, j1)] =
        f + sgn_s * hs * fs / 3.0 + sgn_t * ht * ft / 3.0 + sgn_s * sgn_t * hs * ht * fst / 9.0;
    p
}

#[cfg(test)]
mod tests {
    use super::*;

    fn poly(u: f64, w: f64) -> f64 {
        // an arbitrary bicubic
        (1.0 + 2.0 * u - u * u * u) * (0.5 - w + 3.0 * w * w + 0.25 * w * w * w)
    }

    fn fit_patch() -> Patch {
        // Interpolate via Bernstein coefficients of the 1D factors.
        // f(u) = 1 + 2u - u^3 -> power to Bernstein by evaluation fit:
        let f = bern_from_power(&[1.0, 2.0, 0.0, -1.0]);
        let g = bern_from_power(&[0.5, -1.0, 3.0, 0.25]);
        tensor_patch(&f, &g)
    }

    fn bern_from_power(a: &[f64; 4]) -> [f64; 4] {
        // b_k = sum_j a_j * C(k,j)/C(3,j)
        let choose = |n: i64, k: i64| -> f64 {
            if k < 0 || k > n {
                return 0.0;
            }
            let mut r = 1.0;
            for i in 0..k {
                r = r * (n - i) as f64 / (i + 1) as f64;
            }
            r
        };
        let mut b = [0.0; 4];
        for (k, bk) in b.iter_mut().enumerate() {
            for (j, aj) in a.iter().enumerate() {
                *bk += aj * choose(k as i64, j as i64) / choose(3, j as i64);
            }
        }
        b
    }

    #[test]
    fn eval_matches_polynomial() {
        let p = fit_patch();
        for &(u, w) in &[(0.0, 0.0), (0.3, 0.7), (1.0, 0.2), (0.5, 0.5)] {
            assert!((patch_eval(&p, u, w) - poly(u, w)).abs() < 1e-12);
        }
    }

    #[test]
    fn restrict_is_exact() {
        let p = fit_patch();
        let q = patch_restrict(&p, 0.25, 0.5, 0.5, 1.0);
        for &(u, w) in &[(0.0, 0.0), (0.4, 0.9), (1.0, 1.0)] {
            let gu = 0.25 + 0.25 * u;
            let gw = 0.5 + 0.5 * w;
            assert!((patch_eval(&q, u, w) - poly(gu, gw)).abs() < 1e-12);
        }
    }

    #[test]
    fn jet_matches_finite_differences() {
        let p = fit_patch();
        let (u, w) = (0.37, 0.61);
        let jet = patch_eval_jet(&p, u, w);
        let h = 1e-6;
        let fd_u = (patch_eval(&p, u + h, w) - patch_eval(&p, u - h, w)) / (2.0 * h);
        let fd_w = (patch_eval(&p, u, w + h) - patch_eval(&p, u, w - h)) / (2.0 * h);
        let fd_uw = (patch_eval(&p, u + h, w + h) - patch_eval(&p, u + h, w - h)
            - patch_eval(&p, u - h, w + h)
            + patch_eval(&p, u - h, w - h))
            / (4.0 * h * h);
        assert!((jet.fu - fd_u).abs() < 1e-6);
        assert!((jet.fw - fd_w).abs() < 1e-6);
        assert!((jet.fuw - fd_uw).abs() < 1e-4);
    }

    #[test]
    fn hermite_round_trip() {
        let hs = 0.25;
        let ht = 0.5;
        for corner in 0..4 {
            let h = [1.3, -0.7, 2.1, 0.9];
            let p = patch_from_corner_hermite(&h, corner, hs, ht);
            let back = hermite_at_corner(&p, corner, hs, ht);
            for k in 0..4 {
                assert!((h[k] - back[k]).abs() < 1e-12);
            }
        }
    }
}

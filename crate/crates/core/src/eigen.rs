//! Hermitian eigensolver: Householder reduction to a real symmetric tridiagonal
//! matrix followed by implicit QL iterations.

use nalgebra::DMatrix;

use crate::C64;

/// Eigenvalues (ascending) and, if requested, orthonormal eigenvectors (columns, stored
/// column-major) of the symmetric tridiagonal matrix with diagonal `diag` and
/// off-diagonal `off` (`off[i]` couples `i` and `i + 1`).
pub fn tridiagonal_eig(diag: &[f64], off: &[f64], vectors: bool) -> (Vec<f64>, Option<DMatrix<f64>>) {
    let n = diag.len();
    assert_eq!(off.len() + 1, n.max(1), "off-diagonal must have length n - 1");
    let mut d = diag.to_vec();
    let mut e: Vec<f64> = off.iter().copied().chain(std::iter::once(0.0)).take(n).collect();
    let mut z = if vectors { Some(DMatrix::<f64>::identity(n, n)) } else { None };
    if n == 0 {
        return (d, z);
    }
    let eps = f64::EPSILON;
    let mut f = 0.0;
    let mut tst1: f64 = 0.0;
    for l in 0..n {
        tst1 = tst1.max(d[l].abs() + e[l].abs());
        let mut m = l;
        while m < n - 1 && e[m].abs() > eps * tst1 {
            m += 1;
        }
        if m > l {
            let mut iter = 0;
            loop {
                iter += 1;
                let g = d[l];
                let mut p = (d[l + 1] - g) / (2.0 * e[l]);
                let mut r = p.hypot(1.0);
                if p < 0.0 {
                    r = -r;
                }
                d[l] = e[l] / (p + r);
                d[l + 1] = e[l] * (p + r);
                let dl1 = d[l + 1];
                let mut h = g - d[l];
                for di in d.iter_mut().skip(l + 2) {
                    *di -= h;
                }
                f += h;
                p = d[m];
                let (mut c, mut c2, mut c3) = (1.0, 1.0, 1.0);
                let el1 = e[l + 1];
                let (mut s, mut s2) = (0.0, 0.0);
                for i in (l..m).rev() {
                    c3 = c2;
                    c2 = c;
                    s2 = s;
                    let g = c * e[i];
                    h = c * p;
                    r = p.hypot(e[i]);
                    e[i + 1] = s * r;
                    s = e[i] / r;
                    c = p / r;
                    p = c * d[i] - s * g;
                    d[i + 1] = h + s * (c * g + s * d[i]);
                    if let Some(z) = z.as_mut() {
                        let (mut lo, mut hi) = z.columns_range_pair_mut(i, i + 1);
                        for k in 0..n {
                            let hk = hi[k];
                            hi[k] = s * lo[k] + c * hk;
                            lo[k] = c * lo[k] - s * hk;
                        }
                    }
                }
                p = -s * s2 * c3 * el1 * e[l] / dl1;
                e[l] = s * p;
                d[l] = c * p;
                if e[l].abs() <= eps * tst1 || iter > 60 {
                    if iter > 60 {
                        log::warn!("tridiagonal QL did not settle eigenvalue {l} within 60 sweeps");
                    }
                    break;
                }
            }
        }
        d[l] += f;
        e[l] = 0.0;
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| d[a].total_cmp(&d[b]));
    let vals = order.iter().map(|&i| d[i]).collect();
    let z = z.map(|z| DMatrix::from_fn(n, n, |r, c| z[(r, order[c])]));
    (vals, z)
}

/// Householder reduction `A = Q T Q^*` with real tridiagonal `T`; returns the diagonal,
/// off-diagonal and the reflector data needed to apply `Q`.
struct Tridiagonal {
    diag: Vec<f64>,
    off: Vec<f64>,
    // Unit reflector vectors acting on indices `k + 1..n`, followed by the diagonal
    // phases that make the off-diagonal real.
    reflectors: Vec<(usize, Vec<C64>)>,
    phases: Vec<C64>,
}

fn tridiagonalize(m: &DMatrix<C64>) -> Tridiagonal {
    let n = m.nrows();
    let mut a = (m + m.adjoint()) * C64::new(0.5, 0.0);
    let mut reflectors = Vec::new();
    let mut sub = vec![C64::new(0.0, 0.0); n.saturating_sub(1)];
    for k in 0..n.saturating_sub(1) {
        let len = n - k - 1;
        let x: Vec<C64> = (k + 1..n).map(|r| a[(r, k)]).collect();
        let tail: f64 = x[1..].iter().map(|z| z.norm_sqr()).sum();
        if len == 1 || tail == 0.0 {
            sub[k] = x[0];
            continue;
        }
        let sigma = (x[0].norm_sqr() + tail).sqrt();
        let phase = if x[0] == C64::new(0.0, 0.0) { C64::new(1.0, 0.0) } else { x[0] / x[0].norm() };
        let alpha = -phase * sigma;
        let mut v = x;
        v[0] -= alpha;
        let vn = v.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        v.iter_mut().for_each(|z| *z /= vn);
        // Trailing block update B <- H B H with H = I - 2 v v^*.
        let mut p = vec![C64::new(0.0, 0.0); len];
        for c in 0..len {
            let vc = v[c];
            if vc == C64::new(0.0, 0.0) {
                continue;
            }
            let col = a.column(k + 1 + c);
            for r in 0..len {
                p[r] += col[k + 1 + r] * vc;
            }
        }
        let cpv: f64 = v.iter().zip(&p).map(|(vi, pi)| (vi.conj() * pi).re).sum();
        let w: Vec<C64> = p.iter().zip(&v).map(|(pi, vi)| pi - vi * cpv).collect();
        for c in 0..len {
            let (wc, vc) = (w[c].conj() * 2.0, v[c].conj() * 2.0);
            let mut col = a.column_mut(k + 1 + c);
            for r in 0..len {
                col[k + 1 + r] -= v[r] * wc + w[r] * vc;
            }
        }
        sub[k] = alpha;
        for r in k + 2..n {
            a[(r, k)] = C64::new(0.0, 0.0);
            a[(k, r)] = C64::new(0.0, 0.0);
        }
        reflectors.push((k, v));
    }
    let mut phases = vec![C64::new(1.0, 0.0); n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    for k in 0..n.saturating_sub(1) {
        let s = sub[k];
        off[k] = s.norm();
        phases[k + 1] = if off[k] == 0.0 { phases[k] } else { phases[k] * s / off[k] };
    }
    Tridiagonal {
        diag: (0..n).map(|i| a[(i, i)].re).collect(),
        off,
        reflectors,
        phases,
    }
}

/// Eigenvalues (ascending) and eigenvectors (columns) of a hermitian matrix; the input
/// is symmetrized first.
pub fn hermitian_eig(m: &DMatrix<C64>) -> (Vec<f64>, DMatrix<C64>) {
    let n = m.nrows();
    let t = tridiagonalize(m);
    let (vals, z) = tridiagonal_eig(&t.diag, &t.off, true);
    let z = z.expect("vectors requested");
    let mut x = DMatrix::from_fn(n, n, |r, c| t.phases[r] * z[(r, c)]);
    for (k, v) in t.reflectors.iter().rev() {
        for c in 0..n {
            let mut col = x.column_mut(c);
            let mut dot = C64::new(0.0, 0.0);
            for (i, vi) in v.iter().enumerate() {
                dot += vi.conj() * col[k + 1 + i];
            }
            if dot == C64::new(0.0, 0.0) {
                continue;
            }
            dot *= 2.0;
            for (i, vi) in v.iter().enumerate() {
                col[k + 1 + i] -= vi * dot;
            }
        }
    }
    (vals, x)
}

/// Eigenvalues (ascending) of a hermitian matrix.
pub fn hermitian_eigenvalues(m: &DMatrix<C64>) -> Vec<f64> {
    let t = tridiagonalize(m);
    tridiagonal_eig(&t.diag, &t.off, false).0
}

#[cfg(test)]
mod tests {
    use super::*;

    fn random_hermitian(n: usize, seed: u64) -> DMatrix<C64> {
        let mut state = seed;
        let mut next = || {
            state = state.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            ((state >> 11) as f64 / (1u64 << 53) as f64) - 0.5
        };
        let a = DMatrix::from_fn(n, n, |_, _| C64::new(next(), next()));
        (&a + a.adjoint()) * C64::new(0.5, 0.0)
    }

    fn reconstruction_error(m: &DMatrix<C64>) -> (f64, f64) {
        let (vals, vecs) = hermitian_eig(m);
        let n = m.nrows();
        let d = DMatrix::from_fn(n, n, |r, c| if r == c { C64::new(vals[r], 0.0) } else { C64::new(0.0, 0.0) });
        let rec = (&vecs * d * vecs.adjoint() - m).norm() / m.norm().max(1.0);
        let orth = (vecs.adjoint() * &vecs - DMatrix::identity(n, n)).norm();
        (rec, orth)
    }

    #[test]
    fn reconstructs_random_hermitian_matrices() {
        for (n, seed) in [(1, 1), (2, 2), (5, 3), (40, 4), (120, 5)] {
            let m = random_hermitian(n, seed);
            let (rec, orth) = reconstruction_error(&m);
            assert!(rec < 1e-13 && orth < 1e-12, "n {n}: {rec} {orth}");
        }
    }

    #[test]
    fn handles_nearly_decoupled_tridiagonal() {
        let alpha = [
            6.3468, 6.7236, 7.2166, 7.8483, 8.6685, 12.8647, 9.5357, 8.8407, 13.2496, 10.3843, 4.3495, 11.6918, 8.9403,
            11.2390, 12.6188,
        ];
        let beta = [
            3.0671, 3.7171, 3.6553, 2.9192, 0.2853, 1.0896, 1.5472, 0.7771, 0.0430, 4.7e-10, 0.0021, 2.5251, 0.2324,
            1.2725,
        ];
        let (vals, z) = tridiagonal_eig(&alpha, &beta, true);
        let z = z.unwrap();
        let t = DMatrix::from_fn(15, 15, |r, c| {
            if r == c {
                alpha[r]
            } else if r + 1 == c {
                beta[r]
            } else if c + 1 == r {
                beta[c]
            } else {
                0.0
            }
        });
        let rec = &z * DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vals)) * z.transpose() - &t;
        assert!(rec.norm() < 1e-12, "{}", rec.norm());
    }

    #[test]
    fn degenerate_and_diagonal_inputs() {
        let id = DMatrix::<C64>::identity(6, 6) * C64::new(2.0, 0.0);
        assert!(reconstruction_error(&id).0 < 1e-15);
        let mut m = random_hermitian(8, 9);
        m = &m * &m;
        // Repeated eigenvalue via a block-diagonal copy.
        let mut big = DMatrix::<C64>::zeros(16, 16);
        big.view_mut((0, 0), (8, 8)).copy_from(&m);
        big.view_mut((8, 8), (8, 8)).copy_from(&m);
        let (rec, orth) = reconstruction_error(&big);
        assert!(rec < 1e-13 && orth < 1e-12, "{rec} {orth}");
        let vals = hermitian_eigenvalues(&big);
        let (full, _) = hermitian_eig(&big);
        assert!(vals.iter().zip(&full).all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

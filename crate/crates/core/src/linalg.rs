//! Small dense complex linear algebra used by the subspace solver.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

pub type CMatrix = DMatrix<Complex64>;

const MAX_SWEEPS: usize = 100;

/// `(A + A†)/2`.
pub fn hermitize(a: &CMatrix) -> CMatrix {
    (a + a.adjoint()).scale(0.5)
}

/// Eigen-decomposition of a Hermitian matrix by cyclic Jacobi rotations.
///
/// Returns eigenvalues in ascending order (stable for ties) and the matching
/// orthonormal eigenvectors as columns. Only the Hermitian part of `a` is used.
pub fn hermitian_eigen(a: &CMatrix) -> (Vec<f64>, CMatrix) {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "square matrix required");
    let mut m = hermitize(a);
    let mut v = CMatrix::identity(n, n);
    let scale = m.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);

    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= 1e-15 * scale {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                let apq = m[(p, q)];
                let mag = apq.norm();
                if mag <= 1e-300 {
                    continue;
                }
                // phase that makes the (p, q) element real and positive
                let zeta = (apq / mag).conj();
                let tau = (m[(q, q)].re - m[(p, p)].re) / (2.0 * mag);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                // G = diag(1, ζ)·R with R = [[c, s], [−s, c]]
                let g_pp = Complex64::new(c, 0.0);
                let g_pq = Complex64::new(s, 0.0);
                let g_qp = zeta * -s;
                let g_qq = zeta * c;
                for k in 0..n {
                    let (akp, akq) = (m[(k, p)], m[(k, q)]);
                    m[(k, p)] = akp * g_pp + akq * g_qp;
                    m[(k, q)] = akp * g_pq + akq * g_qq;
                }
                for k in 0..n {
                    let (apk, aqk) = (m[(p, k)], m[(q, k)]);
                    m[(p, k)] = g_pp.conj() * apk + g_qp.conj() * aqk;
                    m[(q, k)] = g_pq.conj() * apk + g_qq.conj() * aqk;
                }
                m[(p, q)] = Complex64::default();
                m[(q, p)] = Complex64::default();
                m[(p, p)].im = 0.0;
                m[(q, q)].im = 0.0;
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * g_pp + vkq * g_qp;
                    v[(k, q)] = vkp * g_pq + vkq * g_qq;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[(i, i)].re.total_cmp(&m[(j, j)].re));
    let values = order.iter().map(|&i| m[(i, i)].re).collect();
    let mut vectors = CMatrix::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &v.column(src));
    }
    (values, vectors)
}

/// Element-wise maximum modulus.
pub fn max_abs(a: &CMatrix) -> f64 {
    a.iter().map(|x| x.norm()).fold(0.0, f64::max)
}

pub fn real_diagonal(values: &[f64]) -> CMatrix {
    CMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&x| Complex64::new(x, 0.0)),
    ))
}

/// 1-norm condition estimate `‖A‖₁·‖A⁻¹‖₁` from an explicit inverse.
pub fn condition_1(a: &CMatrix, inv: &CMatrix) -> f64 {
    let norm1 = |m: &CMatrix| {
        (0..m.ncols())
            .map(|j| m.column(j).iter().map(|x| x.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    };
    norm1(a) * norm1(inv)
}

//! Small dense linear-algebra helpers: the cross-product matrix and a cyclic
//! Jacobi eigensolver for fixed-size symmetric matrices.

use nalgebra::{Matrix3, SMatrix, SVector, Vector3};

/// Cross-product matrix `[x]ₓ`, so that `skew(x) * f == x.cross(&f)`.
pub fn skew(x: &Vector3<f64>) -> Matrix3<f64> {
    Matrix3::new(
        0.0, -x.z, x.y, //
        x.z, 0.0, -x.x, //
        -x.y, x.x, 0.0,
    )
}

/// Eigen-decomposition of a symmetric matrix.
///
/// Eigenvalues are sorted ascending; column `i` of `vectors` is the unit
/// eigenvector belonging to `values[i]`.
#[derive(Debug, Clone)]
pub struct SymmetricEigen<const N: usize> {
    pub values: SVector<f64, N>,
    pub vectors: SMatrix<f64, N, N>,
    pub sweeps: usize,
}

impl<const N: usize> SymmetricEigen<N> {
    pub fn min_value(&self) -> f64 {
        self.values[0]
    }

    pub fn min_vector(&self) -> SVector<f64, N> {
        self.vectors.column(0).into_owned()
    }
}

pub const JACOBI_OFF_DIAGONAL_TOL: f64 = 1e-12;
const JACOBI_MAX_SWEEPS: usize = 64;

/// Cyclic Jacobi eigensolver. Only the upper triangle's symmetric part is
/// meaningful; the input is symmetrized before rotating.
///
/// Sweeps stop once the off-diagonal Frobenius norm drops below
/// `JACOBI_OFF_DIAGONAL_TOL` scaled by `max(1, ‖A‖_F)`.
pub fn jacobi_eigen<const N: usize>(a: &SMatrix<f64, N, N>) -> SymmetricEigen<N> {
    let mut m = (a + a.transpose()) * 0.5;
    let mut v = SMatrix::<f64, N, N>::identity();
    let scale = m.norm().max(1.0);
    let mut sweeps = 0;

    while sweeps < JACOBI_MAX_SWEEPS {
        if off_diagonal_norm(&m) <= JACOBI_OFF_DIAGONAL_TOL * scale {
            break;
        }
        sweeps += 1;
        for p in 0..N {
            for q in (p + 1)..N {
                let apq = m[(p, q)];
                if apq == 0.0 {
                    continue;
                }
                let theta = (m[(q, q)] - m[(p, p)]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                rotate(&mut m, &mut v, p, q, c, s);
            }
        }
    }

    // sort ascending
    let mut order: [usize; N] = std::array::from_fn(|i| i);
    order.sort_by(|&i, &j| m[(i, i)].total_cmp(&m[(j, j)]));
    let values = SVector::<f64, N>::from_fn(|i, _| m[(order[i], order[i])]);
    let vectors = SMatrix::<f64, N, N>::from_fn(|r, c| v[(r, order[c])]);
    SymmetricEigen {
        values,
        vectors,
        sweeps,
    }
}

fn off_diagonal_norm<const N: usize>(m: &SMatrix<f64, N, N>) -> f64 {
    let mut acc = 0.0;
    for p in 0..N {
        for q in 0..N {
            if p != q {
                acc += m[(p, q)] * m[(p, q)];
            }
        }
    }
    acc.sqrt()
}

// Applies the plane rotation J(p, q) as m <- Jᵀ m J, v <- v J.
fn rotate<const N: usize>(
    m: &mut SMatrix<f64, N, N>,
    v: &mut SMatrix<f64, N, N>,
    p: usize,
    q: usize,
    c: f64,
    s: f64,
) {
    for k in 0..N {
        let mkp = m[(k, p)];
        let mkq = m[(k, q)];
        m[(k, p)] = c * mkp - s * mkq;
        m[(k, q)] = s * mkp + c * mkq;
    }
    for k in 0..N {
        let mpk = m[(p, k)];
        let mqk = m[(q, k)];
        m[(p, k)] = c * mpk - s * mqk;
        m[(q, k)] = s * mpk + c * mqk;
    }
    m[(p, q)] = 0.0;
    m[(q, p)] = 0.0;
    for k in 0..N {
        let vkp = v[(k, p)];
        let vkq = v[(k, q)];
        v[(k, p)] = c * vkp - s * vkq;
        v[(k, q)] = s * vkp + c * vkq;
    }
}

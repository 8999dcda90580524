//! Dense kernels shared by the physics modules: diagonal balancing, the
//! eigendecomposition backend, the Padé matrix exponential, and
//! orthonormalization.

use faer::linalg::solvers::{DenseSolveCore, Solve};
use faer::{c64, Mat, MatRef, Side};

use crate::error::{Error, Result};

const RADIX: f64 = 2.0;

/// Parlett–Reinsch balancing with power-of-two scales (exact in floating point).
///
/// On return `a` holds `D⁻¹ A D`; the returned vector is the diagonal of `D`,
/// so an eigenvector `w` of the balanced matrix maps back as `v = D w`.
pub(crate) fn balance(a: &mut Mat<c64>) -> Vec<f64> {
    let n = a.nrows();
    let mut scale = vec![1.0; n];
    let sqr = RADIX * RADIX;
    loop {
        let mut converged = true;
        for i in 0..n {
            let mut c = 0.0;
            let mut r = 0.0;
            for j in 0..n {
                if j != i {
                    c += a[(j, i)].norm();
                    r += a[(i, j)].norm();
                }
            }
            if c == 0.0 || r == 0.0 {
                continue;
            }
            let s = c + r;
            let mut f = 1.0;
            let mut g = r / RADIX;
            while c < g {
                f *= RADIX;
                c *= sqr;
            }
            g = r * RADIX;
            while c > g {
                f /= RADIX;
                c /= sqr;
            }
            if (c + r) / f < 0.95 * s {
                converged = false;
                scale[i] *= f;
                let inv = 1.0 / f;
                for j in 0..n {
                    a[(i, j)] *= inv;
                    a[(j, i)] *= f;
                }
            }
        }
        if converged {
            return scale;
        }
    }
}

pub(crate) struct RawEigen {
    pub values: Vec<c64>,
    /// Unit-norm right eigenvectors, column-aligned with `values`.
    pub vectors: Mat<c64>,
}

/// Right eigenpairs of a general square matrix. Real input is routed through
/// the real Schur form so complex eigenvalues come in exact conjugate pairs.
pub(crate) fn eig(a: MatRef<'_, c64>) -> Result<RawEigen> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(Error::InvalidParameter(
            "eigendecomposition needs a square matrix".into(),
        ));
    }
    if (0..n).any(|j| (0..n).any(|i| !(a[(i, j)].re.is_finite() && a[(i, j)].im.is_finite()))) {
        return Err(Error::InvalidParameter(
            "matrix has non-finite entries".into(),
        ));
    }
    let mut b = a.to_owned();
    let scale = balance(&mut b);
    let is_real = (0..n).all(|j| (0..n).all(|i| b[(i, j)].im == 0.0));
    let evd = if is_real {
        Mat::<f64>::from_fn(n, n, |i, j| b[(i, j)].re).eigen()
    } else {
        b.eigen()
    }
    .map_err(|e| Error::Eigen(format!("{e:?} (balanced dim {n})")))?;

    let s = evd.S().column_vector();
    let values: Vec<c64> = (0..n).map(|k| s[k]).collect();
    let u = evd.U();
    let mut vectors = Mat::from_fn(n, n, |i, k| u[(i, k)] * scale[i]);
    for k in 0..n {
        let norm = vectors.col(k).norm_l2();
        if norm > 0.0 {
            for i in 0..n {
                vectors[(i, k)] /= norm;
            }
        }
    }
    Ok(RawEigen { values, vectors })
}

/// Eigenvalues of a Hermitian matrix, ascending. Only the lower triangle is read.
pub(crate) fn hermitian_eigenvalues(a: MatRef<'_, c64>) -> Result<Vec<f64>> {
    a.self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Eigen(format!("{e:?}")))
}

pub(crate) fn one_norm(a: MatRef<'_, c64>) -> f64 {
    (0..a.ncols())
        .map(|j| (0..a.nrows()).map(|i| a[(i, j)].norm()).sum::<f64>())
        .fold(0.0, f64::max)
}

pub(crate) fn inverse(a: MatRef<'_, c64>) -> Mat<c64> {
    a.partial_piv_lu().inverse()
}

// Padé [13/13] coefficients and the matching norm bound (Higham, 2005).
const PADE13: [f64; 14] = [
    64764752532480000.0,
    32382376266240000.0,
    7771770303897600.0,
    1187353796428800.0,
    129060195264000.0,
    10559470521600.0,
    670442572800.0,
    33522128640.0,
    1323241920.0,
    40840800.0,
    960960.0,
    16380.0,
    182.0,
    1.0,
];
const THETA13: f64 = 5.371920351148152;

/// `exp(A)` by scaling and squaring with a degree-13 Padé approximant.
pub(crate) fn expm(a: MatRef<'_, c64>) -> Mat<c64> {
    let n = a.nrows();
    let norm = one_norm(a);
    let squarings = if norm > THETA13 {
        (norm / THETA13).log2().ceil() as i32
    } else {
        0
    };
    let factor = 2f64.powi(-squarings);
    let a = Mat::from_fn(n, n, |i, j| a[(i, j)] * factor);
    let id = Mat::<c64>::identity(n, n);
    let a2 = &a * &a;
    let a4 = &a2 * &a2;
    let a6 = &a4 * &a2;
    let b = |k: usize| c64::new(PADE13[k], 0.0);
    let lin = |c6: c64, c4: c64, c2: c64, c0: c64| -> Mat<c64> {
        Mat::from_fn(n, n, |i, j| {
            c6 * a6[(i, j)] + c4 * a4[(i, j)] + c2 * a2[(i, j)] + c0 * id[(i, j)]
        })
    };
    let inner_u = &a6 * &lin(b(13), b(11), b(9), c64::new(0.0, 0.0));
    let u = &a * &(&inner_u + &lin(b(7), b(5), b(3), b(1)));
    let inner_v = &a6 * &lin(b(12), b(10), b(8), c64::new(0.0, 0.0));
    let v = &inner_v + &lin(b(6), b(4), b(2), b(0));

    let p = &v + &u;
    let q = &v - &u;
    let mut r = p;
    q.partial_piv_lu().solve_in_place(r.as_mut());
    for _ in 0..squarings {
        r = &r * &r;
    }
    r
}

/// Thin QR orthonormalization. Returns the orthonormal factor and the ratio
/// `max|R_ii| / min|R_ii|` as a cheap condition estimate of the input.
pub(crate) fn orthonormalize(a: MatRef<'_, c64>) -> (Mat<c64>, f64) {
    let qr = a.qr();
    let r = qr.thin_R();
    let k = r.nrows().min(r.ncols());
    let (mut lo, mut hi) = (f64::INFINITY, 0.0f64);
    for i in 0..k {
        let d = r[(i, i)].norm();
        lo = lo.min(d);
        hi = hi.max(d);
    }
    let cond = if lo > 0.0 { hi / lo } else { f64::INFINITY };
    (qr.compute_thin_Q(), cond)
}

//! Hamiltonian builders for the nonreciprocal chain with power-law hopping.
//!
//! Site labels in the public accessors are 1-based; a matrix entry `(i, j)`
//! is the amplitude of `c_i^† c_j`, so `(j, j + l)` carries the leftward hop
//! `J_L / l^α` and `(j + l, j)` the rightward hop `J_R / l^α`.

use std::fmt;

use faer::{c64, Mat, MatRef};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

/// Power-law exponent of the long-range hops.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Decay {
    /// Hops of range `l` carry a factor `l^{-α}`.
    Power(f64),
    /// Only nearest-neighbour hops survive (the `α → ∞` limit).
    NearestNeighbor,
}

impl Decay {
    pub fn exponent(self) -> Option<f64> {
        match self {
            Decay::Power(a) => Some(a),
            Decay::NearestNeighbor => None,
        }
    }

    /// Weight of a hop of range `l ≥ 1`.
    pub fn weight(self, range: usize) -> f64 {
        match (self, range) {
            (_, 1) => 1.0,
            (Decay::NearestNeighbor, _) => 0.0,
            (Decay::Power(a), l) => (l as f64).powf(-a),
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        let t = s.trim();
        match t.to_ascii_lowercase().as_str() {
            "inf" | "infinity" | "nn" => Ok(Decay::NearestNeighbor),
            _ => {
                let a: f64 = t
                    .parse()
                    .map_err(|_| Error::InvalidParameter(format!("bad decay exponent '{t}'")))?;
                if a.is_infinite() && a > 0.0 {
                    return Ok(Decay::NearestNeighbor);
                }
                if !(a >= 0.0) {
                    return Err(Error::InvalidParameter(format!(
                        "decay exponent must be >= 0, got {a}"
                    )));
                }
                Ok(Decay::Power(a))
            }
        }
    }
}

impl fmt::Display for Decay {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Decay::Power(a) => write!(f, "{a}"),
            Decay::NearestNeighbor => f.write_str("inf"),
        }
    }
}

impl Serialize for Decay {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Decay::Power(a) => s.serialize_f64(*a),
            Decay::NearestNeighbor => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Decay {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Num(f64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Num(a) => Ok(Decay::Power(a)),
            Raw::Str(s) => Decay::parse(&s).map_err(serde::de::Error::custom),
        }
    }
}

/// Couplings, decay exponent and size of one open chain.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ModelParams {
    pub j_left: c64,
    pub j_right: c64,
    pub decay: Decay,
    pub size: usize,
}

impl ModelParams {
    pub fn new(j_left: c64, j_right: c64, decay: Decay, size: usize) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidSize { got: size, min: 2 });
        }
        if let Decay::Power(a) = decay {
            if !(a >= 0.0) || !a.is_finite() {
                return Err(Error::InvalidParameter(format!(
                    "decay exponent must be finite and >= 0, got {a}"
                )));
            }
        }
        let finite = |z: c64| z.re.is_finite() && z.im.is_finite();
        if !finite(j_left) || !finite(j_right) {
            return Err(Error::InvalidParameter("couplings must be finite".into()));
        }
        Ok(Self {
            j_left,
            j_right,
            decay,
            size,
        })
    }

    /// `J_L = e^g`, `J_R = e^{-g}`, so that `√(J_L J_R) = 1`.
    pub fn from_g(g: f64, decay: Decay, size: usize) -> Result<Self> {
        Self::new(
            c64::new(g.exp(), 0.0),
            c64::new((-g).exp(), 0.0),
            decay,
            size,
        )
    }

    pub fn with_size(self, size: usize) -> Result<Self> {
        Self::new(self.j_left, self.j_right, self.decay, size)
    }

    pub fn with_decay(self, decay: Decay) -> Result<Self> {
        Self::new(self.j_left, self.j_right, decay, self.size)
    }

    /// Nonreciprocity `g = ln √(|J_L| / |J_R|)`; infinite if either coupling vanishes.
    pub fn g(&self) -> f64 {
        0.5 * (self.j_left.norm() / self.j_right.norm()).ln()
    }

    pub fn has_real_couplings(&self) -> bool {
        self.j_left.im == 0.0 && self.j_right.im == 0.0
    }

    /// `√(J_L J_R)` for positive real couplings, the hop of the gauge-transformed chain.
    pub fn symmetric_hop(&self) -> Option<f64> {
        let positive = |z: c64| z.im == 0.0 && z.re > 0.0;
        (positive(self.j_left) && positive(self.j_right))
            .then(|| (self.j_left.re * self.j_right.re).sqrt())
    }
}

/// Parameters of the chain whose two ends are joined by a single one-way hop.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimplifiedParams {
    pub hop: f64,
    pub size: usize,
    pub mu: f64,
}

impl SimplifiedParams {
    pub fn new(hop: f64, size: usize, mu: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidSize { got: size, min: 2 });
        }
        if !(mu >= 0.0) || !mu.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "mu must be finite and >= 0, got {mu}"
            )));
        }
        Ok(Self { hop, size, mu })
    }

    /// Keeps only the longest gauge-transformed rightward hop:
    /// `μ_L = e^{(L-2)g} (L-1)^{-α}`.
    pub fn from_model(decay: Decay, g: f64, size: usize, hop: f64) -> Result<Self> {
        if size < 2 {
            return Err(Error::InvalidSize { got: size, min: 2 });
        }
        let mu = match decay {
            Decay::NearestNeighbor => 0.0,
            Decay::Power(a) => end_to_end_coupling(a, g, size as f64),
        };
        Self::new(hop, size, mu)
    }
}

/// `μ_L` evaluated for a real size.
pub fn end_to_end_coupling(alpha: f64, g: f64, size: f64) -> f64 {
    ((size - 2.0) * g - alpha * (size - 1.0).ln()).exp()
}

/// Square complex matrix; the site index convention is documented at module level.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix(Mat<c64>);

impl DenseMatrix {
    pub fn zeros(dim: usize) -> Self {
        Self(Mat::zeros(dim, dim))
    }

    pub fn from_mat(mat: Mat<c64>) -> Result<Self> {
        if mat.nrows() != mat.ncols() {
            return Err(Error::InvalidParameter(format!(
                "matrix must be square, got {}x{}",
                mat.nrows(),
                mat.ncols()
            )));
        }
        Ok(Self(mat))
    }

    pub fn from_fn(dim: usize, f: impl FnMut(usize, usize) -> c64) -> Self {
        Self(Mat::from_fn(dim, dim, f))
    }

    /// Builds from row-major entries.
    pub fn from_row_major(dim: usize, entries: &[c64]) -> Result<Self> {
        if entries.len() != dim * dim {
            return Err(Error::InvalidParameter(format!(
                "expected {} entries, got {}",
                dim * dim,
                entries.len()
            )));
        }
        Ok(Self::from_fn(dim, |i, j| entries[i * dim + j]))
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    /// Entry for 1-based sites `(i, j)`.
    pub fn site(&self, i: usize, j: usize) -> c64 {
        self.0[(i - 1, j - 1)]
    }

    pub fn as_ref(&self) -> MatRef<'_, c64> {
        self.0.as_ref()
    }

    pub fn as_mat(&self) -> &Mat<c64> {
        &self.0
    }

    pub fn into_mat(self) -> Mat<c64> {
        self.0
    }

    pub fn to_row_major(&self) -> Vec<c64> {
        let n = self.dim();
        (0..n * n).map(|k| self.0[(k / n, k % n)]).collect()
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm_l2()
    }

    pub fn is_real(&self) -> bool {
        let n = self.dim();
        (0..n).all(|j| (0..n).all(|i| self.0[(i, j)].im == 0.0))
    }

    pub fn adjoint(&self) -> Self {
        Self(self.0.adjoint().to_owned())
    }

    pub fn add(&self, other: &Self) -> Result<Self> {
        if self.dim() != other.dim() {
            return Err(Error::InvalidParameter("dimension mismatch".into()));
        }
        Ok(Self(&self.0 + &other.0))
    }
}

/// Nearest-neighbour nonreciprocal chain.
pub fn build_hn(p: &ModelParams) -> Result<DenseMatrix> {
    check_size(p.size)?;
    Ok(DenseMatrix::from_fn(p.size, |i, j| {
        if j == i + 1 {
            p.j_left
        } else if i == j + 1 {
            p.j_right
        } else {
            c64::new(0.0, 0.0)
        }
    }))
}

/// Hops of range `l ≥ 2` only.
pub fn build_nonlocal(p: &ModelParams) -> Result<DenseMatrix> {
    check_size(p.size)?;
    Ok(DenseMatrix::from_fn(p.size, |i, j| {
        let l = i.abs_diff(j);
        if l < 2 {
            return c64::new(0.0, 0.0);
        }
        let w = p.decay.weight(l);
        if j > i {
            p.j_left * w
        } else {
            p.j_right * w
        }
    }))
}

/// Full Hamiltonian, hops of every range `l ≥ 1`.
pub fn build_full(p: &ModelParams) -> Result<DenseMatrix> {
    build_hn(p)?.add(&build_nonlocal(p)?)
}

/// Hermitian open chain with hop `J` plus the one-way end hop `(L, 1) = J μ_L`.
pub fn build_simplified(sp: &SimplifiedParams) -> Result<DenseMatrix> {
    check_size(sp.size)?;
    let n = sp.size;
    let hop = c64::new(sp.hop, 0.0);
    let mut h = DenseMatrix::from_fn(n, |i, j| {
        if i.abs_diff(j) == 1 {
            hop
        } else {
            c64::new(0.0, 0.0)
        }
    });
    h.0[(n - 1, 0)] += c64::new(sp.hop * sp.mu, 0.0);
    Ok(h)
}

/// Imaginary gauge transformation: entry `(i, j)` is multiplied by `e^{g(i-j)}`.
pub fn apply_igt(h: &DenseMatrix, g: f64) -> DenseMatrix {
    DenseMatrix::from_fn(h.dim(), |i, j| {
        h.0[(i, j)] * (g * (i as f64 - j as f64)).exp()
    })
}

fn check_size(size: usize) -> Result<()> {
    if size < 2 {
        Err(Error::InvalidSize { got: size, min: 2 })
    } else {
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(x: f64) -> c64 {
        c64::new(x, 0.0)
    }

    #[test]
    fn hn_single_bond() {
        let p = ModelParams::new(re(2.0), re(0.5), Decay::NearestNeighbor, 2).unwrap();
        let h = build_hn(&p).unwrap();
        assert_eq!(h.to_row_major(), vec![re(0.0), re(2.0), re(0.5), re(0.0)]);
    }

    #[test]
    fn rejects_short_chains() {
        assert!(matches!(
            ModelParams::new(re(1.0), re(1.0), Decay::Power(1.0), 1),
            Err(Error::InvalidSize { got: 1, min: 2 })
        ));
        assert!(SimplifiedParams::new(1.0, 1, 0.0).is_err());
        assert!(ModelParams::new(re(1.0), re(1.0), Decay::Power(-1.0), 4).is_err());
    }

    #[test]
    fn nonlocal_range_three() {
        let p = ModelParams::new(re(1.0), re(1.0), Decay::Power(1.0), 3).unwrap();
        let h = build_nonlocal(&p).unwrap();
        for i in 1..=3 {
            for j in 1..=3 {
                let want = if (i, j) == (1, 3) || (i, j) == (3, 1) {
                    0.5
                } else {
                    0.0
                };
                assert_eq!(h.site(i, j), re(want));
            }
        }
    }

    #[test]
    fn alpha_zero_connects_every_pair() {
        let p = ModelParams::new(re(1.5), re(0.25), Decay::Power(0.0), 4).unwrap();
        let h = build_nonlocal(&p).unwrap();
        for i in 1..=4usize {
            for j in 1..=4usize {
                let want = match (i.abs_diff(j) >= 2, j > i) {
                    (false, _) => 0.0,
                    (true, true) => 1.5,
                    (true, false) => 0.25,
                };
                assert_eq!(h.site(i, j), re(want));
            }
        }
    }

    #[test]
    fn sentinel_has_no_long_range_part() {
        let p = ModelParams::from_g(0.3, Decay::NearestNeighbor, 7).unwrap();
        assert!(build_nonlocal(&p)
            .unwrap()
            .to_row_major()
            .iter()
            .all(|z| *z == re(0.0)));
        assert_eq!(build_full(&p).unwrap(), build_hn(&p).unwrap());
    }

    #[test]
    fn full_is_sum_and_matches_hn_at_two_sites() {
        let p = ModelParams::from_g(0.4, Decay::Power(1.3), 2).unwrap();
        assert_eq!(build_full(&p).unwrap(), build_hn(&p).unwrap());
        let p = ModelParams::from_g(0.4, Decay::Power(1.3), 9).unwrap();
        let full = build_full(&p).unwrap();
        for i in 1..=9usize {
            for j in 1..=9 {
                let l = i.abs_diff(j);
                if l == 0 {
                    continue;
                }
                let amp = if j > i { p.j_left } else { p.j_right };
                assert_eq!(full.site(i, j), amp * (l as f64).powf(-1.3));
            }
        }
    }

    #[test]
    fn simplified_chain_layout() {
        let sp = SimplifiedParams::new(1.0, 4, 0.0).unwrap();
        let h = build_simplified(&sp).unwrap();
        assert_eq!(h, h.adjoint());
        let sp = SimplifiedParams::new(2.0, 4, 0.75).unwrap();
        let h = build_simplified(&sp).unwrap();
        assert_eq!(h.site(4, 1), re(1.5));
        assert_eq!(h.site(1, 4), re(0.0));
    }

    #[test]
    fn end_coupling_value() {
        let sp = SimplifiedParams::from_model(Decay::Power(2.0), 0.25, 40, 1.0).unwrap();
        let want = 9.5f64.exp() / 39.0f64.powi(2);
        assert!((sp.mu - want).abs() <= 1e-12 * want);
    }

    #[test]
    fn igt_identity_and_symmetrization() {
        let p = ModelParams::from_g(0.25, Decay::Power(2.0), 6).unwrap();
        let h = build_full(&p).unwrap();
        assert_eq!(apply_igt(&h, 0.0), h);

        let hn = build_hn(&p).unwrap();
        let t = apply_igt(&hn, 0.25);
        for i in 1..=6usize {
            for j in 1..=6 {
                let want = if i.abs_diff(j) == 1 { 1.0 } else { 0.0 };
                assert!((t.site(i, j) - re(want)).norm() < 1e-14);
            }
        }
        // long-range entries become J e^{∓(l-1)g} l^{-α}
        let t = apply_igt(&h, 0.25);
        let l = 4usize;
        let up = (-(l as f64 - 1.0) * 0.25).exp() * (l as f64).powf(-2.0);
        let down = ((l as f64 - 1.0) * 0.25).exp() * (l as f64).powf(-2.0);
        assert!((t.site(1, 1 + l).re - up).abs() < 1e-14);
        assert!((t.site(1 + l, 1).re - down).abs() < 1e-13);
    }

    #[test]
    fn hermitian_when_reciprocal() {
        let p = ModelParams::new(re(0.7), re(0.7), Decay::Power(0.8), 11).unwrap();
        let h = build_full(&p).unwrap();
        assert_eq!(h, h.adjoint());
    }

    #[test]
    fn g_and_decay_parsing() {
        let p = ModelParams::from_g(0.25, Decay::Power(2.0), 10).unwrap();
        assert!((p.g() - 0.25).abs() < 1e-15);
        assert!((p.symmetric_hop().unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(Decay::parse("inf").unwrap(), Decay::NearestNeighbor);
        assert_eq!(Decay::parse(" 2.5 ").unwrap(), Decay::Power(2.5));
        assert!(Decay::parse("-1").is_err());
        assert!(Decay::parse("abc").is_err());
        let js = serde_json::to_string(&[Decay::Power(1.5), Decay::NearestNeighbor]).unwrap();
        assert_eq!(js, r#"[1.5,"inf"]"#);
        let back: Vec<Decay> = serde_json::from_str(&js).unwrap();
        assert_eq!(back, vec![Decay::Power(1.5), Decay::NearestNeighbor]);
    }
}

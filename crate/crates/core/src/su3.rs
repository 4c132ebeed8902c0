//! SU(3) structure: random link generation, projection onto the group, and
//! the 10-parameter link compression.
//!
//! A special-unitary 3x3 matrix is fully determined by its first row plus
//! the first two entries of its second row: the missing second-row entry
//! follows from orthogonality to the first row, and the whole third row is
//! the conjugate cross product of the first two rows. Storing those 10 reals
//! instead of 18 nearly halves streamed link traffic, and reconstruction
//! needs no trigonometry: one complex dot product, one division, one cross
//! product.
//!
//! The division pivots on the third entry of the stored row, so matrices
//! with |u02| below [`EPSILON_PIVOT`] are rejected at compression time and
//! kept raw via [`StoredLink`].

use num_complex::Complex;
use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::algebra::{ColorMatrix, Cplx, Precision, Real};

/// Smallest |u02| accepted by [`compress`]. For Haar-distributed links the
/// rejected set has measure ~1e-12; rejected links are stored raw.
pub const EPSILON_PIVOT: f64 = 1e-6;

/// Real words in one compressed link.
pub const COMPRESSED_LINK_REALS: usize = 10;

/// Special-unitarity acceptance threshold on the max-norm defect of
/// U^dag U - 1 and |det U - 1|, per storage precision.
pub fn su3_tolerance(precision: Precision) -> f64 {
    match precision {
        Precision::Double => 1e-10,
        Precision::Single => 1e-4,
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum Su3Error {
    #[error("matrix is not special unitary: defect {defect:e} exceeds tolerance {tol:e}")]
    NotSpecialUnitary { defect: f64, tol: f64 },
    #[error("compression pivot |u02| = {pivot:e} is below {limit:e}; store this link raw")]
    PivotTooSmall { pivot: f64, limit: f64 },
    #[error("rows are numerically dependent; cannot orthonormalize")]
    DegenerateRows,
}

/// The 10 stored reals: full first row, first two entries of the second.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressedLink<R: Real> {
    pub row0: [Cplx<R>; 3],
    pub row1_01: [Cplx<R>; 2],
}

impl<R: Real> CompressedLink<R> {
    pub fn to_words(&self) -> [R; 10] {
        [
            self.row0[0].re,
            self.row0[0].im,
            self.row0[1].re,
            self.row0[1].im,
            self.row0[2].re,
            self.row0[2].im,
            self.row1_01[0].re,
            self.row1_01[0].im,
            self.row1_01[1].re,
            self.row1_01[1].im,
        ]
    }

    pub fn from_words(w: [R; 10]) -> Self {
        CompressedLink {
            row0: [
                Complex::new(w[0], w[1]),
                Complex::new(w[2], w[3]),
                Complex::new(w[4], w[5]),
            ],
            row1_01: [Complex::new(w[6], w[7]), Complex::new(w[8], w[9])],
        }
    }
}

/// Read off the 10 designated entries of a valid link.
pub fn compress<R: Real>(u: &ColorMatrix<R>) -> Result<CompressedLink<R>, Su3Error> {
    let tol = su3_tolerance(R::PRECISION);
    let defect = u.unitarity_defect().max(u.det_defect());
    // Negated so NaN defects are refused as well.
    #[allow(clippy::neg_cmp_op_on_partial_ord)]
    if !(defect <= tol) {
        return Err(Su3Error::NotSpecialUnitary { defect, tol });
    }
    let pivot = u.0[0][2].norm().to_f64();
    if pivot < EPSILON_PIVOT {
        return Err(Su3Error::PivotTooSmall {
            pivot,
            limit: EPSILON_PIVOT,
        });
    }
    Ok(CompressedLink {
        row0: u.0[0],
        row1_01: [u.0[1][0], u.0[1][1]],
    })
}

/// Rebuild the full link from its 10 stored reals.
///
/// With row 0 = (a1, a2, a3) and row 1 = (b1, b2, .): orthogonality gives
/// b3 = -(conj(a1) b1 + conj(a2) b2) / conj(a3), evaluated as
/// -(s * a3) / |a3|^2 to avoid a complex division; row 2 is the conjugate
/// cross product of rows 0 and 1, which makes det U = +1 exactly up to
/// rounding once the first two rows are orthonormal.
pub fn reconstruct<R: Real>(c: &CompressedLink<R>) -> ColorMatrix<R> {
    let [a1, a2, a3] = c.row0;
    let [b1, b2] = c.row1_01;
    let s = a1.conj() * b1 + a2.conj() * b2;
    let q = a3.norm_sqr();
    let t = s * a3;
    let b3 = Complex::new(-(t.re / q), -(t.im / q));
    let c1 = (a2 * b3 - a3 * b2).conj();
    let c2 = (a3 * b1 - a1 * b3).conj();
    let c3 = (a1 * b2 - a2 * b1).conj();
    ColorMatrix::from_rows([a1, a2, a3], [b1, b2, b3], [c1, c2, c3])
}

/// Exact real-operation count of one [`reconstruct`] call:
///
/// - s = conj(a1) b1 + conj(a2) b2: two complex multiplies (6 each) plus one
///   complex add (2), conjugation free -> 14
/// - q = |a3|^2: two multiplies, one add -> 3
/// - b3 = -(s a3)/q: complex multiply (6), two real divisions, two
///   negations -> 10
/// - row 2 cross product: three components, each two complex multiplies and
///   one complex subtract (12 + 2), conjugation free -> 42
///
/// Total 69.
pub const fn reconstruction_flops() -> u64 {
    14 + 3 + 10 + 42
}

/// One gauge link as kept by a compressed field: the 10-real form when the
/// pivot allows it, the raw 18-real matrix otherwise.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StoredLink<R: Real> {
    Compressed(CompressedLink<R>),
    Raw(ColorMatrix<R>),
}

impl<R: Real> StoredLink<R> {
    /// Compress when possible; pivot failures fall back to raw storage,
    /// anything not special-unitary is refused outright.
    pub fn pack(u: &ColorMatrix<R>) -> Result<Self, Su3Error> {
        match compress(u) {
            Ok(c) => Ok(StoredLink::Compressed(c)),
            Err(Su3Error::PivotTooSmall { .. }) => Ok(StoredLink::Raw(*u)),
            Err(e) => Err(e),
        }
    }

    pub fn unpack(&self) -> ColorMatrix<R> {
        match self {
            StoredLink::Compressed(c) => reconstruct(c),
            StoredLink::Raw(u) => *u,
        }
    }

    pub fn is_raw(&self) -> bool {
        matches!(self, StoredLink::Raw(_))
    }
}

/// Orthonormalize the rows (Gram-Schmidt, top down) and fix the determinant
/// phase on the last row, projecting a nondegenerate matrix onto SU(3).
pub fn special_unitarize(m: &ColorMatrix<f64>) -> Result<ColorMatrix<f64>, Su3Error> {
    let mut rows = m.0;
    for i in 0..3 {
        for prev in 0..i {
            let mut overlap = Complex::new(0.0f64, 0.0);
            for c in 0..3 {
                overlap += rows[prev][c].conj() * rows[i][c];
            }
            for c in 0..3 {
                rows[i][c] -= rows[prev][c] * overlap;
            }
        }
        let norm = rows[i].iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if norm < 1e-9 {
            return Err(Su3Error::DegenerateRows);
        }
        for z in rows[i].iter_mut() {
            *z /= norm;
        }
    }
    let u = ColorMatrix(rows);
    let det = u.det();
    let phase = det / det.norm();
    let mut fixed = rows;
    for z in fixed[2].iter_mut() {
        *z *= phase.conj();
    }
    Ok(ColorMatrix(fixed))
}

/// Haar-like random link: 18 standard Gaussians orthonormalized and
/// phase-fixed. Draws and orthonormalizes in 64-bit, then narrows, so the
/// single-precision field is the rounding of the double-precision one.
pub fn haar_random<R: Real>(rng: &mut impl Rng) -> ColorMatrix<R> {
    let mut m = ColorMatrix::<f64>::zero();
    for i in 0..3 {
        for j in 0..3 {
            let re: f64 = rng.sample(StandardNormal);
            let im: f64 = rng.sample(StandardNormal);
            m.0[i][j] = Complex::new(re, im);
        }
    }
    special_unitarize(&m)
        .expect("independent gaussian rows")
        .convert()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::rngs::StdRng;
    use rand::SeedableRng;

    #[test]
    fn identity_pivot_is_rejected() {
        let id = ColorMatrix::<f64>::identity();
        match compress(&id) {
            Err(Su3Error::PivotTooSmall { pivot, .. }) => assert_eq!(pivot, 0.0),
            other => panic!("expected pivot rejection, got {:?}", other),
        }
        // The fallback keeps it usable.
        let stored = StoredLink::pack(&id).unwrap();
        assert!(stored.is_raw());
        assert_eq!(stored.unpack(), id);
    }

    #[test]
    fn permuted_identity_round_trips_exactly() {
        let one = Cplx::new(1.0f64, 0.0);
        let zero = Cplx::new(0.0f64, 0.0);
        // Even permutation with u02 = 1.
        let u = ColorMatrix::from_rows([zero, zero, one], [one, zero, zero], [zero, one, zero]);
        assert!(u.unitarity_defect() == 0.0 && u.det_defect() == 0.0);
        let c = compress(&u).unwrap();
        let back = reconstruct(&c);
        assert_eq!(back.max_abs_diff(&u), 0.0);
    }

    #[test]
    fn compress_reads_off_designated_entries() {
        let mut rng = StdRng::seed_from_u64(101);
        for _ in 0..50 {
            let u: ColorMatrix<f64> = haar_random(&mut rng);
            let c = match compress(&u) {
                Ok(c) => c,
                Err(Su3Error::PivotTooSmall { .. }) => continue,
                Err(e) => panic!("{e}"),
            };
            assert_eq!(c.row0, u.0[0]);
            assert_eq!(c.row1_01, [u.0[1][0], u.0[1][1]]);
            let w = c.to_words();
            assert_eq!(CompressedLink::from_words(w), c);
        }
    }

    #[test]
    fn round_trip_on_random_links() {
        let mut rng = StdRng::seed_from_u64(103);
        let mut rejected = 0usize;
        for _ in 0..1000 {
            let u: ColorMatrix<f64> = haar_random(&mut rng);
            match compress(&u) {
                Ok(c) => {
                    let back = reconstruct(&c);
                    assert!(back.max_abs_diff(&u) <= 1e-12);
                }
                Err(Su3Error::PivotTooSmall { .. }) => rejected += 1,
                Err(e) => panic!("{e}"),
            }
        }
        assert!(rejected <= 1, "implausible pivot rejection rate");
    }

    #[test]
    fn single_precision_round_trip() {
        let mut rng = StdRng::seed_from_u64(107);
        for _ in 0..200 {
            let u: ColorMatrix<f32> = haar_random(&mut rng);
            match compress(&u) {
                Ok(c) => {
                    let back = reconstruct(&c);
                    assert!(back.max_abs_diff(&u) <= 1e-5);
                }
                Err(Su3Error::PivotTooSmall { .. }) => {}
                Err(e) => panic!("{e}"),
            }
        }
    }

    #[test]
    fn compress_is_a_projection() {
        // Stored entries are copied verbatim, so a second compression of the
        // reconstruction is bitwise identical.
        let mut rng = StdRng::seed_from_u64(109);
        for _ in 0..100 {
            let u: ColorMatrix<f64> = haar_random(&mut rng);
            let Ok(c) = compress(&u) else { continue };
            let again = compress(&reconstruct(&c)).unwrap();
            assert_eq!(c.to_words(), again.to_words());
        }
    }

    #[test]
    fn reconstruction_stays_special_unitary_under_perturbation() {
        let mut rng = StdRng::seed_from_u64(113);
        for _ in 0..100 {
            let u: ColorMatrix<f64> = haar_random(&mut rng);
            let Ok(c) = compress(&u) else { continue };
            let mut w = c.to_words();
            for (k, x) in w.iter_mut().enumerate() {
                *x += if k % 2 == 0 { 1e-14 } else { -1e-14 };
            }
            let back = reconstruct(&CompressedLink::from_words(w));
            assert!(back.unitarity_defect() < 1e-10);
            assert!(back.det_defect() < 1e-10);
        }
    }

    #[test]
    fn non_unitary_input_is_refused() {
        let mut bad = ColorMatrix::<f64>::identity();
        bad.0[0][2] = Cplx::new(0.5, 0.0);
        match compress(&bad) {
            Err(Su3Error::NotSpecialUnitary { defect, .. }) => assert!(defect > 0.1),
            other => panic!("expected rejection, got {:?}", other),
        }
    }

    #[test]
    fn flop_count_matches_documented_audit() {
        assert_eq!(reconstruction_flops(), 69);
    }

    #[test]
    fn haar_random_links_are_special_unitary_and_distinct() {
        let mut rng_a = StdRng::seed_from_u64(127);
        let mut rng_b = StdRng::seed_from_u64(128);
        let a: ColorMatrix<f64> = haar_random(&mut rng_a);
        let b: ColorMatrix<f64> = haar_random(&mut rng_b);
        for u in [&a, &b] {
            assert!(u.unitarity_defect() < 1e-12);
            assert!(u.det_defect() < 1e-12);
        }
        assert!(a.max_abs_diff(&b) > 0.1);
    }
}

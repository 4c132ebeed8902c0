//! Precision-tagged gauge and spinor fields over a lattice, with
//! deterministic random initialization and reproducible global reductions.
//!
//! Randomness is counter-based: every (seed, site, stream) triple keys its
//! own ChaCha stream, so generated fields are pure functions of seed and
//! geometry no matter how site loops are scheduled. All random draws happen
//! in 64-bit and are narrowed afterwards, which makes the single-precision
//! variant of a field the exact rounding of the double-precision one.
//!
//! Global inner products accumulate per-site partial sums sequentially in
//! 64-bit, then combine them with a fixed-shape pairwise tree (split at the
//! largest power of two below the length). The tree shape depends only on
//! the volume, so reductions are bitwise reproducible across thread counts.

use num_complex::Complex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{ColorMatrix, Cplx, Real, Spinor};
use crate::geometry::{Axis, GeometryError, LatticeDims, SiteIndex};
use crate::su3::{self, Su3Error};

#[derive(Debug, Error, PartialEq)]
pub enum FieldError {
    #[error("geometry mismatch: {left} vs {right}")]
    GeometryMismatch { left: String, right: String },
    #[error("spin index {spin} out of range [0, 4)")]
    SpinOutOfRange { spin: usize },
    #[error("color index {color} out of range [0, 3)")]
    ColorOutOfRange { color: usize },
    #[error("data length {got} does not match expected {want}")]
    DataLength { got: usize, want: usize },
    #[error("link at site {site} axis {axis}: {source}")]
    BadLink {
        site: usize,
        axis: usize,
        source: Su3Error,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub(crate) fn check_same_geometry(a: LatticeDims, b: LatticeDims) -> Result<(), FieldError> {
    if a != b {
        return Err(FieldError::GeometryMismatch {
            left: a.label(),
            right: b.label(),
        });
    }
    Ok(())
}

/// Domain separation tags for the counter-based RNG.
#[derive(Clone, Copy)]
pub(crate) enum RngDomain {
    Gauge = 0,
    Spinor = 1,
}

/// One ChaCha stream per (seed, domain, site, stream); generation order
/// never matters because every consumer owns its stream.
pub(crate) fn site_rng(seed: u64, domain: RngDomain, site: usize, stream: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[0..8].copy_from_slice(&seed.to_le_bytes());
    key[8] = domain as u8;
    key[9..17].copy_from_slice(&(site as u64).to_le_bytes());
    key[17..25].copy_from_slice(&stream.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Fixed-shape pairwise summation; deterministic for a given length.
pub fn pairwise_sum(parts: &[Cplx<f64>]) -> Cplx<f64> {
    match parts.len() {
        0 => Complex::new(0.0, 0.0),
        1 => parts[0],
        n => {
            let mut split = 1;
            while split * 2 < n {
                split *= 2;
            }
            pairwise_sum(&parts[..split]) + pairwise_sum(&parts[split..])
        }
    }
}

/// V spinors over a lattice.
#[derive(Debug, Clone, PartialEq)]
pub struct SpinorField<R: Real> {
    geom: LatticeDims,
    data: Vec<Spinor<R>>,
}

impl<R: Real> SpinorField<R> {
    pub fn zeros(geom: LatticeDims) -> Self {
        SpinorField {
            geom,
            data: vec![Spinor::zero(); geom.volume()],
        }
    }

    pub fn from_vec(geom: LatticeDims, data: Vec<Spinor<R>>) -> Result<Self, FieldError> {
        if data.len() != geom.volume() {
            return Err(FieldError::DataLength {
                got: data.len(),
                want: geom.volume(),
            });
        }
        Ok(SpinorField { geom, data })
    }

    /// Unit entry at one (site, spin, color); zero elsewhere.
    pub fn point_source(
        geom: LatticeDims,
        site: SiteIndex,
        spin: usize,
        color: usize,
    ) -> Result<Self, FieldError> {
        if spin >= 4 {
            return Err(FieldError::SpinOutOfRange { spin });
        }
        if color >= 3 {
            return Err(FieldError::ColorOutOfRange { color });
        }
        geom.coords_of(site)?;
        let mut f = Self::zeros(geom);
        f.data[site.as_usize()].0[spin].0[color] = Complex::new(R::one(), R::zero());
        Ok(f)
    }

    /// Deterministic unit-Gaussian field (one stream per site).
    pub fn gaussian(geom: LatticeDims, seed: u64) -> Self {
        let data = (0..geom.volume())
            .into_par_iter()
            .map(|site| {
                let mut rng = site_rng(seed, RngDomain::Spinor, site, 0);
                let mut s = Spinor::zero();
                for spin in 0..4 {
                    for color in 0..3 {
                        let re: f64 = rng.sample(StandardNormal);
                        let im: f64 = rng.sample(StandardNormal);
                        s.0[spin].0[color] = Complex::new(R::from_f64(re), R::from_f64(im));
                    }
                }
                s
            })
            .collect();
        SpinorField { geom, data }
    }

    #[inline]
    pub fn geometry(&self) -> LatticeDims {
        self.geom
    }

    #[inline]
    pub fn site(&self, n: SiteIndex) -> &Spinor<R> {
        &self.data[n.as_usize()]
    }

    #[inline]
    pub fn site_mut(&mut self, n: SiteIndex) -> &mut Spinor<R> {
        &mut self.data[n.as_usize()]
    }

    pub fn as_slice(&self) -> &[Spinor<R>] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Spinor<R>] {
        &mut self.data
    }

    pub fn fill_zero(&mut self) {
        self.data.fill(Spinor::zero());
    }

    /// self += a x, with the 64-bit scalar narrowed to the field precision.
    pub fn axpy(&mut self, a: Cplx<f64>, x: &SpinorField<R>) -> Result<(), FieldError> {
        check_same_geometry(self.geom, x.geom)?;
        let ar = Complex::new(R::from_f64(a.re), R::from_f64(a.im));
        self.data
            .par_iter_mut()
            .zip(x.data.par_iter())
            .for_each(|(y, xs)| y.axpy_in(ar, xs));
        Ok(())
    }

    /// self += a x for a real scalar.
    pub fn axpy_re(&mut self, a: f64, x: &SpinorField<R>) -> Result<(), FieldError> {
        check_same_geometry(self.geom, x.geom)?;
        let ar = R::from_f64(a);
        self.data
            .par_iter_mut()
            .zip(x.data.par_iter())
            .for_each(|(y, xs)| y.axpy_re_in(ar, xs));
        Ok(())
    }

    /// self = x + a self (the CG direction update).
    pub fn xpay(&mut self, x: &SpinorField<R>, a: f64) -> Result<(), FieldError> {
        check_same_geometry(self.geom, x.geom)?;
        let ar = R::from_f64(a);
        self.data
            .par_iter_mut()
            .zip(x.data.par_iter())
            .for_each(|(p, xs)| {
                let mut next = *xs;
                next.axpy_re_in(ar, p);
                *p = next;
            });
        Ok(())
    }

    pub fn scale(&mut self, a: f64) {
        let ar = R::from_f64(a);
        self.data.par_iter_mut().for_each(|s| *s = s.scale_re(ar));
    }

    /// Global conj(self) . other; 64-bit pairwise-tree accumulation.
    pub fn dot(&self, other: &SpinorField<R>) -> Result<Cplx<f64>, FieldError> {
        check_same_geometry(self.geom, other.geom)?;
        let parts: Vec<Cplx<f64>> = self
            .data
            .par_iter()
            .zip(other.data.par_iter())
            .map(|(a, b)| a.dot_f64(b))
            .collect();
        Ok(pairwise_sum(&parts))
    }

    pub fn norm2(&self) -> f64 {
        self.dot(self).expect("same geometry").re
    }

    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    /// Per-component round to the target precision (exact when widening).
    pub fn convert<S: Real>(&self) -> SpinorField<S> {
        SpinorField {
            geom: self.geom,
            data: self.data.par_iter().map(|s| s.convert()).collect(),
        }
    }

    pub fn max_abs_diff(&self, other: &SpinorField<R>) -> f64 {
        self.data
            .iter()
            .zip(other.data.iter())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }
}

/// Forward links U_mu(n), 4 per site, site-major layout.
#[derive(Debug, Clone, PartialEq)]
pub struct GaugeField<R: Real> {
    geom: LatticeDims,
    links: Vec<ColorMatrix<R>>,
}

impl<R: Real> GaugeField<R> {
    /// All links identity (free field).
    pub fn cold_start(geom: LatticeDims) -> Self {
        GaugeField {
            geom,
            links: vec![ColorMatrix::identity(); geom.volume() * 4],
        }
    }

    /// Haar-like random links, one RNG stream per (site, direction).
    pub fn hot_start(geom: LatticeDims, seed: u64) -> Self {
        let links = (0..geom.volume() * 4)
            .into_par_iter()
            .map(|idx| {
                let (site, axis) = (idx / 4, idx % 4);
                let mut rng = site_rng(seed, RngDomain::Gauge, site, axis as u64);
                su3::haar_random(&mut rng)
            })
            .collect();
        GaugeField { geom, links }
    }

    /// Validating constructor used by file loading.
    pub fn from_links(geom: LatticeDims, links: Vec<ColorMatrix<R>>) -> Result<Self, FieldError> {
        if links.len() != geom.volume() * 4 {
            return Err(FieldError::DataLength {
                got: links.len(),
                want: geom.volume() * 4,
            });
        }
        let field = GaugeField { geom, links };
        field.validate()?;
        Ok(field)
    }

    /// Checks every link against the precision's special-unitarity tolerance.
    pub fn validate(&self) -> Result<(), FieldError> {
        let tol = su3::su3_tolerance(R::PRECISION);
        for (idx, u) in self.links.iter().enumerate() {
            let defect = u.unitarity_defect().max(u.det_defect());
            // NaN defects (garbage entries) must fail too, hence the negated form.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(defect <= tol) {
                return Err(FieldError::BadLink {
                    site: idx / 4,
                    axis: idx % 4,
                    source: Su3Error::NotSpecialUnitary { defect, tol },
                });
            }
        }
        Ok(())
    }

    #[inline]
    pub fn geometry(&self) -> LatticeDims {
        self.geom
    }

    #[inline]
    pub fn link(&self, site: SiteIndex, axis: Axis) -> &ColorMatrix<R> {
        &self.links[site.as_usize() * 4 + axis.index()]
    }

    pub fn links(&self) -> &[ColorMatrix<R>] {
        &self.links
    }

    pub fn convert<S: Real>(&self) -> GaugeField<S> {
        GaugeField {
            geom: self.geom,
            links: self.links.par_iter().map(|u| u.convert()).collect(),
        }
    }
}

/// Gauge field held in 10-real compressed form (raw fallback per link).
#[derive(Debug, Clone, PartialEq)]
pub struct CompressedGaugeField<R: Real> {
    geom: LatticeDims,
    links: Vec<su3::StoredLink<R>>,
}

impl<R: Real> CompressedGaugeField<R> {
    pub fn from_gauge(field: &GaugeField<R>) -> Result<Self, FieldError> {
        let links = field
            .links
            .iter()
            .enumerate()
            .map(|(idx, u)| {
                su3::StoredLink::pack(u).map_err(|source| FieldError::BadLink {
                    site: idx / 4,
                    axis: idx % 4,
                    source,
                })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Ok(CompressedGaugeField {
            geom: field.geom,
            links,
        })
    }

    pub fn from_stored(
        geom: LatticeDims,
        links: Vec<su3::StoredLink<R>>,
    ) -> Result<Self, FieldError> {
        if links.len() != geom.volume() * 4 {
            return Err(FieldError::DataLength {
                got: links.len(),
                want: geom.volume() * 4,
            });
        }
        Ok(CompressedGaugeField { geom, links })
    }

    #[inline]
    pub fn geometry(&self) -> LatticeDims {
        self.geom
    }

    #[inline]
    pub fn stored(&self, site: SiteIndex, axis: Axis) -> &su3::StoredLink<R> {
        &self.links[site.as_usize() * 4 + axis.index()]
    }

    pub fn stored_links(&self) -> &[su3::StoredLink<R>] {
        &self.links
    }

    /// Links that failed the compression pivot and are kept raw.
    pub fn raw_count(&self) -> usize {
        self.links.iter().filter(|l| l.is_raw()).count()
    }

    /// Expand every link back to its 18-real form.
    pub fn expand(&self) -> Result<GaugeField<R>, FieldError> {
        let links = self.links.iter().map(|l| l.unpack()).collect();
        GaugeField::from_links(self.geom, links)
    }
}

/// Anything the stencil can pull links from. Compressed sources reconstruct
/// on every access, mirroring a streamed kernel that never caches expanded
/// links.
pub trait LinkSource<R: Real>: Sync {
    fn geometry(&self) -> LatticeDims;
    fn link(&self, site: SiteIndex, axis: Axis) -> ColorMatrix<R>;
    fn is_compressed(&self) -> bool;
}

impl<R: Real> LinkSource<R> for GaugeField<R> {
    fn geometry(&self) -> LatticeDims {
        self.geom
    }

    #[inline]
    fn link(&self, site: SiteIndex, axis: Axis) -> ColorMatrix<R> {
        *GaugeField::link(self, site, axis)
    }

    fn is_compressed(&self) -> bool {
        false
    }
}

impl<R: Real> LinkSource<R> for CompressedGaugeField<R> {
    fn geometry(&self) -> LatticeDims {
        self.geom
    }

    #[inline]
    fn link(&self, site: SiteIndex, axis: Axis) -> ColorMatrix<R> {
        self.stored(site, axis).unpack()
    }

    fn is_compressed(&self) -> bool {
        true
    }
}

//! The Wilson operator: per-site stencil, whole-field application, the
//! gamma_5 adjoint, and the normal operator the solver inverts.
//!
//! One stencil evaluation reads the spinor at a site and at its 8 nearest
//! neighbors (9 x 24 words), plus the 4 forward links at the site and the 4
//! forward links at the backward neighbors (8 x 18 words): 360 real words,
//! or 296 when links are stored in 10-word compressed form. The arithmetic
//! follows a fixed four-stage shape that the operation counters mirror:
//!
//! 1. gather neighbors (no arithmetic),
//! 2. spin add/sub: 16 phased color-vector additions, 96 ops,
//! 3. link multiplies: 8 matrix x half-spinor products, 1152 ops,
//! 4. accumulate: 8 spinor additions plus the mass term, 216 ops,
//!
//! for 1464 real operations per site. The adjoint uses gamma_5 D gamma_5,
//! charged at 24 sign multiplies per gamma_5 application.

use rayon::prelude::*;
use thiserror::Error;

use crate::algebra::{
    apply_gamma5, expand_half, project_half, projector_dense, Cplx, ColorMatrix, ProjSign, Real,
    Spinor, GAMMA5_FLOPS, LINK_REALS, SPINOR_REALS,
};
use crate::fields::{check_same_geometry, FieldError, GaugeField, LinkSource, SpinorField};
use crate::geometry::{Axis, Direction, LatticeDims, SiteIndex};
use crate::su3::{reconstruction_flops, COMPRESSED_LINK_REALS};

/// Real words entering one stencil with full links.
pub const STENCIL_WORDS_UNCOMPRESSED: usize = 8 * LINK_REALS + 9 * SPINOR_REALS;
/// Real words entering one stencil with compressed links.
pub const STENCIL_WORDS_COMPRESSED: usize = 8 * COMPRESSED_LINK_REALS + 9 * SPINOR_REALS;

const _: () = assert!(STENCIL_WORDS_UNCOMPRESSED == 360);
const _: () = assert!(STENCIL_WORDS_COMPRESSED == 296);

/// Stage real-operation counts for one uncompressed stencil.
pub const STAGE2_FLOPS: u64 = 96;
pub const STAGE3_FLOPS: u64 = 1152;
pub const STAGE4_FLOPS: u64 = 216;
/// Total per-site cost of one operator application.
pub const STENCIL_FLOPS: u64 = STAGE2_FLOPS + STAGE3_FLOPS + STAGE4_FLOPS;

const _: () = assert!(STENCIL_FLOPS == 1464);

/// Sign in front of the hopping sum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum HoppingSign {
    /// -1/2: the free constant mode is a zero mode at m_q = 0.
    #[default]
    Minus,
    /// +1/2.
    Plus,
}

impl HoppingSign {
    #[inline]
    pub fn factor(self) -> f64 {
        match self {
            HoppingSign::Minus => -0.5,
            HoppingSign::Plus => 0.5,
        }
    }
}

/// Which operator a call applies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OpKind {
    D,
    Dagger,
    Normal,
}

/// Everything one stencil evaluation consumes.
#[derive(Debug, Clone)]
pub struct StencilInputs<R: Real> {
    pub center: Spinor<R>,
    /// psi(n + mu), axis-indexed.
    pub fwd: [Spinor<R>; 4],
    /// psi(n - mu), axis-indexed.
    pub bwd: [Spinor<R>; 4],
    /// U_mu(n).
    pub link_fwd: [ColorMatrix<R>; 4],
    /// U_mu(n - mu).
    pub link_bwd: [ColorMatrix<R>; 4],
    pub m_q: f64,
}

impl<R: Real> StencilInputs<R> {
    pub fn gather<L: LinkSource<R>>(
        links: &L,
        input: &SpinorField<R>,
        site: SiteIndex,
        m_q: f64,
    ) -> StencilInputs<R> {
        let geom = input.geometry();
        let mut fwd = [Spinor::zero(); 4];
        let mut bwd = [Spinor::zero(); 4];
        let mut link_fwd = [ColorMatrix::zero(); 4];
        let mut link_bwd = [ColorMatrix::zero(); 4];
        for axis in Axis::ALL {
            let up = geom
                .neighbor(site, Direction::forward(axis))
                .expect("site valid for its own geometry");
            let down = geom
                .neighbor(site, Direction::backward(axis))
                .expect("site valid for its own geometry");
            fwd[axis.index()] = *input.site(up);
            bwd[axis.index()] = *input.site(down);
            link_fwd[axis.index()] = links.link(site, axis);
            link_bwd[axis.index()] = links.link(down, axis);
        }
        StencilInputs {
            center: *input.site(site),
            fwd,
            bwd,
            link_fwd,
            link_bwd,
            m_q,
        }
    }
}

/// One site of the Wilson operator:
/// (m_q + 4) psi(n) + sign/2 sum_mu [ U_mu(n) (1 - gamma_mu) psi(n + mu)
///                                  + U_mu^dag(n - mu) (1 + gamma_mu) psi(n - mu) ].
pub fn stencil<R: Real>(inputs: &StencilInputs<R>, sign: HoppingSign) -> Spinor<R> {
    let mut hops = Spinor::<R>::zero();
    for axis in Axis::ALL {
        let a = axis.index();
        // Forward hop: project to the upper doublet, multiply, re-expand.
        let h = project_half(axis, ProjSign::Minus, &inputs.fwd[a]);
        let g = inputs.link_fwd[a].mul_half(&h);
        hops += expand_half(axis, ProjSign::Minus, &g);
        // Backward hop with the daggered link.
        let h = project_half(axis, ProjSign::Plus, &inputs.bwd[a]);
        let g = inputs.link_bwd[a].dag_mul_half(&h);
        hops += expand_half(axis, ProjSign::Plus, &g);
    }
    let mut out = inputs.center.scale_re(R::from_f64(inputs.m_q + 4.0));
    out.axpy_re_in(R::from_f64(sign.factor()), &hops);
    out
}

/// Matrix-free Wilson operator over a link source.
pub struct WilsonOp<'l, R: Real, L: LinkSource<R>> {
    links: &'l L,
    m_q: f64,
    sign: HoppingSign,
    _real: std::marker::PhantomData<R>,
}

impl<'l, R: Real, L: LinkSource<R>> WilsonOp<'l, R, L> {
    pub fn new(links: &'l L, m_q: f64) -> Self {
        Self::with_sign(links, m_q, HoppingSign::default())
    }

    pub fn with_sign(links: &'l L, m_q: f64, sign: HoppingSign) -> Self {
        WilsonOp {
            links,
            m_q,
            sign,
            _real: std::marker::PhantomData,
        }
    }

    pub fn geometry(&self) -> LatticeDims {
        self.links.geometry()
    }

    pub fn m_q(&self) -> f64 {
        self.m_q
    }

    pub fn sign(&self) -> HoppingSign {
        self.sign
    }

    pub fn is_compressed(&self) -> bool {
        self.links.is_compressed()
    }

    pub fn apply(&self, kind: OpKind, input: &SpinorField<R>) -> Result<SpinorField<R>, FieldError> {
        match kind {
            OpKind::D => self.apply_d(input),
            OpKind::Dagger => self.apply_dagger(input),
            OpKind::Normal => self.apply_normal(input),
        }
    }

    /// D psi, parallel over output sites; bitwise independent of schedule.
    pub fn apply_d(&self, input: &SpinorField<R>) -> Result<SpinorField<R>, FieldError> {
        let geom = input.geometry();
        check_same_geometry(self.links.geometry(), geom)?;
        let data: Vec<Spinor<R>> = (0..geom.volume())
            .into_par_iter()
            .map(|i| {
                let inputs = StencilInputs::gather(self.links, input, SiteIndex(i), self.m_q);
                stencil(&inputs, self.sign)
            })
            .collect();
        SpinorField::from_vec(geom, data)
    }

    /// D^dag psi = gamma_5 D gamma_5 psi.
    pub fn apply_dagger(&self, input: &SpinorField<R>) -> Result<SpinorField<R>, FieldError> {
        let flipped = gamma5_field(input);
        Ok(gamma5_field(&self.apply_d(&flipped)?))
    }

    /// D^dag D psi, two stencil passes.
    pub fn apply_normal(&self, input: &SpinorField<R>) -> Result<SpinorField<R>, FieldError> {
        self.apply_dagger(&self.apply_d(input)?)
    }
}

/// gamma_5 applied site by site.
pub fn gamma5_field<R: Real>(f: &SpinorField<R>) -> SpinorField<R> {
    let data = f.as_slice().iter().map(apply_gamma5).collect();
    SpinorField::from_vec(f.geometry(), data).expect("same geometry")
}

/// Exact per-call operation counts, split by pipeline stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FlopReport {
    pub stage2: u64,
    pub stage3: u64,
    pub stage4: u64,
    pub gamma5: u64,
    pub reconstruction: u64,
}

impl FlopReport {
    pub fn total(&self) -> u64 {
        self.stage2 + self.stage3 + self.stage4 + self.gamma5 + self.reconstruction
    }

    /// Stencil-only share (stages 2-4), excluding adjoint and link-expansion
    /// surcharges.
    pub fn stencil_total(&self) -> u64 {
        self.stage2 + self.stage3 + self.stage4
    }
}

/// Operation count of applying `kind` once over `volume` sites. Counts are
/// structural constants: they never depend on field values.
pub fn flop_count(kind: OpKind, volume: usize, compressed: bool) -> FlopReport {
    let v = volume as u64;
    let passes: u64 = match kind {
        OpKind::D | OpKind::Dagger => 1,
        OpKind::Normal => 2,
    };
    let gamma5_applications: u64 = match kind {
        OpKind::D => 0,
        // One gamma_5 on the input, one on the output.
        OpKind::Dagger | OpKind::Normal => 2,
    };
    FlopReport {
        stage2: passes * v * STAGE2_FLOPS,
        stage3: passes * v * STAGE3_FLOPS,
        stage4: passes * v * STAGE4_FLOPS,
        gamma5: gamma5_applications * v * GAMMA5_FLOPS,
        reconstruction: if compressed {
            passes * v * 8 * reconstruction_flops()
        } else {
            0
        },
    }
}

#[derive(Debug, Error, PartialEq)]
pub enum DslashError {
    #[error("dense oracle supports volume <= {max}; got {got}")]
    VolumeTooLarge { got: usize, max: usize },
}

/// Largest volume the dense oracle will materialize.
pub const DENSE_ORACLE_MAX_VOLUME: usize = 4096;

/// Explicit complex matrix of the operator; 12V complex rows = 24V real
/// rows. Built directly from the dense 4x4 gamma tables and the link
/// entries, with no use of the sparse projector recipes, so it is an
/// independent oracle for the stencil path.
pub struct DenseOperator {
    geom: LatticeDims,
    dim: usize,
    data: Vec<Cplx<f64>>,
}

#[inline]
fn flat(site: usize, spin: usize, color: usize) -> usize {
    (site * 4 + spin) * 3 + color
}

impl DenseOperator {
    /// Complex dimension (12 V).
    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Real dimension (24 V).
    pub fn real_dim(&self) -> usize {
        2 * self.dim
    }

    pub fn geometry(&self) -> LatticeDims {
        self.geom
    }

    #[inline]
    pub fn entry(&self, row: usize, col: usize) -> Cplx<f64> {
        self.data[row * self.dim + col]
    }

    fn add_to_entry(&mut self, row: usize, col: usize, v: Cplx<f64>) {
        self.data[row * self.dim + col] += v;
    }

    pub fn mul_vec(&self, x: &[Cplx<f64>]) -> Vec<Cplx<f64>> {
        assert_eq!(x.len(), self.dim);
        (0..self.dim)
            .map(|r| {
                let row = &self.data[r * self.dim..(r + 1) * self.dim];
                let mut acc = Cplx::new(0.0, 0.0);
                for (a, b) in row.iter().zip(x.iter()) {
                    acc += a * b;
                }
                acc
            })
            .collect()
    }

    pub fn dagger(&self) -> DenseOperator {
        let mut out = DenseOperator {
            geom: self.geom,
            dim: self.dim,
            data: vec![Cplx::new(0.0, 0.0); self.dim * self.dim],
        };
        for r in 0..self.dim {
            for c in 0..self.dim {
                out.data[c * self.dim + r] = self.entry(r, c).conj();
            }
        }
        out
    }

    pub fn flatten(f: &SpinorField<f64>) -> Vec<Cplx<f64>> {
        let mut out = Vec::with_capacity(f.geometry().volume() * 12);
        for s in f.as_slice() {
            for spin in 0..4 {
                for color in 0..3 {
                    out.push(s.0[spin].0[color]);
                }
            }
        }
        out
    }

    pub fn unflatten(geom: LatticeDims, x: &[Cplx<f64>]) -> SpinorField<f64> {
        assert_eq!(x.len(), geom.volume() * 12);
        let mut f = SpinorField::zeros(geom);
        for (i, s) in f.as_mut_slice().iter_mut().enumerate() {
            for spin in 0..4 {
                for color in 0..3 {
                    s.0[spin].0[color] = x[flat(i, spin, color)];
                }
            }
        }
        f
    }

    pub fn apply_field(&self, f: &SpinorField<f64>) -> SpinorField<f64> {
        let y = self.mul_vec(&Self::flatten(f));
        Self::unflatten(self.geom, &y)
    }
}

/// Assemble the explicit operator from the gauge links and dense gammas.
pub fn dense_operator(
    gauge: &GaugeField<f64>,
    m_q: f64,
    sign: HoppingSign,
) -> Result<DenseOperator, DslashError> {
    let geom = gauge.geometry();
    if geom.volume() > DENSE_ORACLE_MAX_VOLUME {
        return Err(DslashError::VolumeTooLarge {
            got: geom.volume(),
            max: DENSE_ORACLE_MAX_VOLUME,
        });
    }
    let dim = geom.volume() * 12;
    let mut op = DenseOperator {
        geom,
        dim,
        data: vec![Cplx::new(0.0, 0.0); dim * dim],
    };

    let mass = Cplx::new(m_q + 4.0, 0.0);
    let factor = Cplx::new(sign.factor(), 0.0);
    for n in geom.sites() {
        for spin in 0..4 {
            for color in 0..3 {
                let d = flat(n.as_usize(), spin, color);
                op.add_to_entry(d, d, mass);
            }
        }
        for axis in Axis::ALL {
            let p_minus = projector_dense::<f64>(axis, ProjSign::Minus);
            let p_plus = projector_dense::<f64>(axis, ProjSign::Plus);
            let up = geom.neighbor(n, Direction::forward(axis)).unwrap();
            let down = geom.neighbor(n, Direction::backward(axis)).unwrap();
            let u_fwd = gauge.link(n, axis);
            let u_bwd = gauge.link(down, axis);
            for alpha in 0..4 {
                for beta in 0..4 {
                    for a in 0..3 {
                        for b in 0..3 {
                            let row = flat(n.as_usize(), alpha, a);
                            // Forward hop: U_mu(n) (1 - gamma_mu).
                            op.add_to_entry(
                                row,
                                flat(up.as_usize(), beta, b),
                                factor * p_minus[alpha][beta] * u_fwd.0[a][b],
                            );
                            // Backward hop: U_mu^dag(n - mu) (1 + gamma_mu).
                            op.add_to_entry(
                                row,
                                flat(down.as_usize(), beta, b),
                                factor * p_plus[alpha][beta] * u_bwd.0[b][a].conj(),
                            );
                        }
                    }
                }
            }
        }
    }
    Ok(op)
}

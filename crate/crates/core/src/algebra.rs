//! Complex, color and spin arithmetic for the Wilson operator.
//!
//! All kernels are generic over the floating-point width through [`Real`],
//! so the same code serves the 64-bit outer solver and the 32-bit inner
//! solver; mixing widths is a type error unless routed through an explicit
//! `convert`.
//!
//! Gamma matrices use the chiral (DeGrand-Rossi) basis with direction 0 the
//! time axis. Writing 2x2 blocks, gamma_mu = [[0, A_mu], [A_mu^dag, 0]] with
//!
//! ```text
//! A_0 = (( 1  0)     A_1 = (( 0  i)     A_2 = (( 0 -1)     A_3 = (( i  0)
//!        ( 0  1))           ( i  0))           ( 1  0))           ( 0 -i))
//! ```
//!
//! so each gamma_mu has exactly one entry from {+-1, +-i} per row, and
//! gamma_5 = diag(1, 1, -1, -1) = -gamma_0 gamma_1 gamma_2 gamma_3.
//!
//! Hopping projectors (1 -+ gamma_mu) are never applied as dense 4x4
//! multiplies outside of test oracles: the block structure means the two
//! lower spin components of the projected spinor are unit-phase multiples of
//! the two upper ones, so a projection is two phased additions of color
//! vectors and the link multiply only ever sees a [`HalfSpinor`].

use std::fmt;
use std::ops::{Add, AddAssign, Neg, Sub, SubAssign};

use num_complex::Complex;
use num_traits::{Float, NumAssign};

use crate::geometry::{Axis, Direction, Orientation};

/// Complex scalar over a precision-tagged real.
pub type Cplx<R> = Complex<R>;

/// Floating-point width tag carried by fields and files.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Precision {
    Single,
    Double,
}

impl Precision {
    /// Bytes per real word (4 or 8).
    #[inline]
    pub fn word_bytes(self) -> usize {
        match self {
            Precision::Single => 4,
            Precision::Double => 8,
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            Precision::Single => "single",
            Precision::Double => "double",
        }
    }
}

impl fmt::Display for Precision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

/// Real scalar abstraction over `f32`/`f64`.
pub trait Real: Float + NumAssign + fmt::Debug + fmt::Display + Send + Sync + 'static {
    const PRECISION: Precision;

    /// Round-to-nearest narrowing (exact when widening).
    fn from_f64(x: f64) -> Self;
    fn to_f64(self) -> f64;

    /// Append the IEEE bits, little-endian.
    fn put_le(self, out: &mut Vec<u8>);
    /// Read back what [`put_le`](Real::put_le) wrote, advancing `pos`.
    fn take_le(bytes: &[u8], pos: &mut usize) -> Option<Self>;
}

impl Real for f32 {
    const PRECISION: Precision = Precision::Single;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x as f32
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self as f64
    }

    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn take_le(bytes: &[u8], pos: &mut usize) -> Option<Self> {
        let raw = bytes.get(*pos..*pos + 4)?;
        *pos += 4;
        Some(f32::from_le_bytes(raw.try_into().expect("4 bytes")))
    }
}

impl Real for f64 {
    const PRECISION: Precision = Precision::Double;

    #[inline]
    fn from_f64(x: f64) -> Self {
        x
    }

    #[inline]
    fn to_f64(self) -> f64 {
        self
    }

    fn put_le(self, out: &mut Vec<u8>) {
        out.extend_from_slice(&self.to_le_bytes());
    }

    fn take_le(bytes: &[u8], pos: &mut usize) -> Option<Self> {
        let raw = bytes.get(*pos..*pos + 8)?;
        *pos += 8;
        Some(f64::from_le_bytes(raw.try_into().expect("8 bytes")))
    }
}

/// Real words in one spinor: 4 spin x 3 color x 2.
pub const SPINOR_REALS: usize = 24;
/// Real words in one uncompressed gauge link: 3 x 3 x 2.
pub const LINK_REALS: usize = 18;

/// Real-operation cost of one 3x3 complex matrix-vector product:
/// 9 complex multiplies at 6 ops plus 6 complex additions at 2 ops.
pub const MAT_VEC_FLOPS: u64 = 66;

/// Fourth root of unity. Multiplying by one of these is a component
/// shuffle with sign flips, exact in floating point and free of rounding.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Phase {
    One,
    MinusOne,
    I,
    MinusI,
}

impl Phase {
    const fn pow_of_i(self) -> u8 {
        match self {
            Phase::One => 0,
            Phase::I => 1,
            Phase::MinusOne => 2,
            Phase::MinusI => 3,
        }
    }

    const fn from_pow(k: u8) -> Phase {
        match k % 4 {
            0 => Phase::One,
            1 => Phase::I,
            2 => Phase::MinusOne,
            _ => Phase::MinusI,
        }
    }

    pub const fn mul(self, rhs: Phase) -> Phase {
        Phase::from_pow(self.pow_of_i() + rhs.pow_of_i())
    }

    pub const fn negated(self) -> Phase {
        self.mul(Phase::MinusOne)
    }

    pub const fn conj(self) -> Phase {
        match self {
            Phase::I => Phase::MinusI,
            Phase::MinusI => Phase::I,
            other => other,
        }
    }

    /// Exact phase multiplication: no floating-point products involved.
    #[inline]
    pub fn apply<R: Real>(self, z: Cplx<R>) -> Cplx<R> {
        match self {
            Phase::One => z,
            Phase::MinusOne => Cplx::new(-z.re, -z.im),
            Phase::I => Cplx::new(-z.im, z.re),
            Phase::MinusI => Cplx::new(z.im, -z.re),
        }
    }

    #[inline]
    pub fn apply_vec<R: Real>(self, v: ColorVector<R>) -> ColorVector<R> {
        ColorVector([
            self.apply(v.0[0]),
            self.apply(v.0[1]),
            self.apply(v.0[2]),
        ])
    }

    pub fn value<R: Real>(self) -> Cplx<R> {
        self.apply(Cplx::new(R::one(), R::zero()))
    }
}

/// 3 complex color components of one spin index.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorVector<R: Real>(pub [Cplx<R>; 3]);

impl<R: Real> ColorVector<R> {
    pub fn zero() -> Self {
        ColorVector([Cplx::new(R::zero(), R::zero()); 3])
    }

    #[inline]
    pub fn scale(self, a: Cplx<R>) -> Self {
        ColorVector([self.0[0] * a, self.0[1] * a, self.0[2] * a])
    }

    #[inline]
    pub fn scale_re(self, a: R) -> Self {
        ColorVector([
            self.0[0] * a,
            self.0[1] * a,
            self.0[2] * a,
        ])
    }

    /// `self + phase * other`, the stage-2 spin combination primitive.
    #[inline]
    pub fn phased_add(self, phase: Phase, other: ColorVector<R>) -> Self {
        ColorVector([
            self.0[0] + phase.apply(other.0[0]),
            self.0[1] + phase.apply(other.0[1]),
            self.0[2] + phase.apply(other.0[2]),
        ])
    }

    /// conj(self) . other, accumulated left to right in 64-bit.
    pub fn dot_f64(&self, other: &ColorVector<R>) -> Cplx<f64> {
        let mut acc = Cplx::new(0.0f64, 0.0);
        for c in 0..3 {
            let a = self.0[c];
            let b = other.0[c];
            let (ar, ai) = (a.re.to_f64(), a.im.to_f64());
            let (br, bi) = (b.re.to_f64(), b.im.to_f64());
            acc.re += ar * br + ai * bi;
            acc.im += ar * bi - ai * br;
        }
        acc
    }

    pub fn norm2_f64(&self) -> f64 {
        self.dot_f64(self).re
    }

    pub fn convert<S: Real>(&self) -> ColorVector<S> {
        ColorVector(self.0.map(|z| Cplx::new(S::from_f64(z.re.to_f64()), S::from_f64(z.im.to_f64()))))
    }

    pub fn max_abs_diff(&self, other: &ColorVector<R>) -> f64 {
        let mut m = 0.0f64;
        for c in 0..3 {
            let d = self.0[c] - other.0[c];
            m = m.max(d.re.to_f64().abs()).max(d.im.to_f64().abs());
        }
        m
    }
}

impl<R: Real> Add for ColorVector<R> {
    type Output = Self;

    #[inline]
    fn add(self, rhs: Self) -> Self {
        ColorVector([self.0[0] + rhs.0[0], self.0[1] + rhs.0[1], self.0[2] + rhs.0[2]])
    }
}

impl<R: Real> Sub for ColorVector<R> {
    type Output = Self;

    #[inline]
    fn sub(self, rhs: Self) -> Self {
        ColorVector([self.0[0] - rhs.0[0], self.0[1] - rhs.0[1], self.0[2] - rhs.0[2]])
    }
}

impl<R: Real> AddAssign for ColorVector<R> {
    #[inline]
    fn add_assign(&mut self, rhs: Self) {
        for c in 0..3 {
            self.0[c] = self.0[c] + rhs.0[c];
        }
    }
}

impl<R: Real> SubAssign for ColorVector<R> {
    #[inline]
    fn sub_assign(&mut self, rhs: Self) {
        for c in 0..3 {
            self.0[c] = self.0[c] - rhs.0[c];
        }
    }
}

impl<R: Real> Neg for ColorVector<R> {
    type Output = Self;

    #[inline]
    fn neg(self) -> Self {
        ColorVector([-self.0[0], -self.0[1], -self.0[2]])
    }
}

/// Row-major 3x3 complex matrix; a gauge link when special-unitary.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColorMatrix<R: Real>(pub [[Cplx<R>; 3]; 3]);

impl<R: Real> ColorMatrix<R> {
    pub fn zero() -> Self {
        ColorMatrix([[Cplx::new(R::zero(), R::zero()); 3]; 3])
    }

    pub fn identity() -> Self {
        let mut m = Self::zero();
        for i in 0..3 {
            m.0[i][i] = Cplx::new(R::one(), R::zero());
        }
        m
    }

    pub fn from_rows(r0: [Cplx<R>; 3], r1: [Cplx<R>; 3], r2: [Cplx<R>; 3]) -> Self {
        ColorMatrix([r0, r1, r2])
    }

    /// U v.
    #[inline]
    pub fn mul_vec(&self, v: &ColorVector<R>) -> ColorVector<R> {
        let mut out = [Cplx::new(R::zero(), R::zero()); 3];
        for (i, row) in self.0.iter().enumerate() {
            out[i] = row[0] * v.0[0] + row[1] * v.0[1] + row[2] * v.0[2];
        }
        ColorVector(out)
    }

    /// U^dag v without materializing the adjoint: sums conj(U[j][i]) v[j].
    #[inline]
    pub fn dag_mul_vec(&self, v: &ColorVector<R>) -> ColorVector<R> {
        let mut out = [Cplx::new(R::zero(), R::zero()); 3];
        for (i, o) in out.iter_mut().enumerate() {
            *o = self.0[0][i].conj() * v.0[0]
                + self.0[1][i].conj() * v.0[1]
                + self.0[2][i].conj() * v.0[2];
        }
        ColorVector(out)
    }

    #[inline]
    pub fn mul_half(&self, h: &HalfSpinor<R>) -> HalfSpinor<R> {
        HalfSpinor([self.mul_vec(&h.0[0]), self.mul_vec(&h.0[1])])
    }

    #[inline]
    pub fn dag_mul_half(&self, h: &HalfSpinor<R>) -> HalfSpinor<R> {
        HalfSpinor([self.dag_mul_vec(&h.0[0]), self.dag_mul_vec(&h.0[1])])
    }

    pub fn dagger(&self) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                out.0[i][j] = self.0[j][i].conj();
            }
        }
        out
    }

    pub fn mul_mat(&self, other: &Self) -> Self {
        let mut out = Self::zero();
        for i in 0..3 {
            for j in 0..3 {
                let mut acc = Cplx::new(R::zero(), R::zero());
                for k in 0..3 {
                    acc += self.0[i][k] * other.0[k][j];
                }
                out.0[i][j] = acc;
            }
        }
        out
    }

    pub fn det(&self) -> Cplx<R> {
        let m = &self.0;
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    }

    /// Max-norm of U^dag U - 1, evaluated in 64-bit.
    pub fn unitarity_defect(&self) -> f64 {
        let wide: ColorMatrix<f64> = self.convert();
        // NaN entries would silently drop out of the max fold below.
        if !wide.is_finite() {
            return f64::INFINITY;
        }
        let gram = wide.dagger().mul_mat(&wide);
        let mut defect = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                let d = gram.0[i][j] - Cplx::new(want, 0.0);
                defect = defect.max(d.re.abs()).max(d.im.abs());
            }
        }
        defect
    }

    /// |det U - 1| evaluated in 64-bit.
    pub fn det_defect(&self) -> f64 {
        let wide: ColorMatrix<f64> = self.convert();
        if !wide.is_finite() {
            return f64::INFINITY;
        }
        (wide.det() - Cplx::new(1.0, 0.0)).norm()
    }

    pub fn is_finite(&self) -> bool {
        self.0
            .iter()
            .flatten()
            .all(|z| z.re.to_f64().is_finite() && z.im.to_f64().is_finite())
    }

    pub fn convert<S: Real>(&self) -> ColorMatrix<S> {
        let mut out = ColorMatrix::zero();
        for i in 0..3 {
            for j in 0..3 {
                let z = self.0[i][j];
                out.0[i][j] = Cplx::new(S::from_f64(z.re.to_f64()), S::from_f64(z.im.to_f64()));
            }
        }
        out
    }

    pub fn max_abs_diff(&self, other: &Self) -> f64 {
        let mut m = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                let d = self.0[i][j] - other.0[i][j];
                m = m.max(d.re.to_f64().abs()).max(d.im.to_f64().abs());
            }
        }
        m
    }
}

/// 4 spin x 3 color site value; 24 real words.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Spinor<R: Real>(pub [ColorVector<R>; 4]);

const _: () = assert!(SPINOR_REALS == 4 * 3 * 2);
const _: () = assert!(LINK_REALS == 3 * 3 * 2);

impl<R: Real> Spinor<R> {
    pub fn zero() -> Self {
        Spinor([ColorVector::zero(); 4])
    }

    #[inline]
    pub fn scale(self, a: Cplx<R>) -> Self {
        Spinor(self.0.map(|v| v.scale(a)))
    }

    #[inline]
    pub fn scale_re(self, a: R) -> Self {
        Spinor(self.0.map(|v| v.scale_re(a)))
    }

    /// self += a * x.
    #[inline]
    pub fn axpy_in(&mut self, a: Cplx<R>, x: &Spinor<R>) {
        for s in 0..4 {
            for c in 0..3 {
                self.0[s].0[c] += a * x.0[s].0[c];
            }
        }
    }

    /// self += a * x with a real scale.
    #[inline]
    pub fn axpy_re_in(&mut self, a: R, x: &Spinor<R>) {
        for s in 0..4 {
            for c in 0..3 {
                self.0[s].0[c] += x.0[s].0[c] * a;
            }
        }
    }

    /// conj(self) . other over all 24 components, accumulated in 64-bit.
    pub fn dot_f64(&self, other: &Spinor<R>) -> Cplx<f64> {
        let mut acc = Cplx::new(0.0f64, 0.0);
        for s in 0..4 {
            acc += self.0[s].dot_f64(&other.0[s]);
        }
        acc
    }

    pub fn norm2_f64(&self) -> f64 {
        self.dot_f64(self).re
    }

    pub fn convert<S: Real>(&self) -> Spinor<S> {
        Spinor(self.0.map(|v| v.convert()))
    }

    pub fn max_abs_diff(&self, other: &Spinor<R>) -> f64 {
        self.0
            .iter()
            .zip(other.0.iter())
            .map(|(a, b)| a.max_abs_diff(b))
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.max_abs_diff(&Spinor::zero())
    }
}

impl<R: Real> Add for Spinor<R> {
    type Output = Self;

    fn add(self, rhs: Self) -> Self {
        Spinor([
            self.0[0] + rhs.0[0],
            self.0[1] + rhs.0[1],
            self.0[2] + rhs.0[2],
            self.0[3] + rhs.0[3],
        ])
    }
}

impl<R: Real> Sub for Spinor<R> {
    type Output = Self;

    fn sub(self, rhs: Self) -> Self {
        Spinor([
            self.0[0] - rhs.0[0],
            self.0[1] - rhs.0[1],
            self.0[2] - rhs.0[2],
            self.0[3] - rhs.0[3],
        ])
    }
}

impl<R: Real> AddAssign for Spinor<R> {
    fn add_assign(&mut self, rhs: Self) {
        for s in 0..4 {
            self.0[s] += rhs.0[s];
        }
    }
}

impl<R: Real> SubAssign for Spinor<R> {
    fn sub_assign(&mut self, rhs: Self) {
        for s in 0..4 {
            self.0[s] -= rhs.0[s];
        }
    }
}

impl<R: Real> Neg for Spinor<R> {
    type Output = Self;

    fn neg(self) -> Self {
        Spinor(self.0.map(|v| -v))
    }
}

/// The two upper spin components surviving a hopping projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct HalfSpinor<R: Real>(pub [ColorVector<R>; 2]);

impl<R: Real> HalfSpinor<R> {
    pub fn zero() -> Self {
        HalfSpinor([ColorVector::zero(); 2])
    }
}

/// Position and value of the single nonzero in one gamma-matrix row.
#[derive(Debug, Clone, Copy)]
pub struct GammaEntry {
    pub col: usize,
    pub phase: Phase,
}

const fn ge(col: usize, phase: Phase) -> GammaEntry {
    GammaEntry { col, phase }
}

/// gamma_0..gamma_3 as one `(column, phase)` nonzero per row; the dense
/// matrices in the module docs read off row by row.
pub const GAMMA: [[GammaEntry; 4]; 4] = [
    [
        ge(2, Phase::One),
        ge(3, Phase::One),
        ge(0, Phase::One),
        ge(1, Phase::One),
    ],
    [
        ge(3, Phase::I),
        ge(2, Phase::I),
        ge(1, Phase::MinusI),
        ge(0, Phase::MinusI),
    ],
    [
        ge(3, Phase::MinusOne),
        ge(2, Phase::One),
        ge(1, Phase::One),
        ge(0, Phase::MinusOne),
    ],
    [
        ge(2, Phase::I),
        ge(3, Phase::MinusI),
        ge(0, Phase::MinusI),
        ge(1, Phase::I),
    ],
];

/// Real-multiply convention for one gamma_5 application: all 24 words are
/// charged one sign multiply, keeping the counter data-independent.
pub const GAMMA5_FLOPS: u64 = 24;

pub fn gamma_dense<R: Real>(axis: Axis) -> [[Cplx<R>; 4]; 4] {
    let zero = Cplx::new(R::zero(), R::zero());
    let mut m = [[zero; 4]; 4];
    for (row, entry) in GAMMA[axis.index()].iter().enumerate() {
        m[row][entry.col] = entry.phase.value();
    }
    m
}

/// gamma_5 = diag(1, 1, -1, -1).
pub fn gamma5_dense<R: Real>() -> [[Cplx<R>; 4]; 4] {
    let zero = Cplx::new(R::zero(), R::zero());
    let one = Cplx::new(R::one(), R::zero());
    let mut m = [[zero; 4]; 4];
    m[0][0] = one;
    m[1][1] = one;
    m[2][2] = -one;
    m[3][3] = -one;
    m
}

/// Dense 4x4 spin-matrix application; the test oracle for projections.
pub fn apply_spin_matrix<R: Real>(m: &[[Cplx<R>; 4]; 4], s: &Spinor<R>) -> Spinor<R> {
    let mut out = Spinor::zero();
    for (row, out_v) in out.0.iter_mut().enumerate() {
        for col in 0..4 {
            *out_v += s.0[col].scale(m[row][col]);
        }
    }
    out
}

/// Sparse gamma application: one phased copy per spin component.
pub fn apply_gamma<R: Real>(axis: Axis, s: &Spinor<R>) -> Spinor<R> {
    let rows = &GAMMA[axis.index()];
    Spinor([
        rows[0].phase.apply_vec(s.0[rows[0].col]),
        rows[1].phase.apply_vec(s.0[rows[1].col]),
        rows[2].phase.apply_vec(s.0[rows[2].col]),
        rows[3].phase.apply_vec(s.0[rows[3].col]),
    ])
}

/// gamma_5 application: flips the sign of spin components 2 and 3.
pub fn apply_gamma5<R: Real>(s: &Spinor<R>) -> Spinor<R> {
    Spinor([s.0[0], s.0[1], -s.0[2], -s.0[3]])
}

/// Which of the pair (1 + gamma) / (1 - gamma) a projection uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProjSign {
    Plus = 0,
    Minus = 1,
}

impl ProjSign {
    pub const fn phase(self) -> Phase {
        match self {
            ProjSign::Plus => Phase::One,
            ProjSign::Minus => Phase::MinusOne,
        }
    }

    /// A forward hop picks up (1 - gamma_mu), a backward hop (1 + gamma_mu).
    pub const fn for_hop(orientation: Orientation) -> ProjSign {
        match orientation {
            Orientation::Forward => ProjSign::Minus,
            Orientation::Backward => ProjSign::Plus,
        }
    }
}

/// Sparse recipe for one projector (1 + s gamma_mu).
///
/// Upper output components: `h[j] = psi[j] + phase_up[j] * psi[partner[j]]`.
/// Lower output components: `out[2+i] = phase_lo[i] * g[src_lo[i]]` where `g`
/// is whatever the upper half became after the color-matrix multiply (the
/// expansion commutes with color action, so links only ever touch `h`).
#[derive(Debug, Clone, Copy)]
pub struct ProjectorRecipe {
    pub partner: [usize; 2],
    pub phase_up: [Phase; 2],
    pub src_lo: [usize; 2],
    pub phase_lo: [Phase; 2],
}

const fn build_recipe(axis: usize, sign: Phase) -> ProjectorRecipe {
    let g = GAMMA[axis];
    ProjectorRecipe {
        partner: [g[0].col, g[1].col],
        phase_up: [sign.mul(g[0].phase), sign.mul(g[1].phase)],
        src_lo: [g[2].col, g[3].col],
        phase_lo: [sign.mul(g[2].phase), sign.mul(g[3].phase)],
    }
}

/// All 8 recipes, indexed `[axis][ProjSign]`; derived at compile time from
/// [`GAMMA`] so the sparse path and the dense oracle share one source.
pub const PROJECTOR_RECIPES: [[ProjectorRecipe; 2]; 4] = {
    let mut table = [[build_recipe(0, Phase::One); 2]; 4];
    let mut axis = 0;
    while axis < 4 {
        table[axis][0] = build_recipe(axis, Phase::One);
        table[axis][1] = build_recipe(axis, Phase::MinusOne);
        axis += 1;
    }
    table
};

pub const fn projector_recipe(axis: Axis, sign: ProjSign) -> &'static ProjectorRecipe {
    &PROJECTOR_RECIPES[axis as usize][sign as usize]
}

/// Upper two components of (1 + s gamma_mu) psi: two phased color adds.
#[inline]
pub fn project_half<R: Real>(axis: Axis, sign: ProjSign, s: &Spinor<R>) -> HalfSpinor<R> {
    let r = projector_recipe(axis, sign);
    HalfSpinor([
        s.0[0].phased_add(r.phase_up[0], s.0[r.partner[0]]),
        s.0[1].phased_add(r.phase_up[1], s.0[r.partner[1]]),
    ])
}

/// Rebuild the full rank-2 spinor from a (possibly link-multiplied) upper half.
#[inline]
pub fn expand_half<R: Real>(axis: Axis, sign: ProjSign, g: &HalfSpinor<R>) -> Spinor<R> {
    let r = projector_recipe(axis, sign);
    Spinor([
        g.0[0],
        g.0[1],
        r.phase_lo[0].apply_vec(g.0[r.src_lo[0]]),
        r.phase_lo[1].apply_vec(g.0[r.src_lo[1]]),
    ])
}

/// Full (1 + s gamma_mu) psi via the two-component path.
pub fn project<R: Real>(axis: Axis, sign: ProjSign, s: &Spinor<R>) -> Spinor<R> {
    expand_half(axis, sign, &project_half(axis, sign, s))
}

/// Projector attached to a hopping term: (1 - gamma) forward, (1 + gamma) back.
pub fn project_for_hop<R: Real>(d: Direction, s: &Spinor<R>) -> Spinor<R> {
    project(d.axis, ProjSign::for_hop(d.orientation), s)
}

/// Dense (1 + s gamma_mu); oracle counterpart of the sparse recipes.
pub fn projector_dense<R: Real>(axis: Axis, sign: ProjSign) -> [[Cplx<R>; 4]; 4] {
    let mut m = gamma_dense::<R>(axis);
    let s = sign.phase();
    for (i, row) in m.iter_mut().enumerate() {
        for (j, e) in row.iter_mut().enumerate() {
            *e = s.apply(*e);
            if i == j {
                *e += Cplx::new(R::one(), R::zero());
            }
        }
    }
    m
}

//! Conjugate gradient solvers for the normal equations (D'D) x = b.
//!
//! Two entry points share one report shape. `cg_reference` is plain CG
//! carried entirely in 64-bit and serves as the correctness baseline.
//! `residual_guided_cg` is a defect-correction scheme: short fixed-length CG
//! runs in 32-bit attack the rescaled residual, and every block is followed
//! by a 64-bit correction step that recomputes the true residual from
//! scratch. The outer recursion therefore never trusts the inner one; the
//! residual it reports is the real thing, and the 64-bit operator fires
//! exactly once per correction plus once for the initial residual.
//!
//! Across blocks the search direction is recycled rather than discarded:
//! the new block starts from p = r + beta (p_prev - (r, p_prev) r) with
//! beta = s_new / (s_old rho_end). In exact arithmetic this is the previous
//! CG recurrence continued through the rescaling, and the projection keeps
//! (r, p) = (r, r) so the usual step length remains the line minimizer even
//! when the freshly recomputed residual drifts from the recursive one. All
//! scalar products, even those feeding the 32-bit loop, are accumulated in
//! 64-bit and narrowed on use.
//!
//! The normal operator is positive semi-definite by construction, so a
//! non-positive curvature p.(D'D)p can only mean the direction fell into the
//! numerical kernel. A first offense drops the recycled direction and
//! retries fresh; a fresh direction with no curvature is a hard error.

use thiserror::Error;

use crate::dslash::{HoppingSign, OpKind, WilsonOp};
use crate::fields::{CompressedGaugeField, FieldError, GaugeField, LinkSource, SpinorField};

#[derive(Debug, Error)]
pub enum SolverError {
    #[error("invalid solver configuration: {0}")]
    BadConfig(String),
    #[error("right-hand side has zero norm")]
    ZeroRhs,
    #[error("right-hand side is not finite")]
    NonFiniteRhs,
    #[error("search direction has no curvature: p.(D'D p) = {pq:e}")]
    Breakdown { pq: f64 },
    #[error(transparent)]
    Field(#[from] FieldError),
}

#[derive(Debug, Clone, Copy)]
pub struct SolverConfig {
    /// Bare quark mass entering the operator diagonal as m_q + 4.
    pub m_q: f64,
    /// Relative residual target: stop once |b - Ax| < r_min |b|.
    pub r_min: f64,
    /// Fixed inner block length of the mixed-precision scheme.
    pub inner_k: usize,
    /// Outer correction budget before giving up.
    pub max_outer: usize,
    /// Iteration budget of the 64-bit reference solver.
    pub max_iterations: usize,
    pub sign: HoppingSign,
    /// Run the inner block on compressed links, reconstructing per stencil.
    pub compressed_inner: bool,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            m_q: 0.1,
            r_min: 1e-9,
            inner_k: 16,
            max_outer: 1000,
            max_iterations: 20_000,
            sign: HoppingSign::default(),
            compressed_inner: false,
        }
    }
}

impl SolverConfig {
    fn validate(&self) -> Result<(), SolverError> {
        if !self.m_q.is_finite() {
            return Err(SolverError::BadConfig(format!(
                "mass {} is not finite",
                self.m_q
            )));
        }
        if !(self.r_min > 0.0 && self.r_min.is_finite()) {
            return Err(SolverError::BadConfig(format!(
                "residual target {} must be positive and finite",
                self.r_min
            )));
        }
        if self.inner_k == 0 {
            return Err(SolverError::BadConfig("inner block length is 0".into()));
        }
        if self.max_outer == 0 || self.max_iterations == 0 {
            return Err(SolverError::BadConfig("iteration budget is 0".into()));
        }
        Ok(())
    }
}

/// What a solve did, regardless of which solver ran.
///
/// `final_true_residual` is always recomputed from the returned solution
/// with a fresh operator application; that application is deliberately not
/// counted in `dd_high_applies`, which tallies only what the algorithm
/// itself consumed.
#[derive(Debug, Clone, Default)]
pub struct SolveReport {
    pub converged: bool,
    /// Correction steps taken (reference CG: iterations).
    pub outer_iterations: usize,
    /// Total 32-bit CG steps across all blocks (reference CG: 0).
    pub inner_iterations: usize,
    /// |b - Ax| after every outer step, starting with the initial residual.
    pub s_high_log: Vec<f64>,
    /// Squared inner residual after every inner step, in block order.
    pub rho_log: Vec<f64>,
    /// 32-bit steps per inner block, one entry per outer step (reference
    /// CG: empty).
    pub block_steps: Vec<usize>,
    /// 64-bit normal-operator applications.
    pub dd_high_applies: usize,
    /// 32-bit normal-operator applications.
    pub dd_low_applies: usize,
    /// Inner blocks that lost curvature and dropped their recycled direction.
    pub restarts: usize,
    /// |b - Ax| / |b| recomputed from scratch at exit.
    pub final_true_residual: f64,
}

/// b - (D'D) x, freshly applied.
fn residual<R: crate::algebra::Real, L: LinkSource<R>>(
    op: &WilsonOp<'_, R, L>,
    x: &SpinorField<R>,
    b: &SpinorField<R>,
) -> Result<SpinorField<R>, SolverError> {
    let mut r = op.apply(OpKind::Normal, x)?;
    r.xpay(b, -1.0)?;
    Ok(r)
}

/// Relative true residual |b - (D'D) x| / |b| of a candidate solution.
pub fn true_residual<R: crate::algebra::Real, L: LinkSource<R>>(
    links: &L,
    x: &SpinorField<R>,
    b: &SpinorField<R>,
    m_q: f64,
    sign: HoppingSign,
) -> Result<f64, SolverError> {
    let norm = b.norm();
    if norm == 0.0 {
        return Err(SolverError::ZeroRhs);
    }
    let op = WilsonOp::with_sign(links, m_q, sign);
    Ok(residual(&op, x, b)?.norm() / norm)
}

fn check_rhs(b: &SpinorField<f64>) -> Result<f64, SolverError> {
    let norm = b.norm();
    if norm == 0.0 {
        return Err(SolverError::ZeroRhs);
    }
    if !norm.is_finite() {
        return Err(SolverError::NonFiniteRhs);
    }
    Ok(norm)
}

/// Plain 64-bit CG on the normal equations, the correctness baseline.
pub fn cg_reference<L: LinkSource<f64>>(
    links: &L,
    b: &SpinorField<f64>,
    config: &SolverConfig,
) -> Result<(SpinorField<f64>, SolveReport), SolverError> {
    config.validate()?;
    let b_norm = check_rhs(b)?;
    let stop = config.r_min * b_norm;
    let op = WilsonOp::with_sign(links, config.m_q, config.sign);

    let mut report = SolveReport::default();
    let mut x = SpinorField::<f64>::zeros(b.geometry());
    let mut r = residual(&op, &x, b)?;
    report.dd_high_applies += 1;
    let mut rho = r.norm2();
    report.s_high_log.push(rho.sqrt());
    let mut p = r.clone();

    while rho.sqrt() >= stop && report.outer_iterations < config.max_iterations {
        let q = op.apply(OpKind::Normal, &p)?;
        report.dd_high_applies += 1;
        let pq = p.dot(&q)?.re;
        // Negated so a NaN curvature counts as breakdown.
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !(pq > 0.0) {
            return Err(SolverError::Breakdown { pq });
        }
        let alpha = rho / pq;
        x.axpy_re(alpha, &p)?;
        r.axpy_re(-alpha, &q)?;
        let rho_next = r.norm2();
        report.rho_log.push(rho_next);
        report.s_high_log.push(rho_next.sqrt());
        let beta = rho_next / rho;
        p.xpay(&r, beta)?;
        rho = rho_next;
        report.outer_iterations += 1;
    }

    report.converged = rho.sqrt() < stop;
    report.final_true_residual = true_residual(links, &x, b, config.m_q, config.sign)?;
    Ok((x, report))
}

/// Mixed-precision defect-correction CG.
///
/// The 32-bit links are derived here by narrowing `gauge`; with
/// `compressed_inner` set they are additionally packed so the inner loop
/// reconstructs every link on access.
pub fn residual_guided_cg(
    gauge: &GaugeField<f64>,
    b: &SpinorField<f64>,
    config: &SolverConfig,
) -> Result<(SpinorField<f64>, SolveReport), SolverError> {
    config.validate()?;
    let low = gauge.convert::<f32>();
    if config.compressed_inner {
        let packed = CompressedGaugeField::from_gauge(&low)?;
        defect_correction_loop(gauge, &packed, b, config)
    } else {
        defect_correction_loop(gauge, &low, b, config)
    }
}

/// Direction carried from one inner block into the next, together with the
/// quantities needed to rescale it: the final squared inner residual and
/// the outer residual norm the block was normalized with.
struct Recycled {
    dir: SpinorField<f32>,
    rho_end: f64,
    scale: f64,
}

fn defect_correction_loop<L: LinkSource<f32>>(
    gauge: &GaugeField<f64>,
    low_links: &L,
    b: &SpinorField<f64>,
    config: &SolverConfig,
) -> Result<(SpinorField<f64>, SolveReport), SolverError> {
    let b_norm = check_rhs(b)?;
    let stop = config.r_min * b_norm;
    let geom = b.geometry();
    let high_op = WilsonOp::with_sign(gauge, config.m_q, config.sign);
    let low_op = WilsonOp::with_sign(low_links, config.m_q, config.sign);

    let mut report = SolveReport::default();
    let mut x = SpinorField::<f64>::zeros(geom);
    let mut r_high = residual(&high_op, &x, b)?;
    report.dd_high_applies += 1;
    let mut s = r_high.norm();
    report.s_high_log.push(s);

    let mut recycled: Option<Recycled> = None;
    let mut converged = s < stop;

    while !converged && report.outer_iterations < config.max_outer {
        // Inner block works on the unit-normalized residual so its iterates
        // stay well inside 32-bit range whatever the outer scale is.
        let scale = s;
        let r0 = {
            let mut scaled = r_high.clone();
            scaled.scale(1.0 / scale);
            scaled.convert::<f32>()
        };
        let fresh = recycled.is_none();
        let mut p = match recycled.take() {
            None => r0.clone(),
            Some(rec) => {
                // Continue the previous recurrence: project the old direction
                // against the new residual, rescale it across the restart and
                // put the residual component back in front.
                let overlap = r0.dot(&rec.dir)?;
                let mut tail = rec.dir;
                tail.axpy(-overlap, &r0)?;
                let beta0 = scale / (rec.scale * rec.rho_end);
                let mut p = r0.clone();
                p.axpy_re(beta0, &tail)?;
                p
            }
        };
        let mut psi = SpinorField::<f32>::zeros(geom);
        let mut r = r0.clone();
        let mut rho = r.norm2();
        let mut broke = false;
        let mut steps = 0usize;

        for n in 0..config.inner_k {
            let q = low_op.apply(OpKind::Normal, &p)?;
            report.dd_low_applies += 1;
            let pq = p.dot(&q)?.re;
            // Negated so a NaN curvature counts as breakdown.
            #[allow(clippy::neg_cmp_op_on_partial_ord)]
            if !(pq > 0.0) {
                if fresh && n == 0 {
                    return Err(SolverError::Breakdown { pq });
                }
                report.restarts += 1;
                broke = true;
                break;
            }
            let alpha = rho / pq;
            psi.axpy_re(alpha, &p)?;
            r.axpy_re(-alpha, &q)?;
            let rho_next = r.norm2();
            report.rho_log.push(rho_next);
            report.inner_iterations += 1;
            steps += 1;
            if rho_next == 0.0 {
                break;
            }
            let beta = rho_next / rho;
            p.xpay(&r, beta)?;
            rho = rho_next;
        }

        if steps > 0 {
            // Correction: fold the rescaled inner solution into the 64-bit
            // iterate and recompute the residual from scratch.
            x.axpy_re(scale, &psi.convert::<f64>())?;
            r_high = residual(&high_op, &x, b)?;
            report.dd_high_applies += 1;
            s = r_high.norm();
            report.s_high_log.push(s);
            report.block_steps.push(steps);
            report.outer_iterations += 1;
        }
        // Long blocks can run the 32-bit recursion below its own floor, at
        // which point the final rho says nothing about the true residual and
        // the recycling weight would amplify floor noise. Only recycle when
        // the recursion predicted the measured outer reduction.
        let drifted = steps > 0 && s > 10.0 * scale * rho.sqrt();
        recycled = if broke || drifted || rho == 0.0 {
            None
        } else {
            Some(Recycled {
                dir: p,
                rho_end: rho,
                scale,
            })
        };
        converged = s < stop;
    }

    report.converged = converged;
    report.final_true_residual = true_residual(gauge, &x, b, config.m_q, config.sign)?;
    Ok((x, report))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dslash::{dense_operator, DenseOperator};
    use crate::geometry::{LatticeDims, SiteIndex};
    use nalgebra as na;

    fn dims(t: usize, x: usize, y: usize, z: usize) -> LatticeDims {
        LatticeDims::new(t, x, y, z).unwrap()
    }

    fn rel_diff(a: &SpinorField<f64>, b: &SpinorField<f64>) -> f64 {
        let mut d = a.clone();
        d.axpy_re(-1.0, b).unwrap();
        d.norm() / b.norm()
    }

    #[test]
    fn cg_solves_free_field_point_source() {
        let geom = dims(4, 2, 2, 2);
        let gauge = GaugeField::<f64>::cold_start(geom);
        let b = SpinorField::point_source(geom, SiteIndex(3), 2, 1).unwrap();
        let config = SolverConfig {
            m_q: 0.5,
            r_min: 1e-10,
            ..SolverConfig::default()
        };
        let (x, report) = cg_reference(&gauge, &b, &config).unwrap();
        assert!(report.converged);
        assert!(report.final_true_residual <= 1e-10);
        // Verify through a residual computed by hand, not via the report.
        let op = WilsonOp::new(&gauge, 0.5);
        let mut check = op.apply(OpKind::Normal, &x).unwrap();
        check.axpy_re(-1.0, &b).unwrap();
        assert!(check.norm() <= 1e-10 * b.norm());
    }

    #[test]
    fn cg_matches_dense_direct_solve() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::hot_start(geom, 21);
        let b = SpinorField::<f64>::gaussian(geom, 22);
        let config = SolverConfig {
            m_q: 0.8,
            r_min: 1e-12,
            ..SolverConfig::default()
        };
        let (x, report) = cg_reference(&gauge, &b, &config).unwrap();
        assert!(report.converged);

        let dense = dense_operator(&gauge, 0.8, HoppingSign::default()).unwrap();
        let n = dense.dim();
        let a = na::DMatrix::from_fn(n, n, |r, c| dense.entry(r, c));
        let normal = a.adjoint() * &a;
        let rhs = na::DVector::from_iterator(n, DenseOperator::flatten(&b));
        let direct = normal.lu().solve(&rhs).expect("normal matrix is regular");
        let x_direct = DenseOperator::unflatten(geom, direct.as_slice());

        assert!(
            rel_diff(&x, &x_direct) <= 1e-9,
            "iterative and direct solutions disagree by {:e}",
            rel_diff(&x, &x_direct)
        );
    }

    #[test]
    fn cg_recovers_manufactured_solution() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::hot_start(geom, 31);
        let x0 = SpinorField::<f64>::gaussian(geom, 32);
        let op = WilsonOp::new(&gauge, 0.2);
        let b = op.apply(OpKind::Normal, &x0).unwrap();
        let config = SolverConfig {
            m_q: 0.2,
            r_min: 1e-11,
            ..SolverConfig::default()
        };
        let (x, report) = cg_reference(&gauge, &b, &config).unwrap();
        assert!(report.converged);
        assert!(rel_diff(&x, &x0) <= 1e-8);
    }

    #[test]
    fn rgcg_agrees_with_reference_and_meets_target() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::hot_start(geom, 41);
        let b = SpinorField::<f64>::gaussian(geom, 42);
        let config = SolverConfig {
            m_q: 0.3,
            r_min: 1e-9,
            inner_k: 8,
            ..SolverConfig::default()
        };
        let (x_ref, _) = cg_reference(&gauge, &b, &config).unwrap();
        let (x, report) = residual_guided_cg(&gauge, &b, &config).unwrap();

        assert!(report.converged);
        assert!(report.final_true_residual < config.r_min);
        assert!(rel_diff(&x, &x_ref) <= 10.0 * config.r_min);
        assert_eq!(report.dd_high_applies, report.outer_iterations + 1);
        assert_eq!(report.inner_iterations, report.dd_low_applies);
        assert_eq!(report.block_steps.len(), report.outer_iterations);
        assert_eq!(report.block_steps.iter().sum::<usize>(), report.inner_iterations);
        // Every correction must shrink the true residual.
        for w in report.s_high_log.windows(2) {
            assert!(w[1] < w[0], "outer residual went {} -> {}", w[0], w[1]);
        }
    }

    #[test]
    fn rgcg_last_logged_residual_is_the_true_one() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::hot_start(geom, 51);
        let b = SpinorField::<f64>::gaussian(geom, 52);
        let config = SolverConfig {
            m_q: 0.4,
            r_min: 1e-8,
            inner_k: 6,
            ..SolverConfig::default()
        };
        let (x, report) = residual_guided_cg(&gauge, &b, &config).unwrap();
        let logged = report.s_high_log.last().unwrap() / b.norm();
        assert!((logged - report.final_true_residual).abs() <= 1e-13);
        let recomputed = true_residual(&gauge, &x, &b, 0.4, HoppingSign::default()).unwrap();
        assert!((recomputed - report.final_true_residual).abs() <= 1e-13);
    }

    #[test]
    fn rgcg_handles_block_length_one() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::hot_start(geom, 61);
        let b = SpinorField::<f64>::gaussian(geom, 62);
        let config = SolverConfig {
            m_q: 0.5,
            r_min: 1e-7,
            inner_k: 1,
            ..SolverConfig::default()
        };
        let (_, report) = residual_guided_cg(&gauge, &b, &config).unwrap();
        assert!(report.converged);
        assert_eq!(report.inner_iterations, report.outer_iterations);
    }

    #[test]
    fn rgcg_compressed_inner_matches_plain_inner() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::hot_start(geom, 71);
        let b = SpinorField::<f64>::gaussian(geom, 72);
        let mut config = SolverConfig {
            m_q: 0.3,
            r_min: 1e-9,
            inner_k: 10,
            ..SolverConfig::default()
        };
        let (x_plain, rep_plain) = residual_guided_cg(&gauge, &b, &config).unwrap();
        config.compressed_inner = true;
        let (x_packed, rep_packed) = residual_guided_cg(&gauge, &b, &config).unwrap();
        assert!(rep_plain.converged && rep_packed.converged);
        assert!(rep_packed.final_true_residual < config.r_min);
        // Reconstruction noise perturbs the inner iterates, but both runs
        // land within the same convergence ball.
        assert!(rel_diff(&x_packed, &x_plain) <= 20.0 * config.r_min);
    }

    #[test]
    fn constant_mode_at_zero_mass_breaks_down() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::cold_start(geom);
        // The free operator with the default hopping sign annihilates the
        // constant spinor at m_q = 0, so CG sees zero curvature immediately.
        let mut b = SpinorField::<f64>::zeros(geom);
        for s in b.as_mut_slice() {
            for cv in &mut s.0 {
                for z in &mut cv.0 {
                    *z = num_complex::Complex::new(1.0, 0.0);
                }
            }
        }
        let config = SolverConfig {
            m_q: 0.0,
            ..SolverConfig::default()
        };
        assert!(matches!(
            cg_reference(&gauge, &b, &config),
            Err(SolverError::Breakdown { .. })
        ));
        assert!(matches!(
            residual_guided_cg(&gauge, &b, &config),
            Err(SolverError::Breakdown { .. })
        ));
    }

    #[test]
    fn zero_rhs_and_bad_configs_are_rejected() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::cold_start(geom);
        let zero = SpinorField::<f64>::zeros(geom);
        let config = SolverConfig::default();
        assert!(matches!(
            cg_reference(&gauge, &zero, &config),
            Err(SolverError::ZeroRhs)
        ));

        let b = SpinorField::<f64>::gaussian(geom, 1);
        for bad in [
            SolverConfig {
                r_min: 0.0,
                ..config
            },
            SolverConfig {
                inner_k: 0,
                ..config
            },
            SolverConfig {
                max_outer: 0,
                ..config
            },
            SolverConfig {
                m_q: f64::NAN,
                ..config
            },
        ] {
            assert!(matches!(
                residual_guided_cg(&gauge, &b, &bad),
                Err(SolverError::BadConfig(_))
            ));
        }
    }

    #[test]
    fn non_convergence_is_a_flag_not_an_error() {
        let geom = dims(2, 2, 2, 2);
        let gauge = GaugeField::<f64>::hot_start(geom, 81);
        let b = SpinorField::<f64>::gaussian(geom, 82);
        let config = SolverConfig {
            r_min: 1e-12,
            inner_k: 2,
            max_outer: 1,
            ..SolverConfig::default()
        };
        let (_, report) = residual_guided_cg(&gauge, &b, &config).unwrap();
        assert!(!report.converged);
        assert_eq!(report.outer_iterations, 1);
        assert_eq!(report.dd_high_applies, 2);
    }
}

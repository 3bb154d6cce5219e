//! Three retractions onto the constraint manifold, each of the form
//! R_u(xi) = psi(u + xi) for a scaling map psi acting blockwise.
//!
//! * projective: the metric projection; block l is scaled by
//!   1/(1 - mu - l lambda), with the multipliers recovered from the unique
//!   zero of a monotone scalar function h1 on an explicit bracket.
//! * orthogonal: geometric-sequence scalings sigma_l = sigma_0 r^{l/2}
//!   with r the unique positive zero of the polynomial h2.
//! * closed-form: first-order approximation of the projective scalings,
//!   sigma_l = sqrt(1 + 2 mu + 2 l lambda), available in closed form but
//!   only defined on a neighborhood S of the manifold.
//!
//! Root solving uses safeguarded Newton iterations with a bisection
//! fallback on the analytic bracket (|h| tolerance 1e-14 on inputs with
//! normalized block masses, at most 100 iterations).

use crate::error::{Error, Result};
use crate::manifold::Manifold;

/// Relative threshold below which a block counts as zero: a block is "zero"
/// when ||w_l||^2 < ZERO_BLOCK_REL * ||w||^2.
const ZERO_BLOCK_REL: f64 = 1e-28;

/// Absolute tolerance on the scalar residual h (block masses normalized).
const ROOT_TOL: f64 = 1e-14;
const ROOT_MAX_ITER: usize = 100;

/// Retraction selector used throughout the solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Retraction {
    Projective,
    Orthogonal,
    ClosedForm,
}

impl Retraction {
    pub fn apply(&self, man: &Manifold, w: &[f64]) -> Result<Vec<f64>> {
        match self {
            Retraction::Projective => retract_projective(man, w),
            Retraction::Orthogonal => retract_orthogonal(man, w),
            Retraction::ClosedForm => retract_closedform(man, w),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            Retraction::Projective => "projective",
            Retraction::Orthogonal => "orthogonal",
            Retraction::ClosedForm => "closedform",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "projective" => Ok(Retraction::Projective),
            "orthogonal" => Ok(Retraction::Orthogonal),
            "closedform" => Ok(Retraction::ClosedForm),
            other => Err(Error::Config(format!(
                "unknown retraction '{other}' (expected projective, orthogonal or closedform)"
            ))),
        }
    }
}

/// Safeguarded Newton on a strictly increasing function over the open
/// bracket (lo, hi). `h` returns the value and derivative.
fn newton_bisect(
    mut h: impl FnMut(f64) -> (f64, f64),
    mut lo: f64,
    mut hi: f64,
    start: f64,
    tol: f64,
) -> Result<f64> {
    let mut t = start;
    for _ in 0..ROOT_MAX_ITER {
        let (v, dv) = h(t);
        if v.is_finite() && v.abs() <= tol {
            return Ok(t);
        }
        if !v.is_finite() {
            // pathological evaluation; retreat to the bracket midpoint
            t = 0.5 * (lo + hi);
            continue;
        }
        if v > 0.0 {
            hi = t;
        } else {
            lo = t;
        }
        let mut next = t - v / dv;
        if !next.is_finite() || next <= lo || next >= hi {
            next = 0.5 * (lo + hi);
        }
        let width_floor = hi - lo <= f64::EPSILON * lo.abs().max(hi.abs()).max(1.0);
        if next == t || width_floor {
            // the bracket is exhausted at rounding precision
            if v.abs() <= 1e-8 {
                return Ok(t);
            }
            return Err(Error::RootSolve(format!(
                "bracket collapsed at t = {t:.17e} with |h| = {:.3e}",
                v.abs()
            )));
        }
        t = next;
    }
    Err(Error::RootSolve(format!(
        "no convergence within {ROOT_MAX_ITER} iterations"
    )))
}

/// Block masses normalized to sum 1, plus the zero-block mask and the
/// range [f1, f2] of nonzero components (as Gamma weights l).
struct BlockProfile {
    /// normalized squared block norms, ordered l = F..-F
    s: Vec<f64>,
    total: f64,
    zero: Vec<bool>,
    f1: f64,
    f2: f64,
}

fn block_profile(man: &Manifold, w: &[f64]) -> Result<BlockProfile> {
    let raw = man.block_norms_sq(w);
    let total: f64 = raw.iter().sum();
    if total <= 0.0 || !total.is_finite() {
        return Err(Error::OutsideDomain("zero or non-finite input".into()));
    }
    let zero: Vec<bool> = raw.iter().map(|&s| s < ZERO_BLOCK_REL * total).collect();
    let s: Vec<f64> = raw
        .iter()
        .zip(&zero)
        .map(|(&v, &z)| if z { 0.0 } else { v / total })
        .collect();
    let m = man.mag;
    let mut below = 0.0;
    let mut above = 0.0;
    let mut f1 = f64::INFINITY;
    let mut f2 = f64::NEG_INFINITY;
    for (b, &sv) in s.iter().enumerate() {
        if zero[b] {
            continue;
        }
        let l = man.weight(b);
        if l < m {
            below += sv;
        }
        if l > m {
            above += sv;
        }
        f1 = f1.min(l);
        f2 = f2.max(l);
    }
    if below <= 0.0 || above <= 0.0 {
        return Err(Error::OutsideDomain(format!(
            "input has no mass on one side of M = {m} (below {below:.3e}, above {above:.3e})"
        )));
    }
    Ok(BlockProfile { s, total, zero, f1, f2 })
}

fn scale_blocks(man: &Manifold, w: &[f64], sigmas: &[f64]) -> Vec<f64> {
    let len = man.block_len();
    let mut out = vec![0.0f64; w.len()];
    for b in 0..man.ncomp() {
        let s = sigmas[b];
        if s != 0.0 {
            for i in b * len..(b + 1) * len {
                out[i] = s * w[i];
            }
        }
    }
    out
}

/// Root r of h1 and the per-block scaling factors of the projective
/// retraction (zero entries mark dropped blocks). Exposed for oracle tests.
pub fn projective_scalings(man: &Manifold, w: &[f64]) -> Result<(f64, Vec<f64>)> {
    let prof = block_profile(man, w)?;
    let m = man.mag;
    let lo = 1.0 / (prof.f1 - m);
    let hi = 1.0 / (prof.f2 - m);
    debug_assert!(lo < 0.0 && hi > 0.0);

    let terms: Vec<(f64, f64)> = (0..man.ncomp())
        .filter(|&b| !prof.zero[b])
        .map(|b| (man.weight(b) - m, prof.s[b]))
        .collect();
    let h1 = |t: f64| {
        let mut v = 0.0;
        let mut dv = 0.0;
        for &(lm, s) in &terms {
            let d = 1.0 - lm * t;
            let d2 = d * d;
            v += lm * s / d2;
            dv += 2.0 * lm * lm * s / (d2 * d);
        }
        (v, dv)
    };
    let r = newton_bisect(h1, lo, hi, 0.5 * (lo + hi), ROOT_TOL)?;

    let mut s_sum = 0.0;
    for &(lm, s) in &terms {
        let d = 1.0 - lm * r;
        s_sum += s / (d * d);
    }
    let norm = (prof.total * s_sum).sqrt();
    let sigmas: Vec<f64> = (0..man.ncomp())
        .map(|b| {
            if prof.zero[b] {
                0.0
            } else {
                1.0 / (norm * (1.0 - (man.weight(b) - m) * r))
            }
        })
        .collect();
    Ok((r, sigmas))
}

/// Metric projection onto the manifold (the projective retraction).
/// For F = 1 with M >= 0 a closed-form fast path is used and
/// cross-validated against the generic root-finding path.
pub fn retract_projective(man: &Manifold, w: &[f64]) -> Result<Vec<f64>> {
    if man.f == 1 && man.mag >= 0.0 {
        if let Ok(z) = retract_projective_spin1(man, w) {
            if man.is_feasible(&z, 1e-10) {
                #[cfg(debug_assertions)]
                {
                    let generic = retract_projective_generic(man, w)?;
                    let diff = z
                        .iter()
                        .zip(&generic)
                        .map(|(a, b)| (a - b).abs())
                        .fold(0.0, f64::max);
                    debug_assert!(
                        diff < 1e-8,
                        "spin-1 fast path diverged from generic projection: {diff:.3e}"
                    );
                }
                return Ok(z);
            }
        }
        // fast path declined (domain quirk or accuracy); use the generic path
        return retract_projective_generic(man, w);
    }
    retract_projective_generic(man, w)
}

fn retract_projective_generic(man: &Manifold, w: &[f64]) -> Result<Vec<f64>> {
    let (_, sigmas) = projective_scalings(man, w)?;
    Ok(scale_blocks(man, w, &sigmas))
}

/// Closed-form spin-1 projection (cases (1)-(4); requires M >= 0).
/// Case (4) solves the quartic resolvent for beta and recovers
/// s = ||z_0|| from it; the three block scalings follow from s.
pub fn retract_projective_spin1(man: &Manifold, w: &[f64]) -> Result<Vec<f64>> {
    if man.f != 1 || man.mag < 0.0 {
        return Err(Error::Config("spin-1 fast path requires F = 1 and M >= 0".into()));
    }
    let prof = block_profile(man, w)?;
    let m = man.mag;
    let n1 = prof.s[0].sqrt() * prof.total.sqrt();
    let n0 = prof.s[1].sqrt() * prof.total.sqrt();
    let nm = prof.s[2].sqrt() * prof.total.sqrt();

    let sigmas = if m == 0.0 {
        // case (1)
        let t = (n0 * n0 + (n1 + nm) * (n1 + nm) / 2.0).sqrt();
        let s0 = if prof.zero[1] { 0.0 } else { 1.0 / t };
        let s1 = if prof.zero[0] { 0.0 } else { (n1 + nm) / (2.0 * t * n1) };
        let sm = if prof.zero[2] { 0.0 } else { (n1 + nm) / (2.0 * t * nm) };
        vec![s1, s0, sm]
    } else if prof.zero[1] {
        // case (2): w_0 = 0
        vec![
            ((1.0 + m) / 2.0).sqrt() / n1,
            0.0,
            ((1.0 - m) / 2.0).sqrt() / nm,
        ]
    } else if prof.zero[2] {
        // case (3): w_-1 = 0
        vec![m.sqrt() / n1, (1.0 - m).sqrt() / n0, 0.0]
    } else {
        // case (4): all blocks nonzero
        let xi = 2.0 * m.sqrt() * n0 / ((1.0 + m).sqrt() * nm);
        let zeta = (1.0 - m).sqrt() * n1 / ((1.0 + m).sqrt() * nm);
        let s = spin1_case4_s(m, xi, zeta)?;
        let a1 = ((1.0 + m - s * s).max(0.0) / 2.0).sqrt();
        let am = ((1.0 - m - s * s).max(0.0) / 2.0).sqrt();
        vec![a1 / n1, s / n0, am / nm]
    };
    if sigmas.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numerical("spin-1 fast path produced non-finite scaling".into()));
    }
    Ok(scale_blocks(man, w, &sigmas))
}

/// ||z_0|| for spin-1 case (4) via the quartic resolvent
/// beta^4 - 2 xi beta^3 + (xi^2 - zeta^2 + 1) beta^2 - 2 xi beta + xi^2 = 0.
/// The algebraic branch applies when xi^(2/3) + 1 >= zeta^(2/3) (the
/// discriminant is then nonnegative); otherwise the trigonometric branch.
fn spin1_case4_s(m: f64, xi: f64, zeta: f64) -> Result<f64> {
    let c = xi * xi - zeta * zeta + 1.0;
    let p0 = (-xi * xi - 2.0 * zeta * zeta + 2.0) / 2.0;
    let q0 = -xi * (zeta * zeta + 1.0);
    let d0 = c * c;
    let d1 = 2.0 * c * c * c + 108.0 * xi * xi * zeta * zeta;
    let s_res = if xi.powf(2.0 / 3.0) + 1.0 >= zeta.powf(2.0 / 3.0) {
        let disc = (d1 * d1 - 4.0 * d0 * d0 * d0).max(0.0);
        let q = ((d1 + disc.sqrt()) / 2.0).cbrt();
        0.5 * ((-2.0 / 3.0 * p0 + (q + d0 / q) / 3.0).max(0.0)).sqrt()
    } else {
        let ang = (d1 / (2.0 * (d0 * d0 * d0).sqrt())).clamp(-1.0, 1.0).acos();
        0.5 * ((-2.0 / 3.0 * p0 + 2.0 / 3.0 * d0.sqrt() * (ang / 3.0).cos()).max(0.0)).sqrt()
    };
    let rad = (-4.0 * s_res * s_res - 2.0 * p0 - q0 / s_res).max(0.0);
    let beta = xi / 2.0 + s_res - 0.5 * rad.sqrt();
    let s = ((1.0 - m * m).sqrt() * beta
        / (2.0 * m + (1.0 + m) * beta * beta).sqrt())
    .abs();
    if !s.is_finite() || s <= 0.0 || s * s >= 1.0 - m {
        return Err(Error::Numerical(format!(
            "resolvent gave s = {s:.6e} outside (0, sqrt(1-M))"
        )));
    }
    Ok(s)
}

/// Positive root r of h2 and the orthogonal-retraction scaling factors.
/// Exposed for oracle tests.
pub fn orthogonal_scalings(man: &Manifold, w: &[f64]) -> Result<(f64, Vec<f64>)> {
    let prof = block_profile(man, w)?;
    let m = man.mag;
    let ff = man.f as f64;
    // h2(t) = sum_{k=0}^{2F} (k - F - M) ||w_{k-F}||^2 t^k; block b = 2F - k
    let coeffs: Vec<f64> = (0..man.ncomp())
        .map(|k| {
            let b = man.ncomp() - 1 - k;
            (k as f64 - ff - m) * prof.s[b]
        })
        .collect();
    let eval = |t: f64| {
        let mut v = 0.0;
        let mut dv = 0.0;
        for &ck in coeffs.iter().rev() {
            dv = dv * t + v;
            v = v * t + ck;
        }
        (v, dv)
    };

    // bracket the single positive root: h2(0+) < 0, h2(+inf) > 0
    let mut lo = 1.0f64;
    let mut hi = 1.0f64;
    let mut guard = 0;
    while eval(lo).0 >= 0.0 {
        lo *= 0.5;
        guard += 1;
        if guard > 2000 {
            return Err(Error::RootSolve("no sign change while shrinking h2 bracket".into()));
        }
    }
    guard = 0;
    while eval(hi).0 <= 0.0 {
        hi *= 2.0;
        guard += 1;
        if guard > 2000 {
            return Err(Error::RootSolve("no sign change while growing h2 bracket".into()));
        }
    }
    let r = newton_bisect(eval, lo, hi, 0.5 * (lo + hi), ROOT_TOL)?;

    let mut denom = 0.0;
    for b in 0..man.ncomp() {
        if !prof.zero[b] {
            denom += prof.s[b] * r.powi(man.weight(b) as i32);
        }
    }
    let norm = (prof.total * denom).sqrt();
    let sigmas: Vec<f64> = (0..man.ncomp())
        .map(|b| {
            if prof.zero[b] {
                0.0
            } else {
                (r.powi(man.weight(b) as i32)).sqrt() / norm
            }
        })
        .collect();
    Ok((r, sigmas))
}

/// Orthogonal retraction: sigma_l = sqrt(r^l / sum_k ||w_k||^2 r^k).
pub fn retract_orthogonal(man: &Manifold, w: &[f64]) -> Result<Vec<f64>> {
    let (_, sigmas) = orthogonal_scalings(man, w)?;
    Ok(scale_blocks(man, w, &sigmas))
}

/// Closed-form retraction
/// sigma_l = sqrt[(w'G^2w - (M+l) w'Gw + M l w'w) / (w'w w'G^2w - (w'Gw)^2)];
/// errors with [`Error::StepTooLarge`] outside its domain S so that line
/// searches can shrink the step.
pub fn retract_closedform(man: &Manifold, w: &[f64]) -> Result<Vec<f64>> {
    let s = man.block_norms_sq(w);
    let mut c0 = 0.0; // w'w
    let mut c1 = 0.0; // w'Gw
    let mut c2 = 0.0; // w'G^2w
    for (b, &sb) in s.iter().enumerate() {
        let l = man.weight(b);
        c0 += sb;
        c1 += l * sb;
        c2 += l * l * sb;
    }
    let m = man.mag;
    let denom = c0 * c2 - c1 * c1;
    if !(denom > 0.0) {
        return Err(Error::StepTooLarge);
    }
    let ff = man.f as f64;
    for l in [ff, -ff] {
        if !(c2 - (m + l) * c1 + m * l * c0 > 0.0) {
            return Err(Error::StepTooLarge);
        }
    }
    let sigmas: Vec<f64> = (0..man.ncomp())
        .map(|b| {
            let l = man.weight(b);
            ((c2 - (m + l) * c1 + m * l * c0) / denom).sqrt()
        })
        .collect();
    Ok(scale_blocks(man, w, &sigmas))
}

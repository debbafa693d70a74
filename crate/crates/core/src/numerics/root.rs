use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RootConfig {
    /// Relative width at which the bracket is considered converged.
    pub rel_tol: f64,
    pub max_iter: usize,
    /// Growth factor used by [`expand_bracket`].
    pub expansion: f64,
}

impl Default for RootConfig {
    fn default() -> Self {
        RootConfig {
            rel_tol: 1e-10,
            max_iter: 200,
            expansion: 2.0,
        }
    }
}

impl RootConfig {
    fn validate(&self) -> Result<()> {
        if !(self.rel_tol > 0.0) {
            return Err(Error::invalid("rel_tol", "must be positive"));
        }
        if self.max_iter == 0 {
            return Err(Error::invalid("max_iter", "must be at least 1"));
        }
        if !(self.expansion > 1.0) {
            return Err(Error::invalid("expansion", "must exceed 1"));
        }
        Ok(())
    }
}

/// Brent's method on `[lo, hi]`: inverse quadratic / secant steps, falling
/// back to bisection whenever a step would leave the current bracket or
/// fails to shrink it fast enough. The returned abscissa always lies inside
/// the initial bracket.
pub fn find_root<F>(mut f: F, bracket: (f64, f64), cfg: &RootConfig) -> Result<f64>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let (lo, hi) = bracket;
    if !(lo.is_finite() && hi.is_finite()) {
        return Err(Error::invalid("bracket", "endpoints must be finite"));
    }
    let (mut a, mut b) = (lo, hi);
    let (mut fa, mut fb) = (f(a), f(b));
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if !(fa.is_finite() && fb.is_finite()) || fa.signum() == fb.signum() {
        return Err(Error::Bracket {
            lo,
            hi,
            f_lo: fa,
            f_hi: fb,
        });
    }

    let (mut c, mut fc) = (a, fa);
    let mut d = b - a;
    let mut e = d;
    for _ in 0..cfg.max_iter {
        if fb.signum() == fc.signum() {
            c = a;
            fc = fa;
            d = b - a;
            e = d;
        }
        if fc.abs() < fb.abs() {
            a = b;
            b = c;
            c = a;
            fa = fb;
            fb = fc;
            fc = fa;
        }
        let tol = 2.0 * f64::EPSILON * b.abs() + 0.5 * cfg.rel_tol * b.abs().max(f64::MIN_POSITIVE);
        let m = 0.5 * (c - b);
        if m.abs() <= tol || fb == 0.0 {
            return Ok(b);
        }
        if e.abs() >= tol && fa.abs() > fb.abs() {
            let s = fb / fa;
            let (mut p, mut q);
            if a == c {
                p = 2.0 * m * s;
                q = 1.0 - s;
            } else {
                let qa = fa / fc;
                let r = fb / fc;
                p = s * (2.0 * m * qa * (qa - r) - (b - a) * (r - 1.0));
                q = (qa - 1.0) * (r - 1.0) * (s - 1.0);
            }
            if p > 0.0 {
                q = -q;
            } else {
                p = -p;
            }
            if 2.0 * p < (3.0 * m * q - (tol * q).abs()).min((e * q).abs()) {
                e = d;
                d = p / q;
            } else {
                d = m;
                e = m;
            }
        } else {
            d = m;
            e = m;
        }
        a = b;
        fa = fb;
        b += if d.abs() > tol { d } else { tol.copysign(m) };
        fb = f(b);
        if !fb.is_finite() {
            return Err(Error::Convergence {
                what: "find_root (non-finite residual)",
                iterations: cfg.max_iter,
            });
        }
    }
    Err(Error::Convergence {
        what: "find_root",
        iterations: cfg.max_iter,
    })
}

/// Grows `hi` geometrically from `start` (keeping `lo` fixed) until
/// `f(lo)` and `f(hi)` differ in sign. Returns the bracket.
pub fn expand_bracket<F>(mut f: F, lo: f64, start: f64, cfg: &RootConfig) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> f64,
{
    cfg.validate()?;
    let f_lo = f(lo);
    let mut hi = start;
    for _ in 0..cfg.max_iter {
        let f_hi = f(hi);
        if f_hi == 0.0 || f_hi.signum() != f_lo.signum() {
            return Ok((lo, hi));
        }
        hi = lo + (hi - lo) * cfg.expansion;
        if !hi.is_finite() {
            break;
        }
    }
    Err(Error::Convergence {
        what: "expand_bracket",
        iterations: cfg.max_iter,
    })
}

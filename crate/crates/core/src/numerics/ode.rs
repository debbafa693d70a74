use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum StepControl {
    /// Classical RK4 with `steps` equal steps over the span.
    Fixed { steps: usize },
    /// Dormand-Prince 5(4) with mixed absolute/relative error control.
    Adaptive { rel_tol: f64, abs_tol: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeConfig {
    pub control: StepControl,
    /// State is clamped into `[lo, hi]` after every accepted step.
    pub clamp: (f64, f64),
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Trajectory {
    pub t: Vec<f64>,
    pub x: Vec<f64>,
}

impl Trajectory {
    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.t.last()?, *self.x.last()?))
    }
}

const MIN_STEP_FRACTION: f64 = 1e-14;

pub fn integrate_ode<F>(
    mut rate: F,
    x0: f64,
    span: (f64, f64),
    cfg: &OdeConfig,
) -> Result<Trajectory>
where
    F: FnMut(f64, f64) -> f64,
{
    let (t0, t1) = span;
    let (lo, hi) = cfg.clamp;
    if !(t0.is_finite() && t1.is_finite()) || t1 < t0 {
        return Err(Error::invalid("t_span", "requires finite t0 <= t1"));
    }
    if !(lo <= hi) || !(x0 >= lo && x0 <= hi) {
        return Err(Error::Domain {
            what: "x0",
            value: x0,
            lo,
            hi,
        });
    }
    let clamp = |x: f64| x.clamp(lo, hi);
    let mut out = Trajectory {
        t: vec![t0],
        x: vec![x0],
    };
    if t1 == t0 {
        return Ok(out);
    }

    match cfg.control {
        StepControl::Fixed { steps } => {
            if steps == 0 {
                return Err(Error::invalid("steps", "must be at least 1"));
            }
            let h = (t1 - t0) / steps as f64;
            out.t.reserve(steps);
            out.x.reserve(steps);
            let mut x = x0;
            for i in 0..steps {
                let t = t0 + i as f64 * h;
                let k1 = rate(t, x);
                let k2 = rate(t + 0.5 * h, clamp(x + 0.5 * h * k1));
                let k3 = rate(t + 0.5 * h, clamp(x + 0.5 * h * k2));
                let k4 = rate(t + h, clamp(x + h * k3));
                x = clamp(x + h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4));
                out.t.push(if i + 1 == steps {
                    t1
                } else {
                    t0 + (i + 1) as f64 * h
                });
                out.x.push(x);
            }
        }
        StepControl::Adaptive { rel_tol, abs_tol } => {
            if !(rel_tol > 0.0 && abs_tol > 0.0) {
                return Err(Error::invalid("tolerance", "must be positive"));
            }
            dopri5(&mut rate, x0, t0, t1, rel_tol, abs_tol, &clamp, &mut out)?;
        }
    }
    Ok(out)
}

// Dormand-Prince 5(4) tableau.
const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [
        19372.0 / 6561.0,
        -25360.0 / 2187.0,
        64448.0 / 6561.0,
        -212.0 / 729.0,
        0.0,
        0.0,
    ],
    [
        9017.0 / 3168.0,
        -355.0 / 33.0,
        46732.0 / 5247.0,
        49.0 / 176.0,
        -5103.0 / 18656.0,
        0.0,
    ],
    [
        35.0 / 384.0,
        0.0,
        500.0 / 1113.0,
        125.0 / 192.0,
        -2187.0 / 6784.0,
        11.0 / 84.0,
    ],
];
const B5: [f64; 7] = [
    35.0 / 384.0,
    0.0,
    500.0 / 1113.0,
    125.0 / 192.0,
    -2187.0 / 6784.0,
    11.0 / 84.0,
    0.0,
];
const B4: [f64; 7] = [
    5179.0 / 57600.0,
    0.0,
    7571.0 / 16695.0,
    393.0 / 640.0,
    -92097.0 / 339200.0,
    187.0 / 2100.0,
    1.0 / 40.0,
];

#[allow(clippy::too_many_arguments)]
fn dopri5<F, G>(
    rate: &mut F,
    x0: f64,
    t0: f64,
    t1: f64,
    rel_tol: f64,
    abs_tol: f64,
    clamp: &G,
    out: &mut Trajectory,
) -> Result<()>
where
    F: FnMut(f64, f64) -> f64,
    G: Fn(f64) -> f64,
{
    let span = t1 - t0;
    let h_min = span * MIN_STEP_FRACTION;
    let mut h = span / 100.0;
    let (mut t, mut x) = (t0, x0);
    while t < t1 {
        if t + h > t1 {
            h = t1 - t;
        }
        let mut k = [0.0; 7];
        for s in 0..7 {
            let inc: f64 = (0..s).map(|j| A[s][j] * k[j]).sum();
            k[s] = rate(t + C[s] * h, clamp(x + h * inc));
        }
        let x5 = x + h * B5.iter().zip(&k).map(|(b, k)| b * k).sum::<f64>();
        let x4 = x + h * B4.iter().zip(&k).map(|(b, k)| b * k).sum::<f64>();
        let scale = abs_tol + rel_tol * x.abs().max(x5.abs());
        let err = ((x5 - x4) / scale).abs();
        if err <= 1.0 {
            t = if t1 - (t + h) <= h_min { t1 } else { t + h };
            x = clamp(x5);
            out.t.push(t);
            out.x.push(x);
        }
        let factor = if !err.is_finite() {
            0.2
        } else if err == 0.0 {
            5.0
        } else {
            (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
        };
        h *= factor;
        if h < h_min && t < t1 {
            return Err(Error::Stiffness { t, step: h });
        }
    }
    Ok(())
}

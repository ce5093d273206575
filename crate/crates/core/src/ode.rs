//! Adaptive Dormand-Prince 5(4) integration for autonomous systems. Order
//! five with an embedded fourth-order error estimate and PI-free step
//! control; enough for the short, tightly-tolerated runs used here.

use crate::error::{Error, Result};
use crate::scalar::{real, Real};
use nalgebra::DVector;

#[derive(Clone, Copy, Debug)]
pub struct OdeOptions<F> {
    pub rtol: F,
    pub atol: F,
    /// Cap on the step size; defaults to the span.
    pub max_step: Option<F>,
}

impl<F: Real> Default for OdeOptions<F> {
    fn default() -> Self {
        OdeOptions {
            rtol: real(1e-10),
            atol: real(1e-12),
            max_step: None,
        }
    }
}

const STAGES: usize = 7;

/// Integrate `y' = rhs(y)` from `t = 0` to `t = span` (span may be
/// negative). The observer sees every accepted step `(t, y)` including the
/// final state and may abort by returning an error.
pub fn integrate<F, R, O>(rhs: R, y0: DVector<F>, span: F, opts: &OdeOptions<F>, mut observer: O) -> Result<DVector<F>>
where
    F: Real,
    R: Fn(&DVector<F>) -> Result<DVector<F>>,
    O: FnMut(F, &DVector<F>) -> Result<()>,
{
    if span == F::zero() {
        observer(F::zero(), &y0)?;
        return Ok(y0);
    }
    let a: [[f64; 6]; 6] = [
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
    // Difference between the fifth- and fourth-order weights.
    let err_w: [f64; STAGES] = [
        35.0 / 384.0 - 5179.0 / 57600.0,
        0.0,
        500.0 / 1113.0 - 7571.0 / 16695.0,
        125.0 / 192.0 - 393.0 / 640.0,
        -2187.0 / 6784.0 + 92097.0 / 339200.0,
        11.0 / 84.0 - 187.0 / 2100.0,
        -1.0 / 40.0,
    ];

    let dir = if span > F::zero() { F::one() } else { -F::one() };
    let total = span.abs();
    let max_step = opts.max_step.unwrap_or(total).abs().min(total);
    let mut h = max_step.min(total / real(16.0));
    let mut t = F::zero();
    let mut y = y0;
    let mut k: Vec<DVector<F>> = Vec::with_capacity(STAGES);
    let mut k0 = rhs(&y)?;
    observer(t, &y)?;

    let safety = real::<F>(0.9);
    let min_scale = real::<F>(0.2);
    let max_scale = real::<F>(5.0);
    let order_root = real::<F>(0.2); // 1/5

    loop {
        let remaining = total - t;
        if remaining <= F::zero() {
            return Ok(y);
        }
        h = h.min(remaining).min(max_step);
        if h < F::EPSILON * real::<F>(16.0) * F::one().max(t) {
            return Err(Error::StepSizeUnderflow {
                t: (t * dir).to_f64().unwrap_or(f64::NAN),
            });
        }
        let hd = h * dir;

        k.clear();
        k.push(k0.clone());
        let mut failed = false;
        for row in &a {
            let mut yi = y.clone();
            for (j, kj) in k.iter().enumerate() {
                let w = row[j];
                if w != 0.0 {
                    yi += kj * (hd * real::<F>(w));
                }
            }
            match rhs(&yi) {
                Ok(ki) => k.push(ki),
                Err(_) => {
                    // Stage left the domain; retry with a smaller step.
                    failed = true;
                    break;
                }
            }
        }
        if failed {
            h *= min_scale;
            continue;
        }

        // Fifth-order solution (row 6 of `a` holds its weights).
        let mut y_new = y.clone();
        for (j, kj) in k.iter().take(6).enumerate() {
            let w = a[5][j];
            if w != 0.0 {
                y_new += kj * (hd * real::<F>(w));
            }
        }
        let k_last = &k[6];

        let mut err_vec = DVector::zeros(y.len());
        for (j, kj) in k.iter().enumerate() {
            if err_w[j] != 0.0 {
                err_vec += kj * (hd * real::<F>(err_w[j]));
            }
        }
        let mut err_norm_sq = F::zero();
        for i in 0..y.len() {
            let scale = opts.atol + opts.rtol * y[i].abs().max(y_new[i].abs());
            let e = err_vec[i] / scale;
            err_norm_sq += e * e;
        }
        let err = nalgebra::ComplexField::sqrt(err_norm_sq / real::<F>(y.len() as f64));

        if err <= F::one() {
            t += h;
            y = y_new;
            k0 = k_last.clone();
            observer(t * dir, &y)?;
            let grow = if err == F::zero() {
                max_scale
            } else {
                (safety * nalgebra::ComplexField::powf(err, -order_root)).min(max_scale)
            };
            h *= grow.max(min_scale);
        } else {
            let shrink = (safety * nalgebra::ComplexField::powf(err, -order_root)).max(min_scale);
            h *= shrink;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        // y = (q, p), q' = p, p' = -q: period 2 pi.
        let rhs = |y: &DVector<f64>| Ok(DVector::from_column_slice(&[y[1], -y[0]]));
        let y0 = DVector::from_column_slice(&[1.0, 0.0]);
        let yf = integrate(
            rhs,
            y0.clone(),
            2.0 * std::f64::consts::PI,
            &OdeOptions::default(),
            |_, _| Ok(()),
        )
        .unwrap();
        assert!((yf - y0).norm() < 1e-8);
    }

    #[test]
    fn exponential_growth_matches_closed_form() {
        let rhs = |y: &DVector<f64>| Ok(y.clone());
        let y0 = DVector::from_column_slice(&[1.0]);
        let yf = integrate(rhs, y0, 1.0, &OdeOptions::default(), |_, _| Ok(())).unwrap();
        assert!((yf[0] - 1.0f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn negative_span_runs_backwards() {
        let rhs = |y: &DVector<f64>| Ok(y.clone());
        let y0 = DVector::from_column_slice(&[1.0]);
        let yf = integrate(rhs, y0, -1.0, &OdeOptions::default(), |_, _| Ok(())).unwrap();
        assert!((yf[0] - (-1.0f64).exp()).abs() < 1e-9);
    }

    #[test]
    fn observer_can_abort() {
        let rhs = |y: &DVector<f64>| Ok(y.clone());
        let y0 = DVector::from_column_slice(&[1.0]);
        let res = integrate(rhs, y0, 10.0, &OdeOptions::default(), |_, y: &DVector<f64>| {
            if y[0] > 5.0 {
                Err(Error::UnboundedOrbit {
                    norm: y[0],
                    radius: 5.0,
                })
            } else {
                Ok(())
            }
        });
        assert!(matches!(res, Err(Error::UnboundedOrbit { .. })));
    }
}

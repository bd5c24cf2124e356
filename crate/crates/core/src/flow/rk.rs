//! Dormand-Prince 5(4) embedded pair with adaptive steps, cubic-Hermite dense
//! output and a scalar stop event located on the dense output.

/// Outcome of an adaptive integration.
#[derive(Debug, Clone, PartialEq)]
pub enum StopReason {
    ReachedEnd,
    /// The event function crossed zero (going negative) at this time.
    Event(f64),
    /// Step size underflowed; integration aborted at this time.
    StepUnderflow(f64),
}

/// Accepted nodes of one trajectory plus derivatives, enough for cubic
/// Hermite interpolation anywhere in the covered range.
#[derive(Debug, Clone)]
pub struct DenseOutput {
    pub ts: Vec<f64>,
    pub ys: Vec<Vec<f64>>,
    pub dys: Vec<Vec<f64>>,
    pub stop: StopReason,
}

impl DenseOutput {
    pub fn t_end(&self) -> f64 {
        *self.ts.last().unwrap()
    }

    /// Cubic Hermite interpolation at t (clamped to the covered range).
    pub fn sample(&self, t: f64) -> Vec<f64> {
        let t = t.clamp(self.ts[0], self.t_end());
        let idx = match self.ts.binary_search_by(|x| x.partial_cmp(&t).unwrap()) {
            Ok(i) => return self.ys[i].clone(),
            Err(i) => i.clamp(1, self.ts.len() - 1),
        };
        let (t0, t1) = (self.ts[idx - 1], self.ts[idx]);
        let h = t1 - t0;
        let s = (t - t0) / h;
        let (y0, y1) = (&self.ys[idx - 1], &self.ys[idx]);
        let (d0, d1) = (&self.dys[idx - 1], &self.dys[idx]);
        let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
        let h10 = s * (1.0 - s) * (1.0 - s);
        let h01 = s * s * (3.0 - 2.0 * s);
        let h11 = s * s * (s - 1.0);
        (0..y0.len())
            .map(|i| h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i])
            .collect()
    }
}

const C: [f64; 7] = [0.0, 0.2, 0.3, 0.8, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [0.2, 0.0, 0.0, 0.0, 0.0, 0.0],
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

/// Integrate y' = f(t, y) from t0 to t_end (t_end > t0). When `event` is
/// given and turns negative, the crossing is located on the dense output and
/// integration stops there.
pub fn integrate<F, E>(
    f: F,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
    event: Option<E>,
) -> DenseOutput
where
    F: Fn(f64, &[f64], &mut [f64]),
    E: Fn(f64, &[f64]) -> f64,
{
    integrate_capped(f, y0, t0, t_end, rtol, atol, f64::INFINITY, event)
}

/// `integrate` with a maximum step size; bounded steps keep the dense output
/// sharp when downstream scans interpolate between nodes.
#[allow(clippy::too_many_arguments)]
pub fn integrate_capped<F, E>(
    f: F,
    y0: &[f64],
    t0: f64,
    t_end: f64,
    rtol: f64,
    atol: f64,
    max_step: f64,
    event: Option<E>,
) -> DenseOutput
where
    F: Fn(f64, &[f64], &mut [f64]),
    E: Fn(f64, &[f64]) -> f64,
{
    let n = y0.len();
    let mut t = t0;
    let mut y = y0.to_vec();
    let mut dy = vec![0.0; n];
    f(t, &y, &mut dy);

    let mut out = DenseOutput {
        ts: vec![t],
        ys: vec![y.clone()],
        dys: vec![dy.clone()],
        stop: StopReason::ReachedEnd,
    };
    let mut ev_prev = event.as_ref().map(|e| e(t, &y));

    let span = t_end - t0;
    let mut h = (span * 1e-2).clamp(1e-8, 0.1);
    let h_min = span.abs() * 1e-14 + 1e-15;

    let mut k = vec![vec![0.0; n]; 7];
    k[0].copy_from_slice(&dy);
    let mut y_stage = vec![0.0; n];
    let mut y5 = vec![0.0; n];
    let mut y4 = vec![0.0; n];

    while t < t_end {
        if h < h_min {
            out.stop = StopReason::StepUnderflow(t);
            break;
        }
        h = h.min(t_end - t).min(max_step);
        // stages (k[0] already holds f at (t, y): FSAL)
        for s in 1..7 {
            for i in 0..n {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                y_stage[i] = y[i] + h * acc;
            }
            let (ks_head, ks_tail) = k.split_at_mut(s);
            let _ = ks_head;
            f(t + C[s] * h, &y_stage, &mut ks_tail[0]);
        }
        let mut err = 0.0f64;
        for i in 0..n {
            let mut a5 = 0.0;
            let mut a4 = 0.0;
            for (j, kj) in k.iter().enumerate() {
                a5 += B5[j] * kj[i];
                a4 += B4[j] * kj[i];
            }
            y5[i] = y[i] + h * a5;
            y4[i] = y[i] + h * a4;
            let sc = atol + rtol * y[i].abs().max(y5[i].abs());
            let e = (y5[i] - y4[i]) / sc;
            err += e * e;
        }
        err = (err / n as f64).sqrt();

        if err <= 1.0 {
            // accept
            t += h;
            y.copy_from_slice(&y5);
            // FSAL: k[6] is f at the new point
            let knew = k[6].clone();
            k[0].copy_from_slice(&knew);
            out.ts.push(t);
            out.ys.push(y.clone());
            out.dys.push(knew);

            if let Some(e) = event.as_ref() {
                let ev = e(t, &y);
                if let Some(prev) = ev_prev {
                    if prev > 0.0 && ev <= 0.0 {
                        // locate on dense output
                        let t_lo = out.ts[out.ts.len() - 2];
                        let t_hit = crate::numerics::bisect(
                            |tt| e(tt, &out.sample(tt)),
                            t_lo,
                            t,
                            1e-13 * (1.0 + t.abs()),
                        );
                        let y_hit = out.sample(t_hit);
                        let mut dy_hit = vec![0.0; n];
                        f(t_hit, &y_hit, &mut dy_hit);
                        out.ts.pop();
                        out.ys.pop();
                        out.dys.pop();
                        out.ts.push(t_hit);
                        out.ys.push(y_hit);
                        out.dys.push(dy_hit);
                        out.stop = StopReason::Event(t_hit);
                        return out;
                    }
                }
                ev_prev = Some(ev);
            }
        }
        // step control
        let fac = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= fac;
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn harmonic_oscillator_period() {
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            0.0,
            std::f64::consts::TAU,
            1e-10,
            1e-12,
            None::<fn(f64, &[f64]) -> f64>,
        );
        assert_eq!(sol.stop, StopReason::ReachedEnd);
        let y = sol.sample(std::f64::consts::TAU);
        assert_abs_diff_eq!(y[0], 1.0, epsilon = 1e-8);
        assert_abs_diff_eq!(y[1], 0.0, epsilon = 1e-8);
    }

    #[test]
    fn dense_output_accuracy() {
        let sol = integrate(
            |_t, y, dy| {
                dy[0] = y[1];
                dy[1] = -y[0];
            },
            &[1.0, 0.0],
            0.0,
            3.0,
            1e-10,
            1e-12,
            None::<fn(f64, &[f64]) -> f64>,
        );
        for i in 0..30 {
            let t = 0.1 * i as f64;
            let y = sol.sample(t);
            assert_abs_diff_eq!(y[0], t.cos(), epsilon = 2e-6);
        }
    }

    #[test]
    fn event_located() {
        // y = t^2/2; event at y = 2 -> t = 2
        let sol = integrate(
            |t, _y, dy| {
                dy[0] = t;
            },
            &[0.0],
            0.0,
            10.0,
            1e-10,
            1e-12,
            Some(|_t: f64, y: &[f64]| 2.0 - y[0]),
        );
        match sol.stop {
            StopReason::Event(t) => assert_abs_diff_eq!(t, 2.0, epsilon = 1e-9),
            other => panic!("expected event, got {:?}", other),
        }
    }
}

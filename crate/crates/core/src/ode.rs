//! Adaptive Dormand–Prince 5(4) integrator for small fixed-size systems.

const C: [f64; 7] = [0.0, 1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
const A: [[f64; 6]; 7] = [
    [0.0; 6],
    [1.0 / 5.0, 0.0, 0.0, 0.0, 0.0, 0.0],
    [3.0 / 40.0, 9.0 / 40.0, 0.0, 0.0, 0.0, 0.0],
    [44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0, 0.0, 0.0, 0.0],
    [19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0, 0.0, 0.0],
    [9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0, 0.0],
    [35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
];
// difference between the 5th and embedded 4th order weights
const E: [f64; 7] = [
    71.0 / 57600.0,
    0.0,
    -71.0 / 16695.0,
    71.0 / 1920.0,
    -17253.0 / 339200.0,
    22.0 / 525.0,
    -1.0 / 40.0,
];

pub(crate) enum Stop {
    /// reached the end of the interval
    End,
    /// the step callback asked to stop
    Event,
    /// step size collapsed
    Stalled,
}

/// Integrates `y' = f(t, y)` from `t0` to `t_end`. After every accepted step
/// `on_step(t, y)` is called; returning `false` stops the integration.
pub(crate) fn integrate<const N: usize>(
    f: impl Fn(f64, &[f64; N]) -> [f64; N],
    t0: f64,
    y0: [f64; N],
    t_end: f64,
    tol: f64,
    mut on_step: impl FnMut(f64, &[f64; N]) -> bool,
) -> (Stop, f64, [f64; N]) {
    let mut t = t0;
    let mut y = y0;
    let mut h = (1e-3_f64).min(t_end - t0);
    let mut k = [[0.0; N]; 7];
    k[0] = f(t, &y);
    while t < t_end {
        if h < 1e-14 * t.abs().max(1.0) {
            return (Stop::Stalled, t, y);
        }
        h = h.min(t_end - t);
        for s in 1..7 {
            let mut ys = y;
            for (i, v) in ys.iter_mut().enumerate() {
                let mut acc = 0.0;
                for (j, kj) in k.iter().enumerate().take(s) {
                    acc += A[s][j] * kj[i];
                }
                *v += h * acc;
            }
            k[s] = f(t + C[s] * h, &ys);
        }
        let mut y_new = y;
        let mut err_sq = 0.0;
        for i in 0..N {
            let mut inc = 0.0;
            let mut err = 0.0;
            for s in 0..6 {
                inc += A[6][s] * k[s][i];
            }
            for s in 0..7 {
                err += E[s] * k[s][i];
            }
            y_new[i] = y[i] + h * inc;
            let scale = tol + tol * y[i].abs().max(y_new[i].abs());
            err_sq += (h * err / scale).powi(2);
        }
        let err = (err_sq / N as f64).sqrt();
        if err <= 1.0 {
            t += h;
            y = y_new;
            // first-same-as-last: the 7th stage is f at the new point
            k[0] = k[6];
            if !on_step(t, &y) {
                return (Stop::Event, t, y);
            }
        }
        let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
        h *= factor;
    }
    (Stop::End, t, y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_period() {
        let (_, t, y) = integrate(
            |_, y: &[f64; 2]| [y[1], -y[0]],
            0.0,
            [1.0, 0.0],
            2.0 * std::f64::consts::PI,
            1e-12,
            |_, _| true,
        );
        assert!((t - 2.0 * std::f64::consts::PI).abs() < 1e-12);
        assert!((y[0] - 1.0).abs() < 1e-9 && y[1].abs() < 1e-9);
    }

    #[test]
    fn exponential_growth() {
        let (_, _, y) = integrate(|_, y: &[f64; 1]| [y[0]], 0.0, [1.0], 3.0, 1e-12, |_, _| true);
        assert!((y[0] - 3.0_f64.exp()).abs() < 1e-9);
    }

    #[test]
    fn event_stops_integration() {
        let (stop, t, _) = integrate(|_, _: &[f64; 1]| [1.0], 0.0, [0.0], 10.0, 1e-10, |_, y| y[0] < 2.0);
        assert!(matches!(stop, Stop::Event));
        assert!((2.0..10.0).contains(&t));
    }
}

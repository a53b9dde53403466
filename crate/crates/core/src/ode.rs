//! Classical fixed-step fourth-order Runge-Kutta.

/// One RK4 step of `y' = f(t, y)` from `(t, y)` with step `h`.
///
/// The right-hand side may fail (e.g. leaving a chart); the error is passed
/// through unchanged.
pub fn rk4_step<F, E>(f: &mut F, t: f64, y: &[f64], h: f64) -> Result<Vec<f64>, E>
where
    F: FnMut(f64, &[f64]) -> Result<Vec<f64>, E>,
{
    let n = y.len();
    let k1 = f(t, y)?;
    let y2: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let k2 = f(t + 0.5 * h, &y2)?;
    let y3: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k2[i]).collect();
    let k3 = f(t + 0.5 * h, &y3)?;
    let y4: Vec<f64> = (0..n).map(|i| y[i] + h * k3[i]).collect();
    let k4 = f(t + h, &y4)?;
    Ok((0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect())
}

/// Allocation-free RK4 step for two-component systems.
#[inline]
pub fn rk4_step2<F>(f: &F, t: f64, y: [f64; 2], h: f64) -> [f64; 2]
where
    F: Fn(f64, [f64; 2]) -> [f64; 2],
{
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, [y[0] + 0.5 * h * k1[0], y[1] + 0.5 * h * k1[1]]);
    let k3 = f(t + 0.5 * h, [y[0] + 0.5 * h * k2[0], y[1] + 0.5 * h * k2[1]]);
    let k4 = f(t + h, [y[0] + h * k3[0], y[1] + h * k3[1]]);
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fourth_order_convergence_on_harmonic_oscillator() {
        let f = |_t: f64, y: [f64; 2]| [y[1], -y[0]];
        let err = |n: usize| {
            let h = 1.0 / n as f64;
            let mut y = [1.0, 0.0];
            for k in 0..n {
                y = rk4_step2(&f, k as f64 * h, y, h);
            }
            (y[0] - 1f64.cos()).abs()
        };
        let ratio = err(20) / err(40);
        assert!((ratio - 16.0).abs() < 1.0, "ratio {ratio}");
    }

    #[test]
    fn vector_step_propagates_errors() {
        let mut f = |t: f64, _y: &[f64]| if t > 0.4 { Err("out") } else { Ok(vec![1.0]) };
        assert_eq!(rk4_step(&mut f, 0.0, &[0.0], 0.5), Err("out"));
        assert!((rk4_step(&mut f, 0.0, &[0.0], 0.2).unwrap()[0] - 0.2).abs() < 1e-15);
    }
}

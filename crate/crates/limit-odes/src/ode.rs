//! Classical fixed-step fourth-order Runge-Kutta.

/// Advances `y` from `t` by `h`. The drift may fail (e.g. a stationary
/// solve); `k1` can be supplied when already evaluated at `(t, y)`.
pub fn rk4_step<E, F>(drift: &mut F, t: f64, y: &mut [f64], h: f64, k1: Option<Vec<f64>>) -> Result<(), E>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let n = y.len();
    let k1 = match k1 {
        Some(k) => k,
        None => {
            let mut k = vec![0.0; n];
            drift(t, y, &mut k)?;
            k
        }
    };
    let mut tmp = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k1[i];
    }
    drift(t + 0.5 * h, &tmp, &mut k2)?;
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    drift(t + 0.5 * h, &tmp, &mut k3)?;
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    drift(t + h, &tmp, &mut k4)?;
    for i in 0..n {
        y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
    }
    Ok(())
}

/// Integrates on the uniform grid `t_i = t0 + i h`, `i = 0..=steps`, and
/// returns the states at every grid point.
pub fn rk4<E, F>(mut drift: F, t0: f64, y0: &[f64], h: f64, steps: usize) -> Result<Vec<Vec<f64>>, E>
where
    F: FnMut(f64, &[f64], &mut [f64]) -> Result<(), E>,
{
    let mut y = y0.to_vec();
    let mut out = Vec::with_capacity(steps + 1);
    out.push(y.clone());
    for i in 0..steps {
        rk4_step(&mut drift, t0 + i as f64 * h, &mut y, h, None)?;
        out.push(y.clone());
    }
    Ok(out)
}

//! Fixed-step one-step integrators over fixed-size state arrays.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Method {
    /// Classical fourth-order Runge-Kutta.
    #[default]
    Rk4,
    /// Implicit trapezoidal rule solved by Newton iteration.
    Trapezoidal,
}

impl std::str::FromStr for Method {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "rk4" => Ok(Method::Rk4),
            "trapezoidal" | "trap" => Ok(Method::Trapezoidal),
            _ => Err(Error::Config(format!(
                "unknown integration method `{s}` (expected rk4 or trapezoidal)"
            ))),
        }
    }
}

#[inline]
fn axpy<const N: usize>(x: &[f64; N], a: f64, d: &[f64; N]) -> [f64; N] {
    std::array::from_fn(|i| x[i] + a * d[i])
}

/// One RK4 step of size `h` from `(t, x)`.
#[inline]
pub fn rk4_step<const N: usize, F>(f: &F, t: f64, x: &[f64; N], h: f64) -> [f64; N]
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let k1 = f(t, x);
    let k2 = f(t + 0.5 * h, &axpy(x, 0.5 * h, &k1));
    let k3 = f(t + 0.5 * h, &axpy(x, 0.5 * h, &k2));
    let k4 = f(t + h, &axpy(x, h, &k3));
    std::array::from_fn(|i| x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
}

/// One trapezoidal step: solves `y = x + h/2 (f(t, x) + f(t + h, y))`.
pub fn trapezoidal_step<const N: usize, F>(f: &F, t: f64, x: &[f64; N], h: f64) -> Result<[f64; N]>
where
    F: Fn(f64, &[f64; N]) -> [f64; N],
{
    let f0 = f(t, x);
    let t1 = t + h;
    let residual = |y: &[f64; N], fy: &[f64; N]| -> DVector<f64> {
        DVector::from_fn(N, |i, _| y[i] - x[i] - 0.5 * h * (f0[i] + fy[i]))
    };

    // Jacobian of the residual at the explicit predictor, by forward differences
    let mut y = axpy(x, h, &f0);
    let mut fy = f(t1, &y);
    let mut jac = DMatrix::<f64>::identity(N, N);
    for j in 0..N {
        let eps = 1e-7 * (1.0 + y[j].abs());
        let mut yp = y;
        yp[j] += eps;
        let fp = f(t1, &yp);
        for i in 0..N {
            jac[(i, j)] -= 0.5 * h * (fp[i] - fy[i]) / eps;
        }
    }
    let lu = jac.lu();

    for _ in 0..50 {
        let r = residual(&y, &fy);
        let dy = lu.solve(&r).ok_or(Error::Diverged {
            t: t1,
            norm: f64::NAN,
        })?;
        let mut step = 0.0f64;
        for i in 0..N {
            y[i] -= dy[i];
            step = step.max(dy[i].abs() / (1.0 + y[i].abs()));
        }
        fy = f(t1, &y);
        if !step.is_finite() {
            break;
        }
        if step < 1e-13 {
            return Ok(y);
        }
    }
    let norm = y.iter().map(|v| v * v).sum::<f64>().sqrt();
    Err(Error::Diverged { t: t1, norm })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn decay(_: f64, x: &[f64; 1]) -> [f64; 1] {
        [-x[0]]
    }

    fn run(method: Method, h: f64) -> f64 {
        let mut x = [1.0];
        let n = (1.0 / h).round() as usize;
        for k in 0..n {
            let t = k as f64 * h;
            x = match method {
                Method::Rk4 => rk4_step(&decay, t, &x, h),
                Method::Trapezoidal => trapezoidal_step(&decay, t, &x, h).unwrap(),
            };
        }
        (x[0] - (-1.0f64).exp()).abs()
    }

    #[test]
    fn observed_orders() {
        let r4 = run(Method::Rk4, 0.1) / run(Method::Rk4, 0.05);
        assert!((r4.log2() - 4.0).abs() < 0.2, "{r4}");
        let r2 = run(Method::Trapezoidal, 0.1) / run(Method::Trapezoidal, 0.05);
        assert!((r2.log2() - 2.0).abs() < 0.1, "{r2}");
    }

    #[test]
    fn rotation_keeps_radius() {
        let f = |_: f64, x: &[f64; 2]| [-x[1], x[0]];
        let mut x = [1.0, 0.0];
        for k in 0..1000 {
            x = trapezoidal_step(&f, k as f64 * 0.01, &x, 0.01).unwrap();
        }
        // the trapezoidal map of a rotation is orthogonal
        assert!(((x[0] * x[0] + x[1] * x[1]) - 1.0).abs() < 1e-10);
    }

    #[test]
    fn method_names() {
        assert_eq!("rk4".parse::<Method>().unwrap(), Method::Rk4);
        assert_eq!("Trapezoidal".parse::<Method>().unwrap(), Method::Trapezoidal);
        assert!("euler".parse::<Method>().is_err());
    }
}

//! Small numeric utilities: bracketing root finder, golden-section minimizer,
//! and finite-difference derivatives. These are used both as independent
//! cross-checks of closed-form expressions and for Jacobians of vector fields.

/// Golden-section search for a minimum of `f` on `[a, b]`.
///
/// Assumes `f` is unimodal on the bracket. Returns `(x_min, f(x_min))` with
/// the abscissa located to within `tol`.
pub fn golden_section_min<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> (f64, f64) {
    const INVPHI: f64 = 0.618_033_988_749_894_9;
    let (mut a, mut b) = (a, b);
    let mut c = b - INVPHI * (b - a);
    let mut d = a + INVPHI * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while (b - a).abs() > tol {
        if fc < fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INVPHI * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INVPHI * (b - a);
            fd = f(d);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Bisection for a sign change of `f` on `[a, b]`.
///
/// Panics if `f(a)` and `f(b)` have the same sign. Converges to `tol` in the
/// abscissa; exact zeros at an endpoint are returned immediately.
pub fn bisect_root<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, tol: f64) -> f64 {
    let (mut a, mut b) = (a, b);
    let (fa, fb) = (f(a), f(b));
    if fa == 0.0 {
        return a;
    }
    if fb == 0.0 {
        return b;
    }
    assert!(
        fa * fb < 0.0,
        "bisect_root: no sign change on [{a}, {b}] ({fa}, {fb})"
    );
    let mut fa = fa;
    while (b - a).abs() > tol {
        let m = 0.5 * (a + b);
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fa * fm < 0.0 {
            b = m;
        } else {
            a = m;
            fa = fm;
        }
    }
    0.5 * (a + b)
}

/// Fourth-order central difference for f'(x).
pub fn fd_derivative<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 8.0 * f(x + h) - 8.0 * f(x - h) + f(x - 2.0 * h)) / (12.0 * h)
}

/// Fourth-order central difference for f''(x).
pub fn fd_second<F: Fn(f64) -> f64>(f: F, x: f64, h: f64) -> f64 {
    (-f(x + 2.0 * h) + 16.0 * f(x + h) - 30.0 * f(x) + 16.0 * f(x - h) - f(x - 2.0 * h))
        / (12.0 * h * h)
}

/// Fourth-order finite-difference Jacobian of `f: R^n -> R^n`.
///
/// Step in coordinate `j` is `h_scale * max(1, |x_j|)`. `h_scale` around
/// 1e-4 balances truncation against round-off for smooth fields.
pub fn fd_jacobian<F: Fn(&[f64]) -> Vec<f64>>(f: F, x: &[f64], h_scale: f64) -> Vec<Vec<f64>> {
    let n = x.len();
    let mut jac = vec![vec![0.0; n]; n];
    let mut xp = x.to_vec();
    for j in 0..n {
        let h = h_scale * x[j].abs().max(1.0);
        let mut col = vec![0.0; n];
        for (c, w) in [(2.0, -1.0), (1.0, 8.0), (-1.0, -8.0), (-2.0, 1.0)] {
            xp[j] = x[j] + c * h;
            let fv = f(&xp);
            for i in 0..n {
                col[i] += w * fv[i];
            }
        }
        xp[j] = x[j];
        for i in 0..n {
            jac[i][j] = col[i] / (12.0 * h);
        }
    }
    jac
}

/// Directional derivative of `f` at `x` along `d`, fourth order.
pub fn fd_directional<F: Fn(&[f64]) -> f64>(f: F, x: &[f64], d: &[f64], h: f64) -> f64 {
    let eval = |s: f64| {
        let xs: Vec<f64> = x.iter().zip(d).map(|(xi, di)| xi + s * di).collect();
        f(&xs)
    };
    fd_derivative(eval, 0.0, h)
}

//! Explicit one-step integrators on fixed-size real states.

/// Dormand-Prince 5(4) tableau; the system is autonomous so the nodes are unused.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// fifth-order weights minus embedded fourth-order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

fn axpy<const N: usize>(y: &[f64; N], terms: &[(f64, &[f64; N])]) -> [f64; N] {
    let mut out = *y;
    for (c, k) in terms {
        for i in 0..N {
            out[i] += c * k[i];
        }
    }
    out
}

/// Accepted steps of an adaptive integration.
pub(crate) struct Path<const N: usize> {
    pub t: Vec<f64>,
    pub y: Vec<[f64; N]>,
    pub dy: Vec<[f64; N]>,
    pub escaped: bool,
    pub stalled: bool,
}

/// Integrates `y' = f(y)` from `t = 0` to `t_end` with mixed tolerance
/// `tol (1 + |y|)` per component. Stops early when `inside(y)` turns false.
pub(crate) fn dopri45<const N: usize, F, G>(f: F, y0: [f64; N], t_end: f64, tol: f64, inside: G) -> Path<N>
where
    F: Fn(&[f64; N]) -> [f64; N],
    G: Fn(&[f64; N]) -> bool,
{
    let mut path = Path {
        t: vec![0.0],
        y: vec![y0],
        dy: vec![f(&y0)],
        escaped: false,
        stalled: false,
    };
    if t_end <= 0.0 {
        return path;
    }
    let mut t = 0.0;
    let mut y = y0;
    let mut k1 = path.dy[0];
    let scale0: f64 = k1.iter().map(|v| v.abs()).fold(0.0, f64::max);
    let mut h = if scale0 > 0.0 {
        (0.01 * (1.0 + y.iter().map(|v| v.abs()).fold(0.0, f64::max)) / scale0).min(t_end)
    } else {
        t_end
    };
    let h_min = 1e-14 * t_end.max(1.0);
    while t < t_end {
        h = h.min(t_end - t);
        let k2 = f(&axpy(&y, &[(h * A21, &k1)]));
        let k3 = f(&axpy(&y, &[(h * A31, &k1), (h * A32, &k2)]));
        let k4 = f(&axpy(&y, &[(h * A41, &k1), (h * A42, &k2), (h * A43, &k3)]));
        let k5 = f(&axpy(&y, &[(h * A51, &k1), (h * A52, &k2), (h * A53, &k3), (h * A54, &k4)]));
        let k6 = f(&axpy(
            &y,
            &[(h * A61, &k1), (h * A62, &k2), (h * A63, &k3), (h * A64, &k4), (h * A65, &k5)],
        ));
        let y_new = axpy(&y, &[(h * B1, &k1), (h * B3, &k3), (h * B4, &k4), (h * B5, &k5), (h * B6, &k6)]);
        let k7 = f(&y_new);
        let mut err: f64 = 0.0;
        for i in 0..N {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let sc = tol * (1.0 + y[i].abs().max(y_new[i].abs()));
            err = err.max((e / sc).abs());
        }
        if !err.is_finite() {
            h *= 0.1;
        } else if err <= 1.0 {
            t += h;
            y = y_new;
            k1 = k7;
            path.t.push(t);
            path.y.push(y);
            path.dy.push(k7);
            if !inside(&y) {
                path.escaped = true;
                return path;
            }
            h *= (0.9 * err.powf(-0.2)).clamp(0.2, 5.0);
        } else {
            h *= (0.9 * err.powf(-0.2)).clamp(0.1, 1.0);
        }
        if h < h_min {
            path.stalled = true;
            return path;
        }
    }
    path
}

/// Cubic Hermite interpolation between two accepted steps.
pub(crate) fn hermite<const N: usize>(
    t0: f64,
    y0: &[f64; N],
    d0: &[f64; N],
    t1: f64,
    y1: &[f64; N],
    d1: &[f64; N],
    t: f64,
) -> [f64; N] {
    let h = t1 - t0;
    if h == 0.0 {
        return *y0;
    }
    let s = (t - t0) / h;
    let h00 = (1.0 + 2.0 * s) * (1.0 - s) * (1.0 - s);
    let h10 = s * (1.0 - s) * (1.0 - s);
    let h01 = s * s * (3.0 - 2.0 * s);
    let h11 = s * s * (s - 1.0);
    let mut out = [0.0; N];
    for i in 0..N {
        out[i] = h00 * y0[i] + h10 * h * d0[i] + h01 * y1[i] + h11 * h * d1[i];
    }
    out
}

/// Classical RK4 with `steps` equal steps over `[0, t_end]`.
pub(crate) fn rk4<const N: usize, F>(f: F, y0: [f64; N], t_end: f64, steps: usize) -> [f64; N]
where
    F: Fn(&[f64; N]) -> [f64; N],
{
    let h = t_end / steps as f64;
    let mut y = y0;
    for _ in 0..steps {
        let k1 = f(&y);
        let k2 = f(&axpy(&y, &[(0.5 * h, &k1)]));
        let k3 = f(&axpy(&y, &[(0.5 * h, &k2)]));
        let k4 = f(&axpy(&y, &[(h, &k3)]));
        y = axpy(&y, &[(h / 6.0, &k1), (h / 3.0, &k2), (h / 3.0, &k3), (h / 6.0, &k4)]);
    }
    y
}

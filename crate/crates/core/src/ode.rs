//! Classical fourth-order Runge–Kutta for planar systems `y′ = F(t, y)`.

/// One RK4 step of size `h`.
pub fn rk4_step<F: Fn(f64, [f64; 2]) -> [f64; 2]>(f: &F, t: f64, y: [f64; 2], h: f64) -> [f64; 2] {
    let add = |y: [f64; 2], k: [f64; 2], s: f64| [y[0] + s * k[0], y[1] + s * k[1]];
    let k1 = f(t, y);
    let k2 = f(t + 0.5 * h, add(y, k1, 0.5 * h));
    let k3 = f(t + 0.5 * h, add(y, k2, 0.5 * h));
    let k4 = f(t + h, add(y, k3, h));
    [
        y[0] + h / 6.0 * (k1[0] + 2.0 * k2[0] + 2.0 * k3[0] + k4[0]),
        y[1] + h / 6.0 * (k1[1] + 2.0 * k2[1] + 2.0 * k3[1] + k4[1]),
    ]
}

/// Step count and exact step size covering `[a, b]` with steps at most `h`.
pub fn partition(a: f64, b: f64, h: f64) -> (usize, f64) {
    let steps = ((b - a) / h).ceil().max(1.0) as usize;
    (steps, (b - a) / steps as f64)
}

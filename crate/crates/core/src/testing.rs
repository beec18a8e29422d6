//! Reference implementations used as independent oracles in unit tests.

use crate::linalg::matrix::{axpy, dot, sub_vec, Matrix};

/// Textbook conjugate gradients; returns `x_0, …, x_m` and the steps `x_j − x_{j−1}`.
pub fn textbook_cg(a: &Matrix, b: &[f64], x0: &[f64], m: usize) -> (Vec<Vec<f64>>, Vec<Vec<f64>>) {
    let mut x = x0.to_vec();
    let mut r = sub_vec(b, &a.matvec(&x));
    let mut p = r.clone();
    let mut rr = dot(&r, &r);
    let mut xs = vec![x.clone()];
    let mut steps = Vec::new();
    for _ in 0..m {
        if rr == 0.0 {
            break;
        }
        let ap = a.matvec(&p);
        let alpha = rr / dot(&p, &ap);
        let step: Vec<f64> = p.iter().map(|v| alpha * v).collect();
        axpy(1.0, &step, &mut x);
        axpy(-alpha, &ap, &mut r);
        let rr_new = dot(&r, &r);
        let beta = rr_new / rr;
        rr = rr_new;
        p = r.iter().zip(&p).map(|(ri, pi)| ri + beta * pi).collect();
        xs.push(x.clone());
        steps.push(step);
    }
    (xs, steps)
}

/// Relative gap `‖u − v‖∞ / max(‖v‖∞, tiny)`.
pub fn rel_gap(u: &[f64], v: &[f64]) -> f64 {
    let scale = crate::linalg::matrix::max_abs(v).max(f64::MIN_POSITIVE);
    crate::linalg::matrix::max_abs_diff(u, v) / scale
}

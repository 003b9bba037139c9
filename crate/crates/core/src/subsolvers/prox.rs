use crate::problem::Vector;

/// Soft-thresholding `sgn(v)·max(|v| − t, 0)`.
#[inline]
pub fn soft_threshold(v: f64, t: f64) -> f64 {
    if v > t {
        v - t
    } else if v < -t {
        v + t
    } else {
        0.0
    }
}

/// `prox_{t‖·‖₁}(v)`, componentwise soft-thresholding.
pub fn prox_l1(v: &Vector, t: f64) -> Vector {
    debug_assert!(t >= 0.0);
    v.map(|vi| soft_threshold(vi, t))
}

/// Huber function, the Moreau envelope of `t|·|`.
#[inline]
pub fn huber(v: f64, t: f64) -> f64 {
    let a = v.abs();
    if a <= t {
        0.5 * v * v
    } else {
        t * a - 0.5 * t * t
    }
}

/// Moreau envelope of `t‖·‖₁` at `v`: `min_y t‖y‖₁ + ½‖y − v‖²`.
pub fn moreau_env_l1(v: &Vector, t: f64) -> f64 {
    debug_assert!(t >= 0.0);
    v.iter().map(|&vi| huber(vi, t)).sum()
}

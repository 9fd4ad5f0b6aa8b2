use crate::linalg::{norm2, Matrix};
use crate::scalar::Scalar;

/// Scales every row `g` to `g·min(1, c/‖g‖₂)`; rows already inside the ball are untouched.
pub fn clip_rows<T: Scalar>(g: &Matrix<T>, c: T) -> Matrix<T> {
    let mut out = g.clone();
    for i in 0..out.rows() {
        clip_in_place(out.row_mut(i), c);
    }
    out
}

/// Clips one vector to norm `c`; returns the scale factor applied.
pub fn clip_in_place<T: Scalar>(v: &mut [T], c: T) -> T {
    let n = norm2(v);
    if n > c {
        let s = c / n;
        v.iter_mut().for_each(|x| *x *= s);
        s
    } else {
        T::one()
    }
}

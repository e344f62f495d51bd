//! Log-domain modified Bessel function of the first kind, order zero.
//!
//! `I0` itself overflows f64 near `x = 713`, but the Ricean log-likelihood
//! only needs `ln I0`, which grows like `x`. Polynomial approximations from
//! Abramowitz & Stegun 9.8.1/9.8.2, relative error below 2e-7 — far inside
//! what AIC comparisons over 1e5-point samples can resolve.

/// Natural log of the modified Bessel function I0.
pub fn ln_i0(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 3.75 {
        let t = (ax / 3.75) * (ax / 3.75);
        let p = 1.0
            + t * (3.5156229
                + t * (3.0899424
                    + t * (1.2067492 + t * (0.2659732 + t * (0.0360768 + t * 0.0045813)))));
        p.ln()
    } else {
        let t = 3.75 / ax;
        let p = 0.39894228
            + t * (0.01328592
                + t * (0.00225319
                    + t * (-0.00157565
                        + t * (0.00916281
                            + t * (-0.02057706
                                + t * (0.02635537 + t * (-0.01647633 + t * 0.00392377)))))));
        ax - 0.5 * ax.ln() + p.ln()
    }
}

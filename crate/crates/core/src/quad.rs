//! Composite Simpson quadrature.
//!
//! Used as the independent oracle when cross-checking grid-transform inner
//! products against direct integrals; O(h⁴) for C⁴ integrands.

/// Integrate `f` over `[a, b]` with `n` subintervals. `n` must be even and ≥ 2.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, n: usize) -> f64 {
    assert!(n >= 2 && n % 2 == 0, "simpson needs an even subinterval count");
    let h = (b - a) / n as f64;
    let mut acc = f(a) + f(b);
    for j in 1..n {
        let w = if j % 2 == 1 { 4.0 } else { 2.0 };
        acc += w * f(a + j as f64 * h);
    }
    acc * h / 3.0
}

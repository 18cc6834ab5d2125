//! Adaptive Simpson quadrature.

const MAX_DEPTH: u32 = 60;

const PANELS: usize = 64;

/// Integrates `f` over `[a, b]` to roughly `tol` absolute error. The range is
/// first cut into equal panels so that a narrow peak is not missed.
pub fn adaptive_simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    let h = (b - a) / PANELS as f64;
    let panel_tol = tol / PANELS as f64;
    let mut total = 0.0;
    let mut lo = a;
    let mut flo = f(a);
    for i in 1..=PANELS {
        let hi = if i == PANELS { b } else { a + h * i as f64 };
        let fhi = f(hi);
        let fm = f(0.5 * (lo + hi));
        let whole = (hi - lo) / 6.0 * (flo + 4.0 * fm + fhi);
        total += refine(&f, lo, hi, flo, fm, fhi, whole, panel_tol, MAX_DEPTH);
        lo = hi;
        flo = fhi;
    }
    total
}

#[allow(clippy::too_many_arguments)]
fn refine(
    f: &impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    refine(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + refine(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

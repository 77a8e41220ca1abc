//! One-dimensional search: golden-section minimization behind a grid
//! pre-scan, and bisection on sign changes.

use crate::error::{Error, Result};

/// Grid size used to pick the golden-section bracket.
pub const PRESCAN_POINTS: usize = 64;

const INV_PHI: f64 = 0.618_033_988_749_894_9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Minimum {
    pub x: f64,
    pub value: f64,
    /// The pre-scan saw more than one local minimum.
    pub multimodal: bool,
}

/// Golden-section search for the minimum of a unimodal `f` on `[lo, hi]`,
/// stopping when the bracket is narrower than `tol`.
pub fn golden_section<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo.min(hi), lo.max(hi));
    let mut c = b - INV_PHI * (b - a);
    let mut d = a + INV_PHI * (b - a);
    let mut fc = finite_or_inf(f(c)?);
    let mut fd = finite_or_inf(f(d)?);
    while b - a > tol {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - INV_PHI * (b - a);
            fc = finite_or_inf(f(c)?);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + INV_PHI * (b - a);
            fd = finite_or_inf(f(d)?);
        }
    }
    let x = 0.5 * (a + b);
    let value = f(x)?;
    Ok(Minimum { x, value, multimodal: false })
}

fn finite_or_inf(v: f64) -> f64 {
    if v.is_nan() {
        f64::INFINITY
    } else {
        v
    }
}

/// Evenly spaced grid including both endpoints.
pub fn linspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![lo],
        n => (0..n)
            .map(|i| {
                if i == n - 1 {
                    hi
                } else {
                    lo + (hi - lo) * i as f64 / (n - 1) as f64
                }
            })
            .collect(),
    }
}

/// Geometrically spaced grid including both endpoints; `0 < lo < hi`.
pub fn geomspace(lo: f64, hi: f64, points: usize) -> Vec<f64> {
    let mut xs: Vec<f64> = linspace(lo.ln(), hi.ln(), points).into_iter().map(f64::exp).collect();
    if let Some(first) = xs.first_mut() {
        *first = lo;
    }
    if let Some(last) = xs.last_mut() {
        *last = hi;
    }
    xs
}

/// Minimizes `f` on `[lo, hi]`: a [`PRESCAN_POINTS`] grid picks the bracket
/// around the best grid point, golden-section refines it. Endpoints must give
/// finite values. A warning is logged when the grid shows several local minima.
pub fn scan_minimize<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_bracket(lo, hi)?;
    scan_minimize_on(f, &linspace(lo, hi, PRESCAN_POINTS), tol)
}

/// [`scan_minimize`] with a geometric pre-scan grid, for brackets spanning
/// orders of magnitude.
pub fn scan_minimize_geometric<F>(f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    check_bracket(lo, hi)?;
    if lo <= 0.0 {
        return Err(Error::invalid("bracket", format!("geometric grid needs lo > 0, got {lo}")));
    }
    scan_minimize_on(f, &geomspace(lo, hi, PRESCAN_POINTS), tol)
}

fn check_bracket(lo: f64, hi: f64) -> Result<()> {
    if !(lo.is_finite() && hi.is_finite()) || hi <= lo {
        return Err(Error::invalid("bracket", format!("[{lo}, {hi}] is empty or not finite")));
    }
    Ok(())
}

/// Grid pre-scan over the sorted `xs`, then golden-section between the
/// neighbours of the best grid point.
pub fn scan_minimize_on<F>(mut f: F, xs: &[f64], tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    if xs.len() < 2 {
        return Err(Error::invalid("grid", "need at least two points"));
    }
    let mut ys = Vec::with_capacity(xs.len());
    for &x in xs {
        ys.push(f(x)?);
    }
    for (&x, &y) in [(&xs[0], &ys[0]), (&xs[xs.len() - 1], &ys[ys.len() - 1])] {
        if !y.is_finite() {
            return Err(Error::NonFinite { at: x });
        }
    }
    let ys: Vec<f64> = ys.into_iter().map(finite_or_inf).collect();
    let best = ys
        .iter()
        .enumerate()
        .min_by(|a, b| a.1.total_cmp(b.1))
        .map(|(i, _)| i)
        .expect("non-empty grid");
    let local_minima = (0..ys.len())
        .filter(|&i| {
            let left = i == 0 || ys[i] < ys[i - 1];
            let right = i == ys.len() - 1 || ys[i] < ys[i + 1];
            left && right
        })
        .count();
    let multimodal = local_minima > 1;
    if multimodal {
        log::warn!(
            "grid pre-scan on [{}, {}] found {local_minima} local minima; refining the lowest",
            xs[0],
            xs[xs.len() - 1]
        );
    }
    let a = xs[best.saturating_sub(1)];
    let b = xs[(best + 1).min(xs.len() - 1)];
    let refined = golden_section(&mut f, a, b, tol)?;
    let out = if refined.value <= ys[best] {
        refined
    } else {
        Minimum { x: xs[best], value: ys[best], multimodal: false }
    };
    Ok(Minimum { multimodal, ..out })
}

/// Maximizes `f` on `[lo, hi]` via [`scan_minimize`] on `-f`.
pub fn scan_maximize<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<Minimum>
where
    F: FnMut(f64) -> Result<f64>,
{
    let m = scan_minimize(|x| f(x).map(|v| -v), lo, hi, tol)?;
    Ok(Minimum { value: -m.value, ..m })
}

/// Bisection for a sign change of `f` on `[lo, hi]`. Returns the final
/// bracket `(a, b)` with `f(a)` and `f(b)` of opposite sign (or zero) and
/// `b - a <= tol`.
pub fn bisect<F>(mut f: F, lo: f64, hi: f64, tol: f64) -> Result<(f64, f64)>
where
    F: FnMut(f64) -> Result<f64>,
{
    let (mut a, mut b) = (lo, hi);
    let fa = f(a)?;
    let fb = f(b)?;
    if !(fa.is_finite() && fb.is_finite()) {
        return Err(Error::NonFinite { at: if fa.is_finite() { b } else { a } });
    }
    if fa.signum() == fb.signum() && fa != 0.0 && fb != 0.0 {
        return Err(Error::invalid("bracket", format!("no sign change on [{lo}, {hi}]")));
    }
    let a_negative = fa < 0.0;
    for _ in 0..200 {
        if (b - a).abs() <= tol {
            break;
        }
        let mid = 0.5 * (a + b);
        let fm = f(mid)?;
        if fm == 0.0 {
            return Ok((mid, mid));
        }
        if (fm < 0.0) == a_negative {
            a = mid;
        } else {
            b = mid;
        }
    }
    Ok((a, b))
}

/// All sign changes of `f` on a `points` grid over `[lo, hi]`, each refined by
/// [`bisect`] to `tol`. Returns the bracket midpoints in increasing order.
pub fn sign_changes<F>(mut f: F, lo: f64, hi: f64, points: usize, tol: f64) -> Result<Vec<f64>>
where
    F: FnMut(f64) -> Result<f64>,
{
    let xs = linspace(lo, hi, points);
    let mut ys = Vec::with_capacity(xs.len());
    for &x in &xs {
        ys.push(f(x)?);
    }
    let mut roots = Vec::new();
    for i in 0..xs.len().saturating_sub(1) {
        let (a, b) = (ys[i], ys[i + 1]);
        if a == 0.0 {
            roots.push(xs[i]);
        } else if a.signum() != b.signum() && b != 0.0 {
            let (l, r) = bisect(&mut f, xs[i], xs[i + 1], tol)?;
            roots.push(0.5 * (l + r));
        }
    }
    if ys.last() == Some(&0.0) {
        roots.push(hi);
    }
    Ok(roots)
}

//! One-dimensional maximisation without unimodality assumptions.

/// Result of [`maximize_scalar`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalarMax {
    pub argmax: f64,
    pub value: f64,
    /// Which end of the search interval the maximiser sits on, if any.
    pub boundary: Boundary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    Lower,
    Upper,
    Interior,
}

/// Golden-section iterations after the coarse scan.
pub const GOLDEN_ITERATIONS: usize = 60;
/// Points in the coarse pre-scan.
pub const PRESCAN_POINTS: usize = 64;

/// Maximises `f` over `[lo, hi]` on a logarithmic scale.
///
/// A coarse scan of [`PRESCAN_POINTS`] log-spaced points locates the best
/// cell; golden-section search then refines inside its two neighbouring
/// cells. Both endpoints are always evaluated, so the result is never worse
/// than either. `f` returning NaN is treated as `-inf`.
pub fn maximize_log_scale(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> ScalarMax {
    assert!(lo > 0.0 && hi >= lo, "log-scale search needs 0 < lo <= hi");
    let g = |u: f64| {
        let v = f(u.exp());
        if v.is_nan() {
            f64::NEG_INFINITY
        } else {
            v
        }
    };
    let r = maximize_scalar(g, lo.ln(), hi.ln());
    let argmax = match r.boundary {
        Boundary::Lower => lo,
        Boundary::Upper => hi,
        Boundary::Interior => r.argmax.exp(),
    };
    ScalarMax { argmax, ..r }
}

/// Linear-scale version of [`maximize_log_scale`].
pub fn maximize_scalar(f: impl Fn(f64) -> f64, lo: f64, hi: f64) -> ScalarMax {
    if hi == lo {
        return ScalarMax { argmax: lo, value: f(lo), boundary: Boundary::Lower };
    }
    let n = PRESCAN_POINTS;
    let step = (hi - lo) / (n - 1) as f64;
    let grid: Vec<f64> = (0..n).map(|i| if i + 1 == n { hi } else { lo + step * i as f64 }).collect();
    let values: Vec<f64> = grid.iter().map(|&x| f(x)).collect();
    let best = values
        .iter()
        .enumerate()
        .fold(0, |b, (i, v)| if *v > values[b] { i } else { b });

    let mut a = grid[best.saturating_sub(1)];
    let mut b = grid[(best + 1).min(n - 1)];
    let inv_phi = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - inv_phi * (b - a);
    let mut d = a + inv_phi * (b - a);
    let mut fc = f(c);
    let mut fd = f(d);
    for _ in 0..GOLDEN_ITERATIONS {
        if fc >= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - inv_phi * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + inv_phi * (b - a);
            fd = f(d);
        }
    }
    let (mut argmax, mut value, mut boundary) =
        if fc >= fd { (c, fc, Boundary::Interior) } else { (d, fd, Boundary::Interior) };
    if values[best] > value {
        argmax = grid[best];
        value = values[best];
    }
    if values[0] >= value {
        argmax = lo;
        value = values[0];
        boundary = Boundary::Lower;
    }
    if values[n - 1] > value {
        argmax = hi;
        value = values[n - 1];
        boundary = Boundary::Upper;
    }
    if boundary == Boundary::Interior && argmax == lo {
        boundary = Boundary::Lower;
    } else if boundary == Boundary::Interior && argmax == hi {
        boundary = Boundary::Upper;
    }
    ScalarMax { argmax, value, boundary }
}

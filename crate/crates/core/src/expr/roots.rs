//! Scan-and-refine zero finding for real functions on an interval.

/// Absolute accuracy of refined zeros.
pub const ZERO_TOL: f64 = 1e-12;
/// Magnitude below which a scan point counts as vanishing.
pub const NEAR_ZERO: f64 = 1e-14;
/// Zeros closer than this are reported once.
const MERGE_TOL: f64 = 1e-9;
/// Golden-section search locates a touching zero only to about `√ε`.
const TOUCH_RADIUS: f64 = 1e-7;

#[derive(Clone, Debug, Default, PartialEq)]
pub struct ZeroScan {
    /// Sorted, duplicate-free zeros.
    pub zeros: Vec<f64>,
    /// Number of scan points evaluated (excluded neighbourhoods not counted).
    pub samples: usize,
    /// Scan points with `|f| < 1e-14`.
    pub vanishing: usize,
}

impl ZeroScan {
    pub fn vanishing_fraction(&self) -> f64 {
        if self.samples == 0 {
            0.0
        } else {
            self.vanishing as f64 / self.samples as f64
        }
    }
}

/// Finds the zeros of `f` on `[lo, hi]`.
///
/// Scans at step `resolution`, refines sign changes by bisection and
/// touching zeros (local minima of `|f|` without a sign change) by golden
/// section. Scan points within one step of an entry of `exclude` are skipped,
/// as are points where `f` is not finite; a sign change across a pole is
/// rejected because `|f|` does not shrink under refinement.
pub fn find_zeros(f: impl Fn(f64) -> f64, lo: f64, hi: f64, resolution: f64, exclude: &[f64]) -> ZeroScan {
    assert!(hi >= lo && resolution > 0.0, "invalid scan range");
    let cells = ((hi - lo) / resolution).ceil().max(1.0) as usize;
    let step = (hi - lo) / cells as f64;
    let points: Vec<f64> = (0..=cells).map(|i| lo + step * i as f64).collect();
    let values: Vec<f64> = points
        .iter()
        .map(|&p| {
            if exclude.iter().any(|&z| (p - z).abs() <= step) {
                f64::NAN
            } else {
                f(p)
            }
        })
        .collect();

    let mut scan = ZeroScan::default();
    let mut zeros = Vec::new();
    for (i, &v) in values.iter().enumerate() {
        if !v.is_finite() {
            continue;
        }
        scan.samples += 1;
        if v.abs() < NEAR_ZERO {
            scan.vanishing += 1;
        }
        if v == 0.0 {
            zeros.push(points[i]);
            continue;
        }
        if let Some(&w) = values.get(i + 1) {
            if w.is_finite() && w != 0.0 && v.signum() != w.signum() {
                let z = snap(&f, bisect(&f, points[i], points[i + 1], v), ZERO_TOL);
                if f(z).abs() <= v.abs().min(w.abs()) {
                    zeros.push(z);
                }
                continue;
            }
        }
        if i > 0 && i + 1 < values.len() {
            let (u, w) = (values[i - 1], values[i + 1]);
            let touching = u.is_finite()
                && w.is_finite()
                && u.signum() == v.signum()
                && w.signum() == v.signum()
                && v.abs() <= u.abs()
                && v.abs() <= w.abs();
            if touching {
                let z = golden_min(|p| f(p).abs(), points[i - 1], points[i + 1]);
                let z = snap(&f, z, TOUCH_RADIUS);
                if f(z).abs() <= ZERO_TOL {
                    zeros.push(z);
                }
            }
        }
    }
    zeros.sort_by(f64::total_cmp);
    zeros.dedup_by(|a, b| (*a - *b).abs() <= MERGE_TOL);
    scan.zeros = zeros;
    scan
}

/// Replaces `z` by its coarsest decimal rounding within `radius` at which
/// `|f|` is no larger, so that e.g. a root at exactly 0 is reported as 0
/// rather than as a bisection midpoint a few ulps of the bracket away.
fn snap(f: &impl Fn(f64) -> f64, z: f64, radius: f64) -> f64 {
    let fz = f(z).abs();
    for digits in 0..=12 {
        let scale = 10f64.powi(digits);
        let c = (z * scale).round() / scale;
        if (c - z).abs() <= radius && f(c).abs() <= fz {
            return c;
        }
    }
    z
}

fn bisect(f: &impl Fn(f64) -> f64, mut a: f64, mut b: f64, fa: f64) -> f64 {
    let sa = fa.signum();
    while b - a > ZERO_TOL {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        let fm = f(m);
        if fm == 0.0 {
            return m;
        }
        if fm.signum() == sa {
            a = m;
        } else {
            b = m;
        }
    }
    0.5 * (a + b)
}

fn golden_min(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> f64 {
    let ratio = 0.5 * (5f64.sqrt() - 1.0);
    let mut c = b - ratio * (b - a);
    let mut d = a + ratio * (b - a);
    let (mut fc, mut fd) = (f(c), f(d));
    while b - a > ZERO_TOL {
        if fc <= fd {
            b = d;
            d = c;
            fd = fc;
            c = b - ratio * (b - a);
            fc = f(c);
        } else {
            a = c;
            c = d;
            fc = fd;
            d = a + ratio * (b - a);
            fd = f(d);
        }
        if fc == 0.0 {
            return c;
        }
        if fd == 0.0 {
            return d;
        }
    }
    0.5 * (a + b)
}

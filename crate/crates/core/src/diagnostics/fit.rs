//! Minimization of the maximum of finitely many affine functions, the common
//! kernel of the constant fits.

/// `y = intercept + slope·x`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Line {
    pub slope: f64,
    pub intercept: f64,
}

impl Line {
    pub fn new(slope: f64, intercept: f64) -> Self {
        Self { slope, intercept }
    }

    pub fn at(&self, x: f64) -> f64 {
        self.intercept + self.slope * x
    }
}

/// `max_k line_k(x)`.
pub fn envelope(lines: &[Line], x: f64) -> f64 {
    lines.iter().map(|l| l.at(x)).fold(f64::NEG_INFINITY, f64::max)
}

fn crossing(a: &Line, b: &Line) -> f64 {
    (b.intercept - a.intercept) / (a.slope - b.slope)
}

/// Minimizes the upper envelope of `lines` over `x ≥ x_min`.
///
/// Returns the leftmost minimizer and the minimum, or `None` when the
/// envelope decreases without bound. Non-finite lines are ignored.
pub fn minimize_envelope(lines: &[Line], x_min: f64) -> Option<(f64, f64)> {
    let mut sorted: Vec<Line> = lines
        .iter()
        .copied()
        .filter(|l| l.slope.is_finite() && l.intercept.is_finite())
        .collect();
    if sorted.is_empty() {
        return None;
    }
    sorted.sort_by(|a, b| a.slope.total_cmp(&b.slope).then(a.intercept.total_cmp(&b.intercept)));
    // Keep the highest intercept per slope.
    let mut dedup: Vec<Line> = Vec::with_capacity(sorted.len());
    for l in sorted {
        if let Some(last) = dedup.last() {
            if last.slope == l.slope {
                dedup.pop();
            }
        }
        dedup.push(l);
    }
    // Upper hull with increasing slopes.
    let mut hull: Vec<Line> = Vec::with_capacity(dedup.len());
    for l in dedup {
        while hull.len() >= 2 {
            let a = hull[hull.len() - 2];
            let b = hull[hull.len() - 1];
            if crossing(&a, &l) <= crossing(&a, &b) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push(l);
    }
    let first_rising = hull.iter().position(|l| l.slope >= 0.0)?;
    let x_star = if first_rising == 0 {
        f64::NEG_INFINITY
    } else {
        crossing(&hull[first_rising - 1], &hull[first_rising])
    };
    let x = x_star.max(x_min);
    Some((x, envelope(lines, x)))
}

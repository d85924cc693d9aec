//! A unimodality score for empirical samples.
//!
//! `dip_statistic` computes, for each candidate mode location m, the
//! smallest band half-width d such that some convex curve passes through
//! the empirical CDF corridor `[F(x) - d, F(x) + d]` left of m and some
//! concave curve passes through it right of m, then minimizes over m. The
//! convex and concave pieces are not required to join continuously, which
//! drops one constraint of the classic formulation; the value here is
//! therefore a lower bound on the classic dip, with the same asymptotics:
//! it vanishes as O(1/n) for unimodal samples and stays O(1) for well
//! separated multimodal ones. A two-point equal-mass sample scores
//! exactly 0.25.
//!
//! Feasibility reduces to hull comparisons. With cumulative fractions
//! lo_i (just below x_i) and hi_i (at x_i), a convex curve fits the
//! corridor on a prefix iff for every j the lower convex hull of the
//! points (x_i, lo_i + d) passes at or above hi_j - d, so the prefix cost
//! is `max_j (hi_j - hull(x_j)) / 2`; the concave suffix case mirrors it.

/// Dip score of a sample, any order, O(n^2) after deduplication.
pub fn dip_statistic(sample: &[f64]) -> f64 {
    let mut xs: Vec<f64> = sample.iter().copied().filter(|v| v.is_finite()).collect();
    if xs.len() < 2 {
        return 0.0;
    }
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;

    // collapse ties into (value, lo, hi) corner pairs of the empirical CDF
    let mut pts: Vec<(f64, f64, f64)> = Vec::new();
    let mut seen = 0usize;
    let mut i = 0;
    while i < xs.len() {
        let mut j = i;
        while j < xs.len() && xs[j] == xs[i] {
            j += 1;
        }
        let lo = seen as f64 / n;
        seen = j;
        pts.push((xs[i], lo, seen as f64 / n));
        i = j;
    }
    if pts.len() == 1 {
        return 0.0;
    }

    let m = pts.len();
    // left_cost[k]: corridor half-width needed for a convex fit on 0..=k
    let mut left_cost = vec![0.0f64; m];
    for k in 0..m {
        left_cost[k] = convex_fit_cost(&pts[..=k]);
    }
    // right_cost[k]: concave fit on k..m, via the point reflection
    // (x, F) -> (-x, 1 - F) which swaps convex and concave
    let mut right_cost = vec![0.0f64; m];
    let reflected: Vec<(f64, f64, f64)> = pts
        .iter()
        .rev()
        .map(|&(x, lo, hi)| (-x, 1.0 - hi, 1.0 - lo))
        .collect();
    for k in 0..m {
        right_cost[m - 1 - k] = convex_fit_cost(&reflected[..=k]);
    }

    (0..m)
        .map(|k| left_cost[k].max(right_cost[k]))
        .fold(f64::INFINITY, f64::min)
}

/// Smallest d such that the lower convex hull of (x_i, lo_i) clears
/// hi_j - 2d at every j; equivalently half the largest gap by which a
/// step corner pokes above the hull of the lower corners.
fn convex_fit_cost(pts: &[(f64, f64, f64)]) -> f64 {
    // monotone-chain lower hull of the (x, lo) corners
    let mut hull: Vec<(f64, f64)> = Vec::with_capacity(pts.len());
    for &(x, lo, _) in pts {
        while hull.len() >= 2 {
            let (x1, y1) = hull[hull.len() - 2];
            let (x2, y2) = hull[hull.len() - 1];
            // pop while the middle point is at or above the chord
            if (x2 - x1) * (lo - y1) <= (x - x1) * (y2 - y1) {
                hull.pop();
            } else {
                break;
            }
        }
        hull.push((x, lo));
    }
    let mut worst = 0.0f64;
    let mut seg = 0usize;
    for &(x, _, hi) in pts {
        while seg + 1 < hull.len() && hull[seg + 1].0 <= x {
            seg += 1;
        }
        // hull[0].0 is the smallest sample value, so hull[seg].0 <= x
        let h = if hull[seg].0 == x {
            hull[seg].1
        } else {
            let (x1, y1) = hull[seg];
            let (x2, y2) = hull[seg + 1];
            y1 + (y2 - y1) * (x - x1) / (x2 - x1)
        };
        worst = worst.max(hi - h);
    }
    worst / 2.0
}

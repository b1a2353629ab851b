/// Euclidean projection of `v` onto the probability simplex
/// `{x : x >= 0, sum(x) = 1}` (sort-based, O(n log n)).
pub fn project_simplex(v: &[f64]) -> Vec<f64> {
    if v.is_empty() {
        return Vec::new();
    }
    let mut u = v.to_vec();
    u.sort_unstable_by(|a, b| b.total_cmp(a));
    let mut cumsum = 0.0;
    let mut theta = 0.0;
    for (i, &ui) in u.iter().enumerate() {
        cumsum += ui;
        let t = (cumsum - 1.0) / (i as f64 + 1.0);
        if ui - t > 0.0 {
            theta = t;
        } else {
            break;
        }
    }
    let mut x: Vec<f64> = v.iter().map(|&vi| (vi - theta).max(0.0)).collect();
    // absorb rounding drift so the sum is 1 to working precision
    let s: f64 = x.iter().sum();
    if s > 0.0 && (s - 1.0).abs() > 1e-15 {
        x.iter_mut().for_each(|xi| *xi /= s);
    }
    x
}

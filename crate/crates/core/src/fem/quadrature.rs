//! Fixed 12-point Gauss–Legendre rule on panels.

/// Positive nodes on [-1, 1] and their weights; the rule is symmetric.
const HALF_RULE: [(f64, f64); 6] = [
    (0.1252334085114689, 0.2491470458134027),
    (0.3678314989981802, 0.23349253653835464),
    (0.5873179542866175, 0.20316742672306565),
    (0.7699026741943047, 0.1600783285433461),
    (0.9041172563704748, 0.10693932599531888),
    (0.9815606342467192, 0.04717533638651202),
];

/// Nodes and weights of the 12-point rule mapped to `[lo, hi]`.
pub(crate) fn gauss_legendre_12(lo: f64, hi: f64) -> [(f64, f64); 12] {
    let mid = 0.5 * (lo + hi);
    let half = 0.5 * (hi - lo);
    let mut out = [(0.0, 0.0); 12];
    for (i, &(t, w)) in HALF_RULE.iter().enumerate() {
        out[2 * i] = (mid - half * t, half * w);
        out[2 * i + 1] = (mid + half * t, half * w);
    }
    out
}

/// Number of equal panels for an interval of length `len` carrying
/// oscillation up to frequency `omega`: at most half a cycle per panel.
pub(crate) fn panel_count(len: f64, omega: f64) -> usize {
    ((omega * len / std::f64::consts::PI).ceil() as usize).max(1)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn weights_sum_to_length() {
        let s: f64 = gauss_legendre_12(2.0, 5.0).iter().map(|p| p.1).sum();
        assert!((s - 3.0).abs() < 1e-14);
    }

    #[test]
    fn exact_for_degree_23() {
        let s: f64 = gauss_legendre_12(0.0, 1.0).iter().map(|&(x, w)| w * x.powi(23)).sum();
        assert!((s - 1.0 / 24.0).abs() < 1e-15);
    }

    #[test]
    fn panels_track_frequency() {
        assert_eq!(panel_count(1.0, 0.0), 1);
        assert_eq!(panel_count(10.0, 4.0 * std::f64::consts::PI), 40);
    }
}

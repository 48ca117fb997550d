//! Shared fixtures for the criterion benchmarks in `benches/`.

use dynnet::{simulate_dgp, DgpConfig, DgpId, TimeSeriesPanel};

/// A simulated DGP II panel (bivariate, `T = 1000`).
pub fn dgp_panel() -> TimeSeriesPanel {
    simulate_dgp(&DgpConfig::new(DgpId::II, 11))
        .expect("DGP II simulates")
        .panel
}

/// An `N`-series panel built by stacking independent DGP II paths.
pub fn wide_panel(n_pairs: usize) -> TimeSeriesPanel {
    let paths: Vec<_> = (0..n_pairs)
        .map(|i| simulate_dgp(&DgpConfig::new(DgpId::II, 100 + i as u64)).expect("DGP II simulates"))
        .collect();
    let t = paths[0].panel.len();
    let values = nalgebra::DMatrix::from_fn(t, 2 * n_pairs, |r, c| paths[c / 2].panel.values()[(r, c % 2)]);
    TimeSeriesPanel::from_matrix(values).expect("finite panel")
}

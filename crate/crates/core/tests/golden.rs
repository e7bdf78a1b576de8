mod common;

use bsreduce_core::pricers::{bs_vanilla, OptionKind};
use common::call_by_quadrature;

#[test]
fn quadrature_oracle_reproduces_textbook_value() {
    let q = call_by_quadrature(100.0, 100.0, 0.2, 0.05, 0.0, 1.0);
    assert!((q - 10.450584).abs() < 1e-6, "{q}");
}

#[test]
fn vanilla_matches_quadrature_oracle() {
    let golden = 10.450584;
    let v = bs_vanilla(100.0, 100.0, 0.2, 0.05, 0.0, 1.0, OptionKind::Call).unwrap();
    assert!((v - golden).abs() < 1e-6, "{v}");
    for &(s, k, vol, r, q, t) in &[
        (100.0, 80.0, 0.3, 0.02, 0.01, 0.5),
        (50.0, 70.0, 0.45, 0.07, 0.0, 2.0),
        (120.0, 100.0, 0.1, -0.01, 0.03, 3.0),
    ] {
        let closed = bs_vanilla(s, k, vol, r, q, t, OptionKind::Call).unwrap();
        let quad = call_by_quadrature(s, k, vol, r, q, t);
        assert!(
            (closed - quad).abs() < 1e-9 * closed.max(1.0),
            "{closed} vs {quad}"
        );
    }
}
